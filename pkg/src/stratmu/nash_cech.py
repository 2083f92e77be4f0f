"""Nash modification of a hypersurface V(g) with an isolated singularity
and χ of derived pushforwards of Koszul ⊗ ENC data along it.

For a hypersurface the Nash modification is the blow-up of the Jacobian
ideal J = (∂g) in O_X.  A summand x^α ⊗ e_I of ENC([ω; ∇g]) is, upstairs,
the line bundle O(-1-α_last) (α_last: exponent of the ∇g row slot) and
degree 0 / Koszul summands are untwisted.  Upstairs ∇g generates O(1), so
the upstairs complex is the pullback of the base complex up to these
twists, and

    χ(Rν_* C~) = χ_{O_X}(C) - Σ_summands (-1)^deg P_J(twist),

where P_J(e) is the Hilbert–Samuel polynomial e ↦ length O_X/J^e.  The
polynomial is fitted on a window of e-values starting at the truncation
degree D and re-fitted at 2D; equality of the resulting corrections is the
stored stability certificate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .complexes import FreeComplex, euler_characteristic, homology_lengths, prune_units, tensor_complexes
from .gb_engine import EngineError, INFINITE, Ideal, colength_at_origin, local_staircase, saturate_principal
from .kosz_enc import enc_basis, enc_complex, has_unit_maximal_minor, koszul_complex
from .poly_core import LOCAL, PolyMatrix, PolyRing, Polynomial, ring_map_apply


class UnsupportedInstance(EngineError):
    pass


# ------------------------------------------------------------------ atlas

@dataclass
class NashChart:
    index: int
    ring: PolyRing               # x variables followed by s_j (j != index)
    ideal: Ideal                 # graph relations, saturated by ∂_index g
    frame: PolyMatrix            # n x (n-1): columns e_j - s_j e_i
    fiber_dimension: int         # dimension of the fiber over 0 (-1: empty)


@dataclass
class NashChartAtlas:
    g: Polynomial
    ring: PolyRing
    smooth_at_origin: bool
    charts: list[NashChart]
    homogeneous_ring: PolyRing | None = None
    # (i, j) -> numerator N_ij over Q[x, S]; T_ij = N_ij / S_i
    transitions: dict = field(default_factory=dict)

    @property
    def retained(self) -> list[NashChart]:
        return [c for c in self.charts if c.fiber_dimension >= 0]

    def cocycle_ok(self) -> bool:
        """N_ij N_jk == S_j N_ik on all triples (so T_ij T_jk = T_ik)."""
        if not self.transitions:
            return True
        S = self.homogeneous_ring.gens()[self.ring.nvars:]
        idx = sorted({i for i, _ in self.transitions})
        for i in idx:
            for j in idx:
                for k in idx:
                    lhs = self.transitions[(i, j)] * self.transitions[(j, k)]
                    rhs = self.transitions[(i, k)].scale(S[j])
                    if not (lhs - rhs).is_zero():
                        return False
        return True

    def transitions_invertible(self) -> bool:
        """N_ij N_ji == S_i S_j · Id: each T_ij is invertible where S_i S_j != 0."""
        if not self.transitions:
            return True
        S = self.homogeneous_ring.gens()[self.ring.nvars:]
        n1 = self.ring.nvars - 1
        for (i, j), N in self.transitions.items():
            I = PolyMatrix.identity(self.homogeneous_ring, n1).scale(S[i] * S[j])
            if not (N * self.transitions[(j, i)] - I).is_zero():
                return False
        return True

    def overlaps_consistent(self) -> bool:
        """Chart ideals agree on overlaps: compared in chart i coordinates after
        inverting s_j."""
        for a in self.charts:
            for b in self.charts:
                if a.index == b.index:
                    continue
                if not _overlap_agree(self, a, b):
                    return False
        return True

    def describe(self) -> list[str]:
        out = [f"g = {self.g}", f"smooth at origin: {self.smooth_at_origin}"]
        for c in self.charts:
            out.append(f"chart {c.index + 1}: {len(c.ideal.generators)} generators, "
                       f"fiber dimension over 0: {c.fiber_dimension}")
        return out


def _s_names(ring: PolyRing) -> list[str]:
    taken = set(ring.variables)
    names = [f"s_{i + 1}" for i in range(ring.nvars)]
    if taken & set(names):
        names = [f"nash_s_{i + 1}" for i in range(ring.nvars)]
    return names


def _chart(ring: PolyRing, g: Polynomial, i: int, snames: list[str]) -> NashChart:
    n = ring.nvars
    others = [j for j in range(n) if j != i]
    cring = ring.extend([snames[j] for j in others])
    emb = cring.gens()[:n]
    grad = [ring_map_apply(ring, cring, emb, d) for d in g.gradient()]
    s = {j: cring.var(snames[j]) for j in others}
    gens = [ring_map_apply(ring, cring, emb, g)] + [s[j] * grad[i] - grad[j] for j in others]
    I = saturate_principal(Ideal(cring, gens), grad[i])
    frame = {}
    for col, j in enumerate(others):
        frame[(j, col)] = cring.one()
        frame[(i, col)] = -s[j]
    F = PolyMatrix(cring, n, n - 1, frame)
    fiber = I + cring.gens()[:n]
    dim = -1 if fiber.is_unit() else fiber.dimension()
    return NashChart(i, cring, Ideal(cring, I.basis()), F, dim)


def _to_chart(atlas: NashChartAtlas, src: NashChart, dst: NashChart, p: Polynomial) -> Polynomial:
    """Rewrite a chart-src polynomial in chart-dst coordinates times a power of
    s^{dst}_{src} (clearing the denominator)."""
    n = atlas.ring.nvars
    i, j = dst.index, src.index
    # in chart dst (S_i = 1): S_m = s_m; chart src coordinate s'_m = S_m / S_j
    dvars = dst.ring.gens()
    sd = {m: dvars[n + k] for k, m in enumerate([m for m in range(n) if m != i])}
    sd[i] = dst.ring.one()
    sj = sd[j]
    # bound on the s-degree of p
    deg = max((sum(e[n:]) for e in p.terms), default=0)
    acc = dst.ring.zero()
    others = [m for m in range(n) if m != j]
    for e, c in p.terms.items():
        t = dst.ring.const(c)
        for k in range(n):
            if e[k]:
                t = t * dvars[k] ** e[k]
        sdeg = 0
        for k, m in enumerate(others):
            a = e[n + k]
            if a:
                t = t * sd[m] ** a
                sdeg += a
        acc = acc + t * sj ** (deg - sdeg)
    return acc


def _overlap_agree(atlas: NashChartAtlas, a: NashChart, b: NashChart) -> bool:
    n = atlas.ring.nvars
    k = [m for m in range(n) if m != a.index].index(b.index)
    sb = a.ring.gens()[n + k]
    mine = saturate_principal(a.ideal, sb)
    theirs = saturate_principal(Ideal(a.ring, [_to_chart(atlas, b, a, p) for p in b.ideal.generators]), sb)
    return mine.contains_ideal(theirs) and theirs.contains_ideal(mine)


def _transition_numerators(ring: PolyRing, snames: list[str]) -> tuple[PolyRing, dict]:
    """N_ij over Q[x, S]: frame_j = frame_i · N_ij / S_i (homogeneous frames
    v^{(i)}_m = S_i e_m - S_m e_i, m != i)."""
    n = ring.nvars
    H = ring.extend([v.upper() if v.upper() not in ring.variables else v + "_h" for v in snames])
    S = H.gens()[n:]
    out = {}
    for i in range(n):
        for j in range(n):
            rows = [m for m in range(n) if m != i]
            cols = [m for m in range(n) if m != j]
            ent = {}
            for c, m in enumerate(cols):
                # w = S_j e_m - S_m e_j ; coordinates at r != i in the v^{(i)} basis are w_r
                w = {m: S[j], j: -S[m]}
                for r_idx, r in enumerate(rows):
                    if r in w:
                        ent[(r_idx, c)] = w[r]
            out[(i, j)] = PolyMatrix(H, n - 1, n - 1, ent)
    return H, out


def nash_graph_charts(g: Polynomial, check: bool = True) -> NashChartAtlas:
    """Atlas of the closure of the Gauss-map graph of V(g)."""
    ring = g.ring.ambient()
    g = ring(g)
    if g.is_zero():
        raise UnsupportedInstance("g = 0 does not define a hypersurface")
    grad = g.gradient()
    smooth = any(d.is_local_unit() for d in grad)
    if not smooth:
        sing = Ideal(ring, [g] + grad)
        if colength_at_origin(Ideal(ring.with_order(LOCAL), sing.generators)) is INFINITE:
            raise UnsupportedInstance("singular locus of the hypersurface is positive-dimensional at 0")
    snames = _s_names(ring)
    charts = [_chart(ring, g, i, snames) for i in range(ring.nvars) if not grad[i].is_zero()]
    H, trans = _transition_numerators(ring, snames)
    atlas = NashChartAtlas(g, ring, smooth, charts, H, trans)
    if check and not (atlas.cocycle_ok() and atlas.transitions_invertible()):
        raise EngineError("Nash chart transitions fail the cocycle identity")
    return atlas


# ------------------------------------------------------------------ Hilbert–Samuel data

def _interpolate(points: list[tuple[int, int]]):
    """Lagrange interpolation, returned as a callable with exact Fractions."""
    def P(e):
        total = Fraction(0)
        for a, (xa, ya) in enumerate(points):
            term = Fraction(ya)
            for b, (xb, _) in enumerate(points):
                if a != b:
                    term *= Fraction(e - xb, xa - xb)
            total += term
        return total
    return P


@dataclass
class HilbertSamuelData:
    """Hilbert–Samuel function of J on O_X = Q[x]_0/(g), fitted to a polynomial."""

    g: Polynomial
    jacobian: list[Polynomial]
    dim: int
    maximal: bool
    _cache: dict = field(default_factory=dict, repr=False)

    def length(self, e: int) -> int:
        if e <= 0:
            return 0
        if e not in self._cache:
            self._cache[e] = self._length(e)
        return self._cache[e]

    def _length(self, e: int) -> int:
        ring = self.g.ring
        n = ring.nvars
        if self.maximal:
            # tangent cone: Hilbert function of Q[x]/(in g)
            q = self.g.low_degree()
            return sum(comb(d + n - 1, n - 1) - (comb(d - q + n - 1, n - 1) if d >= q else 0) for d in range(e))
        lring = ring.with_order(LOCAL)
        gens = [lring(self.g)]
        power = [lring.one()]
        for _ in range(e):
            power = _minimal_products(lring, power, [lring(h) for h in self.jacobian], self.g)
        val = colength_at_origin(Ideal(lring, gens + power))
        if val is INFINITE:
            raise UnsupportedInstance("Jacobian ideal is not primary to the maximal ideal")
        return val

    def polynomial(self, start: int):
        pts = [(e, self.length(e)) for e in range(start, start + self.dim + 1)]
        return _interpolate(pts)


def _minimal_products(ring, power, gens, g):
    prods = {}
    for a in power:
        for b in gens:
            p = a * b
            prods[str(p)] = p
    I = Ideal(ring.with_order("dp"), [ring.with_order("dp")(g)] + [ring.with_order("dp")(p) for p in prods.values()])
    return [ring(p) for p in I.basis() if not (p - ring.with_order("dp")(g)).is_zero()]


def hilbert_samuel_data(g: Polynomial) -> HilbertSamuelData:
    ring = g.ring.ambient()
    g = ring(g)
    grad = [d for d in g.gradient() if not d.is_zero()]
    lring = ring.with_order(LOCAL)
    J = Ideal(lring, [lring(g)] + [lring(d) for d in grad])
    if local_staircase(J) is INFINITE:
        raise UnsupportedInstance("singular locus of the hypersurface is positive-dimensional at 0")
    # J = m locally iff the linear parts of the partials span all variables
    lin = [d.homogeneous_part(1) for d in grad]
    maximal = _rank_linear(lin, ring.nvars) == ring.nvars
    return HilbertSamuelData(g, grad, ring.nvars - 1, maximal)


def _rank_linear(polys, n) -> int:
    rows = []
    for p in polys:
        row = [Fraction(0)] * n
        for e, c in p.terms.items():
            row[e.index(1)] = Fraction(int(c.numerator), int(c.denominator))
        rows.append(row)
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col] / rows[r][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


def summand_twists(k: int, m: int, n: int) -> list[tuple[int, int, int]]:
    """(degree, twist, multiplicity) for Kosz(k entries) ⊗ ENC((m+1) x n)."""
    rows = m + 1
    enc = [(0, 0, 1)]
    for p in range(1, n - rows + 2):
        for a, _ in _enc_labels(rows, n, p):
            enc.append((-p, -1 - a[-1], 1))
    out: dict = {}
    for q in range(k + 1):
        for deg, tw, mult in enc:
            key = (deg - q, tw)
            out[key] = out.get(key, 0) + mult * comb(k, q)
    return sorted((d, t, c) for (d, t), c in out.items())


def _enc_labels(k, n, p):
    return enc_basis(k, n, p)


def correction_from(P, twists) -> Fraction:
    total = Fraction(0)
    for deg, tw, mult in twists:
        v = P(tw) * mult
        total += v if deg % 2 == 0 else -v
    return total


@dataclass
class TruncationCertificate:
    start: int
    corrections: list[tuple[int, int]]   # (window start, correction)
    stable: bool

    def as_dict(self) -> dict:
        return {"start": self.start, "corrections": [list(c) for c in self.corrections], "stable": self.stable}


def _degree_bound(g: Polynomial) -> int:
    return max([g.total_degree()] + [d.total_degree() for d in g.gradient() if not d.is_zero()])


def exceptional_correction_certified(g: Polynomial, k: int, m: int, truncation: int | None = None):
    """Correction term and its truncation-stability certificate.

    Windows start at D (default 2·degree bound) and are doubled up to four
    times until two consecutive windows give the same correction.
    """
    ring = g.ring.ambient()
    g = ring(g)
    n = ring.nvars
    if any(d.is_local_unit() for d in g.gradient()):
        return 0, TruncationCertificate(0, [], True)
    twists = summand_twists(k, m, n)
    hs = hilbert_samuel_data(g)
    D = truncation or max(2, 2 * _degree_bound(g))
    vals = []
    for _ in range(5):
        c = correction_from(hs.polynomial(D), twists)
        if c.denominator != 1:
            raise UnsupportedInstance(f"non-integral correction {c} at truncation {D}")
        vals.append((D, int(c)))
        if len(vals) >= 2 and vals[-1][1] == vals[-2][1]:
            return vals[-1][1], TruncationCertificate(vals[0][0], vals, True)
        D *= 2
    raise UnsupportedInstance(f"correction did not stabilize: {vals}")


def exceptional_correction(g: Polynomial, k: int, m: int) -> int:
    return exceptional_correction_certified(g, k, m)[0]


# ------------------------------------------------------------------ pushforward χ

@dataclass
class PushforwardResult:
    chi: int
    base_chi: int
    correction: int
    certificate: TruncationCertificate
    base_lengths: list
    ranks: tuple
    route: str

    def as_dict(self) -> dict:
        return {
            "chi": self.chi,
            "base_chi": self.base_chi,
            "correction": self.correction,
            "certificate": self.certificate.as_dict(),
            "base_lengths": [[p, str(v)] for p, v in self.base_lengths],
            "ranks": list(self.ranks),
            "route": self.route,
        }


def base_complex(g: Polynomial, f_list, omega: PolyMatrix, ambient: bool = False) -> FreeComplex:
    """Kosz(f) ⊗ ENC([ω; ∇g]) over O_X (or over the ambient ring tensored with Kosz(g))."""
    amb = g.ring.ambient()
    g = amb(g)
    ring = amb if ambient else amb.with_quotient([g])
    grad = PolyMatrix(ring, 1, amb.nvars, [[ring(d) for d in g.gradient()]])
    A = PolyMatrix.stack(omega.map_entries(ring, ring=ring), grad)
    C = enc_complex(ring, A)
    fs = [ring(f) for f in f_list]
    if ambient:
        fs = [ring(g)] + fs
    if fs:
        C = tensor_complexes(koszul_complex(ring, fs), C)
    return C


def nash_pushforward_chi(atlas: NashChartAtlas, f_list, omega: PolyMatrix,
                         truncation: int | None = None, ambient: bool = False) -> PushforwardResult:
    """χ(Rν_*(Kosz(ν*f) ⊗ ENC(ν*ω))) for the hypersurface of ``atlas``."""
    g = atlas.g
    if not atlas.smooth_at_origin and not atlas.retained:
        raise EngineError("no Nash chart meets the fiber over the origin")
    C = prune_units(base_complex(g, f_list, omega, ambient=ambient))
    lengths = homology_lengths(C)
    base = euler_characteristic(C, lengths)
    corr, cert = exceptional_correction_certified(g, len(list(f_list)), omega.rows, truncation)
    chi = base - corr
    if chi < 0:
        raise EngineError(f"pushforward χ = {chi} is negative; the data is degenerate for this closure")
    route = "smooth" if atlas.smooth_at_origin else "nash"
    return PushforwardResult(chi, base, corr, cert, lengths, C.rank_vector(), route)


def smooth_route_chi(g: Polynomial, f_list, omega: PolyMatrix) -> int:
    """enc_stacked_reduce route: frame row ∇g, no exceptional fiber."""
    amb = g.ring.ambient()
    if not has_unit_maximal_minor(PolyMatrix(amb, 1, amb.nvars, [amb(g).gradient()])):
        raise UnsupportedInstance("closure is not smooth at the origin")
    return nash_pushforward_chi(NashChartAtlas(amb(g), amb, True, []), f_list, omega).chi
