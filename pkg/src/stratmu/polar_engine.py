"""Stratified Milnor numbers from relative polar curves and Morsifications.

For a single function μ(α; f) is the thimble number: the number of
points of Γ_α(f, l) on a Milnor fiber of f minus the number on a Milnor
fiber of l, i.e. I(Γ, f) - I(Γ, l) with I(Γ, h) = colength of Γ + (h) at
0.  (The first count is the number of Morse points of l on the Milnor
fiber of f, hence is often written mult_l.)  Maps f = (f_1..f_k) are
sliced summand by summand.  The
Morsification engine counts the critical points of f + t·l on V^α that
tend to the origin as t -> 0.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from .gb_engine import (
    EngineError,
    INFINITE,
    Ideal,
    colength_at_origin,
    saturate_generic,
)
from .poly_core import GLOBAL, LOCAL, PolyMatrix, PolyRing, Polynomial, all_minors, jacobian, ring_map_apply


class GenericityError(EngineError):
    """A random draw failed its a-posteriori checks."""


class NonIsolatedError(EngineError):
    """Some colength that must be finite is infinite."""


# ------------------------------------------------------------------ stratifications

@dataclass
class Stratum:
    name: str
    ideal: Ideal
    dim: int
    smooth: bool = False
    hypersurface: bool = False
    origin: bool = False


@dataclass
class Stratification:
    ring: PolyRing
    strata: list[Stratum]

    def __post_init__(self):
        names = [s.name for s in self.strata]
        if len(set(names)) != len(names):
            raise ValueError("duplicate stratum names")

    @property
    def n(self) -> int:
        return self.ring.nvars

    def get(self, name: str) -> Stratum:
        for s in self.strata:
            if s.name == name:
                return s
        raise KeyError(f"unknown stratum {name!r}")

    def smaller(self, alpha: str) -> list[Stratum]:
        """Strata of smaller dimension inside the closure of alpha."""
        a = self.get(alpha)
        return [s for s in self.strata if s.dim < a.dim and s.ideal.contains_ideal(a.ideal)]

    def validate(self) -> list[str]:
        """Checks from the data model; returns a list of problems (empty if fine)."""
        problems = []
        if not self.strata:
            problems.append("stratification has no strata")
        for s in self.strata:
            loc = Ideal(self.ring.with_order(LOCAL), s.ideal.generators).local_dimension()
            if loc != s.dim:
                problems.append(f"stratum {s.name}: declared dim {s.dim}, closure has local dim {loc}")
            if s.origin:
                m = Ideal(self.ring, self.ring.gens())
                if s.dim != 0 or not s.ideal.equals(m):
                    problems.append(f"origin stratum {s.name} must be the maximal ideal with dim 0")
        return problems

    @staticmethod
    def from_closures(ring: PolyRing, items) -> "Stratification":
        """items: (name, generators, dim) triples; flags detected."""
        strata = []
        for name, gens, dim in items:
            I = Ideal(ring, [ring(g) for g in gens])
            origin = dim == 0 and I.equals(Ideal(ring, ring.gens()))
            smooth, hyper = closure_flags(ring, I, dim)
            strata.append(Stratum(name, I, dim, smooth, hyper, origin))
        return Stratification(ring, strata)


def closure_flags(ring: PolyRing, I: Ideal, dim: int) -> tuple[bool, bool]:
    """(smooth at the origin, hypersurface) for a closure ideal."""
    gens = list(I.generators)
    c = ring.nvars - dim
    if c == 0:
        return True, False
    J = jacobian(gens, ring) if gens else PolyMatrix(ring, 0, ring.nvars)
    smooth = c <= min(J.rows, J.cols) and any(m.is_local_unit() for m in all_minors(J, c))
    return smooth, (c == 1 and len(gens) == 1)


# ------------------------------------------------------------------ genericity

@dataclass
class GenericityCertificate:
    seed: int
    draws_used: int = 0
    checks: list = field(default_factory=list)
    height: int = 10

    def as_dict(self) -> dict:
        return {"seed": self.seed, "draws_used": self.draws_used, "height": self.height,
                "checks": [[n, bool(p)] for n, p in self.checks]}


MAX_DRAWS = 8
START_HEIGHT = 10


def _draw(ring: PolyRing, how_many: int, rng: random.Random, H: int) -> list[Polynomial]:
    out = []
    n = ring.nvars
    for _ in range(how_many):
        while True:
            coeffs = [rng.randint(-H, H) for _ in range(n)]
            if any(coeffs):
                break
        p = ring.zero()
        for c, v in zip(coeffs, ring.gens()):
            p = p + v * c
        out.append(p)
    return out


def choose_generic_forms(n_or_ring, how_many: int, seed: int, task: str = "") -> tuple[list[Polynomial], GenericityCertificate]:
    """First draw of ``how_many`` integer linear forms with coefficients in [-10, 10]."""
    ring = n_or_ring if isinstance(n_or_ring, PolyRing) else PolyRing([f"x{i + 1}" for i in range(n_or_ring)])
    rng = random.Random(f"{seed}:{task}:0")
    forms = _draw(ring, how_many, rng, START_HEIGHT)
    return forms, GenericityCertificate(seed, 1, [], START_HEIGHT)


def with_generic_forms(ring: PolyRing, how_many: int, seed: int, task: str,
                       attempt: Callable[[list[Polynomial], GenericityCertificate], object]):
    """Run ``attempt`` on fresh draws until it stops raising GenericityError.

    Up to 8 draws; the coefficient height H starts at 10 and doubles every
    two failures.  Returns (result, certificate).
    """
    cert = GenericityCertificate(seed)
    last = None
    for draw in range(MAX_DRAWS):
        H = START_HEIGHT * 2 ** (draw // 2)
        rng = random.Random(f"{seed}:{task}:{draw}")
        forms = _draw(ring, how_many, rng, H)
        cert.draws_used = draw + 1
        cert.height = H
        try:
            return attempt(forms, cert), cert
        except GenericityError as e:
            cert.checks.append((f"draw {draw + 1}: {e}", False))
            last = e
    raise GenericityError(f"genericity exhausted after {MAX_DRAWS} draws (likely non-isolated input): {last}")


# ------------------------------------------------------------------ slicing

@dataclass
class SliceContext:
    """Germ data after cutting with extra equations; linear-graph cuts are
    solved for a variable and substituted away."""

    ring: PolyRing
    closure: list[Polynomial]
    codim: int
    avoid: list[Ideal]
    subst: Callable[[Polynomial], Polynomial]


def _solvable_variable(p: Polynomial):
    """Index i with p = c·x_i + q, q free of x_i, c constant nonzero."""
    for i in range(p.ring.nvars):
        if p.degree_in(i) != 1:
            continue
        lin = [e for e in p.terms if e[i] == 1]
        if len(lin) == 1 and sum(lin[0]) == 1:
            return i
    return None


def slice_context(strat: Stratification, alpha: str, cuts: list[Polynomial]) -> SliceContext:
    ring = strat.ring
    a = strat.get(alpha)
    closure = [ring(g) for g in a.ideal.generators]
    avoid = _avoid_ideals(strat, alpha)
    cur_ring = ring
    maps: list = []

    def apply(p):
        for src, tgt, imgs in maps:
            p = ring_map_apply(src, tgt, imgs, p)
        return p

    residual = []
    pending = [ring(c) for c in cuts]
    while pending:
        c = apply(pending.pop(0))
        if c.is_zero():
            continue
        i = _solvable_variable(c)
        if i is None:
            residual.append(c)
            continue
        coef = c.terms[tuple(1 if j == i else 0 for j in range(cur_ring.nvars))]
        rest = c - cur_ring.var(i) * coef
        names = [v for j, v in enumerate(cur_ring.variables) if j != i]
        if not names:
            raise NonIsolatedError("slicing consumed every variable")
        tgt = PolyRing(names, cur_ring.order)
        k = 0
        imgs = []
        for j in range(cur_ring.nvars):
            if j == i:
                imgs.append(None)
            else:
                imgs.append(tgt.gens()[k])
                k += 1
        sol = ring_map_apply(cur_ring, tgt, [g if g is not None else tgt.zero() for g in imgs], rest) * (-1 / coef)
        imgs[i] = sol
        maps.append((cur_ring, tgt, imgs))
        residual = [ring_map_apply(cur_ring, tgt, imgs, r) for r in residual]
        cur_ring = tgt
    closure = [q for q in (apply(g) for g in closure) if not q.is_zero()] + [r for r in residual if not r.is_zero()]
    avoid = [Ideal(cur_ring, [apply(g) for g in J.generators]) for J in avoid]
    # eliminated cuts lower ring and slice dimension alike; residual cuts add codimension
    codim = strat.n - a.dim + len([r for r in residual if not r.is_zero()])
    return SliceContext(cur_ring, closure, codim, avoid, apply)


def _avoid_ideals(strat: Stratification, alpha: str) -> list[Ideal]:
    """Ideals whose zero sets must be removed: Sing(X_α) and smaller strata."""
    ring = strat.ring
    a = strat.get(alpha)
    out = [s.ideal for s in strat.smaller(alpha)]
    c = strat.n - a.dim
    if c > 0 and not a.smooth:
        J = jacobian(list(a.ideal.generators), ring)
        out.append(Ideal(ring, list(a.ideal.generators) + all_minors(J, c)))
    return out


def _singular_ideal(ctx: SliceContext) -> Ideal | None:
    if ctx.codim == 0 or not ctx.closure:
        return None
    J = jacobian(ctx.closure, ctx.ring)
    if ctx.codim > min(J.rows, J.cols):
        return Ideal(ctx.ring, [ctx.ring.one()])
    return Ideal(ctx.ring, ctx.closure + all_minors(J, ctx.codim))


def _remove(I: Ideal, ctx: SliceContext, rng: random.Random) -> Ideal:
    """Saturate by every avoid ideal (and the slice's own singular locus)."""
    ring = I.ring
    avoid = list(ctx.avoid)
    sing = _singular_ideal(ctx)
    if sing is not None:
        avoid.append(sing)
    # drop ideals whose zero set is contained in another's (J ⊇ J')
    kept: list[Ideal] = []
    for J in avoid:
        J = Ideal(ring, [ring(g) for g in J.generators])
        J = Ideal(ring, J.basis(GLOBAL))
        if J.is_unit():
            continue
        if any(J.contains_ideal(K) for K in kept):
            continue
        kept = [K for K in kept if not K.contains_ideal(J)] + [J]
    S = I
    for J in kept:
        h = ring.zero()
        for g in J.generators:
            h = h + g * rng.randint(1, 97)
        S = saturate_generic(S, J, h)
    return S


# ------------------------------------------------------------------ polar curves

@dataclass
class PolarCurve:
    stratum: str
    ideal: Ideal
    f_used: Polynomial
    l_used: Polynomial
    certified: bool
    local_dim: int


def _polar_from_context(ctx: SliceContext, f: Polynomial, l: Polynomial, name: str, rng: random.Random) -> PolarCurve:
    ring = ctx.ring
    rows = list(ctx.closure)
    M = PolyMatrix.stack(jacobian(rows, ring), jacobian([f, l], ring)) if rows else jacobian([f, l], ring)
    size = ctx.codim + 2
    if size > min(M.rows, M.cols):
        minors = []
    else:
        minors = all_minors(M, size)
    P = Ideal(ring, rows + minors)
    S = _remove(P, ctx, rng)
    # the germ's dimension is bounded by the global one, which is cheaper
    ldim = S.dimension()
    if ldim > 1:
        ldim = Ideal(ring.with_order(LOCAL), S.generators).local_dimension()
    if ldim > 1:
        raise GenericityError(f"polar locus of {name} has dimension {ldim} at 0")
    return PolarCurve(name, S, f, l, True, ldim)


def polar_ideal(strat: Stratification, alpha: str, f: Polynomial, l: Polynomial, seed: int = 0) -> PolarCurve:
    """Γ_α(f, l): closure + (c+2)-minors of [Jac(closure); df; dl], with
    Sing(X_α) and smaller strata saturated away."""
    a = strat.get(alpha)
    if a.dim < 1:
        raise ValueError("polar curves need a stratum of dimension >= 1")
    ctx = slice_context(strat, alpha, [])
    rng = random.Random(f"{seed}:sat:{alpha}")
    curve = _polar_from_context(ctx, ctx.subst(f), ctx.subst(l), alpha, rng)
    if curve.local_dim not in (-1, 1):
        raise GenericityError(f"polar curve of {alpha} has local dimension {curve.local_dim}")
    return curve


def multiplicity_along(curve: PolarCurve, h: Polynomial):
    """colength at 0 of Γ + (h)."""
    if curve.local_dim < 0:
        return 0
    ring = curve.ideal.ring
    h = ring(h)
    val = colength_at_origin(Ideal(ring.with_order(LOCAL), list(curve.ideal.generators) + [h]))
    if val is INFINITE:
        curve.certified = False
        raise GenericityError(f"infinite multiplicity of {h} along the polar curve of {curve.stratum}")
    return val


# ------------------------------------------------------------------ μ by polar curves

@dataclass
class PolarSummand:
    j: int
    meet_f: int     # I(Γ, f_j): points of Γ on a Milnor fiber of f_j
    meet_l: int     # I(Γ, l_j): points of Γ on a Milnor fiber of l_j
    value: int
    cuts: list[str]


@dataclass
class PolarResult:
    stratum: str
    value: int
    summands: list[PolarSummand]
    forms: list[Polynomial]
    certificate: GenericityCertificate


def _check_origin(f_list):
    for f in f_list:
        if not f.constant_term() == 0:
            raise ValueError(f"map component {f} does not vanish at the origin")


def cut_polynomials(f_list, l_list, j: int) -> list[Polynomial]:
    """Equations f_1..f_{j-1} and l_{j+1}..l_k (j is 1-based)."""
    k = len(f_list)
    return list(f_list[: j - 1]) + list(l_list[j:k])


def mu_polar(strat: Stratification, alpha: str, f_list, seed: int = 0, forms=None) -> PolarResult:
    """μ(α; f) as a sum of thimble numbers of sliced single functions."""
    ring = strat.ring
    f_list = [ring(f) for f in f_list]
    _check_origin(f_list)
    k = len(f_list)
    a = strat.get(alpha)
    if a.dim < k:
        return PolarResult(alpha, 0, [], [], GenericityCertificate(seed))

    def attempt(ls, cert):
        summands = []
        for j in range(1, k + 1):
            cuts = cut_polynomials(f_list, ls, j)
            ctx = slice_context(strat, alpha, cuts)
            fj, lj = ctx.subst(f_list[j - 1]), ctx.subst(ls[j - 1])
            rng = random.Random(f"{seed}:sat:{alpha}:{j}")
            curve = _polar_from_context(ctx, fj, lj, alpha, rng)
            if curve.local_dim not in (-1, 1):
                raise GenericityError(f"j={j}: polar curve has local dimension {curve.local_dim}")
            mf = multiplicity_along(curve, fj)
            ml = multiplicity_along(curve, lj)
            cert.checks.append((f"{alpha} j={j}: polar curve dim<=1 and finite multiplicities", True))
            if mf - ml < 0:
                raise GenericityError(f"j={j}: negative thimble number {mf - ml}")
            summands.append(PolarSummand(j, mf, ml, mf - ml, [str(c) for c in cuts]))
        return summands

    if forms is not None:
        cert = GenericityCertificate(seed, 0, [("user-supplied forms", True)])
        summands = attempt([ring(l) for l in forms], cert)
        used = [ring(l) for l in forms]
    else:
        holder = {}

        def run(ls, cert):
            holder["forms"] = ls
            return attempt(ls, cert)

        summands, cert = with_generic_forms(ring, k, seed, f"polar:{alpha}", run)
        used = holder["forms"]
    return PolarResult(alpha, sum(s.value for s in summands), summands, used, cert)


# ------------------------------------------------------------------ Morsification

@dataclass
class MorseResult:
    stratum: str
    value: int
    mode: str
    detail: dict


def _critical_ideal(ctx: SliceContext, F: Polynomial, ring: PolyRing, nx: int) -> Ideal:
    """closure + (c+1)-minors of [Jac_x(closure); d_x F] in ``ring`` (x first)."""
    closure = [ring(ring_map_apply(ctx.ring, ring, ring.gens()[:nx], g)) for g in ctx.closure]
    def jac_x(ps):
        return PolyMatrix(ring, len(ps), nx, [[p.diff(i) for i in range(nx)] for p in ps])
    M = PolyMatrix.stack(jac_x(closure), jac_x([F])) if closure else jac_x([F])
    size = ctx.codim + 1
    minors = all_minors(M, size) if size <= min(M.rows, M.cols) else []
    return Ideal(ring, closure + minors)


def morsification_count(strat: Stratification, alpha: str, f: Polynomial, l: Polynomial,
                        t=None, seed: int = 0, cuts=()) -> MorseResult:
    """Critical points of f + t·l on V^α (after slicing by ``cuts``) near 0.

    t = None: t is a parameter; the critical curve in (x, t) space is
    saturated by t and the branches through (0, 0) are counted by the
    colength of curve + (t) at the origin.  Rational t: global count at t,
    checked against t/2.
    """
    ctx = slice_context(strat, alpha, list(cuts))
    f, l = ctx.subst(strat.ring(f)), ctx.subst(strat.ring(l))
    rng = random.Random(f"{seed}:morse:{alpha}")
    if t is None:
        ring = ctx.ring.extend(["_t" if "_t" not in ctx.ring.variables else "_tt"])
        nx = ctx.ring.nvars
        emb = ring.gens()[:nx]
        tv = ring.gens()[nx]
        F = ring_map_apply(ctx.ring, ring, emb, f) + tv * ring_map_apply(ctx.ring, ring, emb, l)
        C = _critical_ideal(ctx, F, ring, nx)
        lifted = SliceContext(ring, [ring_map_apply(ctx.ring, ring, emb, g) for g in ctx.closure], ctx.codim,
                              [Ideal(ring, [ring_map_apply(ctx.ring, ring, emb, g) for g in J.generators]) for J in ctx.avoid],
                              lambda p: p)
        S = _remove_lifted(C, lifted, ctx, rng, nx)
        S = saturate_generic(S, Ideal(ring, [tv]), tv)
        val = colength_at_origin(Ideal(ring.with_order(LOCAL), list(S.generators) + [tv]))
        if val is INFINITE:
            raise NonIsolatedError(f"critical locus of the Morsification on {alpha} is not finite over t")
        return MorseResult(alpha, val, "family", {})
    t = _to_fraction(t)
    vals = []
    for tt in (t, t / 2):
        F = f + l * ctx.ring.const(tt)
        C = _critical_ideal(ctx, F, ctx.ring, ctx.ring.nvars)
        S = _remove(C, ctx, rng)
        v = S.global_colength()
        if v is INFINITE:
            raise NonIsolatedError(f"Morsification at t={tt} has infinitely many critical points on {alpha}")
        vals.append(v)
    if vals[0] != vals[1]:
        raise EngineError(f"t = {t} too large: counts {vals[0]} (t) and {vals[1]} (t/2) differ; retry with smaller t")
    return MorseResult(alpha, vals[0], "fixed", {"t": str(t)})


def _remove_lifted(C: Ideal, lifted: SliceContext, ctx: SliceContext, rng, nx: int) -> Ideal:
    """Saturation in (x, t) space by ideals that only involve x."""
    ring = C.ring
    sing = _singular_ideal(ctx)
    avoid = list(lifted.avoid)
    if sing is not None:
        avoid.append(Ideal(ring, [ring_map_apply(ctx.ring, ring, ring.gens()[:nx], g) for g in sing.generators]))
    S = C
    for J in avoid:
        if J.is_unit():
            continue
        h = ring.zero()
        for g in J.generators:
            h = h + g * rng.randint(1, 97)
        S = saturate_generic(S, J, h)
    return S


def _to_fraction(t):
    from fractions import Fraction
    from gmpy2 import mpq
    if isinstance(t, str):
        t = Fraction(t)
    t = Fraction(t)
    if t == 0:
        raise ValueError("Morsification parameter t must be nonzero")
    return mpq(t.numerator, t.denominator)


def mu_morse(strat: Stratification, alpha: str, f_list, forms, t=None, seed: int = 0) -> tuple[int, list[MorseResult]]:
    """Morsification count summed over the same slices as mu_polar."""
    ring = strat.ring
    f_list = [ring(f) for f in f_list]
    k = len(f_list)
    if strat.get(alpha).dim < k:
        return 0, []
    res = []
    for j in range(1, k + 1):
        r = morsification_count(strat, alpha, f_list[j - 1], forms[j - 1], t, seed, cut_polynomials(f_list, forms, j))
        res.append(r)
    return sum(r.value for r in res), res
