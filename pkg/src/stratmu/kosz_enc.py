"""Koszul and Eagon–Northcott complexes, functoriality maps, stacked
reduction and parameterized generic complexes.

Basis conventions (fixed once, so matrices are reproducible):
  * ∧^p G: subsets of {0..n-1} in colex order;
  * S_d over k slots: exponent vectors in descending lex order (x_1^d first);
  * ENC terms: monomial-major, subset-minor.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

from .complexes import ComplexError, FreeComplex, prune_units, tensor_all, tensor_complexes
from .gb_engine import Ideal
from .poly_core import PolyMatrix, PolyRing, determinant, jacobian, ring_map_apply


@lru_cache(maxsize=None)
def exterior_basis(n: int, p: int) -> tuple[tuple[int, ...], ...]:
    """p-subsets of range(n) in colex order."""
    if p < 0 or p > n:
        return ()
    return tuple(sorted(combinations(range(n), p), key=lambda s: tuple(reversed(s))))


@lru_cache(maxsize=None)
def symmetric_basis(k: int, d: int) -> tuple[tuple[int, ...], ...]:
    """Exponent vectors of total degree d in k slots, descending lex."""
    if d < 0 or k == 0:
        return ((),) if (k == 0 and d == 0) else ()
    out = []

    def rec(prefix, left, slots):
        if slots == 1:
            out.append(tuple(prefix) + (left,))
            return
        for a in range(left, -1, -1):
            rec(prefix + [a], left - a, slots - 1)

    rec([], d, k)
    return tuple(out)


def _index(basis) -> dict:
    return {b: i for i, b in enumerate(basis)}


def koszul_complex(ring: PolyRing, entries) -> FreeComplex:
    """Kosz(φ): ∧^p G in degree -p, e_I ↦ Σ_t (-1)^(t+1) φ_{i_t} e_{I∖i_t} (t 1-based)."""
    phi = [ring(e) for e in entries]
    n = len(phi)
    ranks = [len(exterior_basis(n, p)) for p in range(n, -1, -1)]
    maps = {}
    for p in range(n, 0, -1):
        src = exterior_basis(n, p)
        tgt = _index(exterior_basis(n, p - 1))
        ent = {}
        for j, I in enumerate(src):
            for t, i in enumerate(I):
                if phi[i].is_zero():
                    continue
                J = I[:t] + I[t + 1:]
                ent[(tgt[J], j)] = phi[i] if t % 2 == 0 else -phi[i]
        maps[-p] = PolyMatrix(ring, len(tgt), len(src), ent)
    return FreeComplex(ring, -n, ranks, maps, {"kind": "koszul"})


def enc_complex(ring: PolyRing, A: PolyMatrix) -> FreeComplex:
    """ENC(A) for a k x n matrix A (k <= n).

    Degree 0: R.  Degree -p (p = 1..n-k+1): S_{p-1} ⊗ ∧^{k+p-1} G.
    d(1 ⊗ e_I) = det A_{[k], I};  d(x^α ⊗ e_I) = Σ_{α_i>0} x^α/x_i ⊗ A_i⌟e_I.
    The verbatim formula squares to zero: contractions anticommute.
    """
    k, n = A.rows, A.cols
    if k > n:
        raise ComplexError(f"ENC needs k <= n, got {k}x{n}")
    if A.ring != ring:
        A = A.map_entries(ring, ring=ring)
    top = n - k + 1
    bases = {0: [None]}
    for p in range(1, top + 1):
        bases[-p] = [(a, I) for a in symmetric_basis(k, p - 1) for I in exterior_basis(n, k + p - 1)]
    ranks = [len(bases[p]) for p in range(-top, 1)]
    grid = A.to_lists()
    maps = {}
    if top >= 1:
        ent = {}
        for j, (_, I) in enumerate(bases[-1]):
            ent[(0, j)] = determinant(A.submatrix(list(range(k)), list(I)))
        maps[-1] = PolyMatrix(ring, 1, len(bases[-1]), ent)
    for p in range(2, top + 1):
        tgt = _index(bases[-p + 1])
        ent: dict = {}
        for j, (a, I) in enumerate(bases[-p]):
            for i in range(k):
                if a[i] == 0:
                    continue
                b = a[:i] + (a[i] - 1,) + a[i + 1:]
                for t, c in enumerate(I):
                    v = grid[i][c]
                    if v.is_zero():
                        continue
                    key = (tgt[(b, I[:t] + I[t + 1:])], j)
                    w = v if t % 2 == 0 else -v
                    if key in ent:
                        w = ent[key] + w
                    ent[key] = w
        maps[-p] = PolyMatrix(ring, len(tgt), len(bases[-p]), ent)
    return FreeComplex(ring, -top, ranks, maps, {"kind": "enc"})


def enc_basis(k: int, n: int, p: int):
    """Basis labels of ENC degree -p for a k x n matrix (p >= 1)."""
    return [(a, I) for a in symmetric_basis(k, p - 1) for I in exterior_basis(n, k + p - 1)]


# ------------------------------------------------------------------ functoriality

def wedge_power_matrix(psi: PolyMatrix, p: int) -> PolyMatrix:
    """∧^p ψ for ψ: G' -> G (n x n' matrix): p-minors, rows/cols colex."""
    ring = psi.ring
    rows = exterior_basis(psi.rows, p)
    cols = exterior_basis(psi.cols, p)
    if p == 0:
        return PolyMatrix.identity(ring, 1)
    ent = {}
    for j, I in enumerate(cols):
        for i, J in enumerate(rows):
            ent[(i, j)] = determinant(psi.submatrix(list(J), list(I)))
    return PolyMatrix(ring, len(rows), len(cols), ent)


def koszul_functoriality_maps(psi: PolyMatrix) -> dict[int, PolyMatrix]:
    """Chain map Kosz(φψ) -> Kosz(φ), degree -p component ∧^p ψ."""
    return {-p: wedge_power_matrix(psi, p) for p in range(0, min(psi.rows, psi.cols) + 1)}


def enc_functoriality_maps(k: int, psi: PolyMatrix) -> dict[int, PolyMatrix]:
    """Chain map ENC(Aψ) -> ENC(A) for A k x n, ψ n x n' : id on S ⊗ ∧ψ."""
    ring = psi.ring
    n, n2 = psi.rows, psi.cols
    out = {0: PolyMatrix.identity(ring, 1)}
    for p in range(1, n2 - k + 2):
        W = wedge_power_matrix(psi, k + p - 1)
        mons = symmetric_basis(k, p - 1)
        rI = len(exterior_basis(n, k + p - 1))
        cI = len(exterior_basis(n2, k + p - 1))
        ent = {}
        for m in range(len(mons)):
            for (i, j), v in W.nonzero().items():
                ent[(m * rI + i, m * cI + j)] = v
        out[-p] = PolyMatrix(ring, len(mons) * rI, len(mons) * cI, ent)
    return out


def is_chain_map(source: FreeComplex, target: FreeComplex, maps: dict[int, PolyMatrix]) -> bool:
    """d_target ∘ F_p == F_{p+1} ∘ d_source for every p."""
    ring = source.ring
    for p in range(min(source.lo, target.lo), max(source.hi, target.hi)):
        Fp = maps.get(p, PolyMatrix(ring, target.rank(p), source.rank(p)))
        Fq = maps.get(p + 1, PolyMatrix(ring, target.rank(p + 1), source.rank(p + 1)))
        if (Fp.rows, Fp.cols) != (target.rank(p), source.rank(p)):
            return False
        if not (target.d(p) * Fp - Fq * source.d(p)).is_zero():
            return False
    return True


# ------------------------------------------------------------------ stacked reduction

def has_unit_maximal_minor(phi: PolyMatrix) -> bool:
    if phi.rows == 0:
        return True
    if phi.rows > phi.cols:
        return False
    for cols in combinations(range(phi.cols), phi.rows):
        if determinant(phi.submatrix(list(range(phi.rows)), list(cols))).is_local_unit():
            return True
    return False


def enc_stacked_reduce(ring: PolyRing, psi: PolyMatrix, phi: PolyMatrix) -> FreeComplex:
    """prune_units(ENC([psi; phi])), phi a frame at the origin."""
    if not has_unit_maximal_minor(phi):
        raise ComplexError("frame rows are degenerate at the origin (no unit maximal minor)")
    A = PolyMatrix.stack(psi.map_entries(ring, ring=ring), phi.map_entries(ring, ring=ring))
    return prune_units(enc_complex(ring, A))


# ------------------------------------------------------------------ generic complexes

@dataclass
class PrepComplex:
    """Generic complex over O_X[c, a] and the constant χ-correction κ.

    χ of the instance equals χ(substitute(complex)) - correction.  For a
    smooth closure the correction is 0; for a singular hypersurface it is
    the contribution of the exceptional fiber (see nash_cech).
    """

    complex: FreeComplex
    correction: int
    base_ring: PolyRing
    c_names: list[str]
    a_names: list[list[str]]
    kind: str

    def substitute(self, f_list, omega: PolyMatrix, prune: bool = True) -> FreeComplex:
        """Set c_i = f_i and a_{i,j} = omega[i, j]; result over base_ring."""
        ring = self.complex.ring
        base = self.base_ring
        images = []
        subs = {c: base(f) for c, f in zip(self.c_names, f_list)}
        if len(f_list) != len(self.c_names):
            raise ComplexError(f"expected {len(self.c_names)} Koszul entries, got {len(f_list)}")
        if omega.rows != len(self.a_names) or (self.a_names and omega.cols != len(self.a_names[0])):
            raise ComplexError("ENC data has the wrong shape for this generic complex")
        for i, row in enumerate(self.a_names):
            for j, name in enumerate(row):
                subs[name] = base(omega[i, j])
        for v in ring.variables:
            images.append(subs[v] if v in subs else base.var(v))
        C = self.complex.map_ring(base, lambda p: ring_map_apply(ring, base, images, p))
        return prune_units(C) if prune else C


def prep_from_complex(C: FreeComplex) -> PrepComplex:
    """Rebuild a PrepComplex from a (parsed) generic complex with prep metadata."""
    if C.meta.get("kind") != "prep":
        raise ComplexError("complex is not a generic (prep) complex")
    k, m = int(C.meta["k"]), int(C.meta["m"])
    ring = C.ring
    cs = [f"c_{i + 1}" for i in range(k)]
    base_vars = [v for v in ring.variables if not (v in cs or re.fullmatch(r"a_\d+_\d+", v))]
    a = [[f"a_{i + 1}_{j + 1}" for j in range(len(base_vars))] for i in range(m)]
    missing = [x for x in cs + [y for r in a for y in r] if x not in ring.variables]
    if missing:
        raise ComplexError(f"generic complex lacks parameters {', '.join(missing)}")
    amb = PolyRing(base_vars, ring.order)
    images = [amb.var(v) if v in base_vars else amb.zero() for v in ring.variables]
    quotient = [ring_map_apply(ring.ambient(), amb, images, q) for q in ring.quotient] if ring.quotient else []
    base = amb.with_quotient(quotient) if quotient else amb
    return PrepComplex(C, int(C.meta.get("correction", 0)), base, cs, a, str(C.meta.get("closure", "")))


def _closure_frame(X: Ideal) -> tuple[str, PolyMatrix]:
    """Rows spanning the conormal data of the closure: ∇g, or Jac of a smooth CI."""
    ring = X.ring.ambient()
    gens = [ring(g) for g in X.generators]
    if not gens:
        return "ambient", PolyMatrix(ring, 0, ring.nvars)
    J = jacobian(gens, ring)
    if has_unit_maximal_minor(J):
        return "smooth", J
    if len(gens) == 1:
        return "hypersurface", J
    raise ComplexError("unsupported closure: singular and not a hypersurface")


def param_names(ring: PolyRing, k: int, m: int) -> tuple[list[str], list[list[str]]]:
    taken = set(ring.variables)
    cs = [f"c_{i + 1}" for i in range(k)]
    a = [[f"a_{i + 1}_{j + 1}" for j in range(ring.nvars)] for i in range(m)]
    for name in cs + [x for r in a for x in r]:
        if name in taken:
            raise ComplexError(f"parameter name {name} clashes with a ring variable")
    return cs, a


def prep_generic_complex(X: Ideal, k: int, m: int, prune: bool = True) -> PrepComplex:
    """Kosz(c) ⊗ ENC([a; frame rows]) over O_X[c, a], plus the χ-correction.

    Pruning only pivots on entries free of parameters, so that any later
    substitution keeps the pivots units.
    """
    base_amb = X.ring.ambient()
    kind, frame = _closure_frame(X)
    base = base_amb.with_quotient(list(X.generators)) if X.generators else base_amb
    cs, a = param_names(base_amb, k, m)
    flat = [x for r in a for x in r]
    ring = base.extend(cs + flat)
    nb = base.nvars
    A_rows = [[ring.var(name) for name in row] for row in a]
    fr = frame.map_entries(lambda p: ring_map_apply(base_amb, ring, ring.gens()[:nb], p), ring=ring)
    A = PolyMatrix.stack(PolyMatrix(ring, m, nb, A_rows) if m else PolyMatrix(ring, 0, nb), fr)
    if A.rows > A.cols:
        raise ComplexError("too many ENC rows for the ambient dimension")
    C = enc_complex(ring, A)
    if k:
        C = tensor_complexes(tensor_all(ring, [koszul_complex(ring, [ring.var(c)]) for c in cs]), C)
    if prune:
        pset = set(range(nb, ring.nvars))
        C = prune_units(C, allowed=lambda p: not (p.variables_used() & pset))
    correction = 0
    if kind == "hypersurface":
        from .nash_cech import exceptional_correction
        correction = exceptional_correction(X.generators[0], k, m)
    C.meta.update({"kind": "prep", "closure": kind, "k": k, "m": m, "correction": correction})
    return PrepComplex(C, correction, base, cs, a, kind)
