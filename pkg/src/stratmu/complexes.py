"""Bounded complexes of free modules over a (quotient) polynomial ring.

Cohomological degrees run from ``lo`` up to ``hi`` (usually 0).  The map
out of degree p is a PolyMatrix of shape rank(p+1) x rank(p) acting on
column vectors.  Homology is measured at the origin: kernels come from
global syzygies, lengths from local standard bases.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

from .gb_engine import INFINITE, Ideal, column_to_vec, local_subquotient_length, module_kernel
from .poly_core import GLOBAL, PolyMatrix, PolyRing, Polynomial, parse_poly


class ComplexError(ValueError):
    pass


class InfiniteHomology(ArithmeticError):
    """Some homology module has infinite length at the origin."""


def _is_zero_mod(ring: PolyRing, M: PolyMatrix) -> bool:
    nz = M.nonzero()
    if not nz:
        return True
    if not ring.quotient:
        return False
    Q = Ideal(ring.ambient(), ring.quotient)
    return all(Q.contains(ring.ambient()(p)) for p in nz.values())


@dataclass
class FreeComplex:
    ring: PolyRing
    lo: int
    ranks: list[int]
    maps: dict[int, PolyMatrix]
    meta: dict = field(default_factory=dict)
    check: bool = True

    def __post_init__(self):
        hi = self.hi
        for p in range(self.lo, hi):
            M = self.maps.get(p)
            r0, r1 = self.rank(p), self.rank(p + 1)
            if M is None:
                M = PolyMatrix(self.ring, r1, r0)
                self.maps[p] = M
            if (M.rows, M.cols) != (r1, r0):
                raise ComplexError(f"map out of degree {p} has shape {M.rows}x{M.cols}, expected {r1}x{r0}")
        for p in list(self.maps):
            if not (self.lo <= p < hi):
                raise ComplexError(f"map out of degree {p} outside the degree range")
        if self.check:
            for p in range(self.lo, hi - 1):
                if not _is_zero_mod(self.ring, self.maps[p + 1] * self.maps[p]):
                    raise ComplexError(f"d∘d != 0 at degree {p}")

    @property
    def hi(self) -> int:
        return self.lo + len(self.ranks) - 1

    def degrees(self) -> range:
        return range(self.lo, self.hi + 1)

    def rank(self, p: int) -> int:
        if self.lo <= p <= self.hi:
            return self.ranks[p - self.lo]
        return 0

    def d(self, p: int) -> PolyMatrix:
        """Map out of degree p (zero matrix at the ends)."""
        if self.lo <= p < self.hi:
            return self.maps[p]
        return PolyMatrix(self.ring, self.rank(p + 1), self.rank(p))

    def rank_vector(self) -> tuple[int, ...]:
        """Ranks listed from degree 0 (hi) down to lo, as printed in the examples."""
        return tuple(reversed(self.ranks))

    def is_zero(self) -> bool:
        return all(r == 0 for r in self.ranks)

    def map_ring(self, ring: PolyRing, fn: Callable[[Polynomial], Polynomial]) -> "FreeComplex":
        maps = {p: M.map_entries(fn, ring=ring) for p, M in self.maps.items()}
        return FreeComplex(ring, self.lo, list(self.ranks), maps, dict(self.meta))

    def over(self, ring: PolyRing, check: bool = True) -> "FreeComplex":
        """Same matrices read in another ring on the same variables (e.g. adding a quotient)."""
        maps = {p: M.map_entries(ring, ring=ring) for p, M in self.maps.items()}
        return FreeComplex(ring, self.lo, list(self.ranks), maps, dict(self.meta), check=check)

    def trimmed(self) -> "FreeComplex":
        """Drop zero-rank degrees at both ends (keeping degree 0 bookkeeping)."""
        lo, ranks = self.lo, list(self.ranks)
        while len(ranks) > 1 and ranks[0] == 0 and lo < 0:
            ranks.pop(0)
            lo += 1
        maps = {p: M for p, M in self.maps.items() if lo <= p < lo + len(ranks) - 1}
        return FreeComplex(self.ring, lo, ranks, maps, dict(self.meta), check=False)

    def __repr__(self):
        return f"FreeComplex(degrees {self.lo}..{self.hi}, ranks {self.rank_vector()})"


def zero_complex(ring: PolyRing) -> FreeComplex:
    return FreeComplex(ring, 0, [0], {})


def two_term(ring: PolyRing, entry, lo: int = -1) -> FreeComplex:
    """R --(entry)--> R in degrees lo, lo+1."""
    return FreeComplex(ring, lo, [1, 1], {lo: PolyMatrix(ring, 1, 1, [[entry]])})


def tensor_complexes(C: FreeComplex, D: FreeComplex) -> FreeComplex:
    """Total complex; d(c ⊗ e) = dc ⊗ e + (-1)^p c ⊗ de for c in degree p."""
    if C.ring != D.ring:
        raise ComplexError("tensor of complexes over different rings")
    ring = C.ring
    lo, hi = C.lo + D.lo, C.hi + D.hi
    # basis of total degree n: blocks (p, q) with p ascending, then (i, j) i-major
    offsets: dict = {}
    ranks = []
    for n in range(lo, hi + 1):
        off = 0
        for p in range(C.lo, C.hi + 1):
            q = n - p
            if D.lo <= q <= D.hi:
                offsets[(p, q)] = off
                off += C.rank(p) * D.rank(q)
        ranks.append(off)
    maps = {}
    for n in range(lo, hi):
        ent: dict = {}
        for p in range(C.lo, C.hi + 1):
            q = n - p
            if not (D.lo <= q <= D.hi):
                continue
            src = offsets[(p, q)]
            rq = D.rank(q)
            if p + 1 <= C.hi:
                tgt = offsets[(p + 1, q)]
                for (a, b), v in C.d(p).nonzero().items():
                    for j in range(rq):
                        k = (tgt + a * rq + j, src + b * rq + j)
                        ent[k] = ent[k] + v if k in ent else v
            if q + 1 <= D.hi:
                tgt = offsets[(p, q + 1)]
                rq1 = D.rank(q + 1)
                sign = -1 if p % 2 else 1
                for (a, b), v in D.d(q).nonzero().items():
                    for i in range(C.rank(p)):
                        k = (tgt + i * rq1 + a, src + i * rq + b)
                        w = v * sign
                        ent[k] = ent[k] + w if k in ent else w
        maps[n] = PolyMatrix(ring, ranks[n + 1 - lo], ranks[n - lo], ent)
    return FreeComplex(ring, lo, ranks, maps)


def tensor_all(ring: PolyRing, complexes) -> FreeComplex:
    out = None
    for C in complexes:
        out = C if out is None else tensor_complexes(out, C)
    if out is None:
        return FreeComplex(ring, 0, [1], {})
    return out


# ------------------------------------------------------------------ pruning

def _entry_degree(p: Polynomial) -> int:
    return p.total_degree()


def prune_units(C: FreeComplex, allowed: Callable[[Polynomial], bool] | None = None) -> FreeComplex:
    """Gaussian elimination of local-unit entries until none remain.

    Pivot: smallest total degree, then (source degree, row, column).  A
    constant pivot u gives d' = D - b c / u; a non-constant unit pivot
    gives u D - b c, i.e. the same map rescaled by a unit, which is an
    isomorphic complex over the local ring.  ``allowed`` restricts the
    admissible pivots.
    """
    ring = C.ring
    lo = C.lo
    ranks = list(C.ranks)
    # work with dict-of-entries per map for cheap row/column deletion
    mats = {p: C.d(p).nonzero() for p in range(lo, C.hi)}
    eliminations = 0
    while True:
        best = None
        for p in range(lo, lo + len(ranks) - 1):
            for (i, j), v in mats[p].items():
                if v.is_local_unit() and (allowed is None or allowed(v)):
                    k = (_entry_degree(v), p, i, j)
                    if best is None or k < best[0]:
                        best = (k, p, i, j, v)
        if best is None:
            break
        _, p, i, j, u = best
        M = mats[p]
        col_j = {r: v for (r, c), v in M.items() if c == j and r != i}
        row_i = {c: v for (r, c), v in M.items() if r == i and c != j}
        const = u.is_constant()
        uinv = 1 / u.constant_term() if const else None
        new: dict = {}
        for (r, c), v in M.items():
            if r == i or c == j:
                continue
            new[(r, c)] = v if const else v * u
        for r, b in col_j.items():
            for c, a in row_i.items():
                t = b * a
                t = t * uinv if const else t
                key = (r, c)
                w = new[key] - t if key in new else -t
                if w.is_zero():
                    new.pop(key, None)
                else:
                    new[key] = w
        mats[p] = {(r - (r > i), c - (c > j)): v for (r, c), v in new.items()}
        # incoming map: drop row j; outgoing map: drop column i
        if p - 1 in mats:
            mats[p - 1] = {(r - (r > j), c): v for (r, c), v in mats[p - 1].items() if r != j}
        if p + 1 in mats:
            mats[p + 1] = {(r, c - (c > i)): v for (r, c), v in mats[p + 1].items() if c != i}
        ranks[p - lo] -= 1
        ranks[p + 1 - lo] -= 1
        eliminations += 1
    maps = {p: PolyMatrix(ring, ranks[p + 1 - lo], ranks[p - lo], ent) for p, ent in mats.items()}
    meta = dict(C.meta)
    meta["pruned_eliminations"] = meta.get("pruned_eliminations", 0) + eliminations
    return FreeComplex(ring, lo, ranks, maps, meta)


# ------------------------------------------------------------------ homology

def _columns(M: PolyMatrix) -> list[dict]:
    return [column_to_vec(M.col(j)) for j in range(M.cols)]


def homology_length(C: FreeComplex, p: int):
    """Length at the origin of H^p(C); INFINITE allowed."""
    r = C.rank(p)
    if r == 0:
        return 0
    ring = C.ring
    gring = ring.with_order(GLOBAL)
    out = C.d(p)
    if out.rows == 0 or _is_zero_mod(ring, out):
        K = [column_to_vec([gring.one() if i == k else gring.zero() for i in range(r)]) for k in range(r)]
    else:
        K = module_kernel(out.map_entries(gring, ring=gring)).vectors()
    inc = C.d(p - 1)
    B = _columns(inc) if inc.cols else []
    return local_subquotient_length(K, B, r, gring)


def homology_lengths(C: FreeComplex) -> list[tuple[int, object]]:
    return [(p, homology_length(C, p)) for p in C.degrees()]


def euler_characteristic(C: FreeComplex, lengths=None) -> int:
    """Σ (-1)^p length H^p; raises InfiniteHomology for non-isolated degeneracy."""
    lengths = homology_lengths(C) if lengths is None else lengths
    total = 0
    for p, ell in lengths:
        if ell is INFINITE:
            raise InfiniteHomology(f"homology in degree {p} has infinite length (non-isolated singularity)")
        total += ell if p % 2 == 0 else -ell
    return total


# ------------------------------------------------------------------ serialization

def serialize_complex(C: FreeComplex) -> str:
    """Text block: ring, degree range, ranks, then each map row-major."""
    ring = C.ring
    lines = ["complex"]
    lines.append("ring: " + ", ".join(ring.variables))
    lines.append(f"order: {ring.order}")
    if ring.quotient:
        lines.append("quotient: " + "; ".join(str(q) for q in ring.quotient))
    lines.append(f"degrees: {C.lo}..{C.hi}")
    lines.append("ranks: " + " ".join(str(r) for r in C.ranks))
    for k in sorted(C.meta):
        v = C.meta[k]
        if isinstance(v, (int, str)) and not isinstance(v, bool):
            lines.append(f"meta {k}: {v}")
    for p in range(C.lo, C.hi):
        M = C.d(p)
        lines.append(f"map {p} -> {p + 1}: {M.rows} x {M.cols}")
        for i in range(M.rows):
            lines.append("  " + " | ".join(str(M[i, j]) for j in range(M.cols)))
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_complex(text: str) -> FreeComplex:
    lines = [ln.rstrip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln.strip() and not ln.strip().startswith("#")]
    if not lines or lines[0].strip() != "complex":
        raise ComplexError("complex block must start with 'complex'")
    pos = 1

    def field_(name):
        nonlocal pos
        if pos >= len(lines) or not lines[pos].startswith(name + ":"):
            raise ComplexError(f"line {pos + 1}: expected '{name}:'")
        v = lines[pos].split(":", 1)[1].strip()
        pos += 1
        return v

    variables = [v.strip() for v in field_("ring").split(",") if v.strip()]
    order = field_("order")
    quotient = []
    base = PolyRing(variables, order)
    if pos < len(lines) and lines[pos].startswith("quotient:"):
        quotient = [parse_poly(base, q) for q in field_("quotient").split(";")]
    ring = base.with_quotient(quotient) if quotient else base
    m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", field_("degrees"))
    if not m:
        raise ComplexError("bad degree range")
    lo, hi = int(m.group(1)), int(m.group(2))
    ranks = [int(r) for r in field_("ranks").split()]
    if len(ranks) != hi - lo + 1:
        raise ComplexError("rank count does not match degree range")
    meta = {}
    while pos < len(lines) and lines[pos].startswith("meta "):
        k, v = lines[pos][5:].split(":", 1)
        v = v.strip()
        meta[k.strip()] = int(v) if re.fullmatch(r"-?\d+", v) else v
        pos += 1
    maps = {}
    for p in range(lo, hi):
        m = re.fullmatch(r"map (-?\d+) -> (-?\d+): (\d+) x (\d+)", lines[pos].strip()) if pos < len(lines) else None
        if not m or int(m.group(1)) != p:
            raise ComplexError(f"line {pos + 1}: expected header for map out of degree {p}")
        rows, cols = int(m.group(3)), int(m.group(4))
        pos += 1
        grid = []
        for _ in range(rows):
            cells = [c.strip() for c in lines[pos].split("|")] if cols else []
            if len(cells) != cols:
                raise ComplexError(f"line {pos + 1}: expected {cols} entries")
            grid.append([parse_poly(base, c) for c in cells])
            pos += 1
        maps[p] = PolyMatrix(ring, rows, cols, [[ring(v) for v in r] for r in grid])
    if pos >= len(lines) or lines[pos].strip() != "end":
        raise ComplexError("complex block must end with 'end'")
    return FreeComplex(ring, lo, ranks, maps, meta)
