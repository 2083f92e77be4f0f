"""Gröbner bases, local standard bases, syzygies and colengths.

Everything runs on one representation: a vector of R^r is a dict mapping a
term ``(component, e_1, ..., e_n)`` to an ``mpq`` coefficient.  Ideals are
the rank-1 case (component 0).  A :class:`TermOrder` turns terms into sort
keys; global orders go through Buchberger, local (negative degree) orders
through Mora's normal form with ecart.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from gmpy2 import mpq

from .poly_core import GLOBAL, LOCAL, PolyMatrix, PolyRing, Polynomial


class EngineError(RuntimeError):
    pass


class _Infinite:
    """Distinguished colength value for positive-dimensional quotients."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "infinite"

    __str__ = __repr__

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __sub__(self, other):
        if other is self:
            raise EngineError("infinite minus infinite")
        return self

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("infinite")

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __le__(self, other):
        return other is self


INFINITE = _Infinite()


def is_infinite(x) -> bool:
    return x is INFINITE


# ------------------------------------------------------------------ orders

class TermOrder:
    """Monomial order on module terms.

    base: "dp" (grevlex) or "ds" (negative degree revlex).
    weights: optional weight vectors compared before the base order
             (global only; used for elimination).
    module: "TOP", "POT" or ("block", r): components < r dominate, TOP inside.
    """

    def __init__(self, nvars: int, base: str = GLOBAL, weights: Sequence[Sequence[int]] = (), module="TOP"):
        if base not in (GLOBAL, LOCAL):
            raise EngineError(f"unknown base order {base!r}")
        if weights and base != GLOBAL:
            raise EngineError("weighted orders are only supported for global bases")
        self.nvars = nvars
        self.base = base
        self.weights = tuple(tuple(w) for w in weights)
        self.module = module
        self.is_local = base == LOCAL
        self._cache: dict = {}
        self._neg: dict = {}

    def _compute(self, t):
        e = t[1:]
        d = sum(e)
        rev = tuple(-a for a in reversed(e))
        core = ((d,) if not self.is_local else (-d,)) + rev
        if self.weights:
            core = tuple(sum(w[i] * e[i] for i in range(self.nvars)) for w in self.weights) + core
        c = t[0]
        m = self.module
        if m == "TOP":
            return core + (-c,)
        if m == "POT":
            return (-c,) + core
        _, r = m
        return (1 if c < r else 0,) + core + (-c,)

    def key(self, t):
        k = self._cache.get(t)
        if k is None:
            k = self._compute(t)
            self._cache[t] = k
        return k

    def negkey(self, t):
        k = self._neg.get(t)
        if k is None:
            k = tuple(-a for a in self.key(t))
            self._neg[t] = k
        return k

    def lead(self, v: dict):
        return max(v, key=self.key)


# ------------------------------------------------------------------ term helpers

def _divides(a, b) -> bool:
    """Term a divides term b (same component, exponentwise <=)."""
    if a[0] != b[0]:
        return False
    for x, y in zip(a[1:], b[1:]):
        if x > y:
            return False
    return True


def _tdiv(b, a):
    return (0,) + tuple(y - x for x, y in zip(a[1:], b[1:]))


def _tmul(m, t):
    """Monomial m (component slot ignored) times term t."""
    return (t[0],) + tuple(x + y for x, y in zip(m[1:], t[1:]))


def _lcm(a, b):
    return (a[0],) + tuple(max(x, y) for x, y in zip(a[1:], b[1:]))


def _tdeg(t) -> int:
    return sum(t[1:])


def _mask(t) -> int:
    m = 0
    for i, a in enumerate(t[1:]):
        if a:
            m |= 1 << i
    return m


def _coprime(a, b) -> bool:
    return all(not (x and y) for x, y in zip(a[1:], b[1:]))


def _maxdeg(v: dict) -> int:
    return max(_tdeg(t) for t in v)


def _axpy(acc: dict, c, m, g: dict):
    """acc -= c * m * g, m a monomial term."""
    for t, a in g.items():
        nt = (t[0],) + tuple(x + y for x, y in zip(m[1:], t[1:]))
        v = acc.get(nt)
        if v is None:
            acc[nt] = -c * a
        else:
            v = v - c * a
            if v:
                acc[nt] = v
            else:
                del acc[nt]


@dataclass
class _Elem:
    vec: dict
    lt: tuple
    sugar: int
    ecart: int = 0
    mask: int = 0

    @staticmethod
    def make(vec: dict, order: TermOrder, sugar: int | None = None) -> "_Elem":
        lt = order.lead(vec)
        c = vec[lt]
        if c != 1:
            inv = 1 / c
            vec = {t: a * inv for t, a in vec.items()}
        md = _maxdeg(vec)
        return _Elem(vec, lt, md if sugar is None else max(sugar, md), md - _tdeg(lt), _mask(lt))


class _Divisors:
    """Leading terms indexed by component with a bitmask prefilter."""

    def __init__(self):
        self.by_comp: dict = {}

    def add(self, el: _Elem):
        self.by_comp.setdefault(el.lt[0], []).append(el)

    def find(self, t, mask):
        for el in self.by_comp.get(t[0], ()):
            if el.mask & ~mask:
                continue
            if _divides(el.lt, t):
                return el
        return None

    def find_all(self, t, mask):
        out = []
        for el in self.by_comp.get(t[0], ()):
            if el.mask & ~mask:
                continue
            if _divides(el.lt, t):
                out.append(el)
        return out


def _reduce_full(v: dict, divs: _Divisors, order: TermOrder, tail: bool = True) -> dict:
    """Normal form for global orders (top and, optionally, tail reduction)."""
    f = dict(v)
    rem: dict = {}
    heap = [(order.negkey(t), t) for t in f]
    heapq.heapify(heap)
    seen = set(f)
    while heap:
        _, t = heapq.heappop(heap)
        seen.discard(t)
        c = f.get(t)
        if c is None:
            continue
        g = divs.find(t, _mask(t))
        if g is None:
            rem[t] = c
            del f[t]
            if not tail:
                rem.update(f)
                return rem
            continue
        m = _tdiv(t, g.lt)
        for gt, a in g.vec.items():
            nt = (gt[0],) + tuple(x + y for x, y in zip(m[1:], gt[1:]))
            w = f.get(nt)
            if w is None:
                f[nt] = -c * a
                if nt not in seen:
                    seen.add(nt)
                    heapq.heappush(heap, (order.negkey(nt), nt))
            else:
                w = w - c * a
                if w:
                    f[nt] = w
                else:
                    del f[nt]
    return rem


def _nf_mora(h: dict, T: list, order: TermOrder, guard: int) -> dict:
    """Weak normal form with ecart (Mora); T is extended locally."""
    T = list(T)
    steps = 0
    while h:
        lt = order.lead(h)
        mk = _mask(lt)
        best = None
        for g in T:
            if g.lt[0] != lt[0] or (g.mask & ~mk):
                continue
            if _divides(g.lt, lt) and (best is None or g.ecart < best.ecart):
                best = g
                if best.ecart == 0:
                    break
        if best is None:
            return h
        eh = _maxdeg(h) - _tdeg(lt)
        if best.ecart > eh:
            T.append(_Elem.make(dict(h), order))
        c = h[lt]
        _axpy(h, c, _tdiv(lt, best.lt), best.vec)
        steps += 1
        if steps > guard:
            raise EngineError("Mora normal form guard exceeded")
    return h


def _spoly(a: _Elem, b: _Elem) -> dict:
    L = _lcm(a.lt, b.lt)
    out = {}
    ma = _tdiv(L, a.lt)
    mb = _tdiv(L, b.lt)
    for t, c in a.vec.items():
        out[_tmul(ma, t)] = c
    _axpy(out, mpq(1), mb, b.vec)
    return out


def _pair_sugar(a: _Elem, b: _Elem) -> int:
    L = _lcm(a.lt, b.lt)
    return max(a.sugar + _tdeg(L) - _tdeg(a.lt), b.sugar + _tdeg(L) - _tdeg(b.lt))


def _buchberger_core(gens: list, order: TermOrder, ideal_like: bool, guard: int = 10 ** 6, known: list | None = None):
    """Shared pair loop; global orders use full NF, local orders Mora's NF.

    ``known`` is an already complete basis: its elements are inserted
    without forming pairs among themselves.
    """
    G: list[_Elem] = []
    alive: list[bool] = []
    pairs: dict = {}      # (i, j) -> (sugar, lcm)
    divs = _Divisors()
    local = order.is_local

    def update(h: _Elem):
        k = len(G)
        C = [i for i in range(k) if alive[i] and G[i].lt[0] == h.lt[0]]
        lcms = {i: _lcm(G[i].lt, h.lt) for i in C}
        # chain criterion among the new pairs (Gebauer-Moeller)
        D = []
        Cs = sorted(C, key=lambda i: order.key(lcms[i]))
        for idx, i in enumerate(Cs):
            cop = ideal_like and not local and _coprime(G[i].lt, h.lt)
            if cop:
                D.append((i, True))
                continue
            Li = lcms[i]
            dominated = False
            for j in Cs[:idx]:
                if j != i and _divides(lcms[j], Li):
                    dominated = True
                    break
            if not dominated:
                for j, _c in D:
                    if _divides(lcms[j], Li):
                        dominated = True
                        break
            if not dominated:
                D.append((i, False))
        newpairs = [(i, k) for i, cop in D if not cop]
        # old pairs made redundant by h
        hl = h.lt
        for (i, j) in list(pairs):
            s, L = pairs[(i, j)]
            if L[0] == hl[0] and _divides(hl, L) and _lcm(G[i].lt, hl) != L and _lcm(G[j].lt, hl) != L:
                del pairs[(i, j)]
        G.append(h)
        alive.append(True)
        for i in range(k):
            if alive[i] and G[i].lt[0] == hl[0] and _divides(hl, G[i].lt):
                alive[i] = False
        divs.add(h)
        for (i, j) in newpairs:
            pairs[(i, j)] = (_pair_sugar(G[i], G[j]), _lcm(G[i].lt, G[j].lt))

    for v in known or ():
        update(_Elem.make(dict(v), order))
    pairs.clear()

    for v in gens:
        if not v:
            continue
        if local:
            h = v
            if G:
                h = _nf_mora(dict(v), G, order, guard)
        else:
            h = _reduce_full(v, divs, order)
        if h:
            update(_Elem.make(h, order))

    steps = 0
    while pairs:
        (i, j), (s, L) = min(pairs.items(), key=lambda kv: (kv[1][0], order.key(kv[1][1]), kv[0]))
        del pairs[(i, j)]
        sp = _spoly(G[i], G[j])
        if not sp:
            continue
        if local:
            h = _nf_mora(sp, G, order, guard)
        else:
            h = _reduce_full(sp, divs, order)
        if h:
            update(_Elem.make(h, order, sugar=s))
        steps += 1
        if steps > guard:
            raise EngineError("basis computation guard exceeded")
    return G


def _minimal(G: list[_Elem], order: TermOrder) -> list[_Elem]:
    """Drop elements whose leading term is divisible by another one's."""
    G = sorted(G, key=lambda e: order.key(e.lt))
    out: list[_Elem] = []
    for g in G:
        if any(_divides(o.lt, g.lt) for o in out):
            continue
        out.append(g)
    return out


def _interreduce(G: list[_Elem], order: TermOrder) -> list[_Elem]:
    G = _minimal(G, order)
    out = []
    for i, g in enumerate(G):
        divs = _Divisors()
        for j, o in enumerate(G):
            if j != i:
                divs.add(o)
        lt = g.lt
        rest = dict(g.vec)
        del rest[lt]
        red = _reduce_full(rest, divs, order) if rest else {}
        red[lt] = mpq(1)
        out.append(_Elem.make(red, order))
    return sorted(out, key=lambda e: order.key(e.lt), reverse=True)


def vector_basis(gens: Iterable[dict], order: TermOrder, reduced: bool = True, ideal_like: bool = False,
                 known: list | None = None) -> list[dict]:
    """Gröbner basis (global order) or standard basis (local order) of a module.

    ``known`` optionally holds a finished basis of part of the input."""
    gens = [dict(v) for v in gens if v]
    G = _buchberger_core(gens, order, ideal_like, known=known)
    if order.is_local:
        G = _minimal(G, order)
        return [g.vec for g in G]
    G = _interreduce(G, order) if reduced else _minimal(G, order)
    return [g.vec for g in G]


def leading_terms(basis: Iterable[dict], order: TermOrder) -> list[tuple]:
    return [order.lead(v) for v in basis]


def vector_normal_form(v: dict, basis: Sequence[dict], order: TermOrder) -> dict:
    if order.is_local:
        T = [_Elem.make(dict(b), order) for b in basis]
        return _nf_mora(dict(v), T, order, 10 ** 6)
    divs = _Divisors()
    for b in basis:
        divs.add(_Elem.make(dict(b), order))
    return _reduce_full(v, divs, order)


# ------------------------------------------------------------------ conversions

def poly_to_vec(p: Polynomial, comp: int = 0) -> dict:
    return {(comp,) + e: c for e, c in p.terms.items()}


def vec_to_poly(v: dict, ring: PolyRing, comp: int = 0) -> Polynomial:
    return Polynomial(ring, {t[1:]: c for t, c in v.items() if t[0] == comp}, _trusted=True)


def column_to_vec(col: Sequence[Polynomial], offset: int = 0) -> dict:
    v: dict = {}
    for i, p in enumerate(col):
        for e, c in p.terms.items():
            v[(i + offset,) + e] = c
    return v


def vec_to_column(v: dict, ring: PolyRing, rank: int, offset: int = 0) -> list[Polynomial]:
    cols: list[dict] = [dict() for _ in range(rank)]
    for t, c in v.items():
        i = t[0] - offset
        if 0 <= i < rank:
            cols[i][t[1:]] = c
    return [Polynomial(ring, d, _trusted=True) for d in cols]


# ------------------------------------------------------------------ monomial ideals

def monomial_dimension(gens: Sequence[tuple], n: int) -> int:
    """Krull dimension of R/(monomials): largest variable set no generator lives in."""
    supports = [frozenset(i for i, a in enumerate(g) if a) for g in gens]
    if any(not s for s in supports):
        return -1
    best = 0
    for size in range(n, 0, -1):
        for U in itertools.combinations(range(n), size):
            Us = set(U)
            if all(not s <= Us for s in supports):
                return size
    return best


def staircase(gens: Sequence[tuple], n: int, cap: int | None = None):
    """Standard monomials of a monomial ideal, or INFINITE when unbounded."""
    gens = [tuple(g) for g in gens]
    if any(not any(g) for g in gens):
        return []
    for i in range(n):
        if not any(g[i] > 0 and all(a == 0 for j, a in enumerate(g) if j != i) for g in gens):
            return INFINITE
    out = []

    def inside(e):
        return any(all(a >= b for a, b in zip(e, g)) for g in gens)

    # depth-first over exponent vectors, last variable innermost
    bounds = [min(g[i] for g in gens if g[i] > 0 and all(a == 0 for j, a in enumerate(g) if j != i)) for i in range(n)]

    def rec(prefix, i):
        if i == n:
            if not inside(tuple(prefix)):
                out.append(tuple(prefix))
                if cap is not None and len(out) > cap:
                    raise EngineError("staircase cap exceeded")
            return
        for a in range(bounds[i]):
            e = tuple(prefix) + (a,) + (0,) * (n - i - 1)
            if inside(e):
                break
            rec(prefix + [a], i + 1)

    rec([], 0)
    return out


def count_difference(big: Sequence[tuple], small: Sequence[tuple], n: int, cap: int = 2_000_000):
    """|monomials in (big) but not in (small)| for monomial ideals big ⊇ small.

    Returns INFINITE if the difference is infinite.  The search walks upward
    from generators of ``big``; a monomial outside ``small`` from which some
    variable can be raised forever without entering ``small`` proves
    infiniteness.
    """
    small = [tuple(g) for g in small]
    big = [tuple(g) for g in big]

    def in_small(e):
        for g in small:
            if all(a >= b for a, b in zip(e, g)):
                return True
        return False

    def escapes(e, i):
        # no generator of small has g_j <= e_j for all j != i
        for g in small:
            if all(g[j] <= e[j] for j in range(n) if j != i):
                return False
        return True

    seen = set()
    stack = [g for g in big if not in_small(g)]
    for g in stack:
        seen.add(g)
    while stack:
        e = stack.pop()
        for i in range(n):
            if escapes(e, i):
                return INFINITE
            f = e[:i] + (e[i] + 1,) + e[i + 1:]
            if f in seen or in_small(f):
                continue
            seen.add(f)
            if len(seen) > cap:
                raise EngineError("monomial difference count exceeded cap")
            stack.append(f)
    return len(seen)


# ------------------------------------------------------------------ ideals

class Ideal:
    """Ideal given by generators; bases are cached per order tag.

    When the ring has a quotient ideal its generators are adjoined in every
    basis computation, so results describe the ideal of R/Q.
    """

    def __init__(self, ring: PolyRing, generators: Iterable[Polynomial] = ()):
        self.ring = ring
        gens = []
        for g in generators:
            g = ring(g)
            if not g.is_zero():
                gens.append(g)
        self.generators = tuple(gens)
        self._cache: dict = {}

    def __repr__(self):
        return f"Ideal({[str(g) for g in self.generators]})"

    def __add__(self, other: "Ideal | Iterable[Polynomial]") -> "Ideal":
        extra = other.generators if isinstance(other, Ideal) else tuple(other)
        return Ideal(self.ring, self.generators + tuple(self.ring(g) for g in extra))

    def full_generators(self) -> list[Polynomial]:
        return list(self.generators) + list(self.ring.quotient)

    def is_principal_hint(self) -> bool:
        return len(self.generators) == 1

    def _basis_vecs(self, base: str) -> list[dict]:
        k = ("basis", base)
        if k not in self._cache:
            order = TermOrder(self.ring.nvars, base)
            gens = [poly_to_vec(g) for g in self.full_generators()]
            self._cache[k] = vector_basis(gens, order, ideal_like=True)
        return self._cache[k]

    def basis(self, base: str = GLOBAL) -> list[Polynomial]:
        return [vec_to_poly(v, self.ring) for v in self._basis_vecs(base)]

    def leading_exponents(self, base: str = GLOBAL) -> list[tuple]:
        order = TermOrder(self.ring.nvars, base)
        return [order.lead(v)[1:] for v in self._basis_vecs(base)]

    def normal_form(self, p: Polynomial) -> Polynomial:
        order = TermOrder(self.ring.nvars, GLOBAL)
        return vec_to_poly(vector_normal_form(poly_to_vec(self.ring(p)), self._basis_vecs(GLOBAL), order), self.ring)

    def contains(self, p: Polynomial) -> bool:
        return self.normal_form(p).is_zero()

    def contains_ideal(self, other: "Ideal") -> bool:
        return all(self.contains(g) for g in other.full_generators())

    def equals(self, other: "Ideal") -> bool:
        return self.contains_ideal(other) and other.contains_ideal(self)

    def is_unit(self) -> bool:
        return any(not any(e) for e in self.leading_exponents(GLOBAL))

    def local_contains_unit(self) -> bool:
        return any(not any(e) for e in self.leading_exponents(LOCAL))

    def dimension(self) -> int:
        """Global Krull dimension (-1 for the unit ideal)."""
        return monomial_dimension(self.leading_exponents(GLOBAL), self.ring.nvars)

    def local_dimension(self) -> int:
        """Dimension of the germ at the origin (-1 if the origin is not on it)."""
        gdim = Ideal(self.ring.with_order(GLOBAL), self.generators).dimension()
        if gdim <= 0:
            return -1 if gdim < 0 or colength_at_origin(self) == 0 else 0
        return monomial_dimension(self.leading_exponents(LOCAL), self.ring.nvars)

    def global_colength(self):
        st = staircase(self.leading_exponents(GLOBAL), self.ring.nvars)
        return st if st is INFINITE else len(st)

    def map(self, fn) -> "Ideal":
        return Ideal(self.ring, [fn(g) for g in self.generators])


def groebner_basis(I: Ideal) -> Ideal:
    if I.ring.order != GLOBAL:
        raise EngineError("groebner_basis needs a global order; use standard_basis_local")
    out = Ideal(I.ring.ambient(), I.basis(GLOBAL))
    out._cache[("basis", GLOBAL)] = I._basis_vecs(GLOBAL)
    return out


def standard_basis_local(I: Ideal) -> Ideal:
    if I.ring.order != LOCAL:
        raise EngineError("standard_basis_local needs the local order")
    out = Ideal(I.ring.ambient(), I.basis(LOCAL))
    out._cache[("basis", LOCAL)] = I._basis_vecs(LOCAL)
    return out


def colength_at_origin(I: Ideal):
    """dim_Q of the local ring at 0 modulo I (quotient ideal adjoined).

    Globally zero-dimensional ideals are handled by linear algebra on the
    finite quotient algebra A = Q[x]/I: the local factor at 0 is the joint
    generalized 0-eigenspace of the multiplication maps by the variables.
    Otherwise the local staircase comes from a Mora standard basis.
    """
    gring = I.ring.with_order(GLOBAL)
    Ig = Ideal(gring, I.generators)
    lead = Ig.leading_exponents(GLOBAL)
    st = staircase(lead, gring.nvars)
    if st is not INFINITE:
        return _local_part_dimension(Ig, st)
    lead = I.leading_exponents(LOCAL)
    st = staircase(lead, I.ring.nvars)
    return st if st is INFINITE else len(st)


def _nullspace(rows: list[list], ncols: int) -> list[list]:
    """Basis of {v : rows · v = 0} over Q (rows as lists of mpq)."""
    A = [list(r) for r in rows]
    piv_cols = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [a * inv for a in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        piv_cols.append(c)
        r += 1
        if r == len(A):
            break
    free = [c for c in range(ncols) if c not in set(piv_cols)]
    out = []
    for fc in free:
        v = [mpq(0)] * ncols
        v[fc] = mpq(1)
        for i, pc in enumerate(piv_cols):
            v[pc] = -A[i][fc]
        out.append(v)
    return out


def _matmul(A, B):
    n, m, k = len(A), len(B), len(B[0]) if B else 0
    out = []
    for i in range(n):
        Ai = A[i]
        row = [mpq(0)] * k
        for t in range(m):
            a = Ai[t]
            if a:
                Bt = B[t]
                for j in range(k):
                    if Bt[j]:
                        row[j] += a * Bt[j]
        out.append(row)
    return out


def _local_part_dimension(Ig: Ideal, standard: list[tuple]) -> int:
    """dim of the localization at 0 of the finite algebra Q[x]/I."""
    N = len(standard)
    if N == 0:
        return 0
    ring = Ig.ring
    n = ring.nvars
    order = TermOrder(n, GLOBAL)
    basis = Ig._basis_vecs(GLOBAL)
    # all variables nilpotent on A: the algebra is already local
    if all(not vector_normal_form({(0,) + tuple(N if i == v else 0 for i in range(n)): mpq(1)}, basis, order)
           for v in range(n)):
        return N
    index = {e: i for i, e in enumerate(standard)}
    mats = []
    for var in range(n):
        M = [[mpq(0)] * N for _ in range(N)]
        for j, e in enumerate(standard):
            t = (0,) + tuple(a + (1 if i == var else 0) for i, a in enumerate(e))
            nf = vector_normal_form({t: mpq(1)}, basis, order)
            for tt, c in nf.items():
                M[index[tt[1:]]][j] = c
        mats.append(M)
    return _joint_nilpotent_dimension(mats, N)


def _joint_nilpotent_dimension(mats: list[list[list]], N: int) -> int:
    """dim of the joint generalized 0-eigenspace of commuting N x N matrices.

    For a finite module over Q[x] with the multiplication maps by the
    variables this is the length of its localization at the origin.
    """
    V = [[mpq(1) if i == j else mpq(0) for i in range(N)] for j in range(N)]
    for M in mats:
        r = len(V)
        if r == 0:
            return 0
        MV = [[sum((M[i][t] * v[t] for t in range(N) if v[t]), mpq(0)) for i in range(N)] for v in V]
        C = _solve_in_span(V, MV)
        P = C
        k = 1
        while k < r:
            P = _matmul(P, P)
            k *= 2
        ker = _nullspace(P, r)
        V = [[sum((w[j] * V[j][i] for j in range(r)), mpq(0)) for i in range(N)] for w in ker]
    return len(V)


def _solve_in_span(V: list[list], W: list[list]) -> list[list]:
    """Matrix C (r x r, rows index V) with W[j] = Σ_i C[i][j] V[i]."""
    r = len(V)
    N = len(V[0])
    # augmented system: rows are coordinates, unknowns are combination weights
    A = [[V[i][row] for i in range(r)] + [W[j][row] for j in range(len(W))] for row in range(N)]
    piv = []
    rr = 0
    for c in range(r):
        p = next((i for i in range(rr, N) if A[i][c] != 0), None)
        if p is None:
            raise EngineError("subspace is not invariant (internal error)")
        A[rr], A[p] = A[p], A[rr]
        inv = 1 / A[rr][c]
        A[rr] = [a * inv for a in A[rr]]
        for i in range(N):
            if i != rr and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[rr])]
        piv.append(c)
        rr += 1
    for i in range(rr, N):
        if any(A[i][r + j] != 0 for j in range(len(W))):
            raise EngineError("subspace is not invariant (internal error)")
    return [[A[i][r + j] for j in range(len(W))] for i in range(r)]


def local_staircase(I: Ideal):
    return staircase(I.leading_exponents(LOCAL), I.ring.nvars)


def _elimination_ring(ring: PolyRing, names: Sequence[str]) -> tuple[PolyRing, TermOrder]:
    ext = PolyRing(tuple(names) + ring.variables, GLOBAL)
    w = [1] * len(names) + [0] * ring.nvars
    return ext, TermOrder(ext.nvars, GLOBAL, weights=[w])


def _fresh(ring: PolyRing, stem: str, k: int = 1) -> list[str]:
    out = []
    i = 0
    while len(out) < k:
        name = f"{stem}{i}"
        if name not in ring.variables:
            out.append(name)
        i += 1
    return out


def _lift(ext: PolyRing, p: Polynomial, shift: int) -> dict:
    return {(0,) + (0,) * shift + e: c for e, c in p.terms.items()}


def _drop(ring: PolyRing, v: dict, shift: int) -> Polynomial | None:
    if any(any(t[1:1 + shift]) for t in v):
        return None
    return Polynomial(ring, {t[1 + shift:]: c for t, c in v.items()}, _trusted=True)


def saturate_principal(I: Ideal, h: Polynomial) -> Ideal:
    """I : h^∞ through the Rabinowitsch trick (eliminate y from I + (1 - y h))."""
    ring = I.ring
    h = ring(h)
    if h.is_zero():
        return Ideal(ring, [ring.one()])
    (yname,) = _fresh(ring, "_y")
    ext, order = _elimination_ring(ring, [yname])
    gens = [_lift(ext, g, 1) for g in I.full_generators()]
    yh = {(0, 1) + e: -c for e, c in h.terms.items()}
    yh[(0,) * (ext.nvars + 1)] = mpq(1)
    gens.append(yh)
    G = vector_basis(gens, order, ideal_like=True)
    out = [p for p in (_drop(ring, v, 1) for v in G) if p is not None]
    return Ideal(ring.ambient(), out) if not ring.quotient else Ideal(ring, out)


def intersect(I: Ideal, J: Ideal) -> Ideal:
    """I ∩ J by eliminating t from t I + (1 - t) J."""
    ring = I.ring
    (tname,) = _fresh(ring, "_t")
    ext, order = _elimination_ring(ring, [tname])
    gens = []
    for g in I.full_generators():
        gens.append({(0, 1) + e: c for e, c in g.terms.items()})
    for g in J.full_generators():
        v = {(0, 0) + e: c for e, c in g.terms.items()}
        for e, c in g.terms.items():
            k = (0, 1) + e
            v[k] = v.get(k, 0) - c
        gens.append({k: c for k, c in v.items() if c})
    G = vector_basis(gens, order, ideal_like=True)
    out = [p for p in (_drop(ring, v, 1) for v in G) if p is not None]
    return Ideal(ring, out)


def quotient(I: Ideal, J: Ideal) -> Ideal:
    """I : J as the intersection of I : g over generators g of J."""
    ring = I.ring
    res = None
    for g in J.generators:
        q = _quotient_principal(I, g)
        res = q if res is None else intersect(res, q)
    return res if res is not None else Ideal(ring, [ring.one()])


def _quotient_principal(I: Ideal, g: Polynomial) -> Ideal:
    ring = I.ring
    gens = I.full_generators()
    M = PolyMatrix.from_rows(ring.ambient(), [[g] + gens], 1 + len(gens))
    K = module_kernel(M)
    return Ideal(ring, [col[0] for col in K.columns()])


def saturate(I: Ideal, J: Ideal) -> Ideal:
    """I : J^∞.

    Computed as the intersection of I : h^∞ over a Gröbner basis h of J
    (each by Rabinowitsch elimination); the result S is then certified by
    one further quotient step, S : J = S, checked by mutual reduction.
    """
    ring = I.ring
    Jb = groebner_basis(J if J.ring.order == GLOBAL else Ideal(J.ring.with_order(GLOBAL), J.generators))
    hs = [ring(h) for h in Jb.generators]
    if not hs:
        # J = 0: every element is killed by a power of J
        return Ideal(ring, [ring.one()])
    if any(h.is_constant() for h in hs):
        return Ideal(ring, I.basis(GLOBAL))
    S = None
    for h in hs:
        Sh = saturate_principal(I, h)
        S = Sh if S is None else intersect(S, Sh)
    S = Ideal(ring, S.basis(GLOBAL))
    S._cert = saturation_certificate(S, Ideal(ring, hs))
    if not S._cert:
        raise EngineError("saturation failed its stabilization certificate")
    return S


def saturation_certificate(S: Ideal, J: Ideal) -> bool:
    """True when S : J == S (one more quotient step changes nothing)."""
    return S.contains_ideal(quotient(S, J))


def eliminate(I: Ideal, names: Sequence[str]) -> Ideal:
    """I ∩ Q[remaining variables], returned in the ring without ``names``."""
    ring = I.ring
    idx = [ring.index(v) for v in names]
    keep = [i for i in range(ring.nvars) if i not in idx]
    order_vars = idx + keep
    ext = PolyRing([ring.variables[i] for i in order_vars], GLOBAL)
    w = [1] * len(idx) + [0] * len(keep)
    order = TermOrder(ext.nvars, GLOBAL, weights=[w])
    gens = []
    for g in I.full_generators():
        gens.append({(0,) + tuple(e[i] for i in order_vars): c for e, c in g.terms.items()})
    G = vector_basis(gens, order, ideal_like=True)
    sub = PolyRing([ring.variables[i] for i in keep], GLOBAL)
    out = [p for p in (_drop(sub, v, len(idx)) for v in G) if p is not None]
    return Ideal(sub, out)


# ------------------------------------------------------------------ modules

@dataclass
class SubmodulePresentation:
    """Submodule of R^ambient_rank generated by the columns of ``generators``."""

    ring: PolyRing
    ambient_rank: int
    generators: PolyMatrix
    certified: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    def columns(self) -> list[list[Polynomial]]:
        return [self.generators.col(j) for j in range(self.generators.cols)]

    def vectors(self) -> list[dict]:
        return [column_to_vec(c) for c in self.columns()]

    @property
    def ngens(self) -> int:
        return self.generators.cols


def _quotient_relations(ring: PolyRing, rank: int) -> list[dict]:
    out = []
    for q in ring.quotient:
        for i in range(rank):
            out.append(poly_to_vec(q, i))
    return out


def module_kernel(M: PolyMatrix) -> SubmodulePresentation:
    """Syzygies {v : M v = 0} (modulo the ring's quotient ideal, if any).

    Gröbner basis of the columns augmented by the identity, under an order
    in which the image block dominates; elements whose leading term leaves
    the image block have zero image and generate the syzygies.
    """
    ring = M.ring
    r, s = M.rows, M.cols
    if s == 0:
        return SubmodulePresentation(ring, 0, PolyMatrix(ring, 0, 0), True)
    gens = []
    for j in range(s):
        v = column_to_vec(M.col(j))
        v[(r + j,) + (0,) * ring.nvars] = mpq(1)
        gens.append(v)
    gens.extend(_quotient_relations(ring, r))
    order = TermOrder(ring.nvars, GLOBAL, module=("block", r))
    G = vector_basis(gens, order, reduced=True)
    cols = []
    for v in G:
        lt = order.lead(v)
        if lt[0] >= r:
            cols.append(vec_to_column(v, ring, s, offset=r))
    K = PolyMatrix(ring, s, len(cols), {(i, j): p for j, c in enumerate(cols) for i, p in enumerate(c) if not p.is_zero()})
    # every column must be a syzygy, exactly
    if K.cols:
        img = M * K
        if ring.quotient:
            Q = Ideal(ring, [])
            ok = all(Q.contains(p) for p in img.nonzero().values())
        else:
            ok = img.is_zero()
        if not ok:
            raise EngineError("syzygy verification failed")
    return SubmodulePresentation(ring, s, K, True)


def module_basis(vectors: Sequence[dict], rank: int, ring: PolyRing, base: str) -> list[dict]:
    order = TermOrder(ring.nvars, base, module="TOP")
    gens = [v for v in vectors if v] + _quotient_relations(ring, rank)
    return vector_basis(gens, order)


def module_leading_terms(vectors: Sequence[dict], rank: int, ring: PolyRing, base: str = LOCAL) -> dict:
    """Leading monomial generators per component (local order by default)."""
    order = TermOrder(ring.nvars, base, module="TOP")
    B = module_basis(vectors, rank, ring, base)
    out: dict = {i: [] for i in range(rank)}
    for v in B:
        lt = order.lead(v)
        out[lt[0]].append(lt[1:])
    return out


def local_colength_module(vectors: Sequence[dict], rank: int, ring: PolyRing):
    """Length of (R_0)^rank / <vectors>, INFINITE if not finite."""
    lead = module_leading_terms(vectors, rank, ring)
    total = 0
    for i in range(rank):
        st = staircase(lead[i], ring.nvars)
        if st is INFINITE:
            return INFINITE
        total += len(st)
    return total


MAX_LINEAR_DIM = 1500


def _finite_subquotient_local_length(big, small, rank: int, ring: PolyRing):
    """Local length of <big>/<small> when it is finite dimensional globally.

    A Q-basis of <big>/<small> is indexed by the terms of L(big) outside
    L(small) (global order); the multiplication maps by the variables are
    written in that basis and the joint generalized 0-eigenspace is
    measured.  Returns None when the global quotient is too large or
    infinite.
    """
    gring = ring.with_order(GLOBAL) if ring.order != GLOBAL else ring
    n = ring.nvars
    order = TermOrder(n, GLOBAL, module="TOP")
    Bb = module_basis(big, rank, gring, GLOBAL)
    Bs = module_basis(small, rank, gring, GLOBAL)
    Lb = [order.lead(v) for v in Bb]
    Ls = [order.lead(v) for v in Bs]
    for i in range(rank):
        lb = [t[1:] for t in Lb if t[0] == i]
        ls = [t[1:] for t in Ls if t[0] == i]
        if lb and count_difference(lb, ls, n, cap=MAX_LINEAR_DIM + 1) is INFINITE:
            return None

    def in_small(t):
        return any(_divides(l, t) for l in Ls)

    terms: list[tuple] = []
    seen = set()
    todo = [t for t in Lb if not in_small(t)]
    while todo:
        t = todo.pop()
        if t in seen:
            continue
        seen.add(t)
        terms.append(t)
        if len(terms) > MAX_LINEAR_DIM:
            return None
        for i in range(n):
            u = t[:1 + i] + (t[1 + i] + 1,) + t[2 + i:]
            if u not in seen and not in_small(u):
                todo.append(u)
    N = len(terms)
    if N == 0:
        return 0
    # all variables nilpotent on the quotient: it is supported at 0 only
    if all(not vector_normal_form({_tmul((0,) + tuple(N if i == v else 0 for i in range(n)), tt): c
                                   for tt, c in g.items()}, Bs, order)
           for v in range(n) for g in Bb):
        return N
    index = {t: i for i, t in enumerate(terms)}
    elems = []
    for t in terms:
        g = next(v for v, l in zip(Bb, Lb) if _divides(l, t))
        m = _tdiv(t, order.lead(g))
        e = vector_normal_form({_tmul(m, tt): c for tt, c in g.items()}, Bs, order)
        elems.append(e)

    def coords(w: dict) -> list:
        out = [mpq(0)] * N
        w = dict(w)
        while w:
            t = order.lead(w)
            i = index.get(t)
            if i is None:
                raise EngineError("subquotient basis is not closed under multiplication (internal error)")
            c = w[t] / elems[i][t]
            out[i] += c
            for tt, a in elems[i].items():
                v = w.get(tt, mpq(0)) - c * a
                if v:
                    w[tt] = v
                else:
                    w.pop(tt, None)
        return out

    mats = []
    for var in range(n):
        shift = (0,) + tuple(1 if i == var else 0 for i in range(n))
        cols = [coords(vector_normal_form({_tmul(shift, tt): c for tt, c in e.items()}, Bs, order)) for e in elems]
        mats.append([[cols[j][i] for j in range(N)] for i in range(N)])
    return _joint_nilpotent_dimension(mats, N)


def local_subquotient_length(big: Sequence[dict], small: Sequence[dict], rank: int, ring: PolyRing):
    """Length at the origin of <big>/<small>, assuming <small> ⊆ <big>.

    Finite-dimensional quotients are measured by linear algebra (see
    _finite_subquotient_local_length).  Otherwise, with a degree-compatible
    local order the leading modules satisfy L(small) ⊆ L(big) and the
    length is the number of monomials of L(big) outside L(small).
    """
    fast = _finite_subquotient_local_length(big, small, rank, ring)
    if fast is not None:
        return fast
    Lb = module_leading_terms(big, rank, ring)
    Ls = module_leading_terms(small, rank, ring)
    total = 0
    for i in range(rank):
        if not Lb[i]:
            continue
        c = count_difference(Lb[i], Ls[i], ring.nvars)
        if c is INFINITE:
            return INFINITE
        total += c
    return total


def saturate_generic(I: Ideal, J: Ideal, h: Polynomial, max_power: int = 12) -> Ideal:
    """I : J^∞ via a single element h of J, with a membership certificate.

    S = I : h^∞ always contains I : J^∞; it is equal when S·J^N ⊆ I for
    some N, which is checked by iterating K <- I + K·J.  Falls back to
    :func:`saturate` when no N <= max_power certifies.
    """
    ring = I.ring
    h = ring(h)
    Jg = [ring(g) for g in J.generators]
    if len(Jg) > 1:
        Jg = J.basis(GLOBAL) if J.ring.order == GLOBAL else Ideal(ring, Jg).basis(GLOBAL)
    if h.is_zero() or not Jg:
        return saturate(I, J)
    S = saturate_principal(I, h)
    S = Ideal(ring, S.basis(GLOBAL))
    Ib = Ideal(ring, I.basis(GLOBAL))
    K = [s for s in S.generators if not Ib.contains(s)]
    for _ in range(max_power):
        if not K:
            S._cert = True
            return S
        order = TermOrder(ring.nvars, GLOBAL)
        base = Ib._basis_vecs(GLOBAL)
        prods = [vector_normal_form(poly_to_vec(a * b), base, order) for a in K for b in Jg]
        prods = [v for v in prods if v]
        if not prods:
            K = []
            continue
        G = vector_basis(prods, order, ideal_like=True, known=base)
        K = [vec_to_poly(v, ring) for v in G if vector_normal_form(dict(v), base, order)]
    return saturate(I, J)
