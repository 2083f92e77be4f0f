"""Exact multivariate polynomials over the rationals.

Polynomials are sparse maps from exponent tuples to ``gmpy2.mpq``
coefficients.  A :class:`PolyRing` fixes the variable names, a monomial
order tag and an optional quotient ideal; the order only affects how
terms are listed and which term is "leading", arithmetic ignores it.
"""
from __future__ import annotations

import itertools
import re
from functools import reduce
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

GLOBAL = "dp"   # graded reverse lexicographic
LOCAL = "ds"    # negative graded reverse lexicographic

ORDERS = (GLOBAL, LOCAL)


class PolyError(ValueError):
    pass


class ParseError(PolyError):
    """Raised for malformed polynomial text; carries a 1-based column."""

    def __init__(self, msg: str, text: str, pos: int):
        self.column = pos + 1
        self.text = text
        super().__init__(f"{msg} at column {pos + 1}: {text!r}")


def to_q(c) -> mpq:
    if isinstance(c, str):
        c = c.strip()
        if "/" in c:
            p, q = c.split("/")
            return mpq(int(p), int(q))
        return mpq(int(c))
    return mpq(c)


def grevlex_key(e: Sequence[int]) -> tuple:
    return (sum(e),) + tuple(-a for a in reversed(e))


def negdeg_key(e: Sequence[int]) -> tuple:
    return (-sum(e),) + tuple(-a for a in reversed(e))


_ORDER_KEYS = {GLOBAL: grevlex_key, LOCAL: negdeg_key}


class PolyRing:
    """Polynomial ring Q[variables], optionally modulo ``quotient``.

    ``quotient`` is a tuple of polynomials of this same ring (built lazily
    through :meth:`with_quotient`, because polynomials need a ring first).
    """

    __slots__ = ("variables", "order", "quotient", "_index")

    def __init__(self, variables: Iterable[str], order: str = GLOBAL, quotient=None):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise PolyError(f"duplicate variable names in {variables}")
        for v in variables:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", v):
                raise PolyError(f"bad variable name {v!r}")
        if order not in ORDERS:
            raise PolyError(f"unknown monomial order {order!r}")
        self.variables = variables
        self.order = order
        self._index = {v: i for i, v in enumerate(variables)}
        q = ()
        if quotient:
            q = tuple(self._adopt(p) for p in quotient)
            q = tuple(p for p in q if not p.is_zero())
        self.quotient = q

    # identity is by value: variables, order and quotient generators
    def _sig(self):
        return (self.variables, self.order, tuple(tuple(sorted(p.terms.items())) for p in self.quotient))

    def __eq__(self, other):
        return isinstance(other, PolyRing) and self._sig() == other._sig()

    def __hash__(self):
        return hash((self.variables, self.order, len(self.quotient)))

    def __repr__(self):
        q = f", quotient={[str(p) for p in self.quotient]}" if self.quotient else ""
        return f"PolyRing({list(self.variables)}, {self.order!r}{q})"

    @property
    def nvars(self) -> int:
        return len(self.variables)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise PolyError(f"unknown variable {name!r}") from None

    def key(self, e):
        return _ORDER_KEYS[self.order](e)

    def _adopt(self, p: "Polynomial") -> "Polynomial":
        if p.ring.variables != self.variables:
            raise PolyError("quotient ideal must live over the same variables")
        return Polynomial(self, p.terms, _trusted=True)

    def with_order(self, order: str) -> "PolyRing":
        r = PolyRing(self.variables, order)
        r.quotient = tuple(Polynomial(r, p.terms, _trusted=True) for p in self.quotient)
        return r

    def with_quotient(self, gens) -> "PolyRing":
        base = PolyRing(self.variables, self.order)
        return PolyRing(self.variables, self.order, [Polynomial(base, g.terms, _trusted=True) for g in gens])

    def ambient(self) -> "PolyRing":
        """Same variables and order, no quotient."""
        return PolyRing(self.variables, self.order)

    def extend(self, names: Iterable[str], front: bool = False) -> "PolyRing":
        """Ring with extra variables appended (or prepended); quotient is carried over."""
        names = tuple(names)
        new = names + self.variables if front else self.variables + names
        r = PolyRing(new, self.order)
        emb = [r.var(v) for v in self.variables]
        r.quotient = tuple(ring_map_apply(self, r, emb, p) for p in self.quotient)
        return r

    # constructors
    def zero(self) -> "Polynomial":
        return Polynomial(self, {}, _trusted=True)

    def one(self) -> "Polynomial":
        return self.const(1)

    def const(self, c) -> "Polynomial":
        c = to_q(c)
        if c == 0:
            return self.zero()
        return Polynomial(self, {(0,) * self.nvars: c}, _trusted=True)

    def var(self, name) -> "Polynomial":
        i = name if isinstance(name, int) else self.index(name)
        e = [0] * self.nvars
        e[i] = 1
        return Polynomial(self, {tuple(e): mpq(1)}, _trusted=True)

    def gens(self) -> list["Polynomial"]:
        return [self.var(i) for i in range(self.nvars)]

    def monomial(self, e, c=1) -> "Polynomial":
        return Polynomial(self, {tuple(e): to_q(c)})

    def parse(self, text: str) -> "Polynomial":
        return parse_poly(self, text)

    def __call__(self, x) -> "Polynomial":
        if isinstance(x, Polynomial):
            if x.ring.variables != self.variables:
                raise PolyError("cross-ring term leakage: variables differ")
            return Polynomial(self, x.terms, _trusted=True)
        if isinstance(x, str):
            return self.parse(x)
        return self.const(x)


def _add_into(acc: dict, terms: Mapping, scale=1):
    for e, c in terms.items():
        v = acc.get(e)
        if v is None:
            acc[e] = c * scale
        else:
            v = v + c * scale
            if v:
                acc[e] = v
            else:
                del acc[e]


def _mul_terms(a: Mapping, b: Mapping) -> dict:
    if len(a) > len(b):
        a, b = b, a
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            v = out.get(e)
            if v is None:
                out[e] = ca * cb
            else:
                v = v + ca * cb
                if v:
                    out[e] = v
                else:
                    del out[e]
    return out


class Polynomial:
    """Immutable sparse polynomial; ``terms`` maps exponent tuples to mpq."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: PolyRing, terms: Mapping, _trusted: bool = False):
        self.ring = ring
        if _trusted:
            self.terms = terms
        else:
            n = ring.nvars
            clean = {}
            for e, c in terms.items():
                e = tuple(int(a) for a in e)
                if len(e) != n or min(e, default=0) < 0:
                    raise PolyError(f"bad exponent vector {e} for ring with {n} variables")
                c = to_q(c)
                if c:
                    clean[e] = clean.get(e, 0) + c
            self.terms = {e: c for e, c in clean.items() if c}
        self._hash = None

    # basic predicates
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> mpq:
        return self.terms.get((0,) * self.ring.nvars, mpq(0))

    def is_local_unit(self) -> bool:
        return self.constant_term() != 0

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def low_degree(self) -> int:
        return min((sum(e) for e in self.terms), default=-1)

    def degree_in(self, i: int) -> int:
        return max((e[i] for e in self.terms), default=-1)

    def variables_used(self) -> set[int]:
        return {i for e in self.terms for i, a in enumerate(e) if a}

    def sorted_terms(self, order: str | None = None) -> list[tuple[tuple, mpq]]:
        key = _ORDER_KEYS[order or self.ring.order]
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=True)

    def leading_term(self, order: str | None = None):
        if not self.terms:
            raise PolyError("zero polynomial has no leading term")
        key = _ORDER_KEYS[order or self.ring.order]
        e = max(self.terms, key=key)
        return e, self.terms[e]

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.ring.variables != self.ring.variables:
                raise PolyError("cross-ring term leakage: variables differ")
            return other
        return self.ring.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        t = dict(self.terms)
        _add_into(t, other.terms)
        return Polynomial(self.ring, t, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.ring, {e: -c for e, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other):
        other = self._coerce(other)
        t = dict(self.terms)
        _add_into(t, other.terms, -1)
        return Polynomial(self.ring, t, _trusted=True)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = to_q(other)
            if not c:
                return self.ring.zero()
            return Polynomial(self.ring, {e: v * c for e, v in self.terms.items()}, _trusted=True)
        other = self._coerce(other)
        return Polynomial(self.ring, _mul_terms(self.terms, other.terms), _trusted=True)

    __rmul__ = __mul__

    def __truediv__(self, c):
        c = to_q(c)
        if not c:
            raise ZeroDivisionError("polynomial division by zero")
        return self * (1 / c)

    def __pow__(self, k: int):
        if k < 0:
            raise PolyError("negative power")
        out = self.ring.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.ring.variables == other.ring.variables and self.terms == other.terms
        try:
            return self.terms == self.ring.const(other).terms
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def diff(self, i) -> "Polynomial":
        if not isinstance(i, int):
            i = self.ring.index(i)
        out = {}
        for e, c in self.terms.items():
            a = e[i]
            if a:
                f = list(e)
                f[i] = a - 1
                out[tuple(f)] = c * a
        return Polynomial(self.ring, out, _trusted=True)

    def gradient(self) -> list["Polynomial"]:
        return [self.diff(i) for i in range(self.ring.nvars)]

    def homogeneous_part(self, d: int) -> "Polynomial":
        return Polynomial(self.ring, {e: c for e, c in self.terms.items() if sum(e) == d}, _trusted=True)

    def truncate(self, d: int) -> "Polynomial":
        """Drop every term of total degree >= d."""
        return Polynomial(self.ring, {e: c for e, c in self.terms.items() if sum(e) < d}, _trusted=True)

    def content_normalized(self) -> "Polynomial":
        """Scale so the leading coefficient (in ring order) is 1."""
        if not self.terms:
            return self
        return self / self.leading_term()[1]

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"Polynomial({format_poly(self)!r})"


def format_poly(p: Polynomial) -> str:
    if not p.terms:
        return "0"
    names = p.ring.variables
    parts = []
    for e, c in p.sorted_terms():
        mon = "*".join(n if a == 1 else f"{n}^{a}" for n, a in zip(names, e) if a)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if mon:
            coef = "" if a == 1 else (f"{a.numerator}/{a.denominator}" if a.denominator != 1 else str(a.numerator)) + "*"
            body = coef + mon
        else:
            body = f"{a.numerator}/{a.denominator}" if a.denominator != 1 else str(a.numerator)
        parts.append((sign, body))
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        s += f" {sign} {body}"
    return s


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\^|\*\*)|(.))")


def _tokenize(text: str):
    pos = 0
    out = []
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if not m:
            break
        if m.group(0).strip() == "":
            break
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            out.append(("num", int(m.group(1)), start))
        elif m.group(2) is not None:
            out.append(("id", m.group(2), start))
        elif m.group(3) is not None:
            out.append(("op", "^", start))
        else:
            ch = m.group(4)
            if ch not in "+-*/()":
                raise ParseError(f"unexpected character {ch!r}", text, start)
            out.append(("op", ch, start))
        pos = m.end()
    out.append(("end", None, len(text)))
    return out


class _Parser:
    # expr   := ['+'|'-'] term (('+'|'-') term)*
    # term   := factor (['*'|'/'] factor)*      juxtaposition means '*'
    # factor := atom ('^' num)?
    # atom   := num | id | '(' expr ')'
    def __init__(self, ring: PolyRing, text: str):
        self.ring = ring
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.text, tok[2])

    def parse(self) -> Polynomial:
        if self.peek()[0] == "end":
            self.fail("empty polynomial")
        p = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return p

    def expr(self):
        sign = 1
        if self.peek()[:2] in (("op", "+"), ("op", "-")):
            sign = -1 if self.take()[1] == "-" else 1
        acc = self.term() * sign
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def _starts_atom(self, tok):
        return tok[0] in ("num", "id") or tok[:2] == ("op", "(")

    def term(self):
        acc = self.factor()
        while True:
            tok = self.peek()
            if tok[:2] == ("op", "*"):
                self.take()
                acc = acc * self.factor()
            elif tok[:2] == ("op", "/"):
                self.take()
                d = self.factor()
                if not d.is_constant() or d.is_zero():
                    self.fail("division only by nonzero constants", tok)
                acc = acc / d.constant_term()
            elif self._starts_atom(tok):
                acc = acc * self.factor()
            else:
                return acc

    def factor(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            tok = self.take()
            if tok[0] != "num":
                self.fail("exponent must be a nonnegative integer", tok)
            base = base ** tok[1]
        return base

    def atom(self):
        tok = self.take()
        if tok[0] == "num":
            return self.ring.const(tok[1])
        if tok[0] == "id":
            if tok[1] not in self.ring._index:
                self.fail(f"undeclared variable {tok[1]!r}", tok)
            return self.ring.var(tok[1])
        if tok[:2] == ("op", "("):
            p = self.expr()
            if self.take()[:2] != ("op", ")"):
                self.fail("missing ')'", self.toks[self.i - 1])
            return p
        self.fail("expected a number, variable or '('", tok)


def parse_poly(ring: PolyRing, text: str) -> Polynomial:
    return _Parser(ring, text).parse()


# ---------------------------------------------------------------- ring maps

def ring_map_apply(source: PolyRing, target: PolyRing, images: Sequence[Polynomial], p):
    """Apply the substitution x_i -> images[i]; overloaded for matrices and complexes."""
    if len(images) != source.nvars:
        raise PolyError(f"ring map needs {source.nvars} images, got {len(images)}")
    images = [target(q) if not isinstance(q, Polynomial) else q for q in images]
    for q in images:
        if q.ring.variables != target.variables:
            raise PolyError("cross-ring term leakage: image outside target ring")
    if isinstance(p, PolyMatrix):
        return p.map_entries(lambda q: ring_map_apply(source, target, images, q), ring=target)
    if hasattr(p, "map_ring"):
        return p.map_ring(target, lambda q: ring_map_apply(source, target, images, q))
    if not isinstance(p, Polynomial):
        raise PolyError("ring_map_apply expects a Polynomial, PolyMatrix or FreeComplex")
    if p.ring.variables != source.variables:
        raise PolyError("cross-ring term leakage: polynomial not in source ring")
    powers: dict = {}

    def pw(i, a):
        k = (i, a)
        if k not in powers:
            powers[k] = images[i] ** a
        return powers[k]

    acc: dict = {}
    for e, c in p.terms.items():
        t = {(0,) * target.nvars: c}
        for i, a in enumerate(e):
            if a:
                t = _mul_terms(t, pw(i, a).terms)
        _add_into(acc, t)
    return Polynomial(target, acc, _trusted=True)


# ---------------------------------------------------------------- matrices

class PolyMatrix:
    """rows x cols matrix of polynomials; acts on column vectors.

    Stored sparse (dict of nonzero entries) when density is below 25%,
    dense (list of rows) otherwise.
    """

    __slots__ = ("ring", "rows", "cols", "_dense", "_sparse")

    SPARSE_THRESHOLD = 0.25

    def __init__(self, ring: PolyRing, rows: int, cols: int, entries=None):
        self.ring = ring
        self.rows = rows
        self.cols = cols
        nz: dict = {}
        if entries is None:
            pass
        elif isinstance(entries, Mapping):
            for (i, j), v in entries.items():
                if not (0 <= i < rows and 0 <= j < cols):
                    raise PolyError(f"entry ({i},{j}) outside {rows}x{cols}")
                v = ring(v)
                if not v.is_zero():
                    nz[(i, j)] = v
        else:
            entries = [list(r) for r in entries]
            if len(entries) != rows or any(len(r) != cols for r in entries):
                raise PolyError(f"entry grid does not match shape {rows}x{cols}")
            for i, r in enumerate(entries):
                for j, v in enumerate(r):
                    v = ring(v)
                    if not v.is_zero():
                        nz[(i, j)] = v
        total = rows * cols
        if total and len(nz) / total >= self.SPARSE_THRESHOLD:
            z = ring.zero()
            self._dense = [[nz.get((i, j), z) for j in range(cols)] for i in range(rows)]
            self._sparse = None
        else:
            self._dense = None
            self._sparse = nz

    @property
    def is_sparse(self) -> bool:
        return self._sparse is not None

    def __getitem__(self, ij) -> Polynomial:
        i, j = ij
        if self._dense is not None:
            return self._dense[i][j]
        return self._sparse.get((i, j)) or self.ring.zero()

    def nonzero(self) -> dict:
        if self._sparse is not None:
            return dict(self._sparse)
        return {(i, j): v for i, r in enumerate(self._dense) for j, v in enumerate(r) if not v.is_zero()}

    def to_lists(self) -> list[list[Polynomial]]:
        return [[self[i, j] for j in range(self.cols)] for i in range(self.rows)]

    def row(self, i) -> list[Polynomial]:
        return [self[i, j] for j in range(self.cols)]

    def col(self, j) -> list[Polynomial]:
        return [self[i, j] for i in range(self.rows)]

    def is_zero(self) -> bool:
        return not self.nonzero()

    def __eq__(self, other):
        return (isinstance(other, PolyMatrix) and (self.rows, self.cols) == (other.rows, other.cols)
                and self.nonzero() == other.nonzero())

    def __hash__(self):
        return hash((self.rows, self.cols, frozenset(self.nonzero().items())))

    def __repr__(self):
        return f"PolyMatrix({self.rows}x{self.cols}, {[[str(v) for v in r] for r in self.to_lists()]})"

    def __mul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise PolyError(f"shape mismatch {self.rows}x{self.cols} * {other.rows}x{other.cols}")
        by_row: dict = {}
        for (k, j), v in other.nonzero().items():
            by_row.setdefault(k, []).append((j, v))
        acc: dict = {}
        for (i, k), a in self.nonzero().items():
            for j, b in by_row.get(k, ()):
                t = acc.setdefault((i, j), {})
                _add_into(t, _mul_terms(a.terms, b.terms))
        ent = {ij: Polynomial(self.ring, t, _trusted=True) for ij, t in acc.items() if t}
        return PolyMatrix(self.ring, self.rows, other.cols, ent)

    def __add__(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise PolyError("shape mismatch in matrix sum")
        ent = self.nonzero()
        for ij, v in other.nonzero().items():
            ent[ij] = ent[ij] + v if ij in ent else v
        return PolyMatrix(self.ring, self.rows, self.cols, ent)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "PolyMatrix":
        return PolyMatrix(self.ring, self.rows, self.cols, {ij: v * c for ij, v in self.nonzero().items()})

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(self.ring, self.cols, self.rows, {(j, i): v for (i, j), v in self.nonzero().items()})

    def apply(self, vec: Sequence[Polynomial]) -> list[Polynomial]:
        out = [self.ring.zero() for _ in range(self.rows)]
        for (i, j), v in self.nonzero().items():
            if not vec[j].is_zero():
                out[i] = out[i] + v * vec[j]
        return out

    def map_entries(self, fn, ring: PolyRing | None = None) -> "PolyMatrix":
        ring = ring or self.ring
        return PolyMatrix(ring, self.rows, self.cols, {ij: fn(v) for ij, v in self.nonzero().items()})

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "PolyMatrix":
        return PolyMatrix(self.ring, len(rows), len(cols), [[self[i, j] for j in cols] for i in rows])

    @staticmethod
    def identity(ring: PolyRing, n: int) -> "PolyMatrix":
        return PolyMatrix(ring, n, n, {(i, i): ring.one() for i in range(n)})

    @staticmethod
    def zero(ring: PolyRing, rows: int, cols: int) -> "PolyMatrix":
        return PolyMatrix(ring, rows, cols)

    @staticmethod
    def stack(top: "PolyMatrix", bottom: "PolyMatrix") -> "PolyMatrix":
        if top.cols != bottom.cols:
            raise PolyError("stacked matrices need equal column counts")
        ent = top.nonzero()
        for (i, j), v in bottom.nonzero().items():
            ent[(i + top.rows, j)] = v
        return PolyMatrix(top.ring, top.rows + bottom.rows, top.cols, ent)

    @staticmethod
    def hcat(left: "PolyMatrix", right: "PolyMatrix") -> "PolyMatrix":
        if left.rows != right.rows:
            raise PolyError("concatenated matrices need equal row counts")
        ent = left.nonzero()
        for (i, j), v in right.nonzero().items():
            ent[(i, j + left.cols)] = v
        return PolyMatrix(left.ring, left.rows, left.cols + right.cols, ent)

    @staticmethod
    def from_rows(ring: PolyRing, rows: Sequence[Sequence], cols: int | None = None) -> "PolyMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        return PolyMatrix(ring, len(rows), cols, rows)


def jacobian(fs: Sequence[Polynomial], ring: PolyRing | None = None) -> PolyMatrix:
    """Jacobian matrix: one row per function, one column per variable."""
    if not fs:
        if ring is None:
            raise PolyError("need a ring for an empty Jacobian")
        return PolyMatrix(ring, 0, ring.nvars)
    ring = fs[0].ring
    return PolyMatrix.from_rows(ring, [f.gradient() for f in fs], ring.nvars)


def differential_row(f: Polynomial) -> PolyMatrix:
    return jacobian([f])


def determinant(M: PolyMatrix, expand_row: str = "first") -> Polynomial:
    """Laplace expansion along the first or last remaining row, memoised on column sets."""
    if M.rows != M.cols:
        raise PolyError("determinant of a non-square matrix")
    n = M.rows
    if n == 0:
        return M.ring.one()
    grid = M.to_lists()
    return _det(grid, tuple(range(n)), tuple(range(n)), {}, expand_row == "last", M.ring)


def _det(grid, rows, cols, memo, last, ring):
    k = (rows, cols)
    if k in memo:
        return memo[k]
    if len(rows) == 1:
        v = grid[rows[0]][cols[0]]
        memo[k] = v
        return v
    r = rows[-1] if last else rows[0]
    rest = rows[:-1] if last else rows[1:]
    rpos = len(rows) - 1 if last else 0
    acc: dict = {}
    for cpos, c in enumerate(cols):
        a = grid[r][c]
        if a.is_zero():
            continue
        sub = _det(grid, rest, cols[:cpos] + cols[cpos + 1:], memo, last, ring)
        if sub.is_zero():
            continue
        sign = -1 if (rpos + cpos) % 2 else 1
        _add_into(acc, _mul_terms(a.terms, sub.terms), sign)
    v = Polynomial(ring, acc, _trusted=True)
    memo[k] = v
    return v


def all_minors(M: PolyMatrix, size: int, expand_row: str = "first") -> list[Polynomial]:
    """All size x size minors, row subsets and column subsets in lexicographic order.

    A single memo table is shared across minors so overlapping sub-determinants
    are only expanded once.
    """
    if size > min(M.rows, M.cols) or size < 0:
        raise PolyError(f"minor size {size} exceeds matrix dimensions {M.rows}x{M.cols}")
    if size == 0:
        return [M.ring.one()]
    grid = M.to_lists()
    memo: dict = {}
    last = expand_row == "last"
    out = []
    for rows in itertools.combinations(range(M.rows), size):
        for cols in itertools.combinations(range(M.cols), size):
            out.append(_det(grid, rows, cols, memo, last, M.ring))
    return out


def jacobian_minors(fs: Sequence[Polynomial], extra_rows: PolyMatrix | None, size: int, ring: PolyRing | None = None):
    """Ideal generated by all size-minors of Jac(fs) stacked over extra_rows."""
    from .gb_engine import Ideal

    if ring is None:
        ring = fs[0].ring if fs else extra_rows.ring
    M = jacobian(list(fs), ring)
    if extra_rows is not None:
        M = PolyMatrix.stack(M, extra_rows)
    gens = [p for p in all_minors(M, size) if not p.is_zero()]
    return Ideal(ring, gens)


def lcm_denominator(polys: Iterable[Polynomial]) -> int:
    from math import lcm
    return reduce(lcm, (int(c.denominator) for p in polys for c in p.terms.values()), 1)
