"""Lê–Greuel type formulas: classical ICIS numbers and stratified versions.

Each summand is the Euler characteristic of Kosz(entries) ⊗ ENC(rows),
taken over the closure of a stratum and pushed forward along its Nash
modification.  Route by closure type:

* ambient: the closure is the whole space, complexes live over O_{C^n};
* smooth: ENC of the rows stacked on the closure's Jacobian, over O_X;
* nash: hypersurface closure, see :mod:`stratmu.nash_cech`;
* point: the origin stratum, where every complex has zero differentials.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .complexes import (
    FreeComplex,
    InfiniteHomology,
    euler_characteristic,
    homology_lengths,
    prune_units,
    tensor_complexes,
)
from .gb_engine import INFINITE, EngineError, Ideal, colength_at_origin
from .kosz_enc import enc_complex, has_unit_maximal_minor, koszul_complex
from .nash_cech import UnsupportedInstance, nash_graph_charts, nash_pushforward_chi
from .polar_engine import (
    GenericityError,
    NonIsolatedError,
    Stratification,
    mu_polar,
    with_generic_forms,
)
from .poly_core import LOCAL, PolyMatrix, PolyRing, Polynomial, all_minors, jacobian

FIRST = "first"
SECOND = "second"


# ------------------------------------------------------------------ classical ICIS

def _ambient(f_list) -> tuple[PolyRing, list[Polynomial]]:
    if not f_list:
        raise ValueError("need at least one map component")
    ring = f_list[0].ring.ambient()
    return ring, [ring(f) for f in f_list]


def lambda_ideal(f_list, j: int) -> Ideal:
    """<f_1..f_{k-j}> + maximal minors of Jac(f_1..f_{k-j+1})."""
    ring, fs = _ambient(f_list)
    k = len(fs)
    if not 1 <= j <= k:
        raise ValueError(f"j must lie in 1..{k}")
    p = k - j + 1
    minors = all_minors(jacobian(fs[:p], ring), p) if p <= ring.nvars else []
    return Ideal(ring.with_order(LOCAL), fs[: p - 1] + minors)


def lambda_j_classical(f_list, j: int) -> int:
    """λ_j(f) as a colength at the origin."""
    c = colength_at_origin(lambda_ideal(f_list, j))
    if c is INFINITE:
        raise NonIsolatedError(f"λ_{j}: infinite colength, not an ICIS in these coordinates")
    return c


def lambda_j_complex(f_list, j: int) -> int:
    """λ_j(f) as χ(Kosz(f_1..f_{k-j}) ⊗ ENC(Jac(f_1..f_{k-j+1})))."""
    ring, fs = _ambient(f_list)
    k = len(fs)
    if not 1 <= j <= k:
        raise ValueError(f"j must lie in 1..{k}")
    p = k - j + 1
    C = summand_complex_ambient(ring, fs[: p - 1], jacobian(fs[:p], ring))
    return euler_characteristic(C)


def mu_icis_classical(f_list) -> int:
    """μ(f) = Σ_j (-1)^{j-1} λ_j(f)."""
    k = len(f_list)
    mu = sum((-1) ** (j - 1) * lambda_j_classical(f_list, j) for j in range(1, k + 1))
    if mu < 0:
        raise EngineError(f"negative Milnor number {mu}: coordinates are not generic")
    return mu


def mu_icis_complex(f_list) -> int:
    k = len(f_list)
    return sum((-1) ** (j - 1) * lambda_j_complex(f_list, j) for j in range(1, k + 1))


# ------------------------------------------------------------------ summand complexes

def summand_complex_ambient(ring: PolyRing, entries, rows: PolyMatrix) -> FreeComplex:
    C = enc_complex(ring, rows.map_entries(ring, ring=ring))
    if entries:
        C = tensor_complexes(koszul_complex(ring, [ring(e) for e in entries]), C)
    return prune_units(C)


def summand_complex_smooth(closure_gens, entries, rows: PolyMatrix) -> FreeComplex:
    """Kosz(entries) ⊗ ENC([rows; Jac(closure)]) over O_X, X smooth at 0."""
    amb = closure_gens[0].ring.ambient()
    gens = [amb(g) for g in closure_gens]
    frame = jacobian(gens, amb)
    if not has_unit_maximal_minor(frame):
        raise UnsupportedInstance("closure generators do not form a smooth complete intersection at 0")
    ring = amb.with_quotient(gens)
    A = PolyMatrix.stack(rows.map_entries(ring, ring=ring), frame.map_entries(ring, ring=ring))
    C = enc_complex(ring, A)
    if entries:
        C = tensor_complexes(koszul_complex(ring, [ring(e) for e in entries]), C)
    return prune_units(C)


def closure_route(strat: Stratification, alpha: str) -> str:
    a = strat.get(alpha)
    gens = [g for g in a.ideal.generators if not g.is_zero()]
    if not gens:
        return "ambient-classical"
    if a.dim == 0:
        return "point"
    if a.smooth:
        return "smooth-closure"
    if a.hypersurface or len(gens) == 1:
        return "nash-cech"
    raise UnsupportedInstance(f"stratum {alpha}: singular closure of codimension >= 2 is not supported")


@dataclass
class LeGreuelSummand:
    stratum: str
    j: int
    sign: int
    kosz_entries: list[Polynomial]
    enc_rows: PolyMatrix
    chi: int
    route: str
    lengths: list = field(default_factory=list)
    correction: int = 0

    def as_dict(self) -> dict:
        return {
            "stratum": self.stratum,
            "j": self.j,
            "sign": self.sign,
            "kosz_entries": [str(e) for e in self.kosz_entries],
            "enc_rows": [[str(e) for e in r] for r in self.enc_rows.to_lists()],
            "chi": self.chi,
            "route": self.route,
            "lengths": [[p, str(v)] for p, v in self.lengths],
            "correction": self.correction,
        }


class SummandEvaluator:
    """χ of Kosz ⊗ ENC terms on one stratum closure, with a shared Nash atlas."""

    def __init__(self, strat: Stratification, alpha: str, truncation: int | None = None):
        self.strat = strat
        self.alpha = alpha
        self.route = closure_route(strat, alpha)
        self.truncation = truncation
        self.ring = strat.ring.ambient()
        self._atlas = None

    def rows(self, polys) -> PolyMatrix:
        ring = self.ring
        return PolyMatrix(ring, len(polys), ring.nvars, [ring(p).gradient() for p in polys])

    def evaluate(self, j: int, sign: int, entries, row_polys) -> LeGreuelSummand:
        entries = [self.ring(e) for e in entries]
        rows = self.rows(row_polys)
        a = self.strat.get(self.alpha)
        corr = 0
        if self.route == "point":
            chi, lengths = (0 if entries else 1), [(0, 1)]
        elif self.route == "ambient-classical":
            C = summand_complex_ambient(self.ring, entries, rows)
            lengths = homology_lengths(C)
            chi = euler_characteristic(C, lengths)
        elif self.route == "smooth-closure":
            C = summand_complex_smooth(list(a.ideal.generators), entries, rows)
            lengths = homology_lengths(C)
            chi = euler_characteristic(C, lengths)
        else:
            if self._atlas is None:
                gens = [g for g in a.ideal.generators if not g.is_zero()]
                self._atlas = nash_graph_charts(self.ring(gens[0]), check=False)
            res = nash_pushforward_chi(self._atlas, entries, rows, truncation=self.truncation)
            chi, lengths, corr = res.chi, res.base_lengths, res.correction
        if chi < 0:
            raise EngineError(f"stratum {self.alpha}, j={j}: summand χ = {chi} is negative")
        return LeGreuelSummand(self.alpha, j, sign, entries, rows, chi, self.route, lengths, corr)


# ------------------------------------------------------------------ stratified formulas

def formula_terms(f_list, l_list, j: int, formula: str):
    """(sign, kosz entries, ENC row polynomials) for the pair of index j (1-based)."""
    f, l = list(f_list), list(l_list)
    if formula == FIRST:
        ent = f[: j - 1] + l[j:]
        return [(1, ent, f[:j] + l[j:]), (-1, ent, f[: j - 1] + l[j - 1:])]
    if formula == SECOND:
        rows = f[:j] + l[j - 1:]
        return [(1, f[:j] + l[j:], rows), (-1, f[: j - 1] + l[j - 1:], rows)]
    raise ValueError(f"unknown formula {formula!r}")


@dataclass
class HomologicalResult:
    stratum: str
    value: int
    formula: str
    summands: list[LeGreuelSummand]
    forms: list[Polynomial]
    route: str
    other_value: int | None = None
    certificate: object = None

    def pair_values(self) -> dict[int, tuple[int, int]]:
        out: dict[int, list[int]] = {}
        for s in self.summands:
            out.setdefault(s.j, [0, 0])[0 if s.sign > 0 else 1] = s.chi
        return {j: tuple(v) for j, v in sorted(out.items())}


def _evaluate_formula(ev: SummandEvaluator, f_list, l_list, formula: str) -> list[LeGreuelSummand]:
    out = []
    for j in range(1, len(f_list) + 1):
        for sign, ent, rows in formula_terms(f_list, l_list, j, formula):
            try:
                out.append(ev.evaluate(j, sign, ent, rows))
            except InfiniteHomology as e:
                raise GenericityError(f"j={j}: {e}") from e
    return out


def mu_homological_stratum(strat: Stratification, alpha: str, f_list, l_list=None, formula: str = FIRST,
                           seed: int = 0, truncation: int | None = None, cross_check: bool = True) -> HomologicalResult:
    """μ(α; f) as a signed sum of pushed-forward Euler characteristics.

    With ``cross_check`` the other formula is evaluated too and must agree.
    The origin stratum carries μ = 1 by convention.
    """
    ring = strat.ring.ambient()
    f_list = [ring(f) for f in f_list]
    k = len(f_list)
    a = strat.get(alpha)
    route = closure_route(strat, alpha)
    if route == "point":
        return HomologicalResult(alpha, 1, formula, [], [], route)
    if a.dim < k:
        return HomologicalResult(alpha, 0, formula, [], [], route)
    ev = SummandEvaluator(strat, alpha, truncation)
    other = SECOND if formula == FIRST else FIRST

    def attempt(ls, cert):
        summands = _evaluate_formula(ev, f_list, ls, formula)
        value = sum(s.sign * s.chi for s in summands)
        other_value = None
        if cross_check:
            alt = _evaluate_formula(ev, f_list, ls, other)
            other_value = sum(s.sign * s.chi for s in alt)
        cert.checks.append((f"{alpha}: every summand has finite homology", True))
        return summands, value, other_value

    if l_list is not None:
        from .polar_engine import GenericityCertificate
        cert = GenericityCertificate(seed, 0, [("user-supplied forms", True)])
        forms = [ring(l) for l in l_list]
        summands, value, other_value = attempt(forms, cert)
    else:
        holder = {}

        def run(ls, cert):
            holder["forms"] = ls
            return attempt(ls, cert)

        (summands, value, other_value), cert = with_generic_forms(ring, k, seed, f"homological:{alpha}", run)
        forms = holder["forms"]
    if other_value is not None and other_value != value:
        raise EngineError(f"stratum {alpha}: first and second formulas disagree ({value} vs {other_value})")
    return HomologicalResult(alpha, value, formula, summands, forms, route, other_value, cert)


# ------------------------------------------------------------------ global combination

@dataclass
class GlobalCombination:
    lhs: int
    rhs: int
    equal: bool
    mu: dict[str, int]
    terms: dict[str, list[int]]     # stratum -> [T_1, .., T_k]

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "equal": self.equal,
                "mu": dict(sorted(self.mu.items())), "terms": dict(sorted(self.terms.items()))}


def global_combination(strat: Stratification, f_list, chi_pairs: dict[str, int], seed: int = 0,
                       mu_values: dict[str, int] | None = None, truncation: int | None = None) -> GlobalCombination:
    """Both sides of Σ_α μ(α; f)·χ(X, V^α) = Σ_j (-1)^{k-j} Σ_α T_j(α)·χ(X, V^α).

    T_j(α) = χ(Rν_*(Kosz(f_1..f_{j-1}) ⊗ ENC(df_1..df_j))) on the closure of α.
    μ values default to the polar engine (origin stratum: 1).
    """
    missing = [s.name for s in strat.strata if s.name not in chi_pairs]
    if missing:
        raise KeyError(f"missing χ(X, V^α) for strata: {', '.join(missing)}")
    ring = strat.ring.ambient()
    f_list = [ring(f) for f in f_list]
    k = len(f_list)
    mu: dict[str, int] = {}
    terms: dict[str, list[int]] = {}
    lhs = rhs = 0
    for s in strat.strata:
        chi = int(chi_pairs[s.name])
        route = closure_route(strat, s.name)
        if mu_values is not None and s.name in mu_values:
            mu[s.name] = int(mu_values[s.name])
        elif route == "point":
            mu[s.name] = 1
        else:
            mu[s.name] = mu_polar(strat, s.name, f_list, seed=seed).value
        lhs += mu[s.name] * chi
        ev = SummandEvaluator(strat, s.name, truncation)
        ts = []
        for j in range(1, k + 1):
            ts.append(ev.evaluate(j, 1, f_list[: j - 1], f_list[:j]).chi)
        terms[s.name] = ts
        rhs += sum((-1) ** (k - j) * t for j, t in enumerate(ts, start=1)) * chi
    return GlobalCombination(lhs, rhs, lhs == rhs, mu, terms)
