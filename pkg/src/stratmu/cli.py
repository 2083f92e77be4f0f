"""Command line front end: run engines on a problem file and report.

Exit codes: 0 success with agreement, 2 validation error, 3 engine error,
4 cross-engine disagreement (or a failed identity/property check).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .complexes import (
    ComplexError,
    InfiniteHomology,
    euler_characteristic,
    homology_lengths,
    parse_complex,
    serialize_complex,
)
from .gb_engine import EngineError
from .homological_engine import (
    closure_route,
    global_combination,
    lambda_j_classical,
    lambda_j_complex,
    mu_homological_stratum,
)
from .kosz_enc import enc_complex, koszul_complex, prep_from_complex, prep_generic_complex
from .nash_cech import UnsupportedInstance
from .polar_engine import choose_generic_forms, mu_morse, mu_polar
from .poly_core import PolyError, PolyMatrix, PolyRing, jacobian, parse_poly
from .problem import ENGINES, ProblemError, ProblemInstance, bundled_names, load_problem, validate_problem

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_ENGINE, EXIT_DISAGREE = 0, 2, 3, 4

log = logging.getLogger("stratmu")


# ------------------------------------------------------------------ reports

@dataclass
class MuReport:
    problem: str
    seed: int
    k: int
    engines: list[str]
    strata: list[dict]
    agreement: dict
    global_combination: dict | None
    status: str
    exit_code: int
    errors: list[str] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION
    timing: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        """Machine view; timing is left out so reruns are byte-identical."""
        return {
            "schema_version": self.schema_version,
            "problem": self.problem,
            "seed": self.seed,
            "k": self.k,
            "engines": list(self.engines),
            "strata": self.strata,
            "agreement": self.agreement,
            "global_combination": self.global_combination,
            "status": self.status,
            "exit_code": self.exit_code,
            "errors": list(self.errors),
        }

    @staticmethod
    def from_dict(d: dict) -> "MuReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema_version')}")
        return MuReport(d["problem"], d["seed"], d["k"], d["engines"], d["strata"], d["agreement"],
                        d["global_combination"], d["status"], d["exit_code"], d["errors"], d["schema_version"])


def parse_report(text: str) -> MuReport:
    return MuReport.from_dict(json.loads(text))


def emit_report(report: MuReport, fmt: str = "text") -> bytes:
    if fmt == "machine":
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    return _text_report(report).encode()


def _text_report(r: MuReport) -> str:
    out = [f"problem {r.problem}  (k = {r.k}, seed = {r.seed})", ""]
    out.append(f"{'stratum':<10}{'dim':>4}  {'engine':<15}{'mu':>5}  {'status':<15}detail")
    for s in r.strata:
        for name in sorted(s["engines"]):
            e = s["engines"][name]
            val = "" if e.get("value") is None else str(e["value"])
            out.append(f"{s['name']:<10}{s['dim']:>4}  {name:<15}{val:>5}  {e['status']:<15}{_detail(e)}")
    for s in r.strata:
        for name in sorted(s["engines"]):
            e = s["engines"][name]
            if e.get("summands"):
                out.append("")
                out.append(f"{s['name']} / {name} summands:")
                out.extend("  " + _row(x) for x in e["summands"])
    out.append("")
    for stratum, mat in sorted(r.agreement.items()):
        ok = all(v for row in mat.values() for v in row.values())
        out.append(f"agreement {stratum}: {'yes' if ok else 'NO'}")
    if r.global_combination is not None:
        g = r.global_combination
        out.append(f"global combination: lhs = {g['lhs']}, rhs = {g['rhs']}, equal = {g['equal']}")
    for e in r.errors:
        out.append(f"error: {e}")
    if r.timing:
        out.append("timing: " + ", ".join(f"{k} {v:.2f}s" for k, v in sorted(r.timing.items())))
    out.append(f"status: {r.status} (exit {r.exit_code})")
    return "\n".join(out) + "\n"


def _detail(e: dict) -> str:
    bits = []
    for key in ("route", "mode", "error"):
        if e.get(key):
            bits.append(f"{key}={e[key]}")
    if e.get("forms"):
        bits.append("forms=[" + "; ".join(e["forms"]) + "]")
    return " ".join(bits)


def _row(x: dict) -> str:
    return "  ".join(f"{k}={v}" for k, v in x.items() if k not in ("kosz_entries", "enc_rows", "lengths"))


# ------------------------------------------------------------------ orchestration

def _engine_entry(status: str, value=None, **extra) -> dict:
    d = {"status": status, "value": value}
    d.update(extra)
    return d


def _run_engine(name: str, inst: ProblemInstance, strat, alpha: str, f_list, shared: dict) -> dict:
    forms = shared.get("forms")
    seed = inst.seed
    if name == "polar":
        r = mu_polar(strat, alpha, f_list, seed=seed, forms=forms if shared.get("user_forms") else None)
        if r.forms:
            shared.setdefault("forms", r.forms)
        return _engine_entry(
            "ok", r.value,
            forms=[str(l) for l in r.forms],
            summands=[{"j": s.j, "meet_f": s.meet_f, "meet_l": s.meet_l, "value": s.value} for s in r.summands],
            certificate=r.certificate.as_dict(),
        )
    if name == "morsification":
        if forms is None:
            forms, _ = choose_generic_forms(strat.ring, len(f_list), seed, "forms")
            shared["forms"] = forms
        value, parts = mu_morse(strat, alpha, f_list, forms, t=inst.t_value(), seed=seed)
        return _engine_entry(
            "ok", value,
            mode="family" if inst.t == "family" else "fixed",
            forms=[str(l) for l in forms],
            summands=[{"j": j + 1, "value": p.value} for j, p in enumerate(parts)],
        )
    if name in ("homological", "nash"):
        route = closure_route(strat, alpha)
        if name == "nash" and route != "nash-cech":
            return _engine_entry("not-applicable", None, route=route)
        r = mu_homological_stratum(strat, alpha, f_list, forms if shared.get("user_forms") else None,
                                   formula=inst.formula, seed=seed, truncation=inst.truncation,
                                   cross_check=(name == "homological"))
        entry = _engine_entry(
            "ok", r.value, route=r.route,
            forms=[str(l) for l in r.forms],
            summands=[{"j": j, "plus": p, "minus": m} for j, (p, m) in r.pair_values().items()],
        )
        if r.other_value is not None:
            entry["other_formula_value"] = r.other_value
        if inst.verbose:
            entry["terms"] = [s.as_dict() for s in r.summands]
        return entry
    raise ValueError(f"unknown engine {name}")


def run_problem(inst: ProblemInstance) -> MuReport:
    """Run the requested engines on every stratum and cross-check them."""
    problems = validate_problem(inst)
    k = len(inst.map)
    if problems:
        return MuReport(inst.name, inst.seed, k, inst.engines, [], {}, None, "validation-error",
                        EXIT_VALIDATION, problems)
    strat = inst.stratification()
    f_list = inst.map_polys()
    shared: dict = {}
    if inst.forms:
        shared["forms"] = inst.form_polys()
        shared["user_forms"] = True
    order = [e for e in ENGINES if e in inst.engines]
    strata_out, agreement, errors, timing = [], {}, [], {}
    exit_code = EXIT_OK
    for s in strat.strata:
        entry = {"name": s.name, "dim": s.dim, "engines": {}}
        if s.dim == 0:
            entry["engines"]["convention"] = _engine_entry("ok", 1)
            strata_out.append(entry)
            continue
        for name in order:
            t0 = time.perf_counter()
            try:
                entry["engines"][name] = _run_engine(name, inst, strat, s.name, f_list, shared)
            except UnsupportedInstance as e:
                entry["engines"][name] = _engine_entry("unsupported", None, error=str(e))
            except (EngineError, InfiniteHomology, ComplexError, PolyError, ArithmeticError) as e:
                entry["engines"][name] = _engine_entry("error", None, error=str(e))
                errors.append(f"{s.name}/{name}: {e}")
                exit_code = max(exit_code, EXIT_ENGINE)
            timing[f"{s.name}/{name}"] = time.perf_counter() - t0
            log.info("%s/%s done in %.2fs", s.name, name, timing[f"{s.name}/{name}"])
        vals = {n: e["value"] for n, e in entry["engines"].items() if e["status"] == "ok"}
        agreement[s.name] = {a: {b: vals[a] == vals[b] for b in vals} for a in vals}
        strata_out.append(entry)
    agree = all(v for m in agreement.values() for row in m.values() for v in row.values())
    gc = None
    if inst.chi and exit_code == EXIT_OK:
        mu = {e["name"]: next((x["value"] for x in e["engines"].values() if x["status"] == "ok"), None)
              for e in strata_out}
        try:
            gc = global_combination(strat, f_list, inst.chi, seed=inst.seed,
                                    mu_values={a: v for a, v in mu.items() if v is not None},
                                    truncation=inst.truncation).as_dict()
        except (EngineError, InfiniteHomology, KeyError) as e:
            errors.append(f"global combination: {e}")
            exit_code = EXIT_ENGINE
    if exit_code == EXIT_OK and (not agree or (gc is not None and not gc["equal"])):
        exit_code = EXIT_DISAGREE
    status = {EXIT_OK: "ok", EXIT_ENGINE: "engine-error", EXIT_DISAGREE: "disagreement"}[exit_code]
    return MuReport(inst.name, inst.seed, k, order, strata_out, agreement, gc, status, exit_code, errors,
                    timing=timing)


# ------------------------------------------------------------------ icis

def run_icis(inst: ProblemInstance) -> dict:
    """Classical formula on the map components, colength and complex routes."""
    f_list = inst.map_polys()
    k = len(f_list)
    lam = [lambda_j_classical(f_list, j) for j in range(1, k + 1)]
    lam_c = [lambda_j_complex(f_list, j) for j in range(1, k + 1)]
    mu = sum((-1) ** (j - 1) * v for j, v in enumerate(lam, start=1))
    mu_c = sum((-1) ** (j - 1) * v for j, v in enumerate(lam_c, start=1))
    return {"schema_version": SCHEMA_VERSION, "problem": inst.name, "lambda": lam, "lambda_complex": lam_c,
            "mu": mu, "mu_complex": mu_c, "agree": lam == lam_c and mu >= 0}


# ------------------------------------------------------------------ check

def run_checks(inst: ProblemInstance) -> list[tuple[str, bool, str]]:
    """Property suite on one problem: (name, passed, detail) triples."""
    out = []
    f_list = inst.map_polys()
    ring = PolyRing(inst.variables)
    k = len(f_list)
    # d∘d = 0 on the classical complexes of the map
    ok = True
    for p in range(1, k + 1):
        J = jacobian(f_list[:p], ring)
        for C in (koszul_complex(ring, f_list[: p - 1]) if p > 1 else None, enc_complex(ring, J)):
            if C is not None:
                ok = ok and all((C.d(q + 1) * C.d(q)).is_zero() for q in range(C.lo, C.hi - 1))
    out.append(("d∘d = 0 on Kosz(f) and ENC(Jac f)", ok, ""))
    # ENC of one row is the Koszul complex of its entries
    row = PolyMatrix(ring, 1, ring.nvars, [f_list[0].gradient()])
    E, K = enc_complex(ring, row), koszul_complex(ring, f_list[0].gradient())
    same = E.ranks == K.ranks and all(E.d(q).to_lists() == K.d(q).to_lists() for q in range(E.lo, E.hi))
    out.append(("ENC(df_1) equals Kosz(∂f_1)", same, ""))
    # seed independence and non-negative summands
    strat = inst.stratification()
    for s in strat.strata:
        if s.dim == 0:
            continue
        vals = []
        for seed in (inst.seed, inst.seed + 1, inst.seed + 2):
            try:
                vals.append(mu_polar(strat, s.name, f_list, seed=seed).value)
            except EngineError as e:
                vals.append(f"error: {e}")
        out.append((f"{s.name}: polar μ independent of seed", len(set(map(str, vals))) == 1, str(vals)))
        try:
            r = mu_homological_stratum(strat, s.name, f_list, seed=inst.seed, truncation=inst.truncation)
            neg = [x.chi for x in r.summands if x.chi < 0]
            out.append((f"{s.name}: every Lê–Greuel summand χ >= 0", not neg, str([x.chi for x in r.summands])))
            out.append((f"{s.name}: first and second formulas agree", r.other_value == r.value,
                        f"{r.value} vs {r.other_value}"))
        except UnsupportedInstance as e:
            out.append((f"{s.name}: homological route", True, f"skipped: {e}"))
    report = run_problem(inst)
    out.append(("cross-engine agreement", report.exit_code == EXIT_OK, report.status))
    return out


# ------------------------------------------------------------------ main

def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="random seed for generic linear forms")
    p.add_argument("--engines", default=None, help=f"comma separated subset of {','.join(ENGINES)}")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    p.add_argument("--t", default=None, help="Morsification parameter: 'family' or a nonzero rational")
    p.add_argument("--truncation", type=int, default=None, help="starting truncation degree for the Nash route")
    p.add_argument("--verbose", action="store_true")


def _load(args) -> ProblemInstance:
    from .problem import _engine_list, _t_option
    inst = load_problem(args.problem)
    try:
        if args.seed is not None:
            inst.seed = args.seed
        if args.engines:
            inst.engines = _engine_list(args.engines)
        if args.t is not None:
            inst.t = _t_option(args.t)
    except ValueError as e:
        raise ProblemError(str(e), "command line") from e
    if args.truncation is not None:
        inst.truncation = args.truncation
    inst.verbose = inst.verbose or args.verbose
    return inst


def _write(data: bytes):
    sys.stdout.buffer.write(data)
    sys.stdout.flush()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stratmu", description="Milnor numbers of maps on stratified spaces.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("mu", help="run the engines on a problem and cross-check")
    p.add_argument("problem", help="problem file or bundled name")
    _common(p)
    p = sub.add_parser("icis", help="classical formula for the map on the ambient space")
    p.add_argument("problem")
    _common(p)
    p = sub.add_parser("check", help="run the property suite on a problem")
    p.add_argument("problem")
    _common(p)
    p = sub.add_parser("prep", help="emit the generic complex of a stratum closure")
    p.add_argument("problem")
    p.add_argument("--stratum", required=True)
    p.add_argument("--kosz", type=int, default=0, help="number of Koszul entries")
    p.add_argument("--rows", type=int, default=1, help="number of ENC rows")
    p.add_argument("-o", "--output", default=None)
    _common(p)
    p = sub.add_parser("subst", help="substitute data into a generic complex")
    p.add_argument("complex", help="file written by 'stratmu prep'")
    p.add_argument("--entry", action="append", default=[], help="Koszul entry (repeatable)")
    p.add_argument("--row", action="append", default=[], help="function whose differential is an ENC row (repeatable)")
    p.add_argument("--chi", action="store_true", help="also report homology lengths and χ")
    p.add_argument("-o", "--output", default=None)
    sub.add_parser("list", help="list bundled problems")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return _dispatch(args)
    except ProblemError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (EngineError, InfiniteHomology, ComplexError, PolyError) as e:
        print(f"engine error: {e}", file=sys.stderr)
        return EXIT_ENGINE


def _dispatch(args) -> int:
    if args.command == "list":
        print("\n".join(bundled_names()))
        return EXIT_OK
    if args.command == "subst":
        return _subst(args)
    inst = _load(args)
    if args.command == "mu":
        report = run_problem(inst)
        _write(emit_report(report, args.format))
        return report.exit_code
    problems = validate_problem(inst)
    if problems:
        raise ProblemError("; ".join(problems), inst.name)
    if args.command == "icis":
        res = run_icis(inst)
        if args.format == "machine":
            _write((json.dumps(res, sort_keys=True, indent=2) + "\n").encode())
        else:
            print(f"lambda_j (colength): {res['lambda']}")
            print(f"lambda_j (complex):  {res['lambda_complex']}")
            print(f"mu = {res['mu']}  (complex route {res['mu_complex']}, agree = {res['agree']})")
        return EXIT_OK if res["agree"] else EXIT_DISAGREE
    if args.command == "check":
        results = run_checks(inst)
        for name, ok, detail in results:
            print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))
        return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_DISAGREE
    if args.command == "prep":
        strat = inst.stratification()
        a = strat.get(args.stratum)
        prep = prep_generic_complex(a.ideal, args.kosz, args.rows)
        text = serialize_complex(prep.complex)
        _emit_text(text, args.output)
        return EXIT_OK
    raise AssertionError(args.command)


def _emit_text(text: str, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _subst(args) -> int:
    try:
        C = parse_complex(Path(args.complex).read_text())
    except OSError as e:
        raise ProblemError(str(e), args.complex) from e
    prep = prep_from_complex(C)
    base = prep.base_ring.ambient()
    try:
        entries = [parse_poly(base, e) for e in args.entry]
        rows = [parse_poly(base, r) for r in args.row]
    except PolyError as e:
        raise ProblemError(str(e), "command line") from e
    omega = PolyMatrix(base, len(rows), base.nvars, [r.gradient() for r in rows])
    D = prep.substitute(entries, omega)
    text = serialize_complex(D)
    if args.chi:
        lengths = homology_lengths(D)
        chi = euler_characteristic(D, lengths)
        text += "# lengths: " + " ".join(f"H^{p}={v}" for p, v in lengths) + "\n"
        text += f"# chi: {chi - prep.correction} (complex {chi}, correction {prep.correction})\n"
    _emit_text(text, args.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
