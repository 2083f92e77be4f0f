"""Problem files: a sectioned plain-text format.

    # comment
    [ring]
    variables = x y z

    [strata]
    V1 : dim 2 : x*y - z^2
    V0 : dim 0 : x, y, z

    [map]
    f1 = y - x^3

    [forms]                # optional, one linear form per map component
    l1 = x + 2*y + 3*z

    [options]              # all optional
    engines = polar, morsification, homological
    seed = 0
    t = family             # or a nonzero rational such as 1/64
    truncation = 8
    formula = first
    chi.V1 = 1             # χ(X, V^α) for the global combination
    chi.V0 = 1

Strata lines are ``name : dim d : generators``; an empty generator list
means the whole ambient space.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .poly_core import PolyError, PolyRing, Polynomial, parse_poly
from .polar_engine import Stratification

ENGINES = ("polar", "morsification", "homological", "nash")
SECTIONS = ("ring", "strata", "map", "forms", "options")


class ProblemError(ValueError):
    """Parse or validation error with a source position."""

    def __init__(self, message: str, source: str = "<problem>", line: int = 0, col: int = 0):
        self.message, self.source, self.line, self.col = message, source, line, col
        where = f"{source}:{line}:{col}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass
class ProblemInstance:
    name: str
    variables: list[str]
    strata: list[tuple[str, int, list[str]]]
    map: list[tuple[str, str]]
    forms: list[tuple[str, str]] = field(default_factory=list)
    engines: list[str] = field(default_factory=lambda: list(ENGINES[:3]))
    seed: int = 0
    t: str = "family"
    truncation: int | None = None
    formula: str = "first"
    chi: dict[str, int] = field(default_factory=dict)
    verbose: bool = False

    @property
    def ring(self) -> PolyRing:
        return PolyRing(self.variables)

    def map_polys(self) -> list[Polynomial]:
        R = self.ring
        return [parse_poly(R, e) for _, e in self.map]

    def form_polys(self) -> list[Polynomial] | None:
        if not self.forms:
            return None
        R = self.ring
        return [parse_poly(R, e) for _, e in self.forms]

    def stratification(self) -> Stratification:
        R = self.ring
        return Stratification.from_closures(R, [(n, [parse_poly(R, g) for g in gens], d) for n, d, gens in self.strata])

    def t_value(self):
        return None if self.t == "family" else Fraction(self.t)


def _split_list(text: str) -> list[str]:
    return [p.strip() for p in re.split(r"[,\s]+", text.strip()) if p.strip()]


def _split_gens(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def parse_problem(text: str, source: str = "<problem>", name: str | None = None) -> ProblemInstance:
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = re.fullmatch(r"\s*\[(\w+)\]\s*", line)
        if m:
            current = m.group(1)
            if current not in SECTIONS:
                raise ProblemError(f"unknown section [{current}]", source, lineno, 1)
            if current in sections:
                raise ProblemError(f"duplicate section [{current}]", source, lineno, 1)
            sections[current] = []
            continue
        if current is None:
            raise ProblemError("content before the first section header", source, lineno, 1)
        sections[current].append((lineno, line))

    def pairs(sec: str) -> list[tuple[int, str, str, int]]:
        out = []
        for lineno, line in sections.get(sec, []):
            if "=" not in line:
                raise ProblemError("expected 'key = value'", source, lineno, 1)
            k, v = line.split("=", 1)
            # 1-based column of the first character of the value
            out.append((lineno, k.strip(), v.strip(), len(k) + 2 + len(v) - len(v.lstrip())))
        return out

    if "ring" not in sections:
        raise ProblemError("missing [ring] section", source)
    variables = None
    for lineno, k, v, col in pairs("ring"):
        if k != "variables":
            raise ProblemError(f"unknown ring key {k!r}", source, lineno, 1)
        variables = _split_list(v)
    if not variables:
        raise ProblemError("[ring] needs 'variables = ...'", source)
    if len(set(variables)) != len(variables):
        raise ProblemError("duplicate variable names", source)
    try:
        ring = PolyRing(variables)
    except PolyError as e:
        raise ProblemError(str(e), source) from e

    def poly(text: str, lineno: int, col: int) -> str:
        try:
            parse_poly(ring, text)
        except PolyError as e:
            raise ProblemError(f"bad polynomial {text!r}: {e}", source, lineno, col) from e
        return text

    strata = []
    for lineno, line in sections.get("strata", []):
        parts = line.split(":")
        if len(parts) != 3:
            raise ProblemError("expected 'name : dim d : generators'", source, lineno, 1)
        sname = parts[0].strip()
        m = re.fullmatch(r"\s*dim\s+(\d+)\s*", parts[1])
        if not re.fullmatch(r"[A-Za-z_]\w*", sname):
            raise ProblemError(f"bad stratum name {sname!r}", source, lineno, 1)
        if not m:
            raise ProblemError("expected 'dim <integer>'", source, lineno, len(parts[0]) + 2)
        col = len(parts[0]) + len(parts[1]) + 3 + len(parts[2]) - len(parts[2].lstrip())
        gens = [poly(g, lineno, col) for g in _split_gens(parts[2])]
        strata.append((sname, int(m.group(1)), gens))

    fmap = [(k, poly(v, ln, c)) for ln, k, v, c in pairs("map")]
    forms = [(k, poly(v, ln, c)) for ln, k, v, c in pairs("forms")]
    inst = ProblemInstance(name or Path(source).stem, variables, strata, fmap, forms)
    for lineno, k, v, col in pairs("options"):
        try:
            if k == "engines":
                inst.engines = _engine_list(v)
            elif k == "seed":
                inst.seed = int(v)
            elif k == "t":
                inst.t = _t_option(v)
            elif k == "truncation":
                inst.truncation = int(v)
            elif k == "formula":
                if v not in ("first", "second"):
                    raise ValueError("formula must be 'first' or 'second'")
                inst.formula = v
            elif k == "verbose":
                inst.verbose = v.lower() in ("1", "true", "yes")
            elif k.startswith("chi."):
                inst.chi[k[4:]] = int(v)
            else:
                raise ValueError(f"unknown option {k!r}")
        except ValueError as e:
            raise ProblemError(str(e), source, lineno, col) from e
    return inst


def _engine_list(text: str) -> list[str]:
    names = _split_list(text)
    bad = [n for n in names if n not in ENGINES]
    if bad or not names:
        raise ValueError(f"unknown engine(s) {', '.join(bad) or '(none)'}; choose from {', '.join(ENGINES)}")
    return names


def _t_option(text: str) -> str:
    text = text.strip()
    if text == "family":
        return text
    t = Fraction(text)
    if t == 0:
        raise ValueError("t must be nonzero")
    return str(t)


def validate_problem(inst: ProblemInstance) -> list[str]:
    """Semantic checks; returns problems (empty when the instance is usable)."""
    problems = []
    n = len(inst.variables)
    if not inst.strata:
        problems.append("stratification has no strata")
    if not inst.map:
        problems.append("map has no components")
    if len(inst.map) > n:
        problems.append(f"map has {len(inst.map)} components but the ring has only {n} variables")
    if inst.forms and len(inst.forms) != len(inst.map):
        problems.append("[forms] must list one linear form per map component")
    for name in inst.chi:
        if name not in {s[0] for s in inst.strata}:
            problems.append(f"chi.{name} refers to an unknown stratum")
    if problems:
        return problems
    for f in inst.map_polys():
        if f.constant_term() != 0:
            problems.append(f"map component {f} does not vanish at the origin")
    for l in inst.form_polys() or []:
        if l.total_degree() != 1 or l.constant_term() != 0:
            problems.append(f"form {l} is not a linear form")
    names = [s[0] for s in inst.strata]
    if len(set(names)) != len(names):
        problems.append("duplicate stratum names")
        return problems
    problems.extend(inst.stratification().validate())
    return problems


def bundled_names() -> list[str]:
    root = resources.files("stratmu") / "problems"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".prob"))


def load_problem(path_or_name: str) -> ProblemInstance:
    """Read a problem from a path, or by bundled name (e.g. 'sym2x2_k3')."""
    p = Path(path_or_name)
    if p.exists():
        return parse_problem(p.read_text(), str(p))
    res = resources.files("stratmu") / "problems" / f"{path_or_name}.prob"
    if res.is_file():
        return parse_problem(res.read_text(), f"{path_or_name}.prob", path_or_name)
    raise ProblemError(f"no such problem file or bundled problem: {path_or_name}")
