import json

import pytest

from stratmu.cli import emit_report, main, parse_report, run_problem
from stratmu.problem import ProblemError, bundled_names, load_problem, parse_problem, validate_problem

SYM = """\
[ring]
variables = x y z

[strata]
V1 : dim 2 : x*y - z^2
V0 : dim 0 : x, y, z

[map]
f1 = y - x^3

[options]
engines = polar, morsification, homological
chi.V1 = 1
chi.V0 = 1
"""


def write(tmp_path, text, name="p.prob"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_error_positions():
    with pytest.raises(ProblemError) as e:
        parse_problem(SYM.replace("y - x^3", "y - x^^3"), "bad.prob")
    assert (e.value.line, e.value.col) == (9, 6)
    assert str(e.value).startswith("bad.prob:9:6: bad polynomial")
    with pytest.raises(ProblemError) as e:
        parse_problem(SYM.replace("dim 2", "dimension 2"), "bad.prob")
    assert e.value.line == 5
    with pytest.raises(ProblemError) as e:
        parse_problem(SYM + "colour = blue\n", "bad.prob")
    assert e.value.line == 15 and e.value.message.startswith("unknown option")
    with pytest.raises(ProblemError):
        parse_problem("[rings]\n", "bad.prob")


def test_validation_messages():
    inst = parse_problem(SYM)
    assert validate_problem(inst) == []
    inst.chi["V9"] = 1
    assert validate_problem(inst) == ["chi.V9 refers to an unknown stratum"]
    shifted = parse_problem(SYM.replace("y - x^3", "y - x^3 + 1"))
    assert validate_problem(shifted) == ["map component -x^3 + y + 1 does not vanish at the origin"]


def test_empty_stratification_exits_with_validation_code(tmp_path, capsys):
    text = SYM.split("[strata]")[0] + "[strata]\n\n[map]\nf1 = y - x^3\n"
    assert main(["mu", write(tmp_path, text)]) == 2
    out = capsys.readouterr().out
    assert "error: stratification has no strata" in out
    assert out.endswith("status: validation-error (exit 2)\n")
    assert main(["mu", "no_such_problem"]) == 2


def test_machine_report_round_trip_and_determinism(tmp_path, capsys):
    path = write(tmp_path, SYM)
    assert main(["mu", path, "--format", "machine"]) == 0
    first = capsys.readouterr().out
    assert main(["mu", path, "--format", "machine"]) == 0
    assert capsys.readouterr().out == first
    report = parse_report(first)
    assert emit_report(report, "machine").decode() == first
    data = json.loads(first)
    assert data["schema_version"] == 1 and "timing" not in data
    values = {s["name"]: {e: v["value"] for e, v in s["engines"].items()} for s in data["strata"]}
    assert values["V1"] == {"polar": 2, "morsification": 2, "homological": 2}
    assert data["global_combination"]["equal"] is True


def test_text_report_has_one_row_per_stratum_and_engine():
    report = run_problem(parse_problem(SYM, name="sym"))
    lines = emit_report(report).decode().splitlines()
    rows = [ln for ln in lines if ln.startswith(("V1 ", "V0 ")) and not ln.endswith("summands:")]
    # the point stratum carries the conventional value instead of engine runs
    expected = ["V1 polar 2", "V1 morsification 2", "V1 homological 2", "V0 convention 1"]
    assert sorted(" ".join(r.split()[i] for i in (0, 2, 3)) for r in rows) == sorted(expected)
    assert lines[-1] == "status: ok (exit 0)"


def test_seed_and_engine_overrides(tmp_path, capsys):
    path = write(tmp_path, SYM)
    assert main(["mu", path, "--seed", "7", "--engines", "polar", "--format", "machine"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["seed"] == 7 and data["engines"] == ["polar"]
    assert main(["mu", path, "--engines", "polar,bogus"]) == 2
    assert main(["mu", path, "--t", "0"]) == 2


def test_icis_and_check_commands(tmp_path, capsys):
    assert main(["icis", "icis_quadric_xy"]) == 0
    assert "mu = 5" in capsys.readouterr().out
    assert main(["check", write(tmp_path, SYM)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 5


def test_prep_and_substitute(tmp_path, capsys):
    prob = write(tmp_path, SYM)
    cplx = str(tmp_path / "prep.cplx")
    assert main(["prep", prob, "--stratum", "V1", "--rows", "1", "-o", cplx]) == 0
    for k in (2, 3, 4):
        assert main(["subst", cplx, "--row", f"y - x^{k}", "--chi"]) == 0
        chi = [ln for ln in capsys.readouterr().out.splitlines() if ln.startswith("# chi:")][0]
        flat = main(["subst", cplx, "--row", "x + 2*y + 3*z", "--chi"])
        lin = [ln for ln in capsys.readouterr().out.splitlines() if ln.startswith("# chi:")][0]
        assert flat == 0
        assert int(chi.split()[2]) - int(lin.split()[2]) == k - 1
    assert main(["subst", cplx, "--row", "y -"]) == 2


def test_bundled_problems_are_listed_and_valid():
    names = bundled_names()
    assert {"sym2x2_k3", "full2x2_k3", "full2x2_ci_k5", "icis_quadric_xy"} <= set(names)
    for n in names:
        assert validate_problem(load_problem(n)) == [], n


@pytest.mark.parametrize("name", ["sym2x2_k3", "full2x2_k3", "full2x2_ci_k5", "plane_curve_k4", "icis_quadric_xy"])
def test_bundled_problems_agree(name, capsys):
    assert main(["mu", name, "--format", "machine"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["status"] == "ok"
