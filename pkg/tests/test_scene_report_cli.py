import json
import math
import subprocess
import sys

import pytest
import sympy as sp

from chiral_einstein import cli
from chiral_einstein.report import FAIL, PASS, TOO_TIGHT, Check, Report
from chiral_einstein.riemann4 import Metric
from chiral_einstein.scene import HYPERBOLIC_SCENE, SceneError, parse_scene
from chiral_einstein.so3conn import So3Connection
from chiral_einstein.symcalc import DslError, DslNameError, DslSyntaxError, parse_expr


@pytest.fixture
def h4_scene(tmp_path):
    p = tmp_path / "h4.scene"
    p.write_text(HYPERBOLIC_SCENE)
    return p


# ----------------------------------------------------------------------
# scene parsing


def test_hyperbolic_scene_parses():
    sc = parse_scene(HYPERBOLIC_SCENE)
    assert sc.names == ["A", "g"]
    assert isinstance(sc.get("g"), Metric) and isinstance(sc.get("A"), So3Connection)
    rho = sc.chart.symbols[0]
    assert sc.get("g").matrix == sp.eye(4) / rho**2
    assert sc.chart.boundary == "rho"


def test_sections_and_boxes():
    sc = parse_scene("chart a b c d; box a 1 3; section u = (a, b^2, 0);")
    assert sc.chart.box[0] == (1.0, 3.0)
    assert sc.get("u")[1] == sc.chart.symbols[1] ** 2
    with pytest.raises(KeyError):
        sc.get("v")


@pytest.mark.parametrize("src,exc,line,col", [
    ("chart a b c d;\nsection u = (a, a +* b, 0);", DslSyntaxError, 2, 20),
    ("chart a b c d;\nsection u = (a, z, 0);", DslNameError, 2, 17),
    ("section u = (1, 2, 3);", SceneError, 1, 1),
    ("chart a b c d;\n  frobnicate x;", DslSyntaxError, 2, 3),
    ("chart a b c d;\nsection u = (a, b);", SceneError, 2, 14),
    ("chart a b c d;\nsection u = (a, b, c);\nsection u = (a, b, c);", SceneError, 3, 9),
    ("chart a a c d;", SceneError, 1, 6),
])
def test_scene_errors_carry_positions(src, exc, line, col):
    with pytest.raises(exc) as info:
        parse_scene(src)
    assert (info.value.line, info.value.column) == (line, col)


def test_comments_do_not_shift_columns():
    src = "# header\nchart a b c d; # trailing\nsection u = (a, ), 0);"
    with pytest.raises(DslError) as info:
        parse_scene(src)
    assert info.value.line == 3


def test_connection_needs_all_components():
    with pytest.raises(SceneError, match="a1, a2 and a3"):
        parse_scene("chart a b c d; connection A = (a1: [0, 0, 0, 0], a2: [0, 0, 0, 0]);")


# ----------------------------------------------------------------------
# reports


def test_check_statuses():
    assert Check("x", "", 1e-9, 1e-8).status == PASS
    assert Check("x", "", 1e-9, 1e-12, native_tolerance=1e-8).status == TOO_TIGHT
    assert Check("x", "", 1e-3, 1e-12, native_tolerance=1e-8).status == FAIL
    assert Check("x", "", math.nan, 1.0).status == FAIL
    assert Check("x", "", math.inf, 1.0, native_tolerance=math.inf).status == FAIL


def test_report_json_is_sorted_and_finite():
    rep = Report("demo", 3, None, [Check("b", "", math.inf, 1.0), Check("a", "", 0.0, 1.0, metadata={"v": [1.5]})])
    d = json.loads(rep.to_json())
    assert d["schema"] == "chiral-einstein/1" and d["passed"] is False
    assert [c["name"] for c in d["checks"]] == ["a", "b"]
    assert d["checks"][1]["residual"] == "inf"
    assert "1/2 checks pass" in rep.to_text()


# ----------------------------------------------------------------------
# command line


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_passes_and_is_deterministic(capsys):
    c1, out1, _ = run(capsys, "verify", "--suite", "algebra", "--format", "json", "--seed", "5")
    c2, out2, _ = run(capsys, "verify", "--suite", "algebra", "--format", "json", "--seed", "5")
    assert c1 == c2 == 0 and out1 == out2
    assert json.loads(out1)["seed"] == 5


def test_tolerance_too_tight(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "algebra", "--format", "json", "--tol", "1e-12")
    statuses = {c["name"]: c["status"] for c in json.loads(out)["checks"]}
    assert code == 1 and TOO_TIGHT in statuses.values() and FAIL not in statuses.values()


def test_usage_errors_exit_2(capsys, h4_scene, tmp_path):
    assert run(capsys, "verify", "--suite", "nope")[0] == 2
    code, _, err = run(capsys, "compute", str(h4_scene), "B")
    assert code == 2 and "A, g" in err
    assert run(capsys, "compute", str(tmp_path / "missing"), "A")[0] == 2
    bad = tmp_path / "bad.scene"
    bad.write_text("chart a b c d;\nsection u = (a +, 0, 0);")
    code, _, err = run(capsys, "compute", str(bad), "u")
    assert code == 2 and "line 2" in err
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"n_rho": 16, "typo": 1}')
    code, _, err = run(capsys, "model", "--config", str(cfg))
    assert code == 2 and "typo" in err
    code, _, err = run(capsys, "compute", str(h4_scene), "g", "--what", "sign")
    assert code == 2 and "metric" in err


def test_compute_einstein_on_hyperbolic_scene(capsys, h4_scene):
    code, out, _ = run(capsys, "compute", str(h4_scene), "A", "--what", "einstein", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["passed"]
    ricci = next(c for c in d["checks"] if c["name"] == "einstein.ricci")
    assert ricci["metadata"]["sign"] == -1
    assert ricci["metadata"]["scalar_curvature"] == pytest.approx(-12)


def test_compute_metric_and_curvature(capsys, h4_scene):
    code, out, _ = run(capsys, "compute", str(h4_scene), "A", "--what", "metric", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["metadata"]["method"] == "symbolic"
    ch = parse_scene(HYPERBOLIC_SCENE).chart
    g00 = parse_expr(d["metadata"]["g_A"][0][0], ch)
    assert sp.simplify(g00 - ch.symbols[0] ** -2) == 0
    code, out, _ = run(capsys, "compute", str(h4_scene), "g", "--what", "curvature", "--format", "json")
    assert code == 0 and json.loads(out)["metadata"]["scalar"] == "-12"


def test_console_entry_point(h4_scene):
    r = subprocess.run([sys.executable, "-m", "chiral_einstein.cli", "verify", "--suite", "nope"],
                       capture_output=True, text=True)
    assert r.returncode == 2 and r.stderr.startswith("error:")
