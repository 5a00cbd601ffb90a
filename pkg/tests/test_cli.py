import json
import math
import os

import jsonschema
import numpy as np
import pytest

from cuspidal import CrossSectionPoint
from cuspidal.cli import main
from cuspidal.errors import RobotFileSyntaxError, RobotValidationError
from cuspidal.report import dumps, emit_csv, load_schema
from cuspidal.robotfile import parse_robot_file
from cuspidal.svgplot import render_c3s3

from conftest import ELLIPSE_ROBOT, REFERENCE, TEST_GRID

BATTERY = os.path.join(os.path.dirname(__file__), "..", "robots", "battery.json")


def _write_robot(tmp_path, name="bot", d=(0, 1, 0), a=(1, 2, 1.5),
                 alpha=(-math.pi / 2, math.pi / 2, 0), extra=None):
    entry = {"d": list(d), "a": list(a), "alpha": list(alpha)}
    if extra:
        entry.update(extra)
    path = tmp_path / "robot.json"
    path.write_text(json.dumps({name: entry}))
    return str(path)


# --------------------------------------------------------------------------
# robot files
# --------------------------------------------------------------------------

def test_parse_battery_file():
    spec = parse_robot_file(BATTERY)
    assert "orthogonal_cuspidal" in spec.robots
    name, p = spec.get("orthogonal_cuspidal")
    assert p.a3 == 1.5


def test_parse_rejects_nonzero_alpha3(tmp_path):
    path = _write_robot(tmp_path, alpha=(-1.5, 1.5, 0.1))
    with pytest.raises(RobotValidationError):
        parse_robot_file(path)


def test_parse_rejects_degenerate_a3(tmp_path):
    path = _write_robot(tmp_path, a=(1, 2, 0.0))
    with pytest.raises(RobotValidationError):
        parse_robot_file(path)


def test_parse_rejects_unknown_keys(tmp_path):
    path = _write_robot(tmp_path, extra={"beta": [1, 2, 3]})
    with pytest.raises(RobotValidationError):
        parse_robot_file(path)


def test_parse_reports_syntax_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n "x": {"d": [0,1,0],\n}')
    with pytest.raises(RobotFileSyntaxError) as err:
        parse_robot_file(str(path))
    assert err.value.line >= 2


def test_get_needs_name_for_multi_robot_files():
    spec = parse_robot_file(BATTERY)
    with pytest.raises(RobotValidationError):
        spec.get(None)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def test_dumps_is_deterministic_and_sorted():
    doc = {"b": 1.5, "a": [1, 2.25, None, True], "c": {"y": "x"}}
    s1 = dumps(doc)
    s2 = dumps({"c": {"y": "x"}, "a": [1, 2.25, None, True], "b": 1.5})
    assert s1 == s2
    assert s1.index('"a"') < s1.index('"b"') < s1.index('"c"')
    assert s1.endswith("\n")


def test_dumps_rejects_nan():
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


def test_emit_csv_format(tmp_path):
    path = tmp_path / "out.csv"
    emit_csv(str(path), ["rho", "z"], [(1.0 / 3.0, 2), (0.25, -1)])
    data = path.read_bytes()
    assert data == b"rho,z\n0.333333333333,2\n0.25,-1\n"
    emit_csv(str(path), ["rho", "z"], [(1.0 / 3.0, 2), (0.25, -1)])
    assert path.read_bytes() == data


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def test_cmd_fk(capsys):
    rc = main(["fk", "--robot", BATTERY, "--name", "orthogonal_cuspidal",
               "--config", "0,0,0"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["pose"]["x"] == pytest.approx(4.5)
    assert doc["cross_section"]["rho"] == pytest.approx(math.hypot(4.5, 1.0))


def test_cmd_fk_simple_chain(tmp_path, capsys):
    path = _write_robot(tmp_path, d=(0, 0, 0), a=(1, 1, 1), alpha=(0.3, 0, 0))
    # alpha1 = 0 would be rejected; use a twist and verify x only at q = 0
    rc = main(["fk", "--robot", path, "--config", "0,0,0"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["pose"]["x"] == pytest.approx(3.0)


def test_cmd_ik_unreachable(capsys):
    rc = main(["ik", "--robot", BATTERY, "--name", "orthogonal_cuspidal",
               "--point", "40,0"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["solutions"] == []
    assert doc["count_with_multiplicity"] == 0


def test_cmd_ik_node_point(capsys, analysis):
    from conftest import NODE_ROBOT

    node = max(analysis.nodes(NODE_ROBOT), key=lambda n: n.z)
    rc = main(["ik", "--robot", BATTERY, "--name", "orthogonal_node",
               "--point", f"{node.rho!r},{node.z!r}"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert [s["multiplicity"] for s in doc["solutions"]] == [2, 2]


def test_cmd_critical_writes_csv(tmp_path, capsys):
    rc = main(["critical", "--robot", BATTERY, "--name", "orthogonal_cuspidal",
               "--grid", "128", "--out", str(tmp_path), "--format", "json,csv"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["curves"] == 2
    files = sorted(os.listdir(tmp_path))
    assert any(f.endswith("joint-00.csv") for f in files)
    joint = (tmp_path / "orthogonal_cuspidal.critical.joint-00.csv").read_text()
    lines = joint.splitlines()
    assert lines[0] == "theta2,theta3"
    assert len(lines) == doc["vertices"][0] + 1


def test_cmd_cusps_csv_schema(tmp_path, capsys):
    rc = main(["cusps", "--robot", BATTERY, "--name", "orthogonal_cuspidal",
               "--grid", "240", "--out", str(tmp_path), "--format", "json,csv"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["cusps"]) == 4
    header = (tmp_path / "orthogonal_cuspidal.cusps.csv").read_text().splitlines()[0]
    assert header == "rho,z,t,resM,resM1,resM2,absM3"


def test_cmd_path(capsys):
    rc = main(["path", "--robot", BATTERY, "--name", "orthogonal_cuspidal",
               "--grid", "240",
               "--config", "0,-0.742,2.628", "--config", "0,-3,-0.5"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["found"] and doc["valid"]


def test_cmd_aspects(capsys):
    rc = main(["aspects", "--robot", BATTERY, "--name", "orthogonal_cuspidal",
               "--grid", "128"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["aspect_count"] == 2
    assert doc["reduced_aspect_count"] > 2


def test_cmd_pseudo(tmp_path, capsys):
    rc = main(["pseudo", "--robot", BATTERY, "--name", "orthogonal_cuspidal",
               "--grid", "128", "--out", str(tmp_path), "--format", "csv"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["points"] > 0
    assert any(f.startswith("orthogonal_cuspidal.pseudo-") for f in os.listdir(tmp_path))


def test_error_exit_code(tmp_path, capsys):
    path = _write_robot(tmp_path, a=(1, 2, 0.0))
    rc = main(["classify", "--robot", path])
    assert rc == 1


def test_unknown_robot_name_errors(capsys):
    rc = main(["fk", "--robot", BATTERY, "--name", "missing", "--config", "0,0,0"])
    assert rc == 1


# --------------------------------------------------------------------------
# classify: exit codes, determinism, schema
# --------------------------------------------------------------------------

CLASSIFY_ARGS = ["--grid", "240", "--census", "96", "--samples", "120"]


def test_classify_cuspidal_exit_and_report(tmp_path, capsys):
    rc = main(["classify", "--robot", BATTERY, "--name", "orthogonal_cuspidal",
               *CLASSIFY_ARGS, "--out", str(tmp_path), "--format", "json,csv,svg"])
    assert rc == 2
    doc = json.loads(capsys.readouterr().out)
    jsonschema.validate(doc, load_schema())
    assert doc["verdict"] == "cuspidal"
    assert len(doc["cusps"]) == 4
    assert doc["cross_validation"]["agrees"] is True
    report = json.loads((tmp_path / "orthogonal_cuspidal.report.json").read_text())
    assert report == doc
    svg = (tmp_path / "orthogonal_cuspidal.workspace.svg").read_text()
    assert svg.count('<circle class="cusp-marker"') == 4


def test_classify_noncuspidal_exit(tmp_path, capsys):
    rc = main(["classify", "--robot", BATTERY, "--name", "nonortho_noncuspidal",
               *CLASSIFY_ARGS, "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    jsonschema.validate(doc, load_schema())
    assert doc["verdict"] == "non-cuspidal"
    assert doc["cusps"] == []


def test_classify_non_generic_exit(tmp_path, capsys):
    path = _write_robot(tmp_path, d=(0, 0, 0), a=(1, 2, 1.5))
    rc = main(["classify", "--robot", path, *CLASSIFY_ARGS, "--out", str(tmp_path)])
    assert rc == 3
    doc = json.loads(capsys.readouterr().out)
    jsonschema.validate(doc, load_schema())
    assert doc["verdict"] == "non-generic"
    assert doc["genericity"]["evidence"]


def test_classify_byte_identical_reruns(tmp_path, capsys):
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        rc = main(["classify", "--robot", BATTERY, "--name", "orthogonal_node",
                   *CLASSIFY_ARGS, "--out", str(out), "--format", "json,csv,svg"])
        assert rc == 0
        capsys.readouterr()
        outs.append(out)
    for fname in sorted(os.listdir(outs[0])):
        b1 = (outs[0] / fname).read_bytes()
        b2 = (outs[1] / fname).read_bytes()
        assert b1 == b2, f"{fname} differs between reruns"


# --------------------------------------------------------------------------
# plots
# --------------------------------------------------------------------------

def test_plot_workspace_and_jointspace(tmp_path, capsys):
    for what in ("workspace", "jointspace"):
        rc = main(["plot", what, "--robot", BATTERY, "--name", "orthogonal_cuspidal",
                   "--grid", "128", "--out", str(tmp_path)])
        assert rc == 0
        capsys.readouterr()
    ws = (tmp_path / "orthogonal_cuspidal.workspace.svg").read_text()
    assert '<circle class="cusp-marker"' in ws
    js = (tmp_path / "orthogonal_cuspidal.jointspace.svg").read_text()
    assert 'class="singular-curve"' in js
    assert 'class="pseudo-curve"' in js
    assert 'class="aspect-0"' in js and 'class="aspect-1"' in js


def test_plot_c3s3_triple_marker_collapse(analysis):
    """At the cusp, three intersection markers coincide within marker radius."""
    cusp = max(analysis.cusps(REFERENCE), key=lambda c: c.z)
    svg = render_c3s3(REFERENCE, CrossSectionPoint(cusp.rho, cusp.z))
    import re

    marks = [(float(m.group(1)), float(m.group(2))) for m in re.finditer(
        r'<circle class="intersection-marker" cx="([-\d.]+)" cy="([-\d.]+)"', svg)]
    assert len(marks) == 4
    clusters = []
    for pt in marks:
        for cl in clusters:
            if math.hypot(pt[0] - cl[0][0], pt[1] - cl[0][1]) < 6.0:
                cl.append(pt)
                break
        else:
            clusters.append([pt])
    assert sorted(len(c) for c in clusters) == [1, 3]


def test_plot_c3s3_ellipse_class(tmp_path, capsys):
    rc = main(["plot", "c3s3", "--robot", BATTERY, "--name", "ellipse_conic",
               "--point", "2.4,0.6", "--out", str(tmp_path)])
    assert rc == 0
    svg = (tmp_path / "ellipse_conic.c3s3.svg").read_text()
    assert 'class="conic conic-ellipse"' in svg


def test_plot_c3s3_unreachable_zero_markers(tmp_path, capsys):
    rc = main(["plot", "c3s3", "--robot", BATTERY, "--name", "orthogonal_cuspidal",
               "--point", "40,0", "--out", str(tmp_path)])
    assert rc == 0
    svg = (tmp_path / "orthogonal_cuspidal.c3s3.svg").read_text()
    assert '<circle class="intersection-marker"' not in svg
    assert 'class="conic' in svg


def test_plot_rerun_byte_identical(tmp_path, capsys):
    args = ["plot", "workspace", "--robot", BATTERY, "--name", "orthogonal_node",
            "--grid", "128"]
    rc = main([*args, "--out", str(tmp_path / "a")])
    assert rc == 0
    rc = main([*args, "--out", str(tmp_path / "b")])
    assert rc == 0
    capsys.readouterr()
    f1 = (tmp_path / "a" / "orthogonal_node.workspace.svg").read_bytes()
    f2 = (tmp_path / "b" / "orthogonal_node.workspace.svg").read_bytes()
    assert f1 == f2
