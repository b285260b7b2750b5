import json
import re

import numpy as np
import pytest

from polypack import cli
from polypack.packing import distinct_circles


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_build_writes_configuration_and_root_system(capsys):
    code, out, _ = run(capsys, "build", "--builtin", "octahedron")
    assert code == 0
    doc = json.loads(out)
    assert {"graph", "configuration", "root_system"} <= set(doc)
    C = np.array(doc["configuration"]["C"])
    assert C.shape == (4, 6)


def test_build_to_file(tmp_path, capsys):
    target = tmp_path / "sub" / "oct.json"
    code, out, _ = run(capsys, "build", "--builtin", "cube", "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["graph"]["vertex_count"] == 8


def test_bad_euler_input_exits_two_with_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"vertex_count": 5, "faces": [[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]}))
    code, out, err = run(capsys, "build", "--input", str(bad))
    assert code == 2 and out == ""
    doc = json.loads(err)
    assert doc["error"] == "invalid_graph"
    assert "Euler formula violated" in doc["message"]


@pytest.mark.parametrize(
    "payload",
    ["not json", "[1, 2]", json.dumps({"faces": [[0, 1, 2]]})],
    ids=["syntax", "not-object", "missing-field"],
)
def test_malformed_input_exits_two(tmp_path, capsys, payload):
    p = tmp_path / "in.json"
    p.write_text(payload)
    code, _, err = run(capsys, "build", "--input", str(p))
    assert code == 2
    assert "error" in json.loads(err)


def test_missing_file_and_bad_flags(tmp_path, capsys):
    code, _, err = run(capsys, "build", "--input", str(tmp_path / "nope.json"))
    assert code == 2 and json.loads(err)["error"] == "input"
    code, _, err = run(capsys, "enumerate", "--builtin", "tetrahedron", "--depth", "-1")
    assert code == 2
    code, _, err = run(capsys, "enumerate", "--builtin", "tetrahedron", "--threads", "0")
    assert code == 2


def test_verify_passes_on_builtin(capsys):
    code, out, _ = run(capsys, "verify", "--builtin", "tetrahedron", "--depth", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] and doc["first_failure"] is None
    assert all(c["ok"] for c in doc["checks"])


def test_verify_round_trips_build_artifact(tmp_path, capsys):
    art = tmp_path / "oct.json"
    assert run(capsys, "build", "--builtin", "octahedron", "--out", str(art))[0] == 0
    code, out, _ = run(capsys, "verify", "--input", str(art), "--depth", "2")
    assert code == 0 and json.loads(out)["passed"]


def test_verify_fails_on_perturbed_configuration(tmp_path, capsys):
    art = tmp_path / "oct.json"
    run(capsys, "build", "--builtin", "octahedron", "--out", str(art))
    doc = json.loads(art.read_text())
    doc["configuration"]["C"][0][0] += 1e-3
    art.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", "--input", str(art), "--depth", "2")
    assert code == 1
    rep = json.loads(out)
    assert not rep["passed"]
    assert rep["first_failure"]["name"]


def test_enumerate_counts_and_csv(capsys):
    code, out, _ = run(capsys, "enumerate", "--builtin", "octahedron", "--depth", "2")
    assert code == 0
    assert json.loads(out)["count"] == 1 + 8 + 8 * 7
    code, out, _ = run(capsys, "enumerate", "--builtin", "octahedron", "--depth", "1", "--format", "csv")
    lines = out.strip().splitlines()
    assert lines[0].split(",") == ["word", "b0", "b1", "b2", "b3", "b4", "b5"]
    assert len(lines) == 1 + 1 + 8


@pytest.mark.parametrize("command", ["enumerate", "zeta"])
def test_output_independent_of_threads(capsys, command):
    outs = []
    for t in ("1", "4"):
        code, out, _ = run(capsys, command, "--builtin", "cube", "--depth", "4", "--threads", t)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]


def test_repeat_runs_are_byte_identical(capsys):
    a = run(capsys, "build", "--builtin", "icosahedron")[1]
    b = run(capsys, "build", "--builtin", "icosahedron")[1]
    assert a == b


def test_render_structure(capsys):
    from polypack.packing import enumerate_orbit, normalize_bounded, build_configuration
    from polypack.polyhedron import canonical_realization

    code, svg, _ = run(capsys, "render", "--builtin", "octahedron", "--depth", "2")
    assert code == 0
    assert svg.lstrip().startswith("<?xml") and svg.rstrip().endswith("</svg>")
    cfg = normalize_bounded(build_configuration(canonical_realization("octahedron")))[0]
    nodes = list(enumerate_orbit(cfg, 2))
    assert len(re.findall(r"<circle\b", svg)) == len(distinct_circles(nodes))
    assert svg.count('class="external"') == 1


def test_render_circles_do_not_cross(capsys):
    _, svg, _ = run(capsys, "render", "--builtin", "tetrahedron", "--depth", "2")
    circles = []
    for m in re.finditer(r'<circle[^>]*cx="([^"]+)"[^>]*cy="([^"]+)"[^>]*r="([^"]+)"', svg):
        x, y, r = map(float, m.groups())
        circles.append((x, y, r))
    assert len(circles) > 4
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            (x1, y1, r1), (x2, y2, r2) = circles[i], circles[j]
            d = np.hypot(x1 - x2, y1 - y2)
            # tangent, disjoint, or nested; never a proper crossing
            assert d >= r1 + r2 - 1e-6 or d <= abs(r1 - r2) + 1e-6


def test_mesh_document(capsys):
    code, out, _ = run(capsys, "mesh", "--builtin", "octahedron", "--depth", "1")
    assert code == 0
    doc = json.loads(out)
    assert set(doc) >= {"sphere", "polyhedron", "cones"}
    V = np.array(doc["polyhedron"]["vertices"])
    assert V.shape == (6, 3)
    assert len(doc["polyhedron"]["faces"]) == 8
    assert len(doc["cones"]) >= 6
    for c in doc["cones"]:
        assert {"apex", "base_center", "base_radius", "word"} <= set(c)
        # the base circle lies on the unit sphere
        bc, r = np.array(c["base_center"]), c["base_radius"]
        assert abs(bc @ bc + r * r - 1.0) < 1e-9


def test_membership_all_ones_converges(capsys):
    code, out, _ = run(capsys, "membership", "--builtin", "octahedron", "--point", "all-ones")
    assert code == 0
    doc = json.loads(out)
    assert doc["verdict"] == "Converges" and doc["word"] == []


def test_membership_grid_csv(tmp_path, capsys):
    grid = tmp_path / "grid.csv"
    grid.write_text("# weights\n1,1,1,1\n-1,-1,-1,-1\n2,1,1,1\n")
    code, out, _ = run(capsys, "membership", "--builtin", "tetrahedron", "--grid", str(grid))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "point,verdict,word_length,word"
    assert len(lines) == 4
    assert lines[1].split(",")[1] == "Converges"
    assert lines[2].split(",")[1] == "Diverges"


def test_zeta_grid_csv(tmp_path, capsys):
    grid = tmp_path / "grid.csv"
    grid.write_text("1,1,1,1\n3,3,3,3\n")
    code, out, _ = run(capsys, "zeta", "--builtin", "tetrahedron", "--grid", str(grid), "--depth", "3", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "point,depth,value,saturated,tail_bound,verdict"
    v1, v3 = (float(l.split(",")[2]) for l in lines[1:])
    assert v1 > v3 > 0


def test_bad_point_and_grid(tmp_path, capsys):
    code, _, err = run(capsys, "membership", "--builtin", "tetrahedron", "--point", "1,2")
    assert code == 2 and "expected 4" in json.loads(err)["message"]
    grid = tmp_path / "g.csv"
    grid.write_text("1,x,1,1\n")
    code, _, _ = run(capsys, "zeta", "--builtin", "tetrahedron", "--grid", str(grid))
    assert code == 2
