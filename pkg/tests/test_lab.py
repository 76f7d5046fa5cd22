import csv
import io
import json
import math

import numpy as np
import pytest

from wulff_lab import cli, lab
from wulff_lab.patch import algebraic_volume

REQUIRED = {
    "wulff-closed-ellipsoid", "sphere-in-circular-cone", "tilted-graph-nonstationary",
    "half-space-wulff-translated", "planar-wedge-disk", "perturbed-cone-wulff", "nonconvex-circular-cone",
}


def run_cli(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def walk_numbers(node):
    if isinstance(node, dict):
        for v in node.values():
            yield from walk_numbers(v)
    elif isinstance(node, list):
        for v in node:
            yield from walk_numbers(v)
    elif isinstance(node, float):
        yield node


def test_catalog_listing(capsys):
    items = lab.list_scenarios()
    assert len(items) >= 12
    ids = [s["id"] for s in items]
    assert REQUIRED <= set(ids)
    assert ids == [s["id"] for s in lab.list_scenarios()]
    code, out, _ = run_cli(["list"], capsys)
    assert code == 0 and len(out.strip().splitlines()) == len(items)


def test_closed_wulff_report(tmp_path):
    rep = lab.run_verify("wulff-closed-ellipsoid")["comparison"]
    assert rep["passed"]
    cls = rep["classification"]
    assert cls["kind"] == "wulff" and np.allclose(cls["center"], 0, atol=1e-6)
    assert cls["scale"] == pytest.approx(1.0, abs=1e-6)
    assert abs(rep["wente"]["a2"]["analytic"]) < 1e-6
    assert all(math.isfinite(x) for x in walk_numbers(rep))
    assert all("tolerance" in c for c in rep["checks"])


def test_sphere_in_cone_report():
    rep = lab.run_verify("sphere-in-circular-cone")["comparison"]
    assert rep["stationarity"]["stationary"]
    assert rep["minkowski_residual"] < 1e-6


def test_nonstationary_control_skips_wente(tmp_path, capsys):
    path = tmp_path / "graph.json"
    code, _, err = run_cli(["verify", "--scenario", "tilted-graph-nonstationary", "--report", str(path)], capsys)
    assert code == 0, err
    rep = json.loads(path.read_text())["comparison"]
    assert not rep["stationarity"]["stationary"]
    assert rep["stationarity"]["nk_xi_sup"] > 0.01
    assert rep["wente"]["status"] == "skipped" and rep["wente"]["diagnostic"]


def test_translated_cap_centre_on_plane():
    rep = lab.run_verify("half-space-wulff-translated")["comparison"]
    assert rep["corollary_probe"]["p0_plane_distance"] < 1e-6


def test_planar_wedge_boundary_term():
    rep = lab.run_verify("planar-wedge-disk")["comparison"]
    assert rep["variations"]["aniso_normal"]["A2_terms"]["boundary_Z"] == 0.0
    assert not rep["cone"]["convex"] and rep["passed"]


def test_single_scenario_is_deterministic():
    a = lab.comparison_json(lab.run_verify("half-space-wulff"))
    b = lab.comparison_json(lab.run_verify("half-space-wulff"))
    assert a == b


def test_exit_codes(capsys, tmp_path):
    assert run_cli(["verify", "--scenario", "no-such-thing"], capsys)[0] == lab.EXIT_UNKNOWN
    assert run_cli(["profile", "--scenario", "no-such-thing"], capsys)[0] == lab.EXIT_UNKNOWN
    assert run_cli(["verify", "--scenario", "sphere-closed-ball", "--set", "radius=2"], capsys)[0] == 3
    assert run_cli(["verify", "--scenario", "sphere-closed-ball", "--set", "grid=abc"], capsys)[0] == 3
    assert run_cli(["verify", "--scenario", "sphere-closed-ball", "--set", "grid"], capsys)[0] == 3
    assert run_cli(["verify"], capsys)[0] == 3
    # a perturbation beyond the admissible range is a validation failure
    assert run_cli(["verify", "--scenario", "wulff-closed-perturbed-ball", "--set", "body.eps=0.5"],
                   capsys)[0] == 3
    # a step outside the supported range fails validation as well
    assert run_cli(["verify", "--scenario", "sphere-closed-ball", "--set", "fd_step=0.5"], capsys)[0] == 3
    assert run_cli(["verify", "--scenario", "sphere-closed-ball", "--set", "body.eps=x"], capsys)[0] == 3


def test_numeric_failure_exit_code(capsys, monkeypatch):
    # a grid too coarse for the stated tolerances must surface as a numeric failure
    monkeypatch.setattr(lab, "FIRST_VARIATION_TOL", 1e-30)
    code, _, err = run_cli(["verify", "--scenario", "sphere-closed-ball"], capsys)
    assert code == lab.EXIT_NUMERIC and "FAIL" in err


def test_overrides_and_grid_env(monkeypatch):
    rep = lab.run_verify("perturbed-cone-wulff", {"cone.eps": "0.03", "grid": "24"})["comparison"]
    assert rep["passed"] and rep["grid"]["nodes"][1] == 24
    monkeypatch.setenv(lab.GRID_ENV, "20")
    rep = lab.run_verify("wulff-closed-ellipsoid")["comparison"]
    assert rep["grid"]["nodes"] == [20, 20]
    rep = lab.run_verify("wulff-closed-ellipsoid", {"grid": "22"})["comparison"]
    assert rep["grid"]["nodes"] == [22, 22]


def test_profile_csv(tmp_path, capsys):
    path = tmp_path / "profile.csv"
    code, _, err = run_cli(["profile", "--scenario", "sphere-in-circular-cone", "--tmax", "0.05",
                            "--steps", "21", "--out", str(path)], capsys)
    assert code == 0, err
    rows = list(csv.reader(io.StringIO(path.read_text())))
    assert rows[0] == ["t", "A_K", "V", "lambda", "a_K"]
    table = np.array(rows[1:], dtype=float)
    assert table.shape == (21, 5)
    mid = table[10]
    assert mid[0] == 0.0 and mid[3] == 1.0
    b = lab.build(lab.apply_overrides(lab.get_scenario("sphere-in-circular-cone"), None))
    assert mid[2] == algebraic_volume(b.patch, b.grid)
    near = np.abs(table[:, 0]) <= 0.02
    assert np.all(table[near, 4] <= mid[4] + 1e-6)


def test_profile_errors(capsys):
    assert run_cli(["profile", "--scenario", "tilted-graph-nonstationary"], capsys)[0] == 3
    assert run_cli(["profile", "--scenario", "sphere-closed-ball", "--steps", "4"], capsys)[0] == 3
