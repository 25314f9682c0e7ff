import json
import subprocess
import sys

import numpy as np
import pytest

from tremorlab.cli import ExperimentConfig, build_parser, main, parse_number
from tremorlab.errors import ValidationError
from tremorlab.fractal_geometry import unit_square_cloud
from tremorlab.surface_core import dump_surface_spec, square_torus


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def square_file(tmp_path):
    p = tmp_path / "square.json"
    p.write_text(json.dumps(dump_surface_spec(square_torus())))
    return p


@pytest.fixture
def broken_file(tmp_path):
    doc = dump_surface_spec(square_torus())
    doc["holonomy"][2] = [[-1, 1], [0, 1]]
    doc["holonomy"][3] = [[1, 1], [0, 1]]
    p = tmp_path / "broken.json"
    p.write_text(json.dumps(doc))
    return p


@pytest.fixture
def cloud_file(tmp_path):
    p = tmp_path / "cloud.csv"
    np.savetxt(p, unit_square_cloud(20000, seed=1), delimiter=",", header="x,y", comments="")
    return p


def test_validate_square(capsys, square_file):
    code, out, _ = run(capsys, "validate", "--surface", str(square_file))
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["genus"] == 1
    assert doc["result"]["cone_angles_over_pi"] == [2.0]
    assert doc["config"]["surface"] == str(square_file)
    assert doc["seed"] == 0


def test_validate_broken_closure(capsys, broken_file):
    code, out, err = run(capsys, "validate", "--surface", str(broken_file))
    assert code == 2 and out == ""
    e = json.loads(err)
    assert e["error"] == "ClosureViolation" and e["exit_code"] == 2


def test_validate_slit_pair(capsys):
    code, out, _ = run(capsys, "validate", "--surface", "slitpair")
    doc = json.loads(out)["result"]
    assert code == 0
    assert doc["genus"] == 2
    assert doc["cone_angles_over_pi"] == [4.0, 4.0]
    assert doc["area"] == [1, 1]


def test_missing_surface_file(capsys, tmp_path):
    code, _, err = run(capsys, "validate", "--surface", str(tmp_path / "nope.json"))
    assert code == 2
    assert json.loads(err)["error"] == "ValidationError"


def test_tremor_restriction(capsys):
    code, out, _ = run(capsys, "tremor", "--surface", "slitpair", "--beta", "restriction:A", "--t", "1")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["flips"] == 0
    assert res["L"] == [1, 2]
    assert res["area_before"] == res["area_after"] == [1, 1]
    assert res["surface"]["format"] == "tsurf-v1"


def test_tremor_output_reloads(capsys, tmp_path):
    out_path = tmp_path / "t.json"
    code, _, _ = run(capsys, "tremor", "--surface", "slitpair", "--beta", "anti", "--t", "2",
                     "--out", str(out_path))
    assert code == 0
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps(json.loads(out_path.read_text())["result"]["surface"]))
    code, out, _ = run(capsys, "validate", "--surface", str(spec))
    assert code == 0 and json.loads(out)["result"]["genus"] == 2


def test_unknown_region(capsys):
    code, _, err = run(capsys, "tremor", "--surface", "slitpair", "--beta", "restriction:Z")
    assert code == 2


def test_flow_periodic_and_csv(capsys):
    code, out, _ = run(capsys, "flow", "--surface", "square", "--theta", "0", "--T", "5")
    res = json.loads(out)["result"]
    assert code == 0 and res["kind"] == "periodic"
    assert res["time"] == pytest.approx(1.0)
    code, out, _ = run(capsys, "flow", "--surface", "sqrt2", "--theta", "0.3", "--T", "5", "--csv")
    lines = out.splitlines()
    assert lines[0].startswith("# config=")
    assert lines[1] == "time,triangle,x,y"


def test_cone_levels(capsys):
    code, out, _ = run(capsys, "cone", "--surface", "sqrt2", "--beta", "dy", "--t", "0,1")
    assert code == 0
    levels = json.loads(out)["result"]["levels"]
    assert [lv["contains"] for lv in levels] == [True, True]


def test_checkerboard(capsys):
    code, out, _ = run(capsys, "checkerboard", "--x", "0.5", "--alpha", "sqrt2", "--c", "0.3",
                       "--eta", "0.01", "--verify")
    assert code == 0
    res = json.loads(out)["result"]
    assert (res["m"], res["n"]) == (1, 0)
    assert res["imbalance"] == pytest.approx(0.29289, abs=1e-5)
    assert res["verify"]["passed"] is True


def test_checkerboard_errors(capsys):
    code, _, err = run(capsys, "checkerboard", "--x", "0.5", "--alpha", "1.5", "--c", "0.3",
                       "--eta", "0.01")
    assert code == 2 and json.loads(err)["error"] == "RationalSlope"
    code, _, err = run(capsys, "checkerboard", "--x", "0.5", "--alpha", "sqrt2", "--c", "0.3",
                       "--eta", "1e-7", "--search-bound", "5")
    assert code == 4 and json.loads(err)["error"] == "SearchExhausted"


def test_dim_slope_report(capsys, cloud_file):
    code, out, _ = run(capsys, "dim", "--input", str(cloud_file), "--radii", "0.2,0.1,0.05,0.02")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["slope"] == pytest.approx(2.0, abs=0.15)
    assert res["n_points"] == 20000
    code, out, _ = run(capsys, "dim", "--input", str(cloud_file), "--radii", "0.2,0.1,0.05,0.02",
                       "--csv")
    assert out.splitlines()[1] == "R,N,logN"


def test_dim_needs_a_decade(capsys, cloud_file):
    code, _, err = run(capsys, "dim", "--input", str(cloud_file), "--radii", "0.2,0.1,0.05,0.025")
    assert code == 2 and json.loads(err)["error"] == "InsufficientData"


@pytest.mark.parametrize("argv", [
    ["validate", "--surface", "slitpair-irr"],
    ["tremor", "--surface", "slitpair", "--beta", "anti", "--t", "3/2"],
    ["flow", "--surface", "sqrt2", "--theta", "0.4", "--T", "20", "--mode", "float"],
    ["checkerboard", "--x", "0.4", "--alpha", "sqrt3", "--c", "0.6", "--eta", "0.01", "--verify"],
])
def test_reruns_are_byte_identical(capsys, argv):
    outs = [run(capsys, *argv)[1] for _ in range(2)]
    assert outs[0] == outs[1] and outs[0]


def test_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "tremorlab.cli", "validate", "--surface", "square"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["genus"] == 1


def test_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig("validate", mode="fast").validate()
    with pytest.raises(ValidationError):
        ExperimentConfig("validate", seed=-1).validate()
    ExperimentConfig("validate", surface="square", seed=2 ** 64 - 1).validate()


def test_parser_and_numbers():
    args = build_parser().parse_args(["dim", "--input", "x.csv", "--radii", "1,2"])
    assert args.count == "grid"
    assert parse_number("sqrt2") == pytest.approx(2 ** 0.5)
    assert parse_number("3*sqrt5") == pytest.approx(3 * 5 ** 0.5)
    assert parse_number("3/4") == 0.75
