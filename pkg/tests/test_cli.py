import csv
import json

import numpy as np
import pytest

from narrowescape import cli

TWO = {"version": 1, "domain": {"kind": "disk-interior"},
       "patches": [{"center_angle": 0.0, "half_length": 0.1, "bc": {"type": "dirichlet"}},
                   {"center_angle": np.pi, "half_length": 0.2}]}
TWINS = {"domain": {"kind": "disk-interior"},
         "targets": [{"center": [0.5, 0.0], "size": 0.05}, {"center": [-0.5, 0.0], "size": 0.05}]}


def scene_file(tmp_path, doc, name="scene.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run_ok(*argv):
    status, report, _ = cli.run(["--no-timing", *argv])
    assert status == 0, report.get("error")
    return report["outputs"], report


def run_err(*argv):
    status, report, _ = cli.run(["--no-timing", *argv])
    assert status == 1
    return report["error"]


def test_splitting_report(tmp_path):
    out, report = run_ok("splitting", "--scene", scene_file(tmp_path, TWO))
    # two-patch closed form (ln(2/eps2) + ln 2) / (ln(4/(eps1 eps2)) + 2 ln 2)
    closed = np.log(20) / np.log(800)
    assert out["chi"] == pytest.approx(closed, abs=1e-11)
    assert sum(out["coefficients"]) == pytest.approx(0.0, abs=1e-11)
    assert set(report) == {"command", "units", "inputs_digest", "outputs", "warnings"}


def test_reports_are_deterministic(tmp_path):
    path = scene_file(tmp_path, TWO)
    first = cli.run(["--no-timing", "mfrt", "--scene", path])[1]
    second = cli.run(["--no-timing", "mfrt", "--scene", path])[1]
    assert json.dumps(first) == json.dumps(second)
    timed = cli.run(["mfrt", "--scene", path])[1]
    assert timed["timing"]["seconds"] >= 0


@pytest.mark.parametrize("doc", [TWO, TWINS,
                                 {"domain": {"kind": "ellipse-exterior", "a": 2.0, "b": 1.0},
                                  "patches": [{"center_xy": [0.0, 1.0], "half_length": 0.05,
                                               "bc": {"type": "robin", "q": 3.5}}]}])
def test_round_trip_idempotent(tmp_path, doc):
    once = cli.serialize_scene(cli.load_scene(scene_file(tmp_path, doc)))
    twice = cli.serialize_scene(cli.load_scene(scene_file(tmp_path, once, "again.json")))
    assert once == twice


def test_schema_errors(tmp_path):
    bad = json.loads(json.dumps(TWO))
    bad["patches"][1]["colour"] = "red"
    err = run_err("splitting", "--scene", scene_file(tmp_path, bad))
    assert err["code"] == "scene" and "$.patches[1]" in err["message"]
    with pytest.raises(cli.SceneError):
        cli.parse_scene({"domain": {"kind": "disk-interior"}})
    with pytest.raises(cli.SceneError):
        cli.parse_scene({**TWO, "version": 2})
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(cli.SceneError):
        cli.load_scene(str(path))


def test_overlap_names_pair(tmp_path):
    doc = {"domain": {"kind": "disk-interior"},
           "patches": [{"center_angle": 0.0, "half_length": 0.2},
                       {"center_angle": 0.3, "half_length": 0.2}]}
    err = run_err("splitting", "--scene", scene_file(tmp_path, doc))
    assert "patches 1 and 2 overlap" in err["message"]
    assert err["details"]["pair"] == [1, 2]


def test_exterior_mfrt_unsupported(tmp_path):
    doc = {"domain": {"kind": "ellipse-exterior", "a": 2, "b": 1},
           "patches": [{"center_angle": 0.0, "half_length": 0.1}]}
    err = run_err("mfrt", "--scene", scene_file(tmp_path, doc))
    assert err["code"] == "unsupported"
    assert err["message"].startswith("unsupported: infinite area")


def test_grid_csv(tmp_path):
    csv_path = tmp_path / "field.csv"
    run_ok("splitting", "--scene", scene_file(tmp_path, TWO), "--grid", "9", "7",
           "--csv", str(csv_path))
    with open(csv_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y", "value"]
    body = rows[1:]
    assert len(body) == 63
    # row-major: x varies fastest
    assert float(body[0][1]) == float(body[8][1]) and float(body[0][0]) < float(body[1][0])
    inside = [r for r in body if r[2] != ""]
    outside = [r for r in body if r[2] == ""]
    assert outside and all(np.hypot(float(r[0]), float(r[1])) >= 1 for r in outside)
    assert all(0.0 <= float(r[2]) <= 1.0 for r in inside)


def test_grid_needs_csv(tmp_path):
    err = run_err("splitting", "--scene", scene_file(tmp_path, TWO), "--grid", "4", "4")
    assert "--csv" in err["message"]


def test_basis_table():
    out, _ = run_ok("basis", "--K", "21", "--M", "100")
    assert len(out["rows"]) == 10
    assert out["rows"][0]["mu_even"] == pytest.approx(3.4533, abs=5e-4)
    assert out["rows"][0]["psi_inf_sq"] == pytest.approx(0.0664, abs=5e-4)


def test_kappa_table():
    out, _ = run_ok("kappa", "--N", "64", "--mode", "all")
    assert len(out["rows"]) == 32
    first = out["rows"][0]
    assert first["exact"] == pytest.approx(27.8414, abs=5e-4)
    assert first["full"] == pytest.approx(27.8459, abs=5e-4)


def test_cfun_command():
    out, _ = run_ok("cfun", "--mu", "1.0", "1e6")
    values = out["values"] if "values" in out else out
    assert json.dumps(values)


def test_steklov_commands(tmp_path):
    sn = {"domain": {"kind": "disk-interior"},
          "patches": [{"center_angle": 2 * np.pi * m / 4, "half_length": 0.05,
                       "bc": {"type": "steklov"}} for m in range(4)]}
    out, _ = run_ok("sn", "--scene", scene_file(tmp_path, sn))
    assert out["sigma"][0] == 0.0 and len(out["sigma"]) == 4
    out, _ = run_ok("snd", "--equally-spaced", "64", "0.01", "20", "--mode", "all")
    assert out
    err = run_err("snd", "--scene", scene_file(tmp_path, TWO))
    assert err["code"] == "scene"


def test_interior_and_exterior(tmp_path):
    out, _ = run_ok("interior", "--scene", scene_file(tmp_path, TWINS))
    assert out["chi"] == pytest.approx(0.5, abs=1e-11)
    ext = {"domain": {"kind": "disk-exterior"},
           "patches": [{"center_angle": 0.0, "half_length": 0.05},
                       {"center_angle": 2.0, "half_length": 0.08}]}
    out, _ = run_ok("exterior", "--scene", scene_file(tmp_path, ext))
    assert 0 < out["chi"] < 1


def test_oracle_commands(tmp_path):
    path = scene_file(tmp_path, TWO)
    out, _ = run_ok("oracle", "--scene", path, "--order", "16")
    assert out["chi"] == pytest.approx(0.4482, abs=1e-3)
    out, _ = run_ok("oracle", "--scene", path, "--method", "mc", "--walkers", "1000",
                    "--seed", "3", "--start", "0", "0")
    assert abs(out["mean"] - 0.448) < 5 * out["stderr"]


def test_bad_index(tmp_path):
    err = run_err("splitting", "--scene", scene_file(tmp_path, TWO), "--target", "5")
    assert err["code"] == "invalid-argument"


def test_main_writes_out(tmp_path, capsys):
    target = tmp_path / "report.json"
    assert cli.main(["--no-timing", "--out", str(target), "kappa", "--N", "16",
                     "--mode", "exact"]) == 0
    assert json.loads(target.read_text())["outputs"]["N"] == 16
    assert cli.main(["--no-timing", "mfrt", "--scene", str(tmp_path / "missing.json")]) == 1
    assert "error [" in capsys.readouterr().err
