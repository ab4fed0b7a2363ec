import json
import math

import numpy as np
import pytest

from geoinfer import Cloud, distance, gradient
from geoinfer.cli import main
from geoinfer.io import parse_points, read_csv, read_points, shape_from_config
from geoinfer.errors import InputError

TWO = {"type": "cloud", "points": [[-1, 0], [1, 0]]}


def run_cli(tmp_path, command, cfg, *flags, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return main([command, "--config", str(path), *flags])


def test_dist_round_trip(tmp_path):
    (tmp_path / "one.xyz").write_text("0.25 -0.5\n")
    (tmp_path / "q.csv").write_text("1,0\n0.1,0.3\n# comment\n\n-2.5 7\n")
    cfg = {"shape": {"type": "cloud", "file": "one.xyz"}, "queries_file": "q.csv"}
    assert run_cli(tmp_path, "dist", cfg, "--out", str(tmp_path / "o")) == 0
    header, rows = read_csv(tmp_path / "o" / "dist.csv")
    assert header == ["x1", "x2", "dist", "mu"]
    assert len(rows) == 3
    K = Cloud([[0.25, -0.5]])
    Q = read_points(tmp_path / "q.csv")
    assert np.array_equal(rows[:, :2], Q)
    assert np.array_equal(rows[:, 2], K.distance(Q))
    assert np.array_equal(rows[:, 3], [gradient(K, q).mu for q in Q])


def test_dist_malformed_row(tmp_path, capsys):
    (tmp_path / "bad.xyz").write_text("1,2,x\n")
    cfg = {"shape": {"type": "cloud", "file": "bad.xyz"}, "queries": [[0, 0, 0]]}
    assert run_cli(tmp_path, "dist", cfg) == 2
    assert "line 1: invalid number" in capsys.readouterr().err


def test_parse_points_errors():
    with pytest.raises(InputError, match="line 2: invalid number"):
        parse_points("1 2\n3 y\n")
    with pytest.raises(InputError, match="line 3"):
        parse_points("1 2\n\n3 4 5\n")
    with pytest.raises(InputError, match="empty"):
        parse_points("# nothing\n")


def test_shape_config_schema():
    assert shape_from_config({"type": "ball", "center": [0, 0], "radius": 2}).radius == 2
    u = shape_from_config({"type": "union", "members": [TWO, {"type": "box", "lo": [0, 0], "hi": [1, 1]}]})
    assert distance(u, [3, 0]) == pytest.approx(2)
    with pytest.raises(InputError, match="unknown keys"):
        shape_from_config({"type": "ball", "center": [0, 0], "radius": 1, "colour": "red"})
    with pytest.raises(InputError, match="unknown shape"):
        shape_from_config({"type": "torus"})
    with pytest.raises(InputError):
        shape_from_config({"type": "ball", "center": [0, 0], "radius": -1})


def test_unknown_config_key(tmp_path, capsys):
    assert run_cli(tmp_path, "medial", {"shape": TWO, "mu": 0.5, "eps": 0.1, "bogus": 1}) == 2
    assert "bogus" in capsys.readouterr().err


def test_missing_key_and_bad_seed(tmp_path):
    assert run_cli(tmp_path, "medial", {"shape": TWO, "mu": 0.5}) == 2
    assert run_cli(tmp_path, "medial", {"shape": TWO, "mu": 0.5, "eps": 0.1}, "--seed", "-1") == 2


def test_model_error_exit_1(tmp_path, capsys):
    assert run_cli(tmp_path, "medial", {"shape": TWO, "mu": 1.5, "eps": 0.1}, "--out", str(tmp_path)) == 1
    assert "mu_max" in capsys.readouterr().err
    cfg = {"shape": {"type": "cloud", "points": [[0], [1]]}, "r_grid": [0.1, 0.2, 0.7]}
    assert run_cli(tmp_path, "curvature", cfg, "--out", str(tmp_path)) == 1
    assert "tube formula invalid beyond reach" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    cfg = {"shape": TWO, "mu": 0.6, "eps": 0.0, "margin": 1.0, "seed": 5, "samples": 100}
    assert run_cli(tmp_path, "medial", cfg, "--seed", "7", "--samples", "3000", "--out", str(tmp_path / "o")) == 0
    rep = json.loads((tmp_path / "o" / "medial.json").read_text())
    assert rep["seed"] == 7 and rep["config"]["samples"] == 3000
    assert rep["result"]["stats"]["n_rays"] == 3000
    assert rep["version"] and rep["tool"] == "geoinfer"


def test_medial_reproduces_two_point_extent(tmp_path):
    cfg = {"shape": TWO, "mu": 0.6, "eps": 0.0, "margin": 1.0, "samples": 100_000}
    assert run_cli(tmp_path, "medial", cfg, "--out", str(tmp_path)) == 0
    res = json.loads((tmp_path / "medial.json").read_text())["result"]
    assert res["extent_hi"][1] == pytest.approx(0.75, rel=0.01)


def test_curvature_unit_ball(tmp_path):
    cfg = {"shape": {"type": "ball", "center": [0, 0, 0], "radius": 1}, "samples": 2**18}
    assert run_cli(tmp_path, "curvature", cfg, "--out", str(tmp_path)) == 0
    c = json.loads((tmp_path / "curvature.json").read_text())["result"]["global_coeffs"]
    assert c == pytest.approx([4 * math.pi / 3, 4 * math.pi, 4 * math.pi, 4 * math.pi / 3], rel=0.02)


def test_boundary_output(tmp_path):
    cfg = {"shape": TWO, "region": {"box": {"lo": [-2, -2], "hi": [2, 2]}}, "samples": 10_000}
    assert run_cli(tmp_path, "boundary", cfg, "--out", str(tmp_path)) == 0
    header, rows = read_csv(tmp_path / "boundary.csv")
    assert header == ["x1", "x2", "mass"] and rows[:, 2].sum() == pytest.approx(16)


def test_determinism_across_runs_and_workers(tmp_path):
    cfg = {"shape": TWO, "mu": 0.6, "eps": 0.0, "margin": 1.0, "samples": 70_000}
    run_cli(tmp_path, "medial", cfg, "--out", str(tmp_path / "a"), "--workers", "1")
    run_cli(tmp_path, "medial", cfg, "--out", str(tmp_path / "b"), "--workers", "3")
    for name in ("medial.json", "medial.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
