import json

import numpy as np
import pytest

from minklab.bodies import ellipsoid_support, perturbed_sphere
from minklab.errors import FieldFormatError
from minklab.io import RunReport, load_field, parse_grid, save_field, write_csv, write_dat
from minklab.solver import SolverConfig, solve
from minklab.sphere import build_grid


def test_field_round_trip_is_lossless(tmp_path, grid32):
    u = perturbed_sphere(grid32, 0.2, seed=3)
    save_field(u, tmp_path / "u.field")
    v = load_field(tmp_path / "u.field")
    assert v.grid.shape == grid32.shape
    assert np.array_equal(u.values, v.values)


def test_header_must_match_expected_grid(tmp_path, grid32):
    save_field(grid32.constant(1.0), tmp_path / "u.field")
    with pytest.raises(FieldFormatError, match="does not match"):
        load_field(tmp_path / "u.field", build_grid(16, 32))


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("# grid 8x16\n", 1),
        ("", 1),
        ("# sphere-grid ntheta=8 nphi=16\n0 0 1.0\n0 1\n", 3),
        ("# sphere-grid ntheta=8 nphi=16\n0 0 one\n", 2),
        ("# sphere-grid ntheta=8 nphi=16\n0 0 1.0\n9 0 1.0\n", 3),
    ],
)
def test_malformed_files_report_the_line(tmp_path, text, lineno):
    path = tmp_path / "bad.field"
    path.write_text(text)
    with pytest.raises(FieldFormatError) as info:
        load_field(path)
    assert f"{path}:{lineno}:" in str(info.value)


def test_missing_nodes_are_reported(tmp_path):
    path = tmp_path / "short.field"
    path.write_text("# sphere-grid ntheta=8 nphi=16\n0 0 1.0\n")
    with pytest.raises(FieldFormatError, match="no value for node"):
        load_field(path)


def test_parse_grid():
    assert parse_grid("64x128") == (64, 128)
    assert parse_grid(" 8 X 16 ") == (8, 16)
    with pytest.raises(ValueError):
        parse_grid("64-128")


def test_report_json_handles_numpy_and_non_finite_values(tmp_path):
    r = RunReport(spec={"name": "x"}, version="0")
    r.metrics.update(a=np.float64(1.5), b=np.arange(3), c=float("nan"), d=np.bool_(True))
    r.checks["ok"] = np.bool_(True)
    r.write(tmp_path / "x.json")
    d = json.loads((tmp_path / "x.json").read_text())
    assert d["metrics"] == {"a": 1.5, "b": [0, 1, 2], "c": "nan", "d": True}
    assert d["passed"] is True
    r.checks["bad"] = False
    assert not r.passed


def test_dat_and_csv_writers(tmp_path):
    write_dat(tmp_path / "t.dat", {"h": [0.1, 0.05], "err": [1e-3, 6.25e-5]})
    lines = (tmp_path / "t.dat").read_text().splitlines()
    assert lines[0] == "# h err"
    assert np.allclose(np.loadtxt(tmp_path / "t.dat"), [[0.1, 1e-3], [0.05, 6.25e-5]])
    write_csv(tmp_path / "t.csv", [{"q": 0.5, "beta": 0.25}])
    assert (tmp_path / "t.csv").read_text() == "q,beta\n0.5,0.25\n"


def test_solver_is_deterministic_from_an_ellipsoid_start():
    g = build_grid(32, 64)
    u0 = ellipsoid_support(g, 1.3, 1.0, 1 / 1.3)
    a = solve(SolverConfig(-3.0, u0, max_iter=3))
    b = solve(SolverConfig(-3.0, u0, max_iter=3))
    assert np.array_equal(a.u_final.values, b.u_final.values)
    assert a.residual_trace == b.residual_trace
