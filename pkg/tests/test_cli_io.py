import json
import math

import numpy as np
import pytest

from explicit_particles.cli import EXIT_CONFIG, EXIT_OK, EXIT_UNSTABLE, main
from explicit_particles.config import make_config, parse_config
from explicit_particles.core import ConfigurationError, DomainSpec, ParticleKind, lattice_init
from explicit_particles.results import read_metadata, read_table, write_metadata, write_table
from explicit_particles.snapshots import (read_snapshot_csv, read_snapshot_vtk, write_snapshot_csv,
                                          write_snapshot_vtk)
from explicit_particles.solver import dt_max


# -- config --------------------------------------------------------------------

def test_minimal_taylor_green_defaults():
    cfg = parse_config("experiment = taylor-green\npreset = g-s\ndx = 0.04\n")
    assert cfg.radius() == pytest.approx(3.1 * 0.04)
    assert cfg.eps == 0.1 and cfg.tau == "auto" and cfg.T == 0.1
    assert cfg.seeds == [0]


def test_json_config_equivalent():
    a = parse_config('{"experiment": "cavity", "dx": 0.02, "h_factor": 2.1}')
    b = parse_config("experiment = cavity  # comment\ndx = 0.02\nh-factor = 2.1")
    assert a == b
    assert a.Re == 100.0


def test_convergence_config_scales_eps():
    cfg = make_config(experiment="taylor-green", dx=0.01, m=2)
    assert cfg.eps == pytest.approx(0.025)
    assert cfg.radius() == pytest.approx(3.1 * 0.2 * 0.1)


@pytest.mark.parametrize("text, key", [
    ("experiment = taylor-green\npreset = x-y", "preset"),
    ("experiment = taylor-green\neps = 0", "eps"),
    ("experiment = taylor-green\ndx = -1", "dx"),
    ("experiment = taylor-green\nbogus = 1", "bogus"),
    ("preset = g-s", "experiment"),
    ("experiment = swirl", "experiment"),
    ("experiment = truncation\neps_max = 1.0", "eps_max"),
    ("experiment = optimize-weight\nn = 1", "n"),
    ("experiment = taylor-green\nseeds = -3", "seeds"),
])
def test_config_errors_name_key(text, key):
    with pytest.raises(ConfigurationError, match=key):
        parse_config(text)


def test_config_line_without_equals():
    with pytest.raises(ConfigurationError, match="line 2"):
        parse_config("experiment = cavity\ndx 0.01")


# -- tables / metadata -----------------------------------------------------------

def test_table_roundtrip_lossless(tmp_path):
    rows = [(1, 0.1, 1 / 3, True), (2, math.pi, -1e-300, False)]
    f = write_table(tmp_path / "t.csv", ["k", "a", "b", "ok"], rows, "doc")
    assert f.read_text().startswith("# k, a, b, ok: doc\n")
    cols, back = read_table(f)
    assert cols == ["k", "a", "b", "ok"]
    assert back == rows


def test_metadata_nonfinite(tmp_path):
    write_metadata(tmp_path / "m.json", {"a": float("inf"), "b": np.float64(0.5), "c": np.arange(2)})
    m = read_metadata(tmp_path / "m.json")
    assert m["a"] == float("inf") and m["b"] == 0.5 and m["c"] == [0, 1]
    json.loads((tmp_path / "m.json").read_text())  # strict JSON on disk


# -- snapshots -----------------------------------------------------------------

@pytest.fixture
def system():
    dom = DomainSpec((0, 0), (1, 1), (False, False), 0.2)
    s = lattice_init(dom, 0.1, include_dummy_layers=True)
    rng = np.random.default_rng(1)
    s.velocities[:] = rng.standard_normal(s.velocities.shape)
    s.pressures[:] = rng.standard_normal(s.n)
    return s


def test_snapshot_csv_roundtrip(tmp_path, system):
    f = write_snapshot_csv(tmp_path / "s.csv", system, t=0.125, k=7)
    back, info = read_snapshot_csv(f)
    assert info == {"k": 7, "t": 0.125}
    for name in ("positions", "velocities", "pressures", "volumes", "kinds"):
        np.testing.assert_array_equal(getattr(back, name), getattr(system, name))
    assert back.boundary.sum() == (system.kinds == ParticleKind.BOUNDARY).sum()


def test_snapshot_vtk_roundtrip(tmp_path, system):
    f = write_snapshot_vtk(tmp_path / "s.vtk", system, t=0.5)
    assert f.read_text().startswith("# vtk DataFile")
    back = read_snapshot_vtk(f)
    np.testing.assert_allclose(back.positions, system.positions, rtol=1e-15)
    np.testing.assert_array_equal(back.pressures, system.pressures)
    np.testing.assert_array_equal(back.kinds, system.kinds)


def test_snapshot_bad_header(tmp_path):
    f = tmp_path / "x.csv"
    f.write_text("id,kind\n")
    with pytest.raises(ValueError, match="x.csv:1"):
        read_snapshot_csv(f)


# -- command line ----------------------------------------------------------------

def test_taylor_green_errors_csv_has_K_rows(tmp_path, capsys):
    out = tmp_path / "tg"
    assert main(["taylor-green", "--dx", "0.1", "--T", "0.02", "--out", str(out)]) == EXIT_OK
    cols, rows = read_table(out / "errors.csv")
    assert cols == ["k", "t", "vel_err", "pres_err"]
    tau = dt_max(0.31, 0.1, 0.1)
    assert len(rows) == math.floor(0.02 / tau + 1e-9)
    meta = read_metadata(out / "metadata.json")
    assert meta["status"] == "ok" and meta["config"]["seeds"] == [0]
    assert "velocity error" in capsys.readouterr().out


def test_runs_are_byte_identical(tmp_path):
    args = ["taylor-green", "--dx", "0.1", "--T", "0.02", "--snapshots", "2"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    for rel in ["errors.csv", "snapshots/snap_0000002.csv"]:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_snapshot_files_roundtrip(tmp_path):
    out = tmp_path / "o"
    main(["taylor-green", "--dx", "0.1", "--T", "0.01", "--snapshots", "1", "--out", str(out)])
    files = sorted((out / "snapshots").glob("*.csv"))
    assert files
    s, info = read_snapshot_csv(files[0])
    assert info["k"] == 1 and s.n == 100


def test_optimize_weight_degree_two(tmp_path, capsys):
    assert main(["optimize-weight", "--n", "2", "--out", str(tmp_path)]) == EXIT_OK
    printed = capsys.readouterr().out
    assert printed.startswith("coefficients 1 -2 1 ")
    _, rows = read_table(tmp_path / "weight.csv")
    assert [r[1] for r in rows] == [1.0, -2.0, 1.0]


def test_truncation_cli_seeds(tmp_path):
    assert main(["truncation", "--eps-max", "0.3", "--seed", "5", "--seeds", "3",
                 "--out", str(tmp_path)]) == EXIT_OK
    _, rows = read_table(tmp_path / "errors.csv")
    assert [r[0] for r in rows] == [5, 6, 7]


def test_run_config_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"experiment = custom\ndx = 0.1\nT = 0.01\nout = {tmp_path / 'c'}\n")
    assert main(["run", str(cfg)]) == EXIT_OK
    cols, rows = read_table(tmp_path / "c" / "errors.csv")
    assert cols[0] == "k" and len(rows) > 0
    # fluid at rest stays at rest up to round-off
    assert all(r[2] < 1e-25 for r in rows)


def test_config_error_exit(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("experiment = taylor-green\neps = 0\n")
    assert main(["run", str(cfg)]) == EXIT_CONFIG
    assert "eps" in capsys.readouterr().err


def test_missing_config_file_exit(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG
    assert "nope.cfg" in capsys.readouterr().err


def test_radius_beyond_wall_is_config_error(tmp_path):
    assert main(["cavity", "--dx", "0.02", "--h-factor", "3.1", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unstable_run_exit_code(tmp_path, capsys, monkeypatch):
    from explicit_particles import solver as solver_mod

    real = solver_mod.Solver.advance

    def poisoned(self, state):
        nxt = real(self, state)
        if nxt.k == 3:
            nxt.system.velocities[0, 0] = np.nan
            raise solver_mod.InstabilityError(nxt.k, "velocity")
        return nxt

    monkeypatch.setattr(solver_mod.Solver, "advance", poisoned)
    out = tmp_path / "u"
    code = main(["taylor-green", "--dx", "0.1", "--T", "0.05", "--out", str(out)])
    assert code == EXIT_UNSTABLE
    assert "unstable" in capsys.readouterr().err
    meta = read_metadata(out / "metadata.json")
    assert meta["status"] == "unstable"
    _, rows = read_table(out / "errors.csv")
    assert len(rows) == 2  # steps before the failure are kept


def test_tau_above_bound_is_config_error(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"experiment = custom\ndx = 0.1\ntau = 0.5\nout = {tmp_path / 'x'}\n")
    assert main(["run", str(cfg)]) == EXIT_CONFIG
