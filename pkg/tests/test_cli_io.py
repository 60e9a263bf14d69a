import json
import math

import numpy as np
import pytest

from mhd0.cli import main
from mhd0.config import ConfigError, RunConfig, format_config, parse_config
from mhd0.diagnostics import initial_c0
from mhd0.driver import EXIT_BLOWUP, EXIT_CONFIG, EXIT_OK, recompute_c0, run, simulate
from mhd0.fields import GridSpec, divergence, lp_norm
from mhd0.initial_data import generate_initial_data, half_space_modes
from mhd0.snapshot import GridMismatchError, SnapshotError, read_snapshot, write_snapshot

from conftest import random_state


def test_parse_config_roundtrip():
    cfg = RunConfig(n=16, seed=7, H_tilde=(0.5, 0.0, 1.0), dealias=False, init="equilibrium")
    assert parse_config(format_config(cfg)) == cfg


def test_parse_config_errors():
    with pytest.raises(ConfigError):
        parse_config("nonsense = 1\n")
    with pytest.raises(ConfigError):
        parse_config("n = sixteen\n")
    with pytest.raises(ConfigError):
        parse_config("just text\n")
    parse_config("# comment only\n\n n = 16  # trailing\n")


@pytest.mark.parametrize("kw", [dict(t_end=0.0), dict(diagnostics_every=0), dict(snapshot_every=0),
                                dict(init="random_smooth", target_C0=0.0), dict(init="bogus"),
                                dict(rho_lower=1.0), dict(n=15), dict(pressure="ideal")])
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw).validate()


def test_half_space_modes_cover_each_pair_once():
    modes = half_space_modes(2)
    assert len(modes) == (5**3 - 1) // 2
    assert not set(modes) & {tuple(-c for c in k) for k in modes}


def test_equilibrium_initial_data():
    s, rep = generate_initial_data(RunConfig(n=16, init="equilibrium"))
    assert np.all(s.rho == 1.0) and np.all(s.u == 0.0) and np.all(s.H == 1.0)
    assert rep.achieved_C0 == 0.0


def test_random_initial_data_hits_target_c0():
    cfg = RunConfig(n=16, seed=3, target_C0=1e-2)
    s, rep = generate_initial_data(cfg)
    params = cfg.params()
    assert abs(initial_c0(s, params) - 1e-2) <= 1e-14
    assert rep.achieved_C0 == initial_c0(s, params)
    assert lp_norm(s.grid, divergence(s.grid, s.H)) <= 1e-12
    s2, _ = generate_initial_data(cfg)
    assert np.array_equal(s.rho, s2.rho) and np.array_equal(s.u, s2.u) and np.array_equal(s.H, s2.H)


def test_random_initial_data_is_grid_independent():
    a, _ = generate_initial_data(RunConfig(n=16, seed=5))
    b, _ = generate_initial_data(RunConfig(n=32, seed=5))
    np.testing.assert_allclose(b.rho[::2, ::2, ::2], a.rho, atol=1e-14)
    np.testing.assert_allclose(b.H[:, ::2, ::2, ::2], a.H, atol=1e-14)


def test_large_c0_shrinks_or_fails():
    cfg = RunConfig(n=16, seed=1, L=1.0, target_C0=1e4)
    s, rep = generate_initial_data(cfg)
    assert rep.shrunk and rep.achieved_C0 < 1e4
    assert s.rho.min() > 0.75 and s.rho.max() < 1.25
    with pytest.raises(ConfigError):
        generate_initial_data(cfg.with_overrides(shrink_to_corridor=False))


def test_snapshot_roundtrip(tmp_path, params):
    grid = GridSpec(16)
    s = random_state(grid, params, 3, kmax=3).copy_with(t=1.25)
    path = tmp_path / "s.bin"
    write_snapshot(s, path)
    r = read_snapshot(path, grid)
    assert r.t == 1.25
    for a, b in ((s.rho, r.rho), (s.u, r.u), (s.H, r.H)):
        assert np.array_equal(a, b)
    assert path.read_bytes()[:4] == b"MHD0"
    assert path.stat().st_size == 28 + 7 * 16**3 * 8


def test_snapshot_errors(tmp_path, params):
    grid = GridSpec(16)
    path = tmp_path / "s.bin"
    write_snapshot(random_state(grid, params, 3, kmax=3), path)
    with pytest.raises(GridMismatchError):
        read_snapshot(path, GridSpec(32))
    data = path.read_bytes()
    (tmp_path / "short.bin").write_bytes(data[:-8])
    with pytest.raises(SnapshotError):
        read_snapshot(tmp_path / "short.bin")
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + data[4:])
    with pytest.raises(SnapshotError):
        read_snapshot(tmp_path / "bad.bin")
    with pytest.raises(SnapshotError):
        read_snapshot(tmp_path / "missing.bin")


def _write_cfg(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


def test_equilibrium_run_exit_zero(tmp_path):
    cfg = RunConfig(n=16, init="equilibrium", t_end=1.0, dt=0.01, diagnostics_every=10, output=str(tmp_path / "o"))
    assert run(cfg) == EXIT_OK
    lines = (tmp_path / "o" / "diagnostics.csv").read_text().splitlines()
    assert len(lines) == 1 + 100 // 10 + 1
    header = lines[0].split(",")
    assert header[0] == "t" and header[-1] == "rho_max" and len(header) == 19
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    residual_cols = [header.index(c) for c in ("energy_residual", "res_momdecomp", "res_poissonflux", "res_wv",
                                               "divH_L2")]
    assert np.all(np.abs(rows[:, residual_cols]) <= 1e-12)


def test_random_run_artifacts(tmp_path):
    out = tmp_path / "o"
    cfg = RunConfig(n=16, seed=2, t_end=0.3, dt=0.05, diagnostics_every=4, snapshot_every=2,
                    particles_every=3, particles_per_axis=2, output=str(out))
    res = simulate(cfg)
    assert res.exit_code == EXIT_OK
    steps = 6
    assert len((out / "diagnostics.csv").read_text().splitlines()) == 1 + steps // 4 + 1
    assert len((out / "particles.csv").read_text().splitlines()) == 1 + 8 * (steps // 3 + 1)
    assert sorted(p.name for p in out.glob("snapshot_*.bin")) == [f"snapshot_{k:08d}.bin" for k in (0, 2, 4, 6)]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["corridor_verdict"] == "PASS"
    assert abs(summary["achieved_C0"] - recompute_c0(out / "snapshot_00000000.bin", cfg)) <= 1e-12
    final = read_snapshot(out / "snapshot_00000006.bin", cfg.grid())
    assert final.t == pytest.approx(0.3, abs=1e-15)


def test_cli_exit_codes(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, "init = equilibrium\nn = 16\nt_end = 0.1\ndt = 0.05\n")
    assert main(["run", str(cfg), "--output", str(tmp_path / "a")]) == EXIT_OK
    assert "corridor_verdict" in capsys.readouterr().out
    bad = _write_cfg(tmp_path, "n = 16\nrho_lower = 1.2\n")
    assert main(["run", str(bad)]) == EXIT_CONFIG
    assert main(["run", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    assert main(["bogus"]) == EXIT_CONFIG


def test_cli_overrides(tmp_path):
    cfg = _write_cfg(tmp_path, "n = 16\nt_end = 5\ndt = 0.05\n")
    out = tmp_path / "b"
    assert main(["run", str(cfg), "--output", str(out), "--seed", "9", "--t-end", "0.1", "--grid", "8"]) == 0
    used = parse_config((out / "config.used").read_text())
    assert (used.n, used.seed, used.t_end) == (8, 9, 0.1)


def test_blowup_exit_code(tmp_path):
    # a far-too-large fixed step drives the density negative
    cfg = RunConfig(n=16, seed=1, L=2.0, target_C0=0.5, t_end=5.0, dt=2.0, output=str(tmp_path / "c"))
    assert run(cfg) == EXIT_BLOWUP
    summary = json.loads((tmp_path / "c" / "summary.json").read_text())
    assert summary["status"].startswith("blowup")
    assert math.isfinite(summary["A_final"])
