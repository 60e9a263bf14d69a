"""Acceptance criteria, each run at its stated tolerance with one PASS/FAIL line per criterion."""

import time

import numpy as np
import pytest

from mhd0.config import RunConfig
from mhd0.diagnostics import (AFunctionalAccumulator, DiagnosticsRecord, auxiliary_wv, diagnose,
                              elliptic_norm_report, energy_ledger, momentum_decomposition_residual,
                              poisson_flux_residual)
from mhd0.driver import simulate
from mhd0.dynamics import cfl_dt, div_h_norm, equilibrium, rhs, step_rk4
from mhd0.fields import GridSpec, curl, divergence, lp_norm
from mhd0.initial_data import generate_initial_data
from mhd0.model import ModelParams, NonMonotone, validate_pressure_law

from conftest import ACCEPTANCE_LINES, random_state

# small-data run: n = 32, C0 = 1e-2, gamma = 1.4, mu = lambda = 0.1 on a box of side 4 pi
SMALL = dict(n=32, L=4 * np.pi, target_C0=1e-2, gamma=1.4, mu=0.1, lambda_=0.1, seed=0)
NONMONO = ModelParams(pressure=NonMonotone(0.8, 1.2))


def record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def identity_suite(params):
    grid = GridSpec(32)
    worst = dict(mom=0.0, poisson=0.0, wv=0.0, divcurl=0.0)
    t0 = time.perf_counter()
    for seed in range(20):
        s = random_state(grid, params, seed, n_modes=10, kmax=5)
        d = rhs(s, params, dealias=False)
        worst["mom"] = max(worst["mom"], momentum_decomposition_residual(s, d, params))
        worst["poisson"] = max(worst["poisson"], poisson_flux_residual(s, d, params))
        worst["wv"] = max(worst["wv"], auxiliary_wv(s, params).identity_residual)
        v = s.u
        worst["divcurl"] = max(worst["divcurl"], lp_norm(grid, divergence(grid, curl(grid, v))) / lp_norm(grid, v))
    elapsed = time.perf_counter() - t0
    ok = (worst["mom"] <= 1e-10 and worst["poisson"] <= 1e-10 and worst["wv"] <= 1e-11
          and worst["divcurl"] <= 1e-12 and elapsed < 60)
    detail = ", ".join(f"{k}={v:.2e}" for k, v in worst.items()) + f", {elapsed:.1f}s"
    return ok, detail


def equilibrium_suite(params, steps=1000):
    grid = GridSpec(16)
    s0 = equilibrium(grid, params)
    dt = cfl_dt(s0, params)
    s = s0
    for _ in range(steps):
        s = step_rk4(s, params, dt)
    dev = max(np.abs(s.rho - s0.rho).max(), np.abs(s.u).max(), np.abs(s.H - s0.H).max())
    d = rhs(s, params)
    rec, acc = diagnose(s, d, params, AFunctionalAccumulator())
    nonzero = [c for c in DiagnosticsRecord.columns()
               if c not in ("t", "rho_min", "rho_max") and getattr(rec, c) != 0.0]
    report = elliptic_norm_report(s, d, params)
    degenerate = all(report[k] == "degenerate" for k in ("ratio_lap_u", "ratio_D3u", "ratio_grad_F"))
    ok = dev <= 1e-12 and not nonzero and acc.value == 0.0 and degenerate
    return ok, f"{steps} steps, max deviation {dev:.1e}, nonzero diagnostics {nonzero or 'none'}"


def test_criterion_1_identity_suite():
    ok, detail = identity_suite(ModelParams())
    assert record(1, ok, detail)


def test_criterion_2_equilibrium_fixed_point():
    ok, detail = equilibrium_suite(ModelParams())
    assert record(2, ok, detail)


@pytest.fixture(scope="module")
def energy_runs():
    """T = 1 runs of the small-data config at dt = 1/128, 1/256, 1/512."""
    cfg = RunConfig(**SMALL, t_end=1.0)
    params = cfg.params()
    s0, _ = generate_initial_data(cfg)
    e0 = energy_ledger(s0, params).total
    mass0 = float(np.sum(s0.rho))
    out = {"residuals": [], "max_div": 0.0, "max_mass_drift": 0.0, "div_tol": 1e-8}
    t0 = time.perf_counter()
    for n_steps in (128, 256, 512):
        s = s0
        for _ in range(n_steps):
            s = step_rk4(s, params, 1.0 / n_steps)
            out["max_div"] = max(out["max_div"], div_h_norm(s))
            out["max_mass_drift"] = max(out["max_mass_drift"], abs(float(np.sum(s.rho)) - mass0) / mass0)
        out["residuals"].append(abs(energy_ledger(s, params).total - e0 + s.dissipated))
    out["elapsed"] = time.perf_counter() - t0
    return out


def test_criterion_3_energy_balance_order(energy_runs):
    r = energy_runs["residuals"]
    ratios = [r[0] / r[1], r[1] / r[2]]
    ok = all(13.0 <= q <= 19.0 for q in ratios) and energy_runs["elapsed"] < 300
    detail = (f"residuals {', '.join(f'{x:.3e}' for x in r)}; ratios {ratios[0]:.2f}, {ratios[1]:.2f}; "
              f"{energy_runs['elapsed']:.0f}s")
    assert record(3, ok, detail)


def test_criterion_4_solenoidal_and_mass(energy_runs):
    ok = energy_runs["max_div"] <= 1e-8 and energy_runs["max_mass_drift"] <= 1e-12
    detail = f"max |div H|_L2 {energy_runs['max_div']:.2e}, max mass drift {energy_runs['max_mass_drift']:.2e}"
    assert record(4, ok, detail)


@pytest.fixture(scope="module")
def long_runs():
    """T = 5 small-data runs at n = 32 (every step diagnosed) and n = 64."""
    t0 = time.perf_counter()
    coarse = simulate(RunConfig(**SMALL, t_end=5.0, diagnostics_every=1, particles_every=1), write=False)
    fine = simulate(RunConfig(**{**SMALL, "n": 64}, t_end=5.0, diagnostics_every=25, particles_every=5),
                    write=False)
    return coarse, fine, time.perf_counter() - t0


def _particle_error(result):
    return max(float(np.max(np.abs(s.rho_carried - s.rho_interp))) for s in result.samples)


def test_criterion_5_lagrangian_cross_check(long_runs):
    coarse, fine, elapsed = long_runs
    rho_t = RunConfig(**SMALL).rho_tilde
    e32, e64 = _particle_error(coarse) / rho_t, _particle_error(fine) / rho_t
    ok = (coarse.exit_code == 0 and fine.exit_code == 0 and e32 <= 1e-3 and e64 < e32 and elapsed < 600)
    detail = f"n=32 {e32:.3e}, n=64 {e64:.3e}, reduction {e32 / e64:.2f}x, {elapsed:.0f}s"
    assert record(5, ok, detail)


def test_criterion_6_corridor_and_a_functional(long_runs):
    coarse, _, _ = long_runs
    params = ModelParams()
    recs = coarse.records
    inside = all(0.5 * params.rho_tilde <= r.rho_min and r.rho_max <= 1.5 * params.rho_tilde for r in recs)
    a = np.array([r.A_func for r in recs])
    nondecreasing = bool(np.all(np.diff(a) >= 0))
    # bounded: finite, and growth over the last fifth of the run below growth over the first fifth
    k = len(a) // 5
    saturating = (a[-1] - a[-1 - k]) < (a[k] - a[0])
    ok = inside and nondecreasing and bool(np.all(np.isfinite(a))) and saturating
    detail = (f"rho in [{min(r.rho_min for r in recs):.6f}, {max(r.rho_max for r in recs):.6f}], "
              f"A nondecreasing={nondecreasing}, A(0)={a[0]:.4e}, A(T)={a[-1]:.4e}, "
              f"first/last fifth growth {a[k] - a[0]:.2e}/{a[-1] - a[-1 - k]:.2e}")
    assert record(6, ok, detail)


def test_criterion_7_nonmonotone_pressure():
    report = validate_pressure_law(NONMONO.pressure)
    ok1, d1 = identity_suite(NONMONO)
    ok2, d2 = equilibrium_suite(NONMONO)
    ok = report["ok"] and ok1 and ok2
    assert record(7, ok, f"validation {report['ok']}; identities: {d1}; equilibrium: {d2}")


def test_criterion_8_determinism(tmp_path):
    cfg = RunConfig(n=16, L=4 * np.pi, seed=42, t_end=0.5, diagnostics_every=2, snapshot_every=3)
    for tag in ("a", "b"):
        assert simulate(cfg, tmp_path / tag).exit_code == 0
    names = ["diagnostics.csv", "particles.csv"] + sorted(p.name for p in (tmp_path / "a").glob("*.bin"))
    same = [(tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in names]
    ok = all(same) and len(names) > 3
    assert record(8, ok, f"{sum(same)}/{len(names)} files byte-identical")
