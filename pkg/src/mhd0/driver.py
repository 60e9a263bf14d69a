"""Run orchestration: time loop, CSV time series, snapshots, particles and the run summary."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, format_config
from .diagnostics import AFunctionalAccumulator, DiagnosticsRecord, diagnose, initial_c0
from .dynamics import FluidState, cfl_dt, div_h_norm, div_h_tolerance, rhs, step_rk4
from .fields import set_workers
from .initial_data import InitialReport, generate_initial_data, manufactured_case
from .lagrangian import (ParticleSample, carry_log_density, corridor_certificate, lattice_seeds,
                         sample_particles, seed_particles)
from .model import BlowUpError, ModelError
from .snapshot import write_snapshot

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3

PARTICLE_COLUMNS = ["t", "seed_id", "x1", "x2", "x3", "rho_interp", "rho_carried", "flux_integral"]


def fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass
class RunResult:
    exit_code: int
    summary: dict
    records: list[DiagnosticsRecord] = field(default_factory=list)
    samples: list[ParticleSample] = field(default_factory=list)
    initial: FluidState | None = None
    final: FluidState | None = None
    report: InitialReport | None = None


class _Writer:
    """Append-only CSV writer that flushes every row so a blow-up leaves a readable file."""

    def __init__(self, path: Path | None, header: list[str]):
        self.fh = open(path, "w", newline="\n") if path is not None else None
        if self.fh:
            self.fh.write(",".join(header) + "\n")

    def row(self, values) -> None:
        if self.fh:
            self.fh.write(",".join(values) + "\n")
            self.fh.flush()

    def close(self) -> None:
        if self.fh:
            self.fh.close()


def _step_count(cfg: RunConfig) -> int | None:
    if cfg.dt > 0:
        return max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9))
    return None


def summarize(cfg: RunConfig, records, samples, report, params, status: str, steps: int,
              max_div: float, final_t: float) -> dict:
    first = records[0]
    mass0 = first.mass
    mass_drift = max(abs(r.mass - mass0) / mass0 for r in records)
    certificate = corridor_certificate(samples, params, records) if samples else None
    particle_err = (max(float(np.max(np.abs(s.rho_carried - s.rho_interp))) for s in samples)
                    / params.rho_tilde if samples else float("nan"))
    a_values = [r.A_func for r in records]
    inside = all(params.rho_lower <= r.rho_min and r.rho_max <= params.rho_upper for r in records)
    return {
        "status": status,
        "steps": steps,
        "t_final": final_t,
        "target_C0": report.target_C0,
        "achieved_C0": report.achieved_C0,
        "amplitude_shrunk": report.shrunk,
        "A_final": records[-1].A_func,
        "A_nondecreasing": bool(all(b >= a for a, b in zip(a_values, a_values[1:]))),
        "energy_residual_final": records[-1].energy_residual,
        "energy_residual_max": max(abs(r.energy_residual) for r in records),
        "max_res_momdecomp": max(r.res_momdecomp for r in records),
        "max_res_poissonflux": max(r.res_poissonflux for r in records),
        "max_res_wv": max(r.res_wv for r in records),
        "max_divH_L2": max_div,
        "mass_drift_max": mass_drift,
        "rho_min": min(r.rho_min for r in records),
        "rho_max": max(r.rho_max for r in records),
        "corridor": [params.rho_lower, params.rho_upper],
        "corridor_verdict": "PASS" if inside else "FAIL",
        "particle_consistency_max": particle_err,
        "max_log_rho_excursion": certificate["max_log_rho_excursion"] if certificate else None,
        "max_flux_swing": certificate["max_flux_swing"] if certificate else None,
    }


def simulate(cfg: RunConfig, output: str | Path | None = "default", write: bool = True) -> RunResult:
    """Run one configuration. Raises ``ConfigError``; blow-ups are caught and reported.

    ``output="default"`` uses ``cfg.output``; ``write=False`` keeps everything in memory.
    """
    cfg.validate()
    set_workers(None, cfg.deterministic)
    grid = cfg.grid()
    params = cfg.params()
    state, report = generate_initial_data(cfg, grid, params)
    forcing = None
    if cfg.init == "manufactured":
        forcing = manufactured_case(cfg.manufactured_case, grid, params, dealias=cfg.dealias).forcing

    out = None
    if write:
        out = Path(cfg.output if output == "default" else output)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "config.used").write_text(format_config(cfg))
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
        write_snapshot(state, out / "snapshot_00000000.bin")

    diag_csv = _Writer(out / "diagnostics.csv" if out else None, DiagnosticsRecord.columns())
    part_csv = _Writer(out / "particles.csv" if out else None, PARTICLE_COLUMNS)
    records: list[DiagnosticsRecord] = []
    samples: list[ParticleSample] = []

    def emit_particles(p, s):
        smp = sample_particles(p, s, cfg.spectral_interp)
        samples.append(smp)
        for i in range(len(smp.seed_id)):
            part_csv.row([fmt(smp.t), str(int(smp.seed_id[i]))] + [fmt(x) for x in smp.positions[i]]
                         + [fmt(smp.rho_interp[i]), fmt(smp.rho_carried[i]), fmt(smp.flux_integral[i])])

    acc = AFunctionalAccumulator()
    energy0 = None
    initial = state
    fixed_steps = _step_count(cfg)
    step = 0
    status = "ok"
    max_div = div_h_norm(state)
    started = time.perf_counter()
    try:
        deriv = rhs(state, params, forcing, cfg.dealias)
        rec, acc = diagnose(state, deriv, params, acc)
        energy0 = rec.energy
        records.append(rec)
        diag_csv.row([fmt(x) for x in rec.row()])
        # seeds take the exact (spectral) initial density so interpolation error is not cancelled
        particles = seed_particles(state, lattice_seeds(grid, cfg.particles_per_axis), spectral=True)
        emit_particles(particles, state)

        while True:
            remaining = cfg.t_end - state.t
            if fixed_steps is not None:
                if step >= fixed_steps:
                    break
                dt = cfg.dt if step < fixed_steps - 1 else remaining
            else:
                if remaining <= 1e-12 * cfg.t_end:
                    break
                dt = min(cfl_dt(state, params, cfg.cfl, cfg.visc_cfl), remaining)
            state, stages = step_rk4(state, params, dt, forcing, cfg.dealias, return_stages=True)
            if fixed_steps is not None and step == fixed_steps - 1:
                state = state.copy_with(t=cfg.t_end)
            particles = carry_log_density(particles, stages, params, dt, cfg.spectral_interp)
            step += 1
            div = div_h_norm(state)
            max_div = max(max_div, div)
            if div > div_h_tolerance(state, cfg.div_tol_scale):
                raise BlowUpError("divH", f"div H = {div:.3e} exceeds tolerance at t = {state.t:.6g}")
            if step % cfg.diagnostics_every == 0:
                deriv = rhs(state, params, forcing, cfg.dealias)
                rec, acc = diagnose(state, deriv, params, acc, energy0)
                records.append(rec)
                diag_csv.row([fmt(x) for x in rec.row()])
            if step % cfg.particles_every == 0:
                emit_particles(particles, state)
            if out and step % cfg.snapshot_every == 0:
                write_snapshot(state, out / f"snapshot_{step:08d}.bin")
        if out and step % cfg.snapshot_every != 0:
            write_snapshot(state, out / f"snapshot_{step:08d}.bin")
        code = EXIT_OK
    except (BlowUpError, FloatingPointError) as exc:
        status = f"blowup: {exc}"
        log.error("blow-up at step %d, t = %.6g: %s", step, state.t, exc)
        code = EXIT_BLOWUP
    finally:
        diag_csv.close()
        part_csv.close()

    summary = summarize(cfg, records, samples, report, params, status, step, max_div, state.t)
    summary["wall_seconds"] = round(time.perf_counter() - started, 3)
    if out:
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return RunResult(code, summary, records, samples, initial, state, report)


def run(cfg: RunConfig, output: str | Path | None = "default") -> int:
    """Exit-code contract: 0 success, 2 configuration error, 3 blow-up."""
    try:
        result = simulate(cfg, output)
    except (ConfigError, ModelError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    print(json.dumps(result.summary, indent=2, sort_keys=True))
    return result.exit_code


def recompute_c0(path, cfg: RunConfig) -> float:
    """C0 measured from a written snapshot, for checking the reported value."""
    from .snapshot import read_snapshot

    return initial_c0(read_snapshot(path, cfg.grid()), cfg.params())
