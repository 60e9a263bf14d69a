"""Particle paths and the density law carried along them.

Along a path ``x' = u(x, t)`` the mass equation and the definition of the
effective viscous flux combine into a scalar ODE,

    (mu + lambda) d/dt log rho(x(t), t) = -F(x(t), t) - (P(rho) - P_tilde),

which is integrated here together with the path and with the running
flux integral ``int F ds``. Comparing the carried density with the grid
density interpolated at the particle position is an end-to-end
consistency check of the field solver.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import FluidState
from .fields import GridSpec, divergence, sample_at
from .model import BlowUpError, ModelParams


@dataclass(frozen=True, eq=False)
class ParticleSet:
    positions: np.ndarray  # (P, 3), wrapped into [0, L)
    log_rho_carried: np.ndarray
    flux_integral: np.ndarray
    seed_ids: np.ndarray
    pressure_integral: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.seed_ids)

    @property
    def rho_carried(self) -> np.ndarray:
        return np.exp(self.log_rho_carried)


def lattice_seeds(grid: GridSpec, per_axis: int = 4, offset: float | None = None) -> np.ndarray:
    """Uniform sublattice of seed points shifted off the nodes by a physical ``offset``.

    The default ``L/96`` is a third of a cell at n = 32 and two thirds at
    n = 64, 128 alternately, so under grid doubling the seeds stay at the
    same points and keep the same trilinear weight product ``w(1 - w)``.
    """
    step = grid.length / per_axis
    shift = grid.length / 96.0 if offset is None else offset
    c = np.arange(per_axis) * step + shift
    return np.stack(np.meshgrid(c, c, c, indexing="ij"), axis=-1).reshape(-1, 3)


def seed_particles(state: FluidState, positions: np.ndarray, spectral: bool = False) -> ParticleSet:
    grid = state.grid
    pts = np.mod(np.asarray(positions, dtype=float), grid.length)
    rho0 = sample_at(grid, state.rho, pts, spectral)
    if np.any(rho0 <= 0):
        raise BlowUpError("rho_carried", "non-positive interpolated seed density")
    n = len(pts)
    return ParticleSet(pts, np.log(rho0), np.zeros(n), np.arange(n), np.zeros(n))


def _stage_fields(state: FluidState, params: ModelParams) -> np.ndarray:
    """Stack ``(u1, u2, u3, F)`` for one Runge-Kutta stage."""
    p = np.asarray(params.pressure.pressure(state.rho))
    F = params.bulk * divergence(state.grid, state.u) - (p - params.p_tilde)
    return np.concatenate([state.u, F[None]])


def advect(particles: ParticleSet, stages: list[FluidState], dt: float, spectral: bool = False) -> ParticleSet:
    """RK4 step of the positions using the velocity at the four field stages."""
    grid = stages[0].grid
    vel = [s.u for s in stages]
    x = particles.positions
    k1 = sample_at(grid, vel[0], x, spectral).T
    k2 = sample_at(grid, vel[1], x + 0.5 * dt * k1, spectral).T
    k3 = sample_at(grid, vel[2], x + 0.5 * dt * k2, spectral).T
    k4 = sample_at(grid, vel[3], x + dt * k3, spectral).T
    new = np.mod(x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), grid.length)
    if not np.all(np.isfinite(new)):
        raise BlowUpError("positions", "non-finite particle position")
    return replace(particles, positions=new)


def carry_log_density(particles: ParticleSet, stages: list[FluidState], params: ModelParams, dt: float,
                      spectral: bool = False) -> ParticleSet:
    """Advance positions, carried ``log rho`` and ``int F ds`` together by one RK4 step.

    ``stages`` are the field states at ``t, t+dt/2, t+dt/2, t+dt`` produced
    by the field integrator, so the particle ODE sees exactly the stage
    values the field step used.
    """
    grid = stages[0].grid
    data = [_stage_fields(s, params) for s in stages]
    law, p_ref, bulk = params.pressure, params.p_tilde, params.bulk

    def slope(i, x, logr):
        vals = sample_at(grid, data[i], x, spectral)
        rho = np.exp(logr)
        if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
            raise BlowUpError("rho_carried", "carried density left the admissible range")
        f = vals[3]
        dp = np.asarray(law.pressure(rho)) - p_ref
        return vals[:3].T, -(f + dp) / bulk, f, dp

    x0, l0 = particles.positions, particles.log_rho_carried
    v1, r1, f1, p1 = slope(0, x0, l0)
    v2, r2, f2, p2 = slope(1, x0 + 0.5 * dt * v1, l0 + 0.5 * dt * r1)
    v3, r3, f3, p3 = slope(2, x0 + 0.5 * dt * v2, l0 + 0.5 * dt * r2)
    v4, r4, f4, p4 = slope(3, x0 + dt * v3, l0 + dt * r3)
    w = dt / 6.0
    x = np.mod(x0 + w * (v1 + 2 * v2 + 2 * v3 + v4), grid.length)
    logr = l0 + w * (r1 + 2 * r2 + 2 * r3 + r4)
    flux = particles.flux_integral + w * (f1 + 2 * f2 + 2 * f3 + f4)
    pint = particles.pressure_integral
    if pint is None:
        pint = np.zeros(len(particles))
    pint = pint + w * (p1 + 2 * p2 + 2 * p3 + p4)
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(logr)):
        raise BlowUpError("rho_carried", "non-finite particle data")
    return replace(particles, positions=x, log_rho_carried=logr, flux_integral=flux, pressure_integral=pint)


def interpolated_density(particles: ParticleSet, state: FluidState, spectral: bool = False) -> np.ndarray:
    return sample_at(state.grid, state.rho, particles.positions, spectral)


def consistency_error(particles: ParticleSet, state: FluidState, params: ModelParams,
                      spectral: bool = False) -> np.ndarray:
    """Per-particle ``|rho_carried - rho_interp| / rho_tilde``."""
    rho_i = interpolated_density(particles, state, spectral)
    return np.abs(particles.rho_carried - rho_i) / params.rho_tilde


@dataclass(frozen=True)
class ParticleSample:
    t: float
    seed_id: np.ndarray
    positions: np.ndarray
    rho_interp: np.ndarray
    rho_carried: np.ndarray
    flux_integral: np.ndarray


def sample_particles(particles: ParticleSet, state: FluidState, spectral: bool = False) -> ParticleSample:
    return ParticleSample(state.t, particles.seed_ids.copy(), particles.positions.copy(),
                          interpolated_density(particles, state, spectral), particles.rho_carried.copy(),
                          particles.flux_integral.copy())


def corridor_certificate(samples: list[ParticleSample], params: ModelParams, history=None) -> dict:
    """Per-particle density excursion and flux-integral swing, plus the grid-wide corridor verdict.

    ``history`` is a sequence of diagnostics records (``rho_min``/``rho_max``);
    when omitted only the particle densities are used for the corridor.
    """
    if not samples:
        raise ValueError("no particle samples")
    log_ref = np.log(params.rho_tilde)
    logs = np.array([np.log(s.rho_carried) for s in samples])
    flux = np.array([s.flux_integral for s in samples])
    excursion = np.max(np.abs(logs - log_ref), axis=0)
    # max over t0 < t1 of |int_{t0}^{t1} F ds| is the range of the running integral
    swing = np.max(flux, axis=0) - np.min(flux, axis=0)
    if history:
        lo = min(r.rho_min for r in history)
        hi = max(r.rho_max for r in history)
    else:
        dens = np.array([s.rho_interp for s in samples])
        lo, hi = float(dens.min()), float(dens.max())
    return {
        "seed_id": samples[0].seed_id,
        "log_rho_excursion": excursion,
        "flux_swing": swing,
        "max_log_rho_excursion": float(excursion.max()),
        "max_flux_swing": float(swing.max()),
        "rho_min": lo,
        "rho_max": hi,
        "rho_lower": params.rho_lower,
        "rho_upper": params.rho_upper,
        "inside": bool(params.rho_lower <= lo and hi <= params.rho_upper),
    }
