"""Initial data: equilibrium, random smooth perturbations of prescribed size, manufactured solutions.

Random draws use numpy's Philox counter-based generator keyed by the
config seed. Coefficients are drawn per field in a fixed mode order that
does not depend on the grid size, so the same seed yields the same
continuous band-limited field on every grid that resolves it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .config import ConfigError, RunConfig
from .diagnostics import initial_c0
from .dynamics import FluidState, StateDerivative, equilibrium, rhs
from .fields import GridSpec
from .model import ModelParams

log = logging.getLogger(__name__)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


def half_space_modes(max_mode: int) -> list[tuple[int, int, int]]:
    """Integer wavevectors with ``|k_i| <= max_mode``, one of each ``+-k`` pair, zero excluded."""
    modes = []
    for k in product(range(-max_mode, max_mode + 1), repeat=3):
        nz = [c for c in k if c != 0]
        if nz and nz[0] > 0:
            modes.append(k)
    return modes


def synthesize(grid: GridSpec, modes, coeffs: np.ndarray) -> np.ndarray:
    """Real field ``2 Re sum_k c_k exp(i kappa k.x)``; ``coeffs`` may carry leading axes."""
    if max(max(abs(c) for c in k) for k in modes) >= grid.n // 2:
        raise ConfigError(f"modes up to {max_mode_of(modes)} are not resolvable on n={grid.n}")
    lead = coeffs.shape[:-1]
    spec = np.zeros(lead + grid.shape, dtype=complex)
    idx = np.array(modes) % grid.n
    neg = (-np.array(modes)) % grid.n
    spec[(...,) + tuple(idx.T)] += coeffs
    spec[(...,) + tuple(neg.T)] += np.conj(coeffs)
    return sfft.ifftn(spec, axes=(-3, -2, -1)).real * grid.n**3


def max_mode_of(modes) -> int:
    return max(max(abs(c) for c in k) for k in modes)


@dataclass
class InitialReport:
    target_C0: float
    achieved_C0: float
    scale: float
    shrunk: bool


def random_perturbation(grid: GridSpec, seed: int, max_mode: int, decay: float):
    """Unit-scale ``(drho, u, B)`` with ``B`` projected onto divergence-free fields."""
    rng = make_rng(seed)
    modes = half_space_modes(max_mode)
    kappa = 2.0 * np.pi / grid.length
    kvec = np.array(modes, dtype=float) * kappa
    ksq = np.sum(kvec**2, axis=1)
    amp = (1.0 + ksq) ** (-0.5 * decay)
    draws = rng.standard_normal((7, len(modes), 2))
    c = (draws[..., 0] + 1j * draws[..., 1]) * amp
    cb = c[4:7]
    cb = cb - kvec.T * (np.sum(kvec.T * cb, axis=0) / ksq)
    drho = synthesize(grid, modes, c[0])
    u = synthesize(grid, modes, c[1:4])
    B = synthesize(grid, modes, cb)
    return drho, u, B


def generate_initial_data(cfg: RunConfig, grid: GridSpec | None = None,
                          params: ModelParams | None = None) -> tuple[FluidState, InitialReport]:
    grid = grid or cfg.grid()
    params = params or cfg.params()
    base = equilibrium(grid, params)
    if cfg.init == "equilibrium":
        return base, InitialReport(0.0, 0.0, 0.0, False)
    if cfg.init == "manufactured":
        case = manufactured_case(cfg.manufactured_case, grid, params)
        state = case.exact(0.0)
        return state, InitialReport(0.0, initial_c0(state, params), 1.0, False)

    lo = params.rho_lower + cfg.d
    hi = params.rho_upper - cfg.d
    if not lo < params.rho_tilde < hi:
        raise ConfigError(f"rho_tilde={params.rho_tilde} is outside the admissible initial band ({lo}, {hi})")
    drho, u, B = random_perturbation(grid, cfg.seed, cfg.max_mode, cfg.spectral_decay_rate)
    unit = FluidState(grid, 0.0, params.rho_tilde + drho, u, base.H + B)
    # C0 is a sum of norms, so it is homogeneous of degree one in a common factor
    raw = initial_c0(unit, params)
    scale = cfg.target_C0 / raw
    shrunk = False
    for _ in range(200):
        rho0 = params.rho_tilde + scale * drho
        if lo < rho0.min() and rho0.max() < hi:
            break
        if not cfg.shrink_to_corridor:
            raise ConfigError(f"C0={cfg.target_C0} violates the initial density band ({lo}, {hi})")
        scale *= 0.5
        shrunk = True
    else:
        raise ConfigError("could not fit the initial density into the admissible band")
    state = FluidState(grid, 0.0, params.rho_tilde + scale * drho, scale * u, base.H + scale * B)
    achieved = initial_c0(state, params)
    if shrunk:
        log.warning("initial amplitude shrunk to satisfy the density band; C0 %.6g -> %.6g",
                    cfg.target_C0, achieved)
    return state, InitialReport(cfg.target_C0, achieved, scale, shrunk)


@dataclass
class ManufacturedCase:
    """Exact trajectory plus the forcing that makes it a solution of the forced system."""

    exact: Callable[[float], FluidState]
    forcing: Callable[[FluidState], StateDerivative]


def manufactured_case(case_id: int, grid: GridSpec, params: ModelParams, amplitude: float = 0.05,
                      dealias: bool = True) -> ManufacturedCase:
    """Separable time-periodic solution; forcing = d/dt(exact) - rhs(exact).

    Case 1 uses single Fourier modes in each field with ``cos t`` / ``sin t``
    time factors, so the exact time derivative is available in closed form.
    """
    if case_id != 1:
        raise ConfigError(f"unknown manufactured case {case_id}")
    x1, x2, x3 = grid.mesh
    kap = 2.0 * np.pi / grid.length
    a = amplitude
    h_t = params.H_tilde_array[:, None, None, None]
    s_rho = np.sin(kap * x1)
    s_u = np.stack([np.cos(kap * x2), np.sin(kap * x3), np.cos(kap * x1)])
    # each component is independent of its own coordinate, hence divergence-free
    s_b = np.stack([np.cos(kap * x2), np.cos(kap * x3), np.zeros_like(x1)])

    def exact(t: float) -> FluidState:
        rho = params.rho_tilde * (1.0 + a * s_rho * np.cos(t))
        u = a * np.sin(t) * s_u
        H = h_t + a * np.cos(t) * s_b
        return FluidState(grid, t, rho, u, H)

    def exact_rate(t: float) -> StateDerivative:
        rho = params.rho_tilde * (1.0 + a * s_rho * np.cos(t))
        rho_t = -params.rho_tilde * a * s_rho * np.sin(t)
        u = a * np.sin(t) * s_u
        u_t = a * np.cos(t) * s_u
        return StateDerivative(rho_t, rho_t * u + rho * u_t, -a * np.sin(t) * s_b)

    def forcing(state: FluidState) -> StateDerivative:
        t = state.t
        target = exact_rate(t)
        model = rhs(exact(t), params, None, dealias)
        return StateDerivative(target.d_rho - model.d_rho, target.d_m - model.d_m, target.d_H - model.d_H)

    return ManufacturedCase(exact, forcing)
