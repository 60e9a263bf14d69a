"""Time evolution of the zero-resistivity barotropic MHD system.

The evolved variables are conservative, ``(rho, m = rho u, H)``:

    rho_t   = -div(rho u)
    m^j_t   = -d_k[rho u^j u^k + (P + |H|^2/2) delta_jk - H^j H^k]
              + mu lap u^j + lambda d_j div u
    H^j_t   = -d_k[H^j u^k - u^j H^k]

Every flux is a divergence, so mass and momentum are conserved to
round-off, and the induction flux is antisymmetric, so ``div H`` is
preserved to round-off by spectral differentiation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .fields import GridSpec, divergence, forward, gradient, inverse, lp_norm, sobolev_norm
from .fields import dealias as dealias_field
from .model import BlowUpError, ModelParams

_AXES = (-3, -2, -1)
_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_INDUCTION_PAIRS = ((0, 1), (0, 2), (1, 2))


class CFLWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class FluidState:
    """Snapshot of ``(t, rho, u, H)`` on one grid.

    ``dissipated`` is the running time integral of the viscous dissipation
    rate, integrated by the same Runge-Kutta stages as the fields.
    """

    grid: GridSpec
    t: float
    rho: np.ndarray
    u: np.ndarray
    H: np.ndarray
    dissipated: float = 0.0

    def __post_init__(self):
        n = self.grid.shape
        if self.rho.shape != n or self.u.shape != (3,) + n or self.H.shape != (3,) + n:
            raise ValueError("state arrays do not match the grid")

    @property
    def momentum(self) -> np.ndarray:
        return self.rho * self.u

    def B(self, params: ModelParams) -> np.ndarray:
        return self.H - params.H_tilde_array[:, None, None, None]

    def copy_with(self, **kw) -> "FluidState":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class StateDerivative:
    d_rho: np.ndarray
    d_m: np.ndarray
    d_H: np.ndarray
    dissipation: float = 0.0

    def __add__(self, other: "StateDerivative") -> "StateDerivative":
        return StateDerivative(self.d_rho + other.d_rho, self.d_m + other.d_m,
                               self.d_H + other.d_H, self.dissipation)


Forcing = Callable[[FluidState], StateDerivative]


def equilibrium(grid: GridSpec, params: ModelParams, t: float = 0.0) -> FluidState:
    rho = np.full(grid.shape, params.rho_tilde)
    H = np.broadcast_to(params.H_tilde_array[:, None, None, None], (3,) + grid.shape).copy()
    return FluidState(grid, t, rho, grid.zeros(3), H)


def check_admissible(state: FluidState) -> None:
    for name in ("rho", "u", "H"):
        arr = getattr(state, name)
        if not np.all(np.isfinite(arr)):
            raise BlowUpError(name, "non-finite values")
    if np.any(state.rho <= 0):
        raise BlowUpError("rho", f"non-positive density (min {state.rho.min():.3e})")


def _fluctuation_spectrum(a: np.ndarray) -> np.ndarray:
    return forward(a - a.mean(axis=_AXES, keepdims=True))


def dissipation_rate(grid: GridSpec, u: np.ndarray, params: ModelParams, uh: np.ndarray | None = None) -> float:
    """``int mu |grad u|^2 + lambda (div u)^2 dx`` evaluated spectrally."""
    if uh is None:
        uh = _fluctuation_spectrum(u)
    k = grid.wavenumbers
    w = grid.rfft_weights
    grad_sq = np.sum(w * grid.k_squared * np.sum(np.abs(uh) ** 2, axis=0))
    div_h = sum(k[i] * uh[i] for i in range(3))
    div_sq = np.sum(w * np.abs(div_h) ** 2)
    scale = grid.cell_volume / grid.n**3
    return float((params.mu * grad_sq + params.lambda_ * div_sq) * scale)


def rhs(state: FluidState, params: ModelParams, forcing: Optional[Forcing] = None,
        dealias: bool = True) -> StateDerivative:
    """Time derivatives of ``(rho, m, H)``; products of fields are 2/3-dealiased when ``dealias``."""
    check_admissible(state)
    grid = state.grid
    rho, u, H = state.rho, state.u, state.H

    # rows: 3 mass fluxes, 6 (Reynolds - Maxwell) stresses, |H|^2/2 + P, 3 induction, 3 velocity
    buf = np.empty((16,) + grid.shape)
    m = np.multiply(rho, u, out=buf[0:3])
    for i, (j, c) in enumerate(_PAIRS):
        np.multiply(m[j], u[c], out=buf[3 + i])
        buf[3 + i] -= H[j] * H[c]
    np.einsum("i...,i...->...", H, H, out=buf[9])
    buf[9] *= 0.5
    for i, (j, c) in enumerate(_INDUCTION_PAIRS):
        np.multiply(H[j], u[c], out=buf[10 + i])
        buf[10 + i] -= u[j] * H[c]
    buf[13:16] = u
    buf -= buf.mean(axis=_AXES, keepdims=True)
    ph = forward(buf)
    if dealias:
        ph[:13] *= grid.dealias_mask
    p = np.asarray(params.pressure.pressure(rho), dtype=float)
    ph[9] += forward(p - p.mean())

    k = [1j * kk for kk in grid.wavenumbers]
    mass_h, stress, iso, ind, uh = ph[0:3], ph[3:9], ph[9], ph[10:13], ph[13:16]
    sym = {pair: stress[i] for i, pair in enumerate(_PAIRS)}
    sym.update({(c, j): stress[i] for i, (j, c) in enumerate(_PAIRS)})
    anti = {pair: ind[i] for i, pair in enumerate(_INDUCTION_PAIRS)}
    anti.update({(c, j): -ind[i] for i, (j, c) in enumerate(_INDUCTION_PAIRS)})

    div_uh = k[0] * uh[0] + k[1] * uh[1] + k[2] * uh[2]
    spec = np.empty((7,) + ph.shape[1:], dtype=ph.dtype)
    spec[0] = -(k[0] * mass_h[0] + k[1] * mass_h[1] + k[2] * mass_h[2])
    mu_ksq = params.mu * grid.k_squared
    for j in range(3):
        acc = k[j] * (params.lambda_ * div_uh - iso)
        acc -= mu_ksq * uh[j]
        for c in range(3):
            acc -= k[c] * sym[(j, c)]
        spec[1 + j] = acc
        others = [c for c in range(3) if c != j]
        spec[4 + j] = -(k[others[0]] * anti[(j, others[0])] + k[others[1]] * anti[(j, others[1])])

    out = inverse(spec, grid)
    deriv = StateDerivative(out[0], out[1:4], out[4:7], dissipation_rate(grid, u, params, uh))
    if forcing is not None:
        deriv = deriv + forcing(state)
    for name in ("d_rho", "d_m", "d_H"):
        if not np.all(np.isfinite(getattr(deriv, name))):
            raise BlowUpError(name, "non-finite time derivative")
    return deriv


def u_t(state: FluidState, deriv: StateDerivative) -> np.ndarray:
    """``u_t = (m_t - u rho_t)/rho``."""
    return (deriv.d_m - state.u * deriv.d_rho) / state.rho


def advective_derivative(grid: GridSpec, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``(u . grad) v`` for a vector field ``v``."""
    gv = gradient(grid, v)  # gv[k, j] = d_k v^j
    return np.einsum("k...,kj...->j...", u, gv)


def u_dot(state: FluidState, deriv: StateDerivative) -> np.ndarray:
    """Material acceleration ``u_t + (u . grad) u``."""
    return u_t(state, deriv) + advective_derivative(state.grid, state.u, state.u)


def magnetic_force(grid: GridSpec, H: np.ndarray, dealias: bool = False) -> np.ndarray:
    """``-grad(|H|^2/2) + div(H^j H)``, component j on the leading axis."""
    h2 = 0.5 * np.sum(H * H, axis=0)
    hh = H[:, None] * H[None, :]
    if dealias:
        h2 = dealias_field(grid, h2)
        hh = dealias_field(grid, hh)
    # hh[j, k] = H^j H^k; divergence contracts the leading axis, so pass the transpose
    return -gradient(grid, h2) + divergence(grid, np.swapaxes(hh, 0, 1))


def _advance(base: FluidState, deriv: StateDerivative, h: float, t: float) -> FluidState:
    rho = base.rho + h * deriv.d_rho
    m = base.rho * base.u + h * deriv.d_m
    H = base.H + h * deriv.d_H
    if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
        raise BlowUpError("rho", "non-positive or non-finite density during Runge-Kutta stage")
    return FluidState(base.grid, t, rho, m / rho, H, base.dissipated)


def step_rk4(state: FluidState, params: ModelParams, dt: float, forcing: Optional[Forcing] = None,
             dealias: bool = True, return_stages: bool = False, cfl_limit: float | None = None):
    """Classical four-stage Runge-Kutta step on ``(rho, m, H)`` and the dissipation integral.

    With ``return_stages`` the result is ``(new_state, stages)`` where
    ``stages`` are the four intermediate states at ``t, t+dt/2, t+dt/2, t+dt``.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if cfl_limit is not None and dt > cfl_limit * (1 + 1e-12):
        warnings.warn(f"dt={dt:.4g} exceeds the CFL bound {cfl_limit:.4g}", CFLWarning, stacklevel=2)
    if dt == 0:
        return (state, [state] * 4) if return_stages else state
    t = state.t
    s1 = state
    k1 = rhs(s1, params, forcing, dealias)
    s2 = _advance(state, k1, 0.5 * dt, t + 0.5 * dt)
    k2 = rhs(s2, params, forcing, dealias)
    s3 = _advance(state, k2, 0.5 * dt, t + 0.5 * dt)
    k3 = rhs(s3, params, forcing, dealias)
    s4 = _advance(state, k3, dt, t + dt)
    k4 = rhs(s4, params, forcing, dealias)

    w = dt / 6.0
    rho = state.rho + w * (k1.d_rho + 2 * k2.d_rho + 2 * k3.d_rho + k4.d_rho)
    m = state.rho * state.u + w * (k1.d_m + 2 * k2.d_m + 2 * k3.d_m + k4.d_m)
    H = state.H + w * (k1.d_H + 2 * k2.d_H + 2 * k3.d_H + k4.d_H)
    q = state.dissipated + w * (k1.dissipation + 2 * k2.dissipation + 2 * k3.dissipation + k4.dissipation)
    if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
        raise BlowUpError("rho", "non-positive or non-finite density after step")
    new = FluidState(state.grid, t + dt, rho, m / rho, H, q)
    check_admissible(new)
    if return_stages:
        return new, [s1, s2, s3, s4]
    return new


def fast_speed_squared(state: FluidState, params: ModelParams) -> np.ndarray:
    """Pointwise ``P'(rho) + |H|^2/rho`` (negative P' clipped to zero)."""
    dp = np.maximum(np.asarray(params.pressure.derivative(state.rho)), 0.0)
    return dp + np.sum(state.H**2, axis=0) / state.rho


def cfl_dt(state: FluidState, params: ModelParams, cfl: float = 0.4, visc: float = 0.08) -> float:
    """Advective/magnetosonic bound ``cfl*h/max(|u|+c_f)`` capped by ``visc*h^2*rho_min/(mu+lambda)``."""
    h = state.grid.spacing
    speed = np.sqrt(np.sum(state.u**2, axis=0)) + np.sqrt(fast_speed_squared(state, params))
    vmax = float(speed.max())
    dt_adv = cfl * h / vmax if vmax > 0 else np.inf
    dt_visc = visc * h**2 * float(state.rho.min()) / params.bulk
    return float(min(dt_adv, dt_visc))


def div_h_tolerance(state: FluidState, scale: float = 1e-8) -> float:
    return scale * (1.0 + sobolev_norm(state.grid, state.H, 1))


def div_h_norm(state: FluidState) -> float:
    return lp_norm(state.grid, divergence(state.grid, state.H), 2)


__all__ = [
    "CFLWarning", "FluidState", "Forcing", "StateDerivative", "advective_derivative",
    "cfl_dt", "check_admissible", "dissipation_rate", "div_h_norm", "div_h_tolerance",
    "equilibrium", "fast_speed_squared", "magnetic_force", "rhs", "step_rk4", "u_dot", "u_t",
]

