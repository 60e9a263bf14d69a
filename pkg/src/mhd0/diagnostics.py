"""Diagnostics built on the effective viscous flux.

``F = (mu + lambda) div u - (P(rho) - P(rho_tilde))`` and the vorticity
matrix ``omega[j, k] = d_k u^j - d_j u^k`` reassemble the acceleration:

    rho u_dot^j = d_j F + mu d_k omega[j, k] + (magnetic force)^j

and taking a divergence gives ``lap F = div g`` with
``g = rho u_dot - (magnetic force)``. The functions here evaluate these
objects on live states and measure how well each identity holds.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .dynamics import FluidState, StateDerivative, div_h_norm, magnetic_force, u_dot, u_t
from .fields import (
    GridSpec,
    curl,
    divergence,
    gradient,
    laplacian,
    lp_norm,
    seminorm_squares,
    solve_poisson,
    sobolev_norm,
)
from .model import ModelParams


def _l2(grid: GridSpec, f: np.ndarray) -> float:
    return lp_norm(grid, f, 2)


def relative_residual(grid: GridSpec, a: np.ndarray, b: np.ndarray) -> float:
    """``|a - b| / max(|a|, |b|)`` in L^2, zero when ``a == b`` identically."""
    num = _l2(grid, a - b)
    if num == 0.0:
        return 0.0
    scale = max(_l2(grid, a), _l2(grid, b))
    return num / scale if scale > 0 else num


def effective_flux(state: FluidState, params: ModelParams) -> np.ndarray:
    p = np.asarray(params.pressure.pressure(state.rho))
    return params.bulk * divergence(state.grid, state.u) - (p - params.p_tilde)


def vorticity(state: FluidState) -> np.ndarray:
    """Antisymmetric matrix ``omega[j, k] = d_k u^j - d_j u^k``."""
    g = gradient(state.grid, state.u)  # g[k, j] = d_k u^j
    return np.swapaxes(g, 0, 1) - g


def _div_rows(grid: GridSpec, t: np.ndarray) -> np.ndarray:
    """Row divergence ``sum_k d_k t[j, k]``."""
    return divergence(grid, np.swapaxes(t, 0, 1))


def momentum_decomposition(state: FluidState, deriv: StateDerivative, params: ModelParams,
                           dealias: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the flux/vorticity form of the momentum equation."""
    grid = state.grid
    lhs = state.rho * u_dot(state, deriv)
    rhs = (gradient(grid, effective_flux(state, params))
           + params.mu * _div_rows(grid, vorticity(state))
           + magnetic_force(grid, state.H, dealias))
    return lhs, rhs


def momentum_decomposition_residual(state, deriv, params, dealias: bool = False) -> float:
    lhs, rhs = momentum_decomposition(state, deriv, params, dealias)
    return relative_residual(state.grid, lhs, rhs)


def flux_source(state: FluidState, deriv: StateDerivative, params: ModelParams,
                dealias: bool = False) -> np.ndarray:
    """``g^j = rho u_dot^j + d_j(|H|^2/2) - div(H^j H)``."""
    return state.rho * u_dot(state, deriv) - magnetic_force(state.grid, state.H, dealias)


def poisson_flux_residual(state, deriv, params, dealias: bool = False) -> float:
    grid = state.grid
    lap_f = laplacian(grid, effective_flux(state, params))
    div_g = divergence(grid, flux_source(state, deriv, params, dealias))
    return relative_residual(grid, lap_f, div_g)


def reconstructed_flux(state, deriv, params, dealias: bool = False) -> np.ndarray:
    """F recovered (up to its mean) by inverting ``lap F = div g``."""
    div_g = divergence(state.grid, flux_source(state, deriv, params, dealias))
    return solve_poisson(state.grid, div_g - div_g.mean())


def flux_reconstruction_error(state, deriv, params, dealias: bool = False) -> float:
    grid = state.grid
    direct = gradient(grid, effective_flux(state, params))
    rebuilt = gradient(grid, reconstructed_flux(state, deriv, params, dealias))
    return relative_residual(grid, direct, rebuilt)


def magnetic_form_check(state: FluidState, params: ModelParams) -> dict:
    """Compare the H-form and B-form magnetic forces.

    With ``B = H - H_tilde`` and ``div B = 0`` the two forms differ by
    ``(curl B) x H_tilde``; the returned ``residual`` measures that.
    """
    grid = state.grid
    B = state.B(params)
    h_form = magnetic_force(grid, state.H)
    b_form = magnetic_force(grid, B)
    h_tilde = params.H_tilde_array[:, None, None, None]
    correction = np.cross(curl(grid, B), h_tilde, axis=0)
    return {
        "h_form": h_form,
        "b_form": b_form,
        "correction": correction,
        "residual": relative_residual(grid, h_form - b_form, correction),
    }


@dataclass(frozen=True)
class EnergyLedger:
    potential: float
    kinetic: float
    magnetic: float
    dissipation: float

    @property
    def total(self) -> float:
        return self.potential + self.kinetic + self.magnetic


def energy_ledger(state: FluidState, params: ModelParams) -> EnergyLedger:
    grid = state.grid
    dv = grid.cell_volume
    g = params.pressure.potential(params.rho_tilde, state.rho)
    B = state.B(params)
    grad_u = gradient(grid, state.u)
    div_u = np.trace(grad_u, axis1=0, axis2=1)
    return EnergyLedger(
        potential=float(np.sum(g) * dv),
        kinetic=float(0.5 * np.sum(state.rho * np.sum(state.u**2, axis=0)) * dv),
        magnetic=float(0.5 * np.sum(B**2) * dv),
        dissipation=float(np.sum(params.mu * np.sum(grad_u**2, axis=(0, 1))
                                 + params.lambda_ * div_u**2) * dv),
    )


def energy_balance_residual(history, method: str = "carried") -> np.ndarray:
    """``E(t) - E(0) + int_0^t D ds`` along a record history.

    ``method="carried"`` uses the dissipation integral advanced inside the
    Runge-Kutta step (fourth order); ``"trapezoid"`` integrates the recorded
    dissipation rates, which requires a uniform record spacing.
    """
    if len(history) < 2:
        raise ValueError("need at least two records")
    e = np.array([r.E_pot + r.E_kin + r.E_mag for r in history])
    if method == "carried":
        q = np.array([r.dissipated for r in history])
        return e - e[0] + (q - q[0])
    if method != "trapezoid":
        raise ValueError(f"unknown method {method!r}")
    t = np.array([r.t for r in history])
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("trapezoid residual needs uniformly spaced records")
    d = np.array([r.dissipation for r in history])
    q = np.concatenate([[0.0], np.cumsum(0.5 * steps * (d[1:] + d[:-1]))])
    return e - e[0] + q


@dataclass(frozen=True, eq=False)
class AuxiliaryFields:
    w: np.ndarray  # (3, 3, n, n, n): w[j] = grad F - 3 grad B^j
    v: np.ndarray  # v[j] = (mu + lambda) grad div u - 3 grad B^j
    lyapunov: float
    identity_residual: float


def lyapunov_wv(grid: GridSpec, rho: np.ndarray, w: np.ndarray, v: np.ndarray) -> float:
    """Weighted quadratic functional over single and pairwise sums of the auxiliary fields."""
    dv = grid.cell_volume

    def energy(a):
        return float(np.sum(0.5 * rho * np.sum(a**2, axis=0)) * dv)

    total = sum(energy(w[j]) + energy(v[j]) for j in range(3))
    for i in range(3):
        for j in range(3):
            if i != j:
                total += energy(w[i] + w[j]) + energy(v[i] + v[j])
    return total


def auxiliary_wv(state: FluidState, params: ModelParams) -> AuxiliaryFields:
    grid = state.grid
    grad_b = gradient(grid, state.B(params))  # grad_b[:, j] = grad B^j
    grad_f = gradient(grid, effective_flux(state, params))
    grad_div = gradient(grid, divergence(grid, state.u))
    w = np.stack([grad_f - 3.0 * grad_b[:, j] for j in range(3)])
    v = np.stack([params.bulk * grad_div - 3.0 * grad_b[:, j] for j in range(3)])
    p = np.asarray(params.pressure.pressure(state.rho))
    grad_p = gradient(grid, p - params.p_tilde)
    res = max(relative_residual(grid, v[j] - w[j], grad_p) for j in range(3))
    return AuxiliaryFields(w, v, lyapunov_wv(grid, state.rho, w, v), res)


def state_h2_squared(state: FluidState, params: ModelParams) -> tuple[float, float, float]:
    grid = state.grid
    return (sobolev_norm(grid, state.rho - params.rho_tilde, 2) ** 2,
            sobolev_norm(grid, state.u, 2) ** 2,
            sobolev_norm(grid, state.B(params), 2) ** 2)


def time_derivative_l2(state: FluidState, deriv: StateDerivative) -> tuple[float, float, float]:
    grid = state.grid
    return (_l2(grid, deriv.d_rho), _l2(grid, u_t(state, deriv)), _l2(grid, deriv.d_H))


def initial_c0(state: FluidState, params: ModelParams) -> float:
    """H^2 size of the perturbation ``(rho - rho_tilde, u, H - H_tilde)``."""
    return float(sum(math.sqrt(x) for x in state_h2_squared(state, params)))


@dataclass(frozen=True)
class AFunctionalAccumulator:
    """Running supremum and time integral making up ``A(t)``."""

    running_sup: float = 0.0
    running_integral: float = 0.0
    last_t: float | None = None
    last_integrand: float = 0.0

    @property
    def value(self) -> float:
        return self.running_sup + self.running_integral


def a_functional_terms(state: FluidState, deriv: StateDerivative, params: ModelParams) -> tuple[float, float]:
    """``(bracket, integrand)``: the supremum argument and the time-integrand at one instant."""
    grid = state.grid
    bracket = sum(state_h2_squared(state, params)) + sum(x**2 for x in time_derivative_l2(state, deriv))
    grad_u_h2 = sum(seminorm_squares(grid, state.u, 3)[1:])
    ut_h1 = sum(seminorm_squares(grid, u_t(state, deriv), 1))
    return bracket, grad_u_h2 + ut_h1


def a_functional_update(acc: AFunctionalAccumulator, state: FluidState, deriv: StateDerivative,
                        params: ModelParams) -> AFunctionalAccumulator:
    bracket, integrand = a_functional_terms(state, deriv, params)
    integral = acc.running_integral
    if acc.last_t is not None:
        integral += 0.5 * (state.t - acc.last_t) * (integrand + acc.last_integrand)
    return AFunctionalAccumulator(max(acc.running_sup, bracket), integral, state.t, integrand)


def sobolev_ratio(grid: GridSpec, f: np.ndarray, r: int) -> float:
    """``|f|_{L^r} / (|f|_{L^2}^a |grad f|_{L^2}^b)`` with ``a = (6-r)/2r``, ``b = (3r-6)/2r``."""
    if r not in (3, 4, 6):
        raise ValueError(f"r must be 3, 4 or 6, got {r}")
    grad_norm = _l2(grid, gradient(grid, f))
    if grad_norm == 0.0:
        raise ValueError("sobolev_ratio needs a non-constant field")
    a = (6.0 - r) / (2.0 * r)
    b = (3.0 * r - 6.0) / (2.0 * r)
    return lp_norm(grid, f, r) / (_l2(grid, f) ** a * grad_norm**b)


def _ratio(lhs_sq: float, rhs_sq: float):
    if rhs_sq == 0.0:
        return "degenerate" if lhs_sq == 0.0 else math.inf
    return lhs_sq / rhs_sq


def elliptic_norm_report(state: FluidState, deriv: StateDerivative, params: ModelParams) -> dict:
    """Both sides of the three elliptic estimates for ``lap u``, ``D^3 u`` and ``grad F``.

    Squared norms are reported; each ``ratio_*`` is LHS over the sum of RHS
    terms (constant-free), or ``"degenerate"`` when both vanish.
    """
    grid = state.grid
    B = state.B(params)
    F = effective_flux(state, params)
    p = np.asarray(params.pressure.pressure(state.rho))
    omega = vorticity(state)
    grad_b = gradient(grid, B)
    lap_b = laplacian(grid, B)
    grad_b_mag = np.sqrt(np.sum(grad_b**2, axis=(0, 1)))
    lap_b_mag = np.sqrt(np.sum(lap_b**2, axis=0))
    b_mag = np.sqrt(np.sum(B**2, axis=0))
    sq = lambda f: _l2(grid, f) ** 2  # noqa: E731

    grad_f_sq = sq(gradient(grid, F))
    lap_u_sq = sq(laplacian(grid, state.u))
    d3u_sq = seminorm_squares(grid, state.u, 3)[3]
    gb_b_sq = sq(grad_b_mag * b_mag)
    grad_b_sq = sq(grad_b)

    rhs_lap_u = grad_f_sq + sq(gradient(grid, omega)) + sq(gradient(grid, p)) + gb_b_sq + grad_b_sq
    rhs_d3u = (sq(laplacian(grid, F)) + sq(laplacian(grid, omega)) + sq(laplacian(grid, p))
               + sq(lap_b) + sq(lap_b_mag * b_mag) + lp_norm(grid, grad_b_mag, 4) ** 4)
    rhs_grad_f = sq(state.rho * u_dot(state, deriv)) + gb_b_sq + grad_b_sq
    return {
        "grad_F_L2": math.sqrt(grad_f_sq),
        "lap_u_L2": math.sqrt(lap_u_sq),
        "D3u_L2": math.sqrt(d3u_sq),
        "rhs_lap_u": rhs_lap_u,
        "rhs_D3u": rhs_d3u,
        "rhs_grad_F": rhs_grad_f,
        "ratio_lap_u": _ratio(lap_u_sq, rhs_lap_u),
        "ratio_D3u": _ratio(d3u_sq, rhs_d3u),
        "ratio_grad_F": _ratio(grad_f_sq, rhs_grad_f),
    }


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of the time-series output (column order is the CSV order)."""

    t: float
    E_pot: float
    E_kin: float
    E_mag: float
    dissipation: float
    energy_residual: float
    norm_H2_rho: float
    norm_H2_u: float
    norm_H2_B: float
    norm_L2_rho_t: float
    norm_L2_u_t: float
    norm_L2_B_t: float
    A_func: float
    res_momdecomp: float
    res_poissonflux: float
    res_wv: float
    divH_L2: float
    rho_min: float
    rho_max: float
    dissipated: float = 0.0
    lyapunov_wv: float = 0.0
    mass: float = 0.0
    momentum: tuple = (0.0, 0.0, 0.0)

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)][:19]

    def row(self) -> list[float]:
        d = asdict(self)
        return [d[c] for c in self.columns()]

    @property
    def energy(self) -> float:
        return self.E_pot + self.E_kin + self.E_mag

    def with_residual(self, value: float) -> "DiagnosticsRecord":
        return replace(self, energy_residual=value)


def diagnose(state: FluidState, deriv: StateDerivative, params: ModelParams,
             acc: AFunctionalAccumulator, energy0: float | None = None,
             dissipated0: float = 0.0, dealias: bool = False) -> tuple[DiagnosticsRecord, AFunctionalAccumulator]:
    """Evaluate every diagnostic for one state and advance the A(t) accumulator."""
    grid = state.grid
    ledger = energy_ledger(state, params)
    acc = a_functional_update(acc, state, deriv, params)
    h2 = state_h2_squared(state, params)
    td = time_derivative_l2(state, deriv)
    aux = auxiliary_wv(state, params)
    e0 = ledger.total if energy0 is None else energy0
    residual = ledger.total - e0 + (state.dissipated - dissipated0)
    rec = DiagnosticsRecord(
        t=state.t,
        E_pot=ledger.potential,
        E_kin=ledger.kinetic,
        E_mag=ledger.magnetic,
        dissipation=ledger.dissipation,
        energy_residual=residual,
        norm_H2_rho=math.sqrt(h2[0]),
        norm_H2_u=math.sqrt(h2[1]),
        norm_H2_B=math.sqrt(h2[2]),
        norm_L2_rho_t=td[0],
        norm_L2_u_t=td[1],
        norm_L2_B_t=td[2],
        A_func=acc.value,
        res_momdecomp=momentum_decomposition_residual(state, deriv, params, dealias),
        res_poissonflux=poisson_flux_residual(state, deriv, params, dealias),
        res_wv=aux.identity_residual,
        divH_L2=div_h_norm(state),
        rho_min=float(state.rho.min()),
        rho_max=float(state.rho.max()),
        dissipated=state.dissipated,
        lyapunov_wv=aux.lyapunov,
        mass=float(np.sum(state.rho) * grid.cell_volume),
        momentum=tuple(float(x) for x in np.sum(state.momentum, axis=(1, 2, 3)) * grid.cell_volume),
    )
    return rec, acc
