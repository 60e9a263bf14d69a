"""Pressure laws, the potential energy density G and the density corridor."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np


class ModelError(ValueError):
    """Invalid physical parameters."""


class BlowUpError(FloatingPointError):
    """Raised when a field leaves the admissible set (NaN or non-positive density)."""

    def __init__(self, field_name: str, message: str = ""):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}" if message else field_name)


def _positive(rho, name="rho"):
    arr = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise BlowUpError(name, "non-finite density")
    if np.any(arr <= 0):
        raise BlowUpError(name, f"non-positive density (min {arr.min():.3e})")
    return arr


_SERIES_CUTOFF = 0.5


def _gamma_shape(y: np.ndarray, gamma: float) -> np.ndarray:
    """``(e^{gamma y} - gamma e^y + gamma - 1)/(gamma - 1)`` without cancellation.

    This is G/(K rho_ref^gamma) as a function of ``y = log(rho/rho_ref)``;
    the ``gamma -> 1`` limit is ``y e^y - e^y + 1``.
    """
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    small = np.abs(y) < _SERIES_CUTOFF
    ys = y[small]
    # sum_{m>=2} c_m y^m / m!,  c_m = (gamma^m - gamma)/(gamma - 1) -> m - 1 as gamma -> 1
    acc = np.zeros_like(ys)
    term = ys.copy()  # y^m / m! at m = 1
    gpow = gamma
    for m in range(2, 40):
        term = term * ys / m
        gpow *= gamma
        if gamma == 1.0:
            c = m - 1.0
        else:
            c = (gpow - gamma) / (gamma - 1.0)
        acc += c * term
    out[small] = acc
    yl = y[~small]
    if gamma == 1.0:
        out[~small] = yl * np.exp(yl) - np.expm1(yl)
    else:
        out[~small] = (np.expm1(gamma * yl) - gamma * np.expm1(yl)) / (gamma - 1.0)
    return out


@dataclass(frozen=True)
class GammaLaw:
    """Monotone law ``P = K rho^gamma`` with ``gamma >= 1``."""

    K: float = 1.0
    gamma: float = 1.4

    def __post_init__(self):
        if not self.K > 0:
            raise ModelError(f"K must be positive, got {self.K}")
        if not self.gamma >= 1:
            raise ModelError(f"gamma must be >= 1, got {self.gamma}")

    @property
    def landmarks(self) -> tuple[float, float] | None:
        return None

    def pressure(self, rho):
        rho = _positive(rho)
        return self.K * rho**self.gamma

    def derivative(self, rho):
        rho = _positive(rho)
        if self.gamma == 1.0:
            return np.full_like(rho, self.K) if rho.ndim else self.K
        return self.K * self.gamma * rho ** (self.gamma - 1.0)

    def potential(self, rho_tilde: float, rho):
        rho = _positive(rho)
        y = np.log1p((rho - rho_tilde) / rho_tilde)
        return self.K * rho_tilde**self.gamma * _gamma_shape(y, self.gamma)


@dataclass(frozen=True)
class NonMonotone:
    """Cubic law with a local maximum and minimum.

    ``P'(rho) = stiffness * (rho - peak) * (rho - rho_double_prime)`` with
    ``P(0) = 0``. The law rises on ``[0, peak]``, dips to a local minimum at
    ``rho_double_prime`` and rises again; ``rho_prime < peak`` is the last
    density below which P is increasing and above which P never returns
    below ``P(rho_prime)``. ``peak`` defaults to the landmark midpoint.
    """

    rho_prime: float
    rho_double_prime: float
    stiffness: float = 1.0
    peak: float | None = None
    coefficients: tuple[float, float, float] = field(init=False)

    def __post_init__(self):
        a, b = self.rho_prime, self.rho_double_prime
        if not 0 < a < b:
            raise ModelError(f"need 0 < rho_prime < rho_double_prime, got {a}, {b}")
        if not self.stiffness > 0:
            raise ModelError("stiffness must be positive")
        peak = 0.5 * (a + b) if self.peak is None else self.peak
        if not a < peak < b:
            raise ModelError(f"peak must lie in (rho_prime, rho_double_prime), got {peak}")
        object.__setattr__(self, "peak", peak)
        s = self.stiffness
        object.__setattr__(self, "coefficients", (s * peak * b, -0.5 * s * (peak + b), s / 3.0))
        report = validate_pressure_law(self)
        if not report["ok"]:
            raise ModelError(f"law violates the pressure hypothesis: {report['failures']}")

    @property
    def landmarks(self) -> tuple[float, float]:
        return (self.rho_prime, self.rho_double_prime)

    def _poly(self, rho):
        c1, c2, c3 = self.coefficients
        return rho * (c1 + rho * (c2 + rho * c3))

    def pressure(self, rho):
        return self._poly(_positive(rho))

    def derivative(self, rho):
        rho = _positive(rho)
        c1, c2, c3 = self.coefficients
        return c1 + rho * (2.0 * c2 + 3.0 * c3 * rho)

    def potential(self, rho_tilde: float, rho):
        # exact antiderivative of s^-2 (P(s) - P~): c1 log s + c2 s + c3 s^2/2 + P~/s
        rho = _positive(rho)
        c1, c2, c3 = self.coefficients
        p_ref = float(self._poly(rho_tilde))
        dr = rho - rho_tilde
        integral = (c1 * np.log1p(dr / rho_tilde) + c2 * dr + 0.5 * c3 * dr * (rho + rho_tilde)
                    - p_ref * dr / (rho * rho_tilde))
        return rho * integral


PressureLaw = Union[GammaLaw, NonMonotone]


def validate_pressure_law(law, rho_max: float | None = None, samples: int = 20001) -> dict:
    """Check the non-monotone pressure hypothesis numerically on a fine 1D sample."""
    failures = []
    lm = law.landmarks
    top = rho_max or (4.0 * lm[1] if lm else 10.0)
    rho = np.linspace(top / samples, top, samples)
    p = law._poly(rho) if isinstance(law, NonMonotone) else law.K * rho**law.gamma
    if np.any(p <= 0):
        failures.append("P must be positive for rho > 0")
    if lm is None:
        if np.any(np.diff(p) < 0):
            failures.append("gamma law must be nondecreasing")
        return {"ok": not failures, "failures": failures}
    a, b = lm
    pa = law._poly(a)
    pb = law._poly(b)
    rising = (rho <= a) | (rho >= b)
    seg = np.diff(p)[rising[:-1] & rising[1:]]
    if np.any(seg <= 0):
        failures.append("P must increase on [0, rho'] and [rho'', inf)")
    if np.any(p[rho > a] <= pa):
        failures.append("P(rho) > P(rho') required for rho > rho'")
    if np.any(p[rho > b] <= pb):
        failures.append("P(rho) > P(rho'') required for rho > rho''")
    return {"ok": not failures, "failures": failures}


def pressure(law: PressureLaw, rho):
    return law.pressure(rho)


def pressure_derivative(law: PressureLaw, rho):
    return law.derivative(rho)


def g_potential(law: PressureLaw, rho_tilde: float, rho):
    """``G(rho) = rho * int_{rho_tilde}^{rho} s^-2 (P(s) - P(rho_tilde)) ds``."""
    return law.potential(rho_tilde, rho)


def g_potential_quadrature(law: PressureLaw, rho_tilde: float, rho: float, tol: float = 1e-13) -> float:
    """Scalar G by adaptive quadrature of the defining integral (reference path)."""
    from scipy.integrate import quad

    p_ref = float(law.pressure(rho_tilde))
    val, _ = quad(lambda s: (float(law.pressure(s)) - p_ref) / s**2, rho_tilde, rho,
                  epsabs=tol, epsrel=tol, limit=200)
    return rho * val


def corridor_delta(rho_lower, rho_upper, rho_tilde, rho_prime, rho_double_prime) -> float:
    return min(min(rho_tilde, rho_prime) - rho_lower,
               rho_upper - max(rho_tilde, rho_double_prime),
               0.5 * (rho_upper - rho_lower))


@dataclass(frozen=True)
class ModelParams:
    mu: float = 0.1
    lambda_: float = 0.1
    rho_tilde: float = 1.0
    H_tilde: tuple[float, float, float] = (1.0, 1.0, 1.0)
    pressure: PressureLaw = field(default_factory=GammaLaw)
    rho_lower: float = 0.5
    rho_upper: float = 1.5
    d: float = 0.25

    def __post_init__(self):
        if not (self.mu > 0 and self.lambda_ > 0):
            raise ModelError(f"viscosities must be positive, got mu={self.mu}, lambda={self.lambda_}")
        if not self.rho_tilde > 0:
            raise ModelError("rho_tilde must be positive")
        object.__setattr__(self, "H_tilde", tuple(float(h) for h in self.H_tilde))
        rp, rpp = self.rho_prime, self.rho_double_prime
        if not self.rho_lower < min(self.rho_tilde, rp):
            raise ModelError(f"rho_lower={self.rho_lower} must be < min(rho_tilde, rho')={min(self.rho_tilde, rp)}")
        if not max(self.rho_tilde, rpp) < self.rho_upper:
            raise ModelError(f"rho_upper={self.rho_upper} must be > max(rho_tilde, rho'')={max(self.rho_tilde, rpp)}")
        if not self.rho_lower > 0:
            raise ModelError("rho_lower must be positive")
        if not 0 < self.d < self.delta:
            raise ModelError(f"need 0 < d < delta={self.delta}, got d={self.d}")

    @property
    def rho_prime(self) -> float:
        lm = self.pressure.landmarks
        return self.rho_tilde if lm is None else lm[0]

    @property
    def rho_double_prime(self) -> float:
        lm = self.pressure.landmarks
        return self.rho_tilde if lm is None else lm[1]

    @property
    def delta(self) -> float:
        return corridor_delta(self.rho_lower, self.rho_upper, self.rho_tilde,
                              self.rho_prime, self.rho_double_prime)

    @property
    def p_tilde(self) -> float:
        return float(self.pressure.pressure(self.rho_tilde))

    @property
    def H_tilde_array(self) -> np.ndarray:
        return np.asarray(self.H_tilde, dtype=float)

    @property
    def bulk(self) -> float:
        """``mu + lambda``, the coefficient of the effective viscous flux."""
        return self.mu + self.lambda_


def corridor_check(params: ModelParams, rho: np.ndarray) -> dict:
    lo, hi = float(np.min(rho)), float(np.max(rho))
    return {"min": lo, "max": hi, "inside": params.rho_lower <= lo and hi <= params.rho_upper}


def log_ratio(rho, rho_tilde):
    return np.log1p((np.asarray(rho) - rho_tilde) / rho_tilde)


__all__ = [
    "BlowUpError", "GammaLaw", "ModelError", "ModelParams", "NonMonotone", "PressureLaw",
    "corridor_check", "corridor_delta", "g_potential", "g_potential_quadrature", "log_ratio",
    "pressure", "pressure_derivative", "validate_pressure_law",
]
