"""Periodic-box field algebra.

Fields are plain numpy arrays whose trailing three axes are the grid
(x1, x2, x3); a scalar field has shape ``(n, n, n)``, a vector field
``(3, n, n, n)`` and a tensor field ``(3, 3, n, n, n)``. Every derivative
is spectral with the Nyquist wavenumber zeroed, so first-derivative
operators are exactly antisymmetric under the grid quadrature and
``divergence(gradient(f)) == laplacian(f)`` holds to round-off.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

_AXES = (-3, -2, -1)
_workers = 1


class FieldError(ValueError):
    """Raised on malformed field shapes or incompatible grids."""


class GaugeError(FieldError):
    """Raised when a periodic Poisson problem has a non-zero mean source."""


def set_workers(count: int | None = None, deterministic: bool = False) -> int:
    """Set the FFT thread count; ``MHD0_THREADS`` caps it."""
    global _workers
    if count is None:
        count = os.cpu_count() or 1
    cap = os.environ.get("MHD0_THREADS")
    if cap:
        count = min(count, max(1, int(cap)))
    _workers = 1 if deterministic else max(1, count)
    return _workers


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``n`` points per axis on a box of side ``length``."""

    n: int
    length: float = 2.0 * np.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise FieldError(f"n must be an even integer >= 8, got {self.n}")
        if not self.length > 0:
            raise FieldError(f"box length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @cached_property
    def coords(self) -> np.ndarray:
        """1D node coordinates ``j*h`` for ``j = 0..n-1``."""
        return np.arange(self.n) * self.spacing

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.coords, self.coords, self.coords, indexing="ij"))

    @cached_property
    def mode_index(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Integer mode numbers broadcastable over the rfft spectrum."""
        m = np.fft.fftfreq(self.n, 1.0 / self.n)
        mz = np.fft.rfftfreq(self.n, 1.0 / self.n)
        return m[:, None, None], m[None, :, None], mz[None, None, :]

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Derivative wavenumbers with the Nyquist entry set to zero."""
        kappa = 2.0 * np.pi / self.length
        out = []
        for m in self.mode_index:
            k = kappa * m
            k = np.where(np.abs(m) == self.n // 2, 0.0, k)
            out.append(k)
        return tuple(out)

    @cached_property
    def k_squared(self) -> np.ndarray:
        k1, k2, k3 = self.wavenumbers
        return k1**2 + k2**2 + k3**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = (self.n - 1) // 3
        m1, m2, m3 = self.mode_index
        return (np.abs(m1) <= keep) & (np.abs(m2) <= keep) & (np.abs(m3) <= keep)

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum column in the full spectrum."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w[None, None, :]

    def zeros(self, *lead: int) -> np.ndarray:
        return np.zeros(lead + self.shape)


def check_field(grid: GridSpec, f: np.ndarray, rank: int | None = None) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[-3:] != grid.shape:
        raise FieldError(f"field grid shape {f.shape[-3:]} does not match n={grid.n}")
    if rank is not None and f.ndim != 3 + rank:
        raise FieldError(f"expected a rank-{rank} field, got shape {f.shape}")
    return f


def assert_finite(f: np.ndarray, name: str = "field") -> None:
    if not np.all(np.isfinite(f)):
        raise FloatingPointError(f"non-finite values in {name}")


def forward(f: np.ndarray) -> np.ndarray:
    """Real FFT over the trailing three axes."""
    return sfft.rfftn(f, axes=_AXES, workers=_workers)


def inverse(fh: np.ndarray, grid: GridSpec) -> np.ndarray:
    return sfft.irfftn(fh, s=grid.shape, axes=_AXES, workers=_workers)


def _forward_fluctuation(f: np.ndarray) -> np.ndarray:
    # removing the mean keeps derivatives of constant fields exactly zero
    return forward(f - f.mean(axis=_AXES, keepdims=True))


def dealias(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    """Zero every mode outside the 2/3-rule cube."""
    fh = forward(f)
    fh *= grid.dealias_mask
    return inverse(fh, grid)


def gradient(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    """Spectral gradient; a rank-r field maps to rank r+1 (new leading axis)."""
    f = check_field(grid, f)
    fh = _forward_fluctuation(f)
    out = np.stack([inverse(1j * k * fh, grid) for k in grid.wavenumbers])
    return out


def divergence(grid: GridSpec, v: np.ndarray) -> np.ndarray:
    """Contract the leading axis of ``v`` against the gradient."""
    v = check_field(grid, v)
    if v.shape[0] != 3:
        raise FieldError("divergence needs a leading axis of length 3")
    vh = _forward_fluctuation(v)
    acc = sum(1j * k * vh[i] for i, k in enumerate(grid.wavenumbers))
    return inverse(acc, grid)


def curl(grid: GridSpec, v: np.ndarray) -> np.ndarray:
    v = check_field(grid, v, rank=1)
    vh = _forward_fluctuation(v)
    k1, k2, k3 = grid.wavenumbers
    ch = np.stack([
        1j * (k2 * vh[2] - k3 * vh[1]),
        1j * (k3 * vh[0] - k1 * vh[2]),
        1j * (k1 * vh[1] - k2 * vh[0]),
    ])
    return inverse(ch, grid)


def laplacian(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    """Componentwise Laplacian (works for any field rank)."""
    f = check_field(grid, f)
    return inverse(-grid.k_squared * _forward_fluctuation(f), grid)


def vector_laplacian(grid: GridSpec, v: np.ndarray) -> np.ndarray:
    return laplacian(grid, check_field(grid, v, rank=1))


def solve_poisson(grid: GridSpec, rhs: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Zero-mean solution of ``laplacian(phi) = rhs`` on the torus."""
    rhs = check_field(grid, rhs, rank=0)
    mean = float(rhs.mean())
    scale = float(np.sqrt(np.mean(rhs**2)))
    if abs(mean) > rtol * max(scale, np.finfo(float).tiny):
        raise GaugeError(f"Poisson source has non-zero mean {mean:.3e}")
    rh = _forward_fluctuation(rhs)
    ksq = grid.k_squared
    with np.errstate(divide="ignore", invalid="ignore"):
        ph = np.where(ksq > 0, -rh / np.where(ksq > 0, ksq, 1.0), 0.0)
    return inverse(ph, grid)


LP_EXPONENTS = (1, 2, 3, 4, 6, np.inf)


def lp_norm(grid: GridSpec, f: np.ndarray, p: float = 2) -> float:
    """Discrete L^p norm, ``(sum h^3 |f|^p)^(1/p)``; vector fields use the pointwise Euclidean norm."""
    f = check_field(grid, f)
    if p not in LP_EXPONENTS:
        raise ValueError(f"unsupported exponent p={p}; choose from {LP_EXPONENTS}")
    mag = np.abs(f) if f.ndim == 3 else np.sqrt(np.sum(f.reshape(-1, *grid.shape) ** 2, axis=0))
    if p == np.inf:
        return float(mag.max())
    if p == 2:
        return float(np.sqrt(np.sum(mag**2) * grid.cell_volume))
    return float((np.sum(mag**p) * grid.cell_volume) ** (1.0 / p))


def spectral_l2_norm(grid: GridSpec, f: np.ndarray) -> float:
    """L^2 norm evaluated from Fourier coefficients (Parseval)."""
    fh = forward(check_field(grid, f))
    total = np.sum(grid.rfft_weights * np.abs(fh) ** 2)
    return float(np.sqrt(total * grid.cell_volume / grid.n**3))


def seminorm_squares(grid: GridSpec, f: np.ndarray, k: int) -> list[float]:
    """``[|D^0 f|^2, ..., |D^k f|^2]`` in L^2, with D^m the full m-th derivative tensor."""
    f = check_field(grid, f)
    fh = forward(f)
    power = grid.rfft_weights * np.abs(fh) ** 2
    power = power.reshape(-1, *power.shape[-3:]).sum(axis=0)
    scale = grid.cell_volume / grid.n**3
    ksq = grid.k_squared
    out = [float(np.sum(power) * scale)]
    weight = np.ones_like(ksq)
    for _ in range(k):
        weight = weight * ksq
        out.append(float(np.sum(weight * power) * scale))
    return out


def sobolev_norm(grid: GridSpec, f: np.ndarray, k: int = 2) -> float:
    """H^k norm: square root of the summed squared L^2 norms of all derivatives of order <= k.

    Mixed partials are counted once per ordering (``d1 d2`` and ``d2 d1``
    separately), i.e. ``|D^m f|^2`` is the squared Frobenius norm of the
    m-th derivative tensor. Any field rank is accepted; components add.
    """
    if k not in (0, 1, 2, 3):
        raise ValueError(f"Sobolev order must be 0..3, got {k}")
    return float(np.sqrt(sum(seminorm_squares(grid, f, k))))


def sample_at(grid: GridSpec, f: np.ndarray, points: np.ndarray, spectral: bool = False) -> np.ndarray:
    """Evaluate ``f`` at arbitrary positions, wrapped into the box.

    Returns shape ``f.shape[:-3] + (len(points),)``. Trilinear by default;
    ``spectral=True`` evaluates the trigonometric interpolant exactly.
    """
    f = check_field(grid, f)
    pts = np.mod(np.atleast_2d(np.asarray(points, dtype=float)), grid.length)
    if spectral:
        return _sample_spectral(grid, f, pts)
    s = pts / grid.spacing
    i0 = np.floor(s).astype(int)
    w = s - i0
    i0 %= grid.n
    i1 = (i0 + 1) % grid.n
    lead = f.shape[:-3]
    flat = f.reshape((-1,) + grid.shape)
    out = np.zeros((flat.shape[0], len(pts)))
    for cx, wx in ((i0[:, 0], 1 - w[:, 0]), (i1[:, 0], w[:, 0])):
        for cy, wy in ((i0[:, 1], 1 - w[:, 1]), (i1[:, 1], w[:, 1])):
            for cz, wz in ((i0[:, 2], 1 - w[:, 2]), (i1[:, 2], w[:, 2])):
                out += flat[:, cx, cy, cz] * (wx * wy * wz)
    return out.reshape(lead + (len(pts),))


def _sample_spectral(grid: GridSpec, f: np.ndarray, pts: np.ndarray) -> np.ndarray:
    lead = f.shape[:-3]
    flat = f.reshape((-1,) + grid.shape)
    fh = sfft.fftn(flat, axes=_AXES, workers=_workers) / grid.n**3
    m = np.fft.fftfreq(grid.n, 1.0 / grid.n)
    nyq = np.abs(m) == grid.n // 2
    fh[:, nyq] = 0.0
    fh[:, :, nyq] = 0.0
    fh[:, :, :, nyq] = 0.0
    kappa = 2.0 * np.pi / grid.length
    e = [np.exp(1j * kappa * np.outer(pts[:, d], m)) for d in range(3)]
    vals = np.einsum("cijk,pi,pj,pk->cp", fh, e[0], e[1], e[2], optimize=True)
    return vals.real.reshape(lead + (len(pts),))
