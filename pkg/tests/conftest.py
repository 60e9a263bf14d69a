import numpy as np
import pytest

from mhd0.dynamics import FluidState
from mhd0.fields import GridSpec
from mhd0.model import ModelParams

ACCEPTANCE_LINES: list[str] = []


def band_limited(grid: GridSpec, rng: np.random.Generator, lead=(), n_modes: int = 10, kmax: int = 5):
    """Sum of ``n_modes`` random real Fourier modes with integer wavevectors ``|k_i| <= kmax``."""
    x = np.stack(grid.mesh)
    kappa = 2.0 * np.pi / grid.length
    out = np.zeros(tuple(lead) + grid.shape)
    for idx in np.ndindex(*lead) if lead else [()]:
        for _ in range(n_modes):
            k = rng.integers(-kmax, kmax + 1, size=3)
            phase = rng.uniform(0, 2 * np.pi)
            out[idx] += rng.standard_normal() * np.cos(kappa * np.tensordot(k, x, axes=1) + phase)
    return out


def solenoidal(grid: GridSpec, rng: np.random.Generator, **kw):
    """Curl of a random band-limited potential (divergence-free by construction)."""
    from mhd0.fields import curl

    return curl(grid, band_limited(grid, rng, (3,), **kw))


def random_state(grid: GridSpec, params: ModelParams, seed: int, amp: float = 0.05, **kw) -> FluidState:
    rng = np.random.default_rng(seed)
    drho = band_limited(grid, rng, **kw)
    drho *= amp * params.rho_tilde / max(np.abs(drho).max(), 1e-300)
    u = amp * band_limited(grid, rng, (3,), **kw) / 3.0
    B = solenoidal(grid, rng, **kw)
    B *= amp / max(np.abs(B).max(), 1e-300)
    H = params.H_tilde_array[:, None, None, None] + B
    return FluidState(grid, 0.0, params.rho_tilde + drho, u, H)


@pytest.fixture
def grid16():
    return GridSpec(16)


@pytest.fixture
def grid32():
    return GridSpec(32)


@pytest.fixture
def params():
    return ModelParams()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
