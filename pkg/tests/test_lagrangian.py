import numpy as np
import pytest

from mhd0.dynamics import FluidState, equilibrium, step_rk4
from mhd0.lagrangian import (carry_log_density, consistency_error, corridor_certificate, lattice_seeds,
                             sample_particles, seed_particles)
from mhd0.model import ModelParams

from conftest import random_state


def test_lattice_seeds_inside_box(grid16):
    pts = lattice_seeds(grid16, 3)
    assert pts.shape == (27, 3)
    assert np.all((pts >= 0) & (pts < grid16.length))


def test_uniform_flow_translates_particles(grid16, params):
    eq = equilibrium(grid16, params)
    u = np.zeros_like(eq.u)
    u[0] = 0.3
    s = FluidState(grid16, 0.0, eq.rho, u, eq.H)
    p = seed_particles(s, lattice_seeds(grid16, 2))
    x0 = p.positions.copy()
    for _ in range(5):
        s, stages = step_rk4(s, params, 0.1, return_stages=True)
        p = carry_log_density(p, stages, params, 0.1)
    shift = np.mod(p.positions - x0, grid16.length)
    np.testing.assert_allclose(shift[:, 0], 0.15, atol=1e-12)
    np.testing.assert_allclose(shift[:, 1:], 0.0, atol=1e-12)
    np.testing.assert_allclose(p.rho_carried, 1.0, atol=1e-14)


def test_carried_density_tracks_grid_density(grid16, params):
    s = random_state(grid16, params, 21, amp=0.02, kmax=2)
    p = seed_particles(s, lattice_seeds(grid16, 3), spectral=True)
    for _ in range(10):
        s, stages = step_rk4(s, params, 0.05, return_stages=True)
        p = carry_log_density(p, stages, params, 0.05, spectral=True)
    err = consistency_error(p, s, params, spectral=True)
    assert err.max() <= 1e-6


def test_corridor_certificate(grid16, params):
    s = random_state(grid16, params, 22, amp=0.02, kmax=2)
    p = seed_particles(s, lattice_seeds(grid16, 2))
    samples = [sample_particles(p, s)]
    s2, stages = step_rk4(s, params, 0.05, return_stages=True)
    p = carry_log_density(p, stages, params, 0.05)
    samples.append(sample_particles(p, s2))
    cert = corridor_certificate(samples, params)
    assert cert["inside"]
    assert cert["max_log_rho_excursion"] <= np.log(1.03)
    assert cert["max_flux_swing"] > 0
    with pytest.raises(ValueError):
        corridor_certificate([], params)
    outside = ModelParams(rho_lower=0.9999, rho_upper=1.0001, d=1e-5)
    assert not corridor_certificate(samples, outside)["inside"]
