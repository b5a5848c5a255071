import numpy as np
import pytest

import oracles
from pilotwave.errors import BackendError, NumericalInstabilityError
from pilotwave.grid import ParticleSystem, gaussian, make_grid
from pilotwave.potentials import HarmonicPotential
from pilotwave.propagator import (IMPLICIT_MIDPOINT, SPLIT_STEP, Propagator, PropagatorConfig,
                                  continuity_residual, evolve, iter_evolve, split_step_dt_bound,
                                  step)
from pilotwave.scenarios.hygiene import continuity_levels, plane_wave_phase_error, reversal_error
from pilotwave.scenarios.stationary import harmonic_state
from pilotwave.spectral import DIRICHLET


def test_free_gaussian_matches_closed_form():
    g = make_grid([(-40, 40)], [2048])
    psi = gaussian(g, 1.0, 1.0, 2.0)
    out = evolve(psi, None, 2.0, PropagatorConfig(dt=0.05), 40)[-1]
    exact = oracles.free_gaussian(g.axis(0), 2.0, 1.0, 1.0, 2.0)
    assert out.time == pytest.approx(2.0)
    assert np.max(np.abs(out.scalar - exact)) < 1e-10


def test_implicit_midpoint_converges_to_closed_form():
    errs = []
    for n, dt in ((512, 0.02), (1024, 0.01)):
        g = make_grid([(-30, 30)], [n])
        psi = gaussian(g, 0.0, 1.0, 1.0)
        out = evolve(psi, None, 1.0, PropagatorConfig(IMPLICIT_MIDPOINT, dt, DIRICHLET), 1)[-1]
        exact = oracles.free_gaussian(g.axis(0), 1.0, 1.0, 0.0, 1.0)
        errs.append(np.sqrt(np.sum(np.abs(out.scalar - exact) ** 2) * g.spacing[0]))
    assert errs[1] < errs[0] / 3.5


@pytest.mark.parametrize("backend", [SPLIT_STEP, IMPLICIT_MIDPOINT])
def test_ground_state_is_stationary(backend):
    g = make_grid([(-8, 8)], [256])
    if backend == IMPLICIT_MIDPOINT:
        # eigenvector of the discrete operator the backend uses
        psi, bc = harmonic_state(g, 0, 1.0), DIRICHLET
    else:
        psi, bc = gaussian(g, 0.0, np.sqrt(0.5)), "periodic"
    V = HarmonicPotential((1.0,))
    cfg = PropagatorConfig(backend, 1e-3, bc)
    energy = Propagator(g, V, cfg).energy(psi)
    assert energy == pytest.approx(0.5, abs=1e-3)
    out = evolve(psi, V, 1.0, cfg, 1000)[-1]
    # density unchanged, phase exp(-i E t)
    assert np.max(np.abs(np.abs(out.scalar) - np.abs(psi.scalar))) < 1e-6
    overlap = np.vdot(psi.scalar, out.scalar) * g.spacing[0]
    assert abs(overlap) == pytest.approx(1.0, abs=1e-8)
    assert np.angle(overlap) == pytest.approx(-energy, abs=1e-6)


@pytest.mark.parametrize("backend", [SPLIT_STEP, IMPLICIT_MIDPOINT])
def test_norm_conserved(backend):
    g = make_grid([(-10, 10)], [256])
    bc = DIRICHLET if backend == IMPLICIT_MIDPOINT else "periodic"
    psi = gaussian(g, 1.0, 0.7, 1.5)
    frames = evolve(psi, HarmonicPotential((1.0,)), 2.0, PropagatorConfig(backend, 0.002, bc), 100)
    assert max(abs(f.norm() - 1.0) for f in frames) < 1e-12


def test_time_reversal():
    g = make_grid([(-10, 10)], [256])
    psi = gaussian(g, 1.0, 0.7, 1.5)
    cfg = PropagatorConfig(dt=0.002)
    assert reversal_error(psi, HarmonicPotential((1.0,)), cfg, 200) < 1e-10


def test_plane_wave_phase_per_step():
    assert plane_wave_phase_error(256, 10.0, 5, 0.002, 50).max() < 1e-12


def test_split_step_dt_bound():
    g = make_grid([(-10, 10)], [256])
    bound = split_step_dt_bound(g, ParticleSystem.single(1))
    assert bound == pytest.approx(0.5 * (20 / 256) ** 2)
    psi = gaussian(g, 0, 1)
    with pytest.raises(NumericalInstabilityError):
        step(psi, HarmonicPotential((1.0,)), PropagatorConfig(dt=100 * bound))
    # free flight is exact in the kinetic step, so no bound applies
    step(psi, None, PropagatorConfig(dt=100 * bound))


def test_split_step_needs_power_of_two():
    g = make_grid([(-10, 10)], [200])
    with pytest.raises(BackendError):
        Propagator(g, None, PropagatorConfig(dt=0.01))


def test_split_step_rejects_dirichlet():
    with pytest.raises(BackendError):
        PropagatorConfig(SPLIT_STEP, 0.01, DIRICHLET)


def test_non_finite_amplitudes_raise():
    g = make_grid([(-10, 10)], [64])
    prop = Propagator(g, None, PropagatorConfig(dt=0.01))
    amps = np.array(gaussian(g, 0, 1).amplitudes)
    amps[0, 3] = np.nan
    with pytest.raises(NumericalInstabilityError):
        prop.advance(amps, 0.0)


def test_iter_evolve_frame_times():
    g = make_grid([(-10, 10)], [64])
    times = [f.time for f in iter_evolve(gaussian(g, 0, 1), None, 1.0,
                                         PropagatorConfig(dt=0.1), 2)]
    np.testing.assert_allclose(times, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0], atol=1e-12)


def test_energy_of_ground_state():
    g = make_grid([(-8, 8)], [256])
    prop = Propagator(g, HarmonicPotential((2.0,)), PropagatorConfig(dt=1e-3))
    assert prop.energy(gaussian(g, 0.0, 0.5)) == pytest.approx(1.0, rel=1e-10)


def test_continuity_residual_second_order():
    p = {"extent": 10.0, "omega": 1.0, "center": 1.0, "sigma": 0.7, "momentum": 1.5,
         "continuity_levels": [[256, 0.01], [512, 0.005]], "continuity_time": 0.5}
    res = continuity_levels(p, IMPLICIT_MIDPOINT)
    assert 3.0 < res[0] / res[1] < 5.0


def test_continuity_residual_small_for_spectral():
    g = make_grid([(-10, 10)], [256])
    psi = gaussian(g, 0.0, 1.0, 1.0)
    frames = evolve(psi, None, 0.02, PropagatorConfig(dt=0.01), 1)
    _, res = continuity_residual(frames)
    assert res < 1e-3


def test_two_dimensional_free_separates():
    g = make_grid([(-12, 12), (-12, 12)], [64, 64])
    psi = gaussian(g, (0, 0), (1.0, 1.5), (1.0, 0.0))
    out = evolve(psi, None, 1.0, PropagatorConfig(dt=0.05), 20)[-1]
    gx = make_grid([(-12, 12)], [64])
    ex = oracles.free_gaussian(gx.axis(0), 1.0, 1.0, 0.0, 1.0)
    ey = oracles.free_gaussian(gx.axis(0), 1.0, 1.5, 0.0, 0.0)
    exact = np.multiply.outer(ex, ey)
    assert np.max(np.abs(out.scalar - exact)) < 1e-6
