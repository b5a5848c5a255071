import numpy as np
import pytest

import oracles
from pilotwave import kernels
from pilotwave.errors import EnsembleError, NodeProximityError, OutOfDomainError
from pilotwave.grid import ParticleSystem, WaveFunction, gaussian, make_grid, normalize
from pilotwave.guidance import (ABORTED_NODE, COMPLETED, GuidanceField, IntegratorConfig,
                                integrate_ensemble, permute_labels, velocity_field,
                                velocity_field_spinor, velocity_on_grid)
from pilotwave.propagator import IMPLICIT_MIDPOINT, PropagatorConfig, evolve, iter_evolve
from pilotwave.scenarios.stationary import box_state
from pilotwave.spectral import DIRICHLET


def test_plane_wave_velocity():
    g = make_grid([(-np.pi, np.pi)], [64])
    psi = normalize(WaveFunction.from_function(g, lambda x: np.exp(3j * x)))
    sys2 = ParticleSystem.single(1, mass=2.0, hbar=0.5)
    assert velocity_field(psi, sys2, [0.3])[0] == pytest.approx(0.5 * 3 / 2.0, abs=1e-12)


def test_real_state_has_zero_velocity():
    g = make_grid([(-1, 1)], [64])
    v = velocity_on_grid(box_state(g, 3), boundary=DIRICHLET)
    assert np.nanmax(np.abs(v)) == 0.0


def test_two_level_box_velocity_matches_closed_form():
    L, t, c1, c2 = 1.0, 0.1, 0.6, 0.8
    g = make_grid([(-L / 2, L / 2)], [512])
    e1, e2 = np.pi ** 2 / 2, (2 * np.pi) ** 2 / 2
    amps = c1 * box_state(g, 1).scalar * np.exp(-1j * e1 * t) \
        + c2 * box_state(g, 2).scalar * np.exp(-1j * e2 * t)
    psi = WaveFunction(g, amps, t)
    q = np.array([-0.3, 0.1, 0.25])
    v = [velocity_field(psi, None, [x], DIRICHLET)[0] for x in q]
    # frozen oracle values from oracles.two_level_velocity
    frozen = [0.8114565112237818, 5.185158932288816, 1.3995980670889658]
    np.testing.assert_allclose(oracles.two_level_velocity(q, t, c1, c2), frozen, rtol=1e-12)
    np.testing.assert_allclose(v, frozen, rtol=2e-3)


def test_node_raises():
    g = make_grid([(-1, 1)], [64])
    psi = box_state(g, 2)
    with pytest.raises(NodeProximityError):
        velocity_field(psi, None, [0.0], DIRICHLET)


def test_out_of_domain_raises():
    g = make_grid([(-1, 1)], [64])
    with pytest.raises(OutOfDomainError):
        velocity_field(gaussian(g, 0, 0.3), None, [1.5])


def test_spinor_equal_components_match_scalar():
    g = make_grid([(-8, 8)], [128])
    psi = gaussian(g, 0.0, 1.0, 1.3)
    spinor = WaveFunction(g, np.stack([psi.scalar, psi.scalar]) / np.sqrt(2))
    assert velocity_field_spinor(spinor, None, [0.4])[0] == pytest.approx(
        velocity_field(psi, None, [0.4])[0], rel=1e-12)


def test_spinor_requires_components():
    g = make_grid([(-8, 8)], [128])
    with pytest.raises(ValueError):
        velocity_field_spinor(gaussian(g, 0, 1), None, [0.0])


def test_free_gaussian_trajectories_scale():
    g = make_grid([(-40, 40)], [2048])
    psi = gaussian(g, 0.0, 1.0)
    x0 = np.array([[-1.0], [0.0], [0.5], [1.0]])
    frames = iter_evolve(psi, None, 4.0, PropagatorConfig(dt=0.02), 1)
    ens = integrate_ensemble(frames, None, x0, IntegratorConfig())
    # sigma(4)/sigma0 = sqrt(5) for hbar = m = sigma0 = 1
    assert oracles.gaussian_width(4.0) == pytest.approx(2.23606797749979, rel=1e-14)
    np.testing.assert_allclose(ens.positions[-1, :, 0], x0[:, 0] * 2.23606797749979, atol=1e-3)
    assert np.all(ens.status == COMPLETED)


def test_box_release_quantile_map():
    """1D trajectories follow the quantile map of the exactly evolved density."""
    n, T = 10, 0.05
    # lobe centres; a start exactly on a node of the real initial state is degenerate
    probs = [0.05, 0.25, 0.45, 0.55, 0.75, 0.95]
    # frozen from oracles.box_quantile and oracles.released_box (Fresnel integrals)
    x0 = np.array([-0.45, -0.25, -0.05, 0.05, 0.25, 0.45])
    xT = np.array([-1.942908816861209, -1.5636265358366959, -1.1227405175530882,
                   1.122740517553087, 1.5636265358366954, 1.9429088168612])
    np.testing.assert_allclose([oracles.box_quantile(p, n) for p in probs], x0, atol=1e-12)
    xx = np.linspace(-40, 40, 400001)
    rho = np.abs(oracles.released_box(xx, T, n)) ** 2
    np.testing.assert_allclose(oracles.density_quantiles(xx, rho, probs), xT, atol=1e-4)

    from pilotwave.grid import embed
    from pilotwave.scenarios.box_release import free_grid
    box = make_grid([(-0.5, 0.5)], [256])
    psi = embed(box_state(box, n), free_grid(box.spacing[0], 16.0))
    frames = iter_evolve(psi, None, T, PropagatorConfig(dt=T / 800), 1)
    ens = integrate_ensemble(frames, None, x0[:, None],
                             IntegratorConfig(max_step_cells=2.0))
    np.testing.assert_allclose(ens.positions[-1, :, 0], xT, atol=2e-3)


@pytest.mark.parametrize("backend", kernels.AVAILABLE)
def test_kernel_backends_agree_with_numpy_quotient(backend):
    rng = np.random.default_rng(3)
    g = make_grid([(-4, 4), (-3, 3)], [32, 24])
    amps = rng.normal(size=(32, 24)) + 1j * rng.normal(size=(32, 24)) + 3.0
    psi = normalize(WaveFunction(g, amps))
    field = GuidanceField(psi)
    # at grid points the interpolation is exact, so the kernel must equal the grid formula
    ix, iy = rng.integers(0, 32, 40), rng.integers(0, 24, 40)
    pts = np.column_stack([g.axis(0)[ix], g.axis(1)[iy]])
    v, rho, status = field.evaluate(pts, backend=backend)
    ref = velocity_on_grid(psi)
    np.testing.assert_allclose(v[:, 0], ref[0][ix, iy], rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(v[:, 1], ref[1][ix, iy], rtol=1e-10, atol=1e-12)
    assert np.all(status == COMPLETED)


@pytest.mark.skipif(len(kernels.AVAILABLE) < 2, reason="compiled kernel not built")
def test_compiled_and_python_kernels_agree():
    rng = np.random.default_rng(5)
    g = make_grid([(-4, 4), (-3, 3), (-2, 2)], [16, 12, 8])
    shape = g.shape
    a = normalize(WaveFunction(g, rng.normal(size=shape) + 1j * rng.normal(size=shape)))
    b = normalize(WaveFunction(g, rng.normal(size=shape) + 1j * rng.normal(size=shape)))
    fa, fb = GuidanceField(a), GuidanceField(b)
    pts = np.column_stack([rng.uniform(lo, hi, 500) for lo, hi in g.extents])
    pts[:5] = [[9.0, 0, 0]] * 5
    out = {bk: fa.evaluate(pts, other=fb, alpha=0.3, backend=bk) for bk in ("cython", "python")}
    for x, y in zip(out["cython"], out["python"]):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-14)


def test_global_frame_phases_do_not_change_trajectories():
    g = make_grid([(-20, 20)], [512])
    psi = gaussian(g, 0.0, 1.0, 1.0) + gaussian(g, 3.0, 0.8, -1.0)
    psi = normalize(psi)
    frames = evolve(psi, None, 2.0, PropagatorConfig(dt=0.02), 1)
    rng = np.random.default_rng(0)
    twisted = [f.replace(f.amplitudes * np.exp(2j * np.pi * rng.random())) for f in frames]
    x0 = np.linspace(-2, 4, 9)[:, None]
    a = integrate_ensemble(frames, None, x0)
    b = integrate_ensemble(twisted, None, x0)
    np.testing.assert_allclose(a.positions, b.positions, atol=1e-10)


def test_workers_do_not_change_results():
    g = make_grid([(-20, 20)], [512])
    psi = normalize(gaussian(g, 0.0, 1.0, 1.0) + gaussian(g, 3.0, 0.8, -1.0))
    frames = evolve(psi, None, 1.0, PropagatorConfig(dt=0.02), 1)
    x0 = np.linspace(-2, 4, 37)[:, None]
    one = integrate_ensemble(frames, None, x0, workers=1)
    three = integrate_ensemble(frames, None, x0, workers=3)
    np.testing.assert_array_equal(one.positions, three.positions)
    np.testing.assert_array_equal(one.status, three.status)


def test_start_on_node_aborts():
    g = make_grid([(-0.5, 0.5)], [128])
    psi = box_state(g, 2)
    frames = evolve(psi, None, 0.01, PropagatorConfig(IMPLICIT_MIDPOINT, 1e-3, DIRICHLET), 1)
    ens = integrate_ensemble(frames, None, np.array([[0.0], [0.2]]), boundary=DIRICHLET)
    assert ens.status.tolist() == [ABORTED_NODE, COMPLETED]


def test_all_aborted_raises():
    g = make_grid([(-0.5, 0.5)], [128])
    frames = evolve(box_state(g, 2), None, 0.01,
                    PropagatorConfig(IMPLICIT_MIDPOINT, 1e-3, DIRICHLET), 1)
    with pytest.raises(EnsembleError):
        integrate_ensemble(frames, None, np.array([[0.0]]), boundary=DIRICHLET)


def test_initial_outside_grid_raises():
    g = make_grid([(-1, 1)], [64])
    with pytest.raises(OutOfDomainError):
        integrate_ensemble([gaussian(g, 0, 0.3)], None, np.array([[2.0]]))


def test_record_every_keeps_last_frame():
    g = make_grid([(-10, 10)], [256])
    frames = evolve(gaussian(g, 0, 1), None, 1.0, PropagatorConfig(dt=0.1), 1)
    ens = integrate_ensemble(frames, None, np.array([[0.5]]), record_every=3)
    np.testing.assert_allclose(ens.times, [0.0, 0.3, 0.6, 0.9, 1.0], atol=1e-12)


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(substeps_per_frame=0)
    with pytest.raises(ValueError):
        IntegratorConfig(node_epsilon=0.1)
    with pytest.raises(ValueError):
        IntegratorConfig(max_step_cells=-1.0)


def test_permute_labels():
    s = ParticleSystem((1.0, 1.0, 1.0), (1, 1, 1))
    q = np.array([[1.0, 2.0, 3.0]])
    np.testing.assert_array_equal(permute_labels(q, s, (2, 0, 1)), [[3.0, 1.0, 2.0]])
    with pytest.raises(ValueError):
        permute_labels(q, s, (0, 0, 1))
    with pytest.raises(ValueError):
        permute_labels(q[:, :2], ParticleSystem((1.0, 2.0), (1, 1)), (1, 0))


def test_node_guard_stops_hops_across_antisymmetric_node():
    from pilotwave.scenarios.identical import two_particle_state
    g1 = make_grid([(-16, 16)], [256])
    psi = two_particle_state(g1, "antisymmetric", 4.0, 1.0, 1.5)
    s = ParticleSystem((1.0, 1.0), (1, 1))
    frames = evolve(psi, None, 1.2, PropagatorConfig(dt=0.005), 6, s)
    # the first start lies 0.05 from the diagonal, well inside one cell
    q0 = np.array([[1.03246382, 0.98301052], [-2.0, 1.0], [3.0, -1.5]])
    side = np.sign(q0[:, 0] - q0[:, 1])
    # without the guard the first trajectory may hop the diagonal, depending on round-off
    ens = integrate_ensemble(frames, s, q0, IntegratorConfig(max_step_cells=0.5, node_guard=1e-2))
    assert np.all(ens.status[1:] == COMPLETED)
    ok = ens.status == COMPLETED
    end = np.sign(ens.positions[-1, :, 0] - ens.positions[-1, :, 1])
    np.testing.assert_array_equal(end[ok], side[ok])


def test_pure_python_switch():
    import os
    import subprocess
    import sys
    env = dict(os.environ, PILOTWAVE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from pilotwave import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout
    assert out.strip() == "python"
