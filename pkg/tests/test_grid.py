import numpy as np
import pytest

from pilotwave.errors import GridError, GridMismatchError, ZeroNormError
from pilotwave.grid import (Configuration, ParticleSystem, WaveFunction, density, embed, gaussian,
                            inner_product, make_grid, normalize, tensor_product)
from pilotwave.wavefile import read_frame, read_manifest, write_frame, write_frames


def test_spacing_and_cell_centres():
    g = make_grid([(-1.0, 1.0)], [8])
    assert g.spacing == (0.25,)
    np.testing.assert_allclose(g.axis(0), -1 + 0.125 + 0.25 * np.arange(8))
    assert g.power_of_two


def test_dimension_cap():
    with pytest.raises(GridError):
        make_grid([(0, 1)] * 4, [4] * 4)


def test_memory_cap():
    with pytest.raises(GridError):
        make_grid([(0, 1)] * 2, [1000, 1000], max_points=10_000)


def test_contains():
    g = make_grid([(-1, 1), (0, 2)], [8, 8])
    inside = g.contains(np.array([[0.0, 1.0], [1.5, 1.0], [0.0, -0.1]]))
    assert inside.tolist() == [True, False, False]


def test_gaussian_is_normalized_and_centred():
    g = make_grid([(-20, 20)], [512])
    psi = gaussian(g, 1.5, 0.8, 2.0)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    x = g.axis(0)
    assert np.sum(density(psi) * x) * g.cell_volume == pytest.approx(1.5, abs=1e-10)


def test_normalize_zero_raises():
    g = make_grid([(-1, 1)], [8])
    with pytest.raises(ZeroNormError):
        normalize(WaveFunction(g, np.zeros(8)))


def test_amplitudes_are_frozen():
    g = make_grid([(-1, 1)], [8])
    psi = WaveFunction(g, np.ones(8))
    with pytest.raises(ValueError):
        psi.amplitudes[0, 0] = 2.0


def test_inner_product_and_tensor_norm():
    g = make_grid([(-10, 10)], [128])
    a, b = gaussian(g, -1, 1.0), gaussian(g, 1, 1.0, 0.5)
    ab = tensor_product(a, b)
    assert ab.grid.dims == 2
    assert ab.norm() == pytest.approx(1.0, abs=1e-12)
    # <a|b> for equal-width Gaussians: exp(-d^2/(8 s^2) - s^2 k^2 / 2) up to a phase
    assert abs(inner_product(a, b)) == pytest.approx(np.exp(-4 / 8 - 0.25 / 2), rel=1e-9)


def test_embed_preserves_norm_and_values():
    g = make_grid([(-1, 1)], [16])
    big = make_grid([(-2, 2)], [32])
    psi = gaussian(g, 0.0, 0.3)
    e = embed(psi, big)
    assert e.norm() == pytest.approx(psi.norm(), abs=1e-15)
    np.testing.assert_array_equal(e.amplitudes[0, 8:24], psi.amplitudes[0])


def test_embed_rejects_misaligned():
    g = make_grid([(-1, 1)], [16])
    with pytest.raises(GridMismatchError):
        embed(gaussian(g, 0, 0.3), make_grid([(-2.05, 1.95)], [32]))


def test_particle_system_axis_map():
    s = ParticleSystem((1.0, 2.0), (1, 1))
    assert s.n_particles == 2
    np.testing.assert_array_equal(s.axis_masses, [1.0, 2.0])
    with pytest.raises(Exception):
        s.check_grid(make_grid([(0, 1)], [8]))


def test_configuration_outside():
    g = make_grid([(0, 1)], [8])
    with pytest.raises(Exception):
        Configuration(np.array([2.0]), 0.0).check_inside(g)


def test_frame_roundtrip(tmp_path):
    g = make_grid([(-3, 3), (-1, 2)], [8, 16])
    psi = gaussian(g, (0.2, 0.1), (1.0, 0.5), (1.0, -2.0)).replace(time=0.75)
    write_frame(tmp_path / "f.bwf", psi)
    back = read_frame(tmp_path / "f.bwf")
    assert back.grid == g and back.time == 0.75
    np.testing.assert_array_equal(back.amplitudes, psi.amplitudes)


def test_frames_manifest(tmp_path):
    g = make_grid([(-3, 3)], [8])
    frames = [gaussian(g, 0, 1).replace(time=t) for t in (0.0, 0.5)]
    path = write_frames(tmp_path / "frames", frames, {"kind": "free"}, "abc")
    m = read_manifest(path)
    assert m["times"] == [0.0, 0.5] and m["config_hash"] == "abc"
    assert read_frame(tmp_path / "frames" / m["frames"][1]).time == 0.5
