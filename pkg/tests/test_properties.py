import json

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from pilotwave.equilibrium import tv_statistic
from pilotwave.export import downsample_indices
from pilotwave.grid import ParticleSystem, WaveFunction, embed, gaussian, make_grid, normalize
from pilotwave.guidance import permute_labels, velocity_on_grid
from pilotwave.report import canonical_json

finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), mag=st.floats(1e-3, 1e3), phase=st.floats(0, 6.283))
def test_velocity_invariant_under_complex_scaling(seed, mag, phase):
    rng = np.random.default_rng(seed)
    g = make_grid([(-3, 3)], [32])
    amps = rng.normal(size=32) + 1j * rng.normal(size=32) + 2.0
    psi = WaveFunction(g, amps)
    scaled = WaveFunction(g, amps * mag * np.exp(1j * phase))
    np.testing.assert_allclose(velocity_on_grid(scaled), velocity_on_grid(psi),
                               rtol=1e-9, atol=1e-12)


@given(st.permutations([0, 1, 2]), st.lists(finite, min_size=3, max_size=3))
def test_permute_labels_inverse(perm, q):
    s = ParticleSystem((1.0, 1.0, 1.0), (1, 1, 1))
    q = np.array([q])
    inv = tuple(int(i) for i in np.argsort(perm))
    np.testing.assert_array_equal(permute_labels(permute_labels(q, s, tuple(perm)), s, inv), q)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(-0.5, 0.5), sigma=st.floats(0.1, 0.4), pad=st.integers(1, 8))
def test_embed_preserves_norm(c, sigma, pad):
    g = make_grid([(-1, 1)], [16])
    big = make_grid([(-1 - pad * 0.125, 1 + pad * 0.125)], [16 + 2 * pad])
    psi = gaussian(g, c, sigma)
    assert abs(embed(psi, big).norm() - psi.norm()) < 1e-14


@given(st.lists(finite, min_size=1, max_size=50),
       st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3))
def test_tv_statistic_bounded(xs, w):
    masses = np.array(w) / np.sum(w)
    edges = [np.array([-np.inf, -1.0, 1.0, np.inf])]
    tv = tv_statistic(np.array(xs)[:, None], edges, masses)
    assert 0.0 <= tv <= 1.0


@given(st.integers(1, 5000), st.integers(2, 600))
def test_downsample_indices_properties(n, cap):
    idx = downsample_indices(n, cap)
    assert len(idx) <= min(n, cap)
    assert idx[0] == 0 and idx[-1] == n - 1
    assert np.all(np.diff(idx) > 0)


@given(st.dictionaries(st.text(min_size=1, max_size=5), finite | st.integers(-10, 10),
                       max_size=6))
def test_canonical_json_is_order_independent(d):
    flipped = dict(reversed(list(d.items())))
    assert canonical_json(d) == canonical_json(flipped)
    assert json.loads(canonical_json(d)) == json.loads(json.dumps(d))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_normalize_gives_unit_norm(seed):
    rng = np.random.default_rng(seed)
    g = make_grid([(-2, 2), (-1, 1)], [8, 16])
    psi = normalize(WaveFunction(g, rng.normal(size=(8, 16)) + 1j * rng.normal(size=(8, 16))))
    assert abs(psi.norm() - 1.0) < 1e-12
