import math

import numpy as np
import pytest

from pilotwave.grid import WaveFunction, gaussian, make_grid, tensor_product
from pilotwave.measurement import (calibrate, classify, conditional_wavefunction, fidelity,
                                   outcome_statistics, position_preset, run_measurement,
                                   shift_periodic, trial_seeds)


def test_fidelity_ignores_scale_and_phase():
    g = make_grid([(-10, 10)], [256])
    a = gaussian(g, 0.0, 1.0, 0.5)
    assert fidelity(a, a * (2.0 * np.exp(0.7j))) == pytest.approx(1.0, abs=1e-12)
    b = gaussian(g, 6.0, 1.0)
    assert fidelity(a, b) < 1e-3


def test_shift_periodic_moves_packet():
    g = make_grid([(-8, 8)], [256])
    phi = gaussian(g, 0.0, 0.5)
    shifted = shift_periodic(phi, 3.0)
    np.testing.assert_allclose(shifted.scalar, gaussian(g, 3.0, 0.5).scalar, atol=1e-10)


def test_conditional_of_product_is_factor():
    gx, gy = make_grid([(-6, 6)], [64]), make_grid([(-8, 8)], [128])
    psi, phi = gaussian(gx, 1.0, 0.8, 0.3), gaussian(gy, 0.0, 1.0)
    cond = conditional_wavefunction(tensor_product(psi, phi), 0.37)
    assert fidelity(cond, psi) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        conditional_wavefunction(tensor_product(psi, phi), 9.0)


def test_trial_seeds_deterministic_and_distinct():
    a, b = trial_seeds(1, 50), trial_seeds(1, 50)
    np.testing.assert_array_equal(a, b)
    assert len(set(a.tolist())) == 50
    assert not np.array_equal(a, trial_seeds(2, 50))


def test_classify_dead_zone_and_aborts():
    s = position_preset(direct=True)
    y = np.array([-4.0, 4.0, 0.05, -0.5])
    assert classify(y, s).tolist() == [1, 2, 0, 1]
    assert classify(y, s, np.array([True, False, True, True])).tolist() == [1, 0, 0, 1]


def test_setup_validation():
    with pytest.raises(ValueError):
        position_preset(c1=0.5, c2=0.5)
    with pytest.raises(ValueError):
        position_preset(a=1.0)


def test_direct_construction_branches_separate():
    s = position_preset(0.6, 0.8, direct=True)
    psi, regions = run_measurement(s)
    assert regions.mass_in_S1 == pytest.approx(0.36, abs=1e-6)
    assert regions.mass_in_S2 == pytest.approx(0.64, abs=1e-6)
    assert fidelity(conditional_wavefunction(psi, -4.0), s.psi1) > 0.999999


def test_position_preset_calibrates():
    m1, m2 = calibrate(position_preset())
    assert m1 >= 0.999 and m2 >= 0.999


def test_pure_branch_gives_single_outcome():
    rep = outcome_statistics(position_preset(1.0, 0.0), 100, 3)
    assert rep.counts == {"1": 100, "2": 0, "unclassified": 0}
    assert rep.within(3.0)
    assert np.nanmin(rep.records["fidelity"]) > 0.999


def test_outcome_report_summary_and_csv(tmp_path):
    c = 1 / math.sqrt(2)
    rep = outcome_statistics(position_preset(c, c), 100, 4)
    s = rep.summary()
    assert s["counts"]["1"] + s["counts"]["2"] + s["counts"]["unclassified"] == 100
    lo, hi = s["wilson_99"]
    assert lo <= rep.frequency1 <= hi
    rep.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].startswith("trial_id,seed") and len(lines) == 101


def test_direct_setup_rejects_dynamics():
    with pytest.raises(ValueError):
        outcome_statistics(position_preset(direct=True), 100, 0)
    with pytest.raises(ValueError):
        outcome_statistics(position_preset(), 10, 0)
