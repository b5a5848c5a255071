"""Measurement scenarios: outcome statistics, effective collapse, subspace preparation."""
from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np

from ..checks import make_check
from ..errors import BranchOverlapError
from ..measurement import PRESETS, calibrate, effective_wavefunction_check, outcome_statistics
from ..potentials import HarmonicPotential
from ..report import ScenarioReport
from ..rng import child
from .common import EXTRA, SAMPLE, add_node_check

S = 1 / math.sqrt(2)
BORN_DEFAULTS = {"preset": "position", "n_trials": 10000,
                 "amplitudes": [[1.0, 0.0], [S, S], [0.6, 0.8], [0.6, "0.8j"]],
                 "nsigma": 3.0}
COLLAPSE_DEFAULTS = {"preset": "position", "c1": S, "c2": S, "n_trajectories": 12,
                     "window_after_readoff": 1.0, "reflect_omega": 1.0, "reflect_window": 3.2}
SUBSPACE_DEFAULTS = {"preset": "energy", "n_trials": 1000}


def parse_amplitude(c) -> complex:
    """Accept numbers, ``[re, im]`` pairs or strings such as ``"0.8j"``."""
    if isinstance(c, (list, tuple)):
        return complex(float(c[0]), float(c[1]))
    return complex(c)


def _label(c1: complex, c2: complex) -> str:
    def one(c):
        if c.imag == 0:
            return f"{c.real:.4g}"
        if c.real == 0:
            return f"{c.imag:.4g}i"
        return f"{c.real:.4g}{c.imag:+.4g}i"
    return f"c1_{one(c1)}__c2_{one(c2)}".replace(".", "p").replace("+", "").replace("-", "m")


def _outcome_dataset(out) -> dict:
    r = out.records
    return {"outcome": r["outcome"], "outcome1": r["outcome"] == 1,
            "classified": r["outcome"] != 0, "unclassified": r["outcome"] == 0,
            "pointer_final": r["pointer_final"], "y0": r["y0"], "fidelity": r["fidelity"],
            "seed": r["seed"].astype(np.uint64)}


def born_rule(params: dict, seed: int, workers: int = 1) -> ScenarioReport:
    p = {**BORN_DEFAULTS, **params}
    t0 = time.perf_counter()
    report = ScenarioReport("born_rule", p, {"root": seed})
    make = PRESETS[p["preset"]]
    f1, f2 = calibrate(make())
    cal = {"own_mass": np.array([f1, f2])}
    report.datasets["calibration"] = cal
    report.add(make_check("calibration", "min_ge", "calibration", cal, "measurement",
                          key="own_mass", bound=0.999))
    freqs = {}
    for j, pair in enumerate(p["amplitudes"]):
        c1, c2 = (parse_amplitude(c) for c in pair)
        # shared seeds across amplitude sets, so phase changes are compared trial by trial
        out = outcome_statistics(make(c1, c2), p["n_trials"], child(seed, SAMPLE), workers=workers)
        name = _label(c1, c2)
        arrays = _outcome_dataset(out)
        report.datasets[name] = arrays
        p1 = abs(c1) ** 2
        report.add(make_check(f"born_{name}", "binomial_within", name, arrays, "AC2",
                              key="outcome1", p0=p1, nsigma=p["nsigma"], mask="classified"))
        report.add(make_check(f"unclassified_{name}", "fraction_le", name, arrays, "measurement",
                              key="unclassified", bound=0.01))
        report.add(make_check(f"conditional_fidelity_{name}", "min_ge", name, arrays,
                              "measurement", key="fidelity", bound=0.999, mask="classified"))
        add_node_check(report, out.records["status"], f"status_{name}", name=f"node_abort_{name}")
        freqs[name] = {"p1": p1, "frequency1": out.frequency1, "counts": out.counts,
                       "wilson_99": out.interval()}
    report.summary = {"frequencies": freqs}
    report.runtime_s = time.perf_counter() - t0
    return report


def effective_collapse(params: dict, seed: int, workers: int = 1) -> ScenarioReport:
    p = {**COLLAPSE_DEFAULTS, **params}
    t0 = time.perf_counter()
    report = ScenarioReport("effective_collapse", p, {"root": seed})
    setup = PRESETS[p["preset"]](parse_amplitude(p["c1"]), parse_amplitude(p["c2"]))
    t_end = setup.readoff_time + p["window_after_readoff"]
    fid, dev, norm, branch = [], [], [], []
    for i in range(p["n_trajectories"]):
        rep = effective_wavefunction_check(setup, seed=child(seed, SAMPLE, i), t_end=t_end)
        fid.append(rep.min_fidelity)
        dev.append(rep.max_deviation)
        norm.append(rep.norm_share_error)
        branch.append(rep.branch)
    arrays = {"min_fidelity": np.array(fid), "max_deviation": np.array(dev),
              "norm_share_error": np.array(norm), "branch": np.array(branch)}
    report.datasets["collapse"] = arrays
    report.add(make_check("conditional_fidelity", "min_ge", "collapse", arrays, "AC5",
                          key="min_fidelity", bound=0.999))
    report.add(make_check("empty_branch_deviation", "max_abs_le", "collapse", arrays, "AC5",
                          key="max_deviation", bound=1e-6))
    report.add(make_check("branch_norm_shares", "max_abs_le", "collapse", arrays, "measurement",
                          key="norm_share_error", bound=1e-6))

    # counter-case: a pointer trap after read-off brings the packets back together
    M = setup.masses[1]
    trap = HarmonicPotential((0.0, p["reflect_omega"]), mass=(setup.masses[0], M))
    bent = replace(setup, after_readoff=trap)
    detected, message = 0, ""
    try:
        effective_wavefunction_check(bent, seed=child(seed, EXTRA),
                                     t_end=setup.readoff_time + p["reflect_window"])
    except BranchOverlapError as exc:
        detected, message = 1, str(exc)
    counter = {"reoverlap_detected": np.array([detected])}
    report.datasets["counter_case"] = counter
    report.add(make_check("reoverlap_detected", "value_ge", "counter_case", counter,
                          "measurement", key="reoverlap_detected", bound=1))
    report.summary = {"branches": np.bincount(branch, minlength=3)[1:].tolist(),
                      "counter_case": message}
    report.runtime_s = time.perf_counter() - t0
    return report


def subspace_measurement(params: dict, seed: int, workers: int = 1) -> ScenarioReport:
    """A state prepared inside one outcome subspace gives that outcome every time."""
    p = {**SUBSPACE_DEFAULTS, **params}
    t0 = time.perf_counter()
    report = ScenarioReport("subspace_measurement", p, {"root": seed})
    make = PRESETS[p["preset"]]
    for k, (c1, c2) in enumerate(((1.0, 0.0), (0.0, 1.0))):
        out = outcome_statistics(make(c1, c2), p["n_trials"], child(seed, SAMPLE, k),
                                 workers=workers)
        arrays = _outcome_dataset(out)
        arrays["wrong"] = arrays["classified"] & (arrays["outcome"] != (1 if c1 else 2))
        name = f"prepared_{1 if c1 else 2}"
        report.datasets[name] = arrays
        report.add(make_check(f"exceptions_{name}", "count_zero", name, arrays, "AC2",
                              key="wrong"))
        report.add(make_check(f"unclassified_{name}", "fraction_le", name, arrays, "measurement",
                              key="unclassified", bound=0.01))
    report.runtime_s = time.perf_counter() - t0
    return report
