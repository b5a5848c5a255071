"""Two identical particles in one dimension: label symmetry and the nodal diagonal."""
from __future__ import annotations

import time

import numpy as np

from ..checks import make_check
from ..equilibrium import sample_equilibrium
from ..grid import ParticleSystem, WaveFunction, gaussian, make_grid, normalize, tensor_product
from ..guidance import IntegratorConfig, integrate_ensemble, permute_labels
from ..propagator import PropagatorConfig, iter_evolve
from ..report import ScenarioReport
from ..rng import child
from .common import SAMPLE, FrameTap, add_equivariance_frames, add_node_check

SYMMETRIES = ("symmetric", "antisymmetric")
DEFAULTS = {"symmetry": "antisymmetric", "n_traj": 10000, "n_mirror": 1000, "extent": 16.0,
            "points": 256, "separation": 4.0, "sigma": 1.0, "momentum": 1.5, "t_final": 3.0,
            "dt": 0.005, "frame_stride": 6, "record_every": 20, "substeps_per_frame": 4,
            "max_step_cells": 0.5, "node_guard": 1e-2}


def two_particle_state(grid1, symmetry: str, separation: float, sigma: float,
                       momentum: float) -> WaveFunction:
    """(Anti)symmetrized product of two Gaussians moving towards each other."""
    a = gaussian(grid1, -separation / 2, sigma, momentum)
    b = gaussian(grid1, separation / 2, sigma, -momentum)
    ab = tensor_product(a, b)
    ba = tensor_product(b, a)
    sign = 1.0 if symmetry == "symmetric" else -1.0
    return normalize(WaveFunction(ab.grid, ab.amplitudes + sign * ba.amplitudes))


def run(params: dict, seed: int, workers: int = 1) -> ScenarioReport:
    p = {**DEFAULTS, **params}
    if p["symmetry"] not in SYMMETRIES:
        raise ValueError(f"symmetry must be one of {SYMMETRIES}")
    t0 = time.perf_counter()
    e = p["extent"]
    grid1 = make_grid([(-e, e)], [p["points"]])
    psi = two_particle_state(grid1, p["symmetry"], p["separation"], p["sigma"], p["momentum"])
    system = ParticleSystem((1.0, 1.0), (1, 1))

    n = p["n_traj"]
    starts = sample_equilibrium(psi, n, child(seed, SAMPLE)).positions
    m = min(p["n_mirror"], n)
    swapped = permute_labels(starts[:m], system, (1, 0))
    tap = FrameTap(iter_evolve(psi, None, p["t_final"], PropagatorConfig(dt=p["dt"]),
                               p["frame_stride"], system), p["record_every"])
    cfg = IntegratorConfig(substeps_per_frame=p["substeps_per_frame"],
                           max_step_cells=p["max_step_cells"], node_guard=p["node_guard"])
    ens = integrate_ensemble(tap, system, np.vstack([starts, swapped]), cfg,
                             record_every=p["record_every"], workers=workers)
    main = ens.positions[:, :n]
    mirror = ens.positions[:, n:]

    report = ScenarioReport("identical_particles", p, {"root": seed})
    arrays = {"times": ens.times, "positions": main[:, :m], "swapped": mirror}
    report.datasets["labels"] = arrays
    report.add(make_check("permutation_mirror", "mirror_error", "labels", arrays, "AC9",
                          key="positions", other="swapped", bound=1e-6))
    gaps = {"times": ens.times, "positions": main}
    report.datasets["diagonal"] = gaps
    if p["symmetry"] == "antisymmetric":
        report.add(make_check("no_diagonal_crossing", "sign_changes", "diagonal", gaps, "AC9",
                              key="positions", axis=0, pair=(0, 1)))
        report.add(make_check("min_gap", "min_gap_positive", "diagonal", gaps, "AC9",
                              key="positions", i=0, j=1))
    add_equivariance_frames(report, ens.times, main, tap.kept, seed)
    add_node_check(report, ens.status[:n])
    report.summary = {"status": ens.status_counts(), "v_max": ens.v_max}
    report.runtime_s = time.perf_counter() - t0
    report.ensemble = ens
    return report
