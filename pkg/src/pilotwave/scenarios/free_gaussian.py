"""Free Gaussian packet: trajectories against the closed-form scaling solution."""
from __future__ import annotations

import time

import numpy as np

from ..checks import make_check
from ..equilibrium import sample_equilibrium
from ..grid import ParticleSystem, gaussian, make_grid
from ..guidance import IntegratorConfig, integrate_ensemble
from ..propagator import PropagatorConfig, iter_evolve
from ..report import ScenarioReport
from ..rng import child
from .common import SAMPLE, FrameTap, add_equivariance_frames, add_node_check

DEFAULTS = {"sigma0": 1.0, "n_traj": 10000, "t_final": 4.0, "extent": 64.0, "points": 8192,
            "dt": 0.01, "frame_stride": 2, "record_every": 20, "substeps_per_frame": 4}


def run(params: dict, seed: int, workers: int = 1) -> ScenarioReport:
    p = {**DEFAULTS, **params}
    t0 = time.perf_counter()
    s0 = p["sigma0"]
    grid = make_grid([(-p["extent"], p["extent"])], [p["points"]])
    system = ParticleSystem.single(1)
    psi = gaussian(grid, 0.0, s0)
    width_final = s0 * np.sqrt(1 + (p["t_final"] / (2 * s0 ** 2)) ** 2)
    if 2 * p["extent"] < 40 * width_final:
        raise ValueError("domain must span at least 40 packet widths at t_final")

    starts = sample_equilibrium(psi, p["n_traj"], child(seed, SAMPLE)).positions
    probes = np.array([[0.0], [s0]])
    tap = FrameTap(iter_evolve(psi, None, p["t_final"], PropagatorConfig(dt=p["dt"]),
                               p["frame_stride"], system), p["record_every"])
    cfg = IntegratorConfig(substeps_per_frame=p["substeps_per_frame"])
    ens = integrate_ensemble(tap, system, np.vstack([starts, probes]), cfg,
                             record_every=p["record_every"], workers=workers)
    n = p["n_traj"]
    main = ens.positions[:, :n]

    report = ScenarioReport("free_gaussian", p, {"root": seed})
    report.datasets["ensemble"] = {"times": ens.times, "positions": main}
    report.datasets["probes"] = {"times": ens.times, "positions": ens.positions[:, n:],
                                 "center_path": ens.positions[:, n, 0]}
    report.add(make_check("oracle_max_error", "gaussian_oracle", "ensemble",
                          report.datasets["ensemble"], "AC7", sigma0=s0, bound=1e-3 * s0))
    report.add(make_check("center_stays_put", "max_abs_le", "probes", report.datasets["probes"],
                          "guidance", key="center_path", bound=1e-10))
    report.add(make_check("probe_sigma0_oracle", "gaussian_oracle", "probes",
                          report.datasets["probes"], "AC7", sigma0=s0, bound=1e-3 * s0))
    report.add(make_check("final_variance", "variance_within", "ensemble",
                          report.datasets["ensemble"], "equilibrium", sigma0=s0, nsigma=3.0))
    add_equivariance_frames(report, ens.times, main, tap.kept, seed)
    add_node_check(report, ens.status[:n])
    report.summary = {"v_max": ens.v_max, "status": ens.status_counts(),
                      "frames": ens.meta["frames"]}
    report.runtime_s = time.perf_counter() - t0
    report.ensemble = ens
    return report
