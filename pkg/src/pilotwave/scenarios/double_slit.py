"""Two slits: side of passage fixes the screen half; a which-way pointer kills the fringes."""
from __future__ import annotations

import math
import time

import numpy as np

from ..checks import make_check
from ..equilibrium import sample_equilibrium
from ..grid import ParticleSystem, WaveFunction, gaussian, make_grid, normalize
from ..guidance import IntegratorConfig, integrate_ensemble
from ..potentials import LocalOperator, PointerCoupling, SlitBarrier
from ..propagator import PropagatorConfig, iter_evolve
from ..report import ScenarioReport
from ..rng import child
from .common import SAMPLE, FrameTap, add_equivariance, add_equivariance_frames, add_node_check

GEOMETRY = {"x_extent": 20.0, "y_extent": 16.0, "x0": -5.0, "k0": 8.0, "sigma_x": 1.0,
            "sigma_y": 3.0, "barrier_x": 0.0, "barrier_thickness": 0.4, "barrier_height": 1e3,
            "slit_separation": 4.0, "slit_width": 1.0, "edge_smoothing": 0.06, "t_final": 1.6,
            "screen_x": 6.0, "screen_halfwidth": 0.5}
DEFAULTS = {**GEOMETRY, "nx": 512, "ny": 256, "dt": 0.003, "n_traj": 10000,
            "substeps_per_frame": 2, "record_every": 2, "equivariance_frames": 10,
            "max_step_cells": 2.0, "control_visibility_min": 0.5}
WHICH_WAY_DEFAULTS = {**GEOMETRY, "nx": 256, "ny": 256, "nz": 32, "z_extent": 6.0,
                      "dt": 0.003, "pointer_mass": 10.0, "pointer_sigma": 1.0,
                      "coupling": 10.0, "window": [0.6, 0.9], "sign_width": 0.25,
                      "visibility_max": 0.05, "control_visibility_min": 0.5}


def _validate(p):
    for key in ("x_extent", "y_extent", "k0", "sigma_x", "sigma_y", "barrier_thickness",
                "barrier_height", "slit_separation", "slit_width", "t_final", "dt"):
        if not p[key] > 0:
            raise ValueError(f"{key} must be positive")
    if p["slit_width"] >= p["slit_separation"]:
        raise ValueError("slit_width must be smaller than slit_separation")
    if not p["x0"] < p["barrier_x"] < p["screen_x"]:
        raise ValueError("need x0 < barrier_x < screen_x")


def barrier(p) -> SlitBarrier:
    s = p["slit_separation"] / 2
    return SlitBarrier(p["barrier_x"], p["barrier_thickness"], (-s, s),
                       (p["slit_width"], p["slit_width"]), p["barrier_height"],
                       smoothing=p["edge_smoothing"])


def fringe_spacing(p) -> float:
    """Far-field fringe period ``lambda D / d`` at the screen."""
    return 2 * math.pi / p["k0"] * (p["screen_x"] - p["barrier_x"]) / p["slit_separation"]


def screen_profile(psi: WaveFunction, p) -> tuple[np.ndarray, np.ndarray]:
    """``|psi|^2`` summed over the screen strip in x and over any further axes."""
    rho = np.abs(psi.amplitudes[0]) ** 2 * psi.grid.cell_volume
    x, y = psi.grid.axis(0), psi.grid.axis(1)
    strip = np.abs(x - p["screen_x"]) <= p["screen_halfwidth"]
    prof = rho[strip].sum(axis=0)
    if prof.ndim > 1:
        prof = prof.sum(axis=tuple(range(1, prof.ndim)))
    return y, prof


def _window(y, half):
    idx = np.flatnonzero(np.abs(y) <= half)
    return np.array([idx[0], idx[-1]])


def first_crossing(times, x, y, plane):
    """Time and transverse coordinate at the first upward crossing of ``x = plane``.

    Linear refinement between records; NaN where no crossing was recorded.
    """
    d = x - plane
    up = (d[:-1] < 0) & (d[1:] >= 0)
    hit = np.any(up, axis=0)
    k = np.argmax(up, axis=0)
    cols = np.arange(x.shape[1])
    d0, d1 = d[k, cols], d[k + 1, cols]
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(d1 != d0, -d0 / (d1 - d0), 0.0)
    tc = times[k] + w * (times[k + 1] - times[k])
    yc = y[k, cols] + w * (y[k + 1, cols] - y[k, cols])
    return np.where(hit, tc, np.nan), np.where(hit, yc, np.nan)


def run(params: dict, seed: int, workers: int = 1) -> ScenarioReport:
    p = {**DEFAULTS, **params}
    _validate(p)
    t0 = time.perf_counter()
    grid = make_grid([(-p["x_extent"], p["x_extent"]), (-p["y_extent"], p["y_extent"])],
                     [p["nx"], p["ny"]])
    system = ParticleSystem.single(2)
    psi = gaussian(grid, (p["x0"], 0.0), (p["sigma_x"], p["sigma_y"]), (p["k0"], 0.0))
    V = barrier(p)
    n = p["n_traj"]
    starts = sample_equilibrium(psi, n, child(seed, SAMPLE)).positions
    steps = math.ceil(p["t_final"] / p["dt"] - 1e-9)
    keep = max(1, steps // p["equivariance_frames"])
    keep = p["record_every"] * max(1, keep // p["record_every"])
    tap = FrameTap(iter_evolve(psi, V, p["t_final"], PropagatorConfig(dt=p["dt"]), 1, system), keep)
    cfg = IntegratorConfig(substeps_per_frame=p["substeps_per_frame"],
                           max_step_cells=p["max_step_cells"])
    ens = integrate_ensemble(tap, system, starts, cfg, workers=workers,
                             record_every=p["record_every"])
    final = tap.last
    hy = grid.spacing[1]
    X, Y = ens.positions[..., 0], ens.positions[..., 1]

    report = ScenarioReport("double_slit", p, {"root": seed})
    tc, yc = first_crossing(ens.times, X, Y, p["barrier_x"])
    crossed = np.isfinite(yc)
    ambiguous = crossed & (np.abs(np.nan_to_num(yc)) <= hy)
    classified = crossed & ~ambiguous & np.isfinite(Y[-1])
    out_x = p["barrier_x"] + p["barrier_thickness"] / 2
    transmitted = np.isfinite(X[-1]) & (X[-1] > out_x)
    rho = np.abs(final.scalar) ** 2 * grid.cell_volume
    p_trans = float(rho[grid.axis(0) > out_x].sum())
    arrays = {"x0": starts[:, 0], "y0": starts[:, 1], "crossing_time": tc, "y_at_barrier": yc,
              "slit_side": np.sign(np.nan_to_num(yc)), "screen_side": np.sign(np.nan_to_num(Y[-1])),
              "crossed": crossed, "ambiguous": ambiguous, "classified": classified,
              "transmitted": transmitted, "x_final": X[-1], "y_final": Y[-1]}
    report.datasets["slits"] = arrays
    report.add(make_check("slit_side_equals_screen_side", "mismatch_count", "slits", arrays, "AC4",
                          left="slit_side", right="screen_side", mask="classified"))
    report.add(make_check("axis_ambiguous_fraction", "fraction_le", "slits", arrays, "AC4",
                          key="ambiguous", bound=0.005))
    report.add(make_check("transmission_fraction", "binomial_within", "slits", arrays,
                          "double_slit", key="transmitted", p0=p_trans, nsigma=3.0))
    thin = max(1, len(ens.times) // 60)
    paths = {"times": ens.times[::thin], "positions": ens.positions[::thin]}
    if (len(ens.times) - 1) % thin:
        paths = {"times": np.append(paths["times"], ens.times[-1]),
                 "positions": np.concatenate([paths["positions"], ens.positions[-1:]])}
    report.datasets["trajectories"] = paths
    report.add(make_check("no_axis_crossing", "sign_changes", "trajectories", paths, "AC4",
                          key="positions", axis=1))

    # screen statistics: transmitted trajectories against |psi|^2 beyond the barrier
    beyond = np.where(grid.axis(0)[:, None] > out_x, final.scalar, 0.0)
    if transmitted.sum() >= 1000:
        screen_psi = normalize(WaveFunction(grid, beyond[None], final.time))
        add_equivariance(report, "screen", ens.positions[-1][transmitted], screen_psi, seed,
                         10_000)
    stored = {round(float(t), 9): tap.kept[round(float(t), 9)] for t in ens.times
              if round(float(t), 9) in tap.kept}
    times = np.array(sorted(stored))
    idx = [int(np.argmin(np.abs(ens.times - t))) for t in times]
    add_equivariance_frames(report, ens.times[idx], ens.positions[idx], stored, seed)
    add_node_check(report, ens.status)

    y, prof = screen_profile(final, p)
    vis = {"y": y, "profile": prof, "window": _window(y, fringe_spacing(p))}
    report.datasets["screen_profile"] = vis
    report.add(make_check("fringes_present", "visibility_ge", "screen_profile", vis,
                          "double_slit", key="profile", window="window",
                          bound=p["control_visibility_min"]))
    report.summary = {"transmitted_probability": p_trans,
                      "transmitted_fraction": float(transmitted.mean()),
                      "crossed": int(crossed.sum()), "ambiguous": int(ambiguous.sum()),
                      "reflected": int(np.sum(~crossed)), "status": ens.status_counts(),
                      "boundary_mass": float(rho[[0, -1]].sum() + rho[:, [0, -1]].sum())}
    report.runtime_s = time.perf_counter() - t0
    report.ensemble = ens
    return report


def which_way(params: dict, seed: int, workers: int = 1) -> ScenarioReport:
    """Same slits with a pointer coordinate kicked by the sign of the transverse position."""
    p = {**WHICH_WAY_DEFAULTS, **params}
    _validate(p)
    if not p["pointer_mass"] > 0 or not p["pointer_sigma"] > 0:
        raise ValueError("pointer_mass and pointer_sigma must be positive")
    t0 = time.perf_counter()
    ext = [(-p["x_extent"], p["x_extent"]), (-p["y_extent"], p["y_extent"])]
    grid2 = make_grid(ext, [p["nx"], p["ny"]])
    grid3 = make_grid(ext + [(-p["z_extent"], p["z_extent"])], [p["nx"], p["ny"], p["nz"]])
    w = p["sign_width"]
    coupling = PointerCoupling(p["coupling"], LocalOperator(lambda x, y, z: np.tanh(y / w),
                                                            "transverse_sign"),
                               2, tuple(p["window"]))
    cfg = PropagatorConfig(dt=p["dt"])
    report = ScenarioReport("double_slit_which_way", p, {"root": seed})
    profiles = {}
    for label, grid, V, system, center, sigma, k in (
            ("control", grid2, barrier(p), ParticleSystem.single(2),
             (p["x0"], 0.0), (p["sigma_x"], p["sigma_y"]), (p["k0"], 0.0)),
            ("detected", grid3, barrier(p) + coupling,
             ParticleSystem((1.0, p["pointer_mass"]), (2, 1)),
             (p["x0"], 0.0, 0.0), (p["sigma_x"], p["sigma_y"], p["pointer_sigma"]),
             (p["k0"], 0.0, 0.0))):
        psi = gaussian(grid, center, sigma, k)
        *_, final = iter_evolve(psi, V, p["t_final"], cfg, 10, system)
        y, prof = screen_profile(final, p)
        profiles[label] = prof
        if label == "detected":
            rho = np.abs(final.scalar) ** 2 * grid.cell_volume
            pointer_edge = float(rho[..., [0, -1]].sum())
    win = _window(y, fringe_spacing(p))
    arrays = {"y": y, "control": profiles["control"], "detected": profiles["detected"],
              "window": win}
    report.datasets["screen_profiles"] = arrays
    report.add(make_check("which_way_visibility", "visibility_le", "screen_profiles", arrays,
                          "AC4", key="detected", window="window", bound=p["visibility_max"]))
    report.add(make_check("control_visibility", "visibility_ge", "screen_profiles", arrays,
                          "double_slit", key="control", window="window",
                          bound=p["control_visibility_min"]))
    report.summary = {"fringe_spacing": fringe_spacing(p), "pointer_edge_mass": pointer_edge,
                      "pointer_kick": p["coupling"] * (p["window"][1] - p["window"][0])}
    report.runtime_s = time.perf_counter() - t0
    return report
