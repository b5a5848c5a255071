"""Box eigenstate held, then released: each particle flies off at +-hbar k / m."""
from __future__ import annotations

import math
import sys
import time

import numpy as np

from ..checks import make_check
from ..equilibrium import sample_equilibrium
from ..grid import Grid, ParticleSystem, embed, make_grid
from ..guidance import IntegratorConfig, integrate_ensemble
from ..propagator import IMPLICIT_MIDPOINT, PropagatorConfig, iter_evolve
from ..report import ScenarioReport
from ..rng import child
from ..spectral import DIRICHLET
from .common import SAMPLE, add_equivariance, add_node_check
from .stationary import box_state

DEFAULTS = {"k_mode": 1500, "box_length": 1.0, "mass": 1.0, "points": 4608, "t_release": 1e-4,
            "hold_frames": 10, "t_final": 2.1e-3, "n_traj": 10000, "overlap_kt": 2.0,
            "early_frame_k2t": 4.0, "frames_per_stage": 40, "substeps_per_frame": 4,
            "max_step_cells": 2.0, "domain_margin": 0.5, "speed_tol": 0.02, "late_window": 0.1}


def stage_bounds(t_release: float, t_final: float, t_overlap: float) -> list[float]:
    """Release time, end of the overlap phase, then doubling intervals up to ``t_final``."""
    bounds = [t_release, min(t_release + t_overlap, t_final)]
    while bounds[-1] < t_final:
        bounds.append(min(t_release + 2 * (bounds[-1] - t_release), t_final))
    return bounds


def free_grid(h: float, half_width: float) -> Grid:
    """Power-of-two periodic grid with spacing ``h`` covering ``[-half_width, half_width]``."""
    n = 2 ** math.ceil(math.log2(2 * half_width / h))
    return make_grid([(-n * h / 2, n * h / 2)], [n])


def _late_speed(times, positions, t0, t1, window):
    """Mean velocity over the last ``window`` fraction of ``[t0, t1]``, linear in time between records."""
    ta = t1 - window * (t1 - t0)
    j = int(np.clip(np.searchsorted(times, ta) - 1, 0, len(times) - 2))
    w = (ta - times[j]) / (times[j + 1] - times[j])
    xa = (1 - w) * positions[j] + w * positions[j + 1]
    return (positions[-1] - xa) / (t1 - ta)


def _validate(p):
    if int(p["k_mode"]) != p["k_mode"] or p["k_mode"] < 1:
        raise ValueError("k_mode must be a positive integer")
    for key in ("box_length", "mass", "t_release", "overlap_kt", "early_frame_k2t",
                "max_step_cells", "domain_margin", "speed_tol"):
        if not p[key] > 0:
            raise ValueError(f"{key} must be positive")
    if not p["t_final"] > p["t_release"]:
        raise ValueError("t_final must exceed t_release")
    if 2 * p["points"] < 4 * p["k_mode"]:
        raise ValueError("points must give at least 4 samples per wavelength")
    if not 0 < p["late_window"] < 1:
        raise ValueError("late_window must lie in (0, 1)")


def run(params: dict, seed: int, workers: int = 1) -> ScenarioReport:
    p = {**DEFAULTS, **params}
    _validate(p)
    t0 = time.perf_counter()
    L, m = p["box_length"], p["mass"]
    system = ParticleSystem.single(1, mass=m)
    k = p["k_mode"] * math.pi / L
    speed = system.hbar * k / m
    box = make_grid([(-L / 2, L / 2)], [p["points"]])
    h = box.spacing[0]
    psi = box_state(box, p["k_mode"])
    n = p["n_traj"]
    starts = sample_equilibrium(psi, n, child(seed, SAMPLE)).positions
    report = ScenarioReport("box_release", p, {"root": seed})
    cfg = IntegratorConfig(substeps_per_frame=p["substeps_per_frame"],
                           max_step_cells=p["max_step_cells"])

    # hold: walls in place, eigenstate only picks up a global phase
    held = {}

    def hold_frames():
        hold = PropagatorConfig(backend=IMPLICIT_MIDPOINT, dt=p["t_release"] / p["hold_frames"],
                                boundary=DIRICHLET)
        for f in iter_evolve(psi, None, p["t_release"], hold, 1, system):
            held["last"] = f
            yield f

    ens = integrate_ensemble(hold_frames(), system, starts, cfg, DIRICHLET, workers=workers)
    hold_drift = ens.positions[:, :, 0] - starts[None, :, 0]
    report.datasets["hold"] = {"times": ens.times, "drift": hold_drift}
    report.add(make_check("held_static", "max_abs_le", "hold", report.datasets["hold"],
                          "box_release", key="drift", bound=1e-6))
    psi = held["last"]
    add_equivariance(report, "release", ens.positions[-1], psi, seed, 0)
    q = ens.positions[-1].copy()
    status = ens.status.copy()

    # free flight on growing periodic grids
    t_rel, t_end = p["t_release"], p["t_final"]
    bounds = stage_bounds(t_rel, t_end, p["overlap_kt"] / k)
    times, paths = [ens.times], [ens.positions[:, :, 0]]
    mass_edge = []
    for s, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        if s == 0:
            frames = max(1, int(round((b - a) * k * k / p["early_frame_k2t"])))
            every = max(1, frames // 20)
        else:
            frames, every = p["frames_per_stage"], 1
        grid = free_grid(h, L / 2 + (1 + p["domain_margin"]) * speed * (b - t_rel) + 20 * h)
        psi = embed(psi, grid)
        last = {}

        def stage(psi=psi, a=a, b=b, frames=frames, last=last):
            for f in iter_evolve(psi, None, b, PropagatorConfig(dt=(b - a) / frames), 1, system):
                last["f"] = f
                yield f

        alive = np.isfinite(q[:, 0])
        e = integrate_ensemble(stage(), system, q[alive], cfg, workers=workers,
                               record_every=every)
        q[alive] = e.positions[-1]
        status[alive] = np.maximum(status[alive], e.status)
        block = np.full((len(e.times), n), np.nan)
        block[:, alive] = e.positions[:, :, 0]
        times.append(e.times[1:])
        paths.append(block[1:])
        psi = last["f"]
        rho = np.abs(psi.scalar) ** 2 * h
        edge = max(1, grid.points[0] // 100)
        mass_edge.append(float(rho[:edge].sum() + rho[-edge:].sum()))
        add_equivariance(report, f"stage{s + 1}", q, psi, seed, s + 1)
        print(f"box_release: stage {s + 1}/{len(bounds) - 1} to t={b:.3g} on {grid.points[0]} points",
              file=sys.stderr)

    times = np.concatenate(times)
    paths = np.concatenate(paths)
    x0 = starts[:, 0]
    v_late = _late_speed(times, paths, t_rel, t_end, p["late_window"])
    center = 0.0
    ambiguous = np.abs(x0 - center) <= h
    side = np.sign(x0 - center)
    speed_ok = np.abs(np.abs(v_late) - speed) <= p["speed_tol"] * speed
    arrays = {"x0": x0, "v_late": v_late, "speed_ok": speed_ok, "side": side, "direction": np.sign(v_late), "ambiguous": ambiguous,
              "unambiguous": ~ambiguous & np.isfinite(v_late), "moves_right": v_late > 0,
              "finite": np.isfinite(v_late)}
    report.datasets["release"] = arrays
    report.datasets["trajectories"] = {"times": times, "positions": paths[:, :, None]}
    report.add(make_check("late_speed", "fraction_ge", "release", arrays, "AC3",
                          key="speed_ok", bound=0.99))
    report.add(make_check("sign_from_side", "mismatch_count", "release", arrays, "AC3",
                          left="side", right="direction", mask="unambiguous"))
    report.add(make_check("left_right_split", "binomial_within", "release", arrays, "AC3",
                          key="moves_right", p0=0.5, nsigma=3.0, mask="finite"))
    add_node_check(report, status)
    report.summary = {"k": k, "speed": speed, "stages": bounds, "ambiguous": int(ambiguous.sum()),
                      "edge_mass": mass_edge, "right_fraction": float(np.mean(v_late > 0)),
                      "speed_ok_fraction": float(np.mean(arrays["speed_ok"]))}
    report.runtime_s = time.perf_counter() - t0
    return report
