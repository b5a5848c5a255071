"""Randomized invariance checks of the guidance law."""
from __future__ import annotations

import time

import numpy as np

from ..checks import make_check
from ..equilibrium import sample_equilibrium
from ..grid import ParticleSystem, WaveFunction, make_grid, normalize
from ..guidance import COMPLETED, GuidanceField, IntegratorConfig, integrate_ensemble, permute_labels
from ..propagator import PropagatorConfig, iter_evolve
from ..report import ScenarioReport
from ..rng import child, generator

DEFAULTS = {"cases": 100, "points_per_case": 20, "points": 64, "extent": 8.0,
            "packets": 3, "scaling_tol": 1e-9, "unitary_tol": 1e-9, "permutation_tol": 1e-9,
            "crossing_traj": 200, "crossing_t_final": 2.0, "crossing_dt": 0.01,
            "crossing_points": 512, "max_step_cells": 0.25}
CASE_SCALING, CASE_UNITARY, CASE_PERMUTATION, CASE_CROSSING = range(4)


def random_state(grid, rng, packets: int, components: int = 1) -> WaveFunction:
    """Sum of Gaussian packets with random centres, widths, momenta and complex weights."""
    mesh = grid.mesh()
    amps = np.zeros((components,) + grid.shape, complex)
    kmax = np.pi / np.asarray(grid.spacing)
    for s in range(components):
        for _ in range(packets):
            c = [rng.uniform(lo / 2, hi / 2) for lo, hi in grid.extents]
            w = rng.uniform(0.6, 1.5, grid.dims)
            k = rng.uniform(-0.25, 0.25, grid.dims) * kmax
            coef = rng.normal() + 1j * rng.normal()
            f = np.ones(grid.shape, complex)
            for x, cc, ww, kk in zip(mesh, c, w, k):
                f = f * np.exp(-((x - cc) ** 2) / (4 * ww * ww) + 1j * kk * x)
            amps[s] = amps[s] + coef * f
    return normalize(WaveFunction(grid, amps))


def random_unitary(rng, n: int = 2) -> np.ndarray:
    """Haar-random unitary via QR with phase fix."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _points(grid, rng, n):
    return np.column_stack([rng.uniform(lo, hi, n) for lo, hi in grid.extents])


def _rel_err(a, b):
    return np.abs(a - b).max(axis=1) / (1.0 + np.abs(b).max(axis=1))


def scaling_cases(p, seed):
    """``v(c psi) = v(psi)`` at random points for random complex ``c``."""
    errs = []
    for i in range(p["cases"]):
        rng = generator(child(seed, CASE_SCALING, i))
        dims = 1 + i % 3
        pts = p["points"] if dims < 3 else p["points"] // 2
        grid = make_grid([(-p["extent"], p["extent"])] * dims, [pts] * dims)
        psi = random_state(grid, rng, p["packets"])
        c = rng.lognormal(0, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        q = _points(grid, rng, p["points_per_case"])
        v1, _, s1 = GuidanceField(psi).evaluate(q)
        v2, _, s2 = GuidanceField(psi.replace(psi.amplitudes * c)).evaluate(q)
        ok = (s1 == COMPLETED) & (s2 == COMPLETED)
        errs.append(_rel_err(v2[ok], v1[ok]))
    return np.concatenate(errs)


def unitary_cases(p, seed):
    """Spinor velocity under a constant global unitary on the spin components."""
    errs = []
    for i in range(p["cases"]):
        rng = generator(child(seed, CASE_UNITARY, i))
        dims = 1 + i % 2
        grid = make_grid([(-p["extent"], p["extent"])] * dims, [p["points"]] * dims)
        psi = random_state(grid, rng, p["packets"], components=2)
        U = random_unitary(rng)
        rotated = psi.replace(np.tensordot(U, psi.amplitudes, axes=1))
        q = _points(grid, rng, p["points_per_case"])
        v1, _, s1 = GuidanceField(psi).evaluate(q)
        v2, _, s2 = GuidanceField(rotated).evaluate(q)
        ok = (s1 == COMPLETED) & (s2 == COMPLETED)
        errs.append(_rel_err(v2[ok], v1[ok]))
    return np.concatenate(errs)


def permutation_cases(p, seed):
    """Relabelling the particles permutes the velocity components accordingly."""
    errs = []
    for i in range(p["cases"]):
        rng = generator(child(seed, CASE_PERMUTATION, i))
        n_part = 2 + i % 2
        pts = p["points"] if n_part == 2 else p["points"] // 2
        grid = make_grid([(-p["extent"], p["extent"])] * n_part, [pts] * n_part)
        system = ParticleSystem((1.0,) * n_part, (1,) * n_part)
        psi = random_state(grid, rng, p["packets"])
        perm = tuple(int(j) for j in rng.permutation(n_part))
        # relabelled state: psi'(q') = psi(q) with q'_i = q_perm[i]
        swapped = psi.replace(np.transpose(psi.amplitudes, (0,) + tuple(1 + j for j in perm)))
        q = _points(grid, rng, p["points_per_case"])
        v, _, s1 = GuidanceField(psi, system).evaluate(q)
        vp, _, s2 = GuidanceField(swapped, system).evaluate(permute_labels(q, system, perm))
        ok = (s1 == COMPLETED) & (s2 == COMPLETED)
        errs.append(_rel_err(vp[ok], permute_labels(v, system, perm)[ok]))
    return np.concatenate(errs)


def crossing_cases(p, seed, workers=1):
    """Ordered 1D trajectories stay ordered; returns violations and aborts per case."""
    violations, aborted = [], []
    for i in range(p["cases"]):
        rng = generator(child(seed, CASE_CROSSING, i))
        # wide enough that no packet wraps around the periodic domain
        grid = make_grid([(-4 * p["extent"], 4 * p["extent"])], [p["crossing_points"]])
        psi = random_state(grid, rng, p["packets"])
        starts = np.sort(sample_equilibrium(psi, p["crossing_traj"], child(seed, CASE_CROSSING, i, 1)).positions, axis=0)
        frames = iter_evolve(psi, None, p["crossing_t_final"], PropagatorConfig(dt=p["crossing_dt"]))
        ens = integrate_ensemble(frames, None, starts, IntegratorConfig(max_step_cells=p["max_step_cells"]),
                                 workers=workers, record_every=10)
        x = ens.positions[:, :, 0]
        ok = ens.status == COMPLETED
        gaps = np.diff(x[:, ok], axis=1)
        violations.append(int(np.sum(np.any(gaps < 0, axis=0))))
        aborted.append(int(np.sum(~ok)))
    return np.array(violations), np.array(aborted)


def run(params: dict, seed: int, workers: int = 1) -> ScenarioReport:
    p = {**DEFAULTS, **params}
    if p["cases"] < 1 or p["points_per_case"] < 1:
        raise ValueError("cases and points_per_case must be positive")
    t0 = time.perf_counter()
    report = ScenarioReport("structural_invariants", p, {"root": seed})
    for name, fn, tol in (("scaling", scaling_cases, p["scaling_tol"]),
                          ("spin_unitary", unitary_cases, p["unitary_tol"]),
                          ("permutation", permutation_cases, p["permutation_tol"])):
        err = fn(p, seed)
        arrays = {"relative_error": err, "violation": err > tol}
        report.datasets[name] = arrays
        report.add(make_check(f"{name}_violations", "count_zero", name, arrays, "AC9",
                              key="violation"))
    viol, aborted = crossing_cases(p, seed, workers)
    arrays = {"violations": viol, "aborted": aborted}
    report.datasets["no_crossing"] = arrays
    report.add(make_check("no_crossing_1d", "count_zero", "no_crossing", arrays, "AC9",
                          key="violations"))
    report.summary = {"cases": p["cases"], "crossing_aborted": int(aborted.sum())}
    report.runtime_s = time.perf_counter() - t0
    return report
