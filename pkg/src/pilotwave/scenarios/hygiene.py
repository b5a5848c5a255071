"""Propagator bookkeeping: norm, continuity order, reversibility, plane-wave phase, energy."""
from __future__ import annotations

import math
import time

import numpy as np

from ..checks import make_check
from ..grid import ParticleSystem, WaveFunction, gaussian, make_grid, normalize
from ..potentials import HarmonicPotential
from ..propagator import (BACKENDS, IMPLICIT_MIDPOINT, SPLIT_STEP, Propagator, PropagatorConfig,
                          continuity_residual, evolve)
from ..report import ScenarioReport
from ..spectral import DIRICHLET, PERIODIC

DEFAULTS = {"points": 256, "extent": 10.0, "omega": 1.0, "center": 1.0, "sigma": 0.7,
            "momentum": 1.5, "dt": 0.002, "norm_steps": 100000, "reversal_steps": 2000,
            "continuity_levels": [[256, 0.01], [512, 0.005], [1024, 0.0025]],
            "continuity_time": 1.0, "plane_wave_mode": 5, "plane_wave_steps": 1000,
            "backends": list(BACKENDS)}


def _boundary(backend: str) -> str:
    return PERIODIC if backend == SPLIT_STEP else DIRICHLET


def _packet(p, points):
    grid = make_grid([(-p["extent"], p["extent"])], [points])
    return gaussian(grid, p["center"], p["sigma"], p["momentum"])


def norm_and_energy(psi: WaveFunction, V, cfg: PropagatorConfig, steps: int, samples: int = 100):
    """Norm and energy after every ``steps // samples`` steps, starting with the initial values."""
    prop = Propagator(psi.grid, V, cfg)
    amps, t = psi.amplitudes, psi.time
    every = max(1, steps // samples)
    norms, energies = [psi.norm()], [prop.energy(psi)]
    for i in range(1, steps + 1):
        amps = prop.advance(amps, t, cfg.dt)
        t += cfg.dt
        if i % every == 0 or i == steps:
            f = WaveFunction(psi.grid, amps, t)
            norms.append(f.norm())
            energies.append(prop.energy(f))
    return np.array(norms), np.array(energies)


def reversal_error(psi: WaveFunction, V, cfg: PropagatorConfig, steps: int) -> float:
    """``max |psi_back - psi|`` after ``steps`` forward and as many backward steps."""
    prop = Propagator(psi.grid, V, cfg)
    amps, t = psi.amplitudes, psi.time
    for _ in range(steps):
        amps = prop.advance(amps, t, cfg.dt)
        t += cfg.dt
    for _ in range(steps):
        amps = prop.advance(amps, t, -cfg.dt)
        t -= cfg.dt
    return float(np.max(np.abs(amps - psi.amplitudes)))


def plane_wave_phase_error(points: int, extent: float, mode: int, dt: float, steps: int,
                           system: ParticleSystem | None = None) -> np.ndarray:
    """Per-step phase error of a free plane wave against ``omega = hbar k^2 / 2m``."""
    system = system or ParticleSystem.single(1)
    grid = make_grid([(-extent, extent)], [points])
    k = 2 * math.pi * mode / (2 * extent)
    psi = normalize(WaveFunction.from_function(grid, lambda x: np.exp(1j * k * x)))
    omega = system.hbar * k * k / (2 * system.masses[0])
    prop = Propagator(grid, None, PropagatorConfig(dt=dt), system)
    amps, errs = psi.amplitudes, np.empty(steps)
    for i in range(steps):
        new = prop.advance(amps, i * dt, dt)
        ratio = np.vdot(amps, new) * grid.cell_volume
        errs[i] = abs(math.remainder(-np.angle(ratio) - omega * dt, 2 * math.pi))
        amps = new
    return errs


def continuity_levels(p, backend: str):
    """L2 continuity residual at ``continuity_time`` for each (points, dt) level."""
    V = HarmonicPotential((p["omega"],))
    bc = _boundary(backend)
    out = []
    for points, dt in p["continuity_levels"]:
        psi = _packet(p, int(points))
        t = p["continuity_time"]
        frames = evolve(psi, V, t - dt, PropagatorConfig(backend, dt, bc), 1)
        last = frames[-1]
        prop = Propagator(psi.grid, V, PropagatorConfig(backend, dt, bc))
        mid = last.replace(prop.advance(last.amplitudes, last.time, dt), last.time + dt)
        after = mid.replace(prop.advance(mid.amplitudes, mid.time, dt), mid.time + dt)
        out.append(continuity_residual([last, mid, after], None, bc)[1])
    return np.array(out)


def run(params: dict, seed: int = 0, workers: int = 1) -> ScenarioReport:
    p = {**DEFAULTS, **params}
    for key in ("points", "extent", "sigma", "dt", "norm_steps", "reversal_steps"):
        if not p[key] > 0:
            raise ValueError(f"{key} must be positive")
    t0 = time.perf_counter()
    report = ScenarioReport("solver_hygiene", p, {"root": seed})
    V = HarmonicPotential((p["omega"],))
    psi = _packet(p, p["points"])
    for backend in p["backends"]:
        cfg = PropagatorConfig(backend, p["dt"], _boundary(backend))
        norms, energies = norm_and_energy(psi, V, cfg, p["norm_steps"])
        rev = reversal_error(psi, V, cfg, p["reversal_steps"])
        arrays = {"norm_drift": norms - norms[0],
                  "energy_drift": (energies - energies[0]) / abs(energies[0]),
                  "reversal_error": np.array([rev])}
        tag = "fd" if backend == IMPLICIT_MIDPOINT else "spectral"
        report.datasets[tag] = arrays
        report.add(make_check(f"norm_drift_{tag}", "max_abs_le", tag, arrays, "AC8",
                              key="norm_drift", bound=1e-6))
        report.add(make_check(f"time_reversal_{tag}", "value_le", tag, arrays, "AC8",
                              key="reversal_error", bound=1e-6))
        report.add(make_check(f"energy_drift_{tag}", "max_abs_le", tag, arrays, "propagator",
                              key="energy_drift", bound=1e-3))

    res = continuity_levels(p, IMPLICIT_MIDPOINT)
    arrays = {"residual": res, "coarse": res[-2:-1], "fine": res[-1:]}
    report.datasets["continuity"] = arrays
    report.add(make_check("continuity_order", "ratio_in", "continuity", arrays, "AC8",
                          num="coarse", den="fine", low=3.5, high=4.5))

    errs = plane_wave_phase_error(p["points"], p["extent"], p["plane_wave_mode"], p["dt"],
                                  p["plane_wave_steps"])
    report.datasets["plane_wave"] = {"phase_error": errs}
    report.add(make_check("plane_wave_phase", "max_abs_le", "plane_wave",
                          report.datasets["plane_wave"], "AC7", key="phase_error", bound=1e-8))
    report.summary = {"continuity_ratios": (res[:-1] / res[1:]).tolist()}
    report.runtime_s = time.perf_counter() - t0
    return report
