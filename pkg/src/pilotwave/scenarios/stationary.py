"""Real eigenstates: the velocity field vanishes and trajectories stand still."""
from __future__ import annotations

import time
from dataclasses import replace

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ..checks import make_check
from ..equilibrium import sample_equilibrium
from ..grid import ParticleSystem, WaveFunction, make_grid, normalize
from ..guidance import IntegratorConfig, integrate_ensemble, velocity_on_grid
from ..potentials import HarmonicPotential
from ..propagator import IMPLICIT_MIDPOINT, PropagatorConfig, iter_evolve, laplacian_1d
from ..report import ScenarioReport
from ..rng import child
from ..spectral import DIRICHLET
from .common import SAMPLE, add_node_check

PRESETS = ("box_ground", "harmonic_ground")
DEFAULTS = {"preset": "box_ground", "n_traj": 2000, "points": 256, "box_length": 1.0,
            "omega": 1.0, "half_width": 8.0, "dt": 0.05, "t_final": 5.0, "frame_stride": 1,
            "two_level": True, "two_level_dt": 1e-3}


def box_state(grid, n: int) -> WaveFunction:
    """``n``-th Dirichlet box eigenvector on a cell-centred grid (exact for the discrete Laplacian)."""
    N = grid.points[0]
    i = np.arange(N)
    return normalize(WaveFunction(grid, np.sin(n * np.pi * (i + 0.5) / N).astype(complex)[None]))


def harmonic_state(grid, n: int, omega: float, mass: float = 1.0, hbar: float = 1.0) -> WaveFunction:
    """``n``-th eigenvector of the finite-difference oscillator Hamiltonian with Dirichlet walls."""
    lap = laplacian_1d(grid.points[0], grid.spacing[0], DIRICHLET)
    V = HarmonicPotential((omega,), mass=(mass,)).field(grid)
    diag = -(hbar ** 2 / (2 * mass)) * lap.diagonal() + V
    off = -(hbar ** 2 / (2 * mass)) * lap.diagonal(1)
    _, vec = eigh_tridiagonal(diag, off, select="i", select_range=(n, n))
    v = vec[:, 0]
    v = v * np.sign(v[np.argmax(np.abs(v))])
    return normalize(WaveFunction(grid, v.astype(complex)[None]))


def _setup(p):
    if p["preset"] == "box_ground":
        L = p["box_length"]
        grid = make_grid([(-L / 2, L / 2)], [p["points"]])
        return grid, None, lambda j: box_state(grid, j + 1)
    if p["preset"] == "harmonic_ground":
        a = p["half_width"]
        grid = make_grid([(-a, a)], [p["points"]])
        V = HarmonicPotential((p["omega"],))
        return grid, V, lambda j: harmonic_state(grid, j, p["omega"])
    raise ValueError(f"unknown preset {p['preset']!r}; choose from {PRESETS}")


def scaled_velocity(psi: WaveFunction, system: ParticleSystem) -> float:
    """Largest ``|v| m h / hbar`` over the grid, the dimensionless velocity."""
    v = velocity_on_grid(psi, system, DIRICHLET)
    h = np.asarray(psi.grid.spacing).reshape((-1,) + (1,) * psi.grid.dims)
    s = np.abs(v) * (system.axis_masses.reshape(h.shape) * h / system.hbar)
    return float(np.nanmax(s))


def run(params: dict, seed: int, workers: int = 1) -> ScenarioReport:
    p = {**DEFAULTS, **params}
    t0 = time.perf_counter()
    grid, V, state = _setup(p)
    system = ParticleSystem.single(1)
    cfg = PropagatorConfig(backend=IMPLICIT_MIDPOINT, dt=p["dt"], boundary=DIRICHLET)
    report = ScenarioReport("stationary_real_state", p, {"root": seed})
    # eigenvectors of the discrete Hamiltonian are exact for any dt; a long
    # step keeps Crank-Nicolson roundoff in the far tails small

    psi = state(0)
    starts = sample_equilibrium(psi, p["n_traj"], child(seed, SAMPLE)).positions
    speeds = []

    def frames():
        for f in iter_evolve(psi, V, p["t_final"], cfg, p["frame_stride"], system):
            speeds.append(scaled_velocity(f, system))
            yield f

    ens = integrate_ensemble(frames(), system, starts, IntegratorConfig(), DIRICHLET,
                             workers=workers, record_every=10)
    drift = ens.positions - ens.positions[0][None]
    report.datasets["ground"] = {"scaled_velocity": np.array(speeds), "times": ens.times,
                                 "drift": drift[..., 0]}
    report.add(make_check("grid_velocity", "max_abs_le", "ground", report.datasets["ground"],
                          "AC6", key="scaled_velocity", bound=1e-9))
    report.add(make_check("trajectory_drift", "max_abs_le", "ground", report.datasets["ground"],
                          "AC6", key="drift", bound=1e-8))
    add_node_check(report, ens.status)

    if p["two_level"]:
        _two_level(report, p, grid, V, state, replace(cfg, dt=p["two_level_dt"]), system)
    report.summary = {"max_scaled_velocity": max(speeds), "max_drift": float(np.nanmax(np.abs(drift)))}
    report.runtime_s = time.perf_counter() - t0
    return report


def _two_level(report, p, grid, V, state, cfg, system):
    """Equal real superposition of the two lowest levels: v = 0 only at t = 0."""
    if p["preset"] == "box_ground":
        L = p["box_length"]
        gap = 3 * (np.pi / L) ** 2 / 2
    else:
        gap = p["omega"]
    period = 2 * np.pi / gap
    psi = normalize(state(0) + state(1))
    x = grid.axis(0)
    times, mean_x, speeds = [], [], []
    stride = max(1, int(round(period / 40 / cfg.dt)))
    for f in iter_evolve(psi, V, 3 * period, cfg, stride, system):
        rho = np.abs(f.scalar) ** 2
        times.append(f.time)
        mean_x.append(float(np.sum(x * rho) / np.sum(rho)))
        speeds.append(scaled_velocity(f, system))
    arrays = {"times": np.array(times), "mean_x": np.array(mean_x),
              "scaled_velocity": np.array(speeds), "v_at_start": np.array([speeds[0]]),
              "v_later": np.array([max(speeds[1:])])}
    report.datasets["two_level"] = arrays
    report.add(make_check("two_level_start_static", "value_le", "two_level", arrays, "AC6",
                          key="v_at_start", bound=1e-9))
    report.add(make_check("two_level_moves_later", "value_ge", "two_level", arrays,
                          "stationarity", key="v_later", bound=1e-3))
    report.add(make_check("two_level_frequency", "oscillation_frequency", "two_level", arrays,
                          "stationarity", omega=gap, rel_tol=1e-3))
