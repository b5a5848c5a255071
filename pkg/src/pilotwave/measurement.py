"""Subsystem plus pointer: measurement by entanglement and effective collapse.

The composite grid is the subsystem grid followed by one pointer axis.
A measurement maps ``(c1 psi1 + c2 psi2) phi0`` to ``c1 psi1 phi1 + c2 psi2 phi2``
where the pointer packets ``phi1``, ``phi2`` have (nearly) disjoint support.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np
from scipy import stats
from scipy.special import eval_hermite

from .equilibrium import _seed_int, sample_equilibrium
from .errors import (BranchOverlapError, CalibrationError, ClassificationError, GridMismatchError,
                     ZeroNormError)
from .grid import (Grid, ParticleSystem, WaveFunction, density, gaussian, inner_product,
                   make_grid, normalize, tensor_product)
from .guidance import COMPLETED, IntegratorConfig, integrate_ensemble
from .potentials import (DoubleWell, HarmonicPotential, LocalOperator, PointerCoupling,
                         Potential, ProjectorOperator)
from .propagator import Propagator, PropagatorConfig
from .rng import spawn
from .spectral import PERIODIC

CONCENTRATION = 0.999
ORTHO_TOL = 1e-6
WEIGHT_TOL = 1e-9
MIN_SEPARATION_WIDTHS = 8.0
MAX_UNCLASSIFIED = 0.01
MIN_TRIALS = 100


def fidelity(a: WaveFunction, b: WaveFunction) -> float:
    """``|<a, b>|^2 / (<a, a> <b, b>)``."""
    return abs(inner_product(a, b)) ** 2 / (a.norm() ** 2 * b.norm() ** 2)


def _spread(phi: WaveFunction) -> float:
    y = phi.grid.axis(0)
    p = density(phi)
    p = p / p.sum()
    mu = float(np.sum(p * y))
    return math.sqrt(float(np.sum(p * (y - mu) ** 2)))


def shift_periodic(phi: WaveFunction, offset: float) -> WaveFunction:
    """``phi(y - offset)`` by a Fourier phase; exact for band-limited data."""
    k = phi.grid.wavenumbers(0)
    a = np.fft.ifft(np.fft.fft(phi.scalar) * np.exp(-1j * k * offset))
    return phi.replace(a)


@dataclass(frozen=True, eq=False)
class MeasurementSetup:
    """Everything needed to run one two-outcome measurement.

    Parameters
    ----------
    psi1, psi2 : WaveFunction
        Orthonormal subsystem states on the subsystem grid.
    c1, c2 : complex
        Branch amplitudes with ``|c1|^2 + |c2|^2 = 1``.
    phi0 : WaveFunction
        Pointer ready state on a one-dimensional grid.
    pointer_targets : (float, float)
        Where the pointer ends up for ``psi1`` and ``psi2``.
    coupling : PointerCoupling or None
        ``None`` selects direct construction of the final state.
    potential : Potential or None
        Additional potential on the composite grid (e.g. confining the subsystem).
    after_readoff : Potential or None
        Extra potential switched on after ``readoff_time``; only used by the
        effective-collapse check.
    """

    psi1: WaveFunction
    psi2: WaveFunction
    c1: complex
    c2: complex
    phi0: WaveFunction
    pointer_targets: tuple[float, float]
    coupling: PointerCoupling | None = None
    potential: Potential | None = None
    masses: tuple[float, float] = (1.0, 10.0)
    hbar: float = 1.0
    readoff_time: float = 3.0
    propagator: PropagatorConfig = field(default_factory=lambda: PropagatorConfig(dt=0.004))
    frame_stride: int = 5
    dead_zone: float = 0.05
    after_readoff: Potential | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.psi1.grid != self.psi2.grid:
            raise GridMismatchError("psi1 and psi2 must share a grid")
        if self.phi0.grid.dims != 1:
            raise GridMismatchError("the pointer is a single coordinate")
        if self.psi1.grid.dims + 1 > 3:
            raise GridMismatchError("composite configuration space is limited to 3 dimensions")
        for s in (self.psi1, self.psi2, self.phi0):
            if abs(s.norm() - 1.0) > ORTHO_TOL:
                raise ValueError("psi1, psi2 and phi0 must be normalized")
        if abs(inner_product(self.psi1, self.psi2)) > ORTHO_TOL:
            raise ValueError("psi1 and psi2 must be orthogonal")
        if abs(abs(self.c1) ** 2 + abs(self.c2) ** 2 - 1.0) > WEIGHT_TOL:
            raise ValueError("|c1|^2 + |c2|^2 must equal 1")
        t1, t2 = self.pointer_targets
        if abs(t2 - t1) < MIN_SEPARATION_WIDTHS * _spread(self.phi0):
            raise ValueError("pointer targets must be at least 8 packet widths apart")

    @property
    def direct(self) -> bool:
        return self.coupling is None

    @property
    def grid(self) -> Grid:
        s, p = self.psi1.grid, self.phi0.grid
        return Grid(s.extents + p.extents, s.points + p.points)

    @property
    def pointer_axis(self) -> int:
        return self.psi1.grid.dims

    @property
    def system(self) -> ParticleSystem:
        return ParticleSystem(self.masses, (self.psi1.grid.dims, 1), self.hbar)

    @property
    def boundary_point(self) -> float:
        return 0.5 * (self.pointer_targets[0] + self.pointer_targets[1])

    @property
    def half_separation(self) -> float:
        return 0.5 * abs(self.pointer_targets[1] - self.pointer_targets[0])

    @property
    def total_potential(self) -> Potential | None:
        parts = [p for p in (self.potential, self.coupling) if p is not None]
        if not parts:
            return None
        return parts[0] if len(parts) == 1 else parts[0] + parts[1]

    @property
    def guidance_start(self) -> float:
        """Earliest time trajectories are followed.

        The velocity field is the current of a local Hamiltonian.  A
        projector coupling is not local, so trajectories start when it
        switches off.
        """
        c = self.coupling
        if c is not None and isinstance(c.operator, ProjectorOperator):
            return float(c.window[1])
        return 0.0

    def with_amplitudes(self, c1, c2) -> "MeasurementSetup":
        return replace(self, c1=complex(c1), c2=complex(c2))

    def subsystem(self, i: int) -> WaveFunction:
        return self.psi1 if i == 1 else self.psi2

    def amplitude(self, i: int) -> complex:
        return self.c1 if i == 1 else self.c2

    def initial_state(self) -> WaveFunction:
        psi = normalize(self.psi1 * self.c1 + self.psi2 * self.c2)
        return tensor_product(psi, self.phi0)

    def branch_initial(self, i: int) -> WaveFunction:
        return tensor_product(self.subsystem(i), self.phi0)

    def pointer_state(self, i: int) -> WaveFunction:
        """``phi0`` shifted onto target ``i`` (direct construction)."""
        return shift_periodic(self.phi0, self.pointer_targets[i - 1])

    def region_side(self, i: int) -> float:
        """+1 if region ``S_i`` lies above the boundary point, -1 below."""
        return float(np.sign(self.pointer_targets[i - 1] - self.boundary_point))


@dataclass
class SupportRegions:
    """Pointer half-lines ``S1``, ``S2`` split at ``boundary`` and the mass found in each."""

    boundary: float
    s1_side: float
    mass_in_S1: float
    mass_in_S2: float

    def to_dict(self) -> dict:
        return {"boundary": self.boundary, "S1": "y<b" if self.s1_side < 0 else "y>b",
                "S2": "y>b" if self.s1_side < 0 else "y<b",
                "mass_in_S1": self.mass_in_S1, "mass_in_S2": self.mass_in_S2}


def pointer_masses(psi: WaveFunction, setup: MeasurementSetup) -> tuple[float, float]:
    """Probability that the pointer lies in ``S1`` and in ``S2``."""
    rho = density(psi)
    ax = setup.pointer_axis
    marg = rho.sum(axis=tuple(a for a in range(rho.ndim) if a != ax)) * psi.grid.cell_volume
    y = psi.grid.axis(ax)
    in1 = setup.region_side(1) * (y - setup.boundary_point) > 0
    return float(marg[in1].sum()), float(marg[~in1].sum())


def _regions(psi, setup) -> SupportRegions:
    m1, m2 = pointer_masses(psi, setup)
    return SupportRegions(setup.boundary_point, setup.region_side(1), m1, m2)


def iter_stages(psi: WaveFunction, stages, cfg: PropagatorConfig, frame_stride: int,
                system: ParticleSystem | None = None) -> Iterator[WaveFunction]:
    """Evolve through consecutive ``(t_end, potential)`` stages with one frame spacing.

    Each stage must last a whole number of frame spacings ``frame_stride * dt``.
    """
    spacing = frame_stride * cfg.dt
    yield psi
    t = psi.time
    for t_end, pot in stages:
        n_frames = round((t_end - t) / spacing)
        if n_frames < 1 or not math.isclose(n_frames * spacing, t_end - t, rel_tol=1e-9):
            raise ValueError(f"stage ending at {t_end} is not a whole number of frame spacings")
        prop = Propagator(psi.grid, pot, cfg, system)
        amps = psi.amplitudes
        for k in range(n_frames):
            for j in range(frame_stride):
                amps = prop.advance(amps, t + (k * frame_stride + j) * cfg.dt)
            tk = t_end if k == n_frames - 1 else t + (k + 1) * spacing
            psi = WaveFunction(psi.grid, amps, tk)
            yield psi
        t = t_end


def _stages(setup: MeasurementSetup, t_end: float):
    out = []
    if 0.0 < setup.guidance_start < setup.readoff_time:
        out.append((setup.guidance_start, setup.total_potential))
    out.append((setup.readoff_time, setup.total_potential))
    if t_end > setup.readoff_time + 1e-12:
        pot = setup.total_potential
        if setup.after_readoff is not None:
            pot = setup.after_readoff if pot is None else pot + setup.after_readoff
        out.append((t_end, pot))
    return out


def evolve_measurement(psi: WaveFunction, setup: MeasurementSetup, t_end: float | None = None):
    """Frames of the measurement dynamics from ``psi`` up to ``t_end`` (default read-off)."""
    t_end = setup.readoff_time if t_end is None else t_end
    return iter_stages(psi, _stages(setup, t_end), setup.propagator, setup.frame_stride,
                       setup.system)


def _last(frames):
    out = None
    for out in frames:
        pass
    return out


def calibrate(setup: MeasurementSetup) -> tuple[float, float]:
    """Own-region pointer mass after evolving ``psi_i phi0`` alone, ``i = 1, 2``.

    Raises
    ------
    CalibrationError
        If either falls short of 0.999.
    """
    out = []
    for i in (1, 2):
        final = _last(evolve_measurement(setup.branch_initial(i), setup))
        m = pointer_masses(final, setup)[i - 1]
        if m < CONCENTRATION:
            raise CalibrationError(
                f"branch {i}: only {m:.6f} of the pointer mass reaches S{i} "
                f"(need {CONCENTRATION}); coupling too weak or too short")
        out.append(m)
    return out[0], out[1]


def run_measurement(setup: MeasurementSetup, calibrate_first: bool = True):
    """Final composite state and its pointer-region masses.

    Returns
    -------
    (WaveFunction, SupportRegions)
    """
    if setup.direct:
        parts = [tensor_product(setup.subsystem(i), setup.pointer_state(i)) * setup.amplitude(i)
                 for i in (1, 2)]
        psi = (parts[0] + parts[1]).replace(time=setup.readoff_time)
        return psi, _regions(psi, setup)
    if calibrate_first:
        calibrate(setup)
    final = _last(evolve_measurement(setup.initial_state(), setup))
    return final, _regions(final, setup)


def conditional_wavefunction(psi: WaveFunction, y: float, pointer_axis: int = -1,
                             periodic: bool = True) -> WaveFunction:
    """Normalized slice ``Psi(x, Y)`` of the composite state at pointer value ``y``.

    The slice is linearly interpolated between the neighbouring cell centres.

    Raises
    ------
    ZeroNormError
        If the slice vanishes.
    """
    grid = psi.grid
    ax = pointer_axis % grid.dims
    lo, hi = grid.extents[ax]
    if not lo <= y <= hi:
        raise ValueError(f"pointer value {y} lies outside [{lo}, {hi}]")
    n, h = grid.points[ax], grid.spacing[ax]
    u = (y - lo) / h - 0.5
    j = math.floor(u)
    f = u - j
    a = psi.amplitudes
    if periodic:
        s0 = np.take(a, j % n, axis=ax + 1)
        s1 = np.take(a, (j + 1) % n, axis=ax + 1)
    else:
        s0 = -np.take(a, 0, axis=ax + 1) if j < 0 else np.take(a, j, axis=ax + 1)
        s1 = -np.take(a, n - 1, axis=ax + 1) if j + 1 > n - 1 else np.take(a, j + 1, axis=ax + 1)
    sl = (1 - f) * s0 + f * s1
    keep = [d for d in range(grid.dims) if d != ax]
    sub = Grid(tuple(grid.extents[d] for d in keep), tuple(grid.points[d] for d in keep))
    w = WaveFunction(sub, sl, psi.time)
    if w.norm() == 0.0 or not np.isfinite(w.norm()):
        raise ZeroNormError(f"conditional wave function vanishes at y={y}")
    return normalize(w)


@dataclass
class OutcomeReport:
    """Outcome frequencies of repeated measurement trials with per-trial records."""

    setup_name: str
    n_trials: int
    counts: dict
    predicted_p1: float
    seed: int
    records: dict
    regions: SupportRegions
    norm_after: float

    @property
    def frequency1(self) -> float:
        classified = self.counts["1"] + self.counts["2"]
        return self.counts["1"] / classified if classified else float("nan")

    @property
    def sigma(self) -> float:
        p = self.predicted_p1
        return math.sqrt(p * (1 - p) / self.n_trials)

    def within(self, k: float = 3.0) -> bool:
        """Outcome-1 frequency within ``k`` binomial standard deviations of ``|c1|^2``."""
        if self.sigma == 0.0:
            return self.frequency1 == self.predicted_p1
        return abs(self.frequency1 - self.predicted_p1) <= k * self.sigma

    def interval(self, confidence: float = 0.99) -> tuple[float, float]:
        classified = self.counts["1"] + self.counts["2"]
        ci = stats.binomtest(self.counts["1"], classified).proportion_ci(confidence, "wilson")
        return float(ci.low), float(ci.high)

    def summary(self) -> dict:
        lo, hi = self.interval()
        return {"setup": self.setup_name, "n_trials": self.n_trials, "seed": self.seed,
                "counts": self.counts,
                "frequencies": {k: v / self.n_trials for k, v in self.counts.items()},
                "frequency_outcome1": self.frequency1, "predicted_outcome1": self.predicted_p1,
                "binomial_sigma": self.sigma, "wilson_99": [lo, hi],
                "within_3_sigma": self.within(3.0), "regions": self.regions.to_dict(),
                "norm_after": self.norm_after}

    def to_json(self, **kw) -> str:
        return json.dumps(self.summary(), **kw)

    def to_csv(self, path) -> None:
        r = self.records
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial_id", "seed", "x0", "y0", "outcome", "pointer_final", "fidelity"])
            for i in range(self.n_trials):
                x0 = " ".join(f"{v:.17g}" for v in np.atleast_1d(r["x0"][i]))
                w.writerow([i, int(r["seed"][i]), x0, f"{r['y0'][i]:.17g}", r["outcome"][i],
                            f"{r['pointer_final'][i]:.17g}", f"{r['fidelity'][i]:.17g}"])


def trial_seeds(seed, n: int) -> np.ndarray:
    """Per-trial seeds derived from one root seed."""
    return np.array([_seed_int(s) for s in spawn(seed, n)], dtype=np.uint64)


def classify(y: np.ndarray, setup: MeasurementSetup, alive: np.ndarray | None = None) -> np.ndarray:
    """Outcome 1 or 2 from the final pointer coordinate; 0 inside the dead zone or aborted."""
    d = (np.asarray(y) - setup.boundary_point) * setup.region_side(1)
    out = np.where(d > 0, 1, 2)
    dead = np.abs(d) < setup.dead_zone * setup.half_separation
    if alive is not None:
        dead = dead | ~alive
    return np.where(dead | ~np.isfinite(d), 0, out).astype(np.int8)


def outcome_statistics(setup: MeasurementSetup, n_trials: int, seed,
                       cfg: IntegratorConfig | None = None, workers: int = 1,
                       backend: str | None = None) -> OutcomeReport:
    """Repeat the measurement ``n_trials`` times from ``|Psi|^2``-distributed configurations.

    Every trial draws its initial configuration from its own seed; the
    composite wave function is common to all trials, so it is evolved once
    and all trajectories are integrated against the same frames.

    Raises
    ------
    ClassificationError
        If more than 1% of trials end in the dead zone or aborted.
    """
    if n_trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials")
    if setup.direct:
        raise ValueError("outcome statistics need the dynamical coupling")
    stream = evolve_measurement(setup.initial_state(), setup)
    psi0 = next(stream)
    while psi0.time < setup.guidance_start - 1e-12:
        psi0 = next(stream)
    seeds = trial_seeds(seed, n_trials)
    q0 = np.concatenate([sample_equilibrium(psi0, 1, int(s)).positions for s in seeds])
    holder = [psi0]

    def frames():
        yield psi0
        for f in stream:
            holder[:] = [f]
            yield f

    ens = integrate_ensemble(frames(), setup.system, q0, cfg, PERIODIC, workers=workers,
                             backend=backend)
    final = holder[0]
    ax = setup.pointer_axis
    y_final = ens.positions[-1, :, ax]
    outcome = classify(y_final, setup, ens.status == COMPLETED)
    fid = np.full(n_trials, np.nan)
    for i in np.flatnonzero(outcome):
        try:
            cond = conditional_wavefunction(final, float(y_final[i]), ax)
            fid[i] = fidelity(cond, setup.subsystem(int(outcome[i])))
        except ZeroNormError:
            pass
    counts = {"1": int(np.sum(outcome == 1)), "2": int(np.sum(outcome == 2)),
              "unclassified": int(np.sum(outcome == 0))}
    w1, w2 = abs(setup.c1) ** 2, abs(setup.c2) ** 2
    report = OutcomeReport(
        setup.name, n_trials, counts, w1 / (w1 + w2), _seed_int(seed),
        {"seed": seeds, "x0": q0[:, :ax].squeeze(-1) if ax == 1 else q0[:, :ax],
         "y0": q0[:, ax], "outcome": outcome, "pointer_final": y_final, "fidelity": fid,
         "status": ens.status},
        _regions(final, setup), final.norm())
    if counts["unclassified"] > MAX_UNCLASSIFIED * n_trials:
        raise ClassificationError(
            f"{counts['unclassified']} of {n_trials} trials unclassifiable (limit 1%)")
    return report


@dataclass
class CollapseReport:
    """Effective-collapse diagnostics along one composite trajectory."""

    branch: int
    times: np.ndarray
    fidelity: np.ndarray
    pointer: np.ndarray
    deviation: np.ndarray
    norm_share_error: float
    own_region_mass: np.ndarray

    @property
    def min_fidelity(self) -> float:
        return float(np.min(self.fidelity))

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviation))

    def passed(self, fidelity_min: float = 0.999, deviation_max: float = 1e-6,
               norm_tol: float = 1e-6) -> bool:
        return (self.min_fidelity >= fidelity_min and self.max_deviation <= deviation_max
                and self.norm_share_error <= norm_tol)

    def to_dict(self) -> dict:
        return {"branch": self.branch, "t_start": float(self.times[0]),
                "t_end": float(self.times[-1]), "min_fidelity": self.min_fidelity,
                "max_deviation": self.max_deviation, "norm_share_error": self.norm_share_error,
                "min_own_region_mass": float(self.own_region_mass.min()),
                "passed": self.passed()}


def effective_wavefunction_check(setup: MeasurementSetup, q0=None, seed=0,
                                 t_end: float | None = None,
                                 cfg: IntegratorConfig | None = None,
                                 backend: str | None = None) -> CollapseReport:
    """Follow one trajectory through and beyond read-off.

    The composite state is built from separately evolved branches
    ``Psi_i(t) = U(t) psi_i phi0`` (Schroedinger evolution is linear).  From
    read-off to ``t_end`` the check records the fidelity of the conditional
    wave function to the occupied branch's ``psi_i``, the branch norm shares,
    and the distance between the trajectory guided by the full state and one
    restarted at read-off under the occupied branch alone.

    Raises
    ------
    BranchOverlapError
        If a populated branch's pointer mass inside its own region drops
        below 0.999 within the check window.
    """
    if setup.direct:
        raise ValueError("the collapse check needs the dynamical coupling")
    t_end = setup.readoff_time if t_end is None else t_end
    weights = {i: abs(setup.amplitude(i)) ** 2 for i in (1, 2)}
    live = [i for i in (1, 2) if weights[i] > 0]
    branches = {i: list(evolve_measurement(setup.branch_initial(i), setup, t_end)) for i in live}
    n_frames = len(branches[live[0]])
    times = np.array([f.time for f in branches[live[0]]])
    k0 = int(np.searchsorted(times, setup.readoff_time - 1e-9))
    kg = int(np.searchsorted(times, setup.guidance_start - 1e-9))

    def full(k):
        out = None
        for i in live:
            part = branches[i][k] * setup.amplitude(i)
            out = part if out is None else out + part
        return out

    if q0 is None:
        q0 = sample_equilibrium(full(kg), 1, seed).positions[0]
    q0 = np.asarray(q0, dtype=float).reshape(1, -1)
    ens = integrate_ensemble((full(k) for k in range(kg, n_frames)), setup.system, q0, cfg,
                             PERIODIC, backend=backend)
    if ens.status[0] != COMPLETED:
        raise ClassificationError("trajectory aborted before read-off")
    ax = setup.pointer_axis
    Q = np.concatenate([np.full((kg, q0.shape[1]), np.nan), ens.positions[:, 0]])
    occ = int(classify(Q[k0, ax:ax + 1], setup)[0])
    if occ == 0:
        raise ClassificationError("pointer ended in the dead zone")

    own = np.empty((n_frames - k0, len(live)))
    for col, i in enumerate(live):
        for k in range(k0, n_frames):
            own[k - k0, col] = pointer_masses(branches[i][k], setup)[i - 1]
    bad = np.argwhere(own < CONCENTRATION)
    if bad.size:
        k, col = bad[0]
        raise BranchOverlapError(
            f"branch {live[col]} keeps only {own[k, col]:.6f} of its pointer mass in its region "
            f"at t={times[k0 + k]:.4g}; the packets overlap again")

    norm_err = 0.0
    for k in range(k0, n_frames):
        total = 0.0
        for i in live:
            share = (branches[i][k] * setup.amplitude(i)).norm() ** 2
            total += share
            norm_err = max(norm_err, abs(share - weights[i]))
        norm_err = max(norm_err, abs(total - 1.0))

    fid = np.empty(n_frames - k0)
    for k in range(k0, n_frames):
        cond = conditional_wavefunction(full(k), float(Q[k, ax]), ax)
        fid[k - k0] = fidelity(cond, setup.subsystem(occ))

    alone = integrate_ensemble((branches[occ][k] * setup.amplitude(occ) for k in range(k0, n_frames)),
                               setup.system, Q[k0][None], cfg, PERIODIC, backend=backend)
    dev = np.linalg.norm(alone.positions[:, 0] - Q[k0:], axis=1)
    return CollapseReport(occ, times[k0:], fid, Q[k0:, ax], dev, norm_err, own.min(axis=1))


def _ho_state(x: np.ndarray, n: int, omega: float, mass: float = 1.0, hbar: float = 1.0):
    xi = np.sqrt(mass * omega / hbar) * x
    return eval_hermite(n, xi) * np.exp(-xi ** 2 / 2)


def _pointer(a: float, sigma: float, extent: float, points: int) -> WaveFunction:
    return gaussian(make_grid([(-extent, extent)], [points]), 0.0, sigma)


def _window_strength(a, mass, t_on, t_off, readoff):
    """Coupling strength that carries the pointer a distance ``a`` by read-off."""
    t_mid = 0.5 * (t_on + t_off)
    return a * mass / ((t_off - t_on) * (readoff - t_mid))


def position_preset(c1=1 / math.sqrt(2), c2=1 / math.sqrt(2), *, a: float = 4.0,
                    well_separation: float = 3.0, omega: float = 4.0, pointer_mass: float = 10.0,
                    pointer_sigma: float = 0.5, window=(0.0, 0.5), readoff: float = 3.0,
                    dt: float = 0.004, frame_stride: int = 5, x_points: int = 128,
                    y_points: int = 256, direct: bool = False) -> MeasurementSetup:
    """Which-well measurement: ``psi1``, ``psi2`` are the ground states of two distant wells.

    Branch 1 (right well) drives the pointer to ``-a``.
    """
    gx = make_grid([(-2 * well_separation, 2 * well_separation)], [x_points])
    sx = math.sqrt(1.0 / (2 * omega))
    psi1 = gaussian(gx, well_separation, sx)
    psi2 = gaussian(gx, -well_separation, sx)
    phi0 = _pointer(a, pointer_sigma, 2 * a, y_points)
    g = _window_strength(a, pointer_mass, window[0], window[1], readoff)
    width = sx * 0.7
    coupling = None if direct else PointerCoupling(
        g, LocalOperator(lambda x, y: np.tanh(x / width), "tanh_which_well"), 1, tuple(window))
    return MeasurementSetup(psi1, psi2, complex(c1), complex(c2), phi0, (-a, a), coupling,
                            DoubleWell(omega, well_separation, 0), (1.0, pointer_mass), 1.0,
                            readoff, PropagatorConfig(dt=dt), frame_stride, name="position")


def energy_preset(c1=1 / math.sqrt(2), c2=1 / math.sqrt(2), *, a: float = 4.0,
                  omega: float = 1.0, pointer_mass: float = 10.0, pointer_sigma: float = 0.5,
                  window=(0.0, 0.5), readoff: float = 3.0, dt: float = 0.004,
                  frame_stride: int = 5, x_points: int = 128, x_extent: float = 8.0,
                  y_points: int = 256) -> MeasurementSetup:
    """Energy measurement on the two lowest oscillator levels via ``A = P0 - P1``."""
    gx = make_grid([(-x_extent, x_extent)], [x_points])
    x = gx.axis(0)
    psi1 = normalize(WaveFunction(gx, _ho_state(x, 0, omega)))
    psi2 = normalize(WaveFunction(gx, _ho_state(x, 1, omega)))
    phi0 = _pointer(a, pointer_sigma, 2 * a, y_points)
    g = _window_strength(a, pointer_mass, window[0], window[1], readoff)
    coupling = PointerCoupling(g, ProjectorOperator(psi1, psi2, 0, "energy_levels_0_1"), 1,
                               tuple(window))
    return MeasurementSetup(psi1, psi2, complex(c1), complex(c2), phi0, (-a, a), coupling,
                            HarmonicPotential((omega, 0.0)), (1.0, pointer_mass), 1.0,
                            readoff, PropagatorConfig(dt=dt), frame_stride, name="energy")


PRESETS = {"position": position_preset, "energy": energy_preset}
