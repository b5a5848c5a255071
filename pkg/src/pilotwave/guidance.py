"""Guidance velocity (scalar and spinor) and trajectory integration.

The velocity of particle ``i`` is ``(hbar/m_i) Im(sum_s conj(psi_s) grad_i psi_s) / sum_s |psi_s|^2``.
Psi and its gradient are computed as fields once per frame, interpolated
multilinearly to the particle position, and the quotient is formed there.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _pykernels, kernels
from .errors import EnsembleError, NodeProximityError, OutOfDomainError
from .grid import Configuration, Grid, ParticleSystem, WaveFunction, density
from .spectral import PERIODIC, gradient

COMPLETED, ABORTED_NODE, ABORTED_DOMAIN = 0, 1, 2
STATUS_NAMES = ("completed", "aborted_node", "aborted_domain")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 in lockstep with the wave-function frames.

    Parameters
    ----------
    substeps_per_frame : int
        RK4 steps between consecutive frames.
    node_epsilon : float
        Density threshold relative to the frame's maximum density below
        which a trajectory is aborted as having hit a node.
    max_step_cells : float, optional
        If set, an RK4 step that moves a trajectory further than this many
        grid spacings along any axis is redone as two half steps, up to
        ``max_refine`` times.  Off by default; useful where the velocity
        spikes near almost-nodes.
    node_guard : float
        Relative density below which a step is also checked for a phase
        jump of psi beyond pi/2 between its start and end points, which
        means it has hopped across a node.  Such steps are halved like long
        ones; if the jump survives ``max_refine`` halvings the trajectory is
        aborted as a node hit.  Off (zero) by default.
    """

    method: str = "rk4_lockstep"
    substeps_per_frame: int = 4
    node_epsilon: float = 1e-12
    interpolation: str = "trilinear"
    max_step_cells: float | None = None
    max_refine: int = 12
    node_guard: float = 0.0

    def __post_init__(self):
        if self.method != "rk4_lockstep":
            raise ValueError(f"unknown integration method {self.method!r}")
        if self.interpolation != "trilinear":
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        if int(self.substeps_per_frame) != self.substeps_per_frame or self.substeps_per_frame < 1:
            raise ValueError("substeps_per_frame must be a positive integer")
        if not 0.0 < self.node_epsilon < 1e-3:
            raise ValueError("node_epsilon must lie in (0, 1e-3)")
        if self.max_step_cells is not None and not self.max_step_cells > 0:
            raise ValueError("max_step_cells must be positive")
        if self.max_refine < 0:
            raise ValueError("max_refine must be >= 0")
        if not 0.0 <= self.node_guard < 1.0:
            raise ValueError("node_guard must lie in [0, 1)")


class GuidanceField:
    """Psi and its gradient stacked for the interpolation kernel.

    ``data`` has shape ``(S, 1 + D, N0, N1, N2)`` with unused axes of length one.
    """

    def __init__(self, psi: WaveFunction, system: ParticleSystem | None = None,
                 boundary: str = PERIODIC, method: str | None = None):
        grid = psi.grid
        system = system or ParticleSystem.single(grid.dims)
        system.check_grid(grid)
        S, D = psi.spin_components, grid.dims
        pad = grid.shape + (1,) * (3 - D)
        data = np.empty((S, 1 + D) + pad, dtype=np.complex128)
        data[:, 0] = psi.amplitudes.reshape((S,) + pad)
        data[:, 1:] = gradient(psi.amplitudes, grid, boundary, method).reshape((S, D) + pad)
        self.data = data
        self.grid = grid
        self.time = psi.time
        self.boundary = boundary
        self.rho_max = float(density(psi).max())
        self.lo = np.zeros(3)
        self.hi = np.ones(3)
        self.h = np.ones(3)
        self.lo[:D] = grid.lower
        self.hi[:D] = grid.upper
        self.h[:D] = grid.spacing
        self.periodic = np.full(3, boundary == PERIODIC, dtype=np.uint8)
        self.vscale = np.zeros(3)
        self.vscale[:D] = system.hbar / system.axis_masses

    def align_to(self, other: "GuidanceField") -> None:
        """Remove the global phase relative to ``other`` so linear mixing in time stays smooth.

        Velocities do not depend on a global phase, but the mixed field does.
        """
        if other.data.shape != self.data.shape:
            return
        ov = np.vdot(other.data[:, 0], self.data[:, 0])
        if abs(ov) > 0:
            self.data *= np.conj(ov) / abs(ov)

    def amplitude(self, positions, other: "GuidanceField | None" = None, alpha: float = 0.0):
        """Interpolated spinor components ``(S, n)`` at in-domain ``positions``."""
        pos = np.atleast_2d(np.asarray(positions, dtype=np.float64))
        fb = self.data if other is None else other.data
        return _pykernels.interpolate(self.data[:, :1], fb[:, :1], alpha, pos, self.lo, self.h,
                                      self.periodic)[:, 0]

    def evaluate(self, positions, node_epsilon: float = 1e-12, other: "GuidanceField | None" = None,
                 alpha: float = 0.0, active=None, backend: str | None = None):
        """Velocities, densities and status codes at ``positions`` of shape ``(n, D)``.

        With ``other`` the fields are mixed linearly, ``alpha`` being the
        weight of ``other``.
        """
        pos = np.ascontiguousarray(np.atleast_2d(positions), dtype=np.float64)
        n = pos.shape[0]
        fb = self.data if other is None else other.data
        rho_max = self.rho_max if other is None else (1 - alpha) * self.rho_max + alpha * other.rho_max
        act = np.ones(n, np.uint8) if active is None else np.asarray(active, np.uint8)
        v = np.zeros((n, self.grid.dims))
        rho = np.zeros(n)
        status = np.zeros(n, np.int8)
        kernels.guide_velocity(self.data, fb, alpha, pos, act, self.lo, self.hi, self.h,
                               self.periodic, self.vscale, node_epsilon * rho_max,
                               v, rho, status, backend=backend)
        return v, rho, status


def _point_velocity(psi, system, q, boundary, node_epsilon, method):
    q = q.coords if isinstance(q, Configuration) else np.asarray(q, dtype=float).reshape(-1)
    if q.size != psi.grid.dims:
        raise OutOfDomainError(f"configuration has {q.size} coordinates, grid has {psi.grid.dims}")
    v, rho, status = GuidanceField(psi, system, boundary, method).evaluate(q[None], node_epsilon)
    if status[0] == ABORTED_DOMAIN:
        raise OutOfDomainError(f"configuration {q} lies outside {psi.grid.extents}")
    if status[0] == ABORTED_NODE:
        raise NodeProximityError(f"density {rho[0]:.3g} at {q} is below the node threshold")
    return v[0]


def velocity_field(psi: WaveFunction, system: ParticleSystem | None, q, boundary: str = PERIODIC,
                   node_epsilon: float = 1e-12, method: str | None = None) -> np.ndarray:
    """Guidance velocity at configuration ``q``.

    Parameters
    ----------
    psi : WaveFunction
        Scalar or spinor wave function.
    system : ParticleSystem or None
        Masses and hbar; a single unit-mass particle by default.
    q : Configuration or array_like
    boundary : {"periodic", "dirichlet_zero"}
        Selects spectral (periodic) or fourth-order finite-difference gradients.

    Raises
    ------
    OutOfDomainError, NodeProximityError
    """
    return _point_velocity(psi, system, q, boundary, node_epsilon, method)


def velocity_field_spinor(psi: WaveFunction, system: ParticleSystem | None, q,
                          boundary: str = PERIODIC, node_epsilon: float = 1e-12,
                          method: str | None = None) -> np.ndarray:
    """Spinor guidance velocity; requires at least two spin components."""
    if psi.spin_components < 2:
        raise ValueError("velocity_field_spinor needs a wave function with >= 2 components")
    return _point_velocity(psi, system, q, boundary, node_epsilon, method)


def velocity_on_grid(psi: WaveFunction, system: ParticleSystem | None = None,
                     boundary: str = PERIODIC, node_epsilon: float = 1e-12,
                     method: str | None = None) -> np.ndarray:
    """Velocity at every grid point, shape ``(D, *grid.shape)``; NaN below the node threshold."""
    grid = psi.grid
    system = system or ParticleSystem.single(grid.dims)
    grad = gradient(psi.amplitudes, grid, boundary, method)
    num = np.imag(np.sum(np.conj(psi.amplitudes)[:, None] * grad, axis=0))
    rho = density(psi)
    scale = (system.hbar / system.axis_masses).reshape((-1,) + (1,) * grid.dims)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = scale * num / rho
    v[:, rho < node_epsilon * rho.max()] = np.nan
    return v


@dataclass
class Trajectory:
    """One configuration-space path; samples after an abort are dropped."""

    times: np.ndarray
    positions: np.ndarray
    status: str = "completed"
    seed_index: int = 0

    @property
    def samples(self) -> list[Configuration]:
        return [Configuration(q, t) for t, q in zip(self.times, self.positions)]


@dataclass
class Ensemble:
    """Trajectories stored as arrays.

    ``positions`` has shape ``(K, n, D)`` over the recorded ``times``;
    entries after a trajectory's abort are NaN.  ``abort_time`` holds the
    RK4 stage time at which the abort was detected (NaN if completed).
    """

    times: np.ndarray
    positions: np.ndarray
    status: np.ndarray
    abort_time: np.ndarray
    v_max: float
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.positions.shape[1]

    @property
    def dims(self) -> int:
        return self.positions.shape[2]

    @property
    def completed(self) -> np.ndarray:
        return self.status == COMPLETED

    def status_counts(self) -> dict:
        return {name: int(np.sum(self.status == k)) for k, name in enumerate(STATUS_NAMES)}

    def aborted_fraction(self, kind: int | None = None) -> float:
        bad = self.status != COMPLETED if kind is None else self.status == kind
        return float(np.mean(bad))

    def trajectory(self, i: int) -> Trajectory:
        ok = np.all(np.isfinite(self.positions[:, i]), axis=1)
        return Trajectory(self.times[ok], self.positions[ok, i], STATUS_NAMES[self.status[i]], i)

    def at(self, k: int) -> np.ndarray:
        """Positions of the trajectories still alive at recorded time index ``k``."""
        p = self.positions[k]
        return p[np.all(np.isfinite(p), axis=1)]

    def max_step_ratio(self) -> float:
        """Largest ``|dq| / (v_max dt)`` between consecutive samples; at most one."""
        if len(self.times) < 2 or self.v_max == 0:
            return 0.0
        dq = np.linalg.norm(np.diff(self.positions, axis=0), axis=2)
        dt = np.abs(np.diff(self.times))[:, None]
        with np.errstate(invalid="ignore"):
            r = dq / (self.v_max * dt)
        return float(np.nanmax(r)) if np.any(np.isfinite(r)) else 0.0

    def to_csv(self, path) -> None:
        """Write all trajectories to one CSV with a ``trajectory_id`` column."""
        D = self.dims
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trajectory_id", "t"] + [f"q_{d}" for d in range(D)] + ["status"])
            for i in range(len(self)):
                name = STATUS_NAMES[self.status[i]]
                for k, t in enumerate(self.times):
                    q = self.positions[k, i]
                    if not np.all(np.isfinite(q)):
                        break
                    w.writerow([i, f"{t:.17g}"] + [f"{x:.17g}" for x in q] + [name])

    def save(self, path) -> None:
        np.savez(path, times=self.times, positions=self.positions, status=self.status,
                 abort_time=self.abort_time, v_max=self.v_max)


def _frame_spacing(t0: float, t1: float, ref: float | None) -> float:
    dt = t1 - t0
    if dt == 0.0:
        raise ValueError("consecutive frames share a time stamp")
    if ref is not None and not math.isclose(dt, ref, rel_tol=1e-6, abs_tol=1e-12):
        raise ValueError(f"frames are not uniformly spaced ({dt:g} vs {ref:g})")
    return dt


class _Chunk:
    """A contiguous slice of the ensemble integrated by one worker."""

    def __init__(self, pos, vmax_init=0.0):
        n = pos.shape[0]
        self.pos = pos
        self.status = np.zeros(n, np.int8)
        self.abort_time = np.full(n, np.nan)
        self.v_max = vmax_init

    def advance(self, fa, fb, ta, dt, cfg, backend):
        sub = cfg.substeps_per_frame
        h = np.asarray(fa.grid.spacing)
        for j in range(sub):
            alive = self.status == COMPLETED
            if not alive.any():
                return
            rows = np.flatnonzero(alive)
            new, st, at = self._step(fa, fb, ta, dt, j / sub, 1.0 / sub, self.pos[rows], cfg,
                                     backend, h, 0)
            bad = st != COMPLETED
            self.status[rows[bad]] = st[bad]
            self.abort_time[rows[bad]] = at[bad]
            new[bad] = np.nan
            self.pos[rows] = new

    def _step(self, fa, fb, ta, dt, a0, da, x, cfg, backend, h, depth):
        """One RK4 step over the frame fraction ``[a0, a0 + da]`` for the rows in ``x``."""
        n = x.shape[0]
        status = np.zeros(n, np.int8)
        abort_time = np.full(n, np.nan)
        alive = np.ones(n, bool)
        hs = da * dt
        k = []
        rho0 = None
        for c_in, c_a in ((0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)):
            xs = x if not k else x + (c_in * hs) * k[-1]
            v, rho, st = fa.evaluate(xs, cfg.node_epsilon, fb, a0 + c_a * da, alive, backend)
            if rho0 is None:
                rho0 = rho
            bad = alive & (st != COMPLETED)
            if bad.any():
                status[bad] = st[bad]
                abort_time[bad] = ta + (a0 + c_a * da) * dt
                alive = alive & ~bad
            if alive.any():
                self.v_max = max(self.v_max, float(np.max(np.linalg.norm(v[alive], axis=1))))
            k.append(v)
        step = (k[0] + 2 * k[1] + 2 * k[2] + k[3]) * (hs / 6)
        new = x.copy()
        new[alive] = x[alive] + step[alive]

        # a sign flip of psi along a low-density step means a node was jumped
        jump = np.zeros(n, bool)
        rho_ref = (1 - a0) * fa.rho_max + a0 * fb.rho_max
        near = np.flatnonzero(alive & (rho0 < cfg.node_guard * rho_ref) & fa.grid.contains(new))
        if near.size:
            alpha = a0 + da
            before = fa.amplitude(x[near], fb, alpha)
            after = fa.amplitude(new[near], fb, alpha)
            jump[near] = np.sum(np.conj(before) * after, axis=0).real <= 0.0

        redo = jump.copy()
        if cfg.max_step_cells is not None:
            # refine where the step is long, including rows that aborted mid-step
            redo |= (np.max(np.abs(step) / h, axis=1) > cfg.max_step_cells) | ~alive
        if depth < cfg.max_refine and redo.any():
            redo = np.flatnonzero(redo)
            half = 0.5 * da
            xm, s1, t1 = self._step(fa, fb, ta, dt, a0, half, x[redo], cfg, backend, h,
                                    depth + 1)
            ok = s1 == COMPLETED
            x2 = xm.copy()
            s2 = s1.copy()
            t2 = t1.copy()
            if ok.any():
                r = np.flatnonzero(ok)
                x2[r], s2[r], t2[r] = self._step(fa, fb, ta, dt, a0 + half, half, xm[r], cfg,
                                                 backend, h, depth + 1)
            new[redo], status[redo], abort_time[redo] = x2, s2, t2
        elif jump.any():
            status[jump] = ABORTED_NODE
            abort_time[jump] = ta + (a0 + da) * dt
        return new, status, abort_time


def integrate_ensemble(frames: Iterable[WaveFunction], system: ParticleSystem | None,
                       initial, cfg: IntegratorConfig | None = None, boundary: str = PERIODIC,
                       workers: int = 1, record_every: int = 1, method: str | None = None,
                       backend: str | None = None) -> Ensemble:
    """Integrate trajectories through a stream of uniformly spaced frames.

    Parameters
    ----------
    frames : iterable of WaveFunction
        Consumed once, so a generator from ``iter_evolve`` keeps memory flat.
    initial : array_like of shape (n, D) or sequence of Configuration
        Starting points at the first frame's time.
    record_every : int
        Store positions at every ``record_every``-th frame (the last frame is
        always stored).
    workers : int
        Threads over contiguous chunks of trajectories.  The result does not
        depend on this value.

    Returns
    -------
    Ensemble

    Raises
    ------
    EnsembleError
        If every trajectory aborted.
    """
    cfg = cfg or IntegratorConfig()
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if len(initial) and isinstance(initial[0], Configuration):
        initial = np.array([c.coords for c in initial])
    q0 = np.array(initial, dtype=float, ndmin=2)
    it = iter(frames)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("no frames supplied") from None
    grid: Grid = first.grid
    if q0.shape[1] != grid.dims:
        raise OutOfDomainError(f"initial points have {q0.shape[1]} coordinates, grid has {grid.dims}")
    outside = ~grid.contains(q0)
    if np.any(outside):
        raise OutOfDomainError(f"{int(outside.sum())} initial points lie outside the grid")
    n = q0.shape[0]
    workers = max(1, min(int(workers), n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    chunks = [_Chunk(q0[a:b].copy()) for a, b in zip(bounds[:-1], bounds[1:])]

    fa = GuidanceField(first, system, boundary, method)
    _, _, st0 = fa.evaluate(q0, cfg.node_epsilon, backend=backend)
    for c, a, b in zip(chunks, bounds[:-1], bounds[1:]):
        bad = st0[a:b] != COMPLETED
        c.status[bad] = st0[a:b][bad]
        c.abort_time[bad] = first.time
        c.pos[bad] = np.nan

    times = [first.time]
    records = [np.concatenate([c.pos for c in chunks])]
    ref = None
    idx = 0
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        prev = first
        for frame in it:
            if frame.grid != grid:
                raise ValueError("all frames must share one grid")
            ref = _frame_spacing(prev.time, frame.time, ref)
            fb = GuidanceField(frame, system, boundary, method)
            fb.align_to(fa)
            args = (fa, fb, prev.time, frame.time - prev.time, cfg, backend)
            if pool is None:
                chunks[0].advance(*args)
            else:
                list(pool.map(lambda c: c.advance(*args), chunks))
            idx += 1
            fa, prev = fb, frame
            if idx % record_every == 0:
                times.append(frame.time)
                records.append(np.concatenate([c.pos for c in chunks]))
        if idx % record_every != 0:
            times.append(prev.time)
            records.append(np.concatenate([c.pos for c in chunks]))
    finally:
        if pool is not None:
            pool.shutdown()

    status = np.concatenate([c.status for c in chunks])
    if np.all(status != COMPLETED):
        raise EnsembleError("every trajectory aborted; check the initial data and grid")
    return Ensemble(np.array(times), np.stack(records), status,
                    np.concatenate([c.abort_time for c in chunks]),
                    max(c.v_max for c in chunks),
                    {"substeps_per_frame": cfg.substeps_per_frame,
                     "node_epsilon": cfg.node_epsilon, "frames": idx + 1,
                     "kernel": backend or kernels.BACKEND})


def permute_labels(q, system: ParticleSystem, permutation: Sequence[int]):
    """Relabel particles: particle ``i`` of the result is particle ``permutation[i]`` of ``q``.

    ``q`` may be a Configuration or an array whose last axis is the
    configuration axis.
    """
    perm = [int(p) for p in permutation]
    N = system.n_particles
    if sorted(perm) != list(range(N)):
        raise ValueError(f"{permutation} is not a permutation of {N} particles")
    for i, p in enumerate(perm):
        if (system.masses[i] != system.masses[p]
                or system.dims_per_particle[i] != system.dims_per_particle[p]):
            raise ValueError(f"cannot exchange particles {i} and {p}: masses or dimensions differ")
    where = {pc: a for a, pc in enumerate(system.axis_map)}
    src = [where[(perm[p], c)] for p, c in system.axis_map]
    if isinstance(q, Configuration):
        return Configuration(q.coords[src], q.time)
    return np.asarray(q)[..., src]
