"""Time evolution of wave functions and current/continuity diagnostics.

Two backends:

``split_step_spectral``
    Strang splitting ``e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2}`` with the kinetic
    factor applied exactly in Fourier space.  Periodic, power-of-two grids.
``implicit_midpoint_fd``
    Crank-Nicolson on the second-order finite-difference Hamiltonian, with
    periodic or cell-centred Dirichlet walls.  Shares eigenvectors with the
    discrete Hamiltonian, so its eigenstates only pick up a phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BackendError, NumericalInstabilityError
from .grid import Grid, ParticleSystem, WaveFunction, density
from .potentials import FreePotential, LocalOperator, Potential, ProjectorOperator
from .spectral import BOUNDARIES, DIRICHLET, PERIODIC, divergence, gradient

SPLIT_STEP = "split_step_spectral"
IMPLICIT_MIDPOINT = "implicit_midpoint_fd"
BACKENDS = (SPLIT_STEP, IMPLICIT_MIDPOINT)


@dataclass(frozen=True)
class PropagatorConfig:
    backend: str = SPLIT_STEP
    dt: float = 1e-3
    boundary: str = PERIODIC

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise BackendError(f"unknown backend {self.backend!r}")
        if self.boundary not in BOUNDARIES:
            raise BackendError(f"unknown boundary {self.boundary!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if self.backend == SPLIT_STEP and self.boundary != PERIODIC:
            raise BackendError("split_step_spectral requires a periodic boundary")

    def check_grid(self, grid: Grid) -> None:
        if self.backend == SPLIT_STEP and not grid.power_of_two:
            raise BackendError(f"split_step_spectral needs power-of-two points, got {grid.points}")


def split_step_dt_bound(grid: Grid, system: ParticleSystem) -> float:
    """Largest step the split-step backend accepts when a potential is present."""
    m = system.axis_masses
    h2 = np.asarray(grid.spacing) ** 2
    return float(0.5 * np.min(m * h2) / system.hbar)


def _default_system(grid: Grid, system: ParticleSystem | None) -> ParticleSystem:
    if system is None:
        return ParticleSystem.single(grid.dims)
    system.check_grid(grid)
    return system


class _SplitStep:
    def __init__(self, grid: Grid, potential: Potential, system: ParticleSystem):
        self.grid = grid
        self.hbar = system.hbar
        self.static = potential.field(grid)
        self.couplings = potential.couplings
        self.axes = tuple(range(1, grid.dims + 1))
        k2m = np.zeros(grid.shape)
        for d, m in enumerate(system.axis_masses):
            k = grid.wavenumbers(d)
            shape = [1] * grid.dims
            shape[d] = k.size
            k2m = k2m + (k ** 2).reshape(shape) / m
        self.kinetic_energy = 0.5 * self.hbar ** 2 * k2m
        self._kin_cache: dict[float, np.ndarray] = {}
        self._half_cache: dict[float, np.ndarray | None] = {}
        self._local = []
        self._projectors = []
        for c in self.couplings:
            y = c.pointer_field(grid)
            if isinstance(c.operator, LocalOperator):
                self._local.append((c, c.strength * c.operator.values(grid) * y))
            else:
                self._projectors.append((c, y))

    @property
    def trivial(self) -> bool:
        return (self.static is None or not np.any(self.static)) and not self.couplings

    def _kinetic(self, dt):
        f = self._kin_cache.get(dt)
        if f is None:
            f = np.exp(-1j * self.kinetic_energy * dt / self.hbar)
            self._kin_cache = {dt: f}
        return f

    def _static_half(self, half):
        if self.static is None:
            return None
        if half not in self._half_cache:
            self._half_cache = {half: np.exp(-1j * self.static * half / self.hbar)}
        return self._half_cache[half]

    def _potential(self, amps, ta, tb, half, first):
        phase = self._static_half(half)
        for c, fld in self._local:
            ov = c.overlap(ta, tb)
            if ov != 0.0:
                extra = np.exp(-1j * fld * ov / self.hbar)
                phase = extra if phase is None else phase * extra
        if first:
            if phase is not None:
                amps = amps * phase
            amps = self._apply_projectors(amps, ta, tb)
        else:
            amps = self._apply_projectors(amps, ta, tb)
            if phase is not None:
                amps = amps * phase
        return amps

    def _apply_projectors(self, amps, ta, tb):
        for c, y in self._projectors:
            ov = c.overlap(ta, tb)
            if ov != 0.0:
                amps = apply_projector_exponential(amps, self.grid, c, y, ov, self.hbar)
        return amps

    def advance(self, amps, t, dt):
        half = 0.5 * dt
        amps = self._potential(amps, t, t + half, half, first=True)
        amps = sfft.ifftn(sfft.fftn(amps, axes=self.axes) * self._kinetic(dt), axes=self.axes)
        return self._potential(amps, t + half, t + dt, half, first=False)

    def hamiltonian(self, amps, t):
        kin = sfft.ifftn(sfft.fftn(amps, axes=self.axes) * self.kinetic_energy, axes=self.axes)
        out = kin
        if self.static is not None:
            out = out + self.static * amps
        for c, fld in self._local:
            if c.window[0] <= t < c.window[1]:
                out = out + fld * amps
        for c, y in self._projectors:
            if c.window[0] <= t < c.window[1]:
                out = out + c.strength * y * apply_projector_difference(amps, self.grid, c.operator)
        return out


def _project(amps, grid: Grid, op: ProjectorOperator, state: WaveFunction):
    """``|state><state| amps`` along the subsystem axis of ``op``."""
    ax = op.axis + 1
    v = state.scalar
    shape = [1] * amps.ndim
    shape[ax] = v.size
    vv = v.reshape(shape)
    coef = np.sum(np.conj(vv) * amps, axis=ax, keepdims=True) * grid.spacing[op.axis]
    return vv * coef


def apply_projector_difference(amps, grid, op: ProjectorOperator):
    out = _project(amps, grid, op, op.plus)
    if op.minus is not None:
        out = out - _project(amps, grid, op, op.minus)
    return out


def apply_projector_exponential(amps, grid, coupling, y, duration, hbar):
    """``exp(-i g y duration (P+ - P-) / hbar)`` for orthogonal projectors."""
    op = coupling.operator
    theta = coupling.strength * y * duration / hbar
    out = amps + (np.exp(-1j * theta) - 1.0) * _project(amps, grid, op, op.plus)
    if op.minus is not None:
        out = out + (np.exp(1j * theta) - 1.0) * _project(amps, grid, op, op.minus)
    return out


def laplacian_1d(n: int, h: float, boundary: str) -> sp.csr_matrix:
    """Second-order cell-centred Laplacian; Dirichlet walls half a cell out."""
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    if boundary == DIRICHLET:
        main[0] = main[-1] = -3.0
        mat = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    else:
        mat = sp.diags([off, main, off], [-1, 0, 1], format="lil")
        mat[0, n - 1] += 1.0
        mat[n - 1, 0] += 1.0
    return (mat / (h * h)).tocsr()


class _ImplicitMidpoint:
    def __init__(self, grid: Grid, potential: Potential, system: ParticleSystem, boundary: str):
        self.grid = grid
        self.hbar = system.hbar
        n = grid.size
        kin = sp.csr_matrix((n, n), dtype=float)
        for d, m in enumerate(system.axis_masses):
            parts = [sp.identity(p, format="csr") for p in grid.points]
            parts[d] = laplacian_1d(grid.points[d], grid.spacing[d], boundary)
            op = parts[0]
            for p in parts[1:]:
                op = sp.kron(op, p, format="csr")
            kin = kin - (self.hbar ** 2 / (2 * m)) * op
        self.kinetic = kin.tocsc()
        static = potential.field(grid)
        self.static = np.zeros(n) if static is None else static.reshape(-1)
        self.couplings = []
        for c in potential.couplings:
            if isinstance(c.operator, ProjectorOperator):
                raise BackendError("implicit_midpoint_fd supports local pointer couplings only")
            y = c.pointer_field(grid)
            self.couplings.append((c, np.broadcast_to(c.strength * c.operator.values(grid) * y,
                                                      grid.shape).reshape(-1)))
        self._cache: dict = {}

    def _operators(self, dt, fractions):
        key = (dt, fractions)
        if key not in self._cache:
            diag = self.static.copy()
            for f, (_, fld) in zip(fractions, self.couplings):
                diag = diag + f * fld
            h = self.kinetic + sp.diags(diag, format="csc")
            eye = sp.identity(self.grid.size, format="csc")
            a = (eye + (0.5j * dt / self.hbar) * h).tocsc()
            b = (eye - (0.5j * dt / self.hbar) * h).tocsr()
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[key] = (spla.splu(a), b)
        return self._cache[key]

    @property
    def trivial(self) -> bool:
        return False

    def advance(self, amps, t, dt):
        fractions = tuple(c.overlap(t, t + dt) / dt for c, _ in self.couplings)
        lu, b = self._operators(dt, fractions)
        out = np.empty_like(amps)
        for s in range(amps.shape[0]):
            out[s] = lu.solve(b @ amps[s].reshape(-1)).reshape(self.grid.shape)
        return out

    def hamiltonian(self, amps, t):
        diag = self.static.copy()
        for c, fld in self.couplings:
            if c.window[0] <= t < c.window[1]:
                diag = diag + fld
        h = self.kinetic + sp.diags(diag)
        return np.stack([(h @ a.reshape(-1)).reshape(self.grid.shape) for a in amps])


class Propagator:
    """Advances amplitudes on a fixed grid under a fixed potential."""

    def __init__(self, grid: Grid, potential: Potential | None, cfg: PropagatorConfig,
                 system: ParticleSystem | None = None, check_dt: bool = True):
        self.grid = grid
        self.cfg = cfg
        self.system = _default_system(grid, system)
        self.potential = FreePotential() if potential is None else potential
        cfg.check_grid(grid)
        if cfg.backend == SPLIT_STEP:
            self._impl = _SplitStep(grid, self.potential, self.system)
            if check_dt and not self._impl.trivial:
                bound = split_step_dt_bound(grid, self.system)
                if cfg.dt > bound * (1 + 1e-12):
                    raise NumericalInstabilityError(
                        f"dt={cfg.dt:g} exceeds the split-step bound {bound:g} "
                        f"(0.5 m h^2 / hbar); Trotter error would dominate")
        else:
            self._impl = _ImplicitMidpoint(grid, self.potential, self.system, cfg.boundary)

    def advance(self, amps: np.ndarray, t: float, dt: float | None = None) -> np.ndarray:
        dt = self.cfg.dt if dt is None else dt
        out = self._impl.advance(amps, t, dt)
        if not np.all(np.isfinite(out)):
            raise NumericalInstabilityError(f"non-finite amplitudes after step at t={t + dt:g}")
        return out

    def step(self, psi: WaveFunction, dt: float | None = None) -> WaveFunction:
        dt = self.cfg.dt if dt is None else dt
        return psi.replace(self.advance(psi.amplitudes, psi.time, dt), psi.time + dt)

    def hamiltonian(self, amps: np.ndarray, t: float) -> np.ndarray:
        return self._impl.hamiltonian(amps, t)

    def energy(self, psi: WaveFunction) -> float:
        hpsi = self.hamiltonian(psi.amplitudes, psi.time)
        return float(np.vdot(psi.amplitudes, hpsi).real * self.grid.cell_volume)


def step(psi: WaveFunction, V: Potential | None, cfg: PropagatorConfig,
         system: ParticleSystem | None = None) -> WaveFunction:
    """Advance ``psi`` by one step of ``cfg.dt``."""
    return Propagator(psi.grid, V, cfg, system).step(psi)


def _step_plan(t0: float, t_final: float, dt: float, frame_stride: int) -> tuple[int, float]:
    total = t_final - t0
    n = max(1, math.ceil(abs(total) / dt - 1e-9))
    n = frame_stride * math.ceil(n / frame_stride)
    return n, total / n


def iter_evolve(psi: WaveFunction, V: Potential | None, t_final: float, cfg: PropagatorConfig,
                frame_stride: int = 1, system: ParticleSystem | None = None,
                propagator: Propagator | None = None) -> Iterator[WaveFunction]:
    """Yield ``psi`` and then every ``frame_stride``-th step up to ``t_final``.

    The step count is rounded up so frames are uniformly spaced and the last
    one lands exactly on ``t_final``; a ``t_final`` before ``psi.time``
    evolves backwards.
    """
    if frame_stride < 1:
        raise ValueError("frame_stride must be >= 1")
    yield psi
    if t_final == psi.time:
        return
    n, dt = _step_plan(psi.time, t_final, cfg.dt, frame_stride)
    prop = propagator or Propagator(psi.grid, V, replace(cfg, dt=abs(dt)), system)
    amps = psi.amplitudes
    t0 = psi.time
    for i in range(1, n + 1):
        amps = prop.advance(amps, t0 + (i - 1) * dt, dt)
        if i % frame_stride == 0:
            yield WaveFunction(psi.grid, amps, t_final if i == n else t0 + i * dt)


def evolve(psi: WaveFunction, V: Potential | None, t_final: float, cfg: PropagatorConfig,
           frame_stride: int = 1, system: ParticleSystem | None = None) -> list[WaveFunction]:
    return list(iter_evolve(psi, V, t_final, cfg, frame_stride, system))


def probability_current(psi: WaveFunction, system: ParticleSystem | None = None,
                        boundary: str = PERIODIC, method: str | None = None) -> np.ndarray:
    """``j_d = (hbar/m_d) Im sum_s conj(psi_s) d_d psi_s``, shape ``(D, *grid.shape)``."""
    system = _default_system(psi.grid, system)
    grad = gradient(psi.amplitudes, psi.grid, boundary, method)
    j = np.imag(np.sum(np.conj(psi.amplitudes)[:, None] * grad, axis=0))
    scale = system.hbar / system.axis_masses
    return j * scale.reshape((-1,) + (1,) * psi.grid.dims)


def continuity_residual(frames: Sequence[WaveFunction], system: ParticleSystem | None = None,
                        boundary: str = PERIODIC, method: str | None = None):
    """``d|psi|^2/dt + div j`` on the middle frame, via a central time difference.

    Returns ``(field, l2_norm)``.
    """
    if len(frames) < 3:
        raise ValueError("continuity_residual needs at least three frames")
    k = len(frames) // 2
    before, mid, after = frames[k - 1], frames[k], frames[k + 1]
    dt_a, dt_b = mid.time - before.time, after.time - mid.time
    if not math.isclose(dt_a, dt_b, rel_tol=1e-9):
        raise ValueError("frames must be uniformly spaced in time")
    drho = (density(after) - density(before)) / (dt_a + dt_b)
    div = divergence(probability_current(mid, system, boundary, method), mid.grid, boundary, method)
    r = drho + div
    return r, float(np.sqrt(np.sum(r * r) * mid.grid.cell_volume))
