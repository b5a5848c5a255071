"""Configuration-space grids, particle bookkeeping and wave-function storage.

All fields live on cell-centred uniform grids: along axis ``d`` the sample
points are ``lo + (i + 1/2) * spacing`` for ``i = 0 .. points - 1`` with
``spacing = (hi - lo) / points``.  Integrals are midpoint Riemann sums, so a
field's integral is ``sum(values) * cell_volume``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import (
    GridError,
    GridMismatchError,
    OutOfDomainError,
    ZeroNormError,
)

MAX_DIMS = 3
MIN_POINTS = 8
DEFAULT_MAX_POINTS = 2**26


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular lattice over a box in configuration space."""

    extents: tuple[tuple[float, float], ...]
    points: tuple[int, ...]

    def __post_init__(self):
        ext = tuple((float(lo), float(hi)) for lo, hi in self.extents)
        pts = tuple(int(p) for p in self.points)
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "points", pts)
        if len(ext) != len(pts):
            raise GridError("extents and points must have the same length")
        if not 1 <= len(pts) <= MAX_DIMS:
            raise GridError(f"grid dimension must be between 1 and {MAX_DIMS}, got {len(pts)}")
        for d, ((lo, hi), n) in enumerate(zip(ext, pts)):
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise GridError(f"axis {d}: need finite min < max, got ({lo}, {hi})")
            if n < MIN_POINTS:
                raise GridError(f"axis {d}: need at least {MIN_POINTS} points, got {n}")

    @property
    def dims(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.extents, self.points))

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.extents])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.extents])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def power_of_two(self) -> bool:
        """True when every axis has a power-of-two point count (spectral-ready)."""
        return all(_is_pow2(n) for n in self.points)

    def axis(self, d: int) -> np.ndarray:
        (lo, _), n, h = self.extents[d], self.points[d], self.spacing[d]
        return lo + (np.arange(n) + 0.5) * h

    def mesh(self) -> list[np.ndarray]:
        """Open (broadcastable) coordinate arrays, one per axis."""
        return list(np.meshgrid(*(self.axis(d) for d in range(self.dims)),
                                indexing="ij", sparse=True))

    def wavenumbers(self, d: int) -> np.ndarray:
        """Angular wavenumbers of the discrete Fourier modes along axis ``d``."""
        return 2 * np.pi * np.fft.fftfreq(self.points[d], d=self.spacing[d])

    def contains(self, q) -> np.ndarray | bool:
        q = np.asarray(q, dtype=float)
        inside = np.all((q >= self.lower) & (q <= self.upper), axis=-1)
        return bool(inside) if inside.ndim == 0 else inside

    def sub_grid(self, axes: Sequence[int]) -> "Grid":
        return Grid(tuple(self.extents[a] for a in axes), tuple(self.points[a] for a in axes))

    def describe(self) -> dict:
        return {"extents": [list(e) for e in self.extents], "points": list(self.points)}


def make_grid(extents, points, max_points: int = DEFAULT_MAX_POINTS) -> Grid:
    """Build a :class:`Grid`, guarding the dimension and the memory budget.

    >>> make_grid([(-10, 10)], [256]).spacing
    (0.078125,)
    """
    extents = [tuple(e) for e in extents]
    points = [int(p) for p in np.atleast_1d(points)]
    if len(points) > MAX_DIMS or len(extents) > MAX_DIMS:
        raise GridError(f"at most {MAX_DIMS} configuration dimensions are supported")
    total = int(np.prod(points, dtype=np.int64))
    if total > max_points:
        raise GridError(f"grid has {total} points, above the cap of {max_points}")
    return Grid(tuple(extents), tuple(points))


@dataclass(frozen=True)
class ParticleSystem:
    """Particle masses, spatial dimensions and the mapping onto grid axes.

    ``axis_map[a] = (particle, component)`` says which particle coordinate
    grid axis ``a`` carries.  By default axes are assigned particle by
    particle in order.
    """

    masses: tuple[float, ...]
    dims_per_particle: tuple[int, ...]
    hbar: float = 1.0
    axis_map: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        dims = tuple(int(d) for d in self.dims_per_particle)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "dims_per_particle", dims)
        if not masses or len(masses) != len(dims):
            raise ValueError("masses and dims_per_particle must be non-empty and equally long")
        if any(not (m > 0 and math.isfinite(m)) for m in masses):
            raise ValueError("masses must be positive")
        if any(d < 1 for d in dims):
            raise ValueError("dims_per_particle must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if self.axis_map is None:
            amap = tuple((p, c) for p, d in enumerate(dims) for c in range(d))
        else:
            amap = tuple((int(p), int(c)) for p, c in self.axis_map)
        expected = {(p, c) for p, d in enumerate(dims) for c in range(d)}
        if len(amap) != len(expected) or set(amap) != expected:
            raise ValueError("axis_map must be a bijection onto (particle, component) pairs")
        object.__setattr__(self, "axis_map", amap)

    @classmethod
    def single(cls, dims: int = 1, mass: float = 1.0, hbar: float = 1.0) -> "ParticleSystem":
        return cls((mass,), (dims,), hbar)

    @property
    def n_particles(self) -> int:
        return len(self.masses)

    @property
    def total_dims(self) -> int:
        return sum(self.dims_per_particle)

    @property
    def axis_masses(self) -> np.ndarray:
        return np.array([self.masses[p] for p, _ in self.axis_map])

    def axes_of(self, particle: int) -> list[int]:
        return [a for a, (p, _) in enumerate(self.axis_map) if p == particle]

    def check_grid(self, grid: Grid) -> None:
        if grid.dims != self.total_dims:
            raise GridMismatchError(
                f"particle system spans {self.total_dims} axes but grid has {grid.dims}")


@dataclass(frozen=True)
class Configuration:
    """A point ``q`` in configuration space at time ``time``."""

    coords: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def check_inside(self, grid: Grid) -> None:
        if self.coords.size != grid.dims or not grid.contains(self.coords):
            raise OutOfDomainError(f"configuration {self.coords} lies outside {grid.extents}")


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex amplitudes of shape ``(spin_components, *grid.points)``.

    Scalar amplitudes (shape ``grid.points``) are promoted to one spin
    component.  The array is copied and frozen on construction.
    """

    grid: Grid
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=np.complex128)
        if a.shape == self.grid.shape:
            a = a[np.newaxis]
        if a.ndim != self.grid.dims + 1 or a.shape[1:] != self.grid.shape:
            raise GridMismatchError(
                f"amplitudes of shape {a.shape} do not fit grid {self.grid.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def from_function(cls, grid: Grid, func: Callable, time: float = 0.0) -> "WaveFunction":
        """Sample ``func(*coords)`` at the grid points (broadcast over axes)."""
        values = np.broadcast_to(func(*grid.mesh()), grid.shape)
        return cls(grid, values, time)

    @property
    def spin_components(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def scalar(self) -> np.ndarray:
        if self.spin_components != 1:
            raise ValueError("wave function has spin components; no scalar view")
        return self.amplitudes[0]

    def norm(self) -> float:
        return self._norm

    @cached_property
    def _norm(self) -> float:
        a = self.amplitudes
        return math.sqrt(float(np.sum(a.real ** 2 + a.imag ** 2)) * self.grid.cell_volume)

    def replace(self, amplitudes=None, time=None) -> "WaveFunction":
        return WaveFunction(self.grid,
                            self.amplitudes if amplitudes is None else amplitudes,
                            self.time if time is None else time)

    def __mul__(self, c) -> "WaveFunction":
        return self.replace(self.amplitudes * complex(c))

    __rmul__ = __mul__

    def __add__(self, other: "WaveFunction") -> "WaveFunction":
        _check_compatible(self, other)
        return self.replace(self.amplitudes + other.amplitudes)

    def __sub__(self, other: "WaveFunction") -> "WaveFunction":
        _check_compatible(self, other)
        return self.replace(self.amplitudes - other.amplitudes)


def _check_compatible(a: WaveFunction, b: WaveFunction) -> None:
    if a.grid != b.grid or a.spin_components != b.spin_components:
        raise GridMismatchError("wave functions live on different grids or spin spaces")


def normalize(psi: WaveFunction) -> WaveFunction:
    """Rescale to unit L2 norm; the phase is left untouched."""
    nrm = psi.norm()
    if nrm == 0.0:
        raise ZeroNormError("cannot normalize a zero wave function")
    return psi.replace(psi.amplitudes / nrm)


def density(psi: WaveFunction) -> np.ndarray:
    """Spin-summed ``|psi|^2`` at every grid point."""
    a = psi.amplitudes
    return np.sum(a.real ** 2 + a.imag ** 2, axis=0)


def inner_product(a: WaveFunction, b: WaveFunction) -> complex:
    """Hermitian inner product ``<a, b>``, antilinear in ``a``."""
    _check_compatible(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.cell_volume)


def tensor_product(a: WaveFunction, b: WaveFunction) -> WaveFunction:
    """``(a ⊗ b)(x, y) = a(x) b(y)`` on the product grid."""
    if a.spin_components != 1 or b.spin_components != 1:
        raise ValueError("tensor_product takes scalar wave functions")
    if a.grid.dims + b.grid.dims > MAX_DIMS:
        raise GridError(f"product would have {a.grid.dims + b.grid.dims} dimensions "
                        f"(max {MAX_DIMS})")
    grid = Grid(a.grid.extents + b.grid.extents, a.grid.points + b.grid.points)
    amps = np.multiply.outer(a.scalar, b.scalar)
    return WaveFunction(grid, amps, a.time)


def embed(psi: WaveFunction, grid: Grid) -> WaveFunction:
    """Zero-pad ``psi`` into a larger grid with identical, aligned cells.

    The norm is preserved exactly since no amplitude is changed.
    """
    src = psi.grid
    if grid.dims != src.dims:
        raise GridMismatchError("embedding requires equal dimensions")
    slices = []
    for d in range(src.dims):
        h_src, h_dst = src.spacing[d], grid.spacing[d]
        if not math.isclose(h_src, h_dst, rel_tol=1e-12):
            raise GridMismatchError(f"axis {d}: spacing {h_src} differs from {h_dst}")
        offset = (src.extents[d][0] - grid.extents[d][0]) / h_dst
        start = int(round(offset))
        if abs(offset - start) > 1e-6 or start < 0 or start + src.points[d] > grid.points[d]:
            raise GridMismatchError(f"axis {d}: source cells do not align inside the target")
        slices.append(slice(start, start + src.points[d]))
    out = np.zeros((psi.spin_components,) + grid.shape, dtype=np.complex128)
    out[(slice(None),) + tuple(slices)] = psi.amplitudes
    return WaveFunction(grid, out, psi.time)


def gaussian(grid: Grid, center, sigma, momentum=None) -> WaveFunction:
    """Normalized Gaussian packet with position spread ``sigma`` per axis."""
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.dims,))
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (grid.dims,))
    k = np.zeros(grid.dims) if momentum is None else np.broadcast_to(
        np.asarray(momentum, dtype=float), (grid.dims,))

    def f(*xs):
        out = 1.0
        for x, c, s, kk in zip(xs, center, sigma, k):
            out = out * np.exp(-((x - c) ** 2) / (4 * s * s) + 1j * kk * x)
        return out

    return normalize(WaveFunction.from_function(grid, f))
