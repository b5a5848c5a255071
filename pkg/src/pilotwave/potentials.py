"""Real potentials on grids, including the time-windowed pointer coupling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf

from .grid import Grid, WaveFunction


def smooth_box(u, lo, hi, width):
    """Indicator of ``[lo, hi]`` convolved with a Gaussian of std ``width``."""
    if width <= 0:
        return ((u >= lo) & (u <= hi)).astype(float)
    s = np.sqrt(2.0) * width
    return 0.5 * (erf((u - lo) / s) - erf((u - hi) / s))


class Potential:
    """Base class.  ``field`` is the static multiplicative part."""

    kind = "abstract"

    def field(self, grid: Grid) -> np.ndarray | None:
        return None

    @property
    def couplings(self) -> tuple["PointerCoupling", ...]:
        return ()

    def describe(self) -> dict:
        return {"kind": self.kind}

    @property
    def terms(self) -> tuple["Potential", ...]:
        return (self,)

    def __add__(self, other: "Potential") -> "Potential":
        return CompositePotential(self.terms + other.terms)


@dataclass(frozen=True)
class FreePotential(Potential):
    kind = "free"


@dataclass(frozen=True)
class HarmonicPotential(Potential):
    """``V = sum_d m_d omega_d^2 (q_d - c_d)^2 / 2``; zero frequency leaves an axis free."""

    omega: tuple[float, ...]
    center: tuple[float, ...] | None = None
    mass: tuple[float, ...] | None = None
    kind = "harmonic"

    def field(self, grid):
        omega = np.broadcast_to(np.asarray(self.omega, float), (grid.dims,))
        center = np.zeros(grid.dims) if self.center is None else np.broadcast_to(
            np.asarray(self.center, float), (grid.dims,))
        mass = np.ones(grid.dims) if self.mass is None else np.broadcast_to(
            np.asarray(self.mass, float), (grid.dims,))
        v = np.zeros(grid.shape)
        for x, w, c, m in zip(grid.mesh(), omega, center, mass):
            v = v + 0.5 * m * w * w * (x - c) ** 2
        return v

    def describe(self):
        return {"kind": self.kind, "omega": list(np.atleast_1d(self.omega)),
                "center": None if self.center is None else list(self.center),
                "mass": None if self.mass is None else list(self.mass)}


@dataclass(frozen=True)
class DoubleWell(Potential):
    """``V = m omega^2 (|q_axis| - b)^2 / 2``: two harmonic wells at ``+-b``."""

    omega: float
    separation: float
    axis: int = 0
    mass: float = 1.0
    kind = "double_well"

    def field(self, grid):
        x = grid.mesh()[self.axis]
        v = 0.5 * self.mass * self.omega ** 2 * (np.abs(x) - self.separation) ** 2
        return np.broadcast_to(v, grid.shape).copy()

    def describe(self):
        return {"kind": self.kind, "omega": self.omega, "separation": self.separation,
                "axis": self.axis, "mass": self.mass}


@dataclass(frozen=True)
class BoxWalls(Potential):
    """Zero inside ``[lo_d, hi_d]`` on every axis, ``height`` outside.

    With the ``dirichlet_zero`` backend the walls normally coincide with the
    grid extents, so the field vanishes at every sample point.
    """

    walls: tuple[tuple[float, float], ...]
    height: float = 1e3
    kind = "box_walls"

    def field(self, grid):
        inside = np.ones(grid.shape, dtype=bool)
        for x, (lo, hi) in zip(grid.mesh(), self.walls):
            inside = inside & (x >= lo) & (x <= hi)
        return np.where(inside, 0.0, self.height)

    def describe(self):
        return {"kind": self.kind, "walls": [list(w) for w in self.walls], "height": self.height}


@dataclass(frozen=True)
class SlitBarrier(Potential):
    """A wall of finite height across ``normal_axis`` pierced by slits.

    Edges are Gaussian-smoothed; ``smoothing=None`` uses two grid spacings.
    """

    position: float
    thickness: float
    slit_centers: tuple[float, ...]
    slit_widths: tuple[float, ...]
    height: float = 1e3
    normal_axis: int = 0
    transverse_axis: int = 1
    smoothing: float | None = None
    kind = "slit_barrier"

    def field(self, grid):
        mesh = grid.mesh()
        xn, xt = mesh[self.normal_axis], mesh[self.transverse_axis]
        wn = 2 * grid.spacing[self.normal_axis] if self.smoothing is None else self.smoothing
        wt = 2 * grid.spacing[self.transverse_axis] if self.smoothing is None else self.smoothing
        wall = smooth_box(xn, self.position - self.thickness / 2,
                          self.position + self.thickness / 2, wn)
        openings = np.zeros_like(xt, dtype=float)
        for c, w in zip(self.slit_centers, self.slit_widths):
            openings = openings + smooth_box(xt, c - w / 2, c + w / 2, wt)
        v = self.height * wall * (1.0 - np.clip(openings, 0.0, 1.0))
        return np.broadcast_to(v, grid.shape).copy()

    def describe(self):
        return {"kind": self.kind, "position": self.position, "thickness": self.thickness,
                "slit_centers": list(self.slit_centers), "slit_widths": list(self.slit_widths),
                "height": self.height, "normal_axis": self.normal_axis,
                "transverse_axis": self.transverse_axis, "smoothing": self.smoothing}


@dataclass(frozen=True, eq=False)
class SampledPotential(Potential):
    values: np.ndarray
    label: str = "grid_sampled"
    kind = "grid_sampled"

    def field(self, grid):
        v = np.asarray(self.values, dtype=float)
        if v.shape != grid.shape:
            v = np.broadcast_to(v, grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled potential must be finite")
        return np.array(v)

    def describe(self):
        return {"kind": self.kind, "label": self.label}


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """Multiplication by a real function ``A`` of the subsystem coordinates.

    ``func`` receives the open mesh of the full grid and must not depend on
    the pointer coordinate.
    """

    func: Callable
    label: str = "local"

    def values(self, grid: Grid) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.func(*grid.mesh()), float), grid.shape)


@dataclass(frozen=True, eq=False)
class ProjectorOperator:
    """``A = |plus><plus| - |minus><minus|`` acting on one subsystem axis."""

    plus: WaveFunction
    minus: WaveFunction | None
    axis: int = 0
    label: str = "projector"


@dataclass(frozen=True, eq=False)
class PointerCoupling(Potential):
    """Von Neumann coupling ``g * A * y`` switched on during ``window``."""

    strength: float
    operator: LocalOperator | ProjectorOperator
    pointer_axis: int
    window: tuple[float, float]
    kind = "pointer_coupling"

    def __post_init__(self):
        t_on, t_off = self.window
        if not t_on < t_off:
            raise ValueError("pointer coupling window needs t_on < t_off")

    @property
    def couplings(self):
        return (self,)

    def overlap(self, t0: float, t1: float) -> float:
        """Signed length of ``[t0, t1]`` inside the active window."""
        lo, hi = min(t0, t1), max(t0, t1)
        length = max(0.0, min(hi, self.window[1]) - max(lo, self.window[0]))
        return length if t1 >= t0 else -length

    def pointer_field(self, grid: Grid) -> np.ndarray:
        return grid.mesh()[self.pointer_axis]

    def describe(self):
        return {"kind": self.kind, "strength": self.strength, "operator": self.operator.label,
                "pointer_axis": self.pointer_axis, "window": list(self.window)}


@dataclass(frozen=True)
class CompositePotential(Potential):
    parts: tuple[Potential, ...] = field(default_factory=tuple)
    kind = "composite"

    @property
    def terms(self):
        return self.parts

    def field(self, grid):
        total = None
        for p in self.parts:
            f = p.field(grid)
            if f is not None:
                total = f if total is None else total + f
        return total

    @property
    def couplings(self):
        return tuple(c for p in self.parts for c in p.couplings)

    def describe(self):
        return {"kind": self.kind, "terms": [p.describe() for p in self.parts]}
