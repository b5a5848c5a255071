"""Sampling from |psi|^2 and testing ensembles against it."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NormalizationError, StatisticsError
from .grid import Configuration, Grid, WaveFunction, density
from .rng import generator, seed_sequence, spawn

TV_BINNED = "total_variation_binned"
KS_PER_AXIS = "ks_per_axis"
STATISTICS = (TV_BINNED, KS_PER_AXIS)
MIN_ENSEMBLE = 1000
MAX_BINS_PER_AXIS = 64
NORM_TOLERANCE = 1e-6


@dataclass
class SampleSet:
    """``positions`` has shape ``(n, D)``."""

    positions: np.ndarray
    seed: int
    source_time: float

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def configurations(self) -> list[Configuration]:
        return [Configuration(q, self.source_time) for q in self.positions]


@lru_cache(maxsize=8)
def _cell_cdf(psi: WaveFunction) -> np.ndarray:
    c = np.cumsum(density(psi).ravel())
    return c / c[-1]


def _seed_int(seed) -> int:
    ss = seed_sequence(seed)
    return int(ss.generate_state(1, np.uint64)[0])


def sample_equilibrium(psi: WaveFunction, n: int, seed) -> SampleSet:
    """Draw ``n`` i.i.d. configurations from the grid-discretized ``|psi|^2``.

    A cell is chosen by inverse CDF over the flattened grid and the point is
    placed uniformly inside it, so the samples follow the piecewise-constant
    density exactly.

    Raises
    ------
    NormalizationError
        If ``psi`` is not normalized to within 1e-6.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if abs(psi.norm() - 1.0) > NORM_TOLERANCE:
        raise NormalizationError(f"wave function norm is {psi.norm():.9g}, expected 1")
    rng = generator(seed)
    grid = psi.grid
    cdf = _cell_cdf(psi)
    cells = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), cdf.size - 1)
    idx = np.stack(np.unravel_index(cells, grid.shape), axis=1)
    jitter = rng.random((n, grid.dims))
    pos = grid.lower + (idx + jitter) * np.asarray(grid.spacing)
    return SampleSet(pos, _seed_int(seed), psi.time)


def default_bins(n: int, dims: int) -> int:
    """Bins per axis, ``ceil(n^(1/(D+2)))`` capped at 64."""
    return min(math.ceil(n ** (1.0 / (dims + 2)) - 1e-9), MAX_BINS_PER_AXIS)


def _marginal(rho: np.ndarray, d: int) -> np.ndarray:
    axes = tuple(a for a in range(rho.ndim) if a != d)
    m = rho.sum(axis=axes) if axes else rho
    return m / m.sum()


def _quantile_edges(grid: Grid, m: np.ndarray, d: int, bins: int) -> np.ndarray:
    """Interior edges at the marginal quantiles ``k / bins``; outer edges are infinite."""
    edges = grid.lower[d] + np.arange(grid.points[d] + 1) * grid.spacing[d]
    c = np.concatenate([[0.0], np.cumsum(m)])
    c[-1] = 1.0
    keep = np.concatenate([[True], np.diff(c) > 0])
    inner = np.interp(np.arange(1, bins) / bins, c[keep], edges[keep])
    return np.concatenate([[-np.inf], inner, [np.inf]])


def bin_masses(psi: WaveFunction, edges: list[np.ndarray]) -> np.ndarray:
    """Exact probability of each bin under the piecewise-constant ``|psi|^2``.

    Along each axis the cumulative cell mass is linear inside a cell, so
    interpolating it at the bin edges and differencing is exact.
    """
    rho = density(psi)
    p = rho / rho.sum()
    grid = psi.grid
    for d in range(grid.dims):
        c = np.cumsum(p, axis=d)
        c = np.concatenate([np.zeros_like(np.take(c, [0], axis=d)), c], axis=d)
        u = np.clip((edges[d] - grid.lower[d]) / grid.spacing[d], 0.0, grid.points[d])
        i = np.minimum(np.floor(u).astype(int), grid.points[d] - 1)
        f = (u - i).reshape((-1,) + (1,) * (grid.dims - d - 1))
        at = np.take(c, i, axis=d) * (1 - f) + np.take(c, i + 1, axis=d) * f
        p = np.diff(at, axis=d)
    return np.clip(p, 0.0, None)


def _counts(positions: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    idx = [np.clip(np.searchsorted(e, positions[:, d], side="right") - 1, 0, len(e) - 2)
           for d, e in enumerate(edges)]
    shape = tuple(len(e) - 1 for e in edges)
    return np.bincount(np.ravel_multi_index(idx, shape), minlength=int(np.prod(shape))).reshape(shape)


def tv_statistic(positions, edges, masses) -> float:
    """Total variation between binned empirical frequencies and reference bin masses."""
    positions = np.asarray(positions, float).reshape(len(positions), -1)
    return 0.5 * float(np.abs(_counts(positions, edges) / positions.shape[0] - masses).sum())


def ks_statistic(positions, cdfs) -> float:
    """Largest per-axis Kolmogorov-Smirnov distance; ``cdfs[d] = (knots, values)``."""
    positions = np.asarray(positions, float).reshape(len(positions), -1)
    worst = 0.0
    for d, (xk, ck) in enumerate(cdfs):
        x = np.sort(positions[:, d])
        n = x.size
        F = np.interp(x, xk, ck, left=0.0, right=1.0)
        i = np.arange(1, n + 1)
        worst = max(worst, float(np.max(i / n - F)), float(np.max(F - (i - 1) / n)))
    return worst


@dataclass
class EquivarianceReport:
    """Result of comparing an ensemble with ``|psi_t|^2``; ``passed`` iff ``value <= null_bound``."""

    statistic_kind: str
    value: float
    null_bound: float
    passed: bool
    n_samples: int
    n_bins: int
    bins_per_axis: int
    seed: int
    replicates: int
    confidence: float
    time: float
    edges: list = field(default_factory=list)
    null: np.ndarray | None = field(default=None, repr=False)
    reference: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("null", "reference")}
        d["pass"] = d.pop("passed")
        d["edges"] = [[float(x) for x in e] for e in self.edges]
        return d

    def arrays(self, positions) -> dict:
        """Everything needed to recompute the statistic and bound without the wave function."""
        out = {"positions": np.asarray(positions, float), "null": self.null}
        for d, e in enumerate(self.edges):
            out[f"edges_{d}"] = np.asarray(e, float)
        out.update(self.reference)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def equivariance_test(positions, psi_t: WaveFunction, kind: str = TV_BINNED,
                      n_bins: int | None = None, seed=0, replicates: int = 100,
                      confidence: float = 0.99) -> EquivarianceReport:
    """Test whether ``positions`` (shape ``(n, D)``) are distributed as ``|psi_t|^2``.

    Parameters
    ----------
    kind : {"total_variation_binned", "ks_per_axis"}
        Binned total variation over a product of marginal-quantile bins, or
        the largest one-dimensional Kolmogorov-Smirnov distance over axes.
    n_bins : int, optional
        Bins per axis; ``default_bins(n, D)`` if omitted.
    seed
        Seeds the Monte Carlo null: ``replicates`` ensembles of the same size
        drawn directly from ``|psi_t|^2``; the bound is their
        ``confidence`` quantile.

    Raises
    ------
    StatisticsError
        Fewer than 1000 positions, or more bins than ``n / 10``.
    """
    if kind not in STATISTICS:
        raise ValueError(f"unknown statistic {kind!r}")
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 1:
        pos = pos[:, None]
    n, D = pos.shape
    if D != psi_t.grid.dims:
        raise StatisticsError(f"positions have {D} coordinates, grid has {psi_t.grid.dims}")
    if n < MIN_ENSEMBLE:
        raise StatisticsError(f"need at least {MIN_ENSEMBLE} samples, got {n}")
    if not np.all(np.isfinite(pos)):
        raise StatisticsError("positions contain non-finite values")
    if abs(psi_t.norm() - 1.0) > NORM_TOLERANCE:
        raise NormalizationError(f"wave function norm is {psi_t.norm():.9g}, expected 1")
    b = default_bins(n, D) if n_bins is None else int(n_bins)
    if b < 1 or b ** D > n / 10:
        raise StatisticsError(f"{b}^{D} bins exceed n/10 = {n / 10:g}")

    rho = density(psi_t)
    grid = psi_t.grid
    marginals = [_marginal(rho, d) for d in range(D)]
    edges = [_quantile_edges(grid, marginals[d], d, b) for d in range(D)]
    if kind == TV_BINNED:
        masses = bin_masses(psi_t, edges)
        reference = {"masses": masses}

        def stat(x):
            return tv_statistic(x, edges, masses)
    else:
        reference = {}
        for d in range(D):
            reference[f"cdf_x_{d}"] = grid.lower[d] + np.arange(grid.points[d] + 1) * grid.spacing[d]
            reference[f"cdf_c_{d}"] = np.concatenate([[0.0], np.cumsum(marginals[d])])
        cdfs = [(reference[f"cdf_x_{d}"], reference[f"cdf_c_{d}"]) for d in range(D)]

        def stat(x):
            return ks_statistic(x, cdfs)

    value = stat(pos)
    null = np.array([stat(sample_equilibrium(psi_t, n, s).positions)
                     for s in spawn(seed, replicates)])
    bound = float(np.quantile(null, confidence))
    return EquivarianceReport(kind, value, bound, bool(value <= bound), n, b ** D, b,
                              _seed_int(seed), replicates, confidence, psi_t.time, edges,
                              null, reference)
