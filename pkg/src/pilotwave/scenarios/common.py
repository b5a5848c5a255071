"""Helpers shared by the scenario drivers."""
from __future__ import annotations

import numpy as np

from ..checks import make_check
from ..equilibrium import TV_BINNED, equivariance_test
from ..grid import WaveFunction
from ..guidance import ABORTED_NODE
from ..report import ScenarioReport
from ..rng import child

# seed paths below the scenario seed
SAMPLE, NULL, EXTRA = 0, 1, 2


def add_equivariance(report: ScenarioReport, label: str, positions, psi: WaveFunction,
                     seed, index: int, criterion: str = "AC1") -> None:
    """Equivariance test of ``positions`` against ``psi``, stored as dataset ``equiv_<label>``."""
    pos = np.asarray(positions, float).reshape(len(positions), -1)
    pos = pos[np.all(np.isfinite(pos), axis=1)]
    rep = equivariance_test(pos, psi, TV_BINNED, seed=child(seed, NULL, index))
    name = f"equiv_{label}"
    report.datasets[name] = rep.arrays(pos)
    report.add(make_check(f"equivariance_{label}", "equivariance_tv", name,
                          report.datasets[name], criterion, confidence=rep.confidence))


def add_equivariance_frames(report: ScenarioReport, times, positions, frames: dict, seed,
                            criterion: str = "AC1", prefix: str = "t") -> None:
    """Test every recorded time against the matching frame in ``frames`` (time -> psi)."""
    for k, t in enumerate(times):
        psi = frames[round(float(t), 9)]
        add_equivariance(report, f"{prefix}{k:03d}", positions[k], psi, seed, k, criterion)


def add_node_check(report: ScenarioReport, status, dataset: str = "status",
                   criterion: str = "AC10", name: str = "node_abort_fraction") -> None:
    arrays = report.datasets.setdefault(dataset, {})
    arrays["aborted_node"] = np.asarray(status) == ABORTED_NODE
    arrays["status"] = np.asarray(status)
    report.add(make_check(name, "fraction_le", dataset, arrays, criterion,
                          key="aborted_node", bound=1e-3))


class FrameTap:
    """Pass frames through while keeping those at chosen times."""

    def __init__(self, frames, keep_every: int = 1):
        self.frames = frames
        self.keep_every = keep_every
        self.kept: dict[float, WaveFunction] = {}
        self.last = None

    def __iter__(self):
        for i, f in enumerate(self.frames):
            if i % self.keep_every == 0:
                self.kept[round(f.time, 9)] = f
            self.last = f
            yield f
        self.kept[round(self.last.time, 9)] = self.last
