"""Pass/fail checks as pure functions of stored arrays.

Scenarios and ``pilotwave verify`` call the same functions on the same
arrays, so verification reproduces every statistic bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .equilibrium import ks_statistic, tv_statistic

REGISTRY: dict[str, Callable] = {}
RELATIONS = {
    "<=": lambda s, b: s <= b,
    ">=": lambda s, b: s >= b,
    "==": lambda s, b: s == b,
    ">": lambda s, b: s > b,
    "in": lambda s, b: b[0] <= s <= b[1],
}


def register(name: str):
    def deco(fn):
        REGISTRY[name] = fn
        return fn
    return deco


@dataclass
class Check:
    """One named comparison ``statistic <relation> bound``."""

    name: str
    kind: str
    dataset: str
    params: dict
    statistic: float
    bound: float | list
    relation: str
    passed: bool
    criterion: str = ""
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "dataset": self.dataset,
                "params": self.params, "statistic": self.statistic, "bound": self.bound,
                "relation": self.relation, "pass": self.passed, "criterion": self.criterion,
                "detail": self.detail}


def _clean(x):
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    return float(x)


def evaluate(kind: str, arrays: dict, params: dict):
    """Run a registered check; returns ``(statistic, bound, relation, passed, detail)``."""
    if kind not in REGISTRY:
        raise KeyError(f"unknown check kind {kind!r}")
    out = REGISTRY[kind](arrays, **params)
    stat, bound, rel = out[:3]
    detail = out[3] if len(out) > 3 else {}
    stat, bound = _clean(stat), _clean(bound)
    ok = bool(RELATIONS[rel](stat, bound)) if not (isinstance(stat, float) and math.isnan(stat)) else False
    return stat, bound, rel, ok, detail


def make_check(name: str, kind: str, dataset: str, arrays: dict, criterion: str = "",
               **params) -> Check:
    stat, bound, rel, ok, detail = evaluate(kind, arrays, params)
    return Check(name, kind, dataset, params, stat, bound, rel, ok, criterion, detail)


# generic


@register("max_abs_le")
def _max_abs_le(a, key, bound):
    x = np.asarray(a[key], float)
    return float(np.nanmax(np.abs(x))) if x.size else 0.0, bound, "<="


@register("value_le")
def _value_le(a, key, bound):
    return float(np.asarray(a[key]).reshape(-1)[0]), bound, "<="


@register("value_ge")
def _value_ge(a, key, bound):
    return float(np.asarray(a[key]).reshape(-1)[0]), bound, ">="


@register("value_in")
def _value_in(a, key, low, high):
    return float(np.asarray(a[key]).reshape(-1)[0]), [low, high], "in"


@register("min_ge")
def _min_ge(a, key, bound, mask=None):
    x = np.asarray(a[key], float)
    if mask is not None:
        x = x[np.asarray(a[mask], bool)]
    return float(np.min(x)) if x.size else float("nan"), bound, ">="


@register("count_zero")
def _count_zero(a, key):
    return int(np.count_nonzero(np.asarray(a[key]))), 0, "=="


@register("fraction_ge")
def _fraction_ge(a, key, bound, mask=None):
    x = np.asarray(a[key], bool)
    if mask is not None:
        x = x[np.asarray(a[mask], bool)]
    return float(np.mean(x)) if x.size else float("nan"), bound, ">="


@register("fraction_le")
def _fraction_le(a, key, bound, mask=None):
    x = np.asarray(a[key], bool)
    if mask is not None:
        x = x[np.asarray(a[mask], bool)]
    return float(np.mean(x)) if x.size else 0.0, bound, "<="


@register("binomial_within")
def _binomial_within(a, key, p0, nsigma=3.0, mask=None):
    """``|k/n - p0| <= nsigma sqrt(p0 (1 - p0) / n)``; exact equality when ``p0`` is 0 or 1."""
    x = np.asarray(a[key], bool)
    if mask is not None:
        x = x[np.asarray(a[mask], bool)]
    n = x.size
    freq = float(np.mean(x))
    bound = nsigma * math.sqrt(p0 * (1 - p0) / n)
    return abs(freq - p0), bound, "<=", {"frequency": freq, "n": n, "p0": p0}


@register("equivariance_tv")
def _equivariance_tv(a, confidence=0.99):
    D = a["positions"].shape[1] if a["positions"].ndim == 2 else 1
    edges = [a[f"edges_{d}"] for d in range(D)]
    stat = tv_statistic(a["positions"], edges, a["masses"])
    return stat, float(np.quantile(a["null"], confidence)), "<="


@register("equivariance_ks")
def _equivariance_ks(a, confidence=0.99):
    D = a["positions"].shape[1] if a["positions"].ndim == 2 else 1
    cdfs = [(a[f"cdf_x_{d}"], a[f"cdf_c_{d}"]) for d in range(D)]
    stat = ks_statistic(a["positions"], cdfs)
    return stat, float(np.quantile(a["null"], confidence)), "<="


# scenario specific


def gaussian_width(t, sigma0=1.0, mass=1.0, hbar=1.0):
    return sigma0 * np.sqrt(1.0 + (hbar * np.asarray(t) / (2.0 * mass * sigma0 ** 2)) ** 2)


@register("gaussian_oracle")
def _gaussian_oracle(a, sigma0, bound, mass=1.0, hbar=1.0, center=0.0):
    """Largest ``|X(t) - c - (x0 - c) sigma(t)/sigma0|`` over trajectories and times."""
    t, X = a["times"], a["positions"][..., 0]
    s = gaussian_width(t, sigma0, mass, hbar) / sigma0
    x0 = X[0]
    err = np.abs(X - center - (x0 - center) * s[:, None])
    return float(np.nanmax(err)), bound, "<="


@register("variance_within")
def _variance_within(a, sigma0, nsigma=3.0, mass=1.0, hbar=1.0, index=-1):
    """Sample variance at a recorded time against ``sigma(t)^2`` within ``nsigma`` standard errors."""
    x = a["positions"][index, :, 0]
    x = x[np.isfinite(x)]
    n = x.size
    var = float(np.var(x, ddof=1))
    target = float(gaussian_width(a["times"][index], sigma0, mass, hbar) ** 2)
    se = target * math.sqrt(2.0 / (n - 1))
    return abs(var - target) / se, nsigma, "<=", {"variance": var, "target": target}


@register("sign_changes")
def _sign_changes(a, key, axis=0, exclude=None, pair=None):
    """Trajectories whose coordinate ``axis`` of ``key`` changes sign.

    With ``pair = (i, j)`` the watched quantity is ``q_i - q_j`` instead.
    """
    x = a[key][..., axis] if pair is None else a[key][..., pair[0]] - a[key][..., pair[1]]
    s = np.sign(x)
    first = s[0]
    flips = np.any((s != first[None]) & np.isfinite(x) & (s != 0), axis=0)
    if exclude is not None:
        flips = flips & ~np.asarray(a[exclude], bool)
    return int(np.count_nonzero(flips)), 0, "=="


@register("mirror_error")
def _mirror_error(a, key, other, bound):
    """Largest ``|Q(t) - P Q'(t)|`` where ``P`` swaps the two coordinates."""
    x, y = np.asarray(a[key], float), np.asarray(a[other], float)
    return float(np.nanmax(np.abs(x - y[..., ::-1]))), bound, "<="


@register("mismatch_count")
def _mismatch_count(a, left, right, mask=None):
    x, y = np.asarray(a[left]), np.asarray(a[right])
    bad = x != y
    if mask is not None:
        bad = bad & np.asarray(a[mask], bool)
    return int(np.count_nonzero(bad)), 0, "=="


@register("ratio_in")
def _ratio_in(a, num, den, low, high):
    r = float(np.asarray(a[num]).reshape(-1)[0] / np.asarray(a[den]).reshape(-1)[0])
    return r, [low, high], "in"


@register("visibility_le")
def _visibility_le(a, key, window, bound):
    """``(max - min)/(max + min)`` of a profile inside the index window ``[lo, hi]``."""
    prof = np.asarray(a[key], float)
    w = np.asarray(a[window]).astype(int)
    seg = prof[w[0]:w[1] + 1]
    return float((seg.max() - seg.min()) / (seg.max() + seg.min())), bound, "<="


@register("visibility_ge")
def _visibility_ge(a, key, window, bound):
    stat = _visibility_le(a, key, window, bound)[0]
    return stat, bound, ">="


@register("min_gap_positive")
def _min_gap_positive(a, key, i=0, j=1):
    """Smallest ``|Q_i - Q_j|`` seen along all trajectories; must stay positive."""
    x = a[key]
    gap = np.abs(x[..., i] - x[..., j])
    return float(np.nanmin(gap)), 0.0, ">", {}



@register("oscillation_frequency")
def _oscillation_frequency(a, omega, rel_tol, key="mean_x"):
    """Least-squares fit of ``c + A cos(w t + phi)`` to ``key``; relative error of ``w``."""
    from scipy.optimize import curve_fit

    t, y = np.asarray(a["times"], float), np.asarray(a[key], float)

    def model(t, c, amp, w, phi):
        return c + amp * np.cos(w * t + phi)

    p0 = [float(np.mean(y)), float(np.ptp(y)) / 2, omega, 0.0]
    (c, amp, w, phi), _ = curve_fit(model, t, y, p0=p0, maxfev=10000)
    return abs(abs(w) - omega) / omega, rel_tol, "<=", {"fitted": abs(float(w))}
