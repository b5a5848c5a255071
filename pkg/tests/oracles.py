"""Closed-form reference results, independent of the package's grids and solvers.

Natural units hbar = m = 1 unless stated.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq
from scipy.special import fresnel


def gaussian_width(t, sigma0=1.0, mass=1.0, hbar=1.0):
    """Position spread of a free Gaussian packet."""
    return sigma0 * np.sqrt(1.0 + (hbar * np.asarray(t) / (2 * mass * sigma0 ** 2)) ** 2)


def free_gaussian(x, t, sigma0=1.0, x0=0.0, k0=0.0):
    """Exact free evolution of a normalized Gaussian packet (hbar = m = 1)."""
    a = 1.0 + 1j * t / (2 * sigma0 ** 2)
    norm = (2 * np.pi * sigma0 ** 2) ** -0.25 / np.sqrt(a)
    xc = x - x0 - k0 * t
    return norm * np.exp(-xc ** 2 / (4 * sigma0 ** 2 * a) + 1j * k0 * (x - x0) - 0.5j * k0 ** 2 * t) \
        * np.exp(1j * k0 * x0)


def truncated_plane_wave(x, t, k, a, b):
    """Free evolution of ``exp(i k x)`` restricted to ``[a, b]``, via Fresnel integrals."""
    x = np.asarray(x, float)
    scale = np.sqrt(np.pi * t)
    sb, ca = fresnel((b - x + k * t) / scale)
    sa, cb = fresnel((a - x + k * t) / scale)
    F = (ca + 1j * sb) - (cb + 1j * sa)
    return np.exp(1j * (k * x - 0.5 * k * k * t)) * F / np.sqrt(2j)


def released_box(x, t, n, L=1.0):
    """Box eigenstate ``sqrt(2/L) sin(n pi (x + L/2) / L)`` on ``[-L/2, L/2]`` after free flight ``t``."""
    k = n * np.pi / L
    ph = np.exp(0.5j * n * np.pi)
    plus = truncated_plane_wave(x, t, k, -L / 2, L / 2)
    minus = truncated_plane_wave(x, t, -k, -L / 2, L / 2)
    return np.sqrt(2 / L) * (ph * plus - minus / ph) / 2j


def box_cdf(x, n, L=1.0):
    u = (np.asarray(x) + L / 2) / L
    return u - np.sin(2 * n * np.pi * u) / (2 * n * np.pi)


def box_quantile(p, n, L=1.0):
    return brentq(lambda x: box_cdf(x, n, L) - p, -L / 2, L / 2, xtol=1e-14)


def density_quantiles(x, rho, probs):
    """Quantiles of a density sampled on a fine uniform mesh (trapezoid CDF, linear inverse)."""
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(x))])
    cdf /= cdf[-1]
    return np.interp(probs, cdf, x)


def two_level_velocity(x, t, c1, c2, n1=1, n2=2, L=1.0):
    """Velocity for a real-coefficient superposition of two box eigenstates."""
    def phi(n):
        u = (x + L / 2) / L
        return np.sqrt(2 / L) * np.sin(n * np.pi * u), np.sqrt(2 / L) * n * np.pi / L * np.cos(n * np.pi * u)

    (f1, d1), (f2, d2) = phi(n1), phi(n2)
    e1, e2 = (n1 * np.pi / L) ** 2 / 2, (n2 * np.pi / L) ** 2 / 2
    psi = c1 * f1 * np.exp(-1j * e1 * t) + c2 * f2 * np.exp(-1j * e2 * t)
    dpsi = c1 * d1 * np.exp(-1j * e1 * t) + c2 * d2 * np.exp(-1j * e2 * t)
    return np.imag(np.conj(psi) * dpsi) / np.abs(psi) ** 2
