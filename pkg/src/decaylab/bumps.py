"""Smooth cutoffs built from exp(-1/(1-y^2)).

Everything dyadic in the package (band projections, truncated weights,
the bump of the oscillatory integrals) is assembled from ``smooth_step``.
"""

from __future__ import annotations

import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(200)


def _chi(y):
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) < 1.0
    out = np.zeros_like(y)
    out[inside] = np.exp(-1.0 / (1.0 - y[inside] ** 2))
    return out


_BLOCK = 4096


def _gl_on(upper: np.ndarray, integrand) -> np.ndarray:
    """Integrate ``integrand`` over [-1, upper] for each entry of ``upper``."""
    out = np.empty(upper.shape)
    flat_u, flat_o = upper.ravel(), out.ravel()
    for i in range(0, flat_u.size, _BLOCK):
        b = flat_u[i:i + _BLOCK]
        half = 0.5 * (b + 1.0)
        s = half[:, None] * (_NODES[None, :] + 1.0) - 1.0
        flat_o[i:i + _BLOCK] = half * (integrand(s) * _WEIGHTS).sum(axis=1)
    return flat_o.reshape(upper.shape)


_Z = float(_gl_on(np.array([1.0]), _chi)[0])


def cumulative_bump(y) -> np.ndarray:
    """Normalised integral of chi over [-1, y]; 0 below -1, 1 above 1."""
    y = np.clip(np.asarray(y, dtype=float), -1.0, 1.0)
    return _gl_on(y, _chi) / _Z


def _cumulative_bump_integral(y) -> np.ndarray:
    """Integral of cumulative_bump over [-1, y] for y in [-1, 1]."""
    y = np.clip(np.asarray(y, dtype=float), -1.0, 1.0)
    moment = _gl_on(y, lambda s: s * _chi(s)) / _Z
    return y * cumulative_bump(y) - moment


def smooth_step(v) -> np.ndarray:
    """C-infinity step: 0 for v <= -1, 1 for v >= 0, symmetric about -1/2."""
    return cumulative_bump(2.0 * np.asarray(v, dtype=float) + 1.0)


def smooth_step_integral(v) -> np.ndarray:
    """Integral of smooth_step from -1 to v (v may exceed 0)."""
    v = np.asarray(v, dtype=float)
    inner = 0.5 * _cumulative_bump_integral(2.0 * np.minimum(v, 0.0) + 1.0)
    return inner + np.maximum(v, 0.0)


def dyadic_bump(u) -> np.ndarray:
    """eta(u) = step(log2 u) - step(log2 u - 1); support (1/2, 2), eta(1) = 1.

    Dyadic dilates telescope: sum_N eta(u / 2^N) = 1 for every u > 0.
    """
    u = np.asarray(u, dtype=float)
    pos = u > 0
    out = np.zeros_like(u)
    lg = np.log2(u[pos])
    out[pos] = smooth_step(lg) - smooth_step(lg - 1.0)
    return out


def low_pass(u, shift: float = 0.0) -> np.ndarray:
    """1 - step(log2|u| - shift): equals 1 on |u| <= 2^(shift-1), 0 beyond 2^shift."""
    u = np.abs(np.asarray(u, dtype=float))
    out = np.ones_like(u)
    pos = u > 0
    out[pos] = 1.0 - smooth_step(np.log2(u[pos]) - shift)
    return out
