"""Littlewood-Paley bands, sequence norms, maximal function, product-rule terms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .bumps import dyadic_bump, low_pass, smooth_step
from .errors import BandRangeError, DomainError, StructuralError
from .spectral_core import (Field, Grid, Multiplier, Space, apply_multiplier, frac_derivative,
                            lp_norm)

_MOD = "dyadic_lp"


def band_symbol(n: int, xi: np.ndarray, beta: float = 0.0) -> np.ndarray:
    """|xi/2^n|^beta * (eta(xi/2^n) + eta(-xi/2^n))."""
    u = np.abs(xi) / 2.0 ** n
    out = dyadic_bump(u)
    return out * u ** beta if beta else out


@dataclass(frozen=True)
class DyadicPartition:
    grid: Grid

    @cached_property
    def n_min(self) -> int:
        return math.ceil(2.0 - math.log2(self.grid.half_length / math.pi))

    @cached_property
    def n_max(self) -> int:
        return math.floor(math.log2(self.grid.xi_max) - 1.0)

    def __post_init__(self):
        if self.n_max < self.n_min:
            raise BandRangeError("grid resolves no dyadic band", module=_MOD, operation="DyadicPartition")
        xi = np.abs(self.grid.frequencies)
        annulus = (xi >= 2.0 ** self.n_min) & (xi <= 2.0 ** self.n_max)
        total = sum(band_symbol(n, xi[annulus]) for n in self.bands)
        residual = float(np.max(np.abs(total - 1.0), initial=0.0))
        assert residual <= 1e-12, f"partition of unity residual {residual:.2e}"

    @property
    def bands(self) -> range:
        return range(self.n_min, self.n_max + 1)

    def _check(self, n: int, op: str) -> None:
        if not self.n_min <= n <= self.n_max:
            raise BandRangeError(f"band {n} outside resolvable range [{self.n_min}, {self.n_max}]",
                                 module=_MOD, operation=op)

    def multiplier(self, n: int, beta: float = 0.0) -> Multiplier:
        return Multiplier(lambda xi: band_symbol(n, xi, beta), f"Q_{n}^{beta:g}")

    def project(self, n: int, f: Field) -> Field:
        self._check(n, "project")
        return apply_multiplier(self.multiplier(n), f)

    def project_weighted(self, n: int, beta: float, f: Field) -> Field:
        if beta < 0:
            raise DomainError("beta must be nonnegative", module=_MOD, operation="project_weighted")
        self._check(n, "project_weighted")
        return apply_multiplier(self.multiplier(n, beta), f)

    def low_tail(self, f: Field) -> Field:
        """Everything below band n_min, zero frequency included."""
        def sym(xi):
            a = np.abs(xi)
            out = np.ones_like(a)
            pos = a > 0
            out[pos] = 1.0 - smooth_step(np.log2(a[pos]) - self.n_min)
            return out
        return apply_multiplier(Multiplier(sym, "low_tail"), f)

    def high_tail(self, f: Field) -> Field:
        def sym(xi):
            a = np.abs(xi)
            out = np.zeros_like(a)
            pos = a > 0
            out[pos] = smooth_step(np.log2(a[pos]) - self.n_max - 1.0)
            return out
        return apply_multiplier(Multiplier(sym, "high_tail"), f)

    def decompose(self, f: Field, beta: float = 0.0, tails: bool = False) -> list[Field]:
        """Band pieces n_min..n_max, optionally bracketed by the two tail remainders."""
        pieces = [apply_multiplier(self.multiplier(n, beta), f) for n in self.bands]
        if tails:
            pieces = [self.low_tail(f), *pieces, self.high_tail(f)]
        return pieces


def seq_norm(p: float, outer: str, bands: Sequence[Field]) -> float:
    """Pointwise l^p over the band index followed by the L^2 or L^inf norm in x."""
    if not bands:
        raise DomainError("empty band list", module=_MOD, operation="seq_norm")
    grid = bands[0].grid
    if any(b.grid != grid for b in bands):
        raise StructuralError("bands live on different grids", module=_MOD, operation="seq_norm")
    stack = np.abs(np.array([b.physical().values for b in bands]))
    if np.isinf(p):
        pointwise = stack.max(axis=0)
    else:
        pointwise = (stack ** p).sum(axis=0) ** (1.0 / p)
    if outer == "Linf":
        return float(pointwise.max())
    if outer == "L2":
        return float(np.sqrt(np.sum(pointwise ** 2) * grid.spacing))
    raise DomainError(f"unknown outer norm {outer!r}", module=_MOD, operation="seq_norm")


def maximal(f: Field) -> Field:
    """Centred Hardy-Littlewood maximal function over dyadic radii 2^m * spacing.

    Windows wrap around the periodic box. Restricting to dyadic radii loses at
    most a factor 2 against the full maximal function.
    """
    if f.space is not Space.PHYSICAL:
        raise StructuralError("maximal expects a physical-space field", module=_MOD, operation="maximal")
    a = np.abs(f.values)
    n = a.size
    best = a.copy()
    padded = np.concatenate([a, a, a])
    csum = np.concatenate([[0.0], np.cumsum(padded)])
    idx = np.arange(n) + n
    r = 1
    while 2 * r + 1 <= n:
        avg = (csum[idx + r + 1] - csum[idx - r]) / (2 * r + 1)
        np.maximum(best, avg, out=best)
        r *= 2
    return Field(f.grid, best)


@dataclass(frozen=True)
class AppendixOperatorFamily:
    """Symbols used in the product-rule decomposition.

    ``p`` is the low-pass of P_N = sum_{j <= N-3} Q_j, ``p_tilde`` is 1 on
    [-100, 100], ``eta_tilde`` is 1 on [1/4, 4] with support in [1/8, 8].
    """

    alpha1: float = 0.0
    alpha2: float = 0.125

    def __post_init__(self):
        if not (0 <= self.alpha1 <= 1 and 0 <= self.alpha2 <= 1 and self.alpha <= 1):
            raise DomainError("alpha1, alpha2 must lie in [0, 1] with sum <= 1",
                              module=_MOD, operation="AppendixOperatorFamily")

    @property
    def alpha(self) -> float:
        return self.alpha1 + self.alpha2

    def _aj(self, j: int) -> float:
        return self.alpha1 if j == 1 else self.alpha2

    @staticmethod
    def p(x):
        # sum over j <= -3 of the band symbols telescopes to this
        return low_pass(x, shift=-2.0)

    @staticmethod
    def p_tilde(x):
        return low_pass(x, shift=math.log2(100.0) + 1.0)

    @staticmethod
    def eta_tilde(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        lg = np.log2(x[pos])
        out[pos] = smooth_step(lg + 2.0) - smooth_step(lg - 3.0)
        return out

    @staticmethod
    def eta(x):
        return dyadic_bump(np.abs(x))

    def psi(self, j: int, x):
        return np.abs(x) ** self._aj(j) * self.p(x)

    def eta_j(self, j: int, x):
        a = np.abs(np.asarray(x, dtype=float))
        out = np.zeros_like(a)
        pos = a > 0
        out[pos] = self.eta(a[pos]) / a[pos] ** self._aj(j)
        return out

    def eta3(self, x):
        return np.abs(x) ** self.alpha * self.p_tilde(x)

    def eta4(self, x):
        return np.abs(x) ** self.alpha1 * self.eta(x)

    def eta5(self, x):
        return np.abs(x) ** self.alpha2 * self.eta(x)

    def eta_nu(self, nu: float, j: int, x):
        return np.exp(1j * nu * np.asarray(x)) * self.eta_j(j, x)

    def eta_mu(self, mu: float, j: int, x):
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        out = np.zeros_like(x)
        pos = a > 0
        out[pos] = x[pos] * a[pos] ** (-self._aj(j)) * self.p(x[pos])
        return np.exp(1j * mu * x) * out

    def scaled(self, symbol, k: int, label: str) -> Multiplier:
        return Multiplier(lambda xi: symbol(xi / 2.0 ** k), f"{label}_{k}")


def appendix_term_bounds(fam: AppendixOperatorFamily, f: Field, g: Field, p: float,
                         partition: DyadicPartition | None = None) -> dict:
    """Evaluate the four product-rule term types and their claimed bound.

    Bound: ||f||_p * ||Q_k D^alpha g||_{L^inf l^2}; term 1 is also measured against
    ||M f||_p * ||Q_k D^alpha g||_{L^inf l^2}.
    """
    if not 1 < p < np.inf:
        raise DomainError("need 1 < p < inf", module=_MOD, operation="appendix_term_bounds")
    part = partition or DyadicPartition(f.grid)
    dg = apply_multiplier(frac_derivative(fam.alpha), g)
    q_f = part.decompose(f)
    q_dg = part.decompose(dg)
    psi_f, psi_dg = [], []
    for k in part.bands:
        psi_f.append(apply_multiplier(fam.scaled(lambda x: fam.psi(1, x), k, "psi1"), f))
        psi_dg.append(apply_multiplier(fam.scaled(lambda x: fam.psi(2, x), k, "psi2"), dg))

    def outer_sum(pairs):
        acc = np.zeros(f.grid.num_points, dtype=complex)
        for k, (a, b) in zip(part.bands, pairs):
            acc += part.project(k, a * b).values
        return Field(f.grid, acc)

    terms = {
        "type1": outer_sum(zip(q_f, q_dg)),
        "type2": outer_sum(zip(psi_f, q_dg)),
        "type3": outer_sum(zip(q_f, psi_dg)),
        "type4": Field(f.grid, sum((a * b).values for a, b in zip(q_f, q_dg))),
    }
    sq_dg = seq_norm(2, "Linf", q_dg)
    bound = lp_norm(f, p) * sq_dg
    maximal_bound = lp_norm(maximal(f.physical()), p) * sq_dg
    norms = {name: lp_norm(t, p) for name, t in terms.items()}
    ratios = {name: (v / bound if bound > 0 else 0.0) for name, v in norms.items()}
    ratios["type1_maximal"] = norms["type1"] / maximal_bound if maximal_bound > 0 else 0.0
    return {"p": p, "norms": norms, "bound": bound, "maximal_bound": maximal_bound, "ratios": ratios}
