"""Periodic grid on [-L, L), Fourier transforms, multipliers and norms.

Transform convention: f_hat(xi) = int f(x) exp(-i xi x) dx, discretised by the
rectangle rule; the inverse carries the 1/(2 pi). With it, -d^3/dx^3 has
symbol i xi^3 and the Airy group U(t) has symbol exp(i t xi^3).

The Nyquist bin is labelled with frequency 0 so that the frequency set is
symmetric. Every real even symbol then maps real data to real data.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .bumps import smooth_step, smooth_step_integral
from .errors import BoundaryMassError, DomainError, StructuralError

_MOD = "spectral_core"


@dataclass(frozen=True)
class Grid:
    num_points: int
    half_length: float

    def __post_init__(self):
        n = self.num_points
        if n < 4 or n & (n - 1):
            raise StructuralError(f"num_points={n} is not a power of two >= 4",
                                  module=_MOD, operation="Grid")
        if not self.half_length > 0:
            raise StructuralError("half_length must be positive", module=_MOD, operation="Grid")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.num_points

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.num_points)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """xi_k = pi k / L in FFT order, Nyquist bin set to 0."""
        k = np.fft.fftfreq(self.num_points, d=1.0 / self.num_points)
        k[self.num_points // 2] = 0.0
        return np.pi * k / self.half_length

    @cached_property
    def _sign(self) -> np.ndarray:
        return np.where(np.arange(self.num_points) % 2 == 0, 1.0, -1.0)

    @property
    def nyquist_index(self) -> int:
        return self.num_points // 2

    @property
    def dxi(self) -> float:
        return np.pi / self.half_length

    @property
    def xi_max(self) -> float:
        return np.pi * (self.num_points // 2 - 1) / self.half_length

    def dual(self) -> "Grid":
        """Grid whose nodes are the (fftshifted) frequencies of this grid."""
        return Grid(self.num_points, np.pi * self.num_points / (2.0 * self.half_length))

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.num_points * factor, self.half_length)

    def widened(self, factor: int = 2) -> "Grid":
        return Grid(self.num_points * factor, self.half_length * factor)


class Space(enum.Enum):
    PHYSICAL = "physical"
    FREQUENCY = "frequency"


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray
    space: Space = Space.PHYSICAL

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.num_points,):
            raise StructuralError(
                f"values have shape {vals.shape}, grid expects ({self.grid.num_points},)",
                module=_MOD, operation="Field")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, fn(grid.x))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values, self.space)

    def physical(self) -> "Field":
        return self if self.space is Space.PHYSICAL else inverse_transform(self)

    def frequency(self) -> "Field":
        return self if self.space is Space.FREQUENCY else transform(self)

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return self.physical().with_values(self.physical().values + other.physical().values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return self.physical().with_values(self.physical().values - other.physical().values)

    def __mul__(self, other):
        if isinstance(other, Field):
            _same_grid(self, other)
            return self.physical().with_values(self.physical().values * other.physical().values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def shifted(self, nodes: int) -> "Field":
        """Translate by a whole number of grid nodes (periodic)."""
        return self.physical().with_values(np.roll(self.physical().values, nodes))


def _same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise StructuralError(f"grid mismatch: {a.grid} vs {b.grid}", module=_MOD, operation="combine")


def transform(f: Field) -> Field:
    if f.space is not Space.PHYSICAL:
        raise StructuralError("transform expects a physical-space field", module=_MOD, operation="transform")
    g = f.grid
    return Field(g, g.spacing * g._sign * np.fft.fft(f.values), Space.FREQUENCY)


def inverse_transform(f: Field) -> Field:
    if f.space is not Space.FREQUENCY:
        raise StructuralError("inverse_transform expects a frequency-space field",
                              module=_MOD, operation="transform")
    g = f.grid
    return Field(g, np.fft.ifft(g._sign * f.values) / g.spacing, Space.PHYSICAL)


@dataclass(frozen=True)
class Multiplier:
    symbol: Callable[[np.ndarray], np.ndarray]
    label: str = "m"

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        return np.asarray(self.symbol(xi))

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        a, b = self.symbol, other.symbol
        return Multiplier(lambda xi: a(xi) * b(xi), f"{self.label}*{other.label}")

    def on(self, grid: Grid) -> np.ndarray:
        vals = self(grid.frequencies) * np.ones(grid.num_points)
        bad = ~np.isfinite(vals)
        if bad.any():
            xi = grid.frequencies[np.argmax(bad)]
            raise DomainError(f"symbol {self.label} is not finite at xi={xi!r}",
                              module=_MOD, operation="apply_multiplier")
        return vals


def frac_derivative(alpha: float) -> Multiplier:
    """D^alpha with symbol |xi|^alpha; value at 0 is 0 for alpha > 0, 1 for alpha = 0."""
    if alpha == 0:
        return Multiplier(lambda xi: np.ones_like(xi, dtype=float), "D^0")

    def sym(xi):
        a = np.abs(xi)
        return np.where(a > 0, a, 1.0) ** alpha * (a > 0)

    return Multiplier(sym, f"D^{alpha:g}")


def bessel(s: float) -> Multiplier:
    return Multiplier(lambda xi: (1.0 + xi * xi) ** (0.5 * s), f"bessel^{s:g}")


def airy(t: float) -> Multiplier:
    return Multiplier(lambda xi: np.exp(1j * t * xi ** 3), f"airy^{t:g}")


def derivative(order: int = 1) -> Multiplier:
    return Multiplier(lambda xi: (1j * xi) ** order, f"d^{order}")


def apply_multiplier(m: Multiplier, f: Field) -> Field:
    hat = f.frequency()
    out = Field(f.grid, m.on(f.grid) * hat.values, Space.FREQUENCY)
    return out if f.space is Space.FREQUENCY else inverse_transform(out)


def airy_group(t: float, f: Field) -> Field:
    return apply_multiplier(airy(t), f)


def diff(f: Field, order: int = 1) -> Field:
    return apply_multiplier(derivative(order), f)


class WeightKind(enum.Enum):
    ABS_POW = "abs_pow"
    JAPANESE_POW = "japanese_pow"
    TRUNCATED_JAPANESE = "truncated_japanese"


# Profile of the truncated weight: identity up to _KNEE, flat (value 2) after _FLAT.
_KNEE, _FLAT = 1.2, 2.8


def _truncation_profile(u: np.ndarray) -> np.ndarray:
    """Concave R with R(u) = u on [0, 1.2], R = 2 on [2.8, inf), smooth between."""
    width = _FLAT - _KNEE
    v = (np.minimum(u, _FLAT) - _KNEE) / width - 1.0  # in [-1, 0] across the transition
    ramp = (np.minimum(u, _FLAT) - _KNEE) - width * smooth_step_integral(v)
    return np.where(u <= _KNEE, u, _KNEE + ramp)


@dataclass(frozen=True)
class WeightFunction:
    """Even nonnegative weight. ``TruncatedJapanese`` is the smooth cutoff phi_N.

    ``truncated_japanese(s, n)`` equals <x>^(2s) for |x| <= n and (2n)^(2s) for
    |x| > 3n. It is monotone in |x| and nondecreasing in n; n must be >= 1.51.
    """

    kind: WeightKind
    s: float
    n_cut: float | None = None

    def __post_init__(self):
        if self.s < 0:
            raise DomainError("weight exponent must be nonnegative", module=_MOD, operation="WeightFunction")
        if self.kind is WeightKind.TRUNCATED_JAPANESE:
            if self.n_cut is None or self.n_cut < 1.0 / np.sqrt(_KNEE ** 2 - 1.0):
                raise DomainError("truncated weight needs n_cut >= 1.51",
                                  module=_MOD, operation="WeightFunction")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind is WeightKind.ABS_POW:
            return np.abs(x) ** self.s
        if self.kind is WeightKind.JAPANESE_POW:
            return (1.0 + x * x) ** (0.5 * self.s)
        n = self.n_cut
        return (n * _truncation_profile(np.sqrt(1.0 + x * x) / n)) ** (2.0 * self.s)


def abs_pow(s: float) -> WeightFunction:
    return WeightFunction(WeightKind.ABS_POW, s)


def japanese_pow(s: float) -> WeightFunction:
    return WeightFunction(WeightKind.JAPANESE_POW, s)


def truncated_japanese(s: float, n_cut: float) -> WeightFunction:
    return WeightFunction(WeightKind.TRUNCATED_JAPANESE, s, n_cut)


def l2_norm(f: Field) -> float:
    f = f.physical()
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.spacing))


def lp_norm(f: Field | np.ndarray, p: float, spacing: float | None = None) -> float:
    """Rectangle-rule L^p norm; p = inf gives the grid maximum."""
    if isinstance(f, Field):
        spacing, vals = f.grid.spacing, np.abs(f.physical().values)
    else:
        vals = np.abs(np.asarray(f))
    if np.isinf(p):
        return float(vals.max(initial=0.0))
    return float((np.sum(vals ** p) * spacing) ** (1.0 / p))


def frequency_l2_norm(f: Field) -> float:
    """L^2 norm of f_hat in xi with measure d xi (no 2 pi)."""
    hat = f.frequency()
    return float(np.sqrt(np.sum(np.abs(hat.values) ** 2) * f.grid.dxi))


def weighted_l2(w: WeightFunction, f: Field) -> float:
    f = f.physical()
    return float(np.sqrt(np.sum(w(f.grid.x) * np.abs(f.values) ** 2) * f.grid.spacing))


def sobolev_norm(s: float, f: Field) -> float:
    return l2_norm(apply_multiplier(bessel(s), f))


def boundary_mass(f: Field, fraction: float = 0.8) -> float:
    """||f||_{L^2(|x| > fraction L)} / ||f||_2 (0 for the zero field)."""
    f = f.physical()
    total = l2_norm(f)
    if total == 0:
        return 0.0
    edge = np.abs(f.grid.x) > fraction * f.grid.half_length
    return float(np.sqrt(np.sum(np.abs(f.values[edge]) ** 2) * f.grid.spacing) / total)


def check_boundary_mass(f: Field, tol: float = 1e-6, *, operation: str = "boundary_guard") -> float:
    import warnings

    mass = boundary_mass(f)
    if mass > tol:
        warnings.warn(f"boundary mass {mass:.3e} exceeds {tol:.0e}", RuntimeWarning, stacklevel=2)
        raise BoundaryMassError(f"boundary mass {mass:.3e} exceeds {tol:.0e}",
                                module=_MOD, operation=operation)
    return mass
