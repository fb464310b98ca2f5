"""Fractional product-rule defects, a multiplier commutator, and the Bessel kernel.

Each inequality is turned into a computable (defect, bound, ratio) triple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import gamma, hyp1f1

from .dyadic_lp import DyadicPartition, seq_norm
from .errors import AccuracyError, DomainError
from .spectral_core import (Field, Grid, apply_multiplier, bessel, frac_derivative,
                            l2_norm, lp_norm)

_MOD = "frac_leibniz"


@dataclass
class LeibnizReport:
    alpha: float
    defect_norm: float
    bound_value: float
    ratio: float
    extra: dict = field(default_factory=dict)
    anomaly: bool = False


def _ratio(defect: float, bound: float) -> tuple[float, bool]:
    if bound > 0:
        return defect / bound, False
    # a zero bound with a nonzero defect can only come from truncation
    return 0.0, defect > 1e-13


def random_family(grid: Grid, count: int, seed: int, *, complex_valued: bool = False,
                  max_degree: int = 32, base_freq: float = 0.25, envelope: float = 3.0) -> list[Field]:
    """Trig polynomials of degree <= max_degree times a Gaussian envelope."""
    rng = np.random.default_rng(seed)
    x = grid.x
    out = []
    for _ in range(count):
        deg = int(rng.integers(1, max_degree + 1))
        j = np.arange(-deg, deg + 1)
        coef = (rng.standard_normal(j.size) + 1j * rng.standard_normal(j.size)) / (1.0 + np.abs(j))
        shift = rng.uniform(-envelope, envelope)
        poly = np.exp(1j * base_freq * np.outer(x, j)) @ coef
        vals = poly * np.exp(-0.5 * ((x - shift) / envelope) ** 2)
        out.append(Field(grid, vals if complex_valued else vals.real))
    return out


def leibniz_defect_two_term(f: Field, g: Field, alpha: float,
                            partition: DyadicPartition | None = None) -> LeibnizReport:
    """||D^a(fg) - g D^a f||_2 against ||Q_N D^a g||_{L^inf l^1} ||f||_2.

    The first-display bound (||Q_N D^a g||_{L^inf l^2} + ||D^a g||_inf) ||f||_2 is
    reported alongside. Band sums include the two tail remainders so that
    every frequency of D^a g is accounted for.
    """
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)", module=_MOD, operation="leibniz_defect_two_term")
    d = frac_derivative(alpha)
    fg = f * g
    defect = l2_norm(apply_multiplier(d, fg) - g * apply_multiplier(d, f))
    part = partition or DyadicPartition(f.grid)
    dg = apply_multiplier(d, g)
    bands = part.decompose(dg, tails=True)
    f2 = l2_norm(f)
    bound = seq_norm(1, "Linf", bands) * f2
    first = (seq_norm(2, "Linf", bands) + lp_norm(dg, np.inf)) * f2
    ratio, anomaly = _ratio(defect, bound)
    return LeibnizReport(alpha, defect, bound, ratio, anomaly=anomaly,
                         extra={"first_display_bound": first,
                                "first_display_ratio": defect / first if first > 0 else 0.0})


def leibniz_defect_three_term(f: Field, g: Field, alpha: float, alpha1: float, alpha2: float,
                              p: float, p1: float, p2: float) -> LeibnizReport:
    """||D^a(fg) - D^a(f) g - f D^a(g)||_p against ||D^{a1} g||_{p1} ||D^{a2} f||_{p2}."""
    op = "leibniz_defect_three_term"
    endpoint = np.isinf(p1) and math.isclose(alpha1, alpha) and math.isclose(p, p2)
    if not math.isclose(alpha, alpha1 + alpha2, abs_tol=1e-14):
        raise DomainError("need alpha = alpha1 + alpha2", module=_MOD, operation=op)
    if not math.isclose(1.0 / p, 1.0 / p1 + 1.0 / p2, abs_tol=1e-14):
        raise DomainError("need 1/p = 1/p1 + 1/p2", module=_MOD, operation=op)
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)", module=_MOD, operation=op)
    if not endpoint:
        if not (0 < alpha1 < 1 and 0 < alpha2 < 1):
            raise DomainError("alpha1, alpha2 must lie in (0, 1)", module=_MOD, operation=op)
        if not all(1 < q < np.inf for q in (p, p1, p2)):
            raise DomainError("exponents must lie in (1, inf)", module=_MOD, operation=op)
    d = frac_derivative(alpha)
    defect_field = apply_multiplier(d, f * g) - apply_multiplier(d, f) * g - f * apply_multiplier(d, g)
    defect = lp_norm(defect_field, p)
    bound = (lp_norm(apply_multiplier(frac_derivative(alpha1), g), p1)
             * lp_norm(apply_multiplier(frac_derivative(alpha2), f), p2))
    ratio, anomaly = _ratio(defect, bound)
    return LeibnizReport(alpha, defect, bound, ratio, anomaly=anomaly,
                         extra={"alpha1": alpha1, "alpha2": alpha2, "p": p, "p1": p1, "p2": p2})


def commutator_field(h: Field, order: float = 0.125, decay: float = -0.125) -> Field:
    """w D h - D(w h) where w = (1+v^2)^decay multiplies pointwise and D = |.|^order acts
    as a Fourier multiplier. The grid variable v plays the role of a frequency."""
    w = (1.0 + h.grid.x ** 2) ** decay
    d = frac_derivative(order)
    hp = h.physical()
    return Field(h.grid, w * apply_multiplier(d, hp).values) - apply_multiplier(d, hp * w)


def commutator_norm(h: Field) -> float:
    return l2_norm(commutator_field(h))


# Fourier transform of |xi|^(-1/4) is C0 |x|^(-3/4).
C0 = 2.0 * gamma(0.75) * math.sin(math.pi / 8.0)


def _smooth_remainder(xi: np.ndarray) -> np.ndarray:
    """(1+xi^2)^(-1/8) - |xi|^(-1/4) (1 - exp(-xi^2)(1+xi^2)), finite at 0.

    The two subtracted pieces have transforms known in closed form, which
    leaves a remainder whose transform is regular at x = 0.
    """
    a = np.abs(xi)
    out = np.empty_like(a)
    small = a < 1e-3
    big = ~small
    ab = a[big]
    out[big] = (1.0 + ab ** 2) ** -0.125 - ab ** -0.25 * (-np.expm1(-ab ** 2) - ab ** 2 * np.exp(-ab ** 2))
    s = a[small]
    # 1 - e^{-s^2}(1+s^2) = s^4/2 - s^6/3 + O(s^8)
    out[small] = (1.0 + s ** 2) ** -0.125 - s ** 3.75 * (0.5 - s ** 2 / 3.0)
    return out


def _subtracted_transform(x: np.ndarray) -> np.ndarray:
    """Transform of |xi|^(-1/4)(1 - e^{-xi^2}(1+xi^2)), x != 0."""
    ax = np.abs(x)
    z = -ax ** 2 / 4.0
    return C0 * ax ** -0.75 - gamma(0.375) * hyp1f1(0.375, 0.5, z) - gamma(1.375) * hyp1f1(1.375, 0.5, z)


@dataclass
class BesselKernel:
    """Transform k of (1+xi^2)^(-1/8), sampled via a box of half-width ``xi_box``.

    k = [closed-form transform of the subtracted singular part] + FFT[remainder];
    the FFT part is spline-interpolated for pointwise evaluation.
    """

    num_points: int = 2 ** 17
    xi_box: float = 1600.0
    decay_order_n: int = 2

    def __post_init__(self):
        n, box = self.num_points, self.xi_box
        dxi = 2.0 * box / n
        xi = -box + dxi * np.arange(n)
        weights = np.full(n, dxi)
        weights[0] *= 0.5  # -box endpoint; +box added below for the symmetric trapezoid
        vals = _smooth_remainder(xi) * weights
        xs_period = 2.0 * np.pi / dxi
        x = np.fft.fftshift(np.fft.fftfreq(n, d=dxi)) * 2.0 * np.pi
        # sum_j r(xi_j) w_j exp(-i x xi_j), plus the half-weighted +box node
        phase = np.exp(1j * x * box)
        rem = np.fft.fftshift(np.fft.fft(vals)) * phase
        rem += 0.5 * dxi * _smooth_remainder(np.array([box]))[0] * np.exp(-1j * x * box)
        keep = np.abs(x) <= 0.45 * xs_period
        self.x = x[keep]
        self.remainder = rem.real[keep]
        self.imag_residue = float(np.max(np.abs(rem.imag[keep])))
        self._spline = CubicSpline(self.x, self.remainder)

    @property
    def x_extent(self) -> float:
        return float(self.x[-1])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ax = np.maximum(np.abs(x), 1e-300)
        return _subtracted_transform(ax) + self._spline(np.abs(x))

    def samples(self) -> Field:
        """k on the natural FFT grid, as a Field (x = 0 replaced by its neighbour mean)."""
        n = 1 << int(math.floor(math.log2(self.x.size)))
        half = min(self.x_extent, 30.0)
        grid = Grid(n, half)
        vals = self(grid.x)
        i0 = n // 2
        vals[i0] = 0.5 * (vals[i0 - 1] + vals[i0 + 1])
        return Field(grid, vals)

    def scaled_product(self, x):
        """|k(x)| |x|^(3/4) (1 + x^(2n)) with the singular factor cancelled analytically."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        regular = (-gamma(0.375) * hyp1f1(0.375, 0.5, -ax ** 2 / 4)
                   - gamma(1.375) * hyp1f1(1.375, 0.5, -ax ** 2 / 4) + self._spline(ax))
        return np.abs(C0 + ax ** 0.75 * regular) * (1.0 + ax ** (2 * self.decay_order_n))

    def moment(self, power: float = 0.125, x_max: float = 40.0) -> float:
        """int |x|^power |k(x)| dx over |x| <= x_max (the tail is exponentially small)."""
        x_max = min(x_max, self.x_extent)
        core = quad(lambda t: abs(C0 + t ** 0.75 * self._regular(t)), 0.0, 1.0,
                    weight="alg", wvar=(power - 0.75, 0.0), limit=200, epsabs=1e-13)[0]
        tail = quad(lambda t: t ** power * abs(float(self(t))), 1.0, x_max, limit=400, epsabs=1e-13)[0]
        return 2.0 * (core + tail)

    def total_integral(self, x_max: float = 40.0) -> float:
        x_max = min(x_max, self.x_extent)
        core = quad(lambda t: C0 + t ** 0.75 * self._regular(t), 0.0, 1.0,
                    weight="alg", wvar=(-0.75, 0.0), limit=200, epsabs=1e-13)[0]
        tail = quad(lambda t: float(self(t)), 1.0, x_max, limit=400, epsabs=1e-13)[0]
        return 2.0 * (core + tail)

    def _regular(self, t: float) -> float:
        z = -t * t / 4.0
        return float(-gamma(0.375) * hyp1f1(0.375, 0.5, z) - gamma(1.375) * hyp1f1(1.375, 0.5, z)
                     + self._spline(t))


def bessel_kernel_checks(n: int = 2, num_points: int = 2 ** 17, xi_box: float = 1600.0,
                         sup_window: float = 25.0, tol: float = 0.01) -> dict:
    """Decay product, truncated moment and normalisation at three resolutions.

    Resolutions: base, doubled points at fixed box (wider x range), doubled
    box with doubled points (finer x spacing).
    """
    if not 1 <= n <= 4:
        raise DomainError("decay order must be in 1..4", module=_MOD, operation="bessel_kernel_checks")
    kernels = {
        "base": BesselKernel(num_points, xi_box, n),
        "more_points": BesselKernel(2 * num_points, xi_box, n),
        "wider_box": BesselKernel(2 * num_points, 2 * xi_box, n),
    }
    xs = np.linspace(1e-6, sup_window, 20001)
    out: dict = {"n": n, "resolutions": {}}
    for name, ker in kernels.items():
        prod = ker.scaled_product(xs)
        out["resolutions"][name] = {
            "sup_product": float(prod.max()),
            "argmax": float(xs[prod.argmax()]),
            "moment": ker.moment(),
            "normalised_integral": ker.total_integral() / (2.0 * np.pi),
            "small_x_limit": float(ker.scaled_product(np.array([1e-8]))[0]),
            "imag_residue": ker.imag_residue,
        }
    res = out["resolutions"]
    moments = [r["moment"] for r in res.values()]
    sups = [r["sup_product"] for r in res.values()]
    out["moment"] = res["wider_box"]["moment"]
    out["moment_spread"] = (max(moments) - min(moments)) / out["moment"]
    out["sup_product"] = res["wider_box"]["sup_product"]
    out["sup_spread"] = (max(sups) - min(sups)) / out["sup_product"]
    out["c0"] = C0
    out["commutator_constant"] = out["moment"] / (2.0 * np.pi)
    if out["moment_spread"] > tol:
        raise AccuracyError(f"kernel moment not converged (spread {out['moment_spread']:.3%})",
                            best_estimate=out["moment"], module=_MOD, operation="bessel_kernel_checks")
    return out


def interpolation_check(f: Field, w, a: float, b: float, theta: float) -> float:
    """||<D>^{theta a}(w^{(1-theta) b} f)||_2 / (||w^b f||_2^{1-theta} ||<D>^a f||_2^theta)."""
    op = "interpolation_check"
    if a <= 0 or b <= 0 or not 0 <= theta <= 1:
        raise DomainError("need a, b > 0 and theta in [0, 1]", module=_MOD, operation=op)
    wx = w(f.grid.x)
    if np.min(wx) <= 0:
        raise DomainError("weight must be bounded below by a positive constant", module=_MOD, operation=op)
    fp = f.physical()
    rhs = (l2_norm(Field(f.grid, wx ** b * fp.values)) ** (1.0 - theta)
           * l2_norm(apply_multiplier(bessel(a), fp)) ** theta)
    if rhs == 0:
        return 0.0
    lhs = l2_norm(apply_multiplier(bessel(theta * a), Field(f.grid, wx ** ((1.0 - theta) * b) * fp.values)))
    return lhs / rhs


__all__ = [
    "LeibnizReport", "random_family", "leibniz_defect_two_term", "leibniz_defect_three_term",
    "commutator_field", "commutator_norm", "BesselKernel", "bessel_kernel_checks",
    "interpolation_check", "C0",
]
