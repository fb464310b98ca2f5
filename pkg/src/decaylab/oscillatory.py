"""Airy-phase oscillatory integral with a dyadic bump, evaluated two ways.

    I(xi, omega, t) = int phi_omega(xi - z) exp(i t z^3) (1 + z^2)^(-1/8) dz,
    phi_omega(zeta) = int eta(x/omega) exp(i x zeta) dx = |omega| eta_hat(omega zeta),

where eta_hat(s) = int_{1/2}^{2} eta(u) exp(i u s) du. ``eval_direct`` integrates on
the real axis. ``eval_contour`` deforms the path into the complex plane
(rectangle for omega < 0, semicircles around xi otherwise) and lifts the
remaining straight pieces slightly off the axis where exp(i t z^3) decays.

All magnitudes are carried as (mantissa, log-scale) pairs so that
exp(2 omega y) growth of phi_omega and exp(-3 t x^2 y) decay of the Airy
factor never overflow separately.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .bumps import dyadic_bump
from .dyadic_lp import DyadicPartition, band_symbol
from .errors import AccuracyError, DomainError, GeometryError
from .spectral_core import Field, Grid, inverse_transform

_MOD = "oscillatory"


class Case(enum.Enum):
    NEGATIVE_OMEGA = "NegativeOmega"
    NEAR = "Near"
    INTERMEDIATE = "Intermediate"
    FAR = "Far"


NEAR_FRACTION, FAR_MULTIPLE = 0.1, 10.0


def classify(xi: float, omega: float, t: float) -> Case:
    if omega == 0:
        raise DomainError("omega must be nonzero", module=_MOD, operation="classify")
    if not t > 0:
        raise DomainError("t must be positive", module=_MOD, operation="classify")
    if omega < 0:
        return Case.NEGATIVE_OMEGA
    scale = math.sqrt(omega / t)
    if abs(xi) <= NEAR_FRACTION * scale:
        return Case.NEAR
    if abs(xi) > FAR_MULTIPLE * scale:
        return Case.FAR
    return Case.INTERMEDIATE


def case_bound(case: Case, omega: float, t: float) -> float:
    if case is Case.INTERMEDIATE:
        return (1.0 + t) * abs(omega) ** -0.125
    return (1.0 + t) / abs(omega)


# ---------------------------------------------------------------- bump transform

_U_LO, _U_HI, _U_MID = 0.5, 2.0, 1.25
_FFT_SIZE, _DS = 2 ** 20, 0.01
_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _ref_u(sigma):
    """Point of [1/2, 2] where exp(-u sigma) is largest."""
    return np.where(np.asarray(sigma) >= 0, _U_LO, _U_HI)


def eta_hat_gl(s: np.ndarray, *, rtol: float = 1e-10, atol: float = 1e-13,
               max_panels: int = 2 ** 13) -> tuple[np.ndarray, np.ndarray]:
    """Scaled transform of eta at complex s by composite Gauss-Legendre doubling.

    Returns (mantissa, log_scale) with eta_hat(s) = mantissa * exp(log_scale).
    Each of [1/2, 1] and [1, 2] is split into m panels of 32 nodes (so at least
    64 nodes per sub-interval); m doubles until consecutive values agree.
    The starting m grows with |s| so obviously unresolved levels are skipped.
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    flat = s.ravel()
    sigma = flat.imag
    uref = _ref_u(sigma)
    log_scale = -uref * sigma
    out = np.zeros(flat.shape, dtype=complex)
    prev = np.full(flat.shape, np.nan + 0j)
    first = np.maximum(2, 2 ** np.ceil(np.log2(np.maximum(np.abs(flat) / 64.0, 1.0)))).astype(np.int64)
    todo = np.arange(flat.size)
    x, w = _gl(32)
    m = 2
    while todo.size:
        if m > max_panels:
            worst = float(np.abs(flat[todo]).max())
            raise AccuracyError(f"bump transform unresolved at |s| = {worst:.3g}",
                                best_estimate=prev[todo], module=_MOD, operation="phi_omega")
        active = todo[first[todo] <= m]
        if active.size:
            u_parts, w_parts = [], []
            for a, b in ((0.5, 1.0), (1.0, 2.0)):
                edges = np.linspace(a, b, m + 1)
                half = 0.5 * np.diff(edges)
                mid = 0.5 * (edges[1:] + edges[:-1])
                u_parts.append((mid[:, None] + half[:, None] * x).ravel())
                w_parts.append((half[:, None] * w).ravel())
            u = np.concatenate(u_parts)
            wu = np.concatenate(w_parts) * dyadic_bump(u)
            cur = np.empty(active.size, dtype=complex)
            chunk = max(1, 4_000_000 // u.size)
            for i in range(0, active.size, chunk):
                idx = active[i:i + chunk]
                expo = 1j * np.outer(flat[idx], u) + (sigma[idx] * uref[idx])[:, None]
                cur[i:i + chunk] = np.exp(expo) @ wu
            old = prev[active]
            done = np.abs(cur - old) <= rtol * np.abs(cur) + atol  # NaN for first level
            out[active[done]] = cur[done]
            prev[active] = cur
            finished = np.zeros(flat.size, dtype=bool)
            finished[active[done]] = True
            todo = todo[~finished[todo]]
        m *= 2
    return out.reshape(s.shape), log_scale.reshape(s.shape)


_LAGRANGE_DENOM = [1.0 / math.prod(j - m for m in range(6) if m != j) for j in range(6)]


class _TransformTable:
    """eta_hat(s_r + i sigma) on a uniform s_r grid, built by one FFT.

    Values are interpolated with 6-point Lagrange after demodulating by
    exp(-1.25 i s), which leaves a function band-limited to |freq| <= 0.75.
    """

    def __init__(self, sigma: float):
        self.sigma = sigma
        self.uref = float(_ref_u(sigma))
        self.log_scale = -self.uref * sigma
        du = 2.0 * np.pi / (_FFT_SIZE * _DS)
        u = du * np.arange(int(_U_HI / du) + 2)
        weights = dyadic_bump(u) * np.exp(-(u - self.uref) * sigma) * du
        buf = np.zeros(_FFT_SIZE, dtype=complex)
        buf[:u.size] = weights
        vals = np.fft.ifft(buf) * _FFT_SIZE
        k = np.fft.fftfreq(_FFT_SIZE, d=1.0 / _FFT_SIZE)
        order = np.argsort(k)
        self.s0 = k[order[0]] * _DS
        s = k[order] * _DS
        self.s_max = float(s[-4])
        self.demod = vals[order] * np.exp(-1j * _U_MID * s)
        self.interp_error = self._measure_error()

    def mantissa(self, s_r: np.ndarray) -> np.ndarray:
        return self.demodulated(s_r) * np.exp(1j * _U_MID * s_r)

    def demodulated(self, s_r: np.ndarray) -> np.ndarray:
        """exp(-1.25 i s_r) times the mantissa; zero beyond the table range."""
        pos = (s_r - self.s0) / _DS
        i0 = np.floor(pos).astype(np.int64) - 2
        frac = pos - np.floor(pos) + 2.0  # offset inside the 6-point stencil
        i0 = np.clip(i0, 0, self.demod.size - 6)
        # Lagrange weights from prefix/suffix products of (frac - m)
        diffs = [frac - m for m in range(6)]
        left = [np.ones_like(frac)]
        for m in range(5):
            left.append(left[-1] * diffs[m])
        right = [np.ones_like(frac)]
        for m in range(5, 0, -1):
            right.append(right[-1] * diffs[m])
        right = right[::-1]
        acc = np.zeros(s_r.shape, dtype=complex)
        for j in range(6):
            acc += (_LAGRANGE_DENOM[j] * left[j] * right[j]) * self.demod[i0 + j]
        acc[np.abs(s_r) > self.s_max] = 0.0
        return acc

    def _measure_error(self) -> float:
        rng = np.random.default_rng(12345)
        probe = rng.uniform(-2000.0, 2000.0, 64)
        ref, _ = eta_hat_gl(probe + 1j * self.sigma)
        return float(np.max(np.abs(self.mantissa(probe) - ref)) + 1e-15)


@lru_cache(maxsize=16)
def _table(sigma: float) -> _TransformTable:
    return _TransformTable(sigma)


@lru_cache(maxsize=1)
def _tail_profile() -> tuple[np.ndarray, np.ndarray]:
    tab = _table(0.0)
    s = tab.s0 + _DS * np.arange(tab.demod.size)
    mag = np.abs(tab.demod)
    pos = s >= 0
    sp, mp = s[pos], mag[pos]
    # two-sided tail: int_{|s|>S} |eta_hat| = 2 int_S^inf (|eta_hat| is even on the real axis)
    tail = 2.0 * np.cumsum(mp[::-1])[::-1] * _DS
    return sp, tail


def transform_tail(S: float) -> float:
    """int_{|s| > S} |eta_hat(s)| ds, i.e. the L^1 mass of phi_omega outside |zeta| <= S/|omega|."""
    sp, tail = _tail_profile()
    return float(np.interp(S, sp, tail, right=0.0))


def cutoff_for(tol: float) -> float:
    """Smallest tabulated S with transform_tail(S) <= tol."""
    sp, tail = _tail_profile()
    ok = np.nonzero(tail <= tol)[0]
    return float(sp[ok[0]]) if ok.size else float(sp[-1])


def phi_omega(zeta, omega: float) -> np.ndarray:
    """phi_omega at (complex) zeta via the Gauss-Legendre route."""
    z = np.atleast_1d(np.asarray(zeta, dtype=complex))
    mant, log_scale = eta_hat_gl(omega * z)
    return abs(omega) * mant * np.exp(log_scale)


@dataclass(frozen=True)
class BumpFamily:
    """The dyadic bump (support [1/2, 2]) together with one scale omega."""

    omega: float

    def __post_init__(self):
        if self.omega == 0:
            raise DomainError("omega must be nonzero", module=_MOD, operation="BumpFamily")

    @staticmethod
    def phi_hat(u):
        u = np.asarray(u, dtype=float)
        return np.where((u > _U_LO) & (u < _U_HI), dyadic_bump(np.abs(u)), 0.0)

    def __call__(self, zeta) -> np.ndarray:
        return phi_omega(zeta, self.omega)


# ---------------------------------------------------------------- paths
#
# Paths are stored in offset coordinates d = z - xi. For |xi| in the hundreds the
# phase t z^3 is ~1e7 rad; expanding it around xi keeps per-point rounding at
# the level of t |d| xi^2 instead of t xi^3.

@dataclass(frozen=True)
class Line:
    a: complex
    b: complex

    def point(self, s):
        return self.a + (self.b - self.a) * s

    def speed(self, s):
        return np.full(np.shape(s), self.b - self.a, dtype=complex)

    @property
    def horizontal(self) -> bool:
        return self.a.imag == self.b.imag

    def crosses_branch(self, shift: float = 0.0) -> bool:
        a, b = self.a + shift, self.b + shift
        if a.real == b.real:
            if a.real != 0:
                return False
            lo, hi = sorted((a.imag, b.imag))
            return hi >= 1 or lo <= -1
        s = -a.real / (b.real - a.real)
        if not 0 <= s <= 1:
            return False
        return abs(a.imag + (b.imag - a.imag) * s) >= 1


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, s):
        return self.center + self.radius * np.exp(1j * (self.theta0 + (self.theta1 - self.theta0) * s))

    def speed(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * s
        return 1j * self.radius * (self.theta1 - self.theta0) * np.exp(1j * th)

    horizontal = False

    def crosses_branch(self, shift: float = 0.0) -> bool:
        c, r = self.center + shift, self.radius
        if abs(c.real) > r:
            return False
        base = math.acos(-c.real / r)
        lo, hi = sorted((self.theta0, self.theta1))
        for th in (base, -base, 2 * math.pi - base, 2 * math.pi + base, -2 * math.pi + base):
            if lo <= th <= hi and abs(c.imag + r * math.sin(th)) >= 1:
                return True
        return False


@dataclass
class SegmentResult:
    value: complex
    error: float
    panels: int
    evaluations: int


_EPS = float(np.finfo(float).eps)


@dataclass
class _Integrand:
    """phi_omega(-d) exp(i t (xi + d)^3) (1 + (xi + d)^2)^(-1/8) without the factor exp(i t xi^3)."""

    xi: float
    omega: float
    t: float

    def envelope(self, d: np.ndarray) -> np.ndarray:
        """log of an upper estimate for |integrand| (eta <= 1, interval length 3/2)."""
        sigma = -self.omega * d.imag
        log_phi = math.log(1.5 * abs(self.omega)) - _ref_u(sigma) * sigma
        return log_phi + self._log_rest(d).real

    def _local_phase(self, d):
        xi = self.xi
        return self.t * d * (3.0 * xi * xi + 3.0 * xi * d + d * d)

    def _log_rest(self, d):
        z = self.xi + d
        return 1j * self._local_phase(d) - 0.125 * np.log1p(z * z)

    def rate(self, d: np.ndarray) -> np.ndarray:
        """Bound on |d/dd log(integrand)|, used to size panels."""
        return 3.0 * self.t * np.abs(self.xi + d) ** 2 + 2.0 * abs(self.omega) + 1.0

    def __call__(self, d: np.ndarray, horizontal: bool) -> tuple[np.ndarray, np.ndarray]:
        """Integrand values and a per-point absolute error estimate."""
        s = -self.omega * d
        rest = self._log_rest(d)
        if horizontal and s.size:
            tab = _table(round(float(s.imag[0]), 12))
            mant = tab.demodulated(s.real)
            far = np.abs(s.real) > tab.s_max
            err = np.full(d.shape, tab.interp_error)
            log_scale = tab.log_scale + 1j * _U_MID * s.real
            if far.any():
                m_far, l_far = eta_hat_gl(s[far])
                mant[far] = m_far * np.exp(-1j * _U_MID * s.real[far])
                log_scale[far] += l_far - tab.log_scale
        else:
            mant, log_scale = eta_hat_gl(s)
            err = 1e-10 * np.abs(mant) + 1e-13
        factor = abs(self.omega) * np.exp(log_scale + rest)
        vals = mant * factor
        # rounding of the phases themselves
        err = err * np.abs(factor) + _EPS * (np.abs(rest.imag) + 2.0 * np.abs(s) + 10.0) * np.abs(vals)
        return vals, err


_GL16, _GL32 = np.polynomial.legendre.leggauss(16), np.polynomial.legendre.leggauss(32)


def _sample_params(n_uniform: int = 4097) -> np.ndarray:
    geo = np.logspace(-14, -2, 49)
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, n_uniform), geo, 1.0 - geo]))


def _initial_panels(seg, f: _Integrand, tol: float, resolution: float):
    """Panel (lo, hi) arrays in the segment parameter, plus a bound for dropped parts.

    Stretches where the magnitude envelope is far below ``tol`` are skipped;
    the rest is cut into panels carrying about 2 / resolution oscillations.
    """
    s = _sample_params()
    d = seg.point(s)
    speed = np.abs(seg.speed(s))
    env = f.envelope(d) + np.log(np.maximum(speed, 1e-300))
    keep = env >= math.log(tol) - 25.0
    ds = np.diff(s)
    k = keep.copy()
    k[1:] |= keep[:-1]
    k[:-1] |= keep[1:]
    both = k[:-1] & k[1:]
    dropped = float(np.sum(np.exp(np.maximum(env[:-1], env[1:]))[~both] * ds[~both]))
    rate = f.rate(d) * speed
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (rate[:-1] + rate[1:]) * ds)])
    per_panel = 4.0 * math.pi / resolution
    los, his = [], []
    idx = np.nonzero(both)[0]
    if idx.size:
        # maximal runs of consecutive kept sample intervals
        breaks = np.nonzero(np.diff(idx) > 1)[0]
        for st, en in zip(np.r_[idx[0], idx[breaks + 1]], np.r_[idx[breaks], idx[-1]] + 1):
            c0, c1 = cum[st], cum[en]
            count = max(2, int(math.ceil((c1 - c0) / per_panel)))
            edges = np.interp(np.linspace(c0, c1, count + 1), cum[st:en + 1], s[st:en + 1])
            edges[0], edges[-1] = s[st], s[en]
            edges = np.unique(edges)
            los.append(edges[:-1])
            his.append(edges[1:])
    if not los:
        return np.array([]), np.array([]), dropped
    return np.concatenate(los), np.concatenate(his), dropped


def integrate_segment(seg, f: _Integrand, tol: float, *, resolution: float = 1.0,
                      panel_budget: int = 2_000_000) -> SegmentResult:
    """Adaptive composite Gauss-Legendre (16 vs 32 nodes per panel)."""
    if seg.crosses_branch(f.xi):
        raise GeometryError(f"path {seg} (offset from xi={f.xi}) meets the branch rays Re z = 0, |Im z| >= 1",
                            module=_MOD, operation="eval_contour")
    lo, hi, dropped = _initial_panels(seg, f, tol, resolution)
    if lo.size == 0:
        return SegmentResult(0j, dropped, 0, 0)
    total_len = float(np.sum(hi - lo))
    value, error, evals, accepted = 0j, dropped, 0, 0
    chunk = 20_000
    while lo.size:
        if accepted + lo.size > panel_budget:
            raise AccuracyError(f"panel budget {panel_budget} exhausted",
                                best_estimate=value, module=_MOD, operation="integrate_segment")
        new_lo, new_hi = [], []
        for i in range(0, lo.size, chunk):
            a, b = lo[i:i + chunk], hi[i:i + chunk]
            half, mid = 0.5 * (b - a), 0.5 * (b + a)
            q = []
            for nodes, weights in (_GL16, _GL32):
                sp = mid[:, None] + half[:, None] * nodes[None, :]
                vals, verr = f(seg.point(sp).ravel(), seg.horizontal)
                speed = seg.speed(sp)
                vals = vals.reshape(sp.shape) * speed
                verr = verr.reshape(sp.shape) * np.abs(speed)
                q.append(((vals * weights).sum(axis=1) * half,
                          (verr * weights).sum(axis=1) * half,
                          (np.abs(vals) * weights).sum(axis=1) * half))
                evals += sp.size
            diff = np.abs(q[0][0] - q[1][0])
            local_tol = 0.5 * tol * (b - a) / total_len
            # panels whose two rules differ only at rounding or table-noise level cannot improve
            noise = 64 * _EPS * q[1][2] + 2.0 * (q[0][1] + q[1][1])
            ok = (diff <= local_tol) | (diff <= noise) | ((b - a) < 1e-15)
            value += q[1][0][ok].sum()
            error += float(np.sum(diff[ok] + q[1][1][ok] + 64 * _EPS * q[1][2][ok]))
            accepted += int(ok.sum())
            new_lo += [a[~ok], mid[~ok]]
            new_hi += [mid[~ok], b[~ok]]
        lo = np.concatenate(new_lo)
        hi = np.concatenate(new_hi)
    return SegmentResult(value, error, accepted, evals)


# ---------------------------------------------------------------- queries

class Method(enum.Enum):
    DIRECT = "direct"
    CONTOUR = "contour"
    BOTH = "both"


@dataclass(frozen=True)
class OscIntegralQuery:
    xi: float
    omega: float
    t: float
    method: Method = Method.BOTH
    tol: float = 1e-8

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError("t must be positive", module=_MOD, operation="OscIntegralQuery")
        if self.omega == 0:
            raise DomainError("omega must be nonzero", module=_MOD, operation="OscIntegralQuery")
        try:
            object.__setattr__(self, "method", Method(self.method))
        except ValueError:
            raise DomainError(f"unknown method {self.method!r}", module=_MOD,
                              operation="OscIntegralQuery") from None


@dataclass
class OscIntegralResult:
    value: complex
    case_label: Case
    abs_bound_reference: float
    quadrature_error: float
    method: str
    pieces: dict = field(default_factory=dict)
    agreement: dict | None = None


def _truncation(q: OscIntegralQuery) -> tuple[float, float]:
    """Half-width R of the real window around xi and the L^1 tail it leaves."""
    tail_tol = 0.1 * q.tol
    S = cutoff_for(tail_tol)
    return S / abs(q.omega), transform_tail(S)


def _epsilon(case: Case, omega: float, t: float) -> float:
    scale = math.sqrt(abs(omega) / t)
    if case is Case.NEAR:
        return min(1.0, scale)
    if case is Case.FAR:
        return scale
    return NEAR_FRACTION * scale


def _lift_height(omega: float) -> float:
    return min(0.5, 1.0 / abs(omega))


def contour_segments(q: OscIntegralQuery) -> dict[str, list]:
    """Named pieces of the deformed path from xi - R to xi + R, as offsets from xi."""
    case = classify(q.xi, q.omega, q.t)
    R, _ = _truncation(q)
    xi = 0.0
    if case is Case.NEGATIVE_OMEGA:
        h = 0.5j
        return {"left_side": [Line(xi - R, xi - R + h)],
                "horizontal": [Line(xi - R + h, xi + R + h)],
                "right_side": [Line(xi + R + h, xi + R)]}
    d = 1j * _lift_height(q.omega)
    if case is Case.INTERMEDIATE:
        return {"left_side": [Line(xi - R, xi - R + d)],
                "lifted": [Line(xi - R + d, xi + R + d)],
                "right_side": [Line(xi + R + d, xi + R)]}
    rho = _epsilon(case, q.omega, q.t) / 10.0
    arc = Arc(complex(xi), rho, math.pi, 2 * math.pi) if case is Case.NEAR else Arc(complex(xi), rho, math.pi, 0.0)
    pieces = {"arc": [arc]}
    if R > rho:
        pieces["left_remainder"] = [Line(xi - R, xi - R + d), Line(xi - R + d, xi - rho + d),
                                    Line(xi - rho + d, xi - rho)]
        pieces["right_remainder"] = [Line(xi + rho, xi + rho + d), Line(xi + rho + d, xi + R + d),
                                     Line(xi + R + d, xi + R)]
    return pieces


def _global_phase(q: OscIntegralQuery) -> complex:
    return complex(np.exp(1j * q.t * q.xi ** 3))


def integrate_path(q: OscIntegralQuery, pieces: dict[str, list], *, resolution: float = 1.0,
                   panel_budget: int = 2_000_000) -> tuple[complex, float, dict]:
    f = _Integrand(q.xi, q.omega, q.t)
    n_seg = sum(len(v) for v in pieces.values())
    total, err, report = 0j, 0.0, {}
    for name, segs in pieces.items():
        v, e = 0j, 0.0
        for seg in segs:
            r = integrate_segment(seg, f, 0.5 * q.tol / n_seg, resolution=resolution,
                                  panel_budget=panel_budget)
            v += r.value
            e += r.error
        report[name] = {"value": v, "error": e}
        total += v
        err += e
    phase = _global_phase(q)
    for entry in report.values():
        entry["value"] *= phase
    return total * phase, err, report


def eval_direct(q: OscIntegralQuery, *, resolution: float = 1.0,
                panel_budget: int = 2_000_000) -> OscIntegralResult:
    case = classify(q.xi, q.omega, q.t)
    R, tail = _truncation(q)
    f = _Integrand(q.xi, q.omega, q.t)
    try:
        r = integrate_segment(Line(complex(-R), complex(R)), f, 0.5 * q.tol,
                              resolution=resolution, panel_budget=panel_budget)
    except AccuracyError as exc:
        exc.operation = "eval_direct"
        raise
    value = r.value * _global_phase(q)
    return OscIntegralResult(value, case, case_bound(case, q.omega, q.t), r.error + tail, "direct",
                             pieces={"real_axis": {"value": value, "error": r.error},
                                     "truncation": {"R": R, "tail_bound": tail},
                                     "panels": r.panels})


def eval_contour(q: OscIntegralQuery, *, resolution: float = 1.0,
                 panel_budget: int = 2_000_000) -> OscIntegralResult:
    case = classify(q.xi, q.omega, q.t)
    R, tail = _truncation(q)
    pieces = contour_segments(q)
    value, err, report = integrate_path(q, pieces, resolution=resolution, panel_budget=panel_budget)
    report["truncation"] = {"R": R, "tail_bound": tail}
    return OscIntegralResult(value, case, case_bound(case, q.omega, q.t), err + tail, "contour", pieces=report)


def evaluate(q: OscIntegralQuery, **kw) -> OscIntegralResult:
    if q.method is Method.DIRECT:
        return eval_direct(q, **kw)
    if q.method is Method.CONTOUR:
        return eval_contour(q, **kw)
    d = eval_direct(q, **kw)
    c = eval_contour(q, **kw)
    # both routes integrate the same truncated window, so the tail cancels in the difference
    tail = d.pieces["truncation"]["tail_bound"]
    diff = abs(d.value - c.value)
    allowed = (d.quadrature_error - tail) + (c.quadrature_error - tail)
    c.agreement = {"direct": d.value, "contour": c.value, "difference": diff,
                   "combined_error": allowed, "agree": bool(diff <= allowed)}
    c.method = "both"
    return c


# ---------------------------------------------------------------- scans

def representative_xis(case: Case, omega: float, t: float) -> list[float]:
    scale = math.sqrt(abs(omega) / t)
    ratios = {Case.NEGATIVE_OMEGA: (0.0, 1.0, 5.0), Case.NEAR: (0.0, 0.05, 0.1),
              Case.INTERMEDIATE: (0.5, 1.0, 2.0, 5.0), Case.FAR: (20.0, 50.0)}[case]
    return [r * scale for r in ratios]


def bound_ratio_scan(omegas, ts, xis_per_case=None, *, resolution: float = 1.0, tol: float = 1e-9) -> dict:
    """Weighted maxima |I| omega^(1/8)/(1+t) (intermediate) or |I| |omega|/(1+t) per case.

    Points are evaluated along the contour route; failures are recorded, not raised.
    """
    xis_per_case = xis_per_case or representative_xis
    rows, failures = [], []
    for omega in omegas:
        for t in ts:
            cases = [Case.NEGATIVE_OMEGA] if omega < 0 else [Case.NEAR, Case.INTERMEDIATE, Case.FAR]
            for case in cases:
                for xi in xis_per_case(case, omega, t):
                    q = OscIntegralQuery(xi, omega, t, Method.CONTOUR, tol=tol)
                    try:
                        r = eval_contour(q, resolution=resolution)
                    except (AccuracyError, GeometryError) as exc:
                        failures.append({"xi": xi, "omega": omega, "t": t, "error": str(exc)})
                        continue
                    weight = abs(omega) ** 0.125 if r.case_label is Case.INTERMEDIATE else abs(omega)
                    rows.append({"xi": xi, "omega": omega, "t": t, "case": r.case_label.value,
                                 "abs_value": abs(r.value), "error": r.quadrature_error,
                                 "weighted": abs(r.value) * weight / (1.0 + t),
                                 "weighted_strong": abs(r.value) * abs(omega) / (1.0 + t)})
    maxima: dict[str, float] = {}
    for row in rows:
        maxima[row["case"]] = max(maxima.get(row["case"], 0.0), row["weighted"])
    return {"rows": rows, "maxima": maxima, "failures": failures, "resolution": resolution}


# ---------------------------------------------------------------- elementary integrals

def e_sin_integral(a: float, b: float) -> float:
    """int_0^pi (exp(a sin s) - exp(b sin s)) / sin s ds, removable ends equal a - b."""
    def integrand(s):
        x = math.sin(s)
        if x < 1e-12:
            return a - b
        return math.exp(b * x) * math.expm1((a - b) * x) / x
    return quad(integrand, 0.0, math.pi, epsabs=1e-14, epsrel=1e-12, limit=200)[0]


def e_sin_bound(a: float, b: float) -> float:
    r = math.pi * a / b
    return (r - 1.0) + 1.0 + math.exp(-r) / r


def e_sin_check(a: float, b: float, nodes: int = 200) -> dict:
    """Compare the integral with the closed-form bound; check the transformed integrand.

    The transformed integral is int_b^0 (exp(pi a r / b) - exp(r)) / r dr,
    evaluated by Gauss-Legendre; its integrand must be positive at every node.
    """
    if not a < b < 0:
        raise DomainError("need a < b < 0", module=_MOD, operation="e_sin_check")
    lhs = e_sin_integral(a, b)
    bound = e_sin_bound(a, b)
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * b * (1.0 - x)  # maps [-1, 1] onto [b, 0)
    c = math.pi * a / b
    integrand = (np.exp(c * r) - np.exp(r)) / r
    positive = bool(np.all(integrand > 0))
    assert positive, "transformed e_sin integrand is not positive at a node"
    transformed = float(np.sum(w * integrand) * 0.5 * abs(b))
    return {"a": a, "b": b, "integral": lhs, "bound": bound, "ratio": abs(lhs) / bound,
            "transformed_integral": transformed, "transformed_ratio": transformed / bound,
            "positive_at_nodes": positive}


@lru_cache(maxsize=1)
def eta_second_derivative_sup() -> float:
    u = np.linspace(0.5, 2.0, 300_001)
    d2 = np.gradient(np.gradient(dyadic_bump(u), u), u)
    return float(np.max(np.abs(d2)))


def anal_cont_bound(xi: float, z: complex, omega: float) -> float:
    y = z.imag
    dist2 = abs(xi - z) ** 2
    if y == 0:
        return 1.0 / (abs(omega) * dist2)
    return abs(math.exp(2 * omega * y) - math.exp(omega * y / 2)) / (omega ** 2 * abs(y) * dist2)


def anal_cont_bound_check(xi: float, z: complex, omega: float) -> dict:
    """|phi_omega(xi - z)| against the Paley-Wiener type envelope.

    Integrating by parts twice gives the envelope with constant sup|eta''|
    (3/2 sup|eta''| on the real axis), so ``ratio`` never exceeds that.
    """
    z = complex(z)
    if z.imag == 0 and z.real == xi:
        raise DomainError("z must differ from xi on the real axis", module=_MOD,
                          operation="anal_cont_bound_check")
    val = complex(phi_omega(np.array([xi - z]), omega)[0])
    bound = anal_cont_bound(xi, z, omega)
    c = eta_second_derivative_sup()
    limit = c * (1.5 if z.imag == 0 else 1.0)
    return {"value": val, "bound": bound, "ratio": abs(val) / bound, "constant": c,
            "ratio_limit": limit}


# ---------------------------------------------------------------- low-frequency multiplier

def intermediate_shells(xi: float, t: float, n_lo: int = -40, n_hi: int = 60) -> list[int]:
    """Dyadic N for which xi is intermediate with respect to omega = 2^N."""
    return [n for n in range(n_lo, n_hi + 1) if classify(xi, 2.0 ** n, t) is Case.INTERMEDIATE]


def band_kernel_l1(beta: float, fine: int = 2 ** 18, box: float = 64.0) -> float:
    """L^1 norm of the inverse transform of |x|^beta (eta(x) + eta(-x)) (scale invariant)."""
    g = Grid(fine, box)
    sym = band_symbol(0, g.frequencies, beta)
    sign = np.where(np.arange(fine) % 2 == 0, 1.0, -1.0)
    kernel = np.fft.ifft(sign * sym) / g.spacing
    return float(np.sum(np.abs(kernel)) * g.spacing)


def _window(xi: np.ndarray, inner: float, outer: float) -> np.ndarray:
    from .bumps import smooth_step
    v = (np.abs(xi) - outer) / (outer - inner)
    return 1.0 - smooth_step(v)


def finite_bound_scan(s_exp: float = 0.125, ts=(0.25, 0.5, 1.0, 2.0, 4.0, 8.0), grid: Grid | None = None,
                      *, tail_tol: float = 0.01) -> dict:
    """S(t) = sup_xi sum_N 2^(N s) |Q^5_N m_t(xi)|, m_t = exp(i t xi^3) (1+xi^2)^(-s).

    The grid nodes are values of xi; bands act on the dual variable. m_t is
    tapered to zero where its local frequency 3 t xi^2 approaches the grid
    limit, and the supremum is taken where the taper is identically 1.
    """
    if not 0 < s_exp <= 0.5:
        raise DomainError("s_exp must lie in (0, 1/2]", module=_MOD, operation="finite_bound_scan")
    grid = grid or Grid(2 ** 16, 128.0)
    part = DyadicPartition(grid)
    xi = grid.x
    # same symbols as part.project_weighted(n, s_exp, .), built once for all t
    symbols = [part.multiplier(n, s_exp).on(grid) for n in part.bands]
    rows = []
    for t in ts:
        reach = 0.5 * grid.xi_max / (3.0 * t) if t > 0 else np.inf
        outer = min(0.9 * grid.half_length, math.sqrt(reach))
        inner = 0.8 * outer
        sup_zone = np.abs(xi) <= 0.75 * inner
        m = np.exp(1j * t * xi ** 3) * (1.0 + xi ** 2) ** (-s_exp) * _window(xi, inner, outer)
        hat = Field(grid, m).frequency()
        terms = np.array([2.0 ** (n * s_exp) * np.abs(inverse_transform(hat.with_values(sym * hat.values)).values)
                          for n, sym in zip(part.bands, symbols)])
        total = terms.sum(axis=0)
        j = int(np.argmax(np.where(sup_zone, total, -np.inf)))
        S = float(total[j])
        last_share = float(terms[-1, j] / S) if S > 0 else 0.0
        partial = np.cumsum(terms[:, j])
        low = terms[[i for i, n in enumerate(part.bands) if n <= 0]].sum(axis=0)
        rows.append({"t": t, "S": S, "S_over_1pt": S / (1.0 + t), "argmax_xi": float(xi[j]),
                     "last_band_share": last_share, "low_part": float(low[sup_zone].max()),
                     "sup_window": float(0.75 * inner),
                     "partial_sums_monotone": bool(np.all(np.diff(partial) >= 0))})
        if last_share > tail_tol:
            raise AccuracyError(f"band sum not converged at t={t}: last band carries {last_share:.2%}",
                                best_estimate=S, module=_MOD, operation="finite_bound_scan")
    tv = np.array([r["t"] for r in rows])
    sv = np.array([r["S"] for r in rows])
    out = {"s_exp": s_exp, "rows": rows, "n_min": part.n_min, "n_max": part.n_max}
    if tv.size >= 2:
        c1, c0 = np.polyfit(tv, sv, 1)
        fit = c0 + c1 * tv
        out.update({"fit_c0": float(c0), "fit_c1": float(c1),
                    "fit_residual": float(np.max(np.abs(sv - fit) / sv))})
    return out
