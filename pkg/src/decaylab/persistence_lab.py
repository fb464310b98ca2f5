"""Weighted-decay experiments on solver output.

Space-time norms are realised on the snapshot grid: inner time norms by the
trapezoid rule (or the snapshot maximum for q = inf), outer space norms by
the rectangle rule (or the grid maximum for p = inf).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import constants
from .bumps import smooth_step
from .errors import DomainError
from .frac_leibniz import commutator_norm, interpolation_check
from .gkdv_solver import SolverConfig, Trajectory, solve, soliton
from .oscillatory import finite_bound_scan
from .spectral_core import (Field, Grid, Multiplier, abs_pow, airy_group, check_boundary_mass, derivative,
                            frac_derivative, japanese_pow, l2_norm, lp_norm, sobolev_norm, truncated_japanese,
                            weighted_l2)

_MOD = "persistence_lab"


class InitialFamily(enum.Enum):
    SOLITON = "Soliton"
    GAUSSIAN = "Gaussian"
    GAUSSIAN_TIMES_BUMP = "GaussianTimesBump"
    RANDOM_SCHWARTZ_LIKE = "RandomSchwartzLike"


@dataclass(frozen=True)
class ExperimentConfig:
    s: float
    s_prime: float
    epsilon: float
    k: int
    initial_family: InitialFamily
    solver: SolverConfig
    t_checkpoints: tuple = ()
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "initial_family", InitialFamily(self.initial_family))
        except ValueError:
            raise DomainError(f"unknown initial family {self.initial_family!r}", module=_MOD,
                              operation="ExperimentConfig") from None
        if not 0 < self.s <= self.s_prime:
            raise DomainError("need 0 < s <= s_prime", module=_MOD, operation="ExperimentConfig")
        if self.epsilon < 0:
            raise DomainError("epsilon must be nonnegative", module=_MOD, operation="ExperimentConfig")
        if self.k != self.solver.k:
            raise DomainError("k differs from the solver's k", module=_MOD, operation="ExperimentConfig")
        if self.k >= 4 and self.s < (self.k - 4) / (2 * self.k):
            raise DomainError("for k >= 4 the decay exponent must be >= (k-4)/(2k)",
                              module=_MOD, operation="ExperimentConfig")
        bad = [t for t in self.t_checkpoints if not 0 <= t <= self.solver.t_end]
        if bad:
            raise DomainError(f"checkpoints {bad} outside [0, t_end]", module=_MOD, operation="ExperimentConfig")


def initial_data(cfg: ExperimentConfig) -> Field:
    grid = cfg.solver.grid
    x = grid.x
    fam = cfg.initial_family
    if fam is InitialFamily.SOLITON:
        return cfg.amplitude * soliton(grid, 1.0, cfg.k)
    if fam is InitialFamily.GAUSSIAN:
        return Field(grid, cfg.amplitude * np.exp(-x ** 2))
    if fam is InitialFamily.GAUSSIAN_TIMES_BUMP:
        bump = 1.0 - smooth_step((np.abs(x) - 8.0) / 4.0)  # 1 on |x| <= 4, 0 for |x| >= 8
        return Field(grid, cfg.amplitude * np.exp(-0.25 * x ** 2) * np.cos(2.0 * x) * bump)
    rng = np.random.default_rng(cfg.seed)
    # Hermite-type functions with decaying random coefficients
    coef = rng.standard_normal(8) / (1.0 + np.arange(8)) ** 2
    poly = np.polynomial.hermite.hermval(x, coef)
    return Field(grid, cfg.amplitude * poly * np.exp(-0.5 * x ** 2))


# ---------------------------------------------------------------- norms

def _time_norm(vals: np.ndarray, times: np.ndarray, q: float) -> np.ndarray:
    if np.isinf(q):
        return vals.max(axis=0)
    return np.trapezoid(vals ** q, times, axis=0) ** (1.0 / q)


def mixed_norm(traj: Trajectory, p_x: float, q_t: float, pre_op: Multiplier | None = None) -> float:
    """||f||_{L^p_x L^q_T}: time norm at each x first, then the space norm."""
    if p_x < 1 or q_t < 1:
        raise DomainError("exponents must be >= 1", module=_MOD, operation="mixed_norm")
    if traj.times.size < 2 and not np.isinf(q_t):
        raise DomainError("a single snapshot carries no time measure", module=_MOD, operation="mixed_norm")
    vals = traj.values
    if pre_op is not None:
        sym = pre_op.on(traj.grid)
        vals = np.fft.ifft(sym * np.fft.fft(vals, axis=1), axis=1)
    inner = _time_norm(np.abs(vals), traj.times, q_t)
    return lp_norm(inner, p_x, traj.grid.spacing)


def time_outer_norm(traj: Trajectory, q_t: float, p_x: float, pre_op: Multiplier | None = None) -> float:
    """||f||_{L^q_T L^p_x}: space norm per snapshot, then the time norm."""
    vals = traj.values
    if pre_op is not None:
        sym = pre_op.on(traj.grid)
        vals = np.fft.ifft(sym * np.fft.fft(vals, axis=1), axis=1)
    per_t = np.array([lp_norm(v, p_x, traj.grid.spacing) for v in vals])
    return float(_time_norm(per_t[:, None], traj.times, q_t)[0])


def _sup_over_time(traj: Trajectory, fn: Callable[[Field], float]) -> float:
    return max(fn(s) for s in traj.states)


def _quarter_derivative() -> Multiplier:
    return frac_derivative(0.25)


@dataclass
class NormSuite:
    """Named norm values. L^inf in x or T means the grid or snapshot maximum."""

    values: dict[str, float] = field(default_factory=dict)

    Y_LABELS = ("u_L4x_LinfT", "D14_dx_u_LinfX_L2T", "u_LinfT_H14", "dx_u_L20x_L52T", "D14_u_L5x_L10T")

    @property
    def y_norm(self) -> float:
        return sum(self.values[k] for k in self.Y_LABELS)

    @property
    def z_norm(self) -> float:
        return self.y_norm + self.values["absx18_u_LinfT_L2x"]

    def all_finite(self) -> bool:
        return all(np.isfinite(v) and v >= 0 for v in self.values.values())


def norm_suite(traj: Trajectory, s: float, s_prime: float) -> NormSuite:
    d14 = _quarter_derivative()
    vals = {
        "japanese_s_u_LinfT_L2x": _sup_over_time(traj, lambda u: weighted_l2(japanese_pow(2 * s), u)),
        "u_LinfT_Hsprime": _sup_over_time(traj, lambda u: sobolev_norm(s_prime, u)),
        "u_L4x_LinfT": mixed_norm(traj, 4, np.inf),
        "D14_dx_u_LinfX_L2T": mixed_norm(traj, np.inf, 2, d14 * derivative(1)),
        "u_LinfT_H14": _sup_over_time(traj, lambda u: sobolev_norm(0.25, u)),
        "dx_u_L20x_L52T": mixed_norm(traj, 20, 2.5, derivative(1)),
        "D14_u_L5x_L10T": mixed_norm(traj, 5, 10, d14),
        "absx18_u_LinfT_L2x": _sup_over_time(traj, lambda u: weighted_l2(abs_pow(0.25), u)),
        # smooth variant: weight <x>^(1/8) - 1, within ||u||_2 of the |x|^(1/8) version
        "japanese18_minus_one_u_LinfT_L2x": _sup_over_time(
            traj, lambda u: l2_norm(u.with_values(((1.0 + u.grid.x ** 2) ** (1 / 16) - 1.0) * u.values))),
    }
    return NormSuite(vals)


# ---------------------------------------------------------------- experiments

def linear_decay_check(u0: Field, s: float, ts) -> dict:
    """||x|^s U(t) u0||_2 against (1 + |t| + |t|^s) ||u0||_{H^{2s}} + ||x|^s u0||_2."""
    weight = abs_pow(2 * s)
    base = weighted_l2(weight, u0)
    h2s = sobolev_norm(2 * s, u0)
    rows = []
    for t in ts:
        ut = airy_group(t, u0)
        check_boundary_mass(ut, operation="linear_decay_check")
        lhs = weighted_l2(weight, ut)
        rhs = (1.0 + abs(t) + abs(t) ** s) * h2s + base
        rows.append({"t": float(t), "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0})
    return {"s": s, "rows": rows, "max_ratio": max((r["ratio"] for r in rows), default=0.0)}


def _checkpoint_indices(traj: Trajectory, checkpoints) -> list[int]:
    return [int(np.argmin(np.abs(traj.times - t))) for t in checkpoints] or [traj.times.size - 1]


WEAK_CUTS = (2.5, 5.0, 10.0)


def weak_persistence_experiment(cfg: ExperimentConfig) -> dict:
    u0 = initial_data(cfg)
    traj = solve(u0, cfg.solver)
    s, eps = cfg.s, cfg.epsilon
    rows = []
    for i in _checkpoint_indices(traj, cfg.t_checkpoints):
        u = traj.state(i)
        truncated = {str(n): weighted_l2(truncated_japanese(s, n), u) for n in WEAK_CUTS}
        full = weighted_l2(japanese_pow(2 * s), u)
        seq = [truncated[str(n)] for n in WEAK_CUTS]
        monotone = all(a <= b * (1 + 1e-14) for a, b in zip(seq, seq[1:]))
        if not monotone:
            raise AssertionError(f"truncated weights not monotone in the cutoff: {seq}")
        interp = interpolation_check(u, lambda x: np.sqrt(1.0 + x * x), 2 * s + eps, 2 * s, 0.5)
        rows.append({"t": float(traj.times[i]), "truncated": truncated, "japanese": full,
                     "cutoff_gap": (full - seq[-1]) / full if full > 0 else 0.0,
                     "interpolation_ratio": interp})
    p = 1.0 / (s + eps / 2.0)
    smoothing = mixed_norm(traj, p, 2, derivative(1))
    initial = rows[0]["japanese"] if rows[0]["t"] == 0 else weighted_l2(japanese_pow(2 * s), u0)
    growth = max(r["japanese"] for r in rows) / initial if initial > 0 else 0.0
    values = [smoothing, growth] + [r["japanese"] for r in rows]
    if not all(np.isfinite(values)):
        raise AssertionError("non-finite norm in weak persistence report")
    return {"experiment_id": "weak_persistence", "rows": rows, "smoothing_norm": smoothing,
            "smoothing_exponent": p, "growth": growth, "conservation": traj.conservation.__dict__,
            "trajectory": traj}


def _envelope(u0: Field, T: float, z_norm: float) -> dict:
    weighted0 = weighted_l2(abs_pow(0.25), u0)
    h14 = sobolev_norm(0.25, u0)
    cubic = math.sqrt(T) * (1.0 + T ** (5.0 / 12.0) + T) * z_norm ** 3
    return {"weighted0": weighted0, "linear": (1.0 + T) * h14, "cubic": cubic,
            "total": weighted0 + (1.0 + T) * h14 + cubic}


def commutator_route(u: Field, t: float, *, scan_grid: Grid | None = None) -> dict:
    """Pieces of ||x|^(1/8) u(t)||_2 computed on the frequency side.

    Term II: commutator of D^(1/8) with <.>^(-1/8) applied to <xi>^(1/8) times
    the interaction-picture transform. Term I: the l^1 band bound of the
    multiplier exp(i t xi^3) <xi>^(-1/4), from finite_bound_scan.
    """
    hat = u.frequency().values
    xi = u.grid.frequencies
    order = np.argsort(xi)
    dual = u.grid.dual()
    v_hat = (np.exp(-1j * t * xi ** 3) * hat)[order]
    h = Field(dual, (1.0 + np.sort(xi) ** 2) ** 0.125 * v_hat)
    term2 = commutator_norm(h) / math.sqrt(2.0 * math.pi)
    scan = finite_bound_scan(0.125, (t,), scan_grid or Grid(2 ** 14, 64.0))
    return {"term_II_commutator": term2, "term_I_band_bound": scan["rows"][0]["S"]}


def main_persistence_experiment(cfg: ExperimentConfig, *, with_commutator_route: bool = True) -> dict:
    if cfg.k == 2 and cfg.s_prime < 0.25:
        raise DomainError("k = 2 needs s_prime >= 1/4", module=_MOD, operation="main_persistence_experiment")
    u0 = initial_data(cfg)
    traj = solve(u0, cfg.solver)
    T = float(traj.times[-1])
    suite = norm_suite(traj, cfg.s, cfg.s_prime)
    if not suite.all_finite():
        raise AssertionError(f"non-finite NormSuite entry: {suite.values}")
    idx = _checkpoint_indices(traj, cfg.t_checkpoints)
    weighted = [{"t": float(traj.times[i]), "absx_s": weighted_l2(abs_pow(2 * cfg.s), traj.state(i))}
                for i in idx]
    env = _envelope(u0, T, suite.z_norm)
    lhs = suite.values["absx18_u_LinfT_L2x"]
    report = {"experiment_id": "main_persistence", "norms": suite.values, "y_norm": suite.y_norm,
              "z_norm": suite.z_norm, "envelope": env, "checkpoints": weighted,
              "ratios": {"contract": lhs / env["total"]},
              "frozen_constants_version": constants.version(),
              "conservation": traj.conservation.__dict__, "trajectory": traj}
    if with_commutator_route:
        route = commutator_route(traj.final, T)
        scale = env["cubic"] if env["cubic"] > 0 else 1.0
        report["commutator_route"] = route
        report["ratios"].update({name: value / scale for name, value in route.items()})
    return report


# ---------------------------------------------------------------- Duhamel operators

def _phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1) / z with a series near 0."""
    out = np.empty_like(z)
    small = np.abs(z) < 1e-2
    zs = z[small]
    out[small] = 1 + zs / 2 + zs ** 2 / 6 + zs ** 3 / 24 + zs ** 4 / 120
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out


def _phi2(z: np.ndarray) -> np.ndarray:
    """((z - 1) e^z + 1) / z^2, i.e. int_0^1 s e^(z s) ds."""
    out = np.empty_like(z)
    small = np.abs(z) < 1e-2
    zs = z[small]
    out[small] = 0.5 + zs / 3 + zs ** 2 / 8 + zs ** 3 / 30 + zs ** 4 / 144
    zb = z[~small]
    out[~small] = ((zb - 1.0) * np.exp(zb) + 1.0) / zb ** 2
    return out


def duhamel_outputs(times: np.ndarray, forcing: np.ndarray, grid: Grid) -> np.ndarray:
    """int_0^t U(t - t') f(t') dt' at every snapshot time.

    f is taken piecewise linear in t' between snapshots and integrated exactly
    against exp(-i t' xi^3), so large xi^3 dt does not degrade accuracy.
    """
    xi3 = grid.frequencies ** 3
    f_hat = np.fft.fft(forcing, axis=1)
    out_hat = np.zeros_like(f_hat)
    acc = np.zeros(grid.num_points, dtype=complex)
    for j in range(1, times.size):
        a, h = times[j - 1], times[j] - times[j - 1]
        z = -1j * xi3 * h
        p1, p2 = _phi1(z), _phi2(z)
        acc = acc + np.exp(-1j * xi3 * a) * h * (f_hat[j - 1] * p1 + (f_hat[j] - f_hat[j - 1]) * p2)
        out_hat[j] = np.exp(1j * xi3 * times[j]) * acc
    return np.fft.ifft(out_hat, axis=1)


def strichartz_pair(p: float) -> tuple[float, float]:
    """(q, p) with 1/q = 1/6 - 1/(3p), p >= 2."""
    inv_q = 1.0 / 6.0 - (0.0 if np.isinf(p) else 1.0 / (3.0 * p))
    return (np.inf if inv_q == 0 else 1.0 / inv_q), p


def _conjugate(p: float) -> float:
    if np.isinf(p):
        return 1.0
    return np.inf if p == 1 else p / (p - 1.0)


def duhamel_smoothing_check(forcing: Trajectory, T: float | None = None,
                            ps=(2.0, 4.0, np.inf)) -> dict:
    """Smoothing-dual and Strichartz-dual ratios for a forcing sampled on [0, T].

    ``forcing`` is anything with ``times``, ``values`` (snapshots x points) and ``grid``.
    """
    times = np.asarray(forcing.times, dtype=float)
    values = np.asarray(forcing.values)
    grid = forcing.grid
    if T is not None:
        keep = times <= T + 1e-12
        times, values = times[keep], values[keep]
    if times.size < 2:
        raise DomainError("forcing needs at least two snapshots", module=_MOD, operation="duhamel_smoothing_check")
    out = duhamel_outputs(times, values, grid)
    dx_out = np.fft.ifft(1j * grid.frequencies * np.fft.fft(out, axis=1), axis=1)
    h = grid.spacing
    lhs_smooth = float(np.max(np.sqrt(np.sum(np.abs(dx_out) ** 2, axis=1) * h)))
    rhs_smooth = float(np.sum(np.sqrt(np.trapezoid(np.abs(values) ** 2, times, axis=0))) * h)
    lhs_l2 = float(np.max(np.sqrt(np.sum(np.abs(out) ** 2, axis=1) * h)))
    rows = {"smoothing": {"lhs": lhs_smooth, "rhs": rhs_smooth,
                          "ratio": lhs_smooth / rhs_smooth if rhs_smooth > 0 else 0.0}}
    for p in ps:
        q, _ = strichartz_pair(p)
        qc, pc = _conjugate(q), _conjugate(p)
        per_t = np.array([lp_norm(v, pc, h) for v in values])
        rhs = float(per_t.max()) if np.isinf(qc) else float(np.trapezoid(per_t ** qc, times) ** (1.0 / qc))
        rows[f"strichartz_p{p:g}"] = {"p": p, "q": q, "lhs": lhs_l2, "rhs": rhs,
                                      "ratio": lhs_l2 / rhs if rhs > 0 else 0.0}
    return {"T": float(times[-1]), "rows": rows}


@dataclass(frozen=True)
class SampledForcing:
    times: np.ndarray
    values: np.ndarray
    grid: Grid


def separable_forcing(grid: Grid, times: np.ndarray, a: Callable, b: Callable) -> SampledForcing:
    return SampledForcing(np.asarray(times), np.outer(a(times), b(grid.x)), grid)


def random_forcing(grid: Grid, times: np.ndarray, seed: int) -> SampledForcing:
    rng = np.random.default_rng(seed)
    x = grid.x
    centre, width, freq = rng.uniform(-2, 2), rng.uniform(0.5, 2.0), rng.uniform(0, 4)
    rate, phase = rng.uniform(0.5, 6.0), rng.uniform(0, 2 * np.pi)
    spatial = np.exp(-((x - centre) / width) ** 2) * np.cos(freq * x)
    temporal = np.cos(rate * times + phase) + 0.5 * rng.standard_normal() * times
    return SampledForcing(np.asarray(times), np.outer(temporal, spatial), grid)
