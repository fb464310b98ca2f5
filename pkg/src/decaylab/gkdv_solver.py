"""Pseudo-spectral solver for u_t + u_xxx + (u^(k+1))_x = 0 on the periodic box.

Time stepping is Lawson's integrating-factor RK4: the dispersive part is
applied exactly through exp(i xi^3 h), the nonlinear part is evaluated in
physical space and dealiased. Internally the state is the raw FFT coefficient
vector; every operator involved is diagonal, so the transform's scale and
sign factors drop out.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import BlowUpError, ContractionError, DomainError, StructuralError
from .spectral_core import Field, Grid, WeightFunction, WeightKind, check_boundary_mass

_MOD = "gkdv_solver"

# dt * xi_max must not exceed this. The linear part is integrated exactly, so the bound
# only guards the explicit nonlinear stage for O(1) data.
STABILITY_CONSTANT = 0.5
BLOWUP_FACTOR = 1e6
TRAJECTORY_FORMAT = 1


def default_dealias(k: int) -> float:
    return 2.0 / 3.0 if k <= 2 else 2.0 / (k + 2)


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters. ``dealias`` is the retained fraction of xi_max in the nonlinear term."""

    k: int
    dt: float
    t_end: float
    grid: Grid
    dealias: float | None = None
    snapshot_stride: int = 1
    nonlinear: bool = True
    max_snapshots: int = 200_000

    def __post_init__(self):
        if not (isinstance(self.k, int) and self.k >= 1):
            raise DomainError("k must be a positive integer", module=_MOD, operation="SolverConfig")
        if not (self.dt > 0 and self.t_end > 0):
            raise DomainError("dt and t_end must be positive", module=_MOD, operation="SolverConfig")
        if self.dealias is None:
            object.__setattr__(self, "dealias", default_dealias(self.k))
        if not 0 < self.dealias <= 1:
            raise DomainError("dealias must lie in (0, 1]", module=_MOD, operation="SolverConfig")
        if self.snapshot_stride < 1:
            raise DomainError("snapshot_stride must be >= 1", module=_MOD, operation="SolverConfig")
        if self.dt * self.grid.xi_max > STABILITY_CONSTANT:
            raise DomainError(f"dt={self.dt} exceeds {STABILITY_CONSTANT}/xi_max = "
                              f"{STABILITY_CONSTANT / self.grid.xi_max:.3g}",
                              module=_MOD, operation="SolverConfig")
        if self.num_steps / self.snapshot_stride + 1 > self.max_snapshots:
            raise DomainError("t_end/dt exceeds the snapshot budget", module=_MOD, operation="SolverConfig")

    @property
    def num_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = {"num_points": self.grid.num_points, "half_length": self.grid.half_length}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        d["grid"] = Grid(**d["grid"])
        return cls(**d)


@dataclass(frozen=True)
class ConservationReport:
    mass_drift: float
    mean_drift: float
    energy_drift: float
    imag_residue: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    values: np.ndarray  # (snapshots, num_points), physical space
    config: SolverConfig
    conservation: ConservationReport | None = None

    def __post_init__(self):
        if self.values.shape != (self.times.size, self.config.grid.num_points):
            raise StructuralError("snapshot array does not match times and grid",
                                  module=_MOD, operation="Trajectory")
        if self.times.size == 0 or self.times[0] != 0.0:
            raise StructuralError("times must start at 0", module=_MOD, operation="Trajectory")
        self.values.setflags(write=False)
        self.times.setflags(write=False)

    @property
    def grid(self) -> Grid:
        return self.config.grid

    @property
    def states(self) -> list[Field]:
        return [Field(self.grid, v) for v in self.values]

    def state(self, i: int) -> Field:
        return Field(self.grid, self.values[i])

    @property
    def final(self) -> Field:
        return self.state(-1)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp.npz")
        np.savez_compressed(tmp, format_version=TRAJECTORY_FORMAT, times=self.times,
                            values_real=self.values.real, values_imag=self.values.imag,
                            config_json=json.dumps(self.config.to_dict()))
        tmp.replace(path)
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Trajectory":
        with np.load(path, allow_pickle=False) as data:
            version = int(data["format_version"])
            if version != TRAJECTORY_FORMAT:
                raise StructuralError(f"trajectory format {version} not supported",
                                      module=_MOD, operation="Trajectory.load")
            cfg = SolverConfig.from_dict(json.loads(str(data["config_json"])))
            values = data["values_real"] + 1j * data["values_imag"]
            return cls(data["times"].copy(), values, cfg)


# ---------------------------------------------------------------- stepping

@dataclass
class _Operators:
    xi: np.ndarray
    mask: np.ndarray

    @classmethod
    def build(cls, cfg: SolverConfig) -> "_Operators":
        xi = cfg.grid.frequencies
        return cls(xi, np.abs(xi) <= cfg.dealias * cfg.grid.xi_max)

    def nonlinear(self, u_hat: np.ndarray, k: int) -> np.ndarray:
        u = np.fft.ifft(u_hat)
        # overflow is caught by the blow-up check on the next snapshot
        with np.errstate(over="ignore", invalid="ignore"):
            return -1j * self.xi * self.mask * np.fft.fft(u ** (k + 1))


def _lawson_step(u_hat: np.ndarray, h: float, ops: _Operators, cfg: SolverConfig) -> np.ndarray:
    e_full = np.exp(1j * ops.xi ** 3 * h)
    if not cfg.nonlinear:
        return e_full * u_hat
    e_half = np.exp(0.5j * ops.xi ** 3 * h)
    k = cfg.k
    k1 = ops.nonlinear(u_hat, k)
    k2 = ops.nonlinear(e_half * (u_hat + 0.5 * h * k1), k)
    k3 = ops.nonlinear(e_half * u_hat + 0.5 * h * k2, k)
    k4 = ops.nonlinear(e_full * u_hat + h * e_half * k3, k)
    return e_full * u_hat + (h / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)


def step_exponential(state: Field, cfg: SolverConfig, dt: float | None = None) -> Field:
    """Advance one step (``dt`` overrides cfg.dt and may be negative)."""
    h = cfg.dt if dt is None else dt
    if state.grid != cfg.grid:
        raise StructuralError("state grid differs from config grid", module=_MOD, operation="step_exponential")
    u_hat = np.fft.fft(state.physical().values)
    out = np.fft.ifft(_lawson_step(u_hat, h, _Operators.build(cfg), cfg))
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite state after one step", last_time=0.0,
                          module=_MOD, operation="step_exponential")
    return Field(cfg.grid, out)


def invariants(u: np.ndarray, grid: Grid, k: int) -> tuple[float, float, float]:
    """(int u^2, int u, H) with H = int u_x^2 / 2 - u^(k+2) / (k+2)."""
    h = grid.spacing
    ux = np.fft.ifft(1j * grid.frequencies * np.fft.fft(u))
    mass = float(np.sum(np.abs(u) ** 2) * h)
    mean = float(np.sum(u).real * h)
    energy = float(np.sum(0.5 * np.abs(ux) ** 2 - (u ** (k + 2)).real / (k + 2)) * h)
    return mass, mean, energy


def _drift(series: np.ndarray) -> float:
    ref = abs(series[0])
    dev = float(np.max(np.abs(series - series[0])))
    return dev / ref if ref > 0 else dev


def _report(values: np.ndarray, cfg: SolverConfig) -> ConservationReport:
    inv = np.array([invariants(v, cfg.grid, cfg.k) for v in values])
    norms = np.sqrt(np.sum(np.abs(values) ** 2, axis=1))
    imag = np.sqrt(np.sum(values.imag ** 2, axis=1))
    residue = float(np.max(np.where(norms > 0, imag / np.where(norms > 0, norms, 1.0), 0.0)))
    return ConservationReport(_drift(inv[:, 0]), _drift(inv[:, 1]), _drift(inv[:, 2]), residue)


def solve(u0: Field, cfg: SolverConfig, *, check_boundary: bool = True) -> Trajectory:
    """Integrate on [0, t_end]; snapshots every ``snapshot_stride`` steps."""
    if u0.grid != cfg.grid:
        raise StructuralError("initial data grid differs from config grid", module=_MOD, operation="solve")
    if check_boundary:
        check_boundary_mass(u0, operation="solve")
    ops = _Operators.build(cfg)
    u_hat = np.fft.fft(u0.physical().values)
    sup0 = float(np.max(np.abs(u0.physical().values)))
    limit = BLOWUP_FACTOR * sup0 if sup0 > 0 else np.inf
    times, snaps = [0.0], [u0.physical().values.copy()]
    for n in range(1, cfg.num_steps + 1):
        u_hat = _lawson_step(u_hat, cfg.dt, ops, cfg)
        if n % cfg.snapshot_stride == 0 or n == cfg.num_steps:
            u = np.fft.ifft(u_hat)
            if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > limit:
                partial = Trajectory(np.array(times), np.array(snaps), cfg)
                raise BlowUpError(f"solution left the bounded regime before t={n * cfg.dt:.6g}",
                                  last_time=times[-1], partial=partial, module=_MOD, operation="solve")
            times.append(n * cfg.dt)
            snaps.append(u)
    values = np.array(snaps)
    return Trajectory(np.array(times), values, cfg, _report(values, cfg))


# ---------------------------------------------------------------- Duhamel iteration

@dataclass(frozen=True)
class PicardReport:
    differences: list[float]
    ratios: list[float]


def picard_iterate(u0: Field, T: float, cfg: SolverConfig, iters: int, *,
                   return_report: bool = False):
    """Fixed-point iteration of the Duhamel map on [0, T].

    Works in the interaction picture v_hat(t) = exp(-i t xi^3) u_hat(t), where
    the Duhamel integral has no dispersive phase left in the free part; the
    time integral uses cumulative Simpson on the cfg.dt grid. Valid while the
    map contracts, which for O(1) data means T of order 0.1 or less.
    """
    if iters < 0:
        raise DomainError("iters must be >= 0", module=_MOD, operation="picard_iterate")
    steps = max(2, int(round(T / cfg.dt)))
    t = np.linspace(0.0, T, steps + 1)
    xi = cfg.grid.frequencies
    ops = _Operators.build(cfg)
    phase = np.exp(1j * np.outer(t, xi ** 3))  # (time, freq)
    u0_hat = np.fft.fft(u0.physical().values)
    u_hat = phase * u0_hat
    diffs: list[float] = []
    for it in range(iters):
        forcing = np.array([ops.nonlinear(row, cfg.k) for row in u_hat]) if cfg.nonlinear else 0.0 * u_hat
        integrand = np.conj(phase) * forcing
        # scipy's cumulative_simpson is real-only
        integral = (cumulative_simpson(integrand.real, x=t, axis=0, initial=0.0)
                    + 1j * cumulative_simpson(integrand.imag, x=t, axis=0, initial=0.0))
        new = phase * (u0_hat + integral)
        d = float(np.sqrt(np.max(np.sum(np.abs(new - u_hat) ** 2, axis=1) / cfg.grid.num_points)
                          * 2.0 * cfg.grid.half_length))
        diffs.append(d)
        u_hat = new
        if len(diffs) >= 3 and diffs[-1] > diffs[-2] > diffs[-3] and diffs[-1] > 1e-13:
            raise ContractionError(f"Picard differences grow at iteration {it + 1}: {diffs[-3:]}",
                                   best_estimate=Field(cfg.grid, np.fft.ifft(u_hat[-1])),
                                   module=_MOD, operation="picard_iterate")
    out = Field(cfg.grid, np.fft.ifft(u_hat[-1]))
    if not return_report:
        return out
    ratios = [diffs[i + 1] / diffs[i] for i in range(len(diffs) - 1) if diffs[i] > 0]
    return out, PicardReport(diffs, ratios)


# ---------------------------------------------------------------- weighted identity

def _spectral_derivatives(phi: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    hat = np.fft.fft(phi)
    xi = grid.frequencies
    d1 = np.fft.ifft(1j * xi * hat).real
    d3 = np.fft.ifft((1j * xi) ** 3 * hat).real
    return d1, d3


def kato_identity_terms(traj: Trajectory, w: WeightFunction) -> dict:
    """Terms of d/dt int phi u^2 = -3 int phi' u_x^2 + int phi''' u^2 + c_k int phi' u^(k+2).

    c_k = 2(k+1)/(k+2). Returns each integrated term, the residual of this
    identity and the residual of the variant with the opposite signs on the
    space-time terms and c_k halved, for comparison.
    """
    if w.kind is not WeightKind.TRUNCATED_JAPANESE:
        raise DomainError("the weighted identity needs the smooth truncated weight",
                          module=_MOD, operation="kato_identity_residual")
    grid = traj.grid
    if 3.0 * w.n_cut >= grid.half_length:
        raise DomainError("weight must be flat before the box edge (3 n_cut < L)",
                          module=_MOD, operation="kato_identity_residual")
    phi = w(grid.x)
    d1, d3 = _spectral_derivatives(phi, grid)
    h = grid.spacing
    k = traj.config.k
    u = traj.values.real
    ux = np.fft.ifft(1j * grid.frequencies * np.fft.fft(traj.values, axis=1), axis=1).real
    per_time = {
        "phi_prime_ux2": np.sum(d1 * ux ** 2, axis=1) * h,
        "phi_triple_u2": np.sum(d3 * u ** 2, axis=1) * h,
        "phi_prime_nonlinear": (np.sum(d1 * u ** (k + 2), axis=1) * h if traj.config.nonlinear
                                else np.zeros(traj.times.size)),
    }
    integrated = {name: float(np.trapezoid(v, traj.times)) for name, v in per_time.items()}
    weighted = np.sum(phi * u ** 2, axis=1) * h
    change = float(weighted[-1] - weighted[0])
    ck = 2.0 * (k + 1) / (k + 2)
    terms = {"change": change, "gradient": 3.0 * integrated["phi_prime_ux2"],
             "third_derivative": -integrated["phi_triple_u2"],
             "nonlinear": -ck * integrated["phi_prime_nonlinear"]}
    total = sum(terms.values())
    scale = max(abs(v) for v in terms.values())
    literal = (change - 3.0 * integrated["phi_prime_ux2"] + integrated["phi_triple_u2"]
               + 0.5 * ck * integrated["phi_prime_nonlinear"])
    return {"terms": terms, "sum": total, "residual": abs(total) / scale if scale > 0 else 0.0,
            "literal_residual": abs(literal) / scale if scale > 0 else 0.0}


def kato_identity_residual(traj: Trajectory, w: WeightFunction) -> float:
    return kato_identity_terms(traj, w)["residual"]


# ---------------------------------------------------------------- travelling wave

def soliton_parameters(c: float, k: int) -> tuple[float, float]:
    """Amplitude and inverse width of A sech^(2/k)(kappa (x - c t)) for speed c."""
    return (c * (k + 2) / 2.0) ** (1.0 / k), k * math.sqrt(c) / 2.0


def soliton(grid: Grid, c: float, k: int, x0: float = 0.0, t: float = 0.0) -> Field:
    amp, kappa = soliton_parameters(c, k)
    y = kappa * (grid.x - x0 - c * t)
    # wrap to the nearest periodic image so long runs stay centred correctly
    period = 2.0 * grid.half_length * kappa
    y = (y + 0.5 * period) % period - 0.5 * period
    return Field(grid, amp / np.cosh(y) ** (2.0 / k))
