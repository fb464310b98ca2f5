"""Command-line entry point.

    decaylab <command> --config cfg.json [--out DIR] [--seed N]
    decaylab sweep <command> --config cfg.json --axis KEY --values V1,V2,... [--out DIR]

Configs are flat JSON objects. Every key must be known to the command; the
optional keys ``seed`` and ``output_dir`` are accepted everywhere. Each run
writes ``<command>.json`` and ``<command>.csv`` atomically into the output
directory. Exit codes: 0 ok, 2 accuracy, 3 blow-up, 4 config, 1 other errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import constants
from .errors import ConfigError, LabError

SCHEMA_VERSION = 1
WORKERS_ENV = "DECAYLAB_WORKERS"
_MOD = "cli_runner"

_REQUIRED = object()


def _grid(p):
    from .spectral_core import Grid
    return Grid(int(p["num_points"]), float(p["half_length"]))


# ---------------------------------------------------------------- commands
# Each command returns (results dict for JSON, list of CSV rows as dicts).

def _cmd_lp_check(p, seed):
    from .dyadic_lp import DyadicPartition, band_symbol
    from .spectral_core import Field, l2_norm
    grid = _grid(p)
    part = DyadicPartition(grid)
    xi = np.abs(grid.frequencies)
    annulus = (xi >= 2.0 ** part.n_min) & (xi <= 2.0 ** part.n_max)
    total = sum(band_symbol(n, xi) for n in part.bands)
    partition_residual = float(np.max(np.abs(total[annulus] - 1.0)))
    overlap = max(float(np.max(band_symbol(n, xi) * band_symbol(m, xi)))
                  for n in part.bands for m in part.bands if abs(n - m) >= 2)
    rng = np.random.default_rng(seed)
    f = Field(grid, rng.standard_normal(grid.num_points))
    pieces = part.decompose(f, tails=True)
    recon = pieces[0]
    for piece in pieces[1:]:
        recon = recon + piece
    recon_residual = l2_norm(recon - f) / l2_norm(f)
    rows = [{"band": n, "energy_fraction": l2_norm(q) ** 2 / l2_norm(f) ** 2}
            for n, q in zip(part.bands, pieces[1:-1])]
    res = {"n_min": part.n_min, "n_max": part.n_max, "partition_residual": partition_residual,
           "max_overlap_far_bands": overlap, "reconstruction_residual": recon_residual}
    return res, rows, f"partition residual {partition_residual:.3e}"


def _cmd_leibniz_scan(p, seed):
    from .dyadic_lp import DyadicPartition
    from .frac_leibniz import leibniz_defect_two_term, random_family
    grid = _grid(p)
    part = DyadicPartition(grid)
    fam = random_family(grid, 2 * int(p["count"]), seed)
    rows = []
    for i in range(int(p["count"])):
        r = leibniz_defect_two_term(fam[2 * i], fam[2 * i + 1], float(p["alpha"]), part)
        rows.append({"sample": i, "defect": r.defect_norm, "bound": r.bound_value, "ratio": r.ratio})
    mx = max(r["ratio"] for r in rows)
    return {"alpha": p["alpha"], "max_ratio": mx}, rows, f"max ratio {mx:.6g}"


def _cmd_oscint(p, seed):
    from .oscillatory import Method, OscIntegralQuery, evaluate
    q = OscIntegralQuery(float(p["xi"]), float(p["omega"]), float(p["t"]), Method(p["method"]), float(p["tol"]))
    r = evaluate(q)
    agree = r.agreement or {}
    row = {"xi": q.xi, "omega": q.omega, "t": q.t, "case": r.case_label.value, "method": r.method,
           "re": r.value.real, "im": r.value.imag, "abs": abs(r.value), "quadrature_error": r.quadrature_error,
           "abs_bound_reference": r.abs_bound_reference, "agree": agree.get("agree", ""),
           "difference": agree.get("difference", "")}
    res = dict(row)
    if agree:
        res["agreement"] = {k: (abs(v) if isinstance(v, complex) else v) for k, v in agree.items()}
    return res, [row], f"case {r.case_label.value} |I|={abs(r.value):.6g}"


def _cmd_e_sin(p, seed):
    from .oscillatory import e_sin_check
    r = e_sin_check(float(p["a"]), float(p["b"]))
    return r, [r], f"ratio {r['ratio']:.6g}"


def _cmd_kernel(p, seed):
    from .frac_leibniz import bessel_kernel_checks
    r = bessel_kernel_checks(num_points=int(p["num_points"]), xi_box=float(p["xi_box"]))
    rows = [{"resolution": k, **v} for k, v in r["resolutions"].items()]
    res = {k: v for k, v in r.items() if k != "resolutions"}
    return res, rows, f"moment {r['moment']:.8g}"


def _cmd_finite_bound(p, seed):
    from .oscillatory import finite_bound_scan
    ts = p["ts"] if p["ts"] is not None else [p["t"]]
    r = finite_bound_scan(float(p["s_exp"]), tuple(float(t) for t in ts), _grid(p))
    rows = [{k: row[k] for k in ("t", "S", "S_over_1pt", "last_band_share", "low_part")} for row in r["rows"]]
    return r, rows, f"S(t) max {max(x['S'] for x in rows):.6g}"


def _solver_cfg(p, t_end=None):
    from .gkdv_solver import SolverConfig
    return SolverConfig(int(p["k"]), float(p["dt"]), float(t_end if t_end is not None else p["t_end"]),
                        _grid(p), snapshot_stride=int(p["snapshot_stride"]), nonlinear=bool(p["nonlinear"]))


def _initial(p, cfg, seed):
    from .persistence_lab import ExperimentConfig, initial_data
    s = 0.125
    exp = ExperimentConfig(s, max(s, 0.25), 0.0, cfg.k, p["initial"], cfg, amplitude=float(p["amplitude"]), seed=seed)
    return initial_data(exp)


def _cmd_solve(p, seed, out_dir=None):
    from .gkdv_solver import invariants, solve
    cfg = _solver_cfg(p)
    traj = solve(_initial(p, cfg, seed), cfg)
    rows = []
    for t, v in zip(traj.times, traj.values):
        mass, mean, energy = invariants(v, cfg.grid, cfg.k)
        rows.append({"t": t, "mass": mass, "mean": mean, "energy": energy, "sup": float(np.max(np.abs(v)))})
    res = {"conservation": traj.conservation.__dict__, "snapshots": int(traj.times.size)}
    if p["save_trajectory"] and out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        res["trajectory_file"] = str(traj.save(Path(out_dir) / "trajectory.npz"))
    return res, rows, f"mass drift {traj.conservation.mass_drift:.3e}"


def _cmd_picard(p, seed):
    from .gkdv_solver import picard_iterate, solve
    from .spectral_core import l2_norm
    cfg = _solver_cfg(p, t_end=p["T"])
    u0 = _initial(p, cfg, seed)
    up, rep = picard_iterate(u0, float(p["T"]), cfg, int(p["iters"]), return_report=True)
    diff = l2_norm(up - solve(u0, cfg).final)
    rows = [{"iteration": i + 1, "difference": d, "ratio": (rep.ratios[i - 1] if i > 0 else "")}
            for i, d in enumerate(rep.differences)]
    return {"l2_difference_vs_solve": diff, "ratios": rep.ratios}, rows, f"picard vs solve {diff:.3e}"


def _cmd_kato(p, seed):
    from .gkdv_solver import kato_identity_terms, solve
    from .spectral_core import truncated_japanese
    cfg = _solver_cfg(p)
    traj = solve(_initial(p, cfg, seed), cfg)
    r = kato_identity_terms(traj, truncated_japanese(float(p["weight_s"]), float(p["n_cut"])))
    row = {**r["terms"], "residual": r["residual"], "literal_residual": r["literal_residual"]}
    return r, [row], f"residual {r['residual']:.3e}"


def _cmd_linear_decay(p, seed):
    from .persistence_lab import linear_decay_check
    from .spectral_core import Field
    grid = _grid(p)
    lam = float(p["scale"])
    u0 = Field.from_function(grid, lambda x: np.exp(-(lam * x) ** 2))
    r = linear_decay_check(u0, float(p["s"]), [float(t) for t in p["ts"]])
    return r, r["rows"], f"max ratio {r['max_ratio']:.6g}"


def _experiment(p, seed):
    from .persistence_lab import ExperimentConfig
    cfg = _solver_cfg(p)
    return ExperimentConfig(float(p["s"]), float(p["s_prime"]), float(p["epsilon"]), int(p["k"]), p["initial"],
                            cfg, tuple(float(t) for t in p["checkpoints"]), float(p["amplitude"]), seed)


def _cmd_weak(p, seed):
    from .persistence_lab import weak_persistence_experiment
    r = weak_persistence_experiment(_experiment(p, seed))
    r.pop("trajectory")
    rows = []
    for row in r["rows"]:
        for n, v in row["truncated"].items():
            rows.append({"t": row["t"], "label": f"truncated_N{n}", "value": v})
        rows.append({"t": row["t"], "label": "japanese_s", "value": row["japanese"]})
        rows.append({"t": row["t"], "label": "interpolation_ratio", "value": row["interpolation_ratio"]})
    return r, rows, f"growth {r['growth']:.6g}"


def _cmd_main(p, seed):
    from .persistence_lab import main_persistence_experiment
    r = main_persistence_experiment(_experiment(p, seed), with_commutator_route=bool(p["commutator_route"]))
    traj = r.pop("trajectory")
    T = float(traj.times[-1])
    rows = [{"t": T, "label": k, "value": v} for k, v in r["norms"].items()]
    rows += [{"t": c["t"], "label": "absx_s", "value": c["absx_s"]} for c in r["checkpoints"]]
    rows += [{"t": T, "label": f"ratio_{k}", "value": v} for k, v in r["ratios"].items()]
    return r, rows, f"contract ratio {r['ratios']['contract']:.6g}"


def _cmd_duhamel(p, seed):
    from .persistence_lab import duhamel_smoothing_check, random_forcing
    grid = _grid(p)
    times = np.linspace(0.0, float(p["T"]), int(p["snapshots"]))
    rows, worst = [], {}
    rng = np.random.default_rng(seed)
    for i in range(int(p["samples"])):
        r = duhamel_smoothing_check(random_forcing(grid, times, int(rng.integers(2 ** 31))))
        for label, v in r["rows"].items():
            rows.append({"sample": i, "label": label, "lhs": v["lhs"], "rhs": v["rhs"], "ratio": v["ratio"]})
            worst[label] = max(worst.get(label, 0.0), v["ratio"])
    return {"max_ratios": worst}, rows, f"max smoothing ratio {worst['smoothing']:.6g}"


_GRID_DEFAULTS = {"num_points": 4096, "half_length": 40.0}
_SOLVER_DEFAULTS = {"k": 2, "dt": 1e-3, "t_end": 1.0, "num_points": 2048, "half_length": 40.0,
                    "snapshot_stride": 10, "nonlinear": True, "initial": "Soliton", "amplitude": 1.0}


@dataclass(frozen=True)
class Command:
    run: Callable
    params: dict
    wants_dir: bool = False


COMMANDS: dict[str, Command] = {
    "lp-check": Command(_cmd_lp_check, dict(_GRID_DEFAULTS)),
    "leibniz-scan": Command(_cmd_leibniz_scan, {"alpha": 0.125, "count": 100, "num_points": 2048,
                                                "half_length": 40.0}),
    "oscint": Command(_cmd_oscint, {"xi": _REQUIRED, "omega": _REQUIRED, "t": _REQUIRED, "method": "both",
                                    "tol": 1e-8}),
    "e-sin": Command(_cmd_e_sin, {"a": -2.0, "b": -1.0}),
    "kernel": Command(_cmd_kernel, {"num_points": 2 ** 17, "xi_box": 1600.0}),
    "finite-bound": Command(_cmd_finite_bound, {"s_exp": 0.125, "t": 1.0, "ts": None, "num_points": 2 ** 16,
                                                "half_length": 128.0}),
    "solve": Command(_cmd_solve, {**_SOLVER_DEFAULTS, "save_trajectory": False}, wants_dir=True),
    "picard": Command(_cmd_picard, {**_SOLVER_DEFAULTS, "T": 0.05, "iters": 8, "snapshot_stride": 1}),
    "kato-residual": Command(_cmd_kato, {**_SOLVER_DEFAULTS, "snapshot_stride": 1, "weight_s": 0.5,
                                         "n_cut": 5.0}),
    "linear-decay": Command(_cmd_linear_decay, {"s": 0.125, "ts": [0.5, 1, 2, 4, 8], "scale": 1.0,
                                                "num_points": 2 ** 18, "half_length": 16384.0}),
    "weak-persistence": Command(_cmd_weak, {**_SOLVER_DEFAULTS, "k": 1, "initial": "Gaussian", "s": 0.25,
                                            "s_prime": 0.25, "epsilon": 0.1, "num_points": 4096,
                                            "half_length": 200.0, "checkpoints": [0.0, 0.5, 1.0]}),
    "main-persistence": Command(_cmd_main, {**_SOLVER_DEFAULTS, "t_end": 0.5, "s": 0.125, "s_prime": 0.25,
                                            "epsilon": 0.0, "snapshot_stride": 5,
                                            "checkpoints": [0.0, 0.25, 0.5], "commutator_route": True}),
    "duhamel-check": Command(_cmd_duhamel, {"T": 0.5, "snapshots": 201, "samples": 5, "num_points": 1024,
                                            "half_length": 40.0}),
}

_GLOBAL_KEYS = {"seed", "output_dir"}


def _schema() -> dict:
    with open(Path(str(resources.files("decaylab") / "data" / "csv_schema.json"))) as fh:
        return json.load(fh)


def validate(command: str, raw: Any) -> dict:
    """Merge defaults and check keys and types; raises ConfigError before any work."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", module=_MOD, operation="validate")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a flat JSON object", module=_MOD, operation="validate")
    spec = COMMANDS[command].params
    unknown = set(raw) - set(spec) - _GLOBAL_KEYS
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {sorted(unknown)}", module=_MOD, operation="validate")
    params = {}
    for key, default in spec.items():
        if key in raw:
            value = raw[key]
            if isinstance(value, dict):
                raise ConfigError(f"key {key!r} must be a scalar or array", module=_MOD, operation="validate")
            if default is not _REQUIRED and default is not None and not _compatible(default, value):
                raise ConfigError(f"key {key!r} has type {type(value).__name__}, expected "
                                  f"{type(default).__name__}", module=_MOD, operation="validate")
            params[key] = value
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}", module=_MOD, operation="validate")
        else:
            params[key] = default
    return params


def _compatible(default, value) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, (int, float)):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, list):
        return isinstance(value, list)
    return isinstance(value, type(default))


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None or v == "":
        return "" if v is None else str(v)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def render_csv(command: str, rows: list[dict], extra_columns: list[str] | None = None) -> str:
    columns = list(extra_columns or []) + _schema()["commands"][command]
    buf = io.StringIO()
    buf.write(f"# decaylab-csv schema={SCHEMA_VERSION} command={command}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return obj.value
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def execute(command: str, params: dict, seed: int, out_dir: Path | None) -> tuple[dict, list[dict], str]:
    cmd = COMMANDS[command]
    if cmd.wants_dir:
        return cmd.run(params, seed, out_dir)
    return cmd.run(params, seed)


def _report(command: str, params: dict, seed: int, results: dict) -> dict:
    grid_keys = {k: params[k] for k in ("num_points", "half_length") if k in params}
    return _jsonable({"experiment_id": results.get("experiment_id", command), "command": command,
                      "config": {**params, "seed": seed}, "results": results,
                      "norms": results.get("norms", {}), "ratios": results.get("ratios", {}),
                      "frozen_constants_version": constants.version(), "grid_diagnostics": grid_keys})


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", module=_MOD, operation="run") from None


def run(command: str, config_path: str, out: str | None = None, seed: int | None = None) -> int:
    try:
        raw = _load_config(config_path)
        params = validate(command, raw)
        seed = int(seed if seed is not None else raw.get("seed", 0))
        out_dir = Path(out or raw.get("output_dir") or ".")
        results, rows, summary = execute(command, params, seed, out_dir)
        report = json.dumps(_report(command, params, seed, results), indent=2, sort_keys=True)
        write_atomic(out_dir / f"{command}.json", report + "\n")
        write_atomic(out_dir / f"{command}.csv", render_csv(command, rows))
    except LabError as exc:
        print(f"{command}: error [{exc.where()}] {exc}", file=sys.stderr)
        return exc.exit_code
    print(f"{command}: ok, {summary}")
    return 0


def _sweep_one(args):
    command, params, seed = args
    try:
        _, rows, _ = execute(command, params, seed, None)
        return "ok", rows
    except LabError as exc:
        return f"error {exc.exit_code} [{exc.where()}] {exc}", []


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def sweep(command: str, config_path: str, axis: str, values: list, out: str | None = None,
          seed: int | None = None) -> int:
    try:
        raw = _load_config(config_path)
        params = validate(command, raw)
        if axis not in COMMANDS[command].params:
            raise ConfigError(f"{axis!r} is not a parameter of {command}", module=_MOD, operation="sweep")
        if isinstance(params[axis], (list, dict)):
            raise ConfigError(f"{axis!r} is not a scalar parameter", module=_MOD, operation="sweep")
        unique = list(dict.fromkeys(values))
        if len(unique) < len(values):
            print(f"sweep: warning, {len(values) - len(unique)} duplicate value(s) removed", file=sys.stderr)
        jobs = []
        for v in unique:
            trial = dict(raw, **{axis: v})
            jobs.append((command, validate(command, trial), int(seed if seed is not None else raw.get("seed", 0))))
        out_dir = Path(out or raw.get("output_dir") or ".")
    except LabError as exc:
        print(f"sweep {command}: error [{exc.where()}] {exc}", file=sys.stderr)
        return exc.exit_code
    n = _workers()
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            outcomes = list(pool.map(_sweep_one, jobs))
    else:
        outcomes = [_sweep_one(j) for j in jobs]
    status = [(v, s) for v, (s, _) in zip(unique, outcomes)]
    if any(s != "ok" for _, s in status):
        for v, s in status:
            print(f"  {axis}={v}: {s}", file=sys.stderr)
        return 1
    rows = []
    for v, (_, rs) in zip(unique, outcomes):
        rows += [{axis: v, **r} for r in rs]
    extra = [axis]
    if command == "finite-bound" and len(rows) >= 2:
        tv = np.array([r["t"] for r in rows], dtype=float)
        sv = np.array([r["S"] for r in rows], dtype=float)
        c1, c0 = np.polyfit(tv, sv, 1)
        for r in rows:
            r.update({"fit_c0": c0, "fit_c1": c1})
        extra = [axis, "fit_c0", "fit_c1"]
    if axis in _schema()["commands"][command]:
        extra.remove(axis)
    write_atomic(out_dir / f"{command}_sweep.csv", render_csv(command, rows, extra))
    print(f"sweep {command}: ok, {len(rows)} rows over {len(unique)} value(s)")
    return 0


def _parse_values(text: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        try:
            out.append(json.loads(item))
        except json.JSONDecodeError:
            out.append(item)
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="decaylab", description="Numerical decay laboratory.")
    parser.add_argument("command", choices=[*COMMANDS, "sweep"])
    parser.add_argument("target", nargs="?", help="command to sweep (sweep only)")
    parser.add_argument("--config", required=True)
    parser.add_argument("--out")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--axis")
    parser.add_argument("--values")
    args = parser.parse_args(argv)
    if args.command == "sweep":
        if args.target not in COMMANDS or not args.axis or args.values is None:
            print("sweep needs a command, --axis and --values", file=sys.stderr)
            return ConfigError.exit_code
        return sweep(args.target, args.config, args.axis, _parse_values(args.values), args.out, args.seed)
    return run(args.command, args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
