"""Frozen regression constants for the bounded-but-unspecified inequalities.

Values live in ``data/constants.json`` together with the seed and grids that
produced them. ``python3 -m decaylab.constants`` recomputes and rewrites it.
A measured quantity may exceed its frozen value by at most ``SLACK``.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

SLACK = 1.10
_FILE = "constants.json"


def _path() -> Path:
    return Path(str(resources.files("decaylab") / "data" / _FILE))


@lru_cache(maxsize=1)
def load() -> dict:
    with open(_path()) as fh:
        return json.load(fh)


def version() -> str:
    return load()["version"]


def get(name: str) -> float:
    return float(load()["constants"][name]["value"])


def within(name: str, measured: float) -> bool:
    return measured <= SLACK * get(name)


# ---------------------------------------------------------------- regeneration
# Each entry measures one regression constant on a fixed grid and seed.

SEED = 0
OSC_OMEGAS = (-8.0, 8.0, 64.0, 512.0)
OSC_TS = (0.5, 2.0)
E_SIN_PAIRS = tuple((a, b) for a in (-0.5, -2.0, -8.0, -32.0) for b in (0.9 * a, 0.5 * a, 0.1 * a, 0.01 * a))
LINEAR_SCALES = (0.5, 1.0, 2.0)


def _leibniz():
    from .dyadic_lp import DyadicPartition
    from .frac_leibniz import leibniz_defect_two_term, random_family
    from .spectral_core import Grid
    grid = Grid(2048, 40.0)
    part = DyadicPartition(grid)
    fam = random_family(grid, 200, SEED)
    ratios = [leibniz_defect_two_term(fam[2 * i], fam[2 * i + 1], 0.125, part).ratio for i in range(100)]
    return {"leibniz_two_term_max_ratio": max(ratios)}


def _oscillatory():
    from .oscillatory import bound_ratio_scan
    scan = bound_ratio_scan(OSC_OMEGAS, OSC_TS)
    if scan["failures"]:
        raise RuntimeError(f"oscillatory scan failures: {scan['failures']}")
    return {f"osc_weighted_max_{case}": v for case, v in scan["maxima"].items()}


def _e_sin():
    from .oscillatory import e_sin_check
    return {"e_sin_max_ratio": max(e_sin_check(a, b)["ratio"] for a, b in E_SIN_PAIRS)}


def _kernel():
    from .frac_leibniz import bessel_kernel_checks
    r = bessel_kernel_checks()
    return {"kernel_moment": r["moment"], "kernel_sup_product": r["sup_product"]}


def _finite_bound():
    from .oscillatory import finite_bound_scan
    r = finite_bound_scan()
    return {"finite_bound_c0": r["fit_c0"], "finite_bound_c1": r["fit_c1"],
            "finite_bound_max_S": max(row["S"] for row in r["rows"])}


def _linear_decay():
    import numpy as np

    from .persistence_lab import linear_decay_check
    from .spectral_core import Field, Grid
    grid = Grid(2 ** 18, 16384.0)
    ratios = []
    for lam in LINEAR_SCALES:
        u0 = Field.from_function(grid, lambda x: np.exp(-(lam * x) ** 2))
        ratios.append(linear_decay_check(u0, 0.125, (0.5, 1.0, 2.0, 4.0, 8.0))["max_ratio"])
    return {"linear_decay_max_ratio": max(ratios)}


def _solver_family():
    from .gkdv_solver import SolverConfig, picard_iterate, soliton
    from .persistence_lab import ExperimentConfig, main_persistence_experiment
    from .spectral_core import Grid
    grid = Grid(2048, 40.0)
    cfg = SolverConfig(2, 1e-3, 0.5, grid, snapshot_stride=5)
    exp = ExperimentConfig(0.125, 0.25, 0.0, 2, "Soliton", cfg, (0.0, 0.25, 0.5))
    main = main_persistence_experiment(exp, with_commutator_route=False)
    pcfg = SolverConfig(2, 1e-3, 0.05, grid)
    _, rep = picard_iterate(soliton(grid, 1.0, 2), 0.05, pcfg, 8, return_report=True)
    return {"main_contract_ratio": main["ratios"]["contract"], "picard_max_ratio": max(rep.ratios)}


def _duhamel():
    import numpy as np

    from .persistence_lab import duhamel_smoothing_check, random_forcing
    from .spectral_core import Grid
    grid = Grid(1024, 40.0)
    times = np.linspace(0.0, 0.5, 201)
    smooth, strich = 0.0, 0.0
    for i in range(8):
        rows = duhamel_smoothing_check(random_forcing(grid, times, SEED + i))["rows"]
        smooth = max(smooth, rows["smoothing"]["ratio"])
        strich = max(strich, max(v["ratio"] for k, v in rows.items() if k.startswith("strichartz")))
    return {"duhamel_smoothing_max_ratio": smooth, "duhamel_strichartz_max_ratio": strich}


MEASUREMENTS = (_leibniz, _oscillatory, _e_sin, _kernel, _finite_bound, _linear_decay, _solver_family, _duhamel)

GRIDS = {
    "leibniz": "Grid(2048, 40), 100 pairs, alpha 1/8",
    "oscillatory": f"contour route, omegas {list(OSC_OMEGAS)}, t {list(OSC_TS)}, tol 1e-9",
    "kernel": "2^17 points, frequency box 1600, three resolutions",
    "finite_bound": "Grid(2^16, 128), s = 1/8, t in 1/4..8",
    "linear_decay": f"Grid(2^18, 16384), Gaussian scales {list(LINEAR_SCALES)}, s = 1/8",
    "solver": "Grid(2048, 40), k = 2 soliton, dt 1e-3, T 0.5 (picard T 0.05)",
    "duhamel": "Grid(1024, 40), T 0.5, 201 snapshots, 8 random forcings",
}


def regenerate(path: Path | None = None, version_tag: str = "1") -> dict:
    values: dict = {}
    for fn in MEASUREMENTS:
        values.update(fn())
    doc = {"version": version_tag, "seed": SEED, "slack": SLACK, "grids": GRIDS,
           # fixed by construction, not measured
           "limits": {"weak_growth": 3.0, "finite_bound_fit_residual": 0.20},
           "constants": {k: {"value": float(v)} for k, v in sorted(values.items())}}
    target = path or _path()
    tmp = Path(str(target) + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    tmp.replace(target)
    load.cache_clear()
    return doc


if __name__ == "__main__":
    print(json.dumps(regenerate()["constants"], indent=2))
