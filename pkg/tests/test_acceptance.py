"""Acceptance criteria 1-12. Each test prints one PASS/FAIL line; the terminal
summary (see conftest.py) repeats them in order.

Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""

import math
import time

import numpy as np
import pytest

from decaylab import constants
from decaylab.dyadic_lp import DyadicPartition, band_symbol
from decaylab.frac_leibniz import bessel_kernel_checks, leibniz_defect_two_term, random_family
from decaylab.gkdv_solver import (SolverConfig, kato_identity_terms, picard_iterate, solve,
                                  soliton)
from decaylab.oscillatory import (Method, OscIntegralQuery, bound_ratio_scan, classify, e_sin_check,
                                  evaluate, finite_bound_scan)
from decaylab.persistence_lab import (ExperimentConfig, linear_decay_check,
                                      main_persistence_experiment, weak_persistence_experiment)
from decaylab.spectral_core import (Field, Grid, airy_group, apply_multiplier, bessel, diff,
                                    frac_derivative, frequency_l2_norm, l2_norm, truncated_japanese,
                                    weighted_l2, abs_pow)

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (bool(ok), detail)
    print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_spectral_soundness():
    start = time.perf_counter()
    g = Grid(4096, 40.0)
    rng = np.random.default_rng(0)
    f = Field(g, rng.standard_normal(12) @ np.cos(np.outer(np.arange(12), g.x) * 0.6) * np.exp(-0.05 * g.x ** 2))
    norm = l2_norm(f)
    plancherel = abs(norm - frequency_l2_norm(f) / math.sqrt(2 * math.pi)) / norm
    seq = apply_multiplier(bessel(1.0), apply_multiplier(frac_derivative(0.25), f))
    composition = l2_norm(seq - apply_multiplier(bessel(1.0) * frac_derivative(0.25), f)) / l2_norm(seq)
    unitarity = max(abs(l2_norm(airy_group(t, f)) - norm) / norm for t in (-2.0, 0.3, 1.0, 5.0))
    group = max(l2_norm(airy_group(s, airy_group(t, f)) - airy_group(s + t, f)) / norm
                for s, t in [(0.3, 0.7), (-1.0, 2.5), (4.0, -4.0)])
    elapsed = time.perf_counter() - start
    worst = max(plancherel, composition, unitarity, group)
    record(1, worst < 1e-10 and elapsed < 10.0,
           f"max residual {worst:.2e} (< 1e-10), runtime {elapsed:.2f} s (< 10 s)")


def test_criterion_02_commutation_with_position():
    g = Grid(4096, 40.0)
    x = g.x
    # width-2 Gaussian; see test_spectral_core for why exp(-x^2) wraps at L = 40
    f = Field(g, np.exp(-x ** 2 / 8.0))
    t = 0.5
    lhs = Field(g, x * airy_group(t, f).values)
    rhs = airy_group(t, Field(g, 3 * t * diff(f, 2).values + x * f.values))
    res = l2_norm(lhs - rhs) / l2_norm(f)
    record(2, res < 1e-8, f"residual {res:.2e} (< 1e-8)")


def test_criterion_03_partition():
    g = Grid(4096, 40.0)
    part = DyadicPartition(g)
    xi = np.abs(g.frequencies)
    annulus = (xi >= 2.0 ** part.n_min) & (xi <= 2.0 ** part.n_max)
    residual = float(np.max(np.abs(sum(band_symbol(n, xi) for n in part.bands)[annulus] - 1.0)))
    overlap = max(float(np.max(band_symbol(n, xi) * band_symbol(m, xi)))
                  for n in part.bands for m in part.bands if abs(n - m) >= 2)
    record(3, residual < 1e-10 and overlap == 0.0,
           f"annulus residual {residual:.1e} (< 1e-10), far-band symbol product {overlap} (== 0)")


def test_criterion_04_fractional_leibniz():
    grid = Grid(2048, 40.0)
    part = DyadicPartition(grid)
    fam = random_family(grid, 200, constants.SEED)
    ratios = [leibniz_defect_two_term(fam[2 * i], fam[2 * i + 1], 0.125, part).ratio for i in range(100)]
    mx = max(ratios)
    frozen = constants.get("leibniz_two_term_max_ratio")
    reproducible = abs(mx - frozen) <= 0.1 * frozen
    f, h = fam[0], fam[1]
    base = ratios[0]
    scaled = leibniz_defect_two_term(2.5 * f, 0.3 * h, 0.125, part).ratio
    shifted = leibniz_defect_two_term(f.shifted(101), h.shifted(101), 0.125, part).ratio
    half = Grid(grid.num_points, grid.half_length / 2)
    dilated = leibniz_defect_two_term(Field(half, f.values), Field(half, h.values), 0.125).ratio
    invariance = max(abs(r - base) / base for r in (scaled, shifted, dilated))
    record(4, np.isfinite(mx) and reproducible and invariance < 1e-12,
           f"max ratio {mx:.4f} vs frozen {frozen:.4f} (within 10%), invariance {invariance:.1e} (< 1e-12)")


def test_criterion_05_oscillatory_trichotomy():
    start = time.perf_counter()
    cases, disagreements = set(), []
    for omega in (-8.0, 8.0, 64.0):
        for t in (0.1, 0.5, 2.0):
            for r in (0.05, 1.0, 20.0):
                xi = r * math.sqrt(abs(omega) / t)
                res = evaluate(OscIntegralQuery(xi, omega, t, Method.BOTH, tol=1e-7))
                cases.add(res.case_label)
                if not res.agreement["agree"]:
                    disagreements.append((xi, omega, t, res.agreement["difference"]))
    coarse = bound_ratio_scan(constants.OSC_OMEGAS, constants.OSC_TS, resolution=1.0)
    fine = bound_ratio_scan(constants.OSC_OMEGAS, constants.OSC_TS, resolution=2.0)
    spread = max(abs(fine["maxima"][c] - v) / v for c, v in coarse["maxima"].items())
    frozen_ok = all(constants.within(f"osc_weighted_max_{c}", v) for c, v in coarse["maxima"].items())
    elapsed = time.perf_counter() - start
    ok = (len(cases) == 4 and not disagreements and not coarse["failures"] and not fine["failures"]
          and spread <= 0.10 and frozen_ok and elapsed < 300.0)
    maxima = ", ".join(f"{c} {v:.3g}" for c, v in sorted(coarse["maxima"].items()))
    record(5, ok, f"27/27 agree={not disagreements}, {len(cases)} cases, maxima [{maxima}], "
                  f"doubling spread {spread:.1e} (<= 10%), {elapsed:.0f} s (< 300 s)")


def test_criterion_06_finite_multiplier_bound():
    r = finite_bound_scan(0.125, (0.25, 0.5, 1.0, 2.0, 4.0, 8.0), Grid(2 ** 16, 128.0))
    tail = max(row["last_band_share"] for row in r["rows"])
    stable = (constants.within("finite_bound_c0", r["fit_c0"])
              and constants.within("finite_bound_c1", r["fit_c1"]))
    ok = r["fit_residual"] < 0.20 and tail < 0.01 and stable
    record(6, ok, f"S(t) ~ {r['fit_c0']:.3f} + {r['fit_c1']:.4f} t, fit residual {r['fit_residual']:.1%} "
                  f"(< 20%), band tail {tail:.1e} (< 1%)")


def test_criterion_07_kernel():
    r = bessel_kernel_checks()
    ok = (r["sup_spread"] < 0.05 and r["moment_spread"] < 0.01 and np.isfinite(r["sup_product"])
          and constants.within("kernel_moment", r["moment"]))
    record(7, ok, f"sup {r['sup_product']:.4f} spread {r['sup_spread']:.1e} (< 5%), "
                  f"moment {r['moment']:.6f} spread {r['moment_spread']:.1e} (< 1%)")


def test_criterion_08_e_sin():
    rows = [e_sin_check(a, b) for a, b in constants.E_SIN_PAIRS]
    mx = max(r["ratio"] for r in rows)
    ok = all(r["positive_at_nodes"] for r in rows) and constants.within("e_sin_max_ratio", mx)
    record(8, ok, f"max ratio {mx:.4f} <= frozen {constants.get('e_sin_max_ratio'):.4f} x {constants.SLACK}, "
                  f"positivity at all nodes")


def test_criterion_09_solver_order_and_conservation():
    grid = Grid(2048, 40.0)
    u0 = soliton(grid, 1.0, 2)
    T = 1.0
    ref = solve(u0, SolverConfig(2, 6.25e-5, T, grid, snapshot_stride=16000)).final
    errs = [l2_norm(solve(u0, SolverConfig(2, dt, T, grid, snapshot_stride=10 ** 6)).final - ref)
            for dt in (1e-3, 5e-4, 2.5e-4)]
    factors = [errs[i] / errs[i + 1] for i in range(2)]
    order_ok = all(12.0 <= f <= 20.0 for f in factors)
    traj = solve(u0, SolverConfig(2, 1e-3, T, grid, snapshot_stride=10))
    drift = traj.conservation.mass_drift
    shape = l2_norm(traj.final - soliton(grid, 1.0, 2, t=T)) / l2_norm(u0)
    record(9, order_ok and drift < 1e-8 and shape < 1e-6,
           f"refinement factors {factors[0]:.1f}, {factors[1]:.1f} (16 +/- 25%), mass drift {drift:.1e} "
           f"(< 1e-8), shape error {shape:.1e} (< 1e-6)")


def test_criterion_10_duhamel_iteration():
    grid = Grid(2048, 40.0)
    u0 = soliton(grid, 1.0, 2)
    cfg = SolverConfig(2, 1e-3, 0.05, grid)
    diff_l2 = l2_norm(picard_iterate(u0, 0.05, cfg, 12) - solve(u0, cfg).final)
    Ts = (0.0125, 0.025, 0.05, 0.1)
    ratios = []
    for T in Ts:
        _, rep = picard_iterate(u0, T, SolverConfig(2, 6.25e-4, T, grid), 10, return_report=True)
        ratios.append(max(rep.ratios))
    slope = float(np.polyfit(np.log(Ts), np.log(ratios), 1)[0])
    monotone = all(a < b for a, b in zip(ratios, ratios[1:]))
    ok = diff_l2 < 1e-6 and monotone and slope >= 0.5 and constants.within("picard_max_ratio", ratios[2])
    record(10, ok, f"picard vs solve {diff_l2:.1e} (< 1e-6), contraction ratios "
                   f"{', '.join(f'{r:.3f}' for r in ratios)}, log-log slope {slope:.2f} (>= 1/2)")


def test_criterion_11_weighted_identity():
    grid = Grid(2048, 40.0)
    u0 = soliton(grid, 1.0, 2)
    w = truncated_japanese(0.5, 5.0)
    coarse = kato_identity_terms(solve(u0, SolverConfig(2, 1e-3, 1.0, grid, snapshot_stride=10)), w)
    fine = kato_identity_terms(solve(u0, SolverConfig(2, 1e-3, 1.0, grid, snapshot_stride=1)), w)
    ok = fine["residual"] < 1e-3 and fine["residual"] < coarse["residual"]
    record(11, ok, f"relative residual {coarse['residual']:.1e} -> {fine['residual']:.1e} "
                   f"under time refinement (< 1e-3, decreasing)")


def test_criterion_12_persistence():
    weak_cfg = SolverConfig(1, 1e-3, 0.5, Grid(4096, 200.0), snapshot_stride=10)
    weak = weak_persistence_experiment(ExperimentConfig(0.25, 0.25, 0.1, 1, "Gaussian", weak_cfg,
                                                        (0.0, 0.25, 0.5)))
    weak_ok = (weak["growth"] <= constants.load()["limits"]["weak_growth"]
               and np.isfinite(weak["smoothing_norm"]))
    main_cfg = SolverConfig(2, 1e-3, 0.5, Grid(2048, 40.0), snapshot_stride=5)
    main = main_persistence_experiment(ExperimentConfig(0.125, 0.25, 0.0, 2, "Soliton", main_cfg,
                                                        (0.0, 0.25, 0.5)))
    finite = all(np.isfinite(v) for v in main["norms"].values())
    contract = main["ratios"]["contract"]
    main_ok = finite and contract <= 1.0 and constants.within("main_contract_ratio", contract)
    # linear baseline: the experiment with the nonlinearity switched off against linear_decay_check
    lin_grid = Grid(8192, 200.0)
    lin_cfg = SolverConfig(2, 5e-3, 0.5, lin_grid, snapshot_stride=10, nonlinear=False)
    lin_exp = ExperimentConfig(0.125, 0.25, 0.0, 2, "Gaussian", lin_cfg, (0.0, 0.25, 0.5))
    lin = main_persistence_experiment(lin_exp, with_commutator_route=False)
    u0 = Field(lin_grid, np.exp(-lin_grid.x ** 2))
    check = linear_decay_check(u0, 0.125, [c["t"] for c in lin["checkpoints"]])
    gap = max(abs(c["absx_s"] - r["lhs"]) / r["lhs"] for c, r in zip(lin["checkpoints"], check["rows"]))
    ok = weak_ok and main_ok and gap < 1e-10
    record(12, ok, f"weak growth {weak['growth']:.3f} (<= 3), main norms finite={finite}, contract ratio "
                   f"{contract:.2e} (<= frozen x {constants.SLACK}), linear baseline gap {gap:.1e} (< 1e-10)")
