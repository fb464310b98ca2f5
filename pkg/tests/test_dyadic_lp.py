import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from decaylab.bumps import dyadic_bump, low_pass, smooth_step
from decaylab.dyadic_lp import (AppendixOperatorFamily, DyadicPartition, appendix_term_bounds,
                                band_symbol, maximal, seq_norm)
from decaylab.errors import BandRangeError, DomainError
from decaylab.spectral_core import Field, Grid, l2_norm, transform


@given(st.floats(-6.0, 6.0))
def test_smooth_step_symmetry(v):
    a, b = smooth_step(np.array([v]))[0], smooth_step(np.array([-1.0 - v]))[0]
    assert a + b == pytest.approx(1.0, abs=1e-13)


@given(st.floats(1e-3, 1e3))
def test_dyadic_bumps_telescope(u):
    total = sum(dyadic_bump(np.array([u / 2.0 ** n]))[0] for n in range(-20, 21))
    assert total == pytest.approx(1.0, abs=1e-13)


def test_bump_support():
    u = np.array([0.3, 0.5, 1.0, 2.0, 2.5])
    assert np.array_equal(dyadic_bump(u) > 0, [False, False, True, False, False])
    assert dyadic_bump(np.array([1.0]))[0] == pytest.approx(1.0, abs=1e-14)
    assert low_pass(np.array([0.4]), 0.0)[0] == 1.0 and low_pass(np.array([1.1]), 0.0)[0] == 0.0


def test_partition_range_and_reconstruction(grid4096):
    part = DyadicPartition(grid4096)
    assert part.n_min == -1 and part.n_max == 6
    rng = np.random.default_rng(3)
    f = Field(grid4096, rng.standard_normal(grid4096.num_points))
    pieces = part.decompose(f, tails=True)
    total = pieces[0]
    for p in pieces[1:]:
        total = total + p
    assert l2_norm(total - f) / l2_norm(f) < 1e-10


def test_annulus_reconstruction(grid4096):
    part = DyadicPartition(grid4096)
    xi = np.abs(grid4096.frequencies)
    annulus = (xi >= 2.0 ** part.n_min) & (xi <= 2.0 ** part.n_max)
    total = sum(band_symbol(n, xi) for n in part.bands)
    assert np.max(np.abs(total[annulus] - 1.0)) < 1e-10


def test_far_bands_orthogonal_at_symbol_level(grid4096):
    part = DyadicPartition(grid4096)
    xi = grid4096.frequencies
    for n in part.bands:
        for m in part.bands:
            if abs(n - m) >= 2:
                assert np.max(band_symbol(n, xi) * band_symbol(m, xi)) == 0.0


def test_band_range_errors(grid4096):
    part = DyadicPartition(grid4096)
    f = Field(grid4096, np.ones(grid4096.num_points))
    with pytest.raises(BandRangeError):
        part.project(part.n_max + 1, f)
    with pytest.raises(DomainError):
        part.project_weighted(0, -0.5, f)
    with pytest.raises(BandRangeError):
        DyadicPartition(Grid(4, 0.5))


# frequency spacing 1/16, so every 2^n with n >= -4 is a grid frequency
MODE_GRID = Grid(4096, 16 * np.pi)


def test_single_band_mode_lives_in_one_band():
    # a pure mode at 2^n is seen only by band n (eta(1) = 1, neighbours vanish there)
    part = DyadicPartition(MODE_GRID)
    n = 2
    f = Field(MODE_GRID, np.cos(2.0 ** n * MODE_GRID.x))
    for m in part.bands:
        share = l2_norm(part.project(m, f)) / l2_norm(f)
        assert share == pytest.approx(1.0 if m == n else 0.0, abs=1e-12)


def test_square_function_on_dyadic_modes():
    # modes placed at band centres: the square function equals the L^2 norm
    part = DyadicPartition(MODE_GRID)
    x = MODE_GRID.x
    f = Field(MODE_GRID, sum(np.cos(2.0 ** n * x) / (1 + n * n) for n in part.bands))
    assert seq_norm(2, "L2", part.decompose(f)) == pytest.approx(l2_norm(f), rel=1e-12)


@given(st.integers(0, 1000))
def test_seq_norm_ordering(seed):
    g = Grid(512, 20.0)
    part = DyadicPartition(g)
    rng = np.random.default_rng(seed)
    bands = part.decompose(Field(g, rng.standard_normal(512)))
    assert seq_norm(np.inf, "Linf", bands) <= seq_norm(2, "Linf", bands) + 1e-12
    assert seq_norm(2, "Linf", bands) <= seq_norm(1, "Linf", bands) + 1e-12
    with pytest.raises(DomainError):
        seq_norm(2, "L7", bands)


@given(st.integers(0, 1000))
def test_maximal_dominates(seed):
    g = Grid(256, 10.0)
    f = Field(g, np.random.default_rng(seed).standard_normal(256))
    m = maximal(f).values.real
    assert np.all(m >= np.abs(f.values) - 1e-14)
    const = Field(g, np.full(256, 2.5))
    assert np.allclose(maximal(const).values, 2.5)


def test_appendix_family_symbols():
    fam = AppendixOperatorFamily(0.0, 0.125)
    x = np.linspace(-10, 10, 2001)
    # eta_j times |x|^a_j recovers eta
    assert np.allclose(fam.eta_j(2, x) * np.abs(x) ** 0.125, fam.eta(x), atol=1e-14)
    assert np.all(fam.eta_tilde(np.array([0.25, 1.0, 4.0])) == 1.0)
    assert fam.eta_tilde(np.array([0.1, 9.0])).max() == 0.0
    assert fam.p_tilde(np.array([100.0]))[0] == 1.0
    with pytest.raises(DomainError):
        AppendixOperatorFamily(0.6, 0.6)


def test_appendix_term_bounds_finite():
    g = Grid(1024, 30.0)
    x = g.x
    f = Field(g, np.exp(-x ** 2) * np.cos(3 * x))
    h = Field(g, np.exp(-0.5 * x ** 2))
    r = appendix_term_bounds(AppendixOperatorFamily(), f, h, 2.0)
    assert all(np.isfinite(v) for v in r["ratios"].values())
    assert r["maximal_bound"] >= r["bound"] * (1 - 1e-12)
    with pytest.raises(DomainError):
        appendix_term_bounds(AppendixOperatorFamily(), f, h, 1.0)


def test_band_projection_of_gaussian_symbol(grid4096):
    part = DyadicPartition(grid4096)
    f = Field.from_function(grid4096, lambda x: np.exp(-x ** 2))
    hat = transform(part.project(0, f)).values
    expected = band_symbol(0, grid4096.frequencies) * np.sqrt(np.pi) * np.exp(-grid4096.frequencies ** 2 / 4)
    assert np.max(np.abs(hat - expected)) < 1e-12
