import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from decaylab.errors import BoundaryMassError, DomainError, StructuralError
from decaylab.spectral_core import (Field, Grid, Multiplier, Space, abs_pow, airy, airy_group,
                                    apply_multiplier, bessel, boundary_mass, check_boundary_mass,
                                    diff, frac_derivative, frequency_l2_norm, japanese_pow, l2_norm,
                                    lp_norm, sobolev_norm, transform, truncated_japanese, weighted_l2)


def random_field(grid, seed):
    rng = np.random.default_rng(seed)
    x = grid.x
    return Field(grid, (rng.standard_normal(12) @ np.cos(np.outer(np.arange(12), x) * 0.7))
                 * np.exp(-0.1 * x ** 2))


def test_grid_rejects_non_power_of_two():
    with pytest.raises(StructuralError):
        Grid(1000, 10.0)
    with pytest.raises(StructuralError):
        Grid(1024, -1.0)


def test_frequencies_symmetric_with_nyquist_at_zero():
    g = Grid(64, 5.0)
    xi = g.frequencies
    assert xi[g.nyquist_index] == 0.0
    assert np.allclose(np.sort(xi), np.sort(-xi))


def test_gaussian_transform_matches_closed_form(grid4096, gaussian):
    hat = transform(gaussian).values
    xi = grid4096.frequencies
    exact = np.sqrt(np.pi) * np.exp(-xi ** 2 / 4.0)
    mask = np.arange(grid4096.num_points) != grid4096.nyquist_index
    assert np.max(np.abs(hat - exact)[mask]) / np.sqrt(np.pi) < 1e-12


@given(st.integers(0, 10_000))
def test_plancherel(seed):
    g = Grid(1024, 30.0)
    f = random_field(g, seed)
    assert abs(l2_norm(f) - frequency_l2_norm(f) / np.sqrt(2 * np.pi)) <= 1e-10 * l2_norm(f)


@given(st.integers(0, 10_000))
def test_transform_roundtrip(seed):
    f = random_field(Grid(512, 20.0), seed)
    back = transform(f).physical()
    assert back.space is Space.PHYSICAL
    assert np.max(np.abs(back.values - f.values)) < 1e-12


@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.integers(0, 1000))
def test_airy_group_law_and_unitarity(s, t, seed):
    f = random_field(Grid(1024, 30.0), seed)
    both = airy_group(s, airy_group(t, f))
    once = airy_group(s + t, f)
    assert l2_norm(both - once) <= 1e-10 * l2_norm(f)
    assert abs(l2_norm(once) - l2_norm(f)) <= 1e-10 * l2_norm(f)


@given(st.floats(0.0, 2.0), st.floats(0.05, 0.95))
def test_multiplier_composition(s, a):
    g = Grid(1024, 30.0)
    f = random_field(g, 7)
    seq = apply_multiplier(bessel(s), apply_multiplier(frac_derivative(a), f))
    joint = apply_multiplier(bessel(s) * frac_derivative(a), f)
    assert l2_norm(seq - joint) <= 1e-10 * max(l2_norm(seq), 1e-300)


def test_derivative_of_gaussian(grid4096, gaussian):
    x = grid4096.x
    assert np.max(np.abs(diff(gaussian).values - (-2 * x * np.exp(-x ** 2)))) < 1e-12
    # third derivative amplifies FFT round-off by about xi_max^3 ~ 4e6
    assert np.max(np.abs(diff(gaussian, 3).values
                         - (-8 * x ** 3 + 12 * x) * np.exp(-x ** 2))) < 1e-9


def test_frac_derivative_zero_and_one(grid4096, gaussian):
    assert l2_norm(apply_multiplier(frac_derivative(0.0), gaussian) - gaussian) < 1e-15
    # D^1 = H d/dx has the same L^2 norm as the derivative
    assert abs(l2_norm(apply_multiplier(frac_derivative(1.0), gaussian)) - l2_norm(diff(gaussian))) < 1e-12


def test_non_finite_symbol_raises(grid4096, gaussian):
    with pytest.raises(DomainError), np.errstate(divide="ignore"):
        apply_multiplier(Multiplier(lambda xi: 1.0 / xi, "inverse"), gaussian)


def test_commutation_with_position(grid4096):
    # x U(t) f = U(t)(3 t f'' + x f). Width 2: for exp(-x^2) the Airy tail at
    # |x| = 40 is ~exp(-|x| / 12t) ~ 1e-3 and wraps around the box.
    t = 0.5
    x = grid4096.x
    gaussian = Field(grid4096, np.exp(-x ** 2 / 8.0))
    lhs = Field(grid4096, x * airy_group(t, gaussian).values)
    rhs = airy_group(t, Field(grid4096, 3 * t * diff(gaussian, 2).values + x * gaussian.values))
    assert l2_norm(lhs - rhs) / l2_norm(gaussian) < 1e-8


def test_gaussian_norms(grid4096, gaussian):
    assert abs(l2_norm(gaussian) - (np.pi / 2) ** 0.25) < 1e-13
    # int x^2 e^{-2x^2} = sqrt(pi/2) / 4
    assert abs(weighted_l2(abs_pow(2.0), gaussian) ** 2 - np.sqrt(np.pi / 2) / 4) < 1e-13
    assert abs(lp_norm(gaussian, np.inf) - 1.0) < 1e-15
    assert abs(lp_norm(gaussian, 1) - np.sqrt(np.pi)) < 1e-13
    assert sobolev_norm(0.0, gaussian) == pytest.approx(l2_norm(gaussian), rel=1e-14)


@given(st.floats(0.0, 1.0), st.floats(1.6, 50.0), st.floats(0.0, 400.0))
def test_truncated_weight_properties(s, n, x):
    w = truncated_japanese(s, n)
    jp = japanese_pow(2 * s)
    xs = np.array([x, x + 0.5])
    vals = w(xs)
    assert vals[1] >= vals[0] - 1e-12
    if x <= n:
        assert vals[0] == pytest.approx(jp(np.array([x]))[0], rel=1e-12)
    if x > 3 * n:
        assert vals[0] == pytest.approx((2 * n) ** (2 * s), rel=1e-12)
    assert truncated_japanese(s, 2 * n)(xs)[0] >= vals[0] - 1e-12
    assert vals[0] <= jp(np.array([x]))[0] * (1 + 1e-12)


def test_truncated_weight_domain():
    with pytest.raises(DomainError):
        truncated_japanese(0.5, 1.0)
    with pytest.raises(DomainError):
        abs_pow(-1.0)


def test_boundary_guard():
    g = Grid(256, 10.0)
    assert boundary_mass(Field.from_function(g, lambda x: np.exp(-x ** 2))) < 1e-12
    wide = Field.from_function(g, lambda x: np.exp(-0.01 * x ** 2))
    with pytest.warns(RuntimeWarning), pytest.raises(BoundaryMassError):
        check_boundary_mass(wide)


def test_grid_mismatch():
    a = Field(Grid(64, 5.0), np.ones(64))
    b = Field(Grid(64, 6.0), np.ones(64))
    with pytest.raises(StructuralError):
        a + b
    with pytest.raises(StructuralError):
        Field(Grid(64, 5.0), np.ones(32))


def test_runtime_at_4096(grid4096, gaussian):
    start = time.perf_counter()
    for t in np.linspace(0, 2, 50):
        airy_group(t, gaussian)
        apply_multiplier(airy(t) * bessel(0.5), gaussian)
    assert time.perf_counter() - start < 10.0
