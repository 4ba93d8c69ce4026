import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballspace.grid import GridError, GridFunction, constant, make_grid, sample
from ballspace.operators import (
    bessel_domination_constant,
    bessel_potential,
    iterate_maximal,
    maximal,
    radius_ladder,
    riesz,
)
from conftest import random_function


def brute_maximal_1d(values, grid, radii):
    """Independent oracle: exact overlap lengths of (x - r, x + r) with every cell."""
    e = grid.edges(0)
    out = np.zeros_like(values)
    for i, x in enumerate(grid.centers(0)):
        for r in radii:
            over = np.clip(np.minimum(e[1:], x + r) - np.maximum(e[:-1], x - r), 0, None)
            out[i] = max(out[i], float(np.sum(np.abs(values) * over)) / (2 * r))
    return out


def test_constant_normalizations(line, plane):
    one = constant(line, 1.0)
    assert np.allclose(maximal(one).values, 1.0)
    assert np.allclose(maximal(one, "radius").values, 2.0)
    assert np.allclose(maximal(constant(plane, 1.0)).values, 1.0)


def test_indicator_value_at_two(line):
    f = sample("chi(0, 1, x)", line)
    i = np.searchsorted(line.edges(0), 2.0)
    assert maximal(f).values[i] == pytest.approx(0.25, abs=4 * line.h)


def test_ladder_matches_bruteforce():
    g = make_grid(1, [(-2, 2)], 5)
    f = random_function(g, 1, signed=True)
    oracle = brute_maximal_1d(f.values, g, radius_ladder(g))
    np.testing.assert_allclose(maximal(f).values, oracle, rtol=1e-12)


def test_exhaustive_matches_dense_scan():
    g = make_grid(1, [(-1, 1)], 4)
    f = random_function(g, 2)
    dense = np.linspace(g.h / 64, 2 * g.diameter, 6000)
    oracle = np.maximum(brute_maximal_1d(f.values, g, dense), np.abs(f.values))
    ex = maximal(f, exhaustive=True).values
    assert np.all(ex >= oracle - 1e-12)
    np.testing.assert_allclose(ex, oracle, rtol=2e-3)
    assert np.all(ex >= maximal(f).values - 1e-12)


def test_iterates(line):
    f = random_function(line, 3, signed=True)
    np.testing.assert_array_equal(iterate_maximal(f, 0).values, np.abs(f.values))
    assert np.allclose(iterate_maximal(constant(line, 1.0), 2).values, 1.0)
    np.testing.assert_array_equal(iterate_maximal(f, 3).values, maximal(maximal(maximal(f))).values)
    with pytest.raises(ValueError):
        iterate_maximal(f, -1)


@given(st.integers(0, 5000), st.floats(-3, 3))
def test_maximal_sublinear_homogeneous(seed, c):
    g = make_grid(1, [(-2, 2)], 5)
    f, h = random_function(g, seed, True), random_function(g, seed + 7, True)
    assert np.all(maximal(f + h).values <= maximal(f).values + maximal(h).values + 1e-12)
    np.testing.assert_allclose(maximal(f * c).values, abs(c) * maximal(f).values, atol=1e-12)
    assert np.all(maximal(f).values >= np.abs(f.values) - 1e-12)


def test_radius_is_twice_measure_in_1d(line):
    f = random_function(line, 4)
    np.testing.assert_allclose(maximal(f, "radius").values, 2 * maximal(f).values, rtol=1e-12)


def test_maximal_dominates_in_plane(plane):
    f = random_function(plane, 5)
    assert np.all(maximal(f).values >= f.values - 1e-12)


def test_hilbert_closed_form():
    g = make_grid(1, [(-8, 8)], 8)
    f = sample("chi(-1, 1, x)", g)
    x = g.centers(0)
    far = np.minimum(np.abs(x - 1), np.abs(x + 1)) >= 10 * g.h
    exact = np.log(np.abs((x + 1) / (x - 1)))
    Hf = riesz(f).values
    rel = np.abs(Hf[far] - exact[far]) / np.maximum(np.abs(exact[far]), 1e-300)
    assert np.max(rel[np.abs(exact[far]) > 1e-6]) <= 0.05


def test_riesz_odd_kernel(line, plane):
    i = line.size // 2 + 3
    x0 = float(line.centers(0)[i])
    f = sample(f"exp(-4*(x - {x0!r})^2)", line)
    Rf = riesz(f).values
    assert abs(Rf[i]) < 1e-9 * np.max(np.abs(Rf))
    # reflection: R[f(-.)](-x) = -R f(x)
    for grid in (line, plane):
        f = random_function(grid, 6, signed=True)
        flipped = GridFunction(grid, f.values[tuple(slice(None, None, -1) for _ in range(grid.n))])
        for ax in range(grid.n):
            a = riesz(flipped, ax).values[tuple(slice(None, None, -1) for _ in range(grid.n))]
            np.testing.assert_allclose(a, -riesz(f, ax).values, atol=1e-10)


def test_riesz_zero_and_eps(line):
    assert riesz(constant(line, 0.0)).is_zero()
    with pytest.raises(GridError):
        riesz(constant(line, 1.0), eps=line.h / 4)


def test_bessel_examples(unit1):
    f = sample("sin(2*pi*x)", unit1)
    assert bessel_potential(f, 0.0) is f
    np.testing.assert_allclose(bessel_potential(constant(unit1, 3.0), 1.7).values, 3.0)
    np.testing.assert_allclose(bessel_potential(f, 1.0).values, np.sqrt(1 + 4 * np.pi**2) * f.values, atol=1e-10)


@given(st.integers(0, 5000), st.floats(0.1, 3))
def test_bessel_roundtrip(seed, s):
    g = make_grid(2, [(0, 1), (0, 1)], 4)
    f = random_function(g, seed, True)
    back = bessel_potential(bessel_potential(f, s), s, inverse=True)
    np.testing.assert_allclose(back.values, f.values, atol=1e-10)


def test_bessel_domination_finite(line):
    for seed in range(4):
        c = bessel_domination_constant(random_function(line, seed, support=2.0), 0.5)
        assert np.isfinite(c) and c > 0
