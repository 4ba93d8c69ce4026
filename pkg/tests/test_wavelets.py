import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballspace.grid import make_grid, sample
from ballspace.wavelets import (
    FILTERS,
    WaveletError,
    analyze,
    basis_function,
    build_system,
    cascade,
    highpass,
    parse_family,
    partial_sum,
    qmf_defect,
    refinement_residual,
    sampled_generator,
    square_function_V,
    square_function_W,
)
from conftest import random_function


@pytest.mark.parametrize("N", sorted(FILTERS))
def test_filters(N):
    h = FILTERS[N]
    g = highpass(h)
    assert qmf_defect(h) < 1e-12
    for m in range(N):
        assert abs(np.dot(h[: len(h) - 2 * m], g[2 * m :])) < 1e-12
    assert abs(g.sum()) < 1e-12


@pytest.mark.parametrize("N", sorted(FILTERS))
def test_cascade_moments(N):
    level = 10
    phi, psi = cascade(N, level)
    dx = 2.0**-level
    # left sums: exact for Haar, equal to the trapezoid rule otherwise (both ends vanish)
    left = lambda v: v[:-1].sum() * dx
    assert left(phi) == pytest.approx(1.0, abs=1e-6)
    assert abs(left(psi)) < 1e-6
    assert left(phi**2) == pytest.approx(1.0, abs=1e-3)
    assert left(psi**2) == pytest.approx(1.0, abs=1e-3)
    if N > 1:
        assert refinement_residual(N, level) < 1e-10


def test_parse_family():
    assert parse_family("haar") == 1
    assert parse_family("DB3") == 3
    assert parse_family("daubechies(2)") == 2
    assert parse_family(4) == 4
    for bad in ("db9", "coif2", 0):
        with pytest.raises(WaveletError):
            parse_family(bad)


def test_haar_coefficients_bruteforce(unit1):
    f = random_function(unit1, 1, signed=True)
    c = analyze(f, build_system("haar"))
    x = unit1.centers(0)
    for j in range(c.J, c.j_max + 1):
        for k in range(2**j):
            lo, mid, hi = k / 2**j, (k + 0.5) / 2**j, (k + 1) / 2**j
            psi = 2 ** (j / 2) * (((x > lo) & (x < mid)).astype(float) - ((x > mid) & (x < hi)))
            assert c.coefficient(1, j, k) == pytest.approx(np.sum(f.values * psi) * unit1.h, abs=1e-13)
    assert c.coefficient(0, 0, 0) == pytest.approx(np.sum(f.values) * unit1.h, abs=1e-13)


@given(st.integers(0, 10_000), st.sampled_from(["haar", "db2", "db3"]))
def test_parseval_and_reconstruction(seed, family):
    g = make_grid(1, [(-2, 2)], 6)
    f = random_function(g, seed, signed=True)
    c = analyze(f, build_system(family))
    assert c.sum_squares() == pytest.approx(np.sum(f.values**2) * g.h, rel=1e-10)
    np.testing.assert_allclose(partial_sum(c).values, f.values, atol=1e-10)


def test_reconstruction_plane(plane):
    f = random_function(plane, 3, signed=True)
    for fam in ("haar", "db2"):
        c = analyze(f, build_system(fam, n=2))
        assert c.sum_squares() == pytest.approx(np.sum(f.values**2) * plane.cell_volume, rel=1e-10)
        np.testing.assert_allclose(partial_sum(c).values, f.values, atol=1e-10)


def test_haar_partial_sum_is_average(unit1):
    f = random_function(unit1, 2, signed=True)
    c = analyze(f, build_system("haar"))
    for j_cut in (0, 2, 4):
        m = 2 ** (unit1.level - j_cut - 1)
        avg = np.repeat(f.values.reshape(-1, m).mean(axis=1), m)
        np.testing.assert_allclose(partial_sum(c, j_cut).values, avg, atol=1e-12)


def test_haar_square_function_energy(line):
    f = random_function(line, 4, signed=True, support=2.0)
    c = analyze(f, build_system("haar"))
    V, W = square_function_V(c), square_function_W(c)
    assert np.sum(V.values**2 + W.values**2) * line.h == pytest.approx(np.sum(f.values**2) * line.h, rel=1e-12)


def test_square_function_monotone_in_s(line):
    c = analyze(random_function(line, 5, support=2.0), build_system("db2"))
    W0, W1 = square_function_W(c, 0.0), square_function_W(c, 0.5)
    assert np.all(W1.values >= W0.values * (1 - 1e-12))
    with pytest.raises(WaveletError):
        square_function_W(c, -0.1)


def test_basis_functions(line):
    sysH = build_system("haar")
    a = basis_function(sysH, line, 1, 2, 3)
    np.testing.assert_allclose(a.values, sampled_generator(sysH, line, 1, 2, 3).values, atol=1e-12)
    sys2 = build_system("db2")
    fam = [basis_function(sys2, line, 1, j, k) for j, k in [(1, 0), (1, 1), (2, 3), (3, -4)]]
    fam.append(basis_function(sys2, line, 0, 0, 1))
    G = np.array([[np.sum(u.values * v.values) * line.h for v in fam] for u in fam])
    np.testing.assert_allclose(G, np.eye(len(fam)), atol=1e-10)
    c = analyze(fam[2], sys2)
    assert c.coefficient(1, 2, 3) == pytest.approx(1.0)
    assert c.sum_squares() == pytest.approx(1.0)


def test_db2_sampled_generator_close():
    g = make_grid(1, [(-4, 4)], 10)
    s = build_system("db2")
    u = basis_function(s, g, 1, 1, 0)
    v = sampled_generator(s, g, 1, 1, 0)
    assert np.sqrt(np.sum((u - v).values ** 2) * g.h) < 0.05


def test_depth_limits(unit1):
    f = sample("x", unit1)
    with pytest.raises(WaveletError):
        analyze(f, build_system("haar"), j_max=unit1.level)
    with pytest.raises(WaveletError):
        analyze(f, build_system("haar", J=4), j_max=3)
    with pytest.raises(WaveletError):
        analyze(f, build_system("haar", n=2))
    with pytest.raises(WaveletError):
        partial_sum(analyze(f, build_system("haar")), unit1.level)


def test_projection_init_polynomial(line):
    # db2 has two vanishing moments: details of a linear function vanish away from the box edges
    f = sample("x", line)
    c = analyze(f, build_system("db2"), init="projection")
    j = 3
    b = c.details[(1, j)]
    k = np.arange(b.values.size) + b.offset[0]
    inner = (k * 2.0**-j > -3) & ((k + 3) * 2.0**-j < 3)
    assert np.max(np.abs(b.values[inner])) < 1e-6


def test_csv_roundtrip(tmp_path, unit1):
    c = analyze(random_function(unit1, 6), build_system("haar"))
    path = tmp_path / "c.csv"
    c.to_csv(path, atol=1e-14)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == sum(1 for _ in c.nonzero(1e-14))
    r = rows[-1]
    assert float(r["value"]) == c.coefficient(int(r["l"]), int(r["j"]), int(r["k"]))


def _dyadic(base, j, k, level, n_out, start):
    """2^{j/2} base(2^j x - k) at x = start + i 2^-level, read exactly from the cascade samples."""
    i = np.arange(n_out) + int(start * 2**level)
    idx = i * 2**j - k * 2**level
    ok = (idx >= 0) & (idx < base.size)
    out = np.zeros(n_out)
    out[ok] = base[idx[ok]]
    return 2 ** (j / 2) * out


@pytest.mark.parametrize("N", [2, 3])
def test_cascade_gram_matrix(N):
    level = 12
    phi, psi = cascade(N, level)
    dx = 2.0**-level
    # spec-level invariants: moments to 1e-8, integer-shift orthogonality to 1e-6
    assert abs(phi[:-1].sum() * dx - 1) < 1e-8 and abs(psi[:-1].sum() * dx) < 1e-8
    n = 2**level
    assert abs(np.sum(phi[:-1 - n] * phi[n:-1]) * dx) < 1e-6
    # Gram matrix: every generator up to j = 2 sampled at 2^-12 of its own scale
    level += 2
    phi, psi = cascade(N, level)
    dx, n = 2.0**-level, 2**level
    start, n_out = -4, 16 * n
    index = [(phi, 0, k) for k in range(-2, 2)] + [(psi, j, k) for j in range(0, 3) for k in range(-2, 2)]
    rows = np.array([_dyadic(b, j, k, level, n_out, start) for b, j, k in index])
    G = rows @ rows.T * dx
    np.testing.assert_allclose(G, np.eye(len(index)), atol=1e-5)
