import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballspace.grid import Ball, GridFunction, constant, coverage, make_grid, sample
from ballspace.spaces import (
    BBM,
    BrokenNorm,
    Convexified,
    ExponentFunction,
    Herz,
    Lorentz,
    Morrey,
    NonMonotoneModular,
    Orlicz,
    SpaceError,
    UnsupportedDual,
    VarHerz,
    VarLebesgue,
    WeightedLebesgue,
    YoungFunction,
    axioms_check,
    bbm_levels,
    characteristic_ratio_profile,
    herz_blocks,
    kothe_dual,
    luxemburg_norm,
    pairing_check,
    parse_space,
    standard_balls,
    standard_battery,
)
from ballspace.weights import WeightSpec
from conftest import random_function


def lp(f, p):
    return float(np.sum(np.abs(f.values) ** p) * f.grid.cell_volume) ** (1 / p)


def test_lebesgue_examples(line):
    chi = sample("chi(0, 1, x)", line)
    assert WeightedLebesgue(2).norm(chi) == pytest.approx(1.0)
    w = WeightSpec("power", {"alpha": 1.0})
    x = line.centers(0)
    expect = np.sum(x[(x > 0) & (x < 1)]) * line.h
    assert WeightedLebesgue(1, w).norm(chi) == pytest.approx(expect)
    assert expect == pytest.approx(0.5, abs=1e-9)


def test_luxemburg_plastic_root():
    g = make_grid(1, [(0, 2)], 6)
    X = VarLebesgue(ExponentFunction("2 + chi(1, 2, x)"))
    # modular lam^-2 + lam^-3 = 1, i.e. u^3 + u^2 - 1 = 0 for u = 1/lam
    u = max(r.real for r in np.roots([1, 1, 0, -1]) if abs(r.imag) < 1e-12)
    got = X.norm(constant(g, 1.0))
    assert 0 <= got - 1 / u <= 1e-8 * got
    tight = VarLebesgue(ExponentFunction("2 + chi(1, 2, x)"), tol=1e-13).norm(constant(g, 1.0))
    assert tight == pytest.approx(1 / u, rel=2e-13)
    assert 1 / u == pytest.approx(1.3247180, abs=1e-7)


def test_luxemburg_edge_cases():
    got = luxemburg_norm(lambda lam: 4 / lam**2, lam0=3.0)
    assert 0 <= got - 2.0 <= 1e-8 * got
    assert luxemburg_norm(lambda lam: 0.0) == 0.0
    assert luxemburg_norm(lambda lam: math.inf) == math.inf
    with pytest.raises(NonMonotoneModular):
        luxemburg_norm(lambda lam: 0.1 if lam < 1.5 else 1.0 / lam, lam0=8.0)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_collapse_to_lebesgue(line, p):
    f = random_function(line, 4, signed=True, support=2.0)
    ref = lp(f, p)
    assert WeightedLebesgue(p).norm(f) == pytest.approx(ref, rel=1e-12)
    assert Lorentz(p, p).norm(f) == pytest.approx(ref, rel=1e-10)
    assert VarLebesgue(ExponentFunction(p)).norm(f) == pytest.approx(ref, rel=1e-8)
    assert Orlicz(YoungFunction(f"t**{p}")).norm(f) == pytest.approx(ref, rel=1e-8)
    assert Herz(0.0, p, p).norm(f) == pytest.approx(ref, rel=1e-10)
    assert Morrey(p, p).norm(f) == pytest.approx(ref, rel=1e-10)
    assert VarHerz(ExponentFunction(0.0), ExponentFunction(p), ExponentFunction(p)).norm(f) == pytest.approx(ref, rel=1e-8)


def test_convexified_identity(line):
    f = random_function(line, 5, support=2.0)
    assert Convexified(WeightedLebesgue(3), 2).norm(f) == pytest.approx(lp(f, 1.5), rel=1e-12)
    with pytest.raises(SpaceError):
        Convexified(WeightedLebesgue(3), 0)


@pytest.mark.parametrize("p,q", [(2, 1), (2, 3), (1.5, 4), (3, math.inf)])
def test_lorentz_indicator(line, p, q):
    chi = sample("chi(-0.75, 0.5, x)", line)
    m = 1.25
    expect = m ** (1 / p) if math.isinf(q) else (p / q) ** (1 / q) * m ** (1 / p)
    assert Lorentz(p, q).norm(chi) == pytest.approx(expect, rel=1e-12)


def test_lorentz_two_step(unit1):
    # f = 2 on a set of measure 1/4 and 1 on a set of measure 1/2: f* = 2 on [0,1/4), 1 on [1/4,3/4)
    f = sample("2*chi(0, 0.25, x) + chi(0.25, 0.75, x)", unit1)
    p, q = 2.0, 1.0
    expect = 2 * p * 0.25**0.5 + p * (0.75**0.5 - 0.25**0.5)
    assert Lorentz(p, q).norm(f) == pytest.approx(expect, rel=1e-12)
    assert Lorentz(p, math.inf).norm(f) == pytest.approx(max(2 * 0.5, 0.75**0.5))


def test_herz_blocks_partition(line, plane):
    for g in (line, plane):
        for hom in (True, False):
            total = sum(cov for _, _, cov in herz_blocks(g, hom))
            np.testing.assert_allclose(total, 1.0, atol=1e-12)


def test_herz_manual(line):
    f = random_function(line, 6, support=3.0)
    alpha, p, q = 0.5, 2.0, 1.5
    terms = [2 ** (k * alpha) * float(np.sum(np.abs(f.values) ** p * cov) * line.h) ** (1 / p)
             for _, k, cov in herz_blocks(line)]
    assert Herz(alpha, p, q).norm(f) == pytest.approx(float(np.sum(np.array(terms) ** q)) ** (1 / q), rel=1e-12)
    blocks = herz_blocks(line, False)
    head = float(np.sum(f.values**2 * blocks[0][2]) * line.h) ** 0.5
    tail = [2 ** (k * alpha) * float(np.sum(f.values**2 * cov) * line.h) ** 0.5 for _, k, cov in blocks[1:]]
    assert Herz(alpha, p, math.inf, False).norm(f) == pytest.approx(head + max(tail), rel=1e-12)


def test_var_herz_constant_collapse(line):
    # balls B(2^k) lie inside [-4, 4], so v(B_k)^alpha = (2 * 2^k)^alpha = 2^alpha 2^{k alpha}
    f = random_function(line, 7, support=3.0)
    for alpha in (-0.3, 0.5):
        X = VarHerz(ExponentFunction(alpha), ExponentFunction(2.0), ExponentFunction(3.0))
        assert X.norm(f) == pytest.approx(2**alpha * Herz(alpha, 2, 3).norm(f), rel=1e-8)


def test_var_herz_variable_q(line):
    f = random_function(line, 8, support=3.0)
    X = VarHerz(ExponentFunction(0.0), ExponentFunction(2.0), ExponentFunction("2 + 0.5*chi(0, 4, x)"))
    lo = VarHerz(ExponentFunction(0.0), ExponentFunction(2.0), ExponentFunction(2.5)).norm(f)
    hi = VarHerz(ExponentFunction(0.0), ExponentFunction(2.0), ExponentFunction(2.0)).norm(f)
    assert lo * (1 - 1e-8) <= X.norm(f) <= hi * (1 + 1e-8)


def test_morrey_scan(line):
    f = random_function(line, 9, support=2.0)
    r0, r = 4.0, 2.0
    balls = [(c, R) for c in np.linspace(-4, 4, 2 * line.shape[0] + 1) for R in line.h / 2 * 2.0 ** np.arange(0, 12)]
    oracle = 0.0
    for c, R in balls:
        I = float(np.sum(f.values**r * coverage(line, Ball((c,), R))) * line.h)
        oracle = max(oracle, (2 * R) ** (1 / r0 - 1 / r) * I ** (1 / r))
    assert Morrey(r0, r).norm(f) == pytest.approx(oracle, rel=1e-9)
    assert Morrey(r0, r).norm(sample("chi(0, 1, x)", line)) == pytest.approx(1.0)
    with pytest.raises(SpaceError):
        Morrey(2, 3)


def test_bbm_collapse(line):
    f = random_function(line, 10, support=2.0)
    p = 2.0
    n_levels = len(bbm_levels(line))
    assert BBM(p, p, p, p).norm(f) == pytest.approx(n_levels ** (1 / p) * lp(f, p), rel=1e-10)
    assert BBM(p, p, p, math.inf).norm(f) == pytest.approx(lp(f, p), rel=1e-10)


def test_bbm_indicator(unit1):
    chi = constant(unit1, 1.0)
    # cubes of side 2^-nu with |Q|^{1/p-1/q} |Q|^{1/q} = |Q|^{1/p}, 2^nu cubes
    p, q = 4.0, 2.0
    levels = bbm_levels(unit1)
    expect = max((2.0**nu) ** (1 / 1) * (2.0**-nu) ** (1 / p) for nu in levels)
    assert BBM(p, q, 1, math.inf).norm(chi) == pytest.approx(expect, rel=1e-12)


SPACES = [
    "L2",
    "Lp(1.5, w=cap)",
    "Lorentz(2, 1)",
    "Lorentz(3, inf)",
    "Herz(0.3, 2, 1.5)",
    "VarLebesgue('2 + 0.5*sin(x)')",
    "VarHerz(0.2, 2, 3, homogeneous=false)",
    "Orlicz('t**2 * log(1 + t)')",
    "Morrey(4, 2)",
    "BBM(3, 2, 2, 2)",
    "Convexified(L3, 2)",
]


@pytest.mark.parametrize("text", SPACES)
def test_axioms_all_tags(line, text):
    X = parse_space(text, {"cap": WeightSpec("capped_power", {"alpha": 0.3})})
    rep = axioms_check(X, standard_battery(line, 1), standard_balls(line))
    assert rep.ok, rep.notes


def test_axioms_negative_control(line):
    rep = axioms_check(BrokenNorm(WeightedLebesgue(2)), standard_battery(line, 1), standard_balls(line))
    assert not rep.ok
    assert any("homogeneity" in n for n in rep.notes)


def test_axioms_plane(plane):
    rep = axioms_check(Morrey(3, 2), standard_battery(plane, 2), standard_balls(plane))
    assert rep.ok, rep.notes


@given(st.integers(0, 10_000), st.sampled_from([1.5, 2.0, 3.0]))
def test_pairing_holder(seed, p):
    g = make_grid(1, [(-4, 4)], 6)
    w = WeightSpec("capped_power", {"alpha": 0.3})
    for X in (WeightedLebesgue(p, w), Lorentz(p, 2.0)):
        f = random_function(g, seed, signed=True, support=2.0)
        h = random_function(g, seed + 1, support=2.0)
        lhs, rhs, ratio = pairing_check(X, f, h)
        assert ratio <= 1 + 1e-9


def test_pairing_equality(line):
    p = 3.0
    w = WeightSpec("capped_power", {"alpha": 0.3})
    X = WeightedLebesgue(p, w)
    f = random_function(line, 11, support=2.0)
    wv = w.materialize(line).values
    g = GridFunction(line, f.values ** (p - 1) * wv)
    assert pairing_check(X, f, g)[2] == pytest.approx(1.0, rel=1e-10)
    assert kothe_dual(X).p == pytest.approx(1.5)
    with pytest.raises(UnsupportedDual):
        kothe_dual(Morrey(3, 2))
    with pytest.raises(UnsupportedDual):
        kothe_dual(WeightedLebesgue(1))


def test_parse_space_forms():
    assert parse_space("L1.5") == WeightedLebesgue(1.5)
    assert parse_space({"tag": "Morrey", "r0": 4, "r": 2}) == Morrey(4, 2)
    assert parse_space("Lorentz(2, inf)").separable is False
    assert parse_space("Herz(0, 2, 2, homogeneous=false)").homogeneous is False
    for bad in ("Nope(1)", "Lp(2, w=missing)", "Morrey(1, 2)", "Lorentz(2)", "Lp('x+')"):
        with pytest.raises(SpaceError):
            parse_space(bad)


def test_separability_flags():
    assert WeightedLebesgue(2).separable
    assert not Morrey(3, 2).separable and Morrey(2, 2).separable
    assert not BBM(2, 2, 2, 2).separable
    assert not Herz(0, 2, math.inf).separable


def test_characteristic_profile_lebesgue(line):
    prof = characteristic_ratio_profile(WeightedLebesgue(2), line)
    # ||chi_k||_2 = |C_k|^{1/2}, so the critical exponent is exactly 1/2
    assert prof["delta"] == pytest.approx(0.5, rel=1e-9)
