"""Verification checks: extrapolation, the majorant proof chain, wavelet equivalences, convergence,
vector-valued maximal bounds and Riesz boundedness."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from numpy.random import SeedSequence, default_rng

from .grid import Grid, GridFunction, make_grid
from .operators import bessel_potential, maximal, riesz
from .report import VerificationReport
from .spaces import Space, UnsupportedDual, kothe_dual, weighted_lebesgue_norm
from .wavelets import WaveletSystem, analyze, partial_sum, square_function_V, square_function_W
from .weights import (
    CubeFamily,
    WeightSpec,
    ap_constant,
    composite_extrapolation_weight,
    default_alpha,
    estimate_operator_norm,
    regularize,
)

CHECKS = {
    "extrapolation": "family, space, battery; C_emp stable under battery doubling and one-level refinement",
    "proof_chain": "p, space, triples; every step of the majorant argument has slack >= -tol",
    "wavelet_equivalence": "space, s, wavelet system, battery; held-out max/min ratio within budget",
    "convergence": "space, wavelet system, probe; partial-sum error decreasing to tol (separable spaces)",
    "vector_valued": "space, r, battery sizes; ratio finite and stable as the battery grows",
    "riesz_boundedness": "space, battery; max ratio of Riesz transforms, cross-checked with riesz-pair extrapolation",
}

VALIDATION_WEIGHTS = (
    WeightSpec("constant", {"value": 1.0}),
    WeightSpec("capped_power", {"alpha": 0.3}),
    WeightSpec("capped_power", {"alpha": -0.3}),
)


class FamilyContractError(RuntimeError):
    """A generated pair violates the family's defining weighted inequality."""


def rng_for(seed: int, *keys: int):
    return default_rng(SeedSequence([int(seed), *[int(k) for k in keys]]))


# --- probe batteries -----------------------------------------------------------


@dataclass(frozen=True)
class Battery:
    """Seeded probes supported in the middle half of the box.

    Probe i depends only on (seed, i), so a larger battery extends a smaller one.
    kinds: indicators, random, smooth, mixed.
    """

    kind: str = "mixed"
    count: int = 8
    seed: int = 0

    def make(self, grid: Grid) -> list[GridFunction]:
        kinds = ("indicators", "random", "smooth")
        out = []
        for i in range(self.count):
            kind = kinds[i % 3] if self.kind == "mixed" else self.kind
            out.append(make_probe(grid, kind, rng_for(self.seed, i)))
        return out

    def with_count(self, count: int) -> "Battery":
        return replace(self, count=count)

    def independent(self, salt: int = 7919) -> "Battery":
        return replace(self, seed=self.seed + salt)


def _middle(grid: Grid):
    return [((a + b) / 2, (b - a) / 4) for a, b in grid.box]


def make_probe(grid: Grid, kind: str, rng) -> GridFunction:
    mids = _middle(grid)
    coords = grid.mesh()
    if kind == "indicators":
        mask = np.ones(grid.shape, dtype=bool)
        for (c, r), x in zip(mids, coords):
            lo = rng.uniform(c - r, c + r - 2 * grid.h)
            hi = rng.uniform(lo + 2 * grid.h, c + r)
            mask &= (x >= lo) & (x < hi)
        return GridFunction(grid, mask.astype(float))
    if kind == "random":
        mask = np.ones(grid.shape, dtype=bool)
        for (c, r), x in zip(mids, coords):
            lo = rng.uniform(c - r, c)
            hi = rng.uniform(c, c + r)
            mask &= (x >= lo) & (x < hi)
        return GridFunction(grid, rng.random(grid.shape) * mask)
    if kind == "smooth":
        center = [rng.uniform(c - r / 2, c + r / 2) for c, r in mids]
        room = min(r - abs(x0 - c) for x0, (c, r) in zip(center, mids))
        rad = rng.uniform(0.4, 1.0) * room
        rho2 = sum((x - x0) ** 2 for x, x0 in zip(coords, center)) / rad**2
        with np.errstate(divide="ignore", over="ignore"):
            vals = np.where(rho2 < 1, np.exp(1 - 1 / np.maximum(1 - rho2, 1e-300)), 0.0)
        return GridFunction(grid, vals * rng.uniform(0.5, 2.0))
    raise ValueError(f"unknown probe kind {kind!r}")


def translated_indicators(grid: Grid, count: int, width: float | None = None) -> list[GridFunction]:
    """count indicators of equal cubes translated across the middle half (axis 0)."""
    (c, r), *rest = _middle(grid)
    width = width or 2 * r / count
    starts = np.linspace(c - r, c + r - width, count)
    out = []
    for s0 in starts:
        mask = (grid.mesh()[0] >= s0) & (grid.mesh()[0] < s0 + width)
        for (c1, r1), x in zip(rest, grid.mesh()[1:]):
            mask &= np.abs(x - c1) < width / 2
        out.append(GridFunction(grid, mask.astype(float)))
    return out


# --- pair families ---------------------------------------------------------------


@dataclass(frozen=True)
class PairFamily:
    """Pairs (F, G) with ||F||_{L^p(w)} <= N([w]_{A_p}) ||G||_{L^p(w)}, N(t) = a t^b.

    kinds: maximal (Mf, f), riesz (R_j f, f), wavelet (V f + W_s f against
    (1-Laplacian)^{s/2} f, both orders), custom (``generator`` maps a probe to pairs).
    """

    kind: str = "maximal"
    p: float = 2.0
    a: float | None = None
    b: float | None = None
    safety: float = 2.0
    s: float = 0.0
    system: WaveletSystem | None = None
    normalization: str = "measure"
    generator: Callable | None = None

    @property
    def exponent(self) -> float:
        if self.b is not None:
            return self.b
        buckley = 1.0 / (self.p - 1.0)
        return buckley if self.kind == "maximal" else max(1.0, buckley)

    def N(self, t: float) -> float:
        if self.a is None:
            raise ValueError("family not calibrated")
        return self.a * t**self.exponent

    def pairs(self, probes: Sequence[GridFunction]) -> list[tuple[GridFunction, GridFunction]]:
        out = []
        for f in probes:
            if self.kind == "maximal":
                out.append((maximal(f, self.normalization), f))
            elif self.kind == "riesz":
                for ax in range(f.grid.n):
                    out.append((riesz(f, ax), f))
            elif self.kind == "wavelet":
                system = self.system or WaveletSystem(1, f.grid.n)
                c = analyze(f, system)
                sq = square_function_V(c) + square_function_W(c, self.s)
                base = f if self.s == 0 else bessel_potential(f, self.s)
                out += [(sq, base), (base, sq)]
            elif self.kind == "custom":
                out += list(self.generator(f))
            else:
                raise ValueError(f"unknown pair family {self.kind!r}")
        return out

    def _ratios(self, pairs, grid: Grid):
        for spec in VALIDATION_WEIGHTS:
            w = spec.materialize(grid)
            A = ap_constant(w, self.p).value
            for F, G in pairs:
                den = weighted_lebesgue_norm(self.p, w, G)
                if den > 0:
                    yield spec, A, weighted_lebesgue_norm(self.p, w, F) / den

    def calibrate(self, probes: Sequence[GridFunction]) -> "PairFamily":
        """Smallest a valid on the validation weights over these probes, times ``safety``."""
        if self.a is not None:
            return self
        grid = probes[0].grid
        worst = max((r / A**self.exponent for _, A, r in self._ratios(self.pairs(probes), grid)), default=1.0)
        return replace(self, a=self.safety * worst)

    def validate(self, pairs, grid: Grid) -> float:
        """Largest ||F||/(N([w]) ||G||) over the validation weights; raises if above 1."""
        worst = 0.0
        for spec, A, r in self._ratios(pairs, grid):
            worst = max(worst, r / self.N(A))
        if worst > 1 + 1e-12:
            raise FamilyContractError(f"{self.kind} pair violates its weighted inequality by factor {worst:.4g}")
        return worst

    def describe(self) -> dict:
        d = {"kind": self.kind, "p": self.p, "a": self.a, "b": self.exponent, "safety": self.safety}
        if self.kind == "wavelet":
            d.update(s=self.s, wavelet=(self.system or WaveletSystem(1)).family)
        return d


# --- helpers -------------------------------------------------------------------


def _ratio(X: Space, F: GridFunction, G: GridFunction) -> float:
    den = X.norm(G)
    num = X.norm(F)
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def _spread(values: Sequence[float]) -> float:
    v = [x for x in values if x > 0]
    if not v:
        return 1.0
    return max(v) / min(v)


def _dual_or_none(X: Space):
    try:
        return kothe_dual(X)
    except UnsupportedDual:
        return None


# --- extrapolation -----------------------------------------------------------------


def _family_constant(family: PairFamily, X: Space, probes) -> tuple[float, list]:
    ratios = [_ratio(X, F, G) for F, G in family.pairs(probes)]
    return max(ratios), ratios


def extrapolation_check(
    family: PairFamily,
    X: Space,
    grid: Grid,
    battery: Battery = Battery(),
    growth: float = 2.0,
) -> VerificationReport:
    rep = VerificationReport("extrapolation", config={"family": family.describe(), "space": X.to_dict(), "grid": grid.to_dict(),
                                                       "battery": vars(battery).copy(), "growth": growth})
    probes = battery.make(grid)
    family = family.calibrate(battery.independent().make(grid))
    rep.config["family"] = family.describe()
    pairs = family.pairs(probes)
    rep.aggregates["contract_worst"] = family.validate(pairs, grid)
    C0, ratios = _family_constant(family, X, probes)
    for i, r in enumerate(ratios):
        rep.add(probe=i, ratio=r)
    C1, _ = _family_constant(family, X, battery.with_count(2 * battery.count).make(grid))
    fine = grid.refine()
    C2, _ = _family_constant(family, X, battery.make(fine))
    spread = _spread([C0, C1, C2])
    normM = estimate_operator_norm(X, maximal, probes)
    Xd = _dual_or_none(X)
    rep.aggregates.update(C_emp=C0, C_doubled=C1, C_refined=C2, spread=spread, normM_X=normM,
                          normM_dual=estimate_operator_norm(Xd, maximal, probes) if Xd else "pairing surrogate")
    if family.kind == "maximal":
        rep.aggregates["C_emp_over_normM"] = C0 / normM
    rep.require(all(math.isfinite(c) for c in (C0, C1, C2)), "C_emp not finite")
    rep.require(spread <= growth, f"C_emp drifts by {spread:.3g} > {growth}")
    return rep


# --- proof chain ---------------------------------------------------------------------


def young_constant(eps: float, p: float) -> float:
    """Sharp C in a b^{p-1} <= C a^p + eps b^p: (eps p')^{-(p-1)} / p."""
    pp = p / (p - 1)
    return (eps * pp) ** (-(p - 1)) / p


@dataclass
class ChainSetup:
    """Estimated constants shared by all triples of one proof-chain run."""

    p: float
    X: Space
    X_dual: Space
    family: PairFamily
    norm_M: float
    norm_M_dual: float
    beta: float
    alpha: float | None = None
    eps: float = 0.25
    normalization: str = "measure"

    def describe(self) -> dict:
        return {"p": self.p, "space": self.X.to_dict(), "dual": self.X_dual.to_dict(), "family": self.family.describe(),
                "norm_M": self.norm_M, "norm_M_dual": self.norm_M_dual, "beta": self.beta, "alpha": self.alpha,
                "eps": self.eps, "normalization": self.normalization}


def universal_beta(p: float, grid: Grid, probes: Sequence[GridFunction], weights: Sequence, safety: float = 2.0,
                  normalization: str = "measure") -> float:
    """safety * max of int (MF)^p W / ([W]_{A_p}^{p'} int F^p W) over probes and weights."""
    pp = p / (p - 1)
    best = 0.0
    for w in weights:
        W = w.materialize(grid) if isinstance(w, WeightSpec) else w
        A = ap_constant(W, p).value
        for F in probes:
            den = float(np.sum(np.abs(F.values) ** p * W.values))
            if den > 0:
                num = float(np.sum(maximal(F, normalization).values ** p * W.values))
                best = max(best, num / den / A**pp)
    return max(safety * best, 1.0 + 1e-12)


def prepare_chain(p: float, X: Space, grid: Grid, battery: Battery = Battery(count=8), eps: float = 0.25,
                  alpha: float | None = None, beta: float | None = None, normalization: str = "measure") -> ChainSetup:
    X_dual = kothe_dual(X)
    probes = battery.make(grid)
    indep = battery.independent().make(grid)
    norm_M = estimate_operator_norm(X, lambda f: maximal(f, normalization), probes)
    norm_Md = estimate_operator_norm(X_dual, lambda f: maximal(f, normalization), probes)
    family = PairFamily("maximal", p, normalization=normalization).calibrate(indep)
    if beta is None:
        beta = universal_beta(p, grid, indep, VALIDATION_WEIGHTS, normalization=normalization)
    return ChainSetup(p, X, X_dual, family, norm_M, norm_Md, beta, alpha, eps, normalization)


def chain_triples(grid: Grid, X_dual: Space, count: int, seed: int, X: Space, normalization: str = "measure"):
    """(f, g, h): f = M u, g = u regularized to be positive, h positive with ||h||_{X'} = 1/2 (before regularization)."""
    out = []
    for i in range(count):
        rng = rng_for(seed, 104729, i)
        u = make_probe(grid, ("random", "indicators", "smooth")[i % 3], rng)
        f = maximal(u, normalization)
        g = regularize(u, X, normalization=normalization)
        hv = make_probe(grid, "random", rng)
        hv = hv * (0.5 / X_dual.norm(hv))
        h = regularize(hv, X_dual, normalization=normalization)
        out.append((f, g, h))
    return out


def _slack(lhs: float, rhs: float) -> float:
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return (rhs - lhs) / scale


def proof_chain_check(f: GridFunction, g: GridFunction, h: GridFunction, setup: ChainSetup, tol: float = 1e-9,
                      series_tol: float = 1e-10) -> VerificationReport:
    """Both sides of every inequality in the majorant argument, for one triple.

    alpha defaults to max(4, 2 beta^{1/p}/||M|| + 1), so q = 2^p beta / (alpha ||M||)^p < 1.
    The iterated maximal step uses B = beta [W]_{A_p}^{p'} for the composite W,
    and the series bound sums the same finitely many terms the majorant holds.
    """
    p, X, Xd = setup.p, setup.X, setup.X_dual
    pp = p / (p - 1)
    grid = f.grid
    vol = grid.cell_volume
    I = lambda v: float(np.sum(v) * vol)  # noqa: E731
    alpha = setup.alpha or default_alpha(setup.beta, p, setup.norm_M)
    cw = composite_extrapolation_weight(f, g, h, p, alpha, X, Xd, setup.norm_M, setup.norm_M_dual, CubeFamily(grid),
                                        series_tol, setup.normalization)
    A = cw.estimate.value
    B = setup.beta * A**pp
    a1 = alpha * setup.norm_M
    q = 2**p * setup.beta / a1**p
    R, Rd, W = cw.R.function.values, cw.R_dual.function.values, cw.weight.values
    fv, gv, hv = f.values, g.values, h.values
    Fv = fv + gv
    eps = setup.eps
    Ce = young_constant(eps, p)
    N = setup.family.N(A)
    nX_f, nX_g = X.norm(f), X.norm(g)
    nXd_h, nXd_Rd = Xd.norm(h), Xd.norm(cw.R_dual.function)
    rep = VerificationReport("proof_chain", config={"setup": setup.describe(), "alpha": alpha, "grid": grid.to_dict()})
    steps = []

    def step(name, lhs, rhs):
        steps.append({"step": name, "lhs": lhs, "rhs": rhs, "slack": _slack(lhs, rhs)})

    # scalar Young inequality on a dense (a, b) scan and pointwise with a = f, b = R
    ab = np.geomspace(1e-3, 1e3, 121)
    a_, b_ = np.meshgrid(ab, ab)
    step("young_scan", float(np.max(a_ * b_ ** (p - 1) / (Ce * a_**p + eps * b_**p))), 1.0)
    step("young_pointwise", float(np.max(fv * R ** (p - 1) / (Ce * fv**p + eps * R**p))), 1.0)
    lhs11 = I(fv * hv)
    rhs11 = I(fv * Rd)
    step("h_below_dual_majorant", lhs11, rhs11)
    mid = I(fv * R ** (p - 1) * W)
    step("weight_factorization", abs(rhs11 - mid), tol * max(rhs11, 1e-300))
    t1, t2 = I(fv**p * W), I(R**p * W)
    step("young_split", mid, Ce * t1 + eps * t2)
    gpW = I(gv**p * W)
    step("family_inequality", t1, N**p * gpW)
    gR = I(gv * Rd)
    step("majorant_dominates_g", gpW, gR)
    step("holder_g", gR, nX_g * nXd_Rd)
    step("dual_majorant_norm", nXd_Rd, alpha / (alpha - 1) * nXd_h * (1 + 1e-8))
    step("h_unit_ball", nXd_h, 1.0)
    step("first_term", t1, N**p * nX_g * nXd_Rd)
    # terms of the majorant of F = f + g
    terms = [np.abs(Fv)]
    cur = GridFunction(grid, np.abs(Fv))
    for _ in range(1, cw.R.terms):
        cur = maximal(cur, setup.normalization) / cw.R.base
        terms.append(cur.values)
    power_sum = sum(2.0 ** (p * (l + 1)) * t**p for l, t in enumerate(terms))
    step("power_of_sum", t2, I(power_sum * W))
    FpW = I(Fv**p * W)
    worst22 = -math.inf
    it = GridFunction(grid, np.abs(Fv))
    for l in range(1, min(cw.R.terms, 8) + 1):
        it = maximal(it, setup.normalization)
        lhs = I(it.values**p * W)
        rhs = B**l * FpW
        s = _slack(lhs, rhs)
        if s < worst22 or worst22 == -math.inf:
            worst22 = s
            worst22_pair = (lhs, rhs)
    step("iterated_maximal", *worst22_pair)
    qB = 2.0**p * B / a1**p
    geo = sum(qB**l for l in range(cw.R.terms))
    step("series_bound", t2, 2**p * geo * FpW)
    step("convergence_margin", q, 1.0)
    FR = I(Fv * Rd)
    step("majorant_dominates_sum", FpW, FR)
    step("holder_sum", FR, (nX_f + nX_g) * nXd_Rd)
    final_rhs = Ce * N**p * nX_g * nXd_Rd + eps * 2**p * geo * (nX_f + nX_g) * nXd_Rd
    step("final_bound", lhs11, final_rhs)
    step("ap_chain_bound", A, cw.chain_bound)
    step("ap_factor_bound", A, cw.factor_bound * (1 + 1e-12))
    for s in steps:
        rep.add(**s)
        rep.require(s["slack"] >= -tol, f"step {s['step']} slack {s['slack']:.3g}")
    rep.aggregates.update(min_slack=min(s["slack"] for s in steps), A_p=A, B=B, q=q, q_weighted=qB, alpha=alpha,
                          C_eps=Ce, N=N, rubio_terms=cw.R.terms, dual_terms=cw.R_dual.terms)
    return rep


def proof_chain_suite(p: float, X: Space, grid: Grid, count: int = 10, seed: int = 0, tol: float = 1e-9,
                      eps: float = 0.25, alpha: float | None = None, beta: float | None = None,
                      normalization: str = "measure") -> VerificationReport:
    setup = prepare_chain(p, X, grid, Battery(count=8, seed=seed), eps, alpha, beta, normalization)
    rep = VerificationReport("proof_chain", config={"setup": setup.describe(), "grid": grid.to_dict(), "triples": count,
                                                     "seed": seed, "tol": tol})
    worst = math.inf
    for i, (f, g, h) in enumerate(chain_triples(grid, setup.X_dual, count, seed, X, normalization)):
        sub = proof_chain_check(f, g, h, setup, tol)
        for r in sub.records:
            rep.add(probe=i, **r)
        worst = min(worst, sub.aggregates["min_slack"])
        rep.require(sub.passed, *(sub.notes[:1] or [None]))
        rep.aggregates[f"q_{i}"] = sub.aggregates["q"]
        rep.aggregates[f"alpha_{i}"] = sub.aggregates["alpha"]
    rep.aggregates["min_slack"] = worst
    return rep


# --- wavelets ------------------------------------------------------------------------


def _equivalence_ratios(X: Space, s: float, system: WaveletSystem, probes, j_max=None) -> list[float]:
    out = []
    for f in probes:
        c = analyze(f, system, j_max)
        sq = square_function_V(c) + square_function_W(c, s)
        den = X.norm(f if s == 0 else bessel_potential(f, s))
        if den == 0:
            raise ZeroDivisionError("probe with zero denominator")
        out.append(X.norm(sq) / den)
    return out


def wavelet_equivalence_check(
    X: Space,
    s: float,
    system: WaveletSystem,
    grid: Grid,
    battery: Battery = Battery(count=40),
    budget: float = 50.0,
    drift: float | None = 2.0,
    split_seed: int = 0,
    split: bool = True,
    j_max: int | None = None,
) -> VerificationReport:
    """Equivalence of ||V f + W_s f||_X and ||(1-Laplacian)^{s/2} f||_X.

    The battery is split 50/50 (seeded) into training and held-out halves; the
    training interval calibrates the constants and the held-out max/min ratio
    is compared with ``budget``.  With ``drift`` the held-out interval is
    recomputed one grid level coarser and the endpoints may move by at most
    that factor.  ``split=False`` asserts on the whole battery.
    """
    if s > 0 and s >= system.K:
        raise ValueError(f"s={s} must be below the smoothness K={system.K} of {system.family}")
    rep = VerificationReport("wavelet_equivalence", config={"space": X.to_dict(), "s": s, "wavelet": system.describe(),
                                                            "grid": grid.to_dict(), "battery": vars(battery).copy(),
                                                            "budget": budget, "drift": drift, "split_seed": split_seed, "split": split})
    perm = rng_for(split_seed, 31337).permutation(battery.count)
    if split:
        train, held = sorted(perm[: battery.count // 2]), sorted(perm[battery.count // 2 :])
    else:
        train = held = list(range(battery.count))

    def interval(g):
        probes = battery.make(g)
        r = _equivalence_ratios(X, s, system, probes, j_max)
        return r, [r[i] for i in train], [r[i] for i in held]

    r, rt, rh = interval(grid)
    for i, v in enumerate(r):
        rep.add(probe=i, ratio=v, held_out=int(i in held))
    lo_t, hi_t = min(rt), max(rt)
    lo_h, hi_h = min(rh), max(rh)
    width = hi_h / lo_h
    rep.aggregates.update(train_min=lo_t, train_max=hi_t, held_min=lo_h, held_max=hi_h, held_width=width,
                          calibration_escape=max(hi_h / hi_t, lo_t / lo_h))
    rep.require(lo_h > 0 and math.isfinite(hi_h), "ratio not bounded away from 0 and infinity")
    rep.require(width <= budget, f"held-out max/min {width:.3g} exceeds budget {budget}")
    if drift is not None:
        coarse = make_grid(grid.n, grid.box, grid.level - 1)
        _, _, rh2 = interval(coarse)
        d = max(max(rh2) / hi_h, hi_h / max(rh2), min(rh2) / lo_h, lo_h / min(rh2))
        rep.aggregates.update(coarse_held_min=min(rh2), coarse_held_max=max(rh2), drift=d)
        rep.require(d <= drift, f"interval drifts by {d:.3g} between levels")
    if system.baseline:
        rep.notes.append("baseline: Haar system")
    return rep


def convergence_check(X: Space, system: WaveletSystem, f: GridFunction, schedule: Sequence[int] | None = None,
                      tol: float = 1e-8, j_max: int | None = None) -> VerificationReport:
    grid = f.grid
    c = analyze(f, system, j_max)
    schedule = list(schedule) if schedule is not None else list(range(c.J, c.j_max + 1))
    rep = VerificationReport("convergence", asserted=X.separable,
                             config={"space": X.to_dict(), "wavelet": system.describe(), "grid": grid.to_dict(),
                                     "schedule": schedule, "tol": tol})
    nf = X.norm(f)
    errs = []
    for j in schedule:
        e = X.norm(f - partial_sum(c, j))
        errs.append(e)
        rep.add(probe=j, j_cut=j, error=e, relative=e / nf if nf else 0.0)
    mono = all(b <= a * (1 + 1e-9) + 1e-14 for a, b in zip(errs, errs[1:]))
    final = errs[-1] / nf if nf else 0.0
    rep.aggregates.update(final_relative=final, monotone=mono)
    rep.require(mono, "partial-sum error not monotone")
    rep.require(final <= tol, f"final relative error {final:.3g} above {tol}")
    if not X.separable:
        rep.notes.append("non-separable space: informational")
    return rep


# --- vector-valued ---------------------------------------------------------------------


def _lr(values: Sequence[np.ndarray], r: float) -> np.ndarray:
    stack = np.abs(np.stack(values))
    if math.isinf(r):
        return stack.max(axis=0)
    return (stack**r).sum(axis=0) ** (1 / r)


def vector_valued_ratio(X: Space, fs: Sequence[GridFunction], r: float, normalization: str = "measure") -> float:
    grid = fs[0].grid
    den = X.norm(GridFunction(grid, _lr([f.values for f in fs], r)))
    num = X.norm(GridFunction(grid, _lr([maximal(f, normalization).values for f in fs], r)))
    if den == 0:
        return math.nan if num == 0 else math.inf
    return num / den


def vector_valued_check(X: Space, batteries: Sequence[Sequence[GridFunction]], r: float, growth: float = 2.0,
                        normalization: str = "measure") -> VerificationReport:
    rep = VerificationReport("vector_valued", config={"space": X.to_dict(), "r": r, "sizes": [len(b) for b in batteries],
                                                      "growth": growth})
    ratios = []
    for i, fs in enumerate(batteries):
        v = vector_valued_ratio(X, fs, r, normalization)
        rep.add(probe=i, size=len(fs), ratio=v if not math.isnan(v) else 0.0, vacuous=int(math.isnan(v)))
        if not math.isnan(v):
            ratios.append(v)
    if not ratios:
        rep.notes.append("all functions vanish: vacuous pass")
        rep.aggregates.update(spread=1.0)
        return rep
    spread = _spread(ratios)
    rep.aggregates.update(max_ratio=max(ratios), spread=spread)
    rep.require(all(math.isfinite(v) for v in ratios), "ratio not finite")
    rep.require(spread <= growth, f"ratio drifts by {spread:.3g}")
    return rep


# --- Riesz ---------------------------------------------------------------------------------


def riesz_boundedness_check(X: Space, grid: Grid, battery: Battery = Battery(), agree: float = 2.0) -> VerificationReport:
    rep = VerificationReport("riesz_boundedness", config={"space": X.to_dict(), "grid": grid.to_dict(),
                                                          "battery": vars(battery).copy(), "agree": agree})
    probes = battery.make(grid)
    best = 0.0
    for i, f in enumerate(probes):
        for ax in range(grid.n):
            r = _ratio(X, riesz(f, ax), f)
            rep.add(probe=i, axis=ax, ratio=r)
            best = max(best, r)
    ext = extrapolation_check(PairFamily("riesz"), X, grid, battery.independent(1299709))
    route2 = ext.aggregates["C_emp"]
    factor = max(best / route2, route2 / best) if best > 0 and route2 > 0 else math.inf
    rep.aggregates.update(max_ratio=best, extrapolation_C=route2, route_factor=factor)
    rep.require(math.isfinite(best), "Riesz ratio not finite")
    rep.require(factor <= agree, f"direct and extrapolation routes differ by {factor:.3g}")
    rep.require(ext.passed, "riesz-pair extrapolation not stable")
    return rep
