"""Ball Banach function space norms behind one evaluator interface, Köthe duals, and axiom checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, ClassVar, Sequence

import numpy as np

from .expr import ExpressionError, compile_univariate, parse_call
from .grid import Ball, Box, Grid, GridError, GridFunction, coverage, rearrange, sample
from .operators import radius_ladder
from .report import VerificationReport
from .weights import WeightSpec, Weight


class SpaceError(ValueError):
    pass


class UnsupportedDual(SpaceError):
    """No explicit Köthe dual is constructed for this space; use a pairing bound instead."""


class NonMonotoneModular(RuntimeError):
    pass


LUX_TOL = 1e-8


def _conj(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


# --- weights attached to spaces ----------------------------------------------


@lru_cache(maxsize=128)
def _materialized(spec_key: str, grid: Grid) -> np.ndarray:
    vals = WeightSpec.from_dict(json.loads(spec_key)).materialize(grid).values
    return vals


def weight_values(w, grid: Grid) -> np.ndarray:
    """Cell values of a weight given as None (w = 1), a WeightSpec or a grid function."""
    if w is None:
        return np.ones(grid.shape)
    if isinstance(w, WeightSpec):
        return _materialized(json.dumps(w.to_dict(), sort_keys=True), grid)
    if isinstance(w, GridFunction):
        if w.grid != grid:
            raise GridError("weight and function live on different grids")
        return w.values
    raise SpaceError(f"cannot use {w!r} as a weight")


def weight_power(w, e: float):
    """The weight w^e, kept symbolic for WeightSpec inputs."""
    if w is None:
        return None
    if isinstance(w, GridFunction):
        return Weight(w.grid, w.values**e)
    p = w.params
    if w.kind == "constant":
        return WeightSpec("constant", {"value": float(p.get("value", 1.0)) ** e})
    if w.kind in ("power", "capped_power"):
        return WeightSpec(w.kind, {"alpha": float(p["alpha"]) * e})
    if w.kind == "piecewise":
        return WeightSpec("piecewise", {"edges": list(p["edges"]), "values": [float(v) ** e for v in p["values"]]})
    return WeightSpec("custom", {"expr": f"({p['expr']})**({e!r})"})


# --- exponent and Young functions --------------------------------------------


@dataclass(frozen=True)
class ExponentFunction:
    """Variable exponent p(x) given by a constant or an expression in x1..xn, r."""

    expr: str | float

    @property
    def constant(self) -> float | None:
        if isinstance(self.expr, (int, float)):
            return float(self.expr)
        try:
            return float(self.expr)
        except ValueError:
            return None

    def values(self, grid: Grid) -> np.ndarray:
        c = self.constant
        vals = np.full(grid.shape, c) if c is not None else sample(str(self.expr), grid).values
        if not (np.all(vals > 0) and np.all(np.isfinite(vals))):
            raise SpaceError(f"exponent {self.expr!r} must be positive and finite on the grid")
        return vals

    def bounds(self, grid: Grid) -> tuple[float, float]:
        v = self.values(grid)
        return float(v.min()), float(v.max())

    def log_holder(self, grid: Grid, stride: int = 1) -> dict:
        """Sampled constants of the local log-Hölder and decay conditions.

        c_log = max |p(x)-p(y)| * log(1/|x-y|) over sampled pairs with |x-y| < 1/2;
        c_inf = max |p(x)-p_inf| * log(e+|x|) with p_inf the mean value on the outer ring.
        """
        v = self.values(grid).ravel()[::stride]
        pts = np.stack([m.ravel()[::stride] for m in grid.mesh()], axis=1)
        c_log = 0.0
        for i in range(0, len(v), 128):
            d = np.linalg.norm(pts[i : i + 128, None, :] - pts[None, :, :], axis=2)
            close = (d > 0) & (d < 0.5)
            if np.any(close):
                dv = np.abs(v[i : i + 128, None] - v[None, :])
                c_log = max(c_log, float(np.max(np.where(close, dv * np.log(1 / np.where(close, d, 1.0)), 0.0))))
        r = np.linalg.norm(pts, axis=1)
        ring = r >= np.quantile(r, 0.9)
        p_inf = float(v[ring].mean())
        c_inf = float(np.max(np.abs(v - p_inf) * np.log(np.e + r)))
        return {"c_log": c_log, "c_inf": c_inf, "p_inf": p_inf}


@dataclass(frozen=True)
class YoungFunction:
    """Young function Phi given as an expression in t."""

    expr: str

    def __post_init__(self):
        try:
            compile_univariate(self.expr)
        except ExpressionError as exc:
            raise SpaceError(str(exc)) from None

    def __call__(self, t):
        return _young(self.expr)(t)

    @classmethod
    def power(cls, p: float) -> "YoungFunction":
        return cls(f"t**{float(p)!r}")

    def validate(self, lo: float = 1e-6, hi: float = 1e6, samples: int = 241) -> dict:
        """Check Phi(0)=0, monotonicity and midpoint convexity on a geometric ladder.

        Also reports the empirical Delta_2 constant sup Phi(2t)/Phi(t) and the
        nabla_2 constant: the smallest l in {2,4,...,1024} with Phi(t) <= Phi(l t)/(2l).
        """
        t = np.geomspace(lo, hi, samples)
        phi = self(t)
        zero = float(self(np.array([0.0]))[0])
        mono = bool(np.all(np.diff(phi) >= -1e-12 * np.abs(phi[1:])))
        a, b = t[:-1], t[1:]
        mid = self((a + b) / 2)
        convex = bool(np.all(mid <= (phi[:-1] + phi[1:]) / 2 * (1 + 1e-12)))
        wide = self((t[:-20] + t[20:]) / 2) <= (phi[:-20] + phi[20:]) / 2 * (1 + 1e-12)
        convex = convex and bool(np.all(wide))
        pos = phi > 0
        delta2 = float(np.max(self(2 * t[pos]) / phi[pos])) if np.any(pos) else math.inf
        nabla2 = math.inf
        for l in 2.0 ** np.arange(1, 11):
            if np.all(phi[pos] <= self(l * t[pos]) / (2 * l) * (1 + 1e-12)):
                nabla2 = float(l)
                break
        return {
            "phi0": zero,
            "monotone": mono,
            "convex": convex,
            "delta2": delta2,
            "nabla2": nabla2,
            "valid": zero == 0 and mono and convex,
        }


@lru_cache(maxsize=64)
def _young(expr: str):
    return compile_univariate(expr)


# --- Luxemburg machinery -----------------------------------------------------


def luxemburg_norm(modular: Callable[[float], float], lam0: float = 1.0, tol: float = LUX_TOL, cap: float = 1e300) -> float:
    """inf{lam > 0 : modular(lam) <= 1} by factor-2 bracketing then bisection.

    Returns the upper end of the final bracket, whose width is at most
    tol * lam; +inf if no bracket exists below ``cap``.  Raises
    NonMonotoneModular if evaluations contradict monotonicity.
    """
    seen: list[tuple[float, float]] = []

    def m(lam):
        val = float(modular(lam))
        if math.isnan(val):
            val = math.inf
        for l2, v2 in seen:
            if (l2 < lam and v2 < val * (1 - 1e-10) - 1e-300) or (l2 > lam and v2 > val * (1 + 1e-10) + 1e-300):
                raise NonMonotoneModular(f"modular increases between lambda={min(l2, lam):g} and {max(l2, lam):g}")
        seen.append((lam, val))
        return val

    lam = lam0 if lam0 > 0 and math.isfinite(lam0) else 1.0
    if m(lam) <= 1:
        hi = lam
        lo = lam / 2
        while m(lo) <= 1:
            hi, lo = lo, lo / 2
            if lo < 1e-300:
                return 0.0
    else:
        lo = lam
        hi = lam * 2
        while m(hi) > 1:
            lo, hi = hi, hi * 2
            if hi > cap:
                return math.inf
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if m(mid) <= 1:
            hi = mid
        else:
            lo = mid
    return hi


def _lp(values, p, measure) -> float:
    a = np.abs(values)
    if math.isinf(p):
        return float(np.max(np.where(measure > 0, a, 0.0))) if a.size else 0.0
    return float(np.sum(a**p * measure)) ** (1.0 / p)


def _variable_modular(a: np.ndarray, p: np.ndarray, measure: np.ndarray):
    nz = (a > 0) & (measure > 0)
    a, p, measure = a[nz], p[nz], measure[nz]
    loga = np.log(a)

    def modular(lam):
        with np.errstate(over="ignore"):
            return float(np.sum(np.exp(p * (loga - math.log(lam))) * measure))

    return modular, bool(nz.any())


def variable_lebesgue_norm(p: ExponentFunction, w, f: GridFunction, tol: float = LUX_TOL, measure: np.ndarray | None = None) -> float:
    """Luxemburg norm with modular integral of (|f|/lam)^{p(x)} w dx."""
    grid = f.grid
    pv = p.values(grid)
    mu = weight_values(w, grid) * grid.cell_volume
    if measure is not None:
        mu = mu * measure
    a = np.abs(f.values)
    modular, nonzero = _variable_modular(a, pv, mu)
    if not nonzero:
        return 0.0
    lam0 = _lp(a, pv.min(), mu) + _lp(a, pv.max(), mu)
    return luxemburg_norm(modular, lam0, tol)


def weighted_lebesgue_norm(p: float, w, f: GridFunction) -> float:
    grid = f.grid
    return _lp(f.values, p, weight_values(w, grid) * grid.cell_volume)


def lorentz_norm(p: float, q: float, f: GridFunction) -> float:
    """Exact value from the step-function rearrangement."""
    prof = rearrange(f)
    v, t1 = prof.values, prof.measures
    t0 = np.concatenate([[0.0], t1[:-1]])
    if math.isinf(q):
        return float(np.max(v * t1 ** (1.0 / p))) if v.size else 0.0
    total = np.sum(v**q * (p / q) * (t1 ** (q / p) - t0 ** (q / p)))
    return float(total) ** (1.0 / q)


def orlicz_norm(phi: YoungFunction, f: GridFunction, tol: float = LUX_TOL) -> float:
    grid = f.grid
    a = np.abs(f.values).ravel()
    a = a[a > 0]
    if a.size == 0:
        return 0.0
    fn = _young(phi.expr)

    def modular(lam):
        with np.errstate(over="ignore"):
            return float(np.sum(fn(a / lam)) * grid.cell_volume)

    return luxemburg_norm(modular, float(np.sqrt(np.sum(a**2) * grid.cell_volume)) + float(a.max()), tol)


# --- Herz machinery ----------------------------------------------------------


def herz_levels(grid: Grid) -> tuple[int, int]:
    """(k_min, k_max): finest annulus of width at least 2h, coarsest annulus meeting the box."""
    k_min = 2 - grid.level
    far = math.sqrt(sum(max(a * a, b * b) for a, b in grid.box))
    k_max = max(k_min, int(math.ceil(math.log2(far))))
    return k_min, k_max


@lru_cache(maxsize=256)
def _ball_cov(grid: Grid, k: int) -> np.ndarray:
    cov = coverage(grid, Ball(tuple([0.0] * grid.n), 2.0**k))
    cov.setflags(write=False)
    return cov


def herz_blocks(grid: Grid, homogeneous: bool = True) -> list[tuple[object, int, np.ndarray]]:
    """Blocks (label, k, coverage) partitioning the box.

    Homogeneous: the innermost block is the whole ball B(2^k_min), then annuli
    C_k for k_min < k <= k_max.  Non-homogeneous: the head B(1) then C_k, k >= 1.
    """
    k_min, k_max = herz_levels(grid)
    if not homogeneous:
        k_min = 0
        k_max = max(k_max, 0)
    out = [("ball", k_min, _ball_cov(grid, k_min))]
    for k in range(k_min + 1, k_max + 1):
        cov = _ball_cov(grid, k) - _ball_cov(grid, k - 1)
        if np.any(cov > 0):
            out.append(("annulus", k, cov))
    return out


def _lq_sum(terms: Sequence[float], q: float) -> float:
    t = np.asarray(terms, dtype=float)
    if t.size == 0:
        return 0.0
    if math.isinf(q):
        return float(t.max())
    return float(np.sum(t**q)) ** (1.0 / q)


def herz_norm(alpha: float, p: float, q: float, homogeneous: bool, f: GridFunction) -> float:
    grid = f.grid
    blocks = herz_blocks(grid, homogeneous)
    vol = grid.cell_volume
    if homogeneous:
        return _lq_sum([2.0 ** (k * alpha) * _lp(f.values, p, cov * vol) for _, k, cov in blocks], q)
    head = _lp(f.values, p, blocks[0][2] * vol)
    tail = [2.0 ** (k * alpha) * _lp(f.values, p, cov * vol) for _, k, cov in blocks[1:]]
    return head + _lq_sum(tail, q)


def mixed_sequence_norm(
    q: ExponentFunction,
    p: ExponentFunction,
    blocks: Sequence[np.ndarray],
    measures: Sequence[np.ndarray],
    grid: Grid,
    tol: float = LUX_TOL,
) -> float:
    """Norm of the sequence {F_k} in l^{q(.)}(L^{p(.)}(mu_k)).

    inf{mu > 0 : sum_k || |F_k/mu|^{q(.)} ||_{L^{p(.)/q(.)}(mu_k)} <= 1}; each
    inner term is itself a Luxemburg norm.  For constant q the outer problem is
    solved in closed form by homogeneity.
    """
    qv, pv = q.values(grid), p.values(grid)
    r = pv / qv
    live = [(np.abs(F), m) for F, m in zip(blocks, measures) if np.any((np.abs(F) > 0) & (m > 0))]
    if not live:
        return 0.0

    def inner(F, m, mu):
        modular, nz = _variable_modular((F / mu) ** qv, r, m)
        if not nz:
            return 0.0
        return luxemburg_norm(modular, 1.0, tol * 1e-2)

    qc = q.constant
    if qc is not None:
        return sum(inner(F, m, 1.0) for F, m in live) ** (1.0 / qc)
    lam0 = sum(_lp(F, pv.max(), m) for F, m in live)
    return luxemburg_norm(lambda mu: sum(inner(F, m, mu) for F, m in live), lam0, tol)


def variable_herz_norm(
    alpha: ExponentFunction,
    p: ExponentFunction,
    q: ExponentFunction,
    v,
    w,
    homogeneous: bool,
    f: GridFunction,
    tol: float = LUX_TOL,
) -> float:
    """Two-weighted Herz norm with blocks [v(B_k)]^{alpha(x)/n} f chi_k; v(B_k) is integrated over B_k within the box."""
    grid = f.grid
    vv = weight_values(v, grid)
    mu = weight_values(w, grid) * grid.cell_volume
    av = alpha.values(grid) if alpha.constant is None else np.full(grid.shape, alpha.constant)
    blocks = herz_blocks(grid, homogeneous)
    if not homogeneous:
        head_cov = blocks[0][2]
        blocks = blocks[1:]
    Fs, ms = [], []
    for _, k, cov in blocks:
        vB = float(np.sum(vv * _ball_cov(grid, k)) * grid.cell_volume)
        Fs.append(vB ** (av / grid.n) * f.values)
        ms.append(cov * mu)
    tail = mixed_sequence_norm(q, p, Fs, ms, grid, tol) if Fs else 0.0
    if homogeneous:
        return tail
    head = variable_lebesgue_norm(p, w, f, tol, measure=head_cov)
    return head + tail




@dataclass(frozen=True)
class _SignedFunction(ExponentFunction):
    def values(self, grid: Grid) -> np.ndarray:
        c = self.constant
        vals = np.full(grid.shape, c) if c is not None else sample(str(self.expr), grid).values
        if not np.all(np.isfinite(vals)):
            raise SpaceError(f"function {self.expr!r} is not finite on the grid")
        return vals


# --- Morrey and Besov-Bourgain-Morrey ----------------------------------------


def morrey_norm(r0: float, r: float, f: GridFunction, balls: Sequence[tuple[Sequence[float], float]] | None = None) -> float:
    """sup over balls of |B|^{1/r0-1/r} (integral over B within the box of |f|^r)^{1/r}.

    Default family: radii h/2 * 2^m up to the first radius covering the box,
    centred at every multiple of h/2 (dimension 1) or every cell centre
    (dimension 2).  |B| is the full (unclipped) ball measure.
    """
    if not 1 <= r <= r0:
        raise SpaceError("Morrey needs 1 <= r <= r0")
    grid = f.grid
    a = np.abs(f.values) ** r
    e = 1.0 / r0 - 1.0 / r
    best = 0.0
    if balls is not None:
        for c, R in balls:
            I = float(np.sum(a * coverage(grid, Ball(tuple(c), R))) * grid.cell_volume)
            meas = 2 * R if grid.n == 1 else math.pi * R * R
            best = max(best, meas**e * I ** (1.0 / r))
        return best
    from .grid import ball_integrals

    if grid.n == 1:
        edges = grid.edges(0)
        F = np.concatenate([[0.0], np.cumsum(a) * grid.h])
        centers = np.linspace(edges[0], edges[-1], 2 * grid.shape[0] + 1)
    for R in radius_ladder(grid):
        if grid.n == 1:
            I = np.interp(centers + R, edges, F) - np.interp(centers - R, edges, F)
            meas = 2 * R
        else:
            I = ball_integrals(a, grid, R)
            meas = math.pi * R * R
        best = max(best, meas**e * float(np.max(np.clip(I, 0, None))) ** (1.0 / r))
    return best


def _axis_cuts(lo: float, hi: float, side: float, h: float) -> np.ndarray:
    k0, k1 = math.floor(lo / side), math.ceil(hi / side)
    cuts = np.clip(np.arange(k0, k1 + 1) * side, lo, hi)
    return np.unique(np.round((cuts - lo) / h).astype(int))


def bbm_levels(grid: Grid) -> range:
    side = max(b - a for a, b in grid.box)
    return range(-int(math.ceil(math.log2(side))), grid.level + 1)


def bbm_norm(p: float, q: float, r: float, tau: float, f: GridFunction) -> float:
    """Nested l^r (translations) then l^tau (levels) of |Q|^{1/p-1/q} ||f||_{L^q(Q)} over dyadic cubes.

    Levels run from the first level whose cubes are at least as large as the box
    down to the grid level.
    """
    if not 1 <= q <= p:
        raise SpaceError("BBM needs 1 <= q <= p")
    grid = f.grid
    a = np.abs(f.values) ** q * grid.cell_volume
    if grid.n == 1:
        S = np.concatenate([[0.0], np.cumsum(a)])
    else:
        S = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
        S[1:, 1:] = np.cumsum(np.cumsum(a, axis=0), axis=1)
    outer = []
    for nu in bbm_levels(grid):
        side = 2.0**-nu
        cuts = [_axis_cuts(lo, hi, side, grid.h) for lo, hi in grid.box]
        if grid.n == 1:
            I = S[cuts[0][1:]] - S[cuts[0][:-1]]
        else:
            i0, i1 = cuts[0][:-1, None], cuts[0][1:, None]
            j0, j1 = cuts[1][None, :-1], cuts[1][None, 1:]
            I = S[i1, j1] - S[i0, j1] - S[i1, j0] + S[i0, j0]
        terms = side ** (grid.n * (1.0 / p - 1.0 / q)) * np.clip(I, 0, None) ** (1.0 / q)
        outer.append(_lq_sum(terms.ravel(), r))
    return _lq_sum(outer, tau)


# --- the space catalogue -----------------------------------------------------


class Space:
    tag: ClassVar[str] = ""

    def norm(self, f: GridFunction) -> float:
        raise NotImplementedError

    @property
    def separable(self) -> bool:
        return True

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"tag": self.tag, **_jsonable(self.params())}

    def __str__(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.tag}({args})"


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, Space):
            out[k] = v.to_dict()
        elif isinstance(v, WeightSpec):
            out[k] = v.to_dict()
        elif isinstance(v, GridFunction):
            out[k] = "<grid weight>"
        elif isinstance(v, (ExponentFunction, YoungFunction)):
            out[k] = v.expr
        else:
            out[k] = v
    return out


@dataclass(frozen=True)
class WeightedLebesgue(Space):
    p: float
    w: object = None
    tag: ClassVar[str] = "WeightedLebesgue"

    def __post_init__(self):
        if not 1 <= self.p < math.inf:
            raise SpaceError("WeightedLebesgue needs 1 <= p < inf")

    def norm(self, f):
        return weighted_lebesgue_norm(self.p, self.w, f)

    def params(self):
        return {"p": self.p, "w": self.w}


@dataclass(frozen=True)
class Lorentz(Space):
    p: float
    q: float
    tag: ClassVar[str] = "Lorentz"

    def __post_init__(self):
        if not (1 <= self.p < math.inf and self.q >= 1):
            raise SpaceError("Lorentz needs 1 <= p < inf and q >= 1")

    def norm(self, f):
        return lorentz_norm(self.p, self.q, f)

    @property
    def separable(self):
        return not math.isinf(self.q)

    def params(self):
        return {"p": self.p, "q": self.q}


@dataclass(frozen=True)
class Herz(Space):
    alpha: float
    p: float
    q: float
    homogeneous: bool = True
    tag: ClassVar[str] = "Herz"

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise SpaceError("Herz needs p, q >= 1")

    def norm(self, f):
        return herz_norm(self.alpha, self.p, self.q, self.homogeneous, f)

    @property
    def separable(self):
        return not (math.isinf(self.p) or math.isinf(self.q))

    def params(self):
        return {"alpha": self.alpha, "p": self.p, "q": self.q, "homogeneous": self.homogeneous}


@dataclass(frozen=True)
class VarLebesgue(Space):
    p: ExponentFunction
    w: object = None
    tol: float = LUX_TOL
    tag: ClassVar[str] = "VarLebesgue"

    def norm(self, f):
        return variable_lebesgue_norm(self.p, self.w, f, self.tol)

    def params(self):
        return {"p": self.p, "w": self.w}


@dataclass(frozen=True)
class VarHerz(Space):
    alpha: ExponentFunction
    p: ExponentFunction
    q: ExponentFunction
    v: object = None
    w: object = None
    homogeneous: bool = True
    tol: float = LUX_TOL
    tag: ClassVar[str] = "VarHerz"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _SignedFunction(self.alpha.expr if isinstance(self.alpha, ExponentFunction) else self.alpha))

    def norm(self, f):
        return variable_herz_norm(self.alpha, self.p, self.q, self.v, self.w, self.homogeneous, f, self.tol)

    def params(self):
        return {"alpha": self.alpha, "p": self.p, "q": self.q, "v": self.v, "w": self.w, "homogeneous": self.homogeneous}


@dataclass(frozen=True)
class Orlicz(Space):
    phi: YoungFunction
    tol: float = LUX_TOL
    tag: ClassVar[str] = "Orlicz"

    def norm(self, f):
        return orlicz_norm(self.phi, f, self.tol)

    def params(self):
        return {"phi": self.phi}


@dataclass(frozen=True)
class Morrey(Space):
    r0: float
    r: float
    tag: ClassVar[str] = "Morrey"

    def __post_init__(self):
        if not 1 <= self.r <= self.r0 < math.inf:
            raise SpaceError("Morrey needs 1 <= r <= r0 < inf")

    def norm(self, f):
        return morrey_norm(self.r0, self.r, f)

    @property
    def separable(self):
        return self.r == self.r0

    def params(self):
        return {"r0": self.r0, "r": self.r}


@dataclass(frozen=True)
class BBM(Space):
    p: float
    q: float
    r: float
    tau: float
    tag: ClassVar[str] = "BBM"

    def __post_init__(self):
        if not (1 <= self.q <= self.p < math.inf and self.r >= 1 and self.tau >= 1):
            raise SpaceError("BBM needs 1 <= q <= p < inf and r, tau >= 1")

    def norm(self, f):
        return bbm_norm(self.p, self.q, self.r, self.tau, f)

    @property
    def separable(self):
        return False

    def params(self):
        return {"p": self.p, "q": self.q, "r": self.r, "tau": self.tau}


@dataclass(frozen=True)
class Convexified(Space):
    """The ppow-convexification: ||f|| = || |f|^{1/ppow} ||_base ^ ppow."""

    base: Space
    ppow: float
    tag: ClassVar[str] = "Convexified"

    def __post_init__(self):
        if self.ppow <= 0:
            raise SpaceError("convexification power must be positive")

    def norm(self, f):
        g = GridFunction(f.grid, np.abs(f.values) ** (1.0 / self.ppow))
        return self.base.norm(g) ** self.ppow

    @property
    def separable(self):
        return self.base.separable

    def params(self):
        return {"base": self.base, "ppow": self.ppow}


@dataclass(frozen=True)
class BrokenNorm(Space):
    """Negative control: the square of a genuine norm (fails homogeneity)."""

    base: Space
    tag: ClassVar[str] = "Broken"

    def norm(self, f):
        return self.base.norm(f) ** 2

    def params(self):
        return {"base": self.base}


SPACE_TAGS = {
    cls.tag: cls
    for cls in (WeightedLebesgue, Lorentz, Herz, VarLebesgue, VarHerz, Orlicz, Morrey, BBM, Convexified)
}

SPACE_SCHEMAS = {
    "WeightedLebesgue": "p [1,inf), w = weight name (default 1)",
    "Lorentz": "p [1,inf), q [1,inf]",
    "Herz": "alpha real, p [1,inf], q [1,inf], homogeneous = true|false",
    "VarLebesgue": "p = exponent expression, w = weight name",
    "VarHerz": "alpha, p, q = exponent expressions, v, w = weight names, homogeneous",
    "Orlicz": "phi = Young function expression in t",
    "Morrey": "r0, r with 1 <= r <= r0 < inf",
    "BBM": "p, q, r, tau with 1 <= q <= p < inf",
    "Convexified": "base = space, ppow > 0 (a norm when the result is normed, e.g. base L^q with ppow <= q)",
}


def norm(X: Space, f: GridFunction) -> float:
    return X.norm(f)


# --- parsing -----------------------------------------------------------------

_POSITIONAL = {
    "WeightedLebesgue": ("p", "w"),
    "Lp": ("p", "w"),
    "Lorentz": ("p", "q"),
    "Herz": ("alpha", "p", "q", "homogeneous"),
    "VarLebesgue": ("p", "w"),
    "VarHerz": ("alpha", "p", "q", "v", "w", "homogeneous"),
    "Orlicz": ("phi",),
    "Morrey": ("r0", "r"),
    "BBM": ("p", "q", "r", "tau"),
    "Convexified": ("base", "ppow"),
}


def parse_space(obj, weights: dict | None = None) -> Space:
    """Build a space from ``"Tag(args...)"`` text or a ``{"tag": ..., params}`` mapping.

    Weight parameters name entries of ``weights``; ``L<p>`` (for example ``L2``
    or ``L1.5``) is shorthand for the unweighted Lebesgue space.
    """
    weights = weights or {}
    if isinstance(obj, Space):
        return obj
    if isinstance(obj, str):
        text = obj.strip()
        if text.startswith("L") and _is_number(text[1:]):
            return WeightedLebesgue(float(text[1:]))
        try:
            name, args, kwargs = parse_call(text)
        except ExpressionError as exc:
            raise SpaceError(str(exc)) from None
        return _build(name, args, kwargs, weights)
    if isinstance(obj, dict):
        d = dict(obj)
        if "tag" not in d:
            raise SpaceError("space mapping needs a 'tag'")
        return _build(d.pop("tag"), [], d, weights)
    raise SpaceError(f"cannot parse space {obj!r}")


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _build(name, args, kwargs, weights) -> Space:
    if name not in _POSITIONAL:
        raise SpaceError(f"unknown space tag {name!r}")
    names = _POSITIONAL[name]
    if len(args) > len(names):
        raise SpaceError(f"{name} takes at most {len(names)} positional arguments")
    params = dict(zip(names, args))
    for k, v in kwargs.items():
        if k not in names:
            raise SpaceError(f"{name} has no parameter {k!r}")
        params[k] = v

    def weight(key):
        ref = params.get(key)
        if ref is None or isinstance(ref, (WeightSpec, GridFunction)):
            return ref
        if isinstance(ref, dict):
            return WeightSpec.from_dict(ref)
        if ref not in weights:
            raise SpaceError(f"undefined weight {ref!r}")
        return weights[ref]

    def num(key, default=None):
        v = params.get(key, default)
        if v is None:
            raise SpaceError(f"{name} needs parameter {key!r}")
        if isinstance(v, str) and v in ("inf", "oo"):
            return math.inf
        try:
            return float(v)
        except (TypeError, ValueError):
            raise SpaceError(f"{name}.{key} must be a number, got {v!r}") from None

    def expo(key, default=None):
        v = params.get(key, default)
        if v is None:
            raise SpaceError(f"{name} needs parameter {key!r}")
        if isinstance(v, ExponentFunction):
            return v
        if isinstance(v, str) and not _is_number(v):
            try:
                sample(v, Grid(1, ((0.0, 1.0),), 1))
            except ExpressionError as exc:
                raise SpaceError(f"{name}.{key}: {exc}") from None
            return ExponentFunction(v)
        return ExponentFunction(float(v))

    def flag(key, default=True):
        v = params.get(key, default)
        if isinstance(v, str):
            return v.lower() in ("true", "yes", "1")
        return bool(v)

    try:
        if name in ("WeightedLebesgue", "Lp"):
            return WeightedLebesgue(num("p"), weight("w"))
        if name == "Lorentz":
            return Lorentz(num("p"), num("q"))
        if name == "Herz":
            return Herz(num("alpha"), num("p"), num("q"), flag("homogeneous"))
        if name == "VarLebesgue":
            return VarLebesgue(expo("p"), weight("w"))
        if name == "VarHerz":
            a = params.get("alpha")
            alpha = _SignedFunction(a if isinstance(a, str) and not _is_number(a) else float(a if a is not None else 0.0))
            return VarHerz(alpha, expo("p"), expo("q"), weight("v"), weight("w"), flag("homogeneous"))
        if name == "Orlicz":
            phi = params.get("phi")
            if not isinstance(phi, str):
                raise SpaceError("Orlicz needs phi as an expression string in t")
            return Orlicz(YoungFunction(phi))
        if name == "Morrey":
            return Morrey(num("r0"), num("r"))
        if name == "BBM":
            return BBM(num("p"), num("q"), num("r"), num("tau"))
        base = params.get("base")
        if isinstance(base, tuple) or isinstance(base, list) and len(base) == 3 and isinstance(base[0], str):
            base = _build(base[0], base[1], base[2], weights)
        return Convexified(parse_space(base, weights), num("ppow"))
    except TypeError as exc:
        raise SpaceError(f"bad parameters for {name}: {exc}") from None


# --- duality -------------------------------------------------------------------


def kothe_dual(X: Space) -> Space:
    if isinstance(X, WeightedLebesgue):
        if X.p <= 1:
            raise UnsupportedDual("the dual of L^1(w) is a weighted L^inf, not represented")
        pp = _conj(X.p)
        return WeightedLebesgue(pp, weight_power(X.w, 1 - pp))
    if isinstance(X, Lorentz):
        if X.p <= 1:
            raise UnsupportedDual("Lorentz dual needs p > 1")
        return Lorentz(_conj(X.p), _conj(X.q))
    raise UnsupportedDual(f"no explicit Köthe dual for {X.tag}")


def pairing_check(X: Space, f: GridFunction, g: GridFunction, X_dual: Space | None = None) -> tuple[float, float, float]:
    """(integral of |fg|, ||f||_X ||g||_X', ratio)."""
    X_dual = X_dual or kothe_dual(X)
    lhs = float(np.sum(np.abs(f.values * g.values)) * f.grid.cell_volume)
    rhs = X.norm(f) * X_dual.norm(g)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return lhs, rhs, ratio


# --- probes and axioms --------------------------------------------------------


def standard_battery(grid: Grid, seed: int = 0) -> list[GridFunction]:
    """Deterministic nonnegative probes: ball indicators, a box indicator, a bump, a ramp and two random functions."""
    rng = np.random.default_rng(seed)
    r = grid.radius()
    probes = []
    for rad in (0.5, 1.0, 2.0):
        probes.append(GridFunction(grid, coverage(grid, Ball(tuple([0.0] * grid.n), rad))))
    c = tuple(0.5 for _ in range(grid.n))
    probes.append(GridFunction(grid, coverage(grid, Box(tuple(x - 0.25 for x in c), tuple(x + 0.5 for x in c)))))
    probes.append(GridFunction(grid, np.exp(-4 * r**2)))
    probes.append(GridFunction(grid, np.clip(1.5 - r, 0, None)))
    inner = r < 1.5
    for _ in range(2):
        probes.append(GridFunction(grid, rng.random(grid.shape) * inner))
    return [p for p in probes if not p.is_zero()]


def standard_balls(grid: Grid) -> list[Ball]:
    z = tuple([0.0] * grid.n)
    off = tuple([0.5] + [0.0] * (grid.n - 1))
    return [Ball(z, 0.25), Ball(z, 1.0), Ball(off, 0.5), Ball(z, 2.0)]


def axioms_check(X: Space, battery: Sequence[GridFunction], balls: Sequence[Ball], tol: float = 1e-6) -> VerificationReport:
    """Empirical (P1)-(P5) on a probe battery and a ball set."""
    rep = VerificationReport("axioms", config={"space": X.to_dict(), "tol": tol, "probes": len(battery), "balls": len(balls)})
    grid = battery[0].grid
    norms = [X.norm(f) for f in battery]
    zero = X.norm(GridFunction(grid, np.zeros(grid.shape)))
    rep.require(zero == 0, f"P1: norm of zero is {zero}")
    rep.require(all(n > 0 for n in norms), "P1: a nonzero probe has zero norm")
    worst_h = 0.0
    for f, nf in zip(battery, norms):
        for c in (-2.0, 0.5, 3.0):
            rel = abs(X.norm(f * c) - abs(c) * nf) / (abs(c) * nf)
            worst_h = max(worst_h, rel)
    rep.require(worst_h <= tol, f"P1: homogeneity defect {worst_h:.3g}")
    worst_t = -math.inf
    worst_l = -math.inf
    for i in range(len(battery)):
        for j in range(i + 1, len(battery)):
            f, g = battery[i], battery[j]
            s = X.norm(f + g)
            worst_t = max(worst_t, (s - norms[i] - norms[j]) / (norms[i] + norms[j]))
            lo = f.abs().minimum(g.abs())
            if not lo.is_zero():
                worst_l = max(worst_l, (X.norm(lo) - min(norms[i], norms[j])) / min(norms[i], norms[j]))
    rep.require(worst_t <= tol, f"P1: triangle defect {worst_t:.3g}")
    rep.require(worst_l <= tol, f"P2: lattice defect {worst_l:.3g}")
    worst_fatou = 0.0
    for f, nf in zip(battery, norms):
        a = f.abs()
        seq = [X.norm(a * (1 - 2.0**-j)) for j in range(1, 6)]
        r = grid.radius()
        seq += [X.norm(GridFunction(grid, a.values * (r < 2.0**j))) for j in range(-2, 4)]
        inc = seq[:5]
        loc = seq[5:]
        mono = all(b >= a0 * (1 - tol) for a0, b in zip(inc, inc[1:])) and all(b >= a0 * (1 - tol) for a0, b in zip(loc, loc[1:]))
        limit_gap = abs(loc[-1] - nf) / nf if (r < 2.0**3).all() else 0.0
        scale_gap = abs(inc[-1] / (1 - 2.0**-5) - nf) / nf
        worst_fatou = max(worst_fatou, limit_gap, scale_gap if mono else math.inf)
    rep.require(worst_fatou <= tol, f"P3: monotone-limit defect {worst_fatou:.3g}")
    for B in balls:
        chi = GridFunction(grid, coverage(grid, B))
        nb = X.norm(chi)
        cb = max(float(np.sum(np.abs(f.values) * chi.values) * grid.cell_volume) / nf for f, nf in zip(battery, norms))
        rep.add(ball=[list(B.center), B.radius], chi_norm=nb, C_B=cb)
        rep.require(math.isfinite(nb) and nb > 0, f"P4: ball {B} has norm {nb}")
        rep.require(math.isfinite(cb), f"P5: ball {B} constant not finite")
    rep.aggregates.update(homogeneity_defect=worst_h, triangle_defect=worst_t, lattice_defect=worst_l, fatou_defect=worst_fatou)
    return rep


def absolute_continuity_probe(X: Space, f: GridFunction, sets: Sequence) -> list[float]:
    return [X.norm(GridFunction(f.grid, f.values * coverage(f.grid, E))) for E in sets]


def characteristic_ratio_profile(X: Space, grid: Grid, levels: Sequence[int] | None = None, C: float = 1.0) -> dict:
    """Ratios ||chi_k||/||chi_l|| for k <= l and the critical exponent delta.

    delta is the largest exponent with ratio <= C (|C_k|/|C_l|)^delta on every
    sampled pair; annuli are those of the homogeneous Herz blocks (the innermost
    block is a ball) restricted to ``levels``.
    """
    blocks = {k: cov for lbl, k, cov in herz_blocks(grid, True) if lbl == "annulus"}
    ks = sorted(blocks if levels is None else [k for k in levels if k in blocks])
    norms = {k: X.norm(GridFunction(grid, blocks[k])) for k in ks}
    meas = {k: float(blocks[k].sum() * grid.cell_volume) for k in ks}
    rows, delta, witness = [], math.inf, None
    for i, k in enumerate(ks):
        for l in ks[i:]:
            ratio = norms[k] / norms[l]
            mr = meas[k] / meas[l]
            rows.append({"k": k, "l": l, "ratio": ratio, "measure_ratio": mr})
            if mr < 1:
                d = math.log(ratio / C) / math.log(mr)
                if d < delta:
                    delta, witness = d, (k, l)
    return {"rows": rows, "delta": delta, "C": C, "witness": witness}
