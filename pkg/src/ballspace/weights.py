"""Weights, Muckenhoupt constants over dyadic cube families, and the Rubio de Francia majorant."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .grid import Grid, GridError, GridFunction, sample
from .operators import maximal


class WeightError(ValueError):
    pass


class SeriesDivergence(RuntimeError):
    """The majorant series did not contract within the allowed number of terms."""


class Weight(GridFunction):
    """A grid function with strictly positive, finite values."""

    def __post_init__(self):
        super().__post_init__()
        if np.iscomplexobj(self.values) or not np.all(self.values > 0):
            raise WeightError("weights must be real and strictly positive on every cell")

    @classmethod
    def from_function(cls, f: GridFunction) -> "Weight":
        return cls(f.grid, f.values)


WEIGHT_KINDS = ("constant", "power", "capped_power", "piecewise", "custom")


@dataclass(frozen=True)
class WeightSpec:
    """Parametric weight family.

    kinds: ``constant(value)``, ``power(alpha)`` = |x|^alpha, ``capped_power(alpha)``
    = max(1,|x|)^alpha, ``piecewise(edges, values)`` radial steps (values[i] on
    edges[i-1] <= |x| < edges[i]), ``custom(expr)`` from an expression string.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise WeightError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "WeightSpec":
        d = dict(d)
        return cls(d.pop("kind"), d)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    def materialize(self, grid: Grid) -> Weight:
        p = self.params
        r = grid.radius()
        if self.kind == "constant":
            values = np.full(grid.shape, float(p.get("value", 1.0)))
        elif self.kind == "power":
            values = r ** float(p["alpha"])
        elif self.kind == "capped_power":
            values = np.maximum(1.0, r) ** float(p["alpha"])
        elif self.kind == "piecewise":
            edges = np.asarray(p["edges"], dtype=float)
            vals = np.asarray(p["values"], dtype=float)
            if vals.size != edges.size + 1:
                raise WeightError("piecewise weight needs len(values) == len(edges) + 1")
            values = vals[np.searchsorted(edges, r, side="right")]
        else:
            values = sample(p["expr"], grid).values
        return Weight(grid, values)


def as_weight(w, grid: Grid) -> Weight:
    if w is None:
        return Weight(grid, np.ones(grid.shape))
    if isinstance(w, WeightSpec):
        return w.materialize(grid)
    if isinstance(w, GridFunction):
        if w.grid != grid:
            raise GridError("weight and function live on different grids")
        return w if isinstance(w, Weight) else Weight.from_function(w)
    raise WeightError(f"cannot interpret {w!r} as a weight")


def dual_weight(w: Weight, p: float) -> Weight:
    """sigma = w^{-1/(p-1)}."""
    if p <= 1:
        raise WeightError("p must exceed 1")
    return Weight(w.grid, w.values ** (-1.0 / (p - 1.0)))


# --- dyadic cube families -----------------------------------------------------


@dataclass(frozen=True)
class CubeFamily:
    """Dyadic cubes of side 2^-j inside the box, for levels j in [min_level, max_level].

    With ``shifted`` the translates by half a side length are included on every
    level coarser than the grid.
    """

    grid: Grid
    min_level: int | None = None
    max_level: int | None = None
    shifted: bool = True

    @property
    def levels(self) -> range:
        side = min(b - a for a, b in self.grid.box)
        coarsest = int(np.ceil(-np.log2(side) - 1e-12))
        lo = coarsest if self.min_level is None else max(self.min_level, coarsest)
        hi = self.grid.level if self.max_level is None else min(self.max_level, self.grid.level)
        return range(lo, hi + 1)

    def describe(self) -> str:
        lv = self.levels
        return f"dyadic cubes levels {lv.start}..{lv.stop - 1}" + (" + half shifts" if self.shifted else "")

    def axis_intervals(self, level: int, axis: int) -> list[np.ndarray]:
        """Start indices (in cells) of the cube projections on one axis, one array per shift."""
        a, b = self.grid.box[axis]
        side = 2.0**-level
        m = int(round(side / self.grid.h))
        shifts = [0.0, side / 2] if (self.shifted and m >= 2) else [0.0]
        out = []
        for sh in shifts:
            k0 = int(np.ceil((a - sh) / side - 1e-12))
            k1 = int(np.floor((b - sh) / side + 1e-12)) - 1
            if k1 < k0:
                out.append(np.zeros(0, dtype=int))
                continue
            starts = ((np.arange(k0, k1 + 1) * side + sh - a) / self.grid.h).round().astype(int)
            out.append(starts)
        return out

    def side_cells(self, level: int) -> int:
        return int(round(2.0**-level / self.grid.h))


@dataclass(frozen=True)
class ApEstimate:
    p: float
    family: str
    value: float
    witness: tuple  # ((lo...), (hi...)) corners of the attaining cube

    def to_dict(self) -> dict:
        return {"p": self.p, "family": self.family, "value": self.value, "witness": [list(c) for c in self.witness]}


def _box_sums(values: np.ndarray) -> np.ndarray:
    S = np.zeros(tuple(s + 1 for s in values.shape))
    if values.ndim == 1:
        S[1:] = np.cumsum(values)
    else:
        S[1:, 1:] = np.cumsum(np.cumsum(values, axis=0), axis=1)
    return S


def _cube_averages(S: np.ndarray, starts: Sequence[np.ndarray], m: int) -> np.ndarray:
    if len(starts) == 1:
        i = starts[0]
        return (S[i + m] - S[i]) / m
    i, j = np.meshgrid(starts[0], starts[1], indexing="ij")
    return (S[i + m, j + m] - S[i, j + m] - S[i + m, j] + S[i, j]) / (m * m)


def _iter_cubes(family: CubeFamily):
    """Yield (level, side_cells, per-axis start arrays) for every shift combination."""
    grid = family.grid
    for level in family.levels:
        m = family.side_cells(level)
        per_axis = [family.axis_intervals(level, ax) for ax in range(grid.n)]
        if grid.n == 1:
            combos = [(s,) for s in per_axis[0]]
        else:
            combos = [(s0, s1) for s0 in per_axis[0] for s1 in per_axis[1]]
        for starts in combos:
            if all(s.size for s in starts):
                yield level, m, starts


def _witness(family: CubeFamily, starts, m: int, flat_index: int) -> tuple:
    grid = family.grid
    idx = np.unravel_index(flat_index, tuple(s.size for s in starts))
    lo = tuple(grid.box[ax][0] + starts[ax][idx[ax]] * grid.h for ax in range(grid.n))
    hi = tuple(c + m * grid.h for c in lo)
    return (lo, hi)


def ap_constant(w: GridFunction, p: float, family: CubeFamily | None = None) -> ApEstimate:
    """Largest value of avg_Q(w) * avg_Q(w^{-1/(p-1)})^{p-1} over the cube family.

    Ties resolve to the first cube in (level, shift, lexicographic index) order.
    """
    if p <= 1:
        raise WeightError("A_p constant needs p > 1")
    family = family or CubeFamily(w.grid)
    Sw = _box_sums(w.values)
    Ss = _box_sums(w.values ** (-1.0 / (p - 1.0)))
    best, witness = -np.inf, None
    for _, m, starts in _iter_cubes(family):
        vals = _cube_averages(Sw, starts, m) * _cube_averages(Ss, starts, m) ** (p - 1.0)
        k = int(np.argmax(vals))
        if vals.flat[k] > best:
            best, witness = float(vals.flat[k]), _witness(family, starts, m, k)
    if witness is None:
        raise WeightError("cube family is empty")
    return ApEstimate(p, family.describe(), best, witness)


def _window_minima(values: np.ndarray, m: int) -> np.ndarray:
    """Minimum over every axis-aligned window of side m (a power of two) starting at each index."""
    out = values
    for axis in range(values.ndim):
        cur, width = out, 1
        while width < m:
            n = cur.shape[axis] - width
            a = np.take(cur, np.arange(n), axis=axis)
            b = np.take(cur, np.arange(width, width + n), axis=axis)
            cur, width = np.minimum(a, b), width * 2
        out = cur
    return out


def cube_a1_constant(w: GridFunction, family: CubeFamily | None = None) -> float:
    """Largest ratio avg_Q(w) / min_Q(w) over the cube family."""
    family = family or CubeFamily(w.grid)
    S = _box_sums(w.values)
    best = 1.0
    for _, m, starts in _iter_cubes(family):
        mins = _window_minima(w.values, m)
        idx = np.ix_(*starts) if len(starts) > 1 else starts[0]
        best = max(best, float(np.max(_cube_averages(S, starts, m) / mins[idx])))
    return best


def a1_constant(w: GridFunction, normalization: str = "measure", exhaustive: bool = False) -> float:
    """max over cells of M w / w."""
    return float(np.max(maximal(w, normalization, exhaustive=exhaustive).values / w.values))


# --- doubling exponents ------------------------------------------------------


@dataclass(frozen=True)
class DoublingEstimate:
    p_v: float
    delta: float
    C: float
    pv_pair: tuple
    delta_pair: tuple


def doubling_exponents(
    v: GridFunction,
    centers: Iterable[Sequence[float]] | None = None,
    radii: Iterable[float] | None = None,
    C: float = 1.0,
    depth: int = 8,
) -> DoublingEstimate:
    """Fit p_v (smallest) and delta (largest) with v(B)/v(E) <= C(|B|/|E|)^p_v and v(E)/v(B) <= C(|E|/|B|)^delta.

    B runs over balls inside the box (cubes in dimension 2); E over the dyadic
    sub-boxes of B down to ``depth`` halvings or one cell, whichever is coarser.
    """
    grid = v.grid
    if centers is None:
        ticks = [np.linspace(a, b, 9)[1:-1] for a, b in grid.box]
        centers = [tuple(c) for c in np.array(np.meshgrid(*ticks, indexing="ij")).reshape(grid.n, -1).T]
        if all(a < 0 < b for a, b in grid.box):
            centers = [tuple([0.0] * grid.n)] + [c for c in centers if any(x != 0 for x in c)]
    centers = list(centers)
    if radii is None:
        radii = [grid.h * 2**m for m in range(1, grid.level + 8)]
    S = _box_sums(v.values * grid.cell_volume)
    pv, dl = -np.inf, np.inf
    pv_pair = dl_pair = None
    for c in centers:
        for r in radii:
            lo = [c[ax] - r for ax in range(grid.n)]
            if any(lo[ax] < grid.box[ax][0] or c[ax] + r > grid.box[ax][1] for ax in range(grid.n)):
                continue
            vB = _region_integral(S, grid, lo, [c[ax] + r for ax in range(grid.n)])
            for d in range(1, depth + 1):
                piece = 2 * r / 2**d
                if piece < grid.h - 1e-15:
                    break
                offs = lo[0] + piece * np.arange(2**d)
                if grid.n == 1:
                    los = [offs]
                else:
                    o1 = lo[1] + piece * np.arange(2**d)
                    A, B = np.meshgrid(offs, o1, indexing="ij")
                    los = [A.ravel(), B.ravel()]
                vE = _region_integral(S, grid, los, [x + piece for x in los])
                mratio = 2.0**(d * grid.n)
                ok = vE > 0
                e_pv = np.log(vB / (C * vE[ok])) / np.log(mratio)
                e_dl = np.log(C * vB / vE[ok]) / np.log(mratio)
                i, j = int(np.argmax(e_pv)), int(np.argmin(e_dl))
                if e_pv[i] > pv:
                    pv, pv_pair = float(e_pv[i]), (tuple(c), r, d, i)
                if e_dl[j] < dl:
                    dl, dl_pair = float(e_dl[j]), (tuple(c), r, d, j)
    if pv_pair is None:
        raise WeightError("ball family is degenerate: no ball fits inside the box")
    return DoublingEstimate(pv, dl, C, pv_pair, dl_pair)


def _region_integral(S: np.ndarray, grid: Grid, lo, hi):
    """Exact integral of a cell-constant function over axis-aligned boxes via the summed table S."""
    def cum(axis, x):
        return (np.asarray(x, dtype=float) - grid.box[axis][0]) / grid.h

    if grid.n == 1:
        F = S
        return np.interp(cum(0, hi[0]), np.arange(F.size), F) - np.interp(cum(0, lo[0]), np.arange(F.size), F)
    from .grid import _bilinear

    ex = np.arange(S.shape[0], dtype=float)
    ey = np.arange(S.shape[1], dtype=float)
    x0, x1, y0, y1 = cum(0, lo[0]), cum(0, hi[0]), cum(1, lo[1]), cum(1, hi[1])
    return _bilinear(S, ex, ey, x1, y1) - _bilinear(S, ex, ey, x0, y1) - _bilinear(S, ex, ey, x1, y0) + _bilinear(S, ex, ey, x0, y0)


# --- Rubio de Francia majorant ------------------------------------------------


@dataclass
class RubioSeries:
    function: GridFunction
    terms: int
    tail_bound: float
    ratios: list
    k_norm: float
    base: float  # alpha * norm_M


def rubio_series(
    k: GridFunction,
    X,
    alpha: float,
    norm_M: float,
    l_max: int = 64,
    tol: float = 1e-8,
    normalization: str = "measure",
) -> RubioSeries:
    """Truncated sum of M^l|k| / (alpha * norm_M)^l with a certified geometric tail.

    Summation stops before term l once the observed contraction q (largest of
    the last three norm ratios) is below one, the tail bound
    ||term_l||_X / (1 - q) is at most tol * ||k||_X, and term_l <= tol * partial
    sum pointwise.  The last condition makes M(R) <= alpha*norm_M*R*(1+tol) hold
    cell by cell.
    """
    if alpha < 2:
        raise WeightError("alpha must be at least 2")
    base = alpha * norm_M
    term = k.abs()
    total = term.values.copy()
    k_norm = X.norm(term)
    if k_norm == 0 or term.is_zero():
        return RubioSeries(term, 1, 0.0, [], 0.0, base)
    prev_norm, ratios = k_norm, []
    for l in range(1, l_max + 1):
        term = maximal(term, normalization) / base
        t_norm = X.norm(term)
        ratios.append(t_norm / prev_norm)
        prev_norm = t_norm
        q = max(ratios[-3:])
        if q < 1 and t_norm / (1 - q) <= tol * k_norm and np.all(term.values <= tol * total):
            return RubioSeries(GridFunction(k.grid, total), l, t_norm / (1 - q), ratios, k_norm, base)
        total = total + term.values
    raise SeriesDivergence(
        f"majorant series not contracting within {l_max} terms (last ratios {ratios[-3:]})"
    )


def rubio_majorant(k, X, alpha, norm_M, l_max=64, tol=1e-8, normalization="measure") -> GridFunction:
    return rubio_series(k, X, alpha, norm_M, l_max, tol, normalization).function


def rubio_reference(k: GridFunction, base: float, terms: int = 40, normalization: str = "measure") -> GridFunction:
    """Plain fixed-length summation, the long-sum oracle for the truncation certificate."""
    term = k.abs()
    total = term.values.copy()
    for _ in range(1, terms):
        term = maximal(term, normalization) / base
        total = total + term.values
    return GridFunction(k.grid, total)


def estimate_operator_norm(X, operator: Callable[[GridFunction], GridFunction], probes: Sequence[GridFunction], safety: float = 2.0) -> float:
    """safety * max over probes of ||T f||_X / ||f||_X."""
    best = 0.0
    for f in probes:
        nf = X.norm(f)
        if not np.isfinite(nf):
            raise WeightError("probe has infinite norm")
        if nf == 0:
            raise WeightError("probe has zero norm")
        best = max(best, X.norm(operator(f)) / nf)
    return safety * best


def regularize(g: GridFunction, X, rel: float = 1e-8, normalization: str = "measure") -> GridFunction:
    """g + eps * M(chi_B(1)) with eps = rel * ||g||_X (eps = rel when g = 0)."""
    grid = g.grid
    chi = GridFunction(grid, (grid.radius() < 1).astype(float))
    if chi.is_zero():
        chi = GridFunction(grid, np.ones(grid.shape))
    gn = X.norm(g)
    eps = rel * (gn if gn > 0 else 1.0)
    return g.abs() + maximal(chi, normalization) * eps


def default_alpha(beta: float, p: float, norm_M: float) -> float:
    return max(4.0, 2.0 * beta ** (1.0 / p) / norm_M + 1.0)


def estimate_beta(W: GridFunction, p: float, probes: Sequence[GridFunction], Ap: float, normalization: str = "measure", safety: float = 2.0) -> float:
    """Empirical constant in int (MF)^p W <= beta [W]^{p'} int |F|^p W, over the probes, inflated by ``safety``."""
    pprime = p / (p - 1)
    best = 0.0
    for F in probes:
        den = float(np.sum(np.abs(F.values) ** p * W.values))
        if den <= 0:
            continue
        num = float(np.sum(maximal(F, normalization).values ** p * W.values))
        best = max(best, num / den / Ap**pprime)
    return max(safety * best, 1.0 + 1e-12)


@dataclass
class CompositeWeight:
    weight: Weight
    estimate: ApEstimate
    R: RubioSeries
    R_dual: RubioSeries
    chain_bound: float  # (alpha ||M||_X)^{p-1} (alpha ||M||_X')
    factor_bound: float  # [R]_{A1,cubes}^{p-1} [R']_{A1,cubes}


def composite_extrapolation_weight(
    f: GridFunction,
    g: GridFunction,
    h: GridFunction,
    p: float,
    alpha: float,
    X,
    X_dual,
    norm_M: float,
    norm_M_dual: float,
    family: CubeFamily | None = None,
    tol: float = 1e-8,
    normalization: str = "measure",
) -> CompositeWeight:
    """W = R_{g+f}^{1-p} R'_h and its A_p estimate, with both upper bounds it must respect."""
    if np.any(g.values <= 0) or np.any(h.values <= 0):
        raise WeightError("g and h must be strictly positive; regularize them first")
    R = rubio_series(g + f.abs(), X, alpha, norm_M, tol=tol, normalization=normalization)
    Rd = rubio_series(h, X_dual, alpha, norm_M_dual, tol=tol, normalization=normalization)
    W = Weight(f.grid, R.function.values ** (1 - p) * Rd.function.values)
    family = family or CubeFamily(f.grid)
    est = ap_constant(W, p, family)
    chain = R.base ** (p - 1) * Rd.base * (1 + tol)
    factor = cube_a1_constant(R.function, family) ** (p - 1) * cube_a1_constant(Rd.function, family)
    return CompositeWeight(W, est, R, Rd, chain, factor)
