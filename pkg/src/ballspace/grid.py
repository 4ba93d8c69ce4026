"""Cell-constant functions on dyadic boxes in dimension 1 or 2.

A :class:`GridFunction` carries one value per cell and is read as constant on
that cell, so integrals of indicators, rearrangements and layer-cake sums are
exact rather than quadrature approximations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
from scipy.signal import fftconvolve

MAX_CELLS = 1 << 22
MAX_LEVEL = 24


class GridError(ValueError):
    pass


def _is_dyadic_multiple(x: float, level: int) -> bool:
    scaled = Fraction(x).limit_denominator(1 << 40) * (1 << level)
    return scaled.denominator == 1


@dataclass(frozen=True)
class Grid:
    n: int
    box: tuple[tuple[float, float], ...]
    level: int

    @property
    def h(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(round((b - a) / self.h)) for a, b in self.box)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @property
    def measure(self) -> float:
        return float(np.prod([b - a for a, b in self.box]))

    @property
    def diameter(self) -> float:
        return float(np.sqrt(sum((b - a) ** 2 for a, b in self.box)))

    def edges(self, axis: int) -> np.ndarray:
        a, _ = self.box[axis]
        return a + self.h * np.arange(self.shape[axis] + 1)

    def centers(self, axis: int) -> np.ndarray:
        a, _ = self.box[axis]
        return a + self.h * (np.arange(self.shape[axis]) + 0.5)

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, each of shape ``self.shape``."""
        return tuple(np.meshgrid(*[self.centers(i) for i in range(self.n)], indexing="ij"))

    def radius(self) -> np.ndarray:
        """Euclidean norm of each cell center."""
        return np.sqrt(sum(c**2 for c in self.mesh()))

    def index_origin(self) -> tuple[int, ...]:
        """Integer index of the first cell on the global lattice ``h * Z^n``."""
        return tuple(int(round(a / self.h)) for a, _ in self.box)

    def refine(self, by: int = 1) -> "Grid":
        return make_grid(self.n, self.box, self.level + by)

    def to_dict(self) -> dict:
        return {"n": self.n, "box": [list(b) for b in self.box], "level": self.level}


def make_grid(n: int, box: Sequence[Sequence[float]], level: int, max_cells: int = MAX_CELLS) -> Grid:
    if n not in (1, 2):
        raise GridError(f"dimension must be 1 or 2, got {n}")
    if not 0 <= level <= MAX_LEVEL:
        raise GridError(f"level {level} outside [0, {MAX_LEVEL}]")
    if len(box) != n:
        raise GridError(f"box has {len(box)} intervals for dimension {n}")
    box = tuple((float(a), float(b)) for a, b in box)
    for a, b in box:
        if not b > a:
            raise GridError(f"empty interval [{a}, {b}]")
        if not (_is_dyadic_multiple(a, level) and _is_dyadic_multiple(b, level)):
            raise GridError(f"box endpoints [{a}, {b}] are not multiples of 2^-{level}")
    grid = Grid(n, box, level)
    if grid.size > max_cells:
        raise GridError(f"{grid.size} cells exceeds the maximum {max_cells}")
    return grid


@dataclass(frozen=True)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, copy=True)
        if values.shape != self.grid.shape:
            raise GridError(f"values of shape {values.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("grid function has non-finite values")
        if not np.iscomplexobj(values):
            values = values.astype(float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def abs(self) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.values))

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __pow__(self, p):
        return GridFunction(self.grid, self.values**p)

    def maximum(self, other) -> "GridFunction":
        return GridFunction(self.grid, np.maximum(self.values, self._other(other)))

    def minimum(self, other) -> "GridFunction":
        return GridFunction(self.grid, np.minimum(self.values, self._other(other)))

    def max(self) -> float:
        return float(np.max(self.values))

    def min(self) -> float:
        return float(np.min(self.values))

    def is_zero(self) -> bool:
        return not np.any(self.values)


def constant(grid: Grid, value: float) -> GridFunction:
    return GridFunction(grid, np.full(grid.shape, float(value)))


def sample(expression: Union[str, Callable[..., np.ndarray]], grid: Grid) -> GridFunction:
    """Evaluate ``expression`` at cell centers.

    ``expression`` is either a callable taking one coordinate array per axis or
    a string in the arithmetic expression language of :mod:`ballspace.expr`.
    """
    if isinstance(expression, str):
        from .expr import compile_expression

        expression = compile_expression(expression, grid.n)
    values = np.broadcast_to(np.asarray(expression(*grid.mesh()), dtype=float), grid.shape)
    if not np.all(np.isfinite(values)):
        raise GridError("expression produced non-finite samples")
    return GridFunction(grid, values)


# --- regions -----------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @property
    def measure(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float
    metric: str = "l2"

    @property
    def measure(self) -> float:
        return ball_measure(len(self.center), self.radius, self.metric)


Region = Union[Box, Ball, None]


def ball_measure(n: int, radius: float, metric: str = "l2") -> float:
    if metric == "linf":
        return (2.0 * radius) ** n
    return 2.0 * radius if n == 1 else np.pi * radius**2


def _interval_overlap(edges: np.ndarray, lo: float, hi: float) -> np.ndarray:
    left, right = edges[:-1], edges[1:]
    width = np.clip(np.minimum(right, hi) - np.maximum(left, lo), 0.0, None)
    return width / (right - left)


def _disc_fraction(grid: Grid, center, radius: float, supersample: int = 16) -> np.ndarray:
    xs, ys = grid.centers(0), grid.centers(1)
    h = grid.h
    dx = np.abs(xs - center[0])[:, None]
    dy = np.abs(ys - center[1])[None, :]
    near = np.sqrt(np.clip(dx - h / 2, 0, None) ** 2 + np.clip(dy - h / 2, 0, None) ** 2)
    far = np.sqrt((dx + h / 2) ** 2 + (dy + h / 2) ** 2)
    frac = np.where(far <= radius, 1.0, 0.0)
    partial = (near < radius) & (far > radius)
    if np.any(partial):
        offs = (np.arange(supersample) + 0.5) / supersample - 0.5
        ox, oy = np.meshgrid(offs * h, offs * h, indexing="ij")
        ii, jj = np.nonzero(partial)
        px = xs[ii][:, None, None] + ox[None] - center[0]
        py = ys[jj][:, None, None] + oy[None] - center[1]
        inside = (px**2 + py**2 < radius**2).mean(axis=(1, 2))
        frac[ii, jj] = inside
    return frac


def coverage(grid: Grid, region: Region) -> np.ndarray:
    """Fraction of each cell lying inside ``region`` (clipped to the box).

    Box and cube regions are exact; Euclidean discs in the plane use 16x16
    supersampling on boundary cells.
    """
    if region is None:
        return np.ones(grid.shape)
    if isinstance(region, Ball) and region.metric == "linf":
        region = Box(tuple(c - region.radius for c in region.center), tuple(c + region.radius for c in region.center))
    if isinstance(region, Box):
        fracs = [_interval_overlap(grid.edges(i), region.lo[i], region.hi[i]) for i in range(grid.n)]
        return fracs[0] if grid.n == 1 else np.outer(fracs[0], fracs[1])
    if grid.n == 1:
        c = region.center[0]
        return _interval_overlap(grid.edges(0), c - region.radius, c + region.radius)
    return _disc_fraction(grid, region.center, region.radius)


def integrate(f: GridFunction, region: Region = None) -> float:
    weights = coverage(f.grid, region)
    return float(np.sum(f.values * weights) * f.grid.cell_volume)


# --- rearrangement -----------------------------------------------------------


@dataclass(frozen=True)
class RearrangementProfile:
    """Step function f* on (0, total]: value ``values[i]`` on (measures[i-1], measures[i]]."""

    values: np.ndarray
    measures: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.measures, t, side="left")
        out = np.where(idx < len(self.values), self.values[np.minimum(idx, len(self.values) - 1)], 0.0)
        return np.where(t <= 0, self.values[0], out)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.measures, prepend=0.0)

    def lp_integral(self, p: float) -> float:
        """Integral of (f*)^p over (0, total]."""
        return float(np.sum(self.values**p * self.steps))


def rearrange(f: GridFunction) -> RearrangementProfile:
    vals = np.sort(np.abs(f.values).ravel())[::-1]
    dm = f.grid.cell_volume
    cum = dm * np.arange(1, vals.size + 1)
    # merge runs of equal values so measures are strictly increasing and values strictly decreasing
    last_of_run = np.append(vals[1:] != vals[:-1], True)
    return RearrangementProfile(vals[last_of_run].copy(), cum[last_of_run].copy())


# --- ball integrals ----------------------------------------------------------


def _cumulative_1d(values: np.ndarray, h: float) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(values) * h])


def _bilinear(F: np.ndarray, ex: np.ndarray, ey: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    X = np.clip(X, ex[0], ex[-1])
    Y = np.clip(Y, ey[0], ey[-1])
    hx, hy = ex[1] - ex[0], ey[1] - ey[0]
    i = np.clip(((X - ex[0]) / hx).astype(int), 0, len(ex) - 2)
    j = np.clip(((Y - ey[0]) / hy).astype(int), 0, len(ey) - 2)
    tx = (X - ex[i]) / hx
    ty = (Y - ey[j]) / hy
    return (
        F[i, j] * (1 - tx) * (1 - ty)
        + F[i + 1, j] * tx * (1 - ty)
        + F[i, j + 1] * (1 - tx) * ty
        + F[i + 1, j + 1] * tx * ty
    )


@lru_cache(maxsize=256)
def _disc_stencil(h: float, radius: float, kx: int, ky: int) -> np.ndarray:
    k = int(np.ceil(radius / h + 0.5))
    kx, ky = min(k, kx), min(k, ky)
    level = int(round(-np.log2(h)))
    stencil_grid = Grid(2, ((-(kx + 0.5) * h, (kx + 0.5) * h), (-(ky + 0.5) * h, (ky + 0.5) * h)), level)
    frac = _disc_fraction(stencil_grid, (0.0, 0.0), radius)
    frac.setflags(write=False)
    return frac


def ball_integrals(values: np.ndarray, grid: Grid, radius: float, metric: str = "l2") -> np.ndarray:
    """Integral of ``values`` over B(x, radius) intersected with the box, for every cell center x."""
    h = grid.h
    if grid.n == 1:
        F = _cumulative_1d(values, h)
        e = grid.edges(0)
        c = grid.centers(0)
        return np.interp(c + radius, e, F) - np.interp(c - radius, e, F)
    if metric == "linf":
        F = np.zeros((grid.shape[0] + 1, grid.shape[1] + 1))
        F[1:, 1:] = np.cumsum(np.cumsum(values, axis=0), axis=1) * h * h
        ex, ey = grid.edges(0), grid.edges(1)
        X, Y = grid.mesh()
        return (
            _bilinear(F, ex, ey, X + radius, Y + radius)
            - _bilinear(F, ex, ey, X - radius, Y + radius)
            - _bilinear(F, ex, ey, X + radius, Y - radius)
            + _bilinear(F, ex, ey, X - radius, Y - radius)
        )
    stencil = _disc_stencil(h, float(radius), grid.shape[0], grid.shape[1])
    full = fftconvolve(values, stencil, mode="same") * h * h
    return np.clip(full, 0.0, None) if np.all(values >= 0) else full


def disc_stencil_measure(grid: Grid, radius: float) -> float:
    """Measure of the discretized Euclidean disc used by :func:`ball_integrals` in the plane."""
    big = max(grid.shape) * 4
    return float(_disc_stencil(grid.h, float(radius), big, big).sum() * grid.h**2)


# --- serialization -----------------------------------------------------------


def save(f: GridFunction, path: Union[str, Path]) -> None:
    """Write a text array file whose first line is a JSON header with n, box and level."""
    header = json.dumps(f.grid.to_dict(), sort_keys=True)
    np.savetxt(path, np.real(f.values).reshape(-1), header=header, comments="# ", fmt="%.17g")


def load(path: Union[str, Path]) -> GridFunction:
    with open(path) as fh:
        header = json.loads(fh.readline()[2:])
    grid = make_grid(header["n"], header["box"], header["level"])
    values = np.loadtxt(path, ndmin=1).reshape(grid.shape)
    return GridFunction(grid, values)


def to_csv(f: GridFunction, path: Union[str, Path]) -> None:
    coords = [c.reshape(-1) for c in f.grid.mesh()]
    cols = coords + [np.real(f.values).reshape(-1)]
    names = [f"x{i + 1}" for i in range(f.grid.n)] + ["value"]
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(names), comments="", fmt="%.17g")
