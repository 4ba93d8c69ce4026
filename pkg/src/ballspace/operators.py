"""Hardy-Littlewood maximal operator, truncated Riesz transforms, Bessel potentials."""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

from .grid import GridError, GridFunction, ball_integrals, ball_measure, disc_stencil_measure

NORMALIZATIONS = ("measure", "radius")
MAX_ITERATES = 64


def radius_ladder(grid) -> np.ndarray:
    """Geometric radii h/2 * 2^m, stopping at the first radius covering the box."""
    radii = [grid.h / 2]
    while radii[-1] < grid.diameter:
        radii.append(radii[-1] * 2)
    return np.array(radii)


def _denominator(grid, r: float, normalization: str, metric: str) -> float:
    if normalization == "radius":
        return r**grid.n
    if normalization != "measure":
        raise ValueError(f"unknown normalization {normalization!r}")
    if grid.n == 2 and metric == "l2":
        return disc_stencil_measure(grid, r)
    return ball_measure(grid.n, r, metric)


def maximal(
    f: GridFunction,
    normalization: str = "measure",
    metric: str = "l2",
    exhaustive: bool = False,
) -> GridFunction:
    """Centered maximal function sup_r (normalized integral of |f| over B(x,r) in the box).

    The default radius set is the dyadic ladder from :func:`radius_ladder`;
    the smallest radius h/2 is the single-cell candidate, so with ``measure``
    normalization the result dominates |f|.  ``exhaustive=True`` takes the
    supremum over every radius; in dimension 1 this is exact (the average is
    monotone between the radii where the ball boundary crosses a cell edge),
    in dimension 2 it scans all multiples of h/2.  ``normalization="radius"``
    divides by r^n instead of the ball measure (twice the average in 1D).
    """
    a = np.abs(f.values)
    grid = f.grid
    if exhaustive:
        if grid.n == 1:
            return GridFunction(grid, _maximal_exhaustive_1d(a, grid, normalization))
        radii = grid.h / 2 * np.arange(1, int(np.ceil(2 * grid.diameter / grid.h)) + 1)
    else:
        radii = radius_ladder(grid)
    out = np.zeros_like(a)
    for r in radii:
        avg = ball_integrals(a, grid, r, metric) / _denominator(grid, r, normalization, metric)
        np.maximum(out, avg, out=out)
    return GridFunction(grid, out)


def _maximal_exhaustive_1d(a: np.ndarray, grid, normalization: str) -> np.ndarray:
    e = grid.edges(0)
    c = grid.centers(0)
    F = np.concatenate([[0.0], np.cumsum(a) * grid.h])
    best = np.empty_like(a)
    for start in range(0, c.size, 256):
        cc = c[start : start + 256, None]
        radii = np.abs(cc - e[None, :])
        radii = np.where(radii > 0, radii, np.inf)
        cand = (np.interp(cc + radii, e, F) - np.interp(cc - radii, e, F)) / radii
        best[start : start + 256] = np.max(cand, axis=1)
    if normalization == "measure":
        best = best / 2
    limit = a if normalization == "measure" else 2 * a  # r -> 0 limit
    return np.maximum(best, limit)


def iterate_maximal(f: GridFunction, l: int, normalization: str = "measure", metric: str = "l2") -> GridFunction:
    if l < 0 or l > MAX_ITERATES:
        raise ValueError(f"iterate count {l} outside [0, {MAX_ITERATES}]")
    g = f.abs()
    for _ in range(l):
        g = maximal(g, normalization, metric)
    return g


def riesz_kernel(grid, axis: int, eps: float) -> np.ndarray:
    offsets = [grid.h * np.arange(-(m - 1), m) for m in grid.shape]
    mesh = np.meshgrid(*offsets, indexing="ij")
    dist = np.sqrt(sum(d**2 for d in mesh))
    with np.errstate(divide="ignore", invalid="ignore"):
        kern = np.where(dist > eps * (1 + 1e-12), mesh[axis] / dist ** (grid.n + 1), 0.0)
    return kern


def riesz(f: GridFunction, axis: int = 0, eps: float | None = None) -> GridFunction:
    """Truncated Riesz transform: sum over cells y with |x - y| > eps of K_j(x - y) f(y) h^n.

    In dimension 1 this is the unnormalized Hilbert transform with kernel 1/(x - y).
    """
    grid = f.grid
    eps = grid.h if eps is None else eps
    if eps < grid.h * (1 - 1e-12):
        raise GridError(f"truncation radius {eps} below the cell width {grid.h}")
    if not 0 <= axis < grid.n:
        raise ValueError(f"axis {axis} out of range for dimension {grid.n}")
    if f.is_zero():
        return f.with_values(np.zeros_like(f.values))
    kern = riesz_kernel(grid, axis, eps)
    out = fftconvolve(f.values, kern, mode="same") * grid.cell_volume
    return GridFunction(grid, out)


def bessel_potential(f: GridFunction, s: float, inverse: bool = False) -> GridFunction:
    """Apply (1 - Laplacian)^{s/2} (or its inverse) as a Fourier multiplier on the periodized box."""
    if s < 0:
        raise ValueError("s must be non-negative")
    grid = f.grid
    if s == 0:
        return f
    freqs = [2 * np.pi * np.fft.fftfreq(m, d=grid.h) for m in grid.shape]
    xi2 = sum(k**2 for k in np.meshgrid(*freqs, indexing="ij"))
    mult = (1.0 + xi2) ** (-s / 2 if inverse else s / 2)
    out = np.fft.ifftn(np.fft.fftn(f.values) * mult)
    if not np.iscomplexobj(f.values):
        out = out.real
    return GridFunction(grid, out)


def bessel_domination_constant(f: GridFunction, s: float, normalization: str = "measure") -> float:
    """Smallest c with |(1 - Laplacian)^{-s/2} f| <= c M f on the grid."""
    smoothed = np.abs(bessel_potential(f, s, inverse=True).values)
    mf = maximal(f, normalization).values
    mask = mf > 0
    if not np.any(mask):
        return 0.0
    return float(np.max(smoothed[mask] / mf[mask]))
