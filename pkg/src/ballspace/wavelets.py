"""Compactly supported orthonormal wavelets: cascade sampling, coefficients, square functions, partial sums.

Coefficients are computed with the orthogonal filter-bank pyramid on l2(Z)
(zero extension, no periodization).  The finest-level scaling coefficients are
initialised from the cell values (``init="samples"``: s_{L,k} = h^{n/2} f_k,
exact for Haar) or by integrating phi against the cells
(``init="projection"``).  Level-j coefficient k belongs to the generator
supported on 2^-j (k + [0, 2N-1]^n).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .grid import Grid, GridFunction

SQ2 = math.sqrt(2.0)

FILTERS = {
    1: np.array([1 / SQ2, 1 / SQ2]),
    2: np.array([0.48296291314453416, 0.8365163037378079, 0.2241438680420134, -0.1294095225512604]),
    3: np.array(
        [0.33267055295008285, 0.8068915093110931, 0.45987750211849154,
         -0.13501102001025506, -0.08544127388202688, 0.035226291885709554]
    ),
    4: np.array(
        [0.2303778133088961, 0.7148465705529146, 0.6308807679298587, -0.02798376941685878,
         -0.18703481171909234, 0.03084138183556067, 0.032883011666885106, -0.010597401785068999]
    ),
}

# Hölder exponents of the scaling functions, metadata only
SMOOTHNESS = {1: 0.0, 2: 0.55, 3: 1.08, 4: 1.62}


class WaveletError(ValueError):
    pass


class CascadeError(RuntimeError):
    pass


def qmf_defect(h: np.ndarray) -> float:
    """Largest violation of sum h = sqrt 2 and sum_k h_k h_{k+2m} = delta_m."""
    worst = abs(h.sum() - SQ2)
    for m in range(0, len(h) // 2):
        c = float(np.dot(h[: len(h) - 2 * m], h[2 * m :]))
        worst = max(worst, abs(c - (1.0 if m == 0 else 0.0)))
    return worst


for _N, _h in FILTERS.items():
    if qmf_defect(_h) > 1e-12:
        raise WaveletError(f"filter taps for N={_N} fail the quadrature-mirror identities")


def highpass(h: np.ndarray) -> np.ndarray:
    """g_k = (-1)^k h_{2N-1-k}."""
    return np.array([(-1) ** k * h[len(h) - 1 - k] for k in range(len(h))])


def parse_family(family) -> int:
    """'haar' -> 1, 'db2'/'daubechies(2)'/2 -> 2, etc."""
    if isinstance(family, (int, np.integer)):
        N = int(family)
    else:
        s = str(family).strip().lower().replace(" ", "")
        if s in ("haar", "db1"):
            N = 1
        elif s.startswith("db"):
            N = int(s[2:])
        elif s.startswith("daubechies(") and s.endswith(")"):
            N = int(s[len("daubechies(") : -1])
        else:
            raise WaveletError(f"unknown wavelet family {family!r}")
    if N not in FILTERS:
        raise WaveletError(f"Daubechies order {N} not available (have {sorted(FILTERS)})")
    return N


@lru_cache(maxsize=16)
def cascade(N: int, level: int) -> tuple[np.ndarray, np.ndarray]:
    """phi and psi sampled at x = i 2^-level on [0, 2N-1].

    phi at the integers is the eigenvector for eigenvalue 1 of the refinement
    matrix sqrt2 h_{2k-m}, normalised to sum 1; each further dyadic level is
    filled in exactly from the refinement equation.
    """
    h = FILTERS[N]
    L = 2 * N - 1
    if N == 1:
        phi0 = np.array([1.0, 0.0])
    else:
        A = np.array([[SQ2 * h[2 * k - m] if 0 <= 2 * k - m < len(h) else 0.0 for m in range(L + 1)] for k in range(L + 1)])
        vals, vecs = np.linalg.eig(A)
        i = int(np.argmin(np.abs(vals - 1)))
        if abs(vals[i] - 1) > 1e-8:
            raise CascadeError("refinement matrix has no eigenvalue 1")
        phi0 = np.real(vecs[:, i])
        phi0 = phi0 / phi0.sum()
    phi = phi0
    for c in range(1, level + 1):
        half = 2 ** (c - 1)
        idx = np.arange(L * 2**c + 1)
        new = np.zeros(idx.size)
        for j, hj in enumerate(h):
            src = idx - j * half
            ok = (src >= 0) & (src < phi.size)
            # 2x - j at x = i 2^-c is index i - j 2^(c-1) on the previous level
            new[ok] += SQ2 * hj * phi[src[ok]]
        phi = new
    g = highpass(h)
    n = 2**level
    idx = np.arange(L * n + 1)
    psi = np.zeros(idx.size)
    for j, gj in enumerate(g):
        src = 2 * idx - j * n
        ok = (src >= 0) & (src < phi.size)
        psi[ok] += SQ2 * gj * phi[src[ok]]
    phi.setflags(write=False)
    psi.setflags(write=False)
    return phi, psi


def refinement_residual(N: int, level: int) -> float:
    phi, _ = cascade(N, level)
    h = FILTERS[N]
    n = 2**level
    idx = np.arange(phi.size)
    rhs = np.zeros(phi.size)
    for j, hj in enumerate(h):
        src = 2 * idx - j * n
        ok = (src >= 0) & (src < phi.size)
        rhs[ok] += SQ2 * hj * phi[src[ok]]
    return float(np.max(np.abs(rhs - phi)))


@dataclass(frozen=True)
class WaveletSystem:
    N: int
    n: int = 1
    J: int = 0
    cascade_level: int = 12

    def __post_init__(self):
        if self.n not in (1, 2):
            raise WaveletError("dimension must be 1 or 2")
        if self.N not in FILTERS:
            raise WaveletError(f"no filter for N={self.N}")

    @property
    def family(self) -> str:
        return "haar" if self.N == 1 else f"db{self.N}"

    @property
    def h(self) -> np.ndarray:
        return FILTERS[self.N]

    @property
    def g(self) -> np.ndarray:
        return highpass(self.h)

    @property
    def K(self) -> float:
        return SMOOTHNESS[self.N]

    @property
    def support(self) -> tuple[float, float]:
        return (0.0, float(2 * self.N - 1))

    @property
    def generators(self) -> int:
        return 2**self.n - 1

    @property
    def baseline(self) -> bool:
        return self.N == 1

    def samples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x, phi(x), psi(x)) at the cascade resolution."""
        phi, psi = cascade(self.N, self.cascade_level)
        x = np.arange(phi.size) * 2.0**-self.cascade_level
        return x, phi, psi

    def cell_integrals(self) -> np.ndarray:
        """c_i = integral of phi over [i, i+1], i = 0..2N-2 (trapezoid on the cascade samples)."""
        _, phi, _ = self.samples()
        m = 2**self.cascade_level
        out = []
        for i in range(2 * self.N - 1):
            seg = phi[i * m : (i + 1) * m + 1]
            out.append((seg.sum() - 0.5 * (seg[0] + seg[-1])) / m)
        c = np.array(out)
        if self.N == 1:
            c = np.array([1.0])
        return c

    def describe(self) -> dict:
        return {
            "family": self.family,
            "N": self.N,
            "n": self.n,
            "J": self.J,
            "cascade_level": self.cascade_level,
            "K": self.K,
            "support": list(self.support),
            "baseline": self.baseline,
            # enlarged cubes Q*_{j,k} = 2^-j (k + [0, 2N-1]^n), recorded only
            "enlarged_cube_side": 2 * self.N - 1,
        }


def build_system(family="haar", n: int = 1, J: int = 0, cascade_level: int = 12, max_residual: float = 1e-6) -> WaveletSystem:
    N = parse_family(family)
    system = WaveletSystem(N, n, J, cascade_level)
    if refinement_residual(N, cascade_level) > max_residual:
        raise CascadeError("cascade samples do not satisfy the refinement equation")
    return system


# --- filter bank ---------------------------------------------------------------


def _analysis(s: np.ndarray, off: int, filt: np.ndarray, axis: int) -> tuple[np.ndarray, int]:
    """out[k] = sum_m filt[m - 2k] s[m] along one axis; ``off`` is the index of s[0]."""
    s = np.moveaxis(s, axis, 0)
    n, L = s.shape[0], len(filt)
    k_lo = -((L - 1 - off) // 2)
    k_hi = (off + n - 1) // 2
    ks = np.arange(k_lo, k_hi + 1)
    out = np.zeros((ks.size,) + s.shape[1:])
    for i, c in enumerate(filt):
        m = 2 * ks + i - off
        ok = (m >= 0) & (m < n)
        out[ok] += c * s[m[ok]]
    return np.moveaxis(out, 0, axis), int(k_lo)


def _synthesis(s: np.ndarray, off: int, filt: np.ndarray, axis: int, t_off: int, t_n: int) -> np.ndarray:
    """out[m] = sum_k filt[m - 2k] s[k] for m in [t_off, t_off + t_n)."""
    s = np.moveaxis(s, axis, 0)
    out = np.zeros((t_n,) + s.shape[1:])
    ks = off + np.arange(s.shape[0])
    for i, c in enumerate(filt):
        m = 2 * ks + i - t_off
        ok = (m >= 0) & (m < t_n)
        np.add.at(out, m[ok], c * s[ok])
    return np.moveaxis(out, 0, axis)


@dataclass
class Block:
    offset: tuple
    values: np.ndarray

    def get(self, k) -> float:
        idx = tuple(int(ki) - o for ki, o in zip(k, self.offset))
        if all(0 <= i < s for i, s in zip(idx, self.values.shape)):
            return float(self.values[idx])
        return 0.0


@dataclass
class WaveletCoefficients:
    system: WaveletSystem
    grid: Grid
    J: int
    j_max: int
    scaling: Block
    details: dict  # (l, j) -> Block
    layout: dict  # j -> (offset, shape) of the level-j scaling index range, J <= j <= L

    def sum_squares(self) -> float:
        return float(np.sum(self.scaling.values**2) + sum(np.sum(b.values**2) for b in self.details.values()))

    def coefficient(self, l: int, j: int, k) -> float:
        k = (k,) if np.isscalar(k) else tuple(k)
        if l == 0:
            return self.scaling.get(k) if j == self.J else 0.0
        b = self.details.get((l, j))
        return b.get(k) if b is not None else 0.0

    def nonzero(self, atol: float = 0.0):
        """Yield (l, j, k, value) for stored entries with |value| > atol, in (l, j, k) order."""
        items = [((0, self.J), self.scaling)] + sorted(self.details.items())
        for (l, j), b in items:
            for idx in zip(*np.nonzero(np.abs(b.values) > atol)):
                k = tuple(int(i) + o for i, o in zip(idx, b.offset))
                yield l, j, k, float(b.values[idx])

    def to_csv(self, path, atol: float = 0.0) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["l", "j", "k", "value"])
            for l, j, k, v in self.nonzero(atol):
                w.writerow([l, j, " ".join(map(str, k)), repr(v)])

    def zeros_like(self) -> "WaveletCoefficients":
        return replace(
            self,
            scaling=Block(self.scaling.offset, np.zeros_like(self.scaling.values)),
            details={key: Block(b.offset, np.zeros_like(b.values)) for key, b in self.details.items()},
        )

    def with_entry(self, l: int, j: int, k, value: float = 1.0) -> "WaveletCoefficients":
        out = self.zeros_like()
        k = (k,) if np.isscalar(k) else tuple(k)
        b = out.scaling if l == 0 else out.details[(l, j)]
        if l == 0 and j != self.J:
            raise WaveletError("scaling coefficients live on the base level only")
        idx = tuple(int(ki) - o for ki, o in zip(k, b.offset))
        b.values[idx] = value
        return out


def _fine_index_origin(grid: Grid) -> tuple:
    return tuple(int(round(a / grid.h)) for a, _ in grid.box)


def analyze(f: GridFunction, system: WaveletSystem, j_max: int | None = None, init: str = "samples", margin: int = 1) -> WaveletCoefficients:
    """Scaling coefficients at level J and detail coefficients for J <= j <= j_max."""
    grid = f.grid
    if grid.n != system.n:
        raise WaveletError("system and grid dimensions differ")
    L = grid.level
    J = system.J
    if j_max is None:
        j_max = L - margin
    if j_max > L - margin:
        raise WaveletError(f"j_max={j_max} too deep for grid level {L} (margin {margin})")
    if J > j_max:
        raise WaveletError(f"base level J={J} exceeds j_max={j_max}")
    vals = np.asarray(f.values, dtype=float)
    scale = grid.h ** (grid.n / 2)
    offs = list(_fine_index_origin(grid))
    if init == "samples":
        s = vals * scale
    elif init == "projection":
        c = system.cell_integrals()
        s = vals * scale
        for ax in range(grid.n):
            # s_k = sum_m f_m c_{m-k}: correlation, supports k in [m - (2N-2), m]
            s, offs[ax] = _correlate(s, offs[ax], c, ax)
    else:
        raise WaveletError(f"unknown init {init!r}")
    h, g = system.h, system.g
    layout = {L: (tuple(offs), s.shape)}
    details = {}
    for j in range(L - 1, J - 1, -1):
        bands = {(): (s, tuple(offs))}
        for ax in range(grid.n):
            nxt = {}
            for key, (arr, o) in bands.items():
                lo, ko = _analysis(arr, o[ax], h, ax)
                hi, _ = _analysis(arr, o[ax], g, ax)
                o2 = list(o)
                o2[ax] = ko
                nxt[key + (0,)] = (lo, tuple(o2))
                nxt[key + (1,)] = (hi, tuple(o2))
            bands = nxt
        s, offs = bands[(0,) * grid.n][0], list(bands[(0,) * grid.n][1])
        layout[j] = (tuple(offs), s.shape)
        if j <= j_max:
            for key, (arr, o) in bands.items():
                if any(key):
                    details[(_generator_index(key), j)] = Block(o, arr)
    return WaveletCoefficients(system, grid, J, j_max, Block(tuple(offs), s), details, layout)


def _generator_index(key: tuple) -> int:
    """Band key (per-axis 0=phi, 1=psi) -> generator l: 1D psi -> 1; 2D phi(x)psi -> 1, psi(x)phi -> 2, psi(x)psi -> 3."""
    if len(key) == 1:
        return 1
    return {(0, 1): 1, (1, 0): 2, (1, 1): 3}[key]


def _band_key(l: int, n: int) -> tuple:
    if n == 1:
        return (1,)
    return {1: (0, 1), 2: (1, 0), 3: (1, 1)}[l]


def _correlate(s: np.ndarray, off: int, c: np.ndarray, axis: int) -> tuple[np.ndarray, int]:
    s = np.moveaxis(s, axis, 0)
    n, m = s.shape[0], len(c)
    out = np.zeros((n + m - 1,) + s.shape[1:])
    for i, ci in enumerate(c):
        # out index t corresponds to k = off - (m-1) + t; contribution from s[k + i - off]
        out[m - 1 - i : m - 1 - i + n] += ci * s
    return np.moveaxis(out, 0, axis), off - (m - 1)


def partial_sum(coeffs: WaveletCoefficients, j_cut: int | None = None) -> GridFunction:
    """Synthesis from the scaling layer and detail layers J <= j <= j_cut, read back on the grid cells.

    Cell values are the level-L scaling sequence divided by h^{n/2}, the
    inverse of the sample initialisation.
    """
    grid, system = coeffs.grid, coeffs.system
    j_cut = coeffs.j_max if j_cut is None else j_cut
    if j_cut > coeffs.j_max:
        raise WaveletError("j_cut exceeds the analysed range")
    h, g = system.h, system.g
    s, offs = coeffs.scaling.values, coeffs.scaling.offset
    L = grid.level
    for j in range(coeffs.J, L):
        t_off, t_shape = coeffs.layout[j + 1]
        bands = {(0,) * grid.n: (s, offs)}
        for l in range(1, system.generators + 1):
            b = coeffs.details.get((l, j))
            if b is not None and j <= j_cut:
                bands[_band_key(l, grid.n)] = (b.values, b.offset)
        # undo the per-axis split, last axis first
        for ax in range(grid.n - 1, -1, -1):
            merged = {}
            for key, (arr, o) in bands.items():
                parent = key[:ax]
                filt = h if key[ax] == 0 else g
                up = _synthesis(arr, o[ax], filt, ax, t_off[ax], t_shape[ax])
                o2 = list(o)
                o2[ax] = t_off[ax]
                if parent in merged:
                    merged[parent] = (merged[parent][0] + up, tuple(o2))
                else:
                    merged[parent] = (up, tuple(o2))
            bands = merged
        s, offs = bands[()]
    return GridFunction(grid, s / grid.h ** (grid.n / 2))


def _cell_index(grid: Grid, j: int, axis: int) -> np.ndarray:
    """floor(2^j x) at the cell centres along one axis."""
    return np.floor(grid.centers(axis) * 2.0**j).astype(int)


def _layer(block: Block, grid: Grid, j: int) -> np.ndarray:
    """Cellwise |coefficient| of the cube Q_{j,k} containing each cell."""
    idx = []
    masks = []
    for ax in range(grid.n):
        k = _cell_index(grid, j, ax) - block.offset[ax]
        masks.append((k >= 0) & (k < block.values.shape[ax]))
        idx.append(np.clip(k, 0, block.values.shape[ax] - 1))
    if grid.n == 1:
        return np.where(masks[0], np.abs(block.values[idx[0]]), 0.0)
    vals = np.abs(block.values[np.ix_(idx[0], idx[1])])
    return vals * np.outer(masks[0], masks[1])


def square_function_V(coeffs: WaveletCoefficients) -> GridFunction:
    grid = coeffs.grid
    J = coeffs.J
    return GridFunction(grid, 2.0 ** (J * grid.n / 2) * _layer(coeffs.scaling, grid, J))


def square_function_W(coeffs: WaveletCoefficients, s: float = 0.0) -> GridFunction:
    if s < 0:
        raise WaveletError("s must be non-negative")
    grid = coeffs.grid
    acc = np.zeros(grid.shape)
    for (l, j), b in sorted(coeffs.details.items()):
        acc += (2.0 ** (j * s) * 2.0 ** (j * grid.n / 2) * _layer(b, grid, j)) ** 2
    return GridFunction(grid, np.sqrt(acc))


def basis_function(system: WaveletSystem, grid: Grid, l: int, j: int, k, j_max: int | None = None) -> GridFunction:
    """The grid representation of phi_{J,k} (l = 0) or psi^l_{j,k}: synthesis of a single unit coefficient."""
    zero = analyze(GridFunction(grid, np.zeros(grid.shape)), system, j_max)
    return partial_sum(zero.with_entry(l, j, k, 1.0))


def sampled_generator(system: WaveletSystem, grid: Grid, l: int, j: int, k) -> GridFunction:
    """phi_{j,k} (l = 0) or psi_{j,k} (l = 1) from the cascade samples, evaluated at the cell centres (n = 1)."""
    if grid.n != 1:
        raise WaveletError("sampled_generator is one-dimensional")
    x, phi, psi = system.samples()
    y = 2.0**j * grid.centers(0) - k
    base = phi if l == 0 else psi
    vals = np.interp(y, x, base, left=0.0, right=0.0)
    return GridFunction(grid, 2.0 ** (j / 2) * vals)
