"""Symmetric decreasing rearrangement on grids, and the Riesz functional.

Measures of super-level sets are cell counts, so the rearrangement is
exactly equimeasurable in the piecewise-constant model: the k-th largest
value goes to the k-th closest cell to the origin.
"""

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .grid import GridFunction, common_grid, embed, evaluate, tree_sum
from .sphere import unit_ball_volume


@dataclass(frozen=True)
class DistributionProfile:
    thresholds: np.ndarray  # increasing distinct positive values
    measures: np.ndarray  # |{f >= t}| at each threshold


def superlevel_measure(f: GridFunction, t) -> float:
    """Cell volume times the number of cells with value >= t."""
    if not t > 0:
        raise ValueError("threshold must be positive")
    return int(np.count_nonzero(f.values >= t)) * f.cell_volume


def distribution_profile(f: GridFunction) -> DistributionProfile:
    v = np.sort(f.values.ravel())
    ts = np.unique(v[v > 0])
    counts = len(v) - np.searchsorted(v, ts, side="left")
    return DistributionProfile(ts, counts * f.cell_volume)


def _cell_rank(m, n, L):
    d = 2.0 * L / m
    ax = -L + d * (np.arange(m) + 0.5)
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    r2 = sum(g.ravel() ** 2 for g in grids)
    # lexsort: last key is primary; flat index breaks ties lexicographically
    return np.lexsort((np.arange(m ** n), r2))


def rearrange(f: GridFunction) -> GridFunction:
    """Radially non-increasing function with the same distribution as f.

    The box is enlarged by whole cells when the ball carrying the support
    would not fit inside it.
    """
    nnz = int(np.count_nonzero(f.values))
    if nnz:
        radius = (nnz * f.cell_volume / unit_ball_volume(f.n)) ** (1.0 / f.n)
        need = radius + np.sqrt(f.n) * f.spacing
        if need > f.L:
            k = int(np.ceil((need - f.L) / f.spacing))
            f = embed(f, f.L + k * f.spacing)
    order = _cell_rank(f.m, f.n, f.L)
    vals = np.sort(f.values.ravel(), kind="stable")[::-1]
    out = np.empty(f.m ** f.n)
    out[order] = vals
    return f.with_values(out.reshape(f.values.shape), rearranged=True)


def cell_shell_tolerance(f: GridFunction) -> float:
    """Volume of a shell one cell diagonal thick around the support ball."""
    nnz = int(np.count_nonzero(f.values))
    wn = unit_ball_volume(f.n)
    r = (nnz * f.cell_volume / wn) ** (1.0 / f.n)
    dr = np.sqrt(f.n) * f.spacing
    return wn * ((r + dr) ** f.n - max(r - dr, 0.0) ** f.n)


def correlation(f: GridFunction, g: GridFunction):
    """C[j] = sum_y f(y + j) g(y) over lattice offsets j (index j + m - 1)."""
    flip = g.values[(slice(None, None, -1),) * g.n]
    c = signal.fftconvolve(f.values, flip, mode="full")
    return np.maximum(c, 0.0)


def riesz_functional(f: GridFunction, k: GridFunction, g: GridFunction) -> float:
    """cell_volume^2 * sum_{x,y} f(x) k(x - y) g(y), k interpolated."""
    f, g = common_grid(f, g)
    if not (np.any(f.values) and np.any(g.values) and np.any(k.values)):
        return 0.0
    corr = correlation(f, g)
    m = f.m
    offs = (np.arange(2 * m - 1) - (m - 1)) * f.spacing
    grids = np.meshgrid(*([offs] * f.n), indexing="ij")
    pts = np.stack(grids, axis=-1).reshape(-1, f.n)
    kv = evaluate(k, pts).reshape(corr.shape)
    return tree_sum(corr * kv) * f.cell_volume ** 2
