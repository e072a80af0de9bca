"""Non-negative functions sampled at cell centers of a uniform box grid.

A :class:`GridFunction` lives on ``[-L, L]^n`` split into ``m`` cells per
axis, values stored at cell centers in row-major order (last axis
fastest).  Outside the box the function is identically zero.
"""

from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

GRID_MAGIC = "FRACGEO-GRID v1"

# snap interpolation coordinates this close to a node onto the node
_SNAP = 1e-9


class GridSizeError(ValueError):
    """An affine image does not fit into the permitted box."""


class GridFormatError(ValueError):
    """Malformed FRACGEO-GRID file."""


def tree_sum(a):
    """Deterministic pairwise sum of all entries (numpy's contiguous reduction)."""
    return float(np.sum(np.ascontiguousarray(a, dtype=float).ravel()))


@dataclass(frozen=True, eq=False)
class GridFunction:
    n: int
    L: float
    m: int
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.m,) * self.n:
            raise ValueError(
                f"values shape {v.shape} does not match n={self.n}, m={self.m}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        if np.any(v < 0):
            raise ValueError("grid values must be non-negative")
        if not (self.L > 0 and self.m > 0):
            raise ValueError("L and m must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.m

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.n

    def axis_centers(self):
        return -self.L + self.spacing * (np.arange(self.m) + 0.5)

    def centers(self):
        """Cell centers as an array of shape (m,)*n + (n,)."""
        ax = self.axis_centers()
        grids = np.meshgrid(*([ax] * self.n), indexing="ij")
        return np.stack(grids, axis=-1)

    def with_values(self, values, **meta):
        return GridFunction(self.n, self.L, self.m, values, {**self.meta, **meta})

    def scaled(self, c):
        return self.with_values(c * self.values)

    def support_box(self):
        """Inclusive index bounds (lo, hi) of the non-zero cells, or None."""
        nz = np.nonzero(self.values > 0)
        if len(nz[0]) == 0:
            return None
        lo = np.array([a.min() for a in nz])
        hi = np.array([a.max() for a in nz])
        return lo, hi

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(f: GridFunction, x):
    """Multilinear interpolation of the cell-center values.

    Ghost cells of value zero sit one cell beyond the box, and the result is
    exactly zero wherever ``|x|_inf > L``.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    pts = x.reshape(-1, f.n)
    d = f.spacing
    padded = np.pad(f.values, 1)
    u = (pts + f.L) / d - 0.5 + 1.0
    i0 = np.floor(u)
    t = u - i0
    near_up = t > 1.0 - _SNAP
    i0[near_up] += 1.0
    t[near_up] = 0.0
    t[t < _SNAP] = 0.0
    i0 = i0.astype(np.int64)
    out = np.zeros(len(pts))
    inside = np.all(np.abs(pts) <= f.L, axis=1)
    if not np.any(inside):
        return out[0] if scalar else out.reshape(x.shape[:-1])
    i0 = i0[inside]
    t = t[inside]
    acc = np.zeros(len(i0))
    for corner in product((0, 1), repeat=f.n):
        c = np.array(corner)
        w = np.prod(np.where(c == 1, t, 1.0 - t), axis=1)
        idx = np.clip(i0 + c, 0, f.m + 1)
        acc += w * padded[tuple(idx.T)]
    out[inside] = acc
    if scalar:
        return float(out[0])
    return out.reshape(x.shape[:-1])


def lp_norm(f: GridFunction, p) -> float:
    """(sum of values^p times cell volume)^(1/p)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return (tree_sum(f.values ** p) * f.cell_volume) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> matrix @ x + shift."""

    matrix: np.ndarray
    shift: np.ndarray = None

    def __post_init__(self):
        a = np.atleast_2d(np.array(self.matrix, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise ValueError("affine matrix must be square")
        det = np.linalg.det(a)
        if not np.isfinite(det) or abs(det) < 1e-14:
            raise ValueError("affine matrix must be invertible")
        b = np.zeros(a.shape[0]) if self.shift is None else np.array(
            self.shift, dtype=float).reshape(a.shape[0])
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "shift", b)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def det(self):
        return float(np.linalg.det(self.matrix))

    @property
    def is_special(self):
        """True when |det| = 1 to 1e-12 (volume preserving)."""
        return abs(abs(self.det) - 1.0) <= 1e-12

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T + self.shift

    def inverse(self):
        ainv = np.linalg.inv(self.matrix)
        return AffineMap(ainv, -ainv @ self.shift)

    @classmethod
    def translation(cls, shift):
        shift = np.atleast_1d(np.asarray(shift, dtype=float))
        return cls(np.eye(len(shift)), shift)

    @classmethod
    def scaling(cls, n, c):
        return cls(c * np.eye(n))


DEFAULT_MAX_HALF_WIDTH = 1e3


def affine_image(f: GridFunction, amap: AffineMap,
                 max_half_width=DEFAULT_MAX_HALF_WIDTH) -> GridFunction:
    """Push f forward: result(x) = f(amap^{-1}(x)).

    The spacing is kept and the box grows by whole cells, so the output
    lattice contains the input lattice; whole-cell translations are exact.
    """
    if amap.n != f.n:
        raise ValueError("dimension mismatch between map and function")
    d = f.spacing
    box = f.support_box()
    need = f.L
    if box is not None:
        lo, hi = box
        ax = f.axis_centers()
        corners = np.array([[ax[lo[a]] - d / 2 if c == 0 else ax[hi[a]] + d / 2
                             for a, c in enumerate(cs)]
                            for cs in product((0, 1), repeat=f.n)])
        need = max(need, float(np.max(np.abs(amap(corners)))) + d)
    extra = int(np.ceil((need - f.L) / d - 1e-9))
    extra = max(extra, 0)
    L_out = f.L + extra * d
    if L_out > max_half_width:
        raise GridSizeError(
            f"image needs half-width {L_out:g} > allowed {max_half_width:g}")
    m_out = f.m + 2 * extra
    out = GridFunction(f.n, L_out, m_out, np.zeros((m_out,) * f.n), dict(f.meta))
    pts = out.centers().reshape(-1, f.n)
    vals = evaluate(f, amap.inverse()(pts)).reshape((m_out,) * f.n)
    return out.with_values(np.maximum(vals, 0.0))


def embed(f: GridFunction, L_new: float) -> GridFunction:
    """Zero-pad f into a larger box on the same lattice."""
    d = f.spacing
    extra = (L_new - f.L) / d
    k = int(round(extra))
    if k < 0 or abs(extra - k) > 1e-9:
        raise ValueError("new box must extend the lattice by whole cells")
    if k == 0:
        return f
    return GridFunction(f.n, f.L + k * d, f.m + 2 * k, np.pad(f.values, k), dict(f.meta))


def common_grid(f: GridFunction, h: GridFunction):
    """Return (f, h) on one grid: zero-padding when lattices agree, else h is resampled."""
    if f.n != h.n:
        raise ValueError("dimension mismatch")
    if f.L == h.L and f.m == h.m:
        return f, h
    if abs(f.spacing - h.spacing) <= 1e-12 * f.spacing:
        shift = (f.L - h.L) / f.spacing
        if abs(shift - round(shift)) <= 1e-9:
            L = max(f.L, h.L)
            return embed(f, L), embed(h, L)
    pts = f.centers().reshape(-1, f.n)
    vals = evaluate(h, pts).reshape(f.values.shape)
    return f, f.with_values(vals, resampled=True)


def coarsen(f: GridFunction) -> GridFunction:
    """Average 2^n blocks: same box, half the resolution."""
    if f.m % 2:
        raise ValueError("coarsening needs an even number of cells per axis")
    v = f.values
    for axis in range(f.n):
        v = 0.5 * (np.take(v, np.arange(0, v.shape[axis], 2), axis=axis)
                   + np.take(v, np.arange(1, v.shape[axis], 2), axis=axis))
    return GridFunction(f.n, f.L, f.m // 2, v, dict(f.meta))


def write_grid(path, f: GridFunction):
    lines = [GRID_MAGIC, f"n={f.n}", f"L={f.L!r}", f"m={f.m}"]
    flat = f.values.ravel()
    for start in range(0, len(flat), 8):
        lines.append(" ".join(f"{v:.17g}" for v in flat[start:start + 8]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_grid(path) -> GridFunction:
    text = Path(path).read_text(encoding="utf-8")
    return parse_grid(text)


def parse_grid(text) -> GridFunction:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if lines and lines[0] == GRID_MAGIC:
        lines = lines[1:]
    header = {}
    while lines and "=" in lines[0]:
        key, _, val = lines.pop(0).partition("=")
        header[key.strip()] = val.strip()
    try:
        n = int(header["n"])
        L = float(header["L"])
        m = int(header["m"])
    except (KeyError, ValueError) as exc:
        raise GridFormatError(f"bad or missing grid header: {exc}") from None
    try:
        vals = np.array(" ".join(lines).split(), dtype=float)
    except ValueError as exc:
        raise GridFormatError(f"non-numeric grid value: {exc}") from None
    if vals.size != m ** n:
        raise GridFormatError(f"expected {m ** n} values, found {vals.size}")
    try:
        return GridFunction(n, L, m, vals.reshape((m,) * n))
    except ValueError as exc:
        raise GridFormatError(str(exc)) from None
