"""Continuous model of the shift integral g(z) = int phi(f(x + z), h(x)) dx.

In cell units u = z / spacing, g is known exactly at lattice offsets k
(the correlation S(k) of the sampled values).  Far from the origin
(|u|_inf >= N0) g is the multilinear interpolation of S.  Near the origin g
behaves like S0 + c(u/|u|) |u|^beta (beta = 2 for smooth data, 1 for
jumps), and plain interpolation of such a power is poor, so there

    g(u) = S0 + |u|^beta * interp_k[(S(k) - S0) / |k|^beta](v),

with v = u for |u|_inf >= 1 and v = u / |u|_inf inside the unit cube, where
the formula continues g as a pure power law along each ray.  beta is fitted
from abs-mode correlations one and two cells along the axes; it depends
only on (f, h), never on the mode, so g_abs = g_plus + g_minus holds
exactly and every quantity stays linear in S.
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .correlation import pair_correlation, single_offset, support_offsets, _support
from .grid import GridFunction, common_grid
from .kernel import near_radius


@dataclass(eq=False)
class ShiftModel:
    n: int
    spacing: float
    mode: str
    p: float
    S: np.ndarray  # correlations over the box [klo, khi]
    klo: np.ndarray
    khi: np.ndarray
    tail: float  # value of g once supports are disjoint
    origin: float  # S(0)
    beta: float
    slo: np.ndarray  # offsets where S may differ from the tail
    shi: np.ndarray
    near: int = 1  # half-width of the near field
    empty: bool = False

    def lattice(self, k):
        """S at integer offsets (rows of k), tail outside the box."""
        k = np.atleast_2d(np.asarray(k, dtype=np.int64))
        inr = np.all((k >= self.klo) & (k <= self.khi), axis=1)
        out = np.full(len(k), self.tail)
        if np.any(inr):
            out[inr] = self.S[tuple((k[inr] - self.klo).T)]
        return out

    def normalised(self, k):
        """(S(k) - S0) / |k|^beta, zero at k = 0."""
        k = np.atleast_2d(np.asarray(k, dtype=np.int64))
        r = np.linalg.norm(k, axis=1)
        out = np.zeros(len(k))
        nz = r > 0
        out[nz] = (self.lattice(k[nz]) - self.origin) / r[nz] ** self.beta
        return out

    def tent(self, u, values=None):
        """Multilinear interpolation of lattice values at points u (cell units)."""
        values = values or self.lattice
        u = np.atleast_2d(np.asarray(u, dtype=float))
        base = np.floor(u)
        frac = u - base
        snap = frac > 1.0 - 1e-12
        base[snap] += 1.0
        frac[snap] = 0.0
        base = base.astype(np.int64)
        acc = np.zeros(len(u))
        for c in product((0, 1), repeat=self.n):
            c = np.array(c)
            w = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=1)
            nz = w > 0
            if np.any(nz):
                acc[nz] += w[nz] * values(base[nz] + c)
        return acc

    def __call__(self, u):
        """g at shifts u (cell units): the value of the shift integral."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.empty(len(u))
        sup = np.max(np.abs(u), axis=1)
        far = sup >= self.near
        if np.any(far):
            out[far] = self.tent(u[far])
        if np.any(~far):
            out[~far] = self.near_field(u[~far])
        return out

    def near_field(self, u):
        """The power-law branch, continued to any u (the model uses it for
        |u|_inf < near)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        sup = np.max(np.abs(u), axis=1)
        res = np.full(len(u), self.origin)
        nz = sup > 0
        if np.any(nz):
            v = u[nz] / np.minimum(sup[nz], 1.0)[:, None]
            r = np.linalg.norm(u[nz], axis=1)
            res[nz] = self.origin + r ** self.beta * self.tent(v, self.normalised)
        return res

    def exit_radius(self, xi):
        """Distance (cell units) along unit vectors xi after which g == tail."""
        xi = np.atleast_2d(xi)
        lo = self.slo - 1
        hi = self.shi + 1
        with np.errstate(divide="ignore", invalid="ignore"):
            b = np.where(xi > 0, hi / xi, np.where(xi < 0, lo / xi, np.inf))
        return np.maximum(np.min(b, axis=1), 1.0)


def fit_beta(fv, hv, p, cell_volume, origin_abs=None):
    """Local power of the abs-mode correlation near zero shift.

    Exponents from offsets (1, 2) and (2, 4) along each axis are combined
    as b12 + (b12 - b24) / 3, which removes the leading |k|^2 correction of
    a smooth correlation and leaves exact power laws untouched.
    """
    n = fv.ndim
    s0 = single_offset(fv, hv, "abs", p, cell_volume, np.zeros(n, dtype=np.int64)) \
        if origin_abs is None else origin_abs
    logs = []
    for ax in range(n):
        for sign in (1, -1):
            e = np.zeros(n, dtype=np.int64)
            e[ax] = sign
            d = [single_offset(fv, hv, "abs", p, cell_volume, j * e) - s0 for j in (1, 2, 4)]
            scale = max(abs(s0), max(d), 1e-300)
            if min(d) > 1e-13 * scale:
                b12 = math.log2(d[1] / d[0])
                b24 = math.log2(d[2] / d[1])
                logs.append(b12 + (b12 - b24) / 3.0)
    if not logs:
        return float(p)
    beta = float(np.mean(logs))
    return min(max(beta, 1e-3), float(p))


def build_shift_model(f: GridFunction, h: GridFunction, mode, p, min_box=1) -> ShiftModel:
    """Correlations of (f, h) on a box covering all overlapping offsets and
    the near field (at least [-min_box, min_box]^n)."""
    f, h = common_grid(f, h)
    n = f.n
    N0 = near_radius(n, min_box)
    dv = f.cell_volume
    fb = _support(f.values)
    hb = _support(h.values)
    if fb is None and hb is None:
        z = np.zeros(n, dtype=np.int64)
        return ShiftModel(n, f.spacing, mode, p, np.zeros((1,) * n), z, z, 0.0, 0.0,
                          float(p), z, z, N0, empty=True)
    # with one support empty, g is the constant tail everywhere
    fb = fb or (np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))
    hb = hb or (np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))
    slo, shi = support_offsets(fb, hb)
    klo = np.minimum(slo, -N0)
    khi = np.maximum(shi, N0)
    S, tail = pair_correlation(f.values, h.values, mode, p, dv, klo, khi)
    zero = tuple(-klo)
    origin = float(S[zero])
    origin_abs = origin if mode == "abs" else None
    beta = fit_beta(f.values, h.values, p, dv, origin_abs)
    return ShiftModel(n, f.spacing, mode, float(p), S, klo, khi, tail, origin, beta, slo, shi, N0)
