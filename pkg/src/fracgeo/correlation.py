"""Pair correlations of two grid functions over lattice offsets.

For an offset k the correlation is

    S(k) = cell_volume * sum_i phi(f[i + k], h[i])

summed over the whole lattice, with phi one of |a-b|^p, (a-b)_+^p,
(a-b)_-^p or a*b.  Since phi(0, 0) = 0 the sum splits into a constant
tail T (the value once the supports no longer overlap) plus a correction
over the overlap, which keeps the cost proportional to the overlap.
Offsets with |k|_inf <= 2 are summed directly over the union of supports
so that S(0) is exactly 0 when f = h.

Every offset is summed sequentially in a fixed index order, so results do
not depend on threading.
"""

import numpy as np
from numba import njit

MODES = {"abs": 0, "plus": 1, "minus": 2, "product": 3}
DIRECT_RADIUS = 2


@njit(cache=True)
def _phi(a, b, mode, p):
    if mode == 3:
        return a * b
    if mode == 0:
        d = abs(a - b)
    elif mode == 1:
        d = a - b
        if d <= 0.0:
            return 0.0
    else:
        d = b - a
        if d <= 0.0:
            return 0.0
    if p == 2.0:
        return d * d
    if p == 1.0:
        return d
    return d ** p


@njit(cache=True)
def _direct(f, h, k0, k1, k2, flo, fhi, hlo, hhi, mode, p):
    # union of supp h and supp f - k
    lo0 = min(hlo[0], flo[0] - k0)
    hi0 = max(hhi[0], fhi[0] - k0)
    lo1 = min(hlo[1], flo[1] - k1)
    hi1 = max(hhi[1], fhi[1] - k1)
    lo2 = min(hlo[2], flo[2] - k2)
    hi2 = max(hhi[2], fhi[2] - k2)
    m0, m1, m2 = f.shape
    acc = 0.0
    for i0 in range(lo0, hi0 + 1):
        for i1 in range(lo1, hi1 + 1):
            for i2 in range(lo2, hi2 + 1):
                a = 0.0
                j0 = i0 + k0
                j1 = i1 + k1
                j2 = i2 + k2
                if 0 <= j0 < m0 and 0 <= j1 < m1 and 0 <= j2 < m2:
                    a = f[j0, j1, j2]
                b = 0.0
                if 0 <= i0 < m0 and 0 <= i1 < m1 and 0 <= i2 < m2:
                    b = h[i0, i1, i2]
                if a != 0.0 or b != 0.0:
                    acc += _phi(a, b, mode, p)
    return acc


@njit(cache=True)
def _overlap(f, h, k0, k1, k2, flo, fhi, hlo, hhi, mode, p):
    lo0 = max(hlo[0], flo[0] - k0)
    hi0 = min(hhi[0], fhi[0] - k0)
    lo1 = max(hlo[1], flo[1] - k1)
    hi1 = min(hhi[1], fhi[1] - k1)
    lo2 = max(hlo[2], flo[2] - k2)
    hi2 = min(hhi[2], fhi[2] - k2)
    acc = 0.0
    for i0 in range(lo0, hi0 + 1):
        for i1 in range(lo1, hi1 + 1):
            for i2 in range(lo2, hi2 + 1):
                a = f[i0 + k0, i1 + k1, i2 + k2]
                b = h[i0, i1, i2]
                if a != 0.0 and b != 0.0:
                    acc += _phi(a, b, mode, p) - _phi(a, 0.0, mode, p) - _phi(0.0, b, mode, p)
    return acc


@njit(cache=True)
def _correlate(f, h, klo, khi, flo, fhi, hlo, hhi, mode, p, tail, out):
    for k0 in range(klo[0], khi[0] + 1):
        for k1 in range(klo[1], khi[1] + 1):
            for k2 in range(klo[2], khi[2] + 1):
                r = max(abs(k0), max(abs(k1), abs(k2)))
                if r <= 2:
                    v = _direct(f, h, k0, k1, k2, flo, fhi, hlo, hhi, mode, p)
                else:
                    v = tail + _overlap(f, h, k0, k1, k2, flo, fhi, hlo, hhi, mode, p)
                if v < 0.0:
                    v = 0.0
                out[k0 - klo[0], k1 - klo[1], k2 - klo[2]] = v


def _pad3(a):
    return a.reshape(a.shape + (1,) * (3 - a.ndim))


def _box3(box, n):
    lo = np.zeros(3, dtype=np.int64)
    hi = np.zeros(3, dtype=np.int64)
    lo[:n] = box[0]
    hi[:n] = box[1]
    return lo, hi


def tail_constant(fv, hv, mode, p, cell_volume):
    """Value of S(k) once the shifted supports are disjoint."""
    fp = float(np.sum(fv.ravel() ** p)) * cell_volume
    hp = float(np.sum(hv.ravel() ** p)) * cell_volume
    return {"abs": fp + hp, "plus": fp, "minus": hp, "product": 0.0}[mode]


def support_offsets(fbox, hbox):
    """Offsets k for which supp f - k meets supp h: (lo, hi) inclusive."""
    return fbox[0] - hbox[1], fbox[1] - hbox[0]


def pair_correlation(fv, hv, mode, p, cell_volume, klo, khi):
    """S(k) for all k in the integer box [klo, khi] (arrays of length n).

    ``fv`` and ``hv`` are value arrays on the same lattice.  Returns an
    array of shape ``khi - klo + 1`` indexed by ``k - klo``.
    """
    n = fv.ndim
    code = MODES[mode]
    klo = np.asarray(klo, dtype=np.int64)
    khi = np.asarray(khi, dtype=np.int64)
    shape = tuple(int(v) for v in khi - klo + 1)
    fbox = _support(fv)
    hbox = _support(hv)
    if fbox is None and hbox is None:
        return np.zeros(shape), 0.0
    # an empty support is represented by an empty index range
    if fbox is None:
        fbox = (np.zeros(n, dtype=np.int64), -np.ones(n, dtype=np.int64))
    if hbox is None:
        hbox = (np.zeros(n, dtype=np.int64), -np.ones(n, dtype=np.int64))
    tail = tail_constant(fv, hv, mode, p, 1.0)
    f3 = np.ascontiguousarray(_pad3(fv), dtype=float)
    h3 = np.ascontiguousarray(_pad3(hv), dtype=float)
    flo, fhi = _box3(fbox, n)
    hlo, hhi = _box3(hbox, n)
    k3lo, k3hi = _box3((klo, khi), n)
    out = np.zeros(tuple(int(v) for v in k3hi - k3lo + 1))
    _correlate(f3, h3, k3lo, k3hi, flo, fhi, hlo, hhi, code, float(p), tail, out)
    return out.reshape(shape) * cell_volume, tail * cell_volume


def _support(v):
    nz = np.nonzero(v)
    if len(nz[0]) == 0:
        return None
    return (np.array([a.min() for a in nz], dtype=np.int64),
            np.array([a.max() for a in nz], dtype=np.int64))


def single_offset(fv, hv, mode, p, cell_volume, k):
    """S(k) for one offset, summed directly."""
    n = fv.ndim
    fbox = _support(fv)
    hbox = _support(hv)
    if fbox is None and hbox is None:
        return 0.0
    if fbox is None:
        fbox = (np.zeros(n, dtype=np.int64), -np.ones(n, dtype=np.int64))
    if hbox is None:
        hbox = (np.zeros(n, dtype=np.int64), -np.ones(n, dtype=np.int64))
    f3 = np.ascontiguousarray(_pad3(fv), dtype=float)
    h3 = np.ascontiguousarray(_pad3(hv), dtype=float)
    flo, fhi = _box3(fbox, n)
    hlo, hhi = _box3(hbox, n)
    kk = np.zeros(3, dtype=np.int64)
    kk[:n] = k
    v = _direct(f3, h3, kk[0], kk[1], kk[2], flo, fhi, hlo, hhi, MODES[mode], float(p))
    return max(v, 0.0) * cell_volume
