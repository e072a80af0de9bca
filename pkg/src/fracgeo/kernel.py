"""Integration weights of the singular kernel against the shift model.

Work in cell units u = z / spacing with radial profile

    omega(s) = min(s^{-n-ps}, c^{-n-ps}),  s = |u|_K,

(c = 0 for the untruncated kernel).  With the shift model of
:mod:`fracgeo.shiftmodel` the seminorm becomes the linear functional

    spacing^{-ps} * ( sum_{near k} (S(k) - S0) V(k) + S0 W0
                      + sum_{far k} S(k) W(k) + T W_tail ).

Near weights V carry the |u|^beta normalisation of the near field; far
weights are plain tent integrals.  Unit cells are integrated with tensor
Gauss-Legendre rules, the clamped region by walking rays in polar
coordinates, the unit cube analytically per direction, and everything
beyond the correlation box by the closed-form radial tail.
"""

import math
from collections import OrderedDict
from itertools import product

import numpy as np
from numba import njit

from .sphere import SphereQuadrature, product_quadrature

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)
_DIRS = {}


def weight_directions(n) -> SphereQuadrature:
    """Dense direction set used only for kernel weights."""
    if n not in _DIRS:
        if n == 1:
            q = SphereQuadrature(1, np.array([[1.0], [-1.0]]), np.ones(2))
        elif n == 2:
            m = 2048
            ang = 2.0 * math.pi * (np.arange(m) + 0.5) / m
            q = SphereQuadrature(2, np.stack([np.cos(ang), np.sin(ang)], 1),
                                 np.full(m, 2.0 * math.pi / m))
        else:
            q = product_quadrature(64, 128)
        _DIRS[n] = q
    return _DIRS[n]


def radial_moment(e, x, y):
    """Integral of r^e over [x, y]."""
    if y <= x:
        return 0.0
    if abs(e + 1.0) < 1e-12:
        return math.log(y / x)
    return (y ** (e + 1.0) - x ** (e + 1.0)) / (e + 1.0)


def clamp_box(K, n, clamp):
    """Half-width (whole cells) of a box holding the clamped region."""
    if not clamp:
        return 1
    rho_max = float(np.max(K.radial(weight_directions(n).nodes)))
    return max(2, int(math.ceil(clamp * rho_max * (1.0 + 1e-9))))


def near_radius(n, B=1):
    """Half-width of the near field, where the |u|^beta normalisation applies."""
    return max(B, {1: 16, 2: 8, 3: 6}[n])


def _exit(xi, lo, hi):
    """Distance along unit vectors xi to the boundary of the box [lo, hi]."""
    with np.errstate(divide="ignore"):
        b = np.where(xi > 0, hi / xi, np.where(xi < 0, lo / xi, np.inf))
    return np.min(b, axis=1)


# ---------------------------------------------------------------- ray walk

@njit(cache=True)
def _ray_walk(dirs, wdir, rho, n, B, clamp, a, beta, glx, glw, klo, W):
    """Polar integration of omega |u|^beta tent over [-B, B]^n minus the unit cube."""
    brk = np.empty(3 * (2 * B + 3) + 4)
    for d in range(dirs.shape[0]):
        xi = dirs[d]
        mx = 0.0
        for ax in range(n):
            mx = max(mx, abs(xi[ax]))
        r0 = 1.0 / mx
        r1 = B / mx
        nb = 0
        brk[nb] = r0
        nb += 1
        brk[nb] = r1
        nb += 1
        for ax in range(n):
            if xi[ax] != 0.0:
                for mm in range(-B, B + 1):
                    r = mm / xi[ax]
                    if r0 < r < r1:
                        brk[nb] = r
                        nb += 1
        rc = clamp * rho[d]
        if r0 < rc < r1:
            brk[nb] = rc
            nb += 1
        pts = np.sort(brk[:nb])
        rho_a = rho[d] ** a
        ca = clamp ** (-a) if clamp > 0.0 else 0.0
        j = np.zeros(3, dtype=np.int64)
        idx = np.zeros(3, dtype=np.int64)
        for s in range(nb - 1):
            lo = pts[s]
            hi = pts[s + 1]
            if hi - lo < 1e-14:
                continue
            mid = 0.5 * (lo + hi)
            for ax in range(n):
                j[ax] = int(math.floor(mid * xi[ax]))
            half = 0.5 * (hi - lo)
            for q in range(glx.shape[0]):
                r = mid + half * glx[q]
                if r < rc:
                    om = ca
                else:
                    om = rho_a * r ** (-a)
                wt = wdir[d] * glw[q] * half * r ** (n - 1 + beta) * om
                for corner in range(1 << n):
                    tent = 1.0
                    for ax in range(n):
                        kk = j[ax] + ((corner >> ax) & 1)
                        tent *= 1.0 - abs(r * xi[ax] - kk)
                        idx[ax] = kk - klo[ax]
                    W[idx[0], idx[1], idx[2]] += wt * tent


# ---------------------------------------------------------------- cell rules

def _cell_rule(q, n):
    x, w = np.polynomial.legendre.leggauss(q)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    X = np.stack(np.meshgrid(*([x] * n), indexing="ij"), -1).reshape(-1, n)
    Wq = np.prod(np.stack(np.meshgrid(*([w] * n), indexing="ij"), -1).reshape(-1, n), 1)
    return X, Wq


def _integrate_cells(K, n, a, J, klo, khi, W, beta=0.0, clamp=0.0):
    """Add int_cell omega |u|^beta tent_k over cells [j, j+1]^n to W[k - klo];
    returns the part landing on corners outside [klo, khi]."""
    outside = 0.0
    if len(J) == 0:
        return outside
    centre = np.linalg.norm(J + 0.5, axis=1)
    corners = np.array(list(product((0, 1), repeat=n)))
    qnear = 8 if n < 3 else 6
    for q, sel in ((qnear, centre <= 4.5), (4, (centre > 4.5) & (centre <= 12.5)),
                   (2, centre > 12.5)):
        if not np.any(sel):
            continue
        X, Wq = _cell_rule(q, n)
        tents = np.stack([np.prod(np.where(c == 1, X, 1.0 - X), axis=1) for c in corners], 1)
        Jq = J[sel]
        for start in range(0, len(Jq), 20000):
            Jc = Jq[start:start + 20000]
            pts = (Jc[:, None, :] + X[None, :, :]).reshape(-1, n)
            s = np.asarray(K.gauge(pts)).reshape(len(Jc), len(X))
            om = s ** (-a)
            if clamp:
                om = np.minimum(om, clamp ** (-a))
            if beta:
                om = om * np.linalg.norm(pts, axis=1).reshape(om.shape) ** beta
            contrib = np.sum((om * Wq)[:, :, None] * tents[None, :, :], axis=1)
            for ci, c in enumerate(corners):
                k = Jc + c
                inr = np.all((k >= klo) & (k <= khi), axis=1)
                np.add.at(W, tuple((k[inr] - klo).T), contrib[inr, ci])
                outside += float(np.sum(contrib[~inr, ci]))
    return outside


def _cells_between(n, lo, hi, hole):
    """Cells [j, j+1]^n with j in [lo, hi - 1]^n not inside [-hole, hole]^n."""
    axes = [np.arange(lo[i], hi[i]) for i in range(n)]
    J = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, n)
    inside = np.all((J >= -hole) & (J <= hole - 1), axis=1)
    return J[~inside]


# ---------------------------------------------------------------- caches

class _LRU:
    def __init__(self, size):
        self.size = size
        self.data = OrderedDict()

    def get(self, K, key, build):
        key = (id(K),) + key
        hit = self.data.get(key)
        if hit is not None and hit[0] is K:
            self.data.move_to_end(key)
            return hit[1]
        val = build()
        self.data[key] = (K, val)
        if len(self.data) > self.size:
            self.data.popitem(last=False)
        return val


_FAR = _LRU(16)
_NEAR = _LRU(64)


# ---------------------------------------------------------------- far field

def far_weights(K, n, ps, klo, khi, N0):
    """(W over [klo, khi], tail weight) for cells outside [-N0, N0]^n."""
    klo = np.asarray(klo, dtype=np.int64)
    khi = np.asarray(khi, dtype=np.int64)
    key = (n, round(ps, 15), tuple(klo), tuple(khi), N0)
    return _FAR.get(K, key, lambda: _far_weights(K, n, ps, klo, khi, N0))


def _far_weights(K, n, ps, klo, khi, N0):
    if np.any(klo > -N0) or np.any(khi < N0):
        raise ValueError("correlation box must contain the near field")
    a = n + ps
    W = np.zeros(tuple(int(v) for v in khi - klo + 1))
    J = _cells_between(n, klo - 1, khi + 1, N0)
    tail = _integrate_cells(K, n, a, J, klo, khi, W)
    # beyond [klo-1, khi+1]^n the model equals the tail constant exactly
    dirs = weight_directions(n)
    rho = np.asarray(K.radial(dirs.nodes), dtype=float)
    r_out = _exit(dirs.nodes, klo - 1, khi + 1)
    tail += float(np.sum(dirs.weights * rho ** a * r_out ** (-ps))) / ps
    return W, tail


# ---------------------------------------------------------------- near field

def near_weights(K, n, ps, beta, N0, clamp=0.0):
    """(V over [-N0, N0]^n, W0).

    V[k] multiplies S(k) - S0 and already contains the 1/|k|^beta factor;
    W0 is the kernel mass of the near box and multiplies S0.  Entries are
    +inf for the untruncated kernel when beta <= ps.
    """
    key = (n, round(ps, 15), round(beta, 15), N0, clamp)
    return _NEAR.get(K, key, lambda: _near_weights(K, n, ps, beta, N0, clamp))


def _near_weights(K, n, ps, beta, N0, clamp):
    a = n + ps
    lo = -N0 * np.ones(n, dtype=np.int64)
    hi = N0 * np.ones(n, dtype=np.int64)
    V = np.zeros((2 * N0 + 1,) * n)
    B = clamp_box(K, n, clamp) if clamp else 1
    if B > N0:
        raise ValueError("near field must contain the clamp box")
    J = _cells_between(n, lo, hi, B)
    _integrate_cells(K, n, a, J, lo, hi, V, beta, clamp)

    dirs = weight_directions(n)
    rho = np.asarray(K.radial(dirs.nodes), dtype=float)
    xi = dirs.nodes
    if clamp:
        V3 = np.zeros(V.shape + (1,) * (3 - n))
        d3 = np.zeros((len(dirs), 3))
        d3[:, :n] = xi
        k3 = np.zeros(3, dtype=np.int64)
        k3[:n] = lo
        _ray_walk(d3, dirs.weights, rho, n, B, float(clamp), a, float(beta),
                  _GL8_X, _GL8_W, k3, V3)
        V += V3.reshape(V.shape)

    # unit cube: g = S0 + r^beta N(xi), N interpolated on the cube boundary
    rC = 1.0 / np.max(np.abs(xi), axis=1)
    rN = N0 * rC
    I = np.empty(len(xi))
    J0 = np.empty(len(xi))
    for d in range(len(xi)):
        ra = rho[d] ** a
        if clamp:
            ca = clamp ** (-a)
            x = min(clamp * rho[d], rC[d])
            I[d] = ca * x ** (n + beta) / (n + beta) + ra * radial_moment(beta - 1.0 - ps, x, rC[d])
            x = min(clamp * rho[d], rN[d])
            J0[d] = ca * x ** n / n + ra * radial_moment(-1.0 - ps, x, rN[d])
        else:
            I[d] = ra * rC[d] ** (beta - ps) / (beta - ps) if beta > ps else math.inf
            J0[d] = math.inf
    bpt = xi * rC[:, None]
    snap = np.abs(bpt - np.round(bpt)) < 1e-12
    bpt[snap] = np.round(bpt[snap])
    base = np.floor(bpt)
    frac = bpt - base
    for c in product((0, 1), repeat=n):
        c = np.array(c)
        tent = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=1)
        k = (base + c).astype(np.int64)
        use = tent > 0
        with np.errstate(invalid="ignore"):
            np.add.at(V, tuple((k[use] - lo).T), dirs.weights[use] * tent[use] * I[use])

    ks = np.stack(np.meshgrid(*([np.arange(-N0, N0 + 1)] * n), indexing="ij"), -1)
    norm = np.linalg.norm(ks, axis=-1)
    centre = (N0,) * n
    norm[centre] = 1.0
    V = V / norm ** beta
    V[centre] = 0.0
    W0 = float(np.sum(dirs.weights * J0)) if clamp else math.inf
    return V, W0
