"""Quadrature rules on the unit sphere S^{n-1}, n = 1, 2, 3.

All rules are closed under x -> -x with equal weights, so reflecting a
body permutes the summands and leaves every spherical sum unchanged.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    n: int
    nodes: np.ndarray  # (N, n) unit vectors
    weights: np.ndarray  # (N,)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, self.n)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if len(w) != len(nodes) or np.any(w <= 0):
            raise ValueError("need one positive weight per node")
        nodes.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_antipode", None)

    def __len__(self):
        return len(self.weights)

    @property
    def antipode(self):
        """Index array a with nodes[a[i]] == -nodes[i]."""
        if self._antipode is None:
            object.__setattr__(self, "_antipode", _antipodal_index(self.nodes))
        return self._antipode

    def integrate(self, values):
        """sum_i w_i values_i in a fixed (pairwise) order."""
        return float(np.sum(self.weights * np.asarray(values, dtype=float)))


def _antipodal_index(nodes):
    from scipy.spatial import cKDTree

    tree = cKDTree(nodes)
    dist, idx = tree.query(-nodes)
    if np.max(dist) > 1e-9:
        raise ValueError("quadrature is not antipodally closed")
    return idx


def surface_area(n):
    """Surface measure of S^{n-1} (2 for the two points of S^0)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_quadrature(n, count=256) -> SphereQuadrature:
    """Default rule with roughly ``count`` nodes.

    n=1: the two points +-1 (count ignored).  n=2: ``count`` (rounded up to
    even) equally spaced angles.  n=3: Gauss-Legendre in cos(theta) times
    an even number of uniform azimuths, about ``count`` nodes in total.
    """
    if n == 1:
        return SphereQuadrature(1, np.array([[1.0], [-1.0]]), np.ones(2))
    if n == 2:
        m = int(count) + int(count) % 2
        if m < 2:
            raise ValueError("need at least 2 circle nodes")
        ang = 2.0 * math.pi * np.arange(m) / m
        nodes = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return SphereQuadrature(2, nodes, np.full(m, 2.0 * math.pi / m))
    if n == 3:
        n_theta = max(2, int(round(math.sqrt(count / 2.0))))
        return product_quadrature(n_theta, 2 * n_theta)
    raise ValueError("only n = 1, 2, 3 are supported")


def product_quadrature(n_theta, n_phi) -> SphereQuadrature:
    """Gauss-Legendre (cos theta) x uniform azimuth rule on S^2."""
    if n_phi % 2:
        raise ValueError("azimuth count must be even for antipodal closure")
    z, wz = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    rr = np.sqrt(1.0 - zz ** 2)
    nodes = np.stack([rr * np.cos(pp), rr * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    w = np.repeat(wz, n_phi) * (2.0 * math.pi / n_phi)
    return SphereQuadrature(3, nodes, w)
