"""Star bodies about the origin and the dual Brunn-Minkowski toolkit.

A body is described by its radial function rho(xi) on unit vectors; the
gauge is ``|x| / rho(x/|x|)``.  Spherical integrals go through a
:class:`~fracgeo.sphere.SphereQuadrature`.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from .sphere import SphereQuadrature, unit_ball_volume

BODY_MAGIC = "FRACGEO-BODY v1"


class BodyFormatError(ValueError):
    pass


class StarBody:
    """Base class.  Subclasses implement :meth:`radial` on unit vectors."""

    n = None

    def radial(self, xi):
        raise NotImplementedError

    def gauge(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 1
        pts = np.atleast_2d(x)
        r = np.linalg.norm(pts, axis=1)
        out = np.zeros(len(pts))
        nz = r > 0
        if np.any(nz):
            out[nz] = r[nz] / self.radial(pts[nz] / r[nz, None])
        return float(out[0]) if scalar else out

    def radial_on(self, quad: SphereQuadrature):
        return self.radial(quad.nodes)

    def is_symmetric(self):
        return False


def _rows(xi):
    return np.atleast_2d(np.asarray(xi, dtype=float))


@dataclass(frozen=True, eq=False)
class Ball(StarBody):
    radius: float = 1.0
    n: int = None

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError("ball radius must be positive")

    def radial(self, xi):
        return np.full(len(_rows(xi)), float(self.radius))

    def gauge(self, x):
        x = np.asarray(x, dtype=float)
        g = np.linalg.norm(np.atleast_2d(x), axis=1) / self.radius
        return float(g[0]) if x.ndim == 1 else g

    def is_symmetric(self):
        return True

    def describe(self):
        return f"ball:{self.radius!r}"


@dataclass(frozen=True, eq=False)
class Ellipsoid(StarBody):
    """{x : |A x| <= 1}."""

    matrix: np.ndarray = None

    def __post_init__(self):
        a = np.atleast_2d(np.array(self.matrix, dtype=float))
        if a.shape[0] != a.shape[1] or abs(np.linalg.det(a)) < 1e-14:
            raise ValueError("ellipsoid matrix must be square and invertible")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def n(self):
        return self.matrix.shape[0]

    def radial(self, xi):
        return 1.0 / np.linalg.norm(_rows(xi) @ self.matrix.T, axis=1)

    def gauge(self, x):
        x = np.asarray(x, dtype=float)
        g = np.linalg.norm(np.atleast_2d(x) @ self.matrix.T, axis=1)
        return float(g[0]) if x.ndim == 1 else g

    def is_symmetric(self):
        return True

    @classmethod
    def from_semiaxes(cls, semiaxes):
        return cls(np.diag(1.0 / np.asarray(semiaxes, dtype=float)))

    def describe(self):
        if np.allclose(self.matrix, np.diag(np.diag(self.matrix))):
            return "ellipsoid:" + ",".join(repr(float(v)) for v in np.diag(self.matrix))
        return "ellipsoid_matrix:" + ",".join(repr(float(v)) for v in self.matrix.ravel())


@dataclass(frozen=True, eq=False)
class LqBall(StarBody):
    """{x : |x|_q <= radius}; q < 1 gives a non-convex star body."""

    q: float = 2.0
    radius: float = 1.0
    n: int = None

    def __post_init__(self):
        if not (self.q > 0 and self.radius > 0):
            raise ValueError("LqBall needs q > 0 and radius > 0")

    def gauge(self, x):
        x = np.asarray(x, dtype=float)
        pts = np.abs(np.atleast_2d(x))
        if math.isinf(self.q):
            g = pts.max(axis=1)
        else:
            scale = pts.max(axis=1, keepdims=True)
            scale[scale == 0] = 1.0
            g = scale[:, 0] * np.sum((pts / scale) ** self.q, axis=1) ** (1.0 / self.q)
        g = g / self.radius
        return float(g[0]) if x.ndim == 1 else g

    def radial(self, xi):
        return 1.0 / self.gauge(_rows(xi))

    def is_symmetric(self):
        return True

    def describe(self):
        return f"lq:{self.q!r},{self.radius!r}"


@dataclass(frozen=True, eq=False)
class LinearImage(StarBody):
    """M K = {M x : x in K}; gauge(x) = gauge_K(M^{-1} x)."""

    matrix: np.ndarray = None
    inner: StarBody = None

    def __post_init__(self):
        a = np.atleast_2d(np.array(self.matrix, dtype=float))
        if a.shape[0] != a.shape[1] or abs(np.linalg.det(a)) < 1e-14:
            raise ValueError("linear image needs an invertible square matrix")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "_inv", np.linalg.inv(a))

    @property
    def n(self):
        return self.matrix.shape[0]

    def gauge(self, x):
        x = np.asarray(x, dtype=float)
        return self.inner.gauge(x @ self._inv.T)

    def radial(self, xi):
        return 1.0 / self.gauge(_rows(xi))

    def is_symmetric(self):
        return self.inner.is_symmetric()


@dataclass(frozen=True, eq=False)
class Sampled(StarBody):
    """Radial values at the nodes of a quadrature, interpolated in between.

    n=2 interpolates linearly in the angle; n=3 uses barycentric weights on
    the triangles of the convex hull of the nodes.  Both reproduce the
    stored values at the nodes.
    """

    quad: SphereQuadrature = None
    rho: np.ndarray = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        r = np.array(self.rho, dtype=float).reshape(-1)
        if len(r) != len(self.quad):
            raise ValueError("need one radial value per quadrature node")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ValueError("radial values must be positive and finite")
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)

    @property
    def n(self):
        return self.quad.n

    def radial_on(self, quad):
        if quad is self.quad or (len(quad) == len(self.quad)
                                 and np.array_equal(quad.nodes, self.quad.nodes)):
            return self.rho.copy()
        return self.radial(quad.nodes)

    def radial(self, xi):
        xi = _rows(xi)
        if self.n == 1:
            return np.where(xi[:, 0] > 0, self._rho_1d(1.0), self._rho_1d(-1.0))
        if self.n == 2:
            return self._radial_2d(xi)
        return self._radial_3d(xi)

    def _rho_1d(self, sign):
        k = int(np.argmax(self.quad.nodes[:, 0] * sign))
        return self.rho[k]

    def _radial_2d(self, xi):
        if "ang" not in self._cache:
            ang = np.mod(np.arctan2(self.quad.nodes[:, 1], self.quad.nodes[:, 0]), 2 * np.pi)
            order = np.argsort(ang)
            a = ang[order]
            r = self.rho[order]
            self._cache["ang"] = (np.concatenate([a, [a[0] + 2 * np.pi]]),
                                  np.concatenate([r, [r[0]]]))
        a, r = self._cache["ang"]
        t = np.mod(np.arctan2(xi[:, 1], xi[:, 0]), 2 * np.pi)
        t = np.where(t < a[0], t + 2 * np.pi, t)
        return np.interp(t, a, r)

    def _radial_3d(self, xi):
        if "hull" not in self._cache:
            from scipy.spatial import ConvexHull

            hull = ConvexHull(self.quad.nodes)
            self._cache["hull"] = hull
        hull = self._cache["hull"]
        normals = hull.equations[:, :3]
        offsets = -hull.equations[:, 3]
        # a ray from the origin leaves the hull through the face maximizing n.x / d;
        # product rules have coplanar triangle pairs, so among ties take the
        # triangle that actually contains the ray (all barycentric weights >= 0)
        score = (xi @ normals.T) / offsets
        best = score.max(axis=1, keepdims=True)
        out = np.empty(len(xi))
        for i in range(len(xi)):
            lam = None
            for fidx in np.flatnonzero(score[i] >= best[i] - 1e-12):
                cand = np.linalg.solve(self.quad.nodes[hull.simplices[fidx]].T, xi[i])
                if lam is None or cand.min() > lam.min():
                    lam, tri = cand, hull.simplices[fidx]
            lam = np.clip(lam, 0.0, None)
            lam /= lam.sum()
            out[i] = lam @ self.rho[tri]
        return out

    def lipschitz_ratio(self):
        """Largest |rho_i - rho_j| / |xi_i - xi_j| over neighbouring nodes."""
        nodes = self.quad.nodes
        if self.n == 1:
            return abs(self.rho[0] - self.rho[1]) / 2.0
        if self.n == 2:
            self._radial_2d(nodes[:1])
            a, r = self._cache["ang"]
            pts = np.stack([np.cos(a), np.sin(a)], axis=1)
            d = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            return float(np.max(np.abs(np.diff(r)) / d))
        self._radial_3d(nodes[:1])
        hull = self._cache["hull"]
        best = 0.0
        for tri in hull.simplices:
            for i, j in ((0, 1), (1, 2), (0, 2)):
                a, b = tri[i], tri[j]
                best = max(best, abs(self.rho[a] - self.rho[b])
                           / np.linalg.norm(nodes[a] - nodes[b]))
        return best


# ---------------------------------------------------------------- operations

def gauge(K: StarBody, x):
    return K.gauge(x)


def radial(K: StarBody, xi):
    return K.radial(xi)


def volume(K: StarBody, quad: SphereQuadrature) -> float:
    """(1/n) sum_i w_i rho(xi_i)^n."""
    return quad.integrate(K.radial_on(quad) ** quad.n) / quad.n


def schwarz_symmetral(K: StarBody, quad: SphereQuadrature) -> Ball:
    r = (volume(K, quad) / unit_ball_volume(quad.n)) ** (1.0 / quad.n)
    return Ball(r, quad.n)


def sampled(K: StarBody, quad: SphereQuadrature) -> Sampled:
    return Sampled(quad, K.radial_on(quad))


def q_radial_sum(K: StarBody, L: StarBody, q, quad: SphereQuadrature) -> Sampled:
    """rho^q = rho_K^q + rho_L^q at every node."""
    if q == 0:
        raise ValueError("q must be non-zero")
    rk = K.radial_on(quad)
    rl = L.radial_on(quad)
    return Sampled(quad, (rk ** q + rl ** q) ** (1.0 / q))


def dual_mixed_volume(K: StarBody, L: StarBody, alpha, quad: SphereQuadrature) -> float:
    """(1/n) sum_i w_i rho_K^{n-alpha} rho_L^alpha."""
    n = quad.n
    if alpha == 0 or alpha == n:
        raise ValueError("alpha must differ from 0 and n")
    rk = K.radial_on(quad)
    rl = L.radial_on(quad)
    return quad.integrate(rk ** (n - alpha) * rl ** alpha) / n


def dual_mixed_volume_bound(K, L, alpha, quad) -> float:
    """|K|^{(n-alpha)/n} |L|^{alpha/n}, the comparison value for dual_mixed_volume."""
    n = quad.n
    return volume(K, quad) ** ((n - alpha) / n) * volume(L, quad) ** (alpha / n)


def moment_body_norm(K: StarBody, v, p, quad: SphereQuadrature) -> float:
    """((n+p)/2 * integral over K of |v.x|^p dx)^{1/p}."""
    if p < 1:
        raise ValueError("p must be >= 1")
    n = quad.n
    v = np.asarray(v, dtype=float).reshape(n)
    rho = K.radial_on(quad)
    integral = quad.integrate(np.abs(quad.nodes @ v) ** p * rho ** (n + p)) / (n + p)
    return (0.5 * (n + p) * integral) ** (1.0 / p)


def dilate(K: StarBody, c) -> StarBody:
    """c K, kept in the same representation where possible."""
    if c <= 0:
        raise ValueError("dilation factor must be positive")
    if isinstance(K, Ball):
        return Ball(K.radius * c, K.n)
    if isinstance(K, Sampled):
        return Sampled(K.quad, c * K.rho)
    if isinstance(K, Ellipsoid):
        return Ellipsoid(K.matrix / c)
    return LinearImage(c * np.eye(K.n), K)


def reflect(K: StarBody) -> StarBody:
    """-K.  Sampled bodies stay sampled (values permuted on the antipodal nodes)."""
    if K.is_symmetric():
        return K
    if isinstance(K, Sampled):
        return Sampled(K.quad, K.rho[K.quad.antipode])
    return LinearImage(-np.eye(K.n), K)


def random_star_body(quad: SphereQuadrature, seed, degree=4, amplitude=0.45) -> Sampled:
    """rho = exp(P(xi)) with P a random polynomial of the given degree.

    The coefficients are rescaled so that sum |c| = amplitude < 0.5, which
    bounds |P| on the sphere and keeps rho within [e^-0.5, e^0.5].
    """
    if not 0 < amplitude < 0.5:
        raise ValueError("amplitude must lie in (0, 0.5)")
    rng = np.random.default_rng(seed)
    n = quad.n
    xi = quad.nodes
    terms = []
    for deg in range(1, degree + 1):
        for combo in combinations_with_replacement(range(n), deg):
            terms.append(np.prod(xi[:, list(combo)], axis=1))
    basis = np.stack(terms, axis=1)
    c = rng.normal(size=basis.shape[1])
    c *= amplitude / np.sum(np.abs(c))
    scale = math.exp(rng.uniform(-0.3, 0.3))
    return Sampled(quad, scale * np.exp(basis @ c))


# ---------------------------------------------------------------- I/O

def write_body(path, K: StarBody, quad: SphereQuadrature, extra=None):
    """Write rho sampled at the quadrature nodes (analytic bodies are sampled)."""
    rho = K.radial_on(quad)
    lines = [BODY_MAGIC, f"n={quad.n}", f"nodes={len(quad)}"]
    for key, val in (extra or {}).items():
        lines.append(f"{key}={val}")
    for xi, w, r in zip(quad.nodes, quad.weights, rho):
        lines.append(" ".join(f"{v:.17g}" for v in (*xi, r, w)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_body(text):
    """Return (Sampled body, header dict) from FRACGEO-BODY v1 text.

    Rows are ``xi_1 .. xi_n rho [weight]``; without weights the rows must
    match a default quadrature of the same size.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != BODY_MAGIC:
        raise BodyFormatError(f"missing '{BODY_MAGIC}' header")
    lines = lines[1:]
    header = {}
    while lines and "=" in lines[0]:
        k, _, v = lines.pop(0).partition("=")
        header[k.strip()] = v.strip()
    try:
        n = int(header["n"])
        count = int(header["nodes"])
        rows = np.array([[float(t) for t in ln.split()] for ln in lines])
    except (KeyError, ValueError) as exc:
        raise BodyFormatError(f"bad body file: {exc}") from None
    if rows.shape[0] != count or rows.shape[1] not in (n + 1, n + 2):
        raise BodyFormatError(f"expected {count} rows of {n + 1} or {n + 2} numbers")
    nodes = rows[:, :n]
    if rows.shape[1] == n + 2:
        weights = rows[:, n + 1]
    else:
        from .sphere import sphere_quadrature

        ref = sphere_quadrature(n, count)
        if len(ref) != count or not np.allclose(ref.nodes, nodes, atol=1e-9):
            raise BodyFormatError("rows without weights must follow the default node layout")
        weights = ref.weights
    try:
        quad = SphereQuadrature(n, nodes, weights)
        body = Sampled(quad, rows[:, n])
    except ValueError as exc:
        raise BodyFormatError(str(exc)) from None
    return body, header


def read_body(path):
    return parse_body(Path(path).read_text(encoding="utf-8"))


def parse_body_arg(arg, n=None) -> StarBody:
    """Parse short forms such as ``ball:2``, ``ellipsoid:0.5,2``, ``lq:4,1``
    or a path to a body file."""
    kind, _, rest = arg.partition(":")
    kind = kind.strip().lower()
    try:
        nums = [float(t) for t in rest.split(",") if t.strip()]
    except ValueError:
        raise ValueError(f"bad numbers in body argument {arg!r}") from None
    if kind == "ball":
        return Ball(nums[0] if nums else 1.0, n)
    if kind == "ellipsoid":
        if n is not None and len(nums) != n:
            raise ValueError(f"ellipsoid needs {n} diagonal entries")
        return Ellipsoid(np.diag(nums))
    if kind == "semiaxes":
        return Ellipsoid.from_semiaxes(nums)
    if kind == "ellipsoid_matrix":
        d = int(round(math.sqrt(len(nums))))
        return Ellipsoid(np.array(nums).reshape(d, d))
    if kind == "lq":
        q = nums[0]
        return LqBall(q, nums[1] if len(nums) > 1 else 1.0, n)
    if Path(arg).exists():
        return read_body(arg)[0]
    raise ValueError(f"unrecognised body {arg!r}")
