"""Fractional L_p polar projection bodies of a pair (f, h).

In direction xi the body has gauge^{ps}

    G(xi) = int_0^inf t^{-ps-1} g(t xi) dt,
    g(z) = int phi(f(x + z), h(x)) dx,

with phi chosen by the mode (abs, plus, minus), so that its radial
function is rho(xi) = G(xi)^{-1/(ps)}.  g is read from the shift model
shared with the seminorm code; the t-integral uses log-spaced nodes (plus
the lattice crossings of the ray) with product integration, a power-law
head on (0, t_min] and the exact tail T * t_star^{-ps} / ps beyond the
last overlap t_star.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import GridFunction, common_grid, lp_norm
from .kernel import clamp_box, radial_moment
from .params import Params
from .shiftmodel import ShiftModel, build_shift_model
from .sphere import SphereQuadrature, unit_ball_volume
from .starbody import BODY_MAGIC, Sampled, parse_body

NODES_PER_DECADE = 64


@dataclass
class ShiftProfile:
    direction: np.ndarray
    t: np.ndarray
    g: np.ndarray
    f_norm_p: float  # ||f||_p^p
    h_norm_p: float
    t_star: float
    tail: float  # g for t >= t_star
    origin: float  # g(0)
    mode: str


def _unit(xi, n):
    xi = np.asarray(xi, dtype=float).reshape(n)
    nr = np.linalg.norm(xi)
    if nr == 0:
        raise ValueError("direction must be non-zero")
    return xi / nr


def _t_nodes(model: ShiftModel, xi, per_decade, extra=()):
    """Nodes on [spacing/2, t_star] for one direction (length units)."""
    c, c_star = _cell_nodes(model, xi, per_decade, extra)
    return model.spacing * c, model.spacing * c_star


def _cell_nodes(model: ShiftModel, xi, per_decade, extra=()):
    """The same nodes in cell units, so they do not depend on the spacing."""
    d = model.spacing
    c_star = float(model.exit_radius(xi[None, :])[0])
    decades = math.log10(c_star / 0.5)
    count = max(2, int(math.ceil(decades * per_decade)) + 1)
    nodes = [np.geomspace(0.5, c_star, count)]
    # lattice crossings and the near/far switch are kinks of the model
    for ax in range(model.n):
        if abs(xi[ax]) > 1e-14:
            mmax = int(math.floor(c_star * abs(xi[ax])))
            nodes.append(np.arange(1, mmax + 1) / abs(xi[ax]))
    nodes.append([model.near / np.max(np.abs(xi))])
    nodes.append([e / d for e in extra if e])
    c = np.unique(np.concatenate([np.atleast_1d(np.asarray(v, dtype=float)) for v in nodes]))
    return c[(c >= 0.5) & (c <= c_star)], c_star


def shift_profile(f: GridFunction, h: GridFunction, xi, mode="abs", t_nodes=None, p=2.0,
                  model: ShiftModel = None) -> ShiftProfile:
    """g(t xi) at the given nodes (default: the quadrature nodes of pi_gauge)."""
    if model is None:
        f, h = common_grid(f, h)
        model = build_shift_model(f, h, mode, p)
    n = model.n
    xi = _unit(xi, n)
    if t_nodes is None:
        t, t_star = _t_nodes(model, xi, NODES_PER_DECADE)
    else:
        t = np.asarray(t_nodes, dtype=float)
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValueError("t nodes must be non-negative and increasing")
        t_star = model.spacing * float(model.exit_radius(xi[None, :])[0])
    g = model(t[:, None] * xi[None, :] / model.spacing) if len(t) else np.zeros(0)
    fp = lp_norm(f, model.p) ** model.p if f is not None else math.nan
    hp = lp_norm(h, model.p) ** model.p if h is not None else math.nan
    return ShiftProfile(xi, t, g, fp, hp, t_star, model.tail, model.origin, model.mode)


def _weighted_linear(t0, t1, g0, g1, ps, n, tc):
    """int_{t0}^{t1} w(t) (linear interpolant of g) dt with
    w = t^{-ps-1} above tc and tc^{-n-ps} t^{n-1} below."""
    if t1 <= t0:
        return 0.0
    slope = (g1 - g0) / (t1 - t0)
    a0 = g0 - slope * t0
    total = 0.0
    if tc > t0:
        hi = min(tc, t1)
        ca = tc ** (-n - ps)
        total += ca * (a0 * radial_moment(n - 1.0, t0, hi) + slope * radial_moment(float(n), t0, hi))
        t0 = hi
    if t1 > t0:
        total += a0 * radial_moment(-ps - 1.0, t0, t1) + slope * radial_moment(-ps, t0, t1)
    return total


@dataclass
class GaugeResult:
    value: float  # G(xi), may be +inf
    head_exponent: float
    divergent: bool


def _gauge_from_nodes(t, g, t_star, model: ShiftModel, ps, tc, xi):
    n = model.n
    d = model.spacing
    # head: inside the unit cube the model is S0 + (g(t1) - S0) (t / t1)^beta
    t1, g1 = t[0], g[0]
    gamma = math.nan
    if len(t) > 1 and g[0] > 0 and g[1] > 0:
        gamma = math.log(g[1] / g[0]) / math.log(t[1] / t[0])
    elif g[0] == 0 and (len(t) < 2 or g[1] == 0):
        gamma = math.inf
    beta = model.beta
    s0 = model.origin
    if tc > 0:
        ca = tc ** (-n - ps)
        lo = min(tc, t1)
        mass = ca * lo ** n / n + radial_moment(-ps - 1.0, lo, t1)
        powm = ca * lo ** (n + beta) / (n + beta) + radial_moment(beta - ps - 1.0, lo, t1)
        head = s0 * mass + (g1 - s0) * t1 ** (-beta) * powm
        divergent = False
    else:
        divergent = s0 > 0 or not (gamma > ps)
        if divergent:
            return GaugeResult(math.inf, gamma, True)
        head = (g1 - s0) * t1 ** (-ps) / (beta - ps) if beta > ps else math.inf
        if math.isinf(head):
            return GaugeResult(math.inf, gamma, True)
    body = 0.0
    for i in range(len(t) - 1):
        body += _weighted_linear(t[i], t[i + 1], g[i], g[i + 1], ps, n, tc)
    tail = model.tail * (t_star ** (-ps) / ps if tc <= t_star
                         else tc ** (-ps) / ps + tc ** (-n - ps) * radial_moment(n - 1.0, t_star, tc))
    return GaugeResult(head + body + tail, gamma, False)


def pi_gauge(f, h, xi, params: Params, mode="abs", epsilon=None, K=None,
             per_decade=NODES_PER_DECADE, model=None) -> GaugeResult:
    """G(xi) = gauge^{ps} of the polar projection body in direction xi.

    With ``epsilon`` the t-weight is clamped below t_c = epsilon * rho_K(xi),
    matching the truncated seminorm with the same K.
    """
    if model is None:
        f, h = common_grid(f, h)
        model = build_shift_model(f, h, mode, params.p)
    xi = _unit(xi, model.n)
    tc = 0.0
    if epsilon:
        if K is None:
            raise ValueError("a clamped gauge needs the body K")
        tc = float(epsilon) * float(K.radial(xi[None, :])[0])
    # evaluate in cell units: a round trip through the spacing could move a
    # node across the near/far switch
    c, c_star = _cell_nodes(model, xi, per_decade, (tc,))
    g = model(c[:, None] * xi[None, :])
    # g jumps where the near field hands over to the far field; take both
    # one-sided values there so rounding cannot pick a side
    switch = model.near / np.max(np.abs(xi))
    k = np.flatnonzero(c == switch)
    if len(k):
        k = int(k[0])
        inner = model.near_field(switch * xi[None, :])
        outer = model.tent(switch * xi[None, :])
        c = np.insert(c, k, switch)
        g = np.concatenate([g[:k], inner, outer, g[k + 1:]])
    t, t_star = model.spacing * c, model.spacing * c_star
    return _gauge_from_nodes(t, g, t_star, model, params.ps, tc, xi)


@dataclass
class PolarProjectionBody:
    quad: SphereQuadrature
    gauge_ps: np.ndarray  # G at each node, +inf where divergent
    mode: str
    params: Params
    head_exponents: np.ndarray = None
    epsilon: float = None
    extras: dict = field(default_factory=dict)

    @property
    def degenerate(self):
        return bool(np.any(~np.isfinite(self.gauge_ps)) or np.any(self.gauge_ps <= 0))

    @property
    def radial_values(self):
        """rho = G^{-1/(ps)}; 0 in divergent directions."""
        G = self.gauge_ps
        with np.errstate(divide="ignore"):
            r = np.where(np.isfinite(G) & (G > 0), G ** (-1.0 / self.params.ps), 0.0)
        r = np.where(G <= 0, math.inf, r)
        return r

    def volume(self):
        if self.degenerate:
            return 0.0
        return self.quad.integrate(self.radial_values ** self.quad.n) / self.quad.n

    def as_star_body(self) -> Sampled:
        if self.degenerate:
            raise ValueError("degenerate projection body has no radial function")
        return Sampled(self.quad, self.radial_values)


def pi_body(f: GridFunction, h: GridFunction, params: Params, mode="abs",
            quad: SphereQuadrature = None, epsilon=None, K=None,
            per_decade=NODES_PER_DECADE, model: ShiftModel = None) -> PolarProjectionBody:
    """Gauges at every node of ``quad``; divergent nodes make the body degenerate.

    A prebuilt ``model`` (from :func:`build_shift_model` with the same mode
    and p) skips the correlation step; f and h are then ignored.
    """
    from .params import validate_params
    from .sphere import sphere_quadrature

    validate_params(params.n, params.s, params.p, need_projection_range=True)
    if model is None:
        f, h = common_grid(f, h)
        min_box = clamp_box(K, f.n, epsilon / f.spacing) if epsilon else 1
        model = build_shift_model(f, h, mode, params.p, min_box=min_box)
    quad = quad or sphere_quadrature(model.n)
    G = np.empty(len(quad))
    gam = np.empty(len(quad))
    if model.empty:
        G[:] = 0.0
        gam[:] = math.inf
    else:
        for i, xi in enumerate(quad.nodes):
            res = pi_gauge(None, None, xi, params, mode, epsilon, K, per_decade, model)
            G[i] = res.value
            gam[i] = res.head_exponent
    body = PolarProjectionBody(quad, G, mode, params, gam, epsilon)
    body.extras.update(beta=model.beta, origin=model.origin, tail=model.tail,
                       spacing=model.spacing)
    return body


def affine_energy(body: PolarProjectionBody) -> float:
    """n * omega_n^{(n+ps)/n} * |body|^{-ps/n}; +inf for a degenerate body."""
    n = body.quad.n
    ps = body.params.ps
    if body.degenerate:
        return math.inf
    vol = body.volume()
    return n * unit_ball_volume(n) ** ((n + ps) / n) * vol ** (-ps / n)


def volume_functional(body: PolarProjectionBody) -> float:
    """|body|^{-ps/n}, +inf when degenerate."""
    if body.degenerate:
        return math.inf
    return body.volume() ** (-body.params.ps / body.quad.n)


def seminorm_from_body(body: PolarProjectionBody, K) -> float:
    """n * dual mixed volume V_{-ps}(K, body) = sum_i w_i rho_K^{n+ps} G_i."""
    n = body.quad.n
    ps = body.params.ps
    if body.degenerate:
        return math.inf
    rho = K.radial_on(body.quad)
    return body.quad.integrate(rho ** (n + ps) * body.gauge_ps)


# ---------------------------------------------------------------- radial bound

def mass_radius(f: GridFunction, p, fraction=0.9):
    """Smallest r with int_{|x| <= r} f^p >= fraction * ||f||_p^p (cell centers)."""
    c = f.centers().reshape(-1, f.n)
    r = np.linalg.norm(c, axis=1)
    v = f.values.ravel() ** p
    order = np.argsort(r, kind="stable")
    cum = np.cumsum(v[order])
    if cum[-1] == 0:
        return 0.0
    i = int(np.searchsorted(cum, fraction * cum[-1]))
    return float(r[order][min(i, len(r) - 1)]) + 0.5 * math.sqrt(f.n) * f.spacing


def radial_bound(f: GridFunction, h: GridFunction, params: Params, mode="abs", r=None,
                 fraction=0.9):
    """Upper bound for the radial function of the projection body.

    For t > 2r the set rB - t xi misses rB, so Minkowski's inequality gives
    g(t) >= A^p with A = ||f||_{L^p(rB)} - ||h||_{L^p(outside rB)} (roles
    swapped in minus mode).  Keeping only t > 2r in the t-integral yields
    G >= A^p (2r)^{-ps} / ps, i.e. rho <= 2r (ps)^{1/(ps)} A^{-1/s}.
    Returns (bound, r, A); bound is +inf when A <= 0.
    """
    f, h = common_grid(f, h)
    if mode == "minus":
        f, h = h, f
    p, s, ps = params.p, params.s, params.ps
    if r is None:
        r = max(mass_radius(f, p, fraction), mass_radius(h, p, fraction))
    c = np.linalg.norm(f.centers().reshape(-1, f.n), axis=1)
    inside = c <= r
    dv = f.cell_volume
    f_in = (float(np.sum(f.values.ravel()[inside] ** p)) * dv) ** (1.0 / p)
    h_out = (float(np.sum(h.values.ravel()[~inside] ** p)) * dv) ** (1.0 / p)
    A = f_in - h_out
    if A <= 0:
        return math.inf, r, A
    return 2.0 * r * ps ** (1.0 / ps) * A ** (-1.0 / s), r, A


# ---------------------------------------------------------------- I/O

def write_projection_body(path, body: PolarProjectionBody):
    quad = body.quad
    lines = [BODY_MAGIC, f"n={quad.n}", f"nodes={len(quad)}", f"mode={body.mode}",
             f"ps={body.params.ps!r}", f"s={body.params.s!r}", f"p={body.params.p!r}"]
    for xi, w, r in zip(quad.nodes, quad.weights, body.radial_values):
        lines.append(" ".join(f"{v:.17g}" for v in (*xi, r, w)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_projection_body(path) -> PolarProjectionBody:
    body, header = parse_body(Path(path).read_text(encoding="utf-8"))
    ps = float(header["ps"])
    s = float(header.get("s", "nan"))
    p = float(header.get("p", "nan"))
    params = Params(body.n, s, p)
    G = body.rho ** (-ps)
    return PolarProjectionBody(body.quad, G, header.get("mode", "abs"), params)
