"""End-to-end checks of the rearrangement chains, rendered as ChainReports.

Every term is evaluated on the input grid (m cells per axis) and on its
2x block-coarsened version (m/2).  The reported value is the fine-grid
value Q(m) and the uncertainty is |Q(m) - Q(m/2)|; the first-order
extrapolant 2 Q(m) - Q(m/2) is recorded alongside.  (Block averaging
smooths the coarse function, so for smooth data the extrapolant tends to
overshoot.)  Comparisons use these uncertainties, never raw differences:

* a comparison with an infinite left side is ``vacuous-infinite``;
* |margin| <= max(band * scale, 3u) is ``holds-with-equality``;
* margin < -u is ``violated-within-uncertainty``;
* anything else ``holds``.

Equality comparisons (kind ``eq``) only ever report equality or a
violation.
"""

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import AffineMap, GridFunction, affine_image, coarsen, common_grid
from .params import Params, validate_params
from .projbody import pi_body, pi_gauge, radial_bound, volume_functional, affine_energy
from .rearrange import rearrange, riesz_functional
from .seminorm import KernelPolicy, frac_seminorm
from .shiftmodel import build_shift_model
from .sphere import SphereQuadrature, sphere_quadrature
from .starbody import (Ball, StarBody, dual_mixed_volume, dual_mixed_volume_bound,
                       q_radial_sum, schwarz_symmetral, volume)

HOLDS = "holds"
EQUALITY = "holds-with-equality"
VIOLATED = "violated-within-uncertainty"
VACUOUS = "vacuous-infinite"
VERDICTS = (HOLDS, EQUALITY, VIOLATED, VACUOUS)

EQUALITY_BAND = 0.02


@dataclass
class Term:
    name: str
    value: float
    infinite: bool
    uncertainty: float
    refinement: dict

    def as_dict(self):
        return {
            "name": self.name,
            "value": None if self.infinite else _num(self.value),
            "infinite": self.infinite,
            "uncertainty": _num(self.uncertainty),
            "refinement": self.refinement,
        }


def _num(x):
    """JSON-safe float (inf and nan become strings)."""
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else "-inf" if x < 0 else "nan"


@dataclass
class ChainReport:
    case: str
    params: dict
    grid: dict
    terms: list = field(default_factory=list)
    margins: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    runtime_seconds: float = 0.0
    soft: bool = False  # failures are warnings only

    def term(self, name) -> Term:
        for t in self.terms:
            if t.name == name:
                return t
        raise KeyError(name)

    def value(self, name):
        return self.term(name).value

    @property
    def violated(self):
        return any(v["verdict"] == VIOLATED for v in self.verdicts)

    def verdict(self, comparison):
        for v in self.verdicts:
            if v["comparison"] == comparison:
                return v["verdict"]
        raise KeyError(comparison)

    def add(self, term: Term):
        self.terms.append(term)
        return term

    def compare(self, name, left: Term, right: Term, kind="ge", band=EQUALITY_BAND,
                absolute=False):
        margin, verdict = judge(left, right, kind, band, absolute)
        margin["comparison"] = name
        self.margins.append(margin)
        self.verdicts.append({"comparison": name, "kind": kind, "verdict": verdict})
        return verdict

    def to_dict(self):
        return {
            "case": self.case,
            "params": self.params,
            "grid": self.grid,
            "terms": [t.as_dict() for t in self.terms],
            "margins": self.margins,
            "verdicts": self.verdicts,
            "runtime_seconds": self.runtime_seconds,
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)


def judge(left: Term, right: Term, kind="ge", band=EQUALITY_BAND, absolute=False):
    """Margin record and verdict for ``left >= right`` (kind ``ge``) or
    ``left == right`` (kind ``eq``)."""
    u = math.hypot(left.uncertainty, right.uncertainty)
    record = {"left": left.name, "right": right.name, "uncertainty": _num(u)}
    if left.infinite or right.infinite:
        if left.infinite and (right.infinite or kind == "ge"):
            record.update(value=None, relative=None)
            return record, VACUOUS
        record.update(value="-inf" if right.infinite else "inf", relative=None)
        return record, VIOLATED
    margin = left.value - right.value
    scale = 1.0 if absolute else max(abs(left.value), abs(right.value), 1e-300)
    record.update(value=margin, relative=margin / scale)
    if abs(margin) <= max(band * scale, 3.0 * u):
        return record, EQUALITY
    if kind == "eq" or margin < -u:
        return record, VIOLATED
    return record, HOLDS


# ---------------------------------------------------------------- refinement

def _levels(*functions, refine=True):
    """[(coarse inputs), (fine inputs)], or only the fine level."""
    fine = tuple(functions)
    if refine and all(f.m % 2 == 0 and f.m >= 8 for f in fine):
        return [tuple(coarsen(f) for f in fine), fine]
    return [fine]


def refined_term(name, evaluate, levels) -> Term:
    """Evaluate at each level; the spread of the last two is the uncertainty."""
    values = [float(evaluate(*lv)) for lv in levels]
    ms = [int(lv[0].m) for lv in levels]
    refinement = {"m": ms, "values": [_num(v) for v in values]}
    fine = values[-1]
    if math.isinf(fine):
        return Term(name, math.inf, True, 0.0, refinement)
    if len(values) == 1:
        refinement["scheme"] = "single"
        return Term(name, fine, False, 0.0, refinement)
    coarse = values[-2]
    refinement["scheme"] = "two-level"
    if not math.isfinite(coarse):
        return Term(name, fine, False, abs(fine), refinement)
    refinement["extrapolated"] = 2.0 * fine - coarse
    return Term(name, fine, False, abs(fine - coarse), refinement)


def exact_term(name, value) -> Term:
    value = float(value)
    return Term(name, value, math.isinf(value), 0.0, {"scheme": "exact"})


def _params_dict(params: Params):
    return {"n": params.n, "s": params.s, "p": params.p}


def _grid_dict(f: GridFunction):
    return {"L": float(f.L), "m": int(f.m)}


def is_radial(f: GridFunction, rtol=1e-9) -> bool:
    """True when f coincides with its symmetric decreasing rearrangement."""
    fs = rearrange(f)
    a, b = common_grid(fs, f)
    scale = float(np.max(np.abs(a.values))) or 1.0
    return bool(np.max(np.abs(a.values - b.values)) <= rtol * scale)


def _seminorm(f, h, K, params, mode, policy):
    return frac_seminorm(f, h, K, params, mode, policy).value


def _body(f, h, params, mode, quad, policy):
    if policy.mode == "truncate":
        return pi_body(f, h, params, mode, quad, policy.epsilon, Ball(1.0, f.n))
    return pi_body(f, h, params, mode, quad)


# ---------------------------------------------------------------- chains

def _chain(case, f, h, params, quad, policy, mode, equality, refine):
    start = time.perf_counter()
    validate_params(params.n, params.s, params.p, need_projection_range=True)
    policy = policy or KernelPolicy.exact()
    quad = quad or sphere_quadrature(params.n)
    f, h = common_grid(f, h)
    if equality is None:
        radial = is_radial(f) and is_radial(h)
        equality = (radial, radial)
    ball = Ball(1.0, params.n)
    levels = _levels(f, h, refine=refine)
    report = ChainReport(case, _params_dict(params), _grid_dict(f))
    lhs = report.add(refined_term(
        "lhs", lambda a, b: _seminorm(a, b, ball, params, mode, policy), levels))
    middle = report.add(refined_term(
        "middle", lambda a, b: affine_energy(_body(a, b, params, mode, quad, policy)), levels))
    rhs = report.add(refined_term(
        "rhs", lambda a, b: _seminorm(rearrange(a), rearrange(b), ball, params, mode, policy),
        levels))
    report.compare("lhs >= middle", lhs, middle, "eq" if equality[0] else "ge")
    report.compare("middle >= rhs", middle, rhs, "eq" if equality[1] else "ge")
    report.runtime_seconds = time.perf_counter() - start
    return report


def verify_chain_symmetric(f, h, params: Params, quad: SphereQuadrature = None,
                           policy: KernelPolicy = None, equality=None, refine=True,
                           case="chain-symmetric") -> ChainReport:
    """lhs = isotropic seminorm, middle = affine energy, rhs = seminorm of the
    rearranged pair; checks lhs >= middle >= rhs.

    ``equality`` is a pair of flags marking inequalities that must be
    equalities (radial inputs for the first, affine images of rearranged
    inputs for the second); by default both are set when f and h are
    already radial.
    """
    return _chain(case, f, h, params, quad, policy, "abs", equality, refine)


def verify_chain_asymmetric(f, h, params: Params, quad: SphereQuadrature = None,
                            policy: KernelPolicy = None, equality=None, refine=True,
                            case="chain-asymmetric") -> ChainReport:
    """The same chain for the positive-part functional and its body."""
    return _chain(case, f, h, params, quad, policy, "plus", equality, refine)


def verify_anisotropic(f, h, K: StarBody, params: Params, modes=("abs",),
                       policy: KernelPolicy = None, equality=False, quad=None, refine=True,
                       case="anisotropic") -> ChainReport:
    """seminorm(f, h, K) >= seminorm(f*, h*, K*) for each mode, with K* the
    Schwarz symmetral of K.  ``equality`` demands equality instead (K an
    ellipsoid and f, h images of f*, h* under one affine map)."""
    start = time.perf_counter()
    policy = policy or KernelPolicy.exact()
    f, h = common_grid(f, h)
    quad = quad or sphere_quadrature(f.n, 1024 if f.n == 2 else 256)
    Kstar = schwarz_symmetral(K, quad)
    levels = _levels(f, h, refine=refine)
    report = ChainReport(case, _params_dict(params), _grid_dict(f))
    for mode in modes:
        lhs = report.add(refined_term(
            f"{mode} lhs", lambda a, b: _seminorm(a, b, K, params, mode, policy), levels))
        rhs = report.add(refined_term(
            f"{mode} rhs",
            lambda a, b: _seminorm(rearrange(a), rearrange(b), Kstar, params, mode, policy),
            levels))
        report.compare(f"{mode}: lhs >= rhs", lhs, rhs, "eq" if equality else "ge")
    report.runtime_seconds = time.perf_counter() - start
    return report


def verify_volume_monotonicity(f, h, params: Params, quad: SphereQuadrature = None,
                               mode="abs", equality=None, refine=True,
                               case="volume-monotonicity") -> ChainReport:
    """|Pi(f, h)|^{-ps/n} >= |Pi(f*, h*)|^{-ps/n}."""
    start = time.perf_counter()
    validate_params(params.n, params.s, params.p, need_projection_range=True)
    quad = quad or sphere_quadrature(params.n)
    f, h = common_grid(f, h)
    if equality is None:
        equality = is_radial(f) and is_radial(h)
    levels = _levels(f, h, refine=refine)
    report = ChainReport(case, _params_dict(params), _grid_dict(f))
    lhs = report.add(refined_term(
        "volume functional", lambda a, b: volume_functional(pi_body(a, b, params, mode, quad)),
        levels))
    rhs = report.add(refined_term(
        "volume functional rearranged",
        lambda a, b: volume_functional(pi_body(rearrange(a), rearrange(b), params, mode, quad)),
        levels))
    report.compare("original >= rearranged", lhs, rhs, "eq" if equality else "ge")
    report.runtime_seconds = time.perf_counter() - start
    return report


# ---------------------------------------------------------------- s -> 1

def gradient_functional(f: GridFunction, K: StarBody, p, quad: SphereQuadrature) -> float:
    """(2/p) int ||grad f||^p over the polar moment body of K, with centered
    differences for the gradient."""
    n = f.n
    grads = np.gradient(f.values, f.spacing) if n > 1 else [np.gradient(f.values, f.spacing)]
    v = np.stack([g.ravel() for g in grads], axis=1)
    rho = K.radial_on(quad)
    # ||v||^p = (1/2) sum_i w_i |v . xi_i|^p rho_i^{n+p}
    coef = 0.5 * quad.weights * rho ** (n + p)
    norms_p = (np.abs(v @ quad.nodes.T) ** p) @ coef
    return 2.0 / p * float(np.sum(norms_p)) * f.cell_volume


def verify_limit_s1(f: GridFunction, K: StarBody, p, s_list=(0.9, 0.95, 0.99),
                    quad: SphereQuadrature = None, band=0.10, refine=True,
                    case="limit-s1") -> ChainReport:
    """(1 - s) * seminorm(f, f, K) against the gradient functional as s -> 1.

    The last s is compared within ``band``; the distance of the ratio to 1
    must not grow along ``s_list``.  Reports are soft (warnings only).
    """
    start = time.perf_counter()
    n = f.n
    quad = quad or sphere_quadrature(n, 512 if n == 2 else 256)
    levels = _levels(f, refine=refine)
    report = ChainReport(case, {"n": n, "s": list(s_list), "p": p}, _grid_dict(f), soft=True)
    grad = report.add(refined_term(
        "gradient functional", lambda a: gradient_functional(a, K, p, quad), levels))
    distances = []
    for s in s_list:
        params = validate_params(n, s, p)
        scaled = report.add(refined_term(
            f"(1-s) seminorm s={s:g}",
            lambda a, params=params: (1.0 - params.s) * frac_seminorm(a, a, K, params).value,
            levels))
        ratio = scaled.value / grad.value if grad.value else math.nan
        # first-order propagation of both uncertainties
        u = abs(ratio) * math.hypot(scaled.uncertainty / (abs(scaled.value) or 1.0),
                                    grad.uncertainty / (abs(grad.value) or 1.0))
        report.add(Term(f"ratio s={s:g}", ratio, False, u, {"scheme": "derived"}))
        distances.append(report.add(Term(f"distance s={s:g}", abs(ratio - 1.0), False, u,
                                         {"scheme": "derived"})))
    last = report.term(f"ratio s={s_list[-1]:g}")
    report.compare(f"ratio s={s_list[-1]:g} == 1", last, exact_term("one", 1.0), "eq",
                   band=band, absolute=True)
    for a, b in zip(distances, distances[1:]):
        report.compare(f"{a.name} >= {b.name}", a, b, "ge", band=0.0, absolute=True)
    report.runtime_seconds = time.perf_counter() - start
    return report


# ---------------------------------------------------------------- invariance

def _shear(n, amount):
    a = np.eye(n)
    if n == 1:
        a[0, 0] = -1.0  # SL(1) = {1, -1}
    else:
        a[0, 1] = amount
    return AffineMap(a)


def dilated(f: GridFunction, r) -> GridFunction:
    """x -> f(r x), exactly: the same samples on the box of half-width L / r."""
    if r <= 0:
        raise ValueError("dilation factor must be positive")
    return GridFunction(f.n, f.L / r, f.m, f.values, dict(f.meta))


def verify_invariance(f, h, params: Params, quad: SphereQuadrature = None, mode="abs",
                      shear=1.0, scales=(0.5, 1.0, 2.0), directions=4, refine=True,
                      case="invariance") -> ChainReport:
    """Volume-preserving maps leave |Pi| unchanged, the gauge transforms as
    G'(xi) = |det A| |A^{-1} xi|^{ps} G(A^{-1} xi / |A^{-1} xi|), and
    x -> f(r x) scales |Pi|^{-ps/n} by r^{ps-n}."""
    start = time.perf_counter()
    validate_params(params.n, params.s, params.p, need_projection_range=True)
    n, ps = params.n, params.ps
    quad = quad or sphere_quadrature(n)
    f, h = common_grid(f, h)
    amap = _shear(n, shear)
    fs, hs = common_grid(affine_image(f, amap), affine_image(h, amap))
    report = ChainReport(case, _params_dict(params), _grid_dict(f))

    models = {}

    def model_of(a, b):
        key = (id(a), id(b))
        if key not in models:
            models[key] = (a, b, build_shift_model(a, b, mode, params.p))
        return models[key][2]

    def volume_of(a, b):
        return volume_functional(pi_body(a, b, params, mode, quad, model=model_of(a, b)))

    base_levels = _levels(f, h, refine=refine)
    sheared_levels = _levels(fs, hs, refine=refine)
    base = report.add(refined_term("volume functional", volume_of, base_levels))
    sheared = report.add(refined_term("volume functional sheared", volume_of, sheared_levels))
    report.compare("sheared == original", sheared, base, "eq")

    inv = np.linalg.inv(amap.matrix)
    picks = quad.nodes[np.linspace(0, len(quad) - 1, min(directions, len(quad))).astype(int)]
    for i, xi in enumerate(picks):
        y = inv @ xi
        ny = float(np.linalg.norm(y))
        a = report.add(refined_term(
            f"gauge sheared xi{i}",
            lambda a, b, xi=xi: pi_gauge(None, None, xi, params, mode, model=model_of(a, b)).value,
            sheared_levels))
        b = report.add(refined_term(
            f"gauge predicted xi{i}",
            lambda a, b, y=y, ny=ny: abs(amap.det) * ny ** ps * pi_gauge(
                None, None, y / ny, params, mode, model=model_of(a, b)).value,
            base_levels))
        report.compare(f"gauge covariance xi{i}", a, b, "eq")

    logs = []
    for r in scales:
        v = report.add(refined_term(
            f"volume functional r={r:g}",
            lambda a, b, r=r: volume_functional(pi_body(dilated(a, r), dilated(b, r), params, mode, quad)),
            base_levels))
        logs.append((math.log(r), math.log(v.value) if 0 < v.value < math.inf else math.nan))
    x, y = np.array(logs).T
    slope = float(np.polyfit(x, y, 1)[0]) if np.all(np.isfinite(y)) else math.nan
    fitted = report.add(exact_term("scaling slope", slope))
    expected = report.add(exact_term("expected slope", ps - n))
    report.compare("scaling slope", fitted, expected, "eq", band=0.05, absolute=True)
    report.runtime_seconds = time.perf_counter() - start
    return report


# ---------------------------------------------------------------- others

def verify_riesz(f, k, g, refine=False, case="riesz") -> ChainReport:
    """Riesz functional of the rearranged triple >= that of the triple."""
    start = time.perf_counter()
    levels = _levels(f, k, g, refine=refine)
    report = ChainReport(case, {"n": f.n, "s": None, "p": None}, _grid_dict(f))
    orig = report.add(refined_term("original", riesz_functional, levels))
    rear = report.add(refined_term(
        "rearranged", lambda a, b, c: riesz_functional(rearrange(a), rearrange(b), rearrange(c)),
        levels))
    # FFT correlations carry rounding of order 1e-15 relative
    report.compare("rearranged >= original", rear, orig, "ge", band=1e-12)
    report.runtime_seconds = time.perf_counter() - start
    return report


def verify_dual_mixed(K, L, alpha, quad: SphereQuadrature, case="dual-mixed") -> ChainReport:
    """Dual mixed volume against |K|^{(n-a)/n} |L|^{a/n}: above it for
    alpha < 0 or alpha > n, below it for 0 < alpha < n."""
    start = time.perf_counter()
    n = quad.n
    report = ChainReport(case, {"n": n, "s": None, "p": None, "alpha": alpha}, {"nodes": len(quad)})
    vm = report.add(exact_term("dual mixed volume", dual_mixed_volume(K, L, alpha, quad)))
    bound = report.add(exact_term("volume bound", dual_mixed_volume_bound(K, L, alpha, quad)))
    if alpha < 0 or alpha > n:
        report.compare("mixed >= bound", vm, bound, "ge", band=1e-10)
    else:
        report.compare("bound >= mixed", bound, vm, "ge", band=1e-10)
    report.runtime_seconds = time.perf_counter() - start
    return report


def verify_dual_brunn_minkowski(K, L, q, quad: SphereQuadrature,
                                case="dual-brunn-minkowski") -> ChainReport:
    """|K +_{-q} L|^{-q/n} >= |K|^{-q/n} + |L|^{-q/n} for q > 0."""
    if q <= 0:
        raise ValueError("q must be positive")
    start = time.perf_counter()
    n = quad.n
    report = ChainReport(case, {"n": n, "s": None, "p": None, "q": q}, {"nodes": len(quad)})
    total = q_radial_sum(K, L, -q, quad)
    lhs = report.add(exact_term("sum body", volume(total, quad) ** (-q / n)))
    rhs = report.add(exact_term("separate bodies",
                                volume(K, quad) ** (-q / n) + volume(L, quad) ** (-q / n)))
    report.compare("sum >= separate", lhs, rhs, "ge", band=1e-10)
    report.runtime_seconds = time.perf_counter() - start
    return report


def uniform_radial_bound(f, h, p, s_values, mode="abs", n_grid=400):
    """One constant bounding the radial estimate over s in [min, max] of s_values."""
    lo, hi = min(s_values), max(s_values)
    best = 0.0
    for s in np.linspace(lo, hi, n_grid):
        b, _, _ = radial_bound(f, h, Params(f.n, float(s), p), mode)
        best = max(best, b)
    return best


def verify_radial_bound(f, h, p, s_values=tuple(np.round(np.arange(0.1, 0.95, 0.1), 2)),
                        quad: SphereQuadrature = None, mode="abs",
                        case="radial-bound") -> ChainReport:
    """Largest radial value of Pi over the s values stays under one bound."""
    start = time.perf_counter()
    f, h = common_grid(f, h)
    n = f.n
    quad = quad or sphere_quadrature(n, 64 if n == 2 else 128)
    report = ChainReport(case, {"n": n, "s": list(map(float, s_values)), "p": p}, _grid_dict(f))
    bound = report.add(exact_term("uniform bound", uniform_radial_bound(f, h, p, s_values, mode)))
    for s in s_values:
        params = validate_params(n, float(s), p, need_projection_range=True)
        body = pi_body(f, h, params, mode, quad)
        rmax = float(np.max(body.radial_values))
        t = report.add(exact_term(f"max radial s={s:g}", rmax))
        report.compare(f"bound >= max radial s={s:g}", bound, t, "ge", band=0.0)
    report.runtime_seconds = time.perf_counter() - start
    return report


# ---------------------------------------------------------------- output

def write_report(path, report: ChainReport):
    Path(path).write_text(report.to_json() + "\n", encoding="utf-8")


def write_refinement_csv(path, reports):
    """Term value against refinement level, one row per (case, term, m)."""
    rows = ["case,term,m,value"]
    for rep in reports:
        for t in rep.terms:
            for m, v in zip(t.refinement.get("m", []), t.refinement.get("values", [])):
                rows.append(f"{_csv(rep.case)},{_csv(t.name)},{m},{v}")
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def write_margin_csv(path, reports):
    """Margin of every comparison, one row per (case, comparison)."""
    rows = ["case,comparison,margin,relative,uncertainty,verdict"]
    for rep in reports:
        for mg, vd in zip(rep.margins, rep.verdicts):
            rows.append(",".join(str(x) for x in (
                _csv(rep.case), _csv(mg["comparison"]), mg["value"], mg["relative"],
                mg["uncertainty"], vd["verdict"])))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def _csv(text):
    return '"' + str(text).replace('"', '""') + '"' if ("," in str(text) or '"' in str(text)) else str(text)
