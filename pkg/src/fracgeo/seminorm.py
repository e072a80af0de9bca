"""Anisotropic fractional L_p seminorms with an explicit kernel policy.

    int int phi(f(x), h(y)) / |x - y|_K^{n + ps} dx dy,

phi = |a - b|^p (mode "abs"), (a - b)_+^p ("plus") or (a - b)_-^p
("minus").  Substituting x = y + z turns this into the kernel integrated
against the shift integral g(z), which :mod:`fracgeo.shiftmodel` provides
and :mod:`fracgeo.kernel` integrates.

The untruncated integral is finite only when g vanishes at z = 0 fast
enough; otherwise the result is +inf, reported as a flag.  Truncation
clamps the kernel at min(|z|_K^{-n-ps}, eps^{-n-ps}), which integrates a
sub-range of the kernel's layer-cake decomposition and so keeps every
rearrangement inequality intact.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import GridFunction, common_grid
from .kernel import clamp_box, far_weights, near_weights
from .params import Params
from .shiftmodel import ShiftModel, build_shift_model

MODES = ("abs", "plus", "minus")

# epsilon ladder of the divergence diagnostic, in cells
DIAGNOSTIC_STEPS = (0.1, 10.0 ** -0.5, 1.0)
DIVERGENCE_EXPONENT = -0.05


@dataclass(frozen=True)
class KernelPolicy:
    """``exclude_diagonal``: the full improper integral (may be +inf).
    ``truncate``: kernel clamped at gauge distance ``epsilon``."""

    mode: str = "exclude_diagonal"
    epsilon: float = None
    diagnose: bool = False

    def __post_init__(self):
        if self.mode not in ("exclude_diagonal", "truncate"):
            raise ValueError(f"unknown kernel policy {self.mode!r}")
        if self.mode == "truncate" and not (self.epsilon and self.epsilon > 0):
            raise ValueError("truncation needs epsilon > 0")

    @classmethod
    def exact(cls, diagnose=False):
        return cls("exclude_diagonal", None, diagnose)

    @classmethod
    def truncate(cls, epsilon, diagnose=False):
        return cls("truncate", float(epsilon), diagnose)

    def clamp_cells(self, spacing):
        return self.epsilon / spacing if self.mode == "truncate" else 0.0

    def describe(self):
        if self.mode == "truncate":
            return f"truncate(eps={self.epsilon:g})"
        return "exclude_diagonal"


@dataclass
class Diagnostic:
    epsilons: tuple
    values: tuple
    exponent: float
    divergent: bool


@dataclass
class SeminormResult:
    value: float
    mode: str
    policy: KernelPolicy
    infinite: bool = False
    divergent: bool = False
    diagnostic: Diagnostic = None
    beta: float = None
    spacing: float = None
    extras: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


def _value(model: ShiftModel, K, ps, clamp):
    """Kernel integral against the model; +inf when not integrable."""
    if model.empty:
        return 0.0
    n, N0 = model.n, model.near
    W, W_tail = far_weights(K, n, ps, model.klo, model.khi, N0)
    V, W0 = near_weights(K, n, ps, model.beta, N0, clamp)
    S = model.S
    near = tuple(slice(int(-N0 - lo), int(N0 - lo + 1)) for lo in model.klo)
    diff = S[near] - model.origin
    inf = np.isinf(V)
    if np.any(inf):
        if np.any(diff[inf] > 0):
            return math.inf
        V = np.where(inf, 0.0, V)
    total = float(np.sum(V * diff))
    if model.origin > 0:
        if math.isinf(W0):
            return math.inf
        total += model.origin * W0
    total += float(np.sum(S * W)) + model.tail * W_tail
    return max(total, 0.0) * model.spacing ** (-ps)


def frac_seminorm(f: GridFunction, h: GridFunction, K, params: Params, mode="abs",
                  policy: KernelPolicy = None) -> SeminormResult:
    """Fractional seminorm of the pair (f, h) with respect to the gauge of K."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    policy = policy or KernelPolicy.exact()
    f, h = common_grid(f, h)
    n, ps, p = f.n, params.ps, params.p
    if n != params.n:
        raise ValueError("grid dimension differs from params.n")
    d = f.spacing
    clamp = policy.clamp_cells(d)
    B = clamp_box(K, n, clamp)
    if policy.diagnose:
        B = max(B, clamp_box(K, n, max(DIAGNOSTIC_STEPS)))
    model = build_shift_model(f, h, mode, p, min_box=B)
    value = _value(model, K, ps, clamp)
    res = SeminormResult(value, mode, policy, infinite=math.isinf(value),
                         beta=model.beta, spacing=d)
    res.extras["origin"] = model.origin
    res.extras["tail"] = model.tail
    if policy.diagnose:
        res.diagnostic = divergence_diagnostic(model, K, ps)
        res.divergent = res.diagnostic.divergent
    else:
        res.divergent = res.infinite if policy.mode == "exclude_diagonal" else False
    return res


def divergence_diagnostic(model: ShiftModel, K, ps) -> Diagnostic:
    """Truncated values at eps = spacing * (0.1, 0.316, 1) and the exponent
    of their eps-dependence, estimated from successive increments (which
    cancels the convergent constant).  Near-diagonal mass with no decay
    gives an exponent of about -ps."""
    eps = tuple(model.spacing * c for c in DIAGNOSTIC_STEPS)
    vals = tuple(_value(model, K, ps, c) for c in DIAGNOSTIC_STEPS)
    d1 = vals[0] - vals[1]
    d2 = vals[1] - vals[2]
    scale = max(abs(v) for v in vals) or 1.0
    if d1 > 1e-12 * scale and d2 > 1e-12 * scale:
        exponent = -math.log(d1 / d2) / math.log(math.sqrt(10.0))
    elif abs(d1) <= 1e-12 * scale and abs(d2) <= 1e-12 * scale:
        exponent = math.inf  # no eps dependence at all
    else:
        exponent = math.nan
    divergent = model.origin > 0 or (math.isfinite(exponent) and exponent < DIVERGENCE_EXPONENT)
    return Diagnostic(eps, vals, exponent, divergent)


def membership_check(f, h, params: Params, K, mode="abs") -> dict:
    """Classify the pair as having a finite or an infinite seminorm."""
    res = frac_seminorm(f, h, K, params, mode, KernelPolicy.exact(diagnose=True))
    dg = res.diagnostic
    return {
        "convergent": not dg.divergent and not res.infinite,
        "exponent": dg.exponent,
        "epsilons": list(dg.epsilons),
        "truncated_values": list(dg.values),
        "value": res.value,
        "beta": res.beta,
    }


def with_policy(result: SeminormResult, **changes):
    return replace(result, **changes)
