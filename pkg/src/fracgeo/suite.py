"""The canonical verification battery.

Each case is a named recipe that builds its inputs from function specs
and seeds and returns one or more ChainReports.  Batteries of seeded random
inputs (Riesz triples, star-body pairs, random chains) are cases too.
Cases marked slow (three-dimensional, coarse grids) only run on request.

The canonical list:

======================== ==========================================================
case                     what it checks
======================== ==========================================================
chain-sym-box-1d         f = h = 1_[0,1], s = 1/4, p = 2: (16, 16, 16), equality
chain-asym-box-1d        f = 1_[0,1], h = 2 f, plus mode: (8, 8, 8), equality
chain-sym-gauss-2d       radial Gaussian, both equalities
chain-sym-twobump-2d     two elongated bumps: strict chain
chain-asym-bump-2d       shifted bump below a wide Gaussian, plus mode: strict
aniso-ellipse-2d         ellipse K, inputs stretched like K: equality, abs and plus
aniso-random-2d          random star body K, two-bump input: strict, abs and plus
aniso-lq-2d              l^4 ball K, two-bump input: strict, abs and plus
volume-box-1d            1D indicator: equality of the volume functional
volume-twobump-2d        two-bump pair: strict decrease under rearrangement
volume-sheared-2d        SL(2)-sheared Gaussian against its rearrangement: equality
invariance-gauss-2d      shear covariance and the scaling slope
limit-s1-gauss-1d        (1 - s) seminorm against the gradient functional (soft)
radial-bound-2d          radial values of Pi below one bound for s = 0.1 .. 0.9
riesz-battery            100 random indicator triples in n = 1 and in n = 2
dual-battery             50 random body pairs: dual mixed volume and dual BM
chain-battery            10 random symmetric and 10 random asymmetric chains
aniso-battery            10 random anisotropic cases, abs and plus
chain-sym-gauss-3d       radial Gaussian in 3D at coarse resolution (slow)
======================== ==========================================================
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dsl import parse_spec, sample_spec
from .grid import AffineMap, affine_image
from .params import validate_params
from .sphere import sphere_quadrature
from .starbody import (Ball, Ellipsoid, LqBall, dilate, random_star_body)
from .verify import (ChainReport, verify_anisotropic, verify_chain_asymmetric,
                     verify_chain_symmetric, verify_dual_brunn_minkowski, verify_dual_mixed,
                     verify_invariance, verify_limit_s1, verify_radial_bound, verify_riesz,
                     verify_volume_monotonicity)

BOX = "box_indicator([0],[1],1)"
BOX2 = "box_indicator([0],[1],2)"
GAUSS2 = "gaussian([0,0],0.5,1)"
TWO_BUMP = ("sum(affine([[2,0],[0,0.5]],[-0.6,0.8],gaussian([0,0],0.3,1)),"
            " affine([[2,0],[0,0.5]],[0.6,-0.8],gaussian([0,0],0.3,1)))")
SMALL_BUMP = "gaussian([0.3,0.2],0.3,0.5)"
WIDE = "gaussian([0,0],0.6,1)"


@dataclass
class Settings:
    """Resolution knobs shared by the cases."""

    m1: int = 400  # cells per axis in 1D
    m2: int = 128  # cells per axis in 2D
    m2_battery: int = 64
    m2_equality: int = 96  # equality cases need sheared inputs resolved
    m3: int = 32
    quad_nodes: int = 256
    seed: int = 0

    @classmethod
    def from_config(cls, cfg):
        s = cls()
        if "m" in cfg:
            s.m2 = int(cfg["m"])
        if "quad_nodes" in cfg:
            s.quad_nodes = int(cfg["quad_nodes"])
        if "seed" in cfg:
            s.seed = int(cfg["seed"])
        return s


def _sample(spec, n, L, m):
    return sample_spec(parse_spec(spec), n, L, m)


# ---------------------------------------------------------------- random inputs

def random_bumps(n, seed, L=3.0, m=64, count=None):
    """Sum of 1-3 elongated, rotated Gaussians with random centers."""
    rng = np.random.default_rng(seed)
    count = count or int(rng.integers(1, 4))
    parts = []
    for _ in range(count):
        sigma = rng.uniform(0.15, 0.3)
        amp = rng.uniform(0.5, 1.5)
        center = rng.uniform(-0.6, 0.6, size=n)
        if n == 1:
            parts.append(f"gaussian([{center[0]:.6f}],{sigma:.6f},{amp:.6f})")
            continue
        a = rng.uniform(0.6, 1.6)
        ang = rng.uniform(0, math.pi)
        rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
        mat = rot @ np.diag([a, 1.0 / a])
        if n == 3:
            mat = np.pad(mat, ((0, 1), (0, 1)))
            mat[2, 2] = 1.0
        rows = ",".join("[" + ",".join(f"{v:.6f}" for v in row) + "]" for row in mat)
        shift = ",".join(f"{v:.6f}" for v in center)
        zero = ",".join("0" for _ in range(n))
        parts.append(f"affine([{rows}],[{shift}],gaussian([{zero}],{sigma:.6f},{amp:.6f}))")
    return _sample("sum(" + ",".join(parts) + ")", n, L, m)


def random_indicator(n, seed, L=2.0, m=64):
    """Indicator of a union of 1-3 random boxes and balls."""
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(int(rng.integers(1, 4))):
        c = rng.uniform(-0.8, 0.8, size=n)
        if rng.random() < 0.5:
            w = rng.uniform(0.1, 0.6, size=n)
            lo = ",".join(f"{v:.6f}" for v in c - w)
            hi = ",".join(f"{v:.6f}" for v in c + w)
            parts.append(f"box_indicator([{lo}],[{hi}],1)")
        else:
            cs = ",".join(f"{v:.6f}" for v in c)
            parts.append(f"ball_indicator([{cs}],{rng.uniform(0.1, 0.6):.6f},1)")
    return _sample("max(" + ",".join(parts) + ")", n, L, m)


def dominating(f, seed, L=None):
    """A function h >= f: f plus a wide random bump."""
    rng = np.random.default_rng(seed + 7919)
    zero = ",".join("0" for _ in range(f.n))
    wide = _sample(f"gaussian([{zero}],{rng.uniform(0.4, 0.6):.6f},{rng.uniform(0.3, 1.0):.6f})",
                   f.n, f.L, f.m)
    return f.with_values(f.values + wide.values)


# ---------------------------------------------------------------- cases

def _chain_sym_box_1d(st):
    f = _sample(BOX, 1, 2, st.m1)
    return [verify_chain_symmetric(f, f, validate_params(1, 0.25, 2, True),
                                   equality=(True, True), case="chain-sym-box-1d")]


def _chain_asym_box_1d(st):
    f = _sample(BOX, 1, 2, st.m1)
    h = _sample(BOX2, 1, 2, st.m1)
    return [verify_chain_asymmetric(f, h, validate_params(1, 0.25, 2, True),
                                    equality=(True, True), case="chain-asym-box-1d")]


def _chain_sym_gauss_2d(st):
    f = _sample(GAUSS2, 2, 3, st.m2)
    return [verify_chain_symmetric(f, f, validate_params(2, 0.5, 2, True),
                                   sphere_quadrature(2, st.quad_nodes), case="chain-sym-gauss-2d")]


def _chain_sym_twobump_2d(st):
    f = _sample(TWO_BUMP, 2, 4, st.m2)
    return [verify_chain_symmetric(f, f, validate_params(2, 0.5, 2, True),
                                   sphere_quadrature(2, st.quad_nodes),
                                   case="chain-sym-twobump-2d")]


def _chain_asym_bump_2d(st):
    f = _sample(SMALL_BUMP, 2, 3.6, st.m2)
    h = _sample(WIDE, 2, 3.6, st.m2)
    return [verify_chain_asymmetric(f, h, validate_params(2, 0.5, 2, True),
                                    sphere_quadrature(2, st.quad_nodes),
                                    case="chain-asym-bump-2d")]


def _aniso_ellipse_2d(st):
    K = Ellipsoid.from_semiaxes([1.5, 1.0 / 1.5])
    f = _sample(f"affine([[1.5,0],[0,{1.0 / 1.5!r}]],{GAUSS2})", 2, 4.5, st.m2_equality)
    return [verify_anisotropic(f, f, K, validate_params(2, 0.5, 2), ("abs", "plus"),
                               equality=True, case="aniso-ellipse-2d")]


def _aniso_random_2d(st):
    K = random_star_body(sphere_quadrature(2, st.quad_nodes), st.seed + 11)
    f = _sample(TWO_BUMP, 2, 4, st.m2_battery)
    return [verify_anisotropic(f, f, K, validate_params(2, 0.5, 2), ("abs", "plus"),
                               case="aniso-random-2d")]


def _aniso_lq_2d(st):
    K = LqBall(4.0, 1.0, 2)
    f = _sample(TWO_BUMP, 2, 4, st.m2_battery)
    return [verify_anisotropic(f, f, K, validate_params(2, 0.5, 2), ("abs", "plus"),
                               case="aniso-lq-2d")]


def _volume_box_1d(st):
    f = _sample(BOX, 1, 2, st.m1)
    return [verify_volume_monotonicity(f, f, validate_params(1, 0.25, 2, True),
                                       equality=True, case="volume-box-1d")]


def _volume_twobump_2d(st):
    f = _sample(TWO_BUMP, 2, 4, st.m2)
    return [verify_volume_monotonicity(f, f, validate_params(2, 0.5, 2, True),
                                       sphere_quadrature(2, st.quad_nodes),
                                       case="volume-twobump-2d")]


def _volume_sheared_2d(st):
    shear = AffineMap(np.array([[1.0, 1.0], [0.0, 1.0]]))
    f = affine_image(_sample(GAUSS2, 2, 3, st.m2_equality), shear)
    return [verify_volume_monotonicity(f, f, validate_params(2, 0.5, 2, True),
                                       sphere_quadrature(2, st.quad_nodes), equality=True,
                                       case="volume-sheared-2d")]


def _invariance_gauss_2d(st):
    f = _sample(GAUSS2, 2, 3, st.m2_battery)
    return [verify_invariance(f, f, validate_params(2, 0.5, 2, True),
                              sphere_quadrature(2, st.quad_nodes), case="invariance-gauss-2d")]


def _limit_s1_gauss_1d(st):
    f = _sample("gaussian([0],0.5,1)", 1, 4, st.m1)
    return [verify_limit_s1(f, Ball(1.0, 1), 2.0, (0.9, 0.95, 0.99), case="limit-s1-gauss-1d")]


def _radial_bound_2d(st):
    f = _sample(TWO_BUMP, 2, 4, st.m2_battery)
    return [verify_radial_bound(f, f, 2.0, case="radial-bound-2d")]


def _riesz_battery(st, count=100):
    out = []
    for n, m in ((1, 128), (2, 48)):
        for i in range(count):
            seed = st.seed * 100003 + 1000 * n + i
            f, k, g = (random_indicator(n, seed * 3 + j, m=m) for j in range(3))
            out.append(verify_riesz(f, k, g, case=f"riesz-n{n}-{i:03d}"))
    return out


def _dual_battery(st, count=50):
    out = []
    quad = sphere_quadrature(2, st.quad_nodes)
    for i in range(count):
        seed = st.seed * 100003 + i
        K = random_star_body(quad, 2 * seed)
        L = random_star_body(quad, 2 * seed + 1)
        for alpha in (-0.5, -1.0, 0.5, 1.5, 3.0):
            out.append(verify_dual_mixed(K, L, alpha, quad, case=f"dual-mixed-{i:02d}-a{alpha:g}"))
        out.append(verify_dual_brunn_minkowski(K, L, 1.0, quad, case=f"dual-bm-{i:02d}"))
        out.append(verify_dual_mixed(K, dilate(K, 1.7), -1.0, quad, case=f"dual-dilate-{i:02d}"))
    return out


def _chain_battery(st, count=10):
    out = []
    for i in range(count):
        seed = st.seed * 100003 + i
        n = 1 if i % 2 == 0 else 2
        m = 256 if n == 1 else st.m2_battery
        params = validate_params(n, 0.25 if n == 1 else 0.5, 2.0, True)
        quad = sphere_quadrature(n, 128)
        f = random_bumps(n, seed, m=m)
        out.append(verify_chain_symmetric(f, f, params, quad, case=f"chain-sym-rand-{i:02d}"))
        g = random_bumps(n, seed + 500, m=m)
        h = dominating(g, seed)
        out.append(verify_chain_asymmetric(g, h, params, quad, case=f"chain-asym-rand-{i:02d}"))
    return out


def _aniso_battery(st, count=10):
    out = []
    quad = sphere_quadrature(2, st.quad_nodes)
    for i in range(count):
        seed = st.seed * 100003 + i
        K = random_star_body(quad, seed + 31) if i % 2 == 0 else Ellipsoid.from_semiaxes(
            [1.0 + 0.1 * i, 1.0 / (1.0 + 0.1 * i)])
        f = random_bumps(2, seed + 900, m=st.m2_battery)
        h = dominating(f, seed)
        params = validate_params(2, 0.5, 2.0)
        out.append(verify_anisotropic(f, f, K, params, ("abs",), case=f"aniso-abs-rand-{i:02d}"))
        out.append(verify_anisotropic(f, h, K, params, ("plus",), case=f"aniso-plus-rand-{i:02d}"))
    return out


def _chain_sym_gauss_3d(st):
    f = _sample("gaussian([0,0,0],0.5,1)", 3, 3, st.m3)
    return [verify_chain_symmetric(f, f, validate_params(3, 0.5, 2, True),
                                   sphere_quadrature(3, 128), case="chain-sym-gauss-3d")]


@dataclass(frozen=True)
class Case:
    name: str
    run: callable = field(repr=False)
    slow: bool = False
    battery: bool = False


CASES = (
    Case("chain-sym-box-1d", _chain_sym_box_1d),
    Case("chain-asym-box-1d", _chain_asym_box_1d),
    Case("chain-sym-gauss-2d", _chain_sym_gauss_2d),
    Case("chain-sym-twobump-2d", _chain_sym_twobump_2d),
    Case("chain-asym-bump-2d", _chain_asym_bump_2d),
    Case("aniso-ellipse-2d", _aniso_ellipse_2d),
    Case("aniso-random-2d", _aniso_random_2d),
    Case("aniso-lq-2d", _aniso_lq_2d),
    Case("volume-box-1d", _volume_box_1d),
    Case("volume-twobump-2d", _volume_twobump_2d),
    Case("volume-sheared-2d", _volume_sheared_2d),
    Case("invariance-gauss-2d", _invariance_gauss_2d),
    Case("limit-s1-gauss-1d", _limit_s1_gauss_1d),
    Case("radial-bound-2d", _radial_bound_2d),
    Case("riesz-battery", _riesz_battery, battery=True),
    Case("dual-battery", _dual_battery, battery=True),
    Case("chain-battery", _chain_battery, battery=True),
    Case("aniso-battery", _aniso_battery, battery=True),
    Case("chain-sym-gauss-3d", _chain_sym_gauss_3d, slow=True),
)


def case_names(include_slow=False):
    return [c.name for c in CASES if include_slow or not c.slow]


def run_case(name, settings: Settings = None):
    settings = settings or Settings()
    for c in CASES:
        if c.name == name:
            return c.run(settings)
    raise KeyError(f"unknown case {name!r}")


def run_suite(names=None, settings: Settings = None, threads=1, include_slow=False):
    """Run cases (all non-slow ones by default); returns {case: [reports]}.

    With threads > 1 cases run in separate processes; every case is
    deterministic, so the reports do not depend on the worker count.
    """
    settings = settings or Settings()
    names = list(names) if names else case_names(include_slow)
    if threads > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_case, names, [settings] * len(names)))
    else:
        results = [run_case(nm, settings) for nm in names]
    return dict(zip(names, results))


def summarize(results):
    """(failures, warnings): case names with violations, split by softness."""
    failures, soft = [], []
    for name, reports in results.items():
        for rep in reports:
            if rep.violated:
                (soft if rep.soft else failures).append(rep.case)
    return failures, soft
