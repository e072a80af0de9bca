"""Acceptance criteria 1-9 at their pinned tolerances.

Each test records one pass/fail line, printed in the terminal summary.
"""

import time

import numpy as np

from conftest import ACCEPTANCE, sample
from fracgeo.grid import GridFunction, common_grid, embed, lp_norm
from fracgeo.params import validate_params
from fracgeo.projbody import pi_body, seminorm_from_body
from fracgeo.rearrange import cell_shell_tolerance, rearrange
from fracgeo.seminorm import KernelPolicy, frac_seminorm
from fracgeo.sphere import sphere_quadrature
from fracgeo.starbody import (Ball, Ellipsoid, dual_mixed_volume, q_radial_sum,
                              random_star_body, volume)
from fracgeo.suite import Settings, random_bumps, random_indicator, run_case
from fracgeo.verify import (VACUOUS, verify_chain_asymmetric, verify_chain_symmetric)

BOX = "box_indicator([0],[1],1)"


def record(key, ok, detail):
    ACCEPTANCE[key] = ("PASS" if ok else "FAIL", detail)
    return ok


def _chain_values(rep):
    return {name: (rep.value(name), rep.term(name).refinement["extrapolated"])
            for name in ("lhs", "middle", "rhs")}


def _within(values, target, rel):
    return all(abs(v - target) <= rel * target for pair in values.values() for v in pair)


def test_criterion_1_golden_symmetric_chain():
    start = time.perf_counter()
    f = sample(BOX, 1, 2.0, 400)
    rep = verify_chain_symmetric(f, f, validate_params(1, 0.25, 2, True))
    elapsed = time.perf_counter() - start
    vals = _chain_values(rep)
    assert rep.term("lhs").refinement["m"] == [200, 400]
    ok = _within(vals, 16.0, 0.02) and elapsed < 30 and not rep.violated
    detail = ", ".join(f"{k}={v[1]:.4f}" for k, v in vals.items()) + f" ({elapsed:.1f} s)"
    assert record(1, ok, detail), detail


def test_criterion_2_golden_asymmetric_chain():
    start = time.perf_counter()
    f = sample(BOX, 1, 2.0, 400)
    rep = verify_chain_asymmetric(f, f.scaled(2.0), validate_params(1, 0.25, 2, True))
    elapsed = time.perf_counter() - start
    vals = _chain_values(rep)
    ok = _within(vals, 8.0, 0.02) and elapsed < 30 and not rep.violated
    detail = ", ".join(f"{k}={v[1]:.4f}" for k, v in vals.items()) + f" ({elapsed:.1f} s)"
    assert record(2, ok, detail), detail


def test_criterion_3_seminorm_equals_dual_mixed_volume():
    start = time.perf_counter()
    f = sample("gaussian([0,0],0.5,1)", 2, 3.0, 128)
    params = validate_params(2, 0.5, 2, True)
    quad = sphere_quadrature(2, 256)
    worst = 0.0
    for K in (Ball(1.0, 2), Ellipsoid.from_semiaxes([2.0, 0.5])):
        for eps in (None, 0.05):
            policy = KernelPolicy.truncate(eps) if eps else KernelPolicy.exact()
            direct = frac_seminorm(f, f, K, params, "abs", policy).value
            body = pi_body(f, f, params, "abs", quad, eps, K if eps else None)
            worst = max(worst, abs(seminorm_from_body(body, K) / direct - 1.0))
    elapsed = time.perf_counter() - start
    detail = f"max relative gap {worst:.2e} ({elapsed:.1f} s)"
    assert record(3, worst <= 0.02 and elapsed < 300, detail), detail


def test_criterion_4_inequality_batteries():
    st = Settings()
    counts = {}
    violated = []
    for name in ("riesz-battery", "dual-battery", "aniso-battery", "chain-battery"):
        reports = run_case(name, st)
        counts[name] = len(reports)
        violated += [r.case for r in reports if r.violated]
    assert counts["riesz-battery"] == 200
    assert counts["dual-battery"] == 50 * 7
    assert counts["aniso-battery"] == 20 and counts["chain-battery"] == 20
    # dilates are an equality case of the dual mixed volume inequality
    quad = sphere_quadrature(2, 256)
    K = random_star_body(quad, 4)
    Kd = q_radial_sum(K, K, 1.0, quad)  # the dilate 2K
    a = -1.0
    gap = abs(dual_mixed_volume(K, Kd, a, quad)
              / (volume(K, quad) ** ((2 - a) / 2) * volume(Kd, quad) ** (a / 2)) - 1.0)
    detail = f"{sum(counts.values())} reports, {len(violated)} violated, dilate gap {gap:.1e}"
    assert record(4, not violated and gap <= 1e-10, detail), detail


def test_criterion_5_exact_identities():
    quad = sphere_quadrature(2, 64)
    params = validate_params(2, 0.5, 2, True)
    f, h = random_bumps(2, 7, m=48), random_bumps(2, 8, m=48)
    G = {m: pi_body(f, h, params, m, quad, 0.1, Ball(1.0, 2)).gauge_ps
         for m in ("abs", "plus", "minus")}
    split = np.max(np.abs(G["abs"] - G["plus"] - G["minus"]) / G["abs"])
    swapped = pi_body(h, f, params, "plus", quad, 0.1, Ball(1.0, 2)).gauge_ps
    antipodal = np.max(np.abs(G["minus"] - swapped[quad.antipode]) / G["minus"])
    K, L1, L2 = (random_star_body(quad, s) for s in (1, 2, 3))
    self_gap = max(abs(dual_mixed_volume(K, K, a, quad) / volume(K, quad) - 1.0)
                   for a in (-1.0, 0.5, 3.0))
    additive = max(abs(dual_mixed_volume(K, q_radial_sum(L1, L2, a, quad), a, quad)
                       / (dual_mixed_volume(K, L1, a, quad) + dual_mixed_volume(K, L2, a, quad))
                       - 1.0) for a in (-1.0, 0.5, 3.0))
    worst = max(split, antipodal, self_gap, additive)
    detail = (f"modes {split:.1e}, antipodal {antipodal:.1e}, "
              f"self {self_gap:.1e}, additivity {additive:.1e}")
    assert record(5, worst <= 1e-10, detail), detail


def test_criterion_6_covariance_and_scaling():
    (rep,) = run_case("invariance-gauss-2d")
    base = rep.value("volume functional")
    sheared = rep.value("volume functional sheared")
    shear_gap = abs(sheared / base - 1.0)
    slope = rep.value("scaling slope")
    expected = rep.value("expected slope")
    ok = shear_gap <= 0.02 and abs(slope - expected) <= 0.05
    detail = f"shear gap {shear_gap:.2e}, slope {slope:.4f} vs {expected:.4f}"
    assert record(6, ok, detail), detail


def test_criterion_7_rearrangement():
    f = sample("sum(affine([[1.5,0],[0,0.5]],[0.4,0.2],gaussian([0,0],0.3,1)),"
               "box_indicator([-1,-1],[-0.2,0.1],0.6))", 2, 3.2, 256)
    fs = rearrange(f)
    norm_gap = max(abs(lp_norm(fs, p) / lp_norm(f, p) - 1.0) for p in (1, 2, 3))

    g = random_indicator(2, 9)
    once = rearrange(g)
    a, b = common_grid(once, rearrange(once))
    drift = np.sum(np.abs(a.values - b.values)) * a.cell_volume
    shell = np.max(g.values) * cell_shell_tolerance(once)

    rng = np.random.default_rng(0)
    monotone = True
    for _ in range(20):
        lo = rng.random((32, 32)) * (rng.random((32, 32)) < 0.5)
        u = GridFunction(2, 1.0, 32, lo)
        v = u.with_values(lo + rng.random((32, 32)) * (rng.random((32, 32)) < 0.3))
        us, vs = rearrange(u), rearrange(v)
        side = max(us.L, vs.L)
        monotone &= bool(np.all(embed(us, side).values <= embed(vs, side).values))

    ok = norm_gap <= 5e-3 and drift <= shell and monotone
    detail = f"norm gap {norm_gap:.1e}, idempotence drift {drift:.2e} <= {shell:.2e}, monotone {monotone}"
    assert record(7, ok, detail), detail


def test_criterion_8_soft_limit_check():
    (rep,) = run_case("limit-s1-gauss-1d")
    ratios = [t.value for t in rep.terms if t.name.startswith("ratio")]
    ok = not rep.violated
    # soft: a failure is reported as a warning and never fails the run
    ACCEPTANCE[8] = ("PASS" if ok else "WARN",
                     "ratios " + ", ".join(f"{r:.4f}" for r in ratios))
    assert rep.soft


def test_criterion_9_divergence_diagnostics():
    params = validate_params(1, 0.25, 2, True)
    f = sample(BOX, 1, 2.0, 200)
    res = frac_seminorm(f, f.scaled(2.0), Ball(1.0, 1), params,
                        policy=KernelPolicy.exact(diagnose=True))
    exp1 = res.diagnostic.exponent
    params2 = validate_params(2, 0.5, 2, True)
    g, h = random_bumps(2, 3, m=48), random_bumps(2, 4, m=48)
    res2 = frac_seminorm(g, h, Ball(1.0, 2), params2, policy=KernelPolicy.exact(diagnose=True))
    exp2 = res2.diagnostic.exponent
    rep = verify_chain_symmetric(f, f.scaled(2.0), params)
    vacuous = all(v["verdict"] == VACUOUS for v in rep.verdicts)
    no_floats = all(t.infinite and t.as_dict()["value"] is None for t in rep.terms)
    ok = (res.infinite and res2.infinite and abs(exp1 + params.ps) <= 0.1
          and abs(exp2 + params2.ps) <= 0.1 and vacuous and no_floats)
    detail = (f"exponents {exp1:.3f} (target {-params.ps:g}), {exp2:.3f} "
              f"(target {-params2.ps:g}), verdicts vacuous {vacuous}")
    assert record(9, ok, detail), detail
