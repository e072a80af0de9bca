import math

import numpy as np
import pytest

from fracgeo.params import Params, validate_params
from fracgeo.projbody import (PolarProjectionBody, affine_energy, mass_radius, pi_body, pi_gauge,
                              radial_bound, read_projection_body, seminorm_from_body,
                              shift_profile, volume_functional, write_projection_body)
from fracgeo.seminorm import KernelPolicy, frac_seminorm
from fracgeo.sphere import sphere_quadrature
from fracgeo.starbody import Ball, Ellipsoid, random_star_body
from fracgeo.verify import dilated
from conftest import sample

P1 = validate_params(1, 0.25, 2)
P2 = validate_params(2, 0.5, 2)
Q1 = sphere_quadrature(1)


@pytest.fixture(scope="module")
def pair2():
    f = sample("gaussian([0.1,0],0.3,1)", 2, 2.0, 32)
    h = sample("affine([[1.3,0.2],[0,0.8]],[0,0.2],gaussian([0,0],0.3,0.8))", 2, 2.0, 32)
    return f, h


def test_box_gauge_body_and_energy(box1):
    # G = int_0^inf 2 min(t, 1) t^{-3/2} dt = 8 in both directions
    body = pi_body(box1, box1, P1, "abs", Q1)
    assert np.allclose(body.gauge_ps, 8.0, rtol=2e-3)
    assert body.volume() == pytest.approx(1 / 32, rel=5e-3)
    assert affine_energy(body) == pytest.approx(16.0, rel=2e-3)


def test_asymmetric_box_gauge(box1):
    # plus mode for (1_[0,1], 2 * 1_[0,1]): g_+(t) = min(t, 1), G = 4
    body = pi_body(box1, box1.scaled(2.0), P1, "plus", Q1)
    assert np.allclose(body.gauge_ps, 4.0, rtol=2e-3)
    assert affine_energy(body) == pytest.approx(8.0, rel=2e-3)


def test_shift_profile_tail_constants(pair2):
    f, h = pair2
    for mode, expect in (("abs", None), ("plus", "f"), ("minus", "h")):
        prof = shift_profile(f, h, [0.6, 0.8], mode, p=2.0)
        fp, hp = prof.f_norm_p, prof.h_norm_p
        want = {"abs": fp + hp, "plus": fp, "minus": hp}[mode]
        far = shift_profile(f, h, [0.6, 0.8], mode, t_nodes=[prof.t_star, prof.t_star + 1.0], p=2.0)
        assert np.allclose(far.g, want, rtol=1e-10)
        assert np.all(prof.g >= 0)


def test_modes_add_up_at_every_node(pair2):
    f, h = pair2
    q = sphere_quadrature(2, 32)
    eps, K = 0.1, Ball(1.0, 2)
    G = {m: pi_body(f, h, P2, m, q, eps, K).gauge_ps for m in ("abs", "plus", "minus")}
    assert np.allclose(G["abs"], G["plus"] + G["minus"], rtol=1e-10, atol=0)


def test_minus_body_is_antipodal_to_plus_body_of_swapped_pair(pair2):
    f, h = pair2
    q = sphere_quadrature(2, 32)
    minus = pi_body(f, h, P2, "minus", q).gauge_ps
    plus_swapped = pi_body(h, f, P2, "plus", q).gauge_ps
    assert np.allclose(minus, plus_swapped[q.antipode], rtol=1e-10)


def test_distinct_pair_gives_degenerate_body(pair2):
    f, h = pair2
    body = pi_body(f, h, P2, "abs", sphere_quadrature(2, 16))
    assert body.degenerate
    assert affine_energy(body) == math.inf
    assert volume_functional(body) == math.inf
    assert body.volume() == 0.0
    g = pi_gauge(f, h, [1.0, 0.0], P2)
    assert g.divergent and g.value == math.inf


@pytest.mark.parametrize("K", [Ball(1.0, 2), Ellipsoid.from_semiaxes([1.5, 0.6])])
def test_seminorm_identity_with_matched_truncation(gauss2, K):
    q = sphere_quadrature(2, 128)
    for eps in (None, 0.1):
        pol = KernelPolicy.truncate(eps) if eps else KernelPolicy.exact()
        direct = frac_seminorm(gauss2, gauss2, K, P2, "abs", pol).value
        body = pi_body(gauss2, gauss2, P2, "abs", q, eps, K if eps else None)
        assert seminorm_from_body(body, K) == pytest.approx(direct, rel=1e-3)


def test_asymmetric_identity():
    f = sample("gaussian([0.1,0],0.3,1)", 2, 2.8, 48)
    h = sample("gaussian([0,0],0.45,1.3)", 2, 2.8, 48)
    K = random_star_body(sphere_quadrature(2, 128), 3)
    q = sphere_quadrature(2, 128)
    direct = frac_seminorm(f, h, K, P2, "plus").value
    assert math.isfinite(direct)
    body = pi_body(f, h, P2, "plus", q)
    assert seminorm_from_body(body, K) == pytest.approx(direct, rel=1e-2)


def test_energy_homogeneity(gauss2):
    body = pi_body(gauss2, gauss2, P2, "abs", sphere_quadrature(2, 32))
    c = 1.7
    # scaling the body by c multiplies gauge^{ps} by c^{-ps}
    scaled = PolarProjectionBody(body.quad, body.gauge_ps * c ** (-P2.ps), "abs", P2)
    assert affine_energy(scaled) == pytest.approx(c ** (-P2.ps) * affine_energy(body), rel=1e-12)


def test_exact_dilation_scaling(gauss2):
    # f(r x): |Pi|^{-ps/n} scales by r^{ps - n}
    q = sphere_quadrature(2, 32)
    base = volume_functional(pi_body(gauss2, gauss2, P2, "abs", q))
    for r in (0.5, 2.0):
        fr = dilated(gauss2, r)
        v = volume_functional(pi_body(fr, fr, P2, "abs", q))
        assert v == pytest.approx(r ** (P2.ps - 2) * base, rel=1e-10)


def test_gauges_positive_and_bounded(gauss2):
    q = sphere_quadrature(2, 32)
    for s in (0.2, 0.5, 0.9):
        par = validate_params(2, s, 2, need_projection_range=True)
        body = pi_body(gauss2, gauss2, par, "abs", q)
        assert np.all(body.gauge_ps > 0)
        bound, r, A = radial_bound(gauss2, gauss2, par)
        assert A > 0 and np.max(body.radial_values) <= bound


def test_mass_radius(gauss2):
    r = mass_radius(gauss2, 2, 0.9)
    # for exp(-|x|^2/sigma^2): mass fraction within r is 1 - exp(-r^2/sigma^2)
    assert r == pytest.approx(0.5 * math.sqrt(math.log(10)), abs=2 * gauss2.spacing)


def test_projection_range_enforced(gauss2):
    with pytest.raises(ValueError):
        pi_body(gauss2, gauss2, Params(2, 0.5, 5.0), "abs", sphere_quadrature(2, 8))


def test_body_file_round_trip(tmp_path, gauss2):
    body = pi_body(gauss2, gauss2, P2, "abs", sphere_quadrature(2, 16))
    write_projection_body(tmp_path / "pi.body", body)
    back = read_projection_body(tmp_path / "pi.body")
    assert back.mode == "abs" and back.params.ps == P2.ps
    assert np.allclose(back.gauge_ps, body.gauge_ps, rtol=1e-13)
    assert affine_energy(back) == pytest.approx(affine_energy(body), rel=1e-13)
