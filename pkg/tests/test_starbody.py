import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracgeo.sphere import sphere_quadrature, unit_ball_volume
from fracgeo.starbody import (Ball, BodyFormatError, Ellipsoid, LinearImage, LqBall, Sampled,
                              dilate, dual_mixed_volume, dual_mixed_volume_bound,
                              moment_body_norm, parse_body, parse_body_arg, q_radial_sum,
                              random_star_body, read_body, reflect, schwarz_symmetral, volume,
                              write_body)
from fracgeo.verify import VIOLATED, verify_dual_brunn_minkowski, verify_dual_mixed

Q2 = sphere_quadrature(2, 256)
Q3 = sphere_quadrature(3, 256)


def test_ball_and_ellipse_volumes():
    assert volume(Ball(2.0, 2), Q2) == pytest.approx(4 * math.pi, rel=1e-12)
    assert volume(Ellipsoid.from_semiaxes([2.0, 0.5]), Q2) == pytest.approx(math.pi, rel=1e-10)
    assert volume(Ball(1.0, 3), Q3) == pytest.approx(4 * math.pi / 3, rel=1e-12)
    assert volume(Ball(1.5, 1), sphere_quadrature(1)) == pytest.approx(3.0)


def test_lq_ball_area():
    # |{|x|_1 <= 1}| = 2 in the plane; the corners limit accuracy to first order
    q = sphere_quadrature(2, 4096)
    assert volume(LqBall(1.0, 1.0), q) == pytest.approx(2.0, rel=1e-4)


def test_linear_image_volume_scales_with_determinant():
    M = np.array([[2.0, 1.0], [0.0, 0.75]])
    K = LinearImage(M, Ball(1.0, 2))
    assert volume(K, Q2) == pytest.approx(abs(np.linalg.det(M)) * math.pi, rel=1e-8)


bodies = st.sampled_from([Ball(1.3, 2), Ellipsoid.from_semiaxes([2.0, 0.5]), LqBall(0.7, 1.0),
                          LinearImage([[1.0, 0.6], [0.0, 1.0]], LqBall(3.0, 1.0)),
                          random_star_body(Q2, 3)])
points = st.lists(st.floats(-5, 5), min_size=2, max_size=2).filter(lambda v: np.hypot(*v) > 1e-3)


@given(bodies, points)
def test_gauge_radial_reciprocity(K, x):
    x = np.array(x)
    r = np.linalg.norm(x)
    assert K.gauge(x) * K.radial(x / r)[0] == pytest.approx(r, rel=1e-10)


@given(bodies, points, st.floats(0.01, 100))
def test_gauge_is_one_homogeneous(K, x, c):
    x = np.array(x)
    assert K.gauge(c * x) == pytest.approx(c * K.gauge(x), rel=1e-12)


@given(st.integers(0, 10_000), st.floats(0.1, 10))
def test_volume_homogeneity(seed, c):
    K = random_star_body(Q2, seed)
    cK = LinearImage(c * np.eye(2), K)
    assert volume(cK, Q2) == pytest.approx(c ** 2 * volume(K, Q2), rel=1e-10)
    assert volume(dilate(K, c), Q2) == pytest.approx(c ** 2 * volume(K, Q2), rel=1e-10)


@given(st.integers(0, 10_000))
def test_reflection_preserves_volume_exactly(seed):
    K = random_star_body(Q2, seed)
    assert volume(reflect(K), Q2) == pytest.approx(volume(K, Q2), rel=1e-14)
    assert np.allclose(reflect(K).rho, K.rho[Q2.antipode])


def test_random_bodies_are_reproducible_and_positive():
    a = random_star_body(Q3, 7)
    b = random_star_body(Q3, 7)
    assert np.array_equal(a.rho, b.rho)
    assert np.all(a.rho > math.exp(-0.8)) and np.all(a.rho < math.exp(0.8))
    assert not np.array_equal(a.rho, random_star_body(Q3, 8).rho)


def test_sampled_interpolation_reproduces_nodes():
    K = random_star_body(Q2, 1)
    assert np.allclose(K.radial(Q2.nodes), K.rho, rtol=1e-12)
    K3 = random_star_body(sphere_quadrature(3, 64), 1)
    assert np.allclose(K3.radial(K3.quad.nodes), K3.rho, rtol=1e-10)


def test_sampled_rejects_nonpositive_radii():
    with pytest.raises(ValueError):
        Sampled(Q2, np.zeros(len(Q2)))


def test_schwarz_symmetral_has_same_volume():
    K = random_star_body(Q3, 2)
    B = schwarz_symmetral(K, Q3)
    assert volume(B, Q3) == pytest.approx(volume(K, Q3), rel=1e-12)


def test_moment_body_norm_ball():
    # (n+p)/2 * int_{B^2} x_1^2 = 2 * pi/4
    assert moment_body_norm(Ball(1.0, 2), [1.0, 0.0], 2, Q2) ** 2 == pytest.approx(math.pi / 2)
    assert moment_body_norm(Ball(1.0, 2), [0.0, 0.0], 2, Q2) == 0.0
    vals = [moment_body_norm(Ball(1.0, 2), [math.cos(a), math.sin(a)], 2, Q2)
            for a in np.linspace(0, 3, 7)]
    assert np.ptp(vals) < 1e-10


@pytest.mark.parametrize("alpha", [-1.0, 0.5, 1.5, 3.0])
def test_dual_mixed_volume_of_body_with_itself(alpha):
    K = random_star_body(Q2, 11)
    assert dual_mixed_volume(K, K, alpha, Q2) == pytest.approx(volume(K, Q2), rel=1e-10)


def test_dual_mixed_volume_constant_radial_oracle():
    # (1/2) * 2 pi * 2^{3} * 1^{-1} = 8 pi
    assert dual_mixed_volume(Ball(2.0, 2), Ball(1.0, 2), -1.0, Q2) == pytest.approx(8 * math.pi)


@given(st.integers(0, 10_000), st.integers(0, 10_000), st.integers(0, 10_000),
       st.sampled_from([-1.0, 0.5, 1.5, 2.5]))
def test_dual_mixed_volume_additive_under_radial_sum(sk, s1, s2, alpha):
    # rho^alpha of the alpha-radial sum is rho_1^alpha + rho_2^alpha, and the
    # dual mixed volume is linear in rho_L^alpha
    K, L1, L2 = (random_star_body(Q2, s) for s in (sk, s1, s2))
    left = dual_mixed_volume(K, q_radial_sum(L1, L2, alpha, Q2), alpha, Q2)
    right = dual_mixed_volume(K, L1, alpha, Q2) + dual_mixed_volume(K, L2, alpha, Q2)
    assert left == pytest.approx(right, rel=1e-10)


@given(st.integers(0, 10_000), st.integers(0, 10_000), st.sampled_from([-1.0, -0.3, 0.4, 1.7, 2.6]))
def test_dual_mixed_volume_inequality(sk, sl, alpha):
    K, L = random_star_body(Q2, sk), random_star_body(Q2, sl)
    vm = dual_mixed_volume(K, L, alpha, Q2)
    bound = volume(K, Q2) ** ((2 - alpha) / 2) * volume(L, Q2) ** (alpha / 2)
    assert bound == pytest.approx(dual_mixed_volume_bound(K, L, alpha, Q2), rel=1e-14)
    if 0 < alpha < 2:
        assert vm <= bound * (1 + 1e-12)
    else:
        assert vm >= bound * (1 - 1e-12)
    assert verify_dual_mixed(K, L, alpha, Q2).verdicts[0]["verdict"] != VIOLATED


@pytest.mark.parametrize("alpha", [-1.0, 0.5, 3.0])
def test_dilates_give_equality_to_machine_precision(alpha):
    K = random_star_body(Q2, 5)
    L = dilate(K, 1.7)
    vm = dual_mixed_volume(K, L, alpha, Q2)
    assert vm == pytest.approx(dual_mixed_volume_bound(K, L, alpha, Q2), rel=1e-10)


@given(st.integers(0, 10_000), st.integers(0, 10_000), st.floats(0.2, 4.0))
def test_dual_brunn_minkowski(sk, sl, q):
    K, L = random_star_body(Q2, sk), random_star_body(Q2, sl)
    rho = (K.rho ** -q + L.rho ** -q) ** (-1 / q)
    vol = Q2.integrate(rho ** 2) / 2
    assert vol ** (-q / 2) >= (volume(K, Q2) ** (-q / 2) + volume(L, Q2) ** (-q / 2)) * (1 - 1e-12)
    rep = verify_dual_brunn_minkowski(K, L, q, Q2)
    assert not rep.violated


def test_body_file_round_trip(tmp_path):
    K = random_star_body(Q3, 4)
    write_body(tmp_path / "k.body", K, Q3, {"mode": "abs"})
    back, header = read_body(tmp_path / "k.body")
    assert header["mode"] == "abs"
    assert np.allclose(back.rho, K.rho, rtol=1e-15)
    assert volume(back, back.quad) == pytest.approx(volume(K, Q3), rel=1e-14)


def test_body_file_without_weights_uses_default_layout():
    q = sphere_quadrature(2, 4)
    rows = "\n".join(f"{x} {y} 1.0" for x, y in q.nodes)
    body, _ = parse_body(f"FRACGEO-BODY v1\nn=2\nnodes=4\n{rows}\n")
    assert volume(body, body.quad) == pytest.approx(math.pi)


@pytest.mark.parametrize("text", ["n=2\nnodes=1\n1 0 1", "FRACGEO-BODY v1\nn=2\nnodes=2\n1 0 1",
                                  "FRACGEO-BODY v1\nn=2\nnodes=2\n1 0 1 3.14\n-1 0 -1 3.14"])
def test_body_format_errors(text):
    with pytest.raises(BodyFormatError):
        parse_body(text)


def test_body_arguments():
    assert volume(parse_body_arg("ball:2", 2), Q2) == pytest.approx(4 * math.pi)
    assert volume(parse_body_arg("semiaxes:2,0.5", 2), Q2) == pytest.approx(math.pi)
    assert volume(parse_body_arg("ellipsoid:0.5,2", 2), Q2) == pytest.approx(math.pi)
    assert isinstance(parse_body_arg("lq:4,1", 2), LqBall)
    with pytest.raises(ValueError):
        parse_body_arg("ellipsoid:1,2,3", 2)
    with pytest.raises(ValueError):
        parse_body_arg("blob:1", 2)


def test_unit_ball_volume_matches_quadrature():
    for n, q in ((2, Q2), (3, Q3)):
        assert volume(Ball(1.0, n), q) == pytest.approx(unit_ball_volume(n), rel=1e-12)
