import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracgeo.correlation import pair_correlation, single_offset, support_offsets, tail_constant


def brute(fv, hv, mode, p, dv, k):
    """sum_x phi(f(x + k), h(x)) over a zero-padded lattice."""
    pad = max(abs(int(v)) for v in k) + 1
    F = np.pad(fv, pad)
    H = np.pad(hv, pad)
    shifted = np.roll(F, [-int(v) for v in k], axis=tuple(range(fv.ndim)))
    d = shifted - H
    if mode == "abs":
        phi = np.abs(d) ** p
    elif mode == "plus":
        phi = np.maximum(d, 0) ** p
    else:
        phi = np.maximum(-d, 0) ** p
    return phi.sum() * dv


arrays = st.integers(0, 10_000).map(lambda s: np.random.default_rng(s))


@given(arrays, st.sampled_from(["abs", "plus", "minus"]), st.sampled_from([1.0, 1.5, 2.0, 3.0]),
       st.sampled_from([1, 2, 3]))
def test_pair_correlation_matches_brute_force(rng, mode, p, n):
    m = {1: 12, 2: 6, 3: 4}[n]
    fv = rng.random((m,) * n) * (rng.random((m,) * n) < 0.7)
    hv = rng.random((m,) * n) * (rng.random((m,) * n) < 0.7)
    klo = -np.full(n, m + 1)
    khi = np.full(n, m + 1)
    S, tail = pair_correlation(fv, hv, mode, p, 0.5, klo, khi)
    for _ in range(5):
        k = rng.integers(-m - 1, m + 2, size=n)
        assert S[tuple(k - klo)] == pytest.approx(brute(fv, hv, mode, p, 0.5, k), rel=1e-12, abs=1e-14)
        assert single_offset(fv, hv, mode, p, 0.5, k) == pytest.approx(S[tuple(k - klo)], rel=1e-12, abs=1e-14)
    corner = tuple(np.zeros(n, dtype=int))
    assert S[corner] == pytest.approx(tail, rel=1e-12)


@given(arrays, st.sampled_from([1.0, 2.0, 2.5]))
def test_abs_is_plus_plus_minus(rng, p):
    fv = rng.random((8, 8))
    hv = rng.random((8, 8))
    klo, khi = np.array([-9, -9]), np.array([9, 9])
    a, _ = pair_correlation(fv, hv, "abs", p, 1.0, klo, khi)
    b, _ = pair_correlation(fv, hv, "plus", p, 1.0, klo, khi)
    c, _ = pair_correlation(fv, hv, "minus", p, 1.0, klo, khi)
    assert np.allclose(a, b + c, rtol=1e-12, atol=1e-13)


def test_tail_constants():
    fv = np.array([1.0, 2.0, 0.0])
    hv = np.array([0.0, 3.0, 0.0])
    assert tail_constant(fv, hv, "abs", 2, 1.0) == 14.0
    assert tail_constant(fv, hv, "plus", 2, 1.0) == 5.0
    assert tail_constant(fv, hv, "minus", 2, 1.0) == 9.0


def test_support_offsets():
    lo, hi = support_offsets((np.array([2]), np.array([5])), (np.array([1]), np.array([3])))
    assert lo[0] == -1 and hi[0] == 4
