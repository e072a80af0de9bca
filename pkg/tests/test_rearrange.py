import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracgeo.grid import GridFunction, common_grid, embed, lp_norm
from fracgeo.rearrange import (cell_shell_tolerance, distribution_profile, rearrange,
                               riesz_functional, superlevel_measure)
from fracgeo.suite import random_indicator
from conftest import sample


def test_superlevel_measure_counts_cells():
    f = GridFunction(1, 1.0, 4, [0, 1, 3, 2])
    assert superlevel_measure(f, 2) == pytest.approx(1.0)
    assert superlevel_measure(f, 0.5) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        superlevel_measure(f, 0)


def test_distribution_profile_is_non_increasing():
    f = sample("sum(gaussian([0.3,0],0.3,1),box_indicator([-1,-1],[0,0],0.4))", 2, 2.0, 40)
    prof = distribution_profile(f)
    assert np.all(np.diff(prof.thresholds) > 0)
    assert np.all(np.diff(prof.measures) <= 0)
    assert prof.measures[-1] == pytest.approx(np.sum(f.values == f.values.max()) * f.cell_volume)


def test_equimeasurable_at_m256():
    f = sample("sum(affine([[1.5,0],[0,0.5]],[0.4,0.2],gaussian([0,0],0.3,1)),"
               "box_indicator([-1,-1],[-0.2,0.1],0.6))", 2, 3.2, 256)
    fs = rearrange(f)
    for p in (1, 2, 3):
        assert lp_norm(fs, p) == pytest.approx(lp_norm(f, p), rel=5e-3)


def test_rearrangement_is_radially_non_increasing():
    f = random_indicator(2, 3)
    fs = rearrange(f)
    r = np.linalg.norm(fs.centers().reshape(-1, 2), axis=1)
    v = fs.values.ravel()
    order = np.argsort(r, kind="stable")
    assert np.all(np.diff(v[order]) <= 0)


def test_one_dimensional_box_becomes_centred_interval():
    f = sample("box_indicator([0.3],[1.3],1)", 1, 2.0, 200)
    fs = rearrange(f)
    x = fs.axis_centers()
    assert np.array_equal(fs.values > 0, np.abs(x) < 0.5)


def test_idempotence_within_one_cell_shell():
    f = random_indicator(2, 9)
    once = rearrange(f)
    twice = rearrange(once)
    a, b = common_grid(once, twice)
    diff = np.sum(np.abs(a.values - b.values)) * a.cell_volume
    assert diff <= np.max(f.values) * cell_shell_tolerance(once)


@given(st.integers(0, 10_000))
def test_rearrangement_is_monotone(seed):
    rng = np.random.default_rng(seed)
    f = GridFunction(2, 1.0, 16, rng.random((16, 16)) * (rng.random((16, 16)) < 0.5))
    h = f.with_values(f.values + rng.random((16, 16)) * (rng.random((16, 16)) < 0.3))
    fs, hs = rearrange(f), rearrange(h)
    L = max(fs.L, hs.L)
    fs, hs = embed(fs, L), embed(hs, L)
    assert np.all(fs.values <= hs.values)


@given(st.integers(0, 10_000), st.sampled_from([1, 2]))
def test_rearrangement_preserves_every_norm_exactly_in_the_grid_model(seed, n):
    rng = np.random.default_rng(seed)
    f = GridFunction(n, 1.0, 12, rng.random((12,) * n))
    fs = rearrange(f)
    for p in (1, 2, 3):
        assert lp_norm(fs, p) == pytest.approx(lp_norm(f, p), rel=1e-12)


def test_riesz_triangle_oracle():
    # int int 1_[0,1](x) 1_[0,1](x - y) 1_[0,1](y) dx dy = 1/2
    f = sample("box_indicator([0],[1],1)", 1, 2.0, 400)
    assert riesz_functional(f, f, f) == pytest.approx(0.5, rel=1e-2)


def test_riesz_with_zero_function():
    f = sample("box_indicator([0],[1],1)", 1, 2.0, 40)
    assert riesz_functional(f, f, f.scaled(0.0)) == 0.0


def test_riesz_centred_balls_are_already_optimal():
    f = sample("ball_indicator([0,0],0.6,1)", 2, 1.5, 96)
    k = sample("ball_indicator([0,0],0.8,1)", 2, 1.5, 96)
    g = sample("ball_indicator([0,0],0.5,1)", 2, 1.5, 96)
    orig = riesz_functional(f, k, g)
    rear = riesz_functional(rearrange(f), rearrange(k), rearrange(g))
    assert rear == pytest.approx(orig, rel=1e-2)


@given(st.integers(0, 10_000), st.sampled_from([1, 2]))
def test_riesz_inequality(seed, n):
    f, k, g = (random_indicator(n, seed + 1000 * j, m=48 if n == 2 else 200) for j in range(3))
    orig = riesz_functional(f, k, g)
    rear = riesz_functional(rearrange(f), rearrange(k), rearrange(g))
    assert rear >= orig * (1 - 1e-9)
