import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracgeo.shiftmodel import build_shift_model
from conftest import sample


def test_box_model_is_exact_between_lattice_points(box1):
    # g(z) = 2 min(|z|, 1) for f = h = 1_[0,1]
    model = build_shift_model(box1, box1, "abs", 2.0)
    assert model.beta == pytest.approx(1.0, abs=1e-9)
    z = np.array([0.0013, 0.01, 0.037, 0.5, 0.999, 1.3, -0.42])
    g = model(z[:, None] / model.spacing)
    assert np.allclose(g, 2 * np.minimum(np.abs(z), 1.0), rtol=1e-10, atol=1e-12)


def test_lattice_values_reproduced():
    f = sample("gaussian([0.1,0],0.3,1)", 2, 2.0, 24)
    h = sample("gaussian([0,0.2],0.35,0.8)", 2, 2.0, 24)
    model = build_shift_model(f, h, "plus", 2.0)
    ks = np.array([[0, 0], [1, 0], [0, -1], [3, 2], [-5, 4]])
    assert np.allclose(model(ks.astype(float)), model.lattice(ks), rtol=1e-14)


def test_smooth_data_gives_quadratic_head():
    f = sample("gaussian([0,0],0.5,1)", 2, 3.0, 64)
    model = build_shift_model(f, f, "abs", 2.0)
    assert model.beta == pytest.approx(2.0, abs=0.05)


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_modes_add_up_at_every_shift(u):
    f = sample("gaussian([0.1,0],0.3,1)", 2, 2.0, 16)
    h = sample("gaussian([0,0.2],0.35,0.8)", 2, 2.0, 16)
    a, b, c = (build_shift_model(f, h, m, 2.0) for m in ("abs", "plus", "minus"))
    u = np.array([u])
    assert a(u)[0] == pytest.approx(b(u)[0] + c(u)[0], rel=1e-12, abs=1e-14)


def test_tail_beyond_exit_radius():
    f = sample("gaussian([0.1,0],0.3,1)", 2, 2.0, 16)
    h = sample("gaussian([0,0.2],0.35,0.8)", 2, 2.0, 16)
    model = build_shift_model(f, h, "abs", 2.0)
    xi = np.array([[0.6, 0.8]])
    r = model.exit_radius(xi)[0]
    assert model((r + 0.5) * xi)[0] == pytest.approx(model.tail, rel=1e-12)


def test_empty_pair():
    f = sample("gaussian([0],0.3,1)", 1, 2.0, 16).scaled(0.0)
    model = build_shift_model(f, f, "abs", 2.0)
    assert model.empty and model(np.array([[0.3]]))[0] == 0.0
