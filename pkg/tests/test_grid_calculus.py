import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from heislab.fields import ScalarField, coord_symbols, random_polynomial
from heislab.grid_calculus import (Box, GridField, NormSpec, chain_rule_residual, horizontal_derivative,
                                   horizontal_gradient, horizontal_hessian, lp_norm, sobolev_h_norm)
from heislab.report import fit_rate

x, y, t = coord_symbols(1)


def test_interpolation_error_on_x_squared(rng):
    g = GridField.sample(lambda P: P[..., 0] ** 2, Box.cube(1.0), 0.1)
    P = rng.uniform(-1, 1, (500, 3))
    assert np.max(np.abs(g(P) - P[:, 0] ** 2)) <= 0.1**2 / 4


def test_derivatives_of_t_at_123():
    f = ScalarField(t)
    p = np.array([1.0, 2.0, 3.0])
    assert horizontal_derivative(f, 1, p) == 4.0
    assert horizontal_derivative(f, 2, p) == -2.0
    assert np.array_equal(horizontal_gradient(f, p), [4.0, -2.0])
    assert np.array_equal(horizontal_hessian(f, p), [[0.0, -2.0], [2.0, 0.0]])


def test_grid_stencil_exact_on_quadratics(rng):
    f = random_polynomial(rng, 1, 2)
    g = GridField.sample(f, Box.cube(1.0), 0.1)
    nodes = g.nodes()
    for j in (1, 2, 3):
        assert np.max(np.abs(g.Z(j).values - f.Z(j)(nodes))) < 1e-9


def test_lp_norm_of_x_on_unit_cube():
    spec = NormSpec(2.0, Box((0, 0, 0), (1, 1, 1)))
    assert lp_norm(ScalarField(x), spec, 0.05) == pytest.approx(1 / np.sqrt(3), abs=1e-3)


def test_sobolev_norm_of_t():
    assert sobolev_h_norm(ScalarField(t), 1, NormSpec(1.0, Box.cube(1.0)), 0.05) == pytest.approx(20.0, abs=1e-9)


def test_tu_is_quarter_commutator(rng):
    P = rng.uniform(-2, 2, (1000, 3))
    for _ in range(5):
        u = random_polynomial(rng, 1, 3)
        lhs = 0.25 * (u.Z(1).Z(2)(P) - u.Z(2).Z(1)(P))
        assert np.max(np.abs(lhs - u.Z(3)(P))) < 1e-10


@given(st.floats(0.1, 10), st.sampled_from([1.0, 2.0, 3.0]))
def test_norm_homogeneous_and_monotone(c, s):
    f = ScalarField(sp.sin(x) * sp.cos(t) + y)
    big, small = Box.cube(1.0), Box.cube(0.5)
    base = lp_norm(f, NormSpec(s, big), 0.1)
    assert lp_norm(f * c, NormSpec(s, big), 0.1) == pytest.approx(c * base, rel=1e-12)
    # 0.5-cube cells are a subset of the 1-cube cells at h = 0.1
    assert lp_norm(f, NormSpec(s, small), 0.1) <= base


def test_chain_rule_analytic():
    assert chain_rule_residual(ScalarField(x), lambda r: r**2, 1, Box.cube(1.0), 0.1, mode="analytic") <= 1e-10


def test_chain_rule_grid_is_second_order():
    u = ScalarField(sp.sin(x) * sp.cos(t))
    hs = [0.1, 0.05, 0.025]
    res = [chain_rule_residual(u, lambda r: r**2, 1, Box.cube(1.0), h, mode="grid") for h in hs]
    assert fit_rate(hs, res, min_points=3).rate == pytest.approx(2.0, abs=0.2)


def test_gridfield_round_trip(tmp_path, rng):
    g = GridField(Box((0, 0, 0), (1, 2, 1)), 0.25, rng.standard_normal((5, 9, 5)))
    path = g.save(tmp_path / "u.npz")
    back = GridField.load(path)
    assert np.array_equal(back.values, g.values)
    assert back.header() == g.header()


def test_gridfield_rejects_foreign_file(tmp_path):
    np.savez(tmp_path / "x.npz", header=np.array('{"format": "other"}'), values=np.zeros(3))
    with pytest.raises(ValueError):
        GridField.load(tmp_path / "x.npz")


def test_gridfield_shape_mismatch():
    with pytest.raises(ValueError):
        GridField(Box.cube(1.0), 0.5, np.zeros((3, 3, 3)))
