import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from heislab.fields import compact_bump
from heislab.grid_calculus import Box, GridField, NormSpec, cell_centers, lattice_points, lp_from_values, lp_norm
from heislab.heis_core import gauge
from heislab.mollification import (Mollifier, convolve_at, group_convolve, kernel_derivative,
                                   kernel_derivative_chain, lattice_integral, scale)
import oracles

RHO = Mollifier()
w_pts = arrays(np.float64, 3, elements=st.floats(-0.5, 0.5, allow_nan=False))


def test_mass_by_lattice_and_by_adaptive_quadrature():
    assert RHO.mass() == pytest.approx(1.0, abs=1e-8)
    assert oracles.kernel_mass(RHO, RHO.half_widths) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("eps", [0.5, 0.1])
def test_scaled_mass(eps):
    k = scale(RHO, eps)
    assert oracles.kernel_mass(k, k.support_box().hi) == pytest.approx(1.0, abs=1e-6)
    Q, wt = k.lattice()
    assert float(np.sum(wt * k(Q))) == pytest.approx(1.0, abs=1e-8)


@given(w_pts)
def test_even_nonnegative_and_supported_in_unit_ball(w):
    assert RHO(w) == RHO(-w)
    assert RHO(w) >= 0
    if gauge(w) >= 1:
        assert RHO(w) == 0


def test_support_strictly_inside_unit_ball():
    assert RHO.support_radius < 1


@given(w_pts)
def test_inversion_rule_for_even_kernel(w):
    left = RHO.frame_derivatives(w, "left")
    right = RHO.frame_derivatives(-w, "right")
    assert np.allclose(right, -left, atol=1e-9 * max(1.0, np.abs(left).max()))


@pytest.mark.parametrize("eps", [0.3, 0.05])
def test_homogeneity_scaling_matches_chain_rule(eps, rng):
    k = scale(RHO, eps)
    Q = rng.uniform(-1, 1, (300, 3)) * k.support_box().hi
    for kind in ("left", "right"):
        for j in (1, 2, 3):
            a = kernel_derivative(k, kind, j)(Q)
            b = kernel_derivative_chain(k, kind, j)(Q)
            assert np.allclose(a, b, rtol=1e-10, atol=1e-10 * np.abs(a).max())
            assert np.allclose(k.frame_derivatives(Q, kind)[:, j - 1], a, rtol=1e-9, atol=1e-9 * np.abs(a).max())


def test_kernel_derivatives_have_zero_mass():
    for eps in (1.0, 0.2):
        k = scale(RHO, eps)
        Q, wt = k.lattice()
        d = k.frame_derivatives(Q)
        scale_ = np.abs(d).max() * float(np.sum(wt))
        assert np.all(np.abs(wt @ d) <= 1e-6 * max(1.0, scale_))


def test_analytic_derivative_against_finite_differences(rng):
    W = rng.uniform(-0.5, 0.5, (50, 3)) * RHO.half_widths
    errs = []
    for h in (1e-3, 5e-4):
        fd = np.stack([(RHO(W + h * e) - RHO(W - h * e)) / (2 * h) for e in np.eye(3) * RHO.half_widths], axis=-1)
        errs.append(np.abs(fd - RHO.euclidean_gradient(W) * RHO.half_widths).max())
    assert errs[1] < errs[0] / 3.5


def test_constant_is_reproduced():
    region = Box.cube(0.5)
    out = group_convolve(lambda P: np.ones(P.shape[:-1]), scale(RHO, 0.2), region, 0.1)
    assert np.max(np.abs(out.values - 1.0)) <= 1e-6


def test_affine_horizontal_is_reproduced(rng):
    P = rng.uniform(-1, 1, (200, 3))
    u = lambda Z: 2.0 * Z[..., 0] - 3.0 * Z[..., 1] + 0.5  # noqa: E731
    assert np.max(np.abs(convolve_at(u, scale(RHO, 0.3), P) - u(P))) <= 1e-12


def test_approximation_error_decreases():
    u = compact_bump((0.1, 0.0, 0.0), 0.8)
    pts, vol = cell_centers(Box.cube(0.9), 0.1)
    errs = [lp_from_values(convolve_at(u, scale(RHO, e), pts) - u(pts), vol, 1.0) for e in (0.4, 0.2, 0.1)]
    assert errs[0] > errs[1] > errs[2]


def test_young_inequality_on_random_grids(rng):
    box, region = Box.cube(0.6), Box.cube(0.3)
    for s in (1.0, 2.0):
        for _ in range(2):
            g = GridField(box, 0.1, rng.standard_normal((13, 13, 13)))
            out = group_convolve(g, scale(RHO, 0.2), region, 0.1)
            assert lp_norm(out, NormSpec(s, region), 0.1) <= lp_norm(g, NormSpec(s, box), 0.1) * (1 + 1e-4)


def test_derivative_commutes_with_convolution():
    """Grid derivative of u * rho_eps against u * Z_j rho_eps written on the kernel lattice."""
    u = compact_bump((0.0, 0.1, 0.0), 0.8)
    eps = 0.2
    region = Box.cube(0.3)
    errs, size = [], 0.0
    for h in (0.1, 0.05):
        conv = GridField(region, h, convolve_at(u, scale(RHO, eps), lattice_points(region, h)))
        nodes = conv.nodes()
        inner = (slice(1, -1),) * 3
        for j in (1, 2):
            # u * Z_j rho_eps (p) = -(1/eps) int u(p . delta_eps(w)) Z_j^r rho(w) dw for even rho
            ref = lattice_integral(nodes[inner], eps, RHO,
                                   lambda P, PW, W: -u(PW) * RHO.frame_derivatives(W, "right")[..., j - 1] / eps)
            errs.append(np.abs(conv.Z(j).values[inner] - ref).max())
            size = max(size, np.abs(ref).max())
    assert max(errs[2:]) < max(errs[:2]) / 3
    assert max(errs[2:]) < 0.01 * size


def test_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        scale(RHO, 0.0)


def test_convolution_region_must_fit():
    g = GridField(Box.cube(0.5), 0.1, np.zeros((11, 11, 11)))
    with pytest.raises(ValueError):
        group_convolve(g, scale(RHO, 0.2), Box.cube(0.5), 0.1)
