import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heislab import Box, HVectorField, ScalarField, compact_bump, contact_from_psi
from heislab.fields import coord_symbols
from heislab.lagrangian_flow import (TestFunction, distributional_residual, frozen_solution, mass,
                                     renormalization_residual, solve_continuity, solve_transport)
from heislab.report import fit_rate

x, y, t = coord_symbols(1)
LINEAR = contact_from_psi(ScalarField(x))
ZERO = ScalarField(0.0)
REGION, DOMAIN = Box.cube(1.0), Box.cube(2.0)
PHI = TestFunction(compact_bump((0.1, 0.2, 0.0), 0.7), 0.5)


@pytest.mark.parametrize("form,sign", [("plus", 1.0), ("minus", -1.0)])
def test_linear_generator_exact_solution(form, sign):
    times = [0.0, 0.25, 0.5]
    u = solve_transport(LINEAR, ZERO, ScalarField(y), times, Box.cube(0.5), 0.25, form, step=0.05)
    nodes = u.snapshots[0].nodes()
    for tau, snap in zip(times, u.snapshots):
        assert np.max(np.abs(snap.values - (nodes[..., 1] + sign * tau))) <= 1e-12


@settings(max_examples=10)
@given(st.floats(-2, 2))
def test_pure_reaction(k):
    b = HVectorField([0.0, 0.0, 0.0])
    times = [0.0, 0.5, 1.0]
    box = Box.cube(0.5)
    mult = solve_transport(b, ScalarField(k), ScalarField(1.0), times, box, 0.5)
    add = solve_transport(b, ScalarField(k), ScalarField(1.0), times, box, 0.5, reaction="additive")
    for tau, m, a in zip(times, mult.snapshots, add.snapshots):
        assert np.allclose(m.values, np.exp(-k * tau), rtol=1e-12)
        assert np.allclose(a.values, 1.0 - k * tau, atol=1e-12)


def test_maximum_principle():
    b = contact_from_psi(compact_bump(0.0, 1.5))
    u0 = compact_bump((0.2, 0.0, 0.0), 0.6)
    u = solve_transport(b, ZERO, u0, [0.0, 0.5, 1.0], Box.cube(0.8), 0.1, step=0.05)
    top = u.snapshots[0].values.max()
    for snap in u.snapshots:
        assert snap.values.max() <= u0.at((0.2, 0.0, 0.0)) + 1e-12
        assert snap.values.min() >= -1e-15
    assert top > 0


def test_residual_is_second_order_and_separated_from_control():
    hs, res, ren = [0.1, 0.05], [], []
    for h in hs:
        times = np.linspace(0.0, 0.5, int(round(0.5 / h)) + 1)
        u = solve_transport(LINEAR, ZERO, ScalarField(y), times, REGION, h, step=h, region=DOMAIN)
        res.append(abs(distributional_residual(u, ScalarField(y), LINEAR, ZERO, PHI)))
        ren.append(abs(renormalization_residual(u, lambda r: r**2, ScalarField(y), LINEAR, ZERO, PHI)))
        frozen = frozen_solution(ScalarField(y), times, REGION, h)
        assert abs(distributional_residual(frozen, ScalarField(y), LINEAR, ZERO, PHI)) >= 10 * res[-1]
        assert abs(renormalization_residual(frozen, lambda r: r**2, ScalarField(y), LINEAR, ZERO, PHI)) >= 10 * ren[-1]
    assert 1.6 <= fit_rate(hs, res, 2).rate <= 2.4
    assert 1.6 <= fit_rate(hs, ren, 2).rate <= 2.4


def test_residual_rejects_short_time_grid():
    u = frozen_solution(ScalarField(y), [0.0, 0.25], REGION, 0.25)
    with pytest.raises(ValueError):
        distributional_residual(u, ScalarField(y), LINEAR, ZERO, PHI)
    with pytest.raises(ValueError):
        distributional_residual(u, ScalarField(y), LINEAR, ZERO, TestFunction(PHI.eta, 0.2), form="sideways")


def test_test_function_profile():
    tau = np.linspace(0.0, 0.5, 11)
    assert PHI.chi(0.0) == 1.0 and PHI.chi(0.5) == 0.0
    d = 1e-6
    num = (PHI.chi(tau[1:-1] + d) - PHI.chi(tau[1:-1] - d)) / (2 * d)
    assert np.allclose(num, PHI.dchi(tau[1:-1]), atol=1e-8)


def test_continuity_conserves_mass():
    u = solve_continuity(LINEAR, compact_bump(0.0, 0.9), [0.0, 0.25, 0.5], DOMAIN, 0.05, step=0.05)
    masses = [mass(u, tau) for tau in u.times]
    assert max(masses) - min(masses) <= 1e-6 * masses[0]


def test_continuity_with_divergence():
    # b = x X has div 1, so the density decays like exp(-tau) along characteristics
    b = HVectorField([ScalarField(x), 0.0, 0.0])
    u = solve_continuity(b, ScalarField(1.0), [0.0, 0.5], Box.cube(0.5), 0.25, step=0.01)
    assert np.allclose(u.snapshots[1].values, np.exp(-0.5), rtol=1e-9)


def test_bad_inputs():
    with pytest.raises(ValueError):
        solve_transport(LINEAR, ZERO, ScalarField(y), [0.1, 0.2], REGION, 0.5)
    with pytest.raises(ValueError):
        solve_transport(LINEAR, ZERO, ScalarField(y), [0.0, 0.2], REGION, 0.5, reaction="none")
    with pytest.raises(ValueError):
        solve_transport(LINEAR, ZERO, ScalarField(y), [0.0, 0.2], REGION, 0.5, form="sideways")
