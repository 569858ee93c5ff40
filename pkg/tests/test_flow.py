import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heislab import Box, HVectorField, ScalarField, compact_bump, contact_from_psi, perturbed_vertical
from heislab.contact_fields import TimeDependentField
from heislab.fields import coord_symbols
from heislab.lagrangian_flow import (DegenerateJacobian, FlowEscapeError, TimeField, flow_points,
                                     horizontality_defect, integrate_flow, pushforward_bound, semigroup_defect,
                                     solve_continuity)
from heislab.grid_calculus import GridField

x, y, t = coord_symbols(1)
BUMP = contact_from_psi(compact_bump(0.0, 1.5))


def _initials(rng, m=20, half=0.5):
    return rng.uniform(-half, half, (m, 3))


@settings(max_examples=15)
@given(st.floats(-2, 2), st.floats(0.1, 1.0))
def test_constant_generator_moves_vertically(k, tau):
    b = contact_from_psi(ScalarField(k))
    P = np.array([[0.3, -0.2, 0.1], [0.0, 0.0, 0.0]])
    Q = flow_points(b, P, tau, step=0.05)
    assert np.allclose(Q, P + np.array([0, 0, -4 * k * tau]), atol=1e-12)


def test_linear_generator_flow_is_explicit(rng):
    # psi = x gives b = -Y - 4x T, whose coordinate velocity is (0, -1, -2x)
    b = contact_from_psi(ScalarField(x))
    P = _initials(rng)
    fl = integrate_flow(b, P, 0.7, 0.01)
    tau = fl.times[-1]
    exact = np.stack([P[:, 0], P[:, 1] - tau, P[:, 2] - 2 * P[:, 0] * tau], axis=-1)
    assert np.max(np.abs(fl.final - exact)) <= 1e-12
    assert np.max(np.abs(fl.logdet)) <= 1e-12
    assert horizontality_defect(fl) <= 1e-12


def test_contact_flow_preserves_horizontal_frame(rng):
    fl = integrate_flow(BUMP, _initials(rng), 1.0, 1e-3, record=100)
    assert horizontality_defect(fl) <= 1e-6
    assert fl.logdet_drift() <= 1e-8


def test_noncontact_control_tilts_horizontal_frame(rng):
    b = perturbed_vertical(compact_bump(0.0, 1.5), 1.0)
    fl = integrate_flow(b, _initials(rng), 1.0, 2e-3, record=50)
    assert horizontality_defect(fl) >= 0.1
    assert fl.logdet_drift() <= 1e-8


def test_semigroup(rng):
    assert semigroup_defect(BUMP, _initials(rng, 5), 0.3, 0.4, 1e-3) <= 1e-8


def test_backward_flow_inverts_forward(rng):
    P = _initials(rng, 10)
    Q = flow_points(BUMP, P, 0.5, 1e-3)
    assert np.max(np.abs(flow_points(BUMP, Q, -0.5, 1e-3) - P)) <= 1e-10


def test_pushforward_density_bound(rng):
    fl = integrate_flow(BUMP, _initials(rng), 1.0, 1e-2)
    measured, theory, ok = pushforward_bound(fl, BUMP, h=0.1)
    assert ok and measured <= theory * 1.05
    assert theory >= 1.0


def test_time_dependent_field_interpolates(rng):
    b0 = contact_from_psi(ScalarField(0.0))
    b1 = contact_from_psi(ScalarField(1.0))
    tf = TimeDependentField([0.0, 1.0], [b0, b1])
    # vertical speed -4 tau, so t moves by -2 tau^2
    P = _initials(rng, 4)
    Q = flow_points(tf, P, 1.0, 0.01)
    assert np.allclose(Q, P + np.array([0, 0, -2.0]), atol=1e-12)
    assert tf.is_contact


def test_escape_is_detected():
    b = contact_from_psi(ScalarField(x))
    with pytest.raises(FlowEscapeError):
        integrate_flow(b, np.zeros((1, 3)), 2.0, 0.01, region=Box.cube(1.0))


def test_degenerate_jacobian_is_reported():
    # the backward flow of dy/dtau = 50 y shrinks volumes by exp(-50)
    b = HVectorField([0.0, ScalarField(50 * y), 0.0])
    with pytest.raises(DegenerateJacobian):
        solve_continuity(b, ScalarField(1.0), [0.0, 1.0], Box.cube(0.2), 0.1, step=0.01)


def test_record_modes(rng):
    P = _initials(rng, 3)
    assert integrate_flow(BUMP, P, 0.1, 0.01, record="final").times.size == 2
    assert integrate_flow(BUMP, P, 0.1, 0.01, record=5).times.size == 3
    text = integrate_flow(BUMP, P, 0.1, 0.01, record="final").trajectory_csv()
    assert text.splitlines()[0] == "index,tau,x,y,t,logdet"
    assert len(text.splitlines()) == 1 + 3 * 2


def test_timefield_roundtrip(tmp_path):
    box = Box.cube(0.5)
    snaps = [GridField.sample(ScalarField(x + k * t), box, 0.25) for k in range(3)]
    tf = TimeField([0.0, 0.5, 1.0], snaps)
    back = TimeField.load(tf.save(tmp_path / "tf"))
    assert np.array_equal(back.times, tf.times)
    for a, b in zip(back.snapshots, snaps):
        assert np.array_equal(a.values, b.values)
    P = np.array([[0.1, 0.2, 0.3]])
    assert np.allclose(tf(P, 0.25), 0.1 + 0.5 * 0.3)
    with pytest.raises(ValueError):
        TimeField([0.0, 0.0], snaps[:2])
