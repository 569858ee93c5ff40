import numpy as np
import pytest

import oracles
from heislab import Box
from heislab.counterexample import (OscillationParams, SupportOverflow, bv_lower_bound, oscillating_psi,
                                    oscillation_norms, scaling_study)
from heislab.grid_calculus import cell_centers

P = OscillationParams(beta=0.3)


def test_profile_constants_match_quadrature():
    assert P.phi_constant == pytest.approx(oracles.PHI_C, rel=1e-14)
    assert P.G1 == pytest.approx(oracles.G1(), rel=1e-10)
    assert P.G2 == pytest.approx(oracles.G2(), rel=1e-10)
    assert P.F1 == pytest.approx(oracles.F1(), rel=1e-8)


def test_frozen_constants():
    assert P.G1 == pytest.approx(2.4609375, rel=1e-15)
    assert P.G2 == pytest.approx(9.371976218494105, rel=1e-13)
    # 8 C_phi * 2 * (1/9) * (32/35) with C_phi = 5 / pi
    F1 = 2560 / (315 * np.pi)
    assert P.F1 == pytest.approx(F1, rel=1e-14)
    assert P.M == pytest.approx(4 * 9.371976218494105 / (F1 * 2.4609375), rel=1e-13)


def test_profiles_have_unit_mass():
    assert oracles.phi_mass() == pytest.approx(1.0, abs=1e-10)
    assert oracles.g_mass() == pytest.approx(1.0, abs=1e-12)
    psi = oscillating_psi(P).psi
    pts, vol = cell_centers(P.support, (P.support.hi - P.support.lo) / 96)
    # unit mass in w and t separately, rescaled by beta^2 delta
    assert float(np.sum(psi(pts)) * vol) == pytest.approx(P.beta**2 * P.delta, rel=1e-4)


def test_coupling_makes_negative_term_half():
    from heislab.counterexample import norm_bounds

    for beta in (0.4, 0.2, 0.05):
        bd = norm_bounds(OscillationParams(beta=beta))
        assert bd["TZ_negative"] / bd["TZ_leading"] == pytest.approx(0.5, rel=1e-12)


def test_norms_respect_displayed_estimates():
    row = oscillation_norms(P, 48)
    bd = row.bounds
    assert row.W1 <= 1.05 * bd["W1_upper"]
    assert row.W2 <= 1.05 * bd["W2_upper"]
    assert row.TZ >= bd["TZ_lower"] / 1.05


def test_bv_dominates_vertical_derivative():
    psi = oscillating_psi(P)
    bv = bv_lower_bound(psi, 1, P.support, cells=48)
    assert bv >= oscillation_norms(P, 48).TZ


def test_scaling_study_separates():
    rep = scaling_study(OscillationParams(beta=0.4), [0.4, 0.3, 0.2, 0.15], cells=48)
    assert rep.verdict == "SEPARATED", rep.checks
    assert abs(rep.rates["TZ_i"]["rate"] - 1.0) <= 0.1
    assert rep.rates["W21"]["rate"] >= 1.9


def test_parameter_validation():
    with pytest.raises(ValueError):
        OscillationParams(index=3)
    with pytest.raises(ValueError):
        OscillationParams(beta=-1.0)
    with pytest.raises(ValueError):
        OscillationParams(coupled=False)
    with pytest.raises(SupportOverflow):
        oscillating_psi(OscillationParams(beta=0.5), Box.cube(0.2))
    with pytest.raises(ValueError):
        scaling_study(P, [0.1, 0.2])
