import numpy as np
import pytest

from heislab import Box, HVectorField, Mollifier, compact_bump, contact_from_psi, perturbed_vertical
from heislab.commutator_lab import (CONTACT, INCONCLUSIVE, CommutatorInput, NoiseFloorError, ConcentratedDatum, c2_bound,
                                    commutator_decomposed, commutator_direct, commutator_study,
                                    moment_cancellations)

PSI = compact_bump((0.1, 0, 0), 0.9)
U = compact_bump((0, 0.1, 0), 0.8)
K = Box.cube(0.2)


@pytest.fixture(scope="module")
def rho():
    return Mollifier(n=1)


def test_moments_cancel(rho):
    assert moment_cancellations(rho) <= 1e-12


@pytest.mark.parametrize("contact", [True, False])
def test_direct_equals_decomposed(rho, contact):
    b = contact_from_psi(PSI) if contact else perturbed_vertical(PSI, 1.0)
    inp = CommutatorInput(U, b, rho, [0.1], K, h=0.1)
    br = commutator_decomposed(inp, 0.1)
    d = commutator_direct(inp, 0.1, br.points)
    scale = np.abs(br.terms["mdiv"]).max()
    assert np.abs(d["C1"] - br.C1).max() <= 1e-10 * scale
    if contact:
        assert br.norms["B2"] == 0.0
    else:
        assert br.norms["B2"] > 0.0


def test_direct_grid_output(rho):
    inp = CommutatorInput(U, contact_from_psi(PSI), rho, [0.1], K, h=0.1)
    g = commutator_direct(inp, 0.1)
    assert g.values.shape == (5, 5, 5)


def test_small_contact_study(rho):
    inp = CommutatorInput(U, contact_from_psi(PSI), rho, [0.2, 0.1, 0.05, 0.025], K, h=0.1)
    rep = commutator_study(inp)
    assert rep.verdict == CONTACT
    assert rep.rates["C_total"]["rate"] >= 0.8
    assert rep.passed
    assert np.all(rep.column("B2_norm") == 0.0)
    # the A1 and B1 limits are approached at second order for smooth data
    for col in ("A1_err", "B1_err"):
        e = rep.column(col)
        assert np.all(np.diff(e) < 0) and e[-1] < 1e-5


def test_zero_field_hits_noise_floor(rho):
    inp = CommutatorInput(U, HVectorField([0.0, 0.0, 0.0]), rho, [0.2, 0.1, 0.05, 0.025], K, h=0.1)
    with pytest.raises(NoiseFloorError):
        commutator_study(inp)
    rep = commutator_study(inp, strict=False)
    assert rep.verdict == INCONCLUSIVE
    assert np.all(rep.column("C_total") == 0.0)


def test_reaction_term_bound(rho):
    c = compact_bump((0.05, 0, 0.05), 0.7)
    inp = CommutatorInput(U, contact_from_psi(PSI), rho, [0.1], K, c=c, h=0.1)
    lhs, rhs = c2_bound(inp, 0.1)
    assert 0 < lhs <= rhs


def test_concentrated_datum_has_unit_mass():
    d = ConcentratedDatum((0.3, 0.2, 0.1), (0.05, 0.05, 0.01))
    P, w = d.lattice(12)
    assert abs(float(d(P) @ w) - 1.0) <= 1e-12
    assert d(np.array([[5.0, 5.0, 5.0]]))[0] == 0.0


def test_concentrated_datum_output_box_covers_output_points(rho):
    d = ConcentratedDatum((0.3, 0.2, 0.1), (2e-3, 2e-3, 1e-5))
    box = d.output_box(0.1, rho)
    P, _ = d.output_points(0.1, rho, 6)
    assert np.all(P >= np.array(box.lo) - 1e-12) and np.all(P <= np.array(box.hi) + 1e-12)


def test_input_validation(rho):
    b = contact_from_psi(PSI)
    with pytest.raises(ValueError):
        CommutatorInput(U, b, rho, [0.1, 0.2], K)
    with pytest.raises(ValueError):
        CommutatorInput(U, b, rho, [0.0], K)
    with pytest.raises(ValueError):
        CommutatorInput(ConcentratedDatum((0, 0, 0), (1e-3, 1e-3, 1e-6)), b, rho, [0.2], Box.cube(0.01))
    with pytest.raises(ValueError):
        commutator_study(CommutatorInput(U, b, rho, [0.2, 0.1], K, h=0.1))
