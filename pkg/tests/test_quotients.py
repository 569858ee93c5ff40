import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heislab.fields import ScalarField, compact_bump, coord_symbols, random_polynomial
from heislab.grid_calculus import Box, NormSpec
from heislab.quotients import (AdmissibilityError, QuotientSpec, admissible, linfty_bound_check, quotient1,
                               quotient_at, quotient_limit_error, split_identity_residual, vertical_split_at)

x, y, t = coord_symbols(1)
P = np.random.default_rng(11).uniform(-1, 1, (500, 3))
BUMP = compact_bump(0.0, 1.5)
A, OMEGA = Box.cube(0.5), Box.cube(2.2)


@pytest.mark.parametrize("eps", [0.4, 0.1, 0.01])
def test_closed_forms(eps):
    f_t, f_xx = ScalarField(t), ScalarField(x**2)
    assert np.allclose(quotient_at(f_t, (1, 0, 0), eps, "1", P), 2 * P[:, 1], atol=1e-10)
    assert np.allclose(quotient_at(f_t, (0, 0, 1), eps, "1", P), eps, atol=1e-10)
    assert np.allclose(quotient_at(f_t, (0, 0, 1), eps, "2", P), 1.0, atol=1e-10)
    assert np.allclose(quotient_at(f_xx, (1, 0, 0), eps, "2", P), 1.0, atol=1e-10)
    assert np.allclose(quotient_at(f_t, (0.3, -0.2, 1), eps, "vertical2", P), 1.0, atol=1e-10)


def test_closed_form_reports_have_roundoff_error():
    for f, w, order in [(ScalarField(t), (1, 0, 0), "1"), (ScalarField(x**2), (1, 0, 0), "2"),
                        (ScalarField(t), (0, 0, 1), "vertical2")]:
        rep = quotient_limit_error(QuotientSpec(f, w, [0.4, 0.2, 0.1, 0.05], order, NormSpec(1.0, A), Box.cube(3.0), 0.1))
        assert rep.column("error").max() <= 1e-10
        assert rep.checks["apriori_bound"]


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.floats(0.01, 0.5))
def test_quadratic_horizontal_quotient_is_exact(seed, eps):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1, 1, 6)
    f = ScalarField(c[0] + c[1] * x + c[2] * y + c[3] * x**2 + c[4] * x * y + c[5] * y**2)
    w = (rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0)
    from heislab.quotients import limit_at
    # f depends on (x, y) only and w is horizontal, so the Taylor expansion stops at order two
    assert np.max(np.abs(quotient_at(f, w, eps, "2", P) - limit_at(f, w, "2", P))) <= 1e-10


@pytest.mark.parametrize("order", ["1", "2"])
def test_rates_for_smooth_bump(order):
    rep = quotient_limit_error(QuotientSpec(BUMP, (1, 1, 0), [0.4, 0.2, 0.1, 0.05], order, NormSpec(1.0, A), OMEGA))
    assert 0.9 <= rep.rates["error"]["rate"] <= 1.1
    assert rep.passed


@pytest.mark.parametrize("order", ["1", "2", "vertical1", "vertical2"])
@pytest.mark.parametrize("s", [1.0, 2.0])
def test_apriori_bounds_with_vertical_component(order, s):
    spec = QuotientSpec(BUMP, (0.5, 0.5, 0.3), [0.4, 0.2, 0.1, 0.05], order, NormSpec(s, A), OMEGA, 0.1)
    assert quotient_limit_error(spec).checks["apriori_bound"]


def test_split_identity(rng):
    for _ in range(5):
        f = random_polynomial(rng, 1, 3)
        assert split_identity_residual(f, (0.3, -0.4, 0.7), 0.2, P) <= 1e-12


def test_vertical_first_order_vanishes():
    f = ScalarField(t)
    assert np.allclose(vertical_split_at(f, (0, 0, 1), 0.1, P, 1), 0.1)


def test_uniform_second_order_bound(rng):
    assert linfty_bound_check(ScalarField(x**2), Box.cube(0.5), (1, 0, 0), 0.1, 0.1)
    for _ in range(3):
        f = random_polynomial(rng, 1, 3)
        assert linfty_bound_check(f, Box.cube(0.3), rng.uniform(-1, 1, 3), 0.1, 0.1, samples=1000, rng=rng)


def test_admissibility_is_checked_first():
    with pytest.raises(AdmissibilityError):
        QuotientSpec(BUMP, (1, 1, 0.5), [0.4], "1", NormSpec(1.0, A), OMEGA)
    with pytest.raises(AdmissibilityError):
        quotient1(BUMP, (1, 0, 0), 2.0, A, 0.1, omega=Box.cube(1.0))
    assert admissible(A, OMEGA, (0, 0, 0), 1.0)


def test_ladder_must_decrease():
    with pytest.raises(ValueError):
        QuotientSpec(BUMP, (1, 0, 0), [0.1, 0.2], "1", NormSpec(1.0, A), OMEGA)
