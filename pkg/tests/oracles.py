"""Independent reference computations.

Nothing here imports heislab: each oracle re-derives its value from scalar
formulas, sympy, or scipy quadrature so library bugs cannot cancel out.
"""
from __future__ import annotations

import math

import numpy as np
import sympy as sp
from scipy import integrate

x, y, t = sp.symbols("x y t", real=True)


def group_mul(p, q):
    """H^1 group law written out by hand."""
    return (p[0] + q[0], p[1] + q[1], p[2] + q[2] + 2.0 * (q[0] * p[1] - p[0] * q[1]))


def X(f):
    return sp.diff(f, x) + 2 * y * sp.diff(f, t)


def Y(f):
    return sp.diff(f, y) - 2 * x * sp.diff(f, t)


def T(f):
    return sp.diff(f, t)


def contact_components(psi):
    """``(Y psi, -X psi, -4 psi)`` for n = 1."""
    return Y(psi), -X(psi), -4 * psi


def kernel_mass(rho, half_widths) -> float:
    """Adaptive tensor quadrature of a kernel over its bounding box."""
    a, b, c = half_widths
    val, _ = integrate.tplquad(lambda tt, yy, xx: float(rho(np.array([xx, yy, tt]))),
                               -a, a, -b, b, -c, c, epsabs=1e-12, epsrel=1e-11)
    return val


# -- counterexample profile constants (n = 1) ------------------------------------------------
PHI_C = 5.0 / math.pi  # 1 / int_{R^2} (1 - |v|^2)_+^4 = 5 / pi
G_C = 315.0 / 256.0


def g_profile(s):
    return G_C * (1 - s * s) ** 4 if abs(s) < 1 else 0.0


def G1() -> float:
    val, _ = integrate.quad(lambda s: abs(-8 * G_C * s * (1 - s * s) ** 3), -1, 1, epsabs=1e-13)
    return val


def G2() -> float:
    def g2(s):
        return G_C * (-8 * (1 - s * s) ** 3 + 48 * s * s * (1 - s * s) ** 2)
    # g'' changes sign where 7 s^2 = 1
    pts = [-1 / math.sqrt(7), 1 / math.sqrt(7)]
    val, _ = integrate.quad(lambda s: abs(g2(s)), -1, 1, points=pts, epsabs=1e-13, limit=200)
    return val


def F1() -> float:
    """``int |d phi / d v_1|`` over the unit disc, phi = C (1 - |v|^2)^4."""
    val, _ = integrate.dblquad(lambda v2, v1: abs(-8 * PHI_C * v1 * (1 - v1 * v1 - v2 * v2) ** 3),
                               -1, 1, lambda v1: -math.sqrt(1 - v1 * v1), lambda v1: math.sqrt(1 - v1 * v1),
                               epsabs=1e-12)
    return val


def phi_mass() -> float:
    val, _ = integrate.dblquad(lambda r, th: PHI_C * (1 - r * r) ** 4 * r, 0, 2 * math.pi, 0, 1, epsabs=1e-13)
    return val


def g_mass() -> float:
    val, _ = integrate.quad(g_profile, -1, 1, epsabs=1e-14)
    return val


def deformation_j_oracle(bx: float, by: float):
    """Exact J-term for ``b = (bx, by, 0)`` constant and separable polynomial bumps f, g.

    ``f = (1-x^2)^4 (1-y^2)^4 (1-t^2)^4`` and ``g`` the same profile shifted
    by 0.2 in x. The residual ``grad_H b_N + 4 J(b)`` is ``4 (-by, bx)``.
    """
    prof = lambda s: (1 - s**2) ** 4  # noqa: E731
    f = prof(x) * prof(y) * prof(t)
    g = prof(x - sp.Rational(1, 5)) * prof(y) * prof(t)
    r = (-4 * sp.nsimplify(by), 4 * sp.nsimplify(bx))
    integrand = sp.Rational(1, 2) * (r[0] * (T(g) * X(f) + T(f) * X(g)) + r[1] * (T(g) * Y(f) + T(f) * Y(g)))
    lo = -1 + sp.Rational(1, 5)
    poly = sp.Poly(integrand, x, y, t)
    for s, a, b in ((x, lo, 1), (y, -1, 1), (t, -1, 1)):
        anti = poly.integrate(s)
        poly = sp.Poly(anti.as_expr().subs(s, b) - anti.as_expr().subs(s, a), *[v for v in (x, y, t) if v != s] or [x])
    return float(poly.as_expr()), f, g
