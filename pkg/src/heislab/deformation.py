"""The symmetrised deformation of a vector field tested against pairs of functions.

Two formulas for the same number are evaluated independently:

    defining: -1/2 int [df(b) L g + dg(b) L f - div b <grad_H f, grad_H g>]
    explicit:  int sum_{i,j} (Z_i b_j + Z_j b_i)/2 Z_i f Z_j g
               + 1/2 int <grad_H b_N + 4 J(b), Tg grad_H f + Tf grad_H g>

with ``L = sum_i Z_i Z_i`` the sub-Laplacian and ``df(b) = sum_j b_j Z_j f``.
They agree by integration by parts whenever f and g have compact support in
the quadrature box; the J-term vanishes identically for contact fields.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contact_fields import HVectorField, contact_from_psi, perturbed_vertical
from .fields import ScalarField, parametric_bump
from .grid_calculus import Box, cell_centers, conjugate_exponent, lp_from_values

SLACK = 0.05


class SupportViolation(ValueError):
    pass


class NotContact(ValueError):
    pass


@dataclass
class DeformationInput:
    b: HVectorField
    f: ScalarField
    g: ScalarField
    region: Box
    h: float = 0.05
    supports: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for s in self.supports:
            if not self.region.shrink(self.h).contains_box(s):
                raise SupportViolation("a test-function support reaches the boundary of the quadrature box")

    @property
    def n(self) -> int:
        return self.b.n


def _samples(inp: DeformationInput, h):
    pts, vol = cell_centers(inp.region, h)
    return pts.reshape(-1, inp.region.dim), vol


def _hgrad(f: ScalarField, P) -> np.ndarray:
    return np.stack([f.Z(j)(P) for j in range(1, 2 * f.n + 1)], axis=-1)


def _sublaplacian(f: ScalarField, P) -> np.ndarray:
    return sum(f.Z(j).Z(j)(P) for j in range(1, 2 * f.n + 1))


def _full_grad(f: ScalarField, P) -> np.ndarray:
    return np.stack([f.Z(j)(P) for j in range(1, f.N + 1)], axis=-1)


def dsym_defining(inp: DeformationInput, h: float | None = None) -> float:
    P, vol = _samples(inp, h or inp.h)
    b = inp.b(P)
    df = np.sum(b * _full_grad(inp.f, P), axis=-1)
    dg = np.sum(b * _full_grad(inp.g, P), axis=-1)
    div = inp.b.divergence()(P)
    cross = np.sum(_hgrad(inp.f, P) * _hgrad(inp.g, P), axis=-1)
    val = df * _sublaplacian(inp.g, P) + dg * _sublaplacian(inp.f, P) - div * cross
    return -0.5 * float(np.sum(val)) * vol


def _sym_term(inp: DeformationInput, P) -> np.ndarray:
    m = 2 * inp.n
    comps = inp.b.components
    Zf, Zg = _hgrad(inp.f, P), _hgrad(inp.g, P)
    out = np.zeros(P.shape[0])
    for i in range(m):
        for j in range(m):
            sym = 0.5 * (comps[j].Z(i + 1)(P) + comps[i].Z(j + 1)(P))
            out = out + sym * Zf[:, i] * Zg[:, j]
    return out


def _j_term(inp: DeformationInput, P) -> np.ndarray:
    res = inp.b.contact_residual_at(P)
    Tf = inp.f.Z(inp.f.N)(P)[:, None]
    Tg = inp.g.Z(inp.g.N)(P)[:, None]
    return 0.5 * np.sum(res * (Tg * _hgrad(inp.f, P) + Tf * _hgrad(inp.g, P)), axis=-1)


def j_term(inp: DeformationInput, h: float | None = None) -> float:
    """The J-term integral alone."""
    P, vol = _samples(inp, h or inp.h)
    return float(np.sum(_j_term(inp, P))) * vol


def j_term_norm(inp: DeformationInput, h: float | None = None) -> float:
    """``|| |grad_H b_N + 4 J(b)| ||_{L^1}`` over the quadrature box."""
    P, vol = _samples(inp, h or inp.h)
    return lp_from_values(np.linalg.norm(inp.b.contact_residual_at(P), axis=-1), vol, 1.0)


def dsym_explicit(inp: DeformationInput, h: float | None = None) -> float:
    P, vol = _samples(inp, h or inp.h)
    return float(np.sum(_sym_term(inp, P) + _j_term(inp, P))) * vol


@dataclass(frozen=True)
class DeformationRecord:
    value_defining: float
    value_explicit: float
    J_term: float
    J_term_norm: float
    quadrature_tolerance: float
    agree: bool
    bound_rhs: float | None = None
    passed: bool | None = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def compare_formulas(inp: DeformationInput) -> DeformationRecord:
    """Both formulas at ``h``; the quadrature tolerance is their change from ``2h``."""
    d1, e1 = dsym_defining(inp), dsym_explicit(inp)
    d2, e2 = dsym_defining(inp, 2 * inp.h), dsym_explicit(inp, 2 * inp.h)
    scale = max(abs(d1), abs(e1), 1.0)
    tol = max(abs(d1 - d2), abs(e1 - e2), 1e-12 * scale)
    return DeformationRecord(d1, e1, j_term(inp), j_term_norm(inp), tol, abs(d1 - e1) <= 2 * tol)


def deformation_bound_check(inp: DeformationInput, s: float = 2.0) -> DeformationRecord:
    """``|D| <= c || |grad_H f| ||_{L^r} || |grad_H g| ||_{L^r}`` with ``r = 2s``, ``c = sum ||Z_i b_j||_{L^{s'}}``.

    Hoelder with exponents ``s'`` and ``s`` followed by Cauchy-Schwarz in
    ``L^{2s}`` gives the estimate for the symmetric term; the J-term has no
    such bound, so non-contact fields are refused.
    """
    if not inp.b.is_contact:
        raise NotContact("the deformation bound applies to contact fields only")
    P, vol = _samples(inp, inp.h)
    sp_ = conjugate_exponent(s)
    m = 2 * inp.n
    c = sum(lp_from_values(inp.b.components[j].Z(i)(P), vol, sp_) for i in range(1, m + 1) for j in range(m))
    r = 2.0 * s
    nf = lp_from_values(np.linalg.norm(_hgrad(inp.f, P), axis=-1), vol, r)
    ng = lp_from_values(np.linalg.norm(_hgrad(inp.g, P), axis=-1), vol, r)
    rec = compare_formulas(inp)
    rhs = c * nf * ng
    ok = abs(rec.value_explicit) <= (1 + SLACK) * rhs + 1e-14
    return DeformationRecord(rec.value_defining, rec.value_explicit, rec.J_term, rec.J_term_norm,
                             rec.quadrature_tolerance, rec.agree, rhs, bool(ok))


# -- random smooth triples --------------------------------------------------------------------
_FAMILIES: dict = {}


def _family(prefix: str, n: int):
    key = (prefix, n)
    if key not in _FAMILIES:
        _FAMILIES[key] = parametric_bump(prefix, n)
    return _FAMILIES[key]


def _bump(rng: np.random.Generator, prefix: str, n: int, center_span: float, radius: tuple):
    expr, cs, rs, amp = _family(prefix, n)
    N = 2 * n + 1
    c = rng.uniform(-center_span, center_span, N)
    r = rng.uniform(radius[0], radius[1], N)
    a = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
    params = {**dict(zip(cs, c)), **dict(zip(rs, r)), amp: a}
    return ScalarField(expr, n, params, name=prefix), Box(tuple(c - r), tuple(c + r))


def random_triple(rng: np.random.Generator, kind: str = "contact", n: int = 1, h: float = 0.05,
                  center_span: float = 0.3, radius=(0.5, 0.8)) -> DeformationInput:
    """A random smooth ``(b, f, g)`` with bump test functions.

    ``kind`` is ``contact`` (b from a bump psi), ``perturbed`` (vertical factor
    1 instead of 4) or ``generic`` (three independent bump components).
    """
    f, sf = _bump(rng, "f", n, center_span, radius)
    g, sg = _bump(rng, "g", n, center_span, radius)
    if kind in ("contact", "perturbed"):
        psi, _ = _bump(rng, "psi", n, center_span, (0.6, 1.0))
        b = contact_from_psi(psi) if kind == "contact" else perturbed_vertical(psi, 1.0)
    elif kind == "generic":
        b = HVectorField([_bump(rng, f"b{j}", n, center_span, (0.6, 1.0))[0] for j in range(2 * n + 1)])
    else:
        raise ValueError(f"unknown triple kind {kind!r}")
    half = center_span + radius[1] + 2 * h
    return DeformationInput(b, f, g, Box.cube(half, n), h, (sf, sg))
