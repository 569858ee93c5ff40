"""Oscillating generating functions that separate horizontal Sobolev norms from BV.

``psi(w, t) = phi(w / beta) g(t / delta)`` with polynomial profiles

    phi(v) = C_phi (1 - |v|^2)^4   on the unit ball of R^{2n},
    g(s)   = (315/256) (1 - s^2)^4 on (-1, 1),

both of unit mass. ``T Z_i psi`` picks up ``1 / (beta delta)`` while the
horizontal derivatives stay of order ``beta^{2n}`` once ``delta = M beta^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gamma, pi, sqrt

import numpy as np
import sympy as sp

from .contact_fields import GeneratingFunction, contact_from_psi
from .fields import ScalarField, coord_symbols
from .grid_calculus import Box, cell_centers, lp_from_values
from .report import ConvergenceReport, strictly_monotone

PROFILE_POWER = 4
G_CONSTANT = 315.0 / 256.0
SLACK = 0.05


def _ball_integral(m: int, k: int) -> float:
    """``int_{R^m} (1 - |v|^2)_+^k dv``."""
    return pi ** (m / 2) * gamma(k + 1) / gamma(k + 1 + m / 2)


class SupportOverflow(ValueError):
    pass


@dataclass(frozen=True)
class OscillationParams:
    n: int = 1
    beta: float = 0.3
    delta: float | None = None
    index: int = 1
    coupled: bool = True

    def __post_init__(self):
        if not 1 <= self.index <= 2 * self.n:
            raise ValueError(f"index must lie in 1..{2 * self.n}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.delta is None:
            if not self.coupled:
                raise ValueError("uncoupled mode needs an explicit delta")
            object.__setattr__(self, "delta", self.M * self.beta**2)
        elif self.delta <= 0:
            raise ValueError("delta must be positive")

    # -- profile constants ----------------------------------------------------------------
    @property
    def phi_constant(self) -> float:
        return 1.0 / _ball_integral(2 * self.n, PROFILE_POWER)

    @property
    def G1(self) -> float:
        """``||g'||_{L^1} = 2 g(0)``."""
        return 2.0 * G_CONSTANT

    @property
    def G2(self) -> float:
        """``||g''||_{L^1} = 4 max|g'|``, attained at ``s = 1/sqrt(7)``."""
        s = 1.0 / sqrt(7.0)
        return 4.0 * 8.0 * G_CONSTANT * s * (1 - s * s) ** 3

    @property
    def F1(self) -> float:
        """``||d phi / d w_i||_{L^1}`` in closed form."""
        m = 2 * self.n
        k = PROFILE_POWER - 1
        a = k + (m - 1) / 2
        slab = pi ** ((m - 1) / 2) * gamma(k + 1) / gamma(k + 1 + (m - 1) / 2)
        return 2.0 * PROFILE_POWER * self.phi_constant * slab / (a + 1)

    @cached_property
    def F2(self) -> float:
        """``sum_{j,k} ||d^2 phi / dw_j dw_k||_{L^1}`` by a fine polar midpoint rule (n = 1 only)."""
        if self.n != 1:
            raise NotImplementedError("F2 is tabulated for n = 1")
        m = 2048
        r = (np.arange(m) + 0.5) / m
        th = (np.arange(m) + 0.5) * (2 * pi / m)
        R, TH = np.meshgrid(r, th, indexing="ij")
        v = (R * np.cos(TH), R * np.sin(TH))
        q = 1 - R * R
        total = 0.0
        for j in range(2):
            for k in range(2):
                val = 48 * v[j] * v[k] * q**2 - (8 * q**3 if j == k else 0.0)
                total += float(np.sum(np.abs(val) * R))
        return self.phi_constant * total * (1.0 / m) * (2 * pi / m)

    @property
    def M(self) -> float:
        return 4.0 * self.G2 / (self.F1 * self.G1)

    @property
    def support(self) -> Box:
        b = [self.beta] * (2 * self.n) + [self.delta]
        return Box(tuple(-np.array(b)), tuple(b))


def _profiles(n: int):
    syms = coord_symbols(n)
    beta, delta = sp.symbols("osc_beta osc_delta", positive=True)
    v2 = sum((s / beta) ** 2 for s in syms[:-1])
    s = syms[-1] / delta
    phi = sp.Piecewise(((1 - v2) ** PROFILE_POWER, v2 < 1), (0, True))
    g = sp.Piecewise(((1 - s**2) ** PROFILE_POWER, s**2 < 1), (0, True))
    return phi * g, beta, delta


def oscillating_psi(params: OscillationParams, working_box: Box | None = None) -> GeneratingFunction:
    """``psi = phi(w / beta) g(t / delta)`` as a closed-form field; derivatives are exact."""
    if working_box is not None and not working_box.contains_box(params.support):
        raise SupportOverflow("scaled support does not fit the working box")
    expr, beta, delta = _profiles(params.n)
    const = sp.Float(params.phi_constant * G_CONSTANT)
    f = ScalarField(const * expr, params.n, {beta: params.beta, delta: params.delta}, name="oscillating")
    return GeneratingFunction(f, f"oscillating(beta={params.beta:g}, delta={params.delta:g})")


def _l1(field: ScalarField, pts, vol) -> float:
    return lp_from_values(field(pts), vol, 1.0)


@dataclass
class ScalingRow:
    L1: float
    W1: float
    W2: float
    TZ: float
    bounds: dict


def oscillation_norms(params: OscillationParams, cells: int = 64) -> ScalingRow:
    """L^1 norms of ``psi``, its horizontal derivatives up to order two and ``T Z_i psi``.

    Midpoint quadrature on the support box with ``cells`` per axis; the
    integrands vanish to fourth order at the box faces.
    """
    psi = oscillating_psi(params).psi
    n = params.n
    box = params.support
    pts, vol = cell_centers(box, (box.hi - box.lo) / cells)
    m = 2 * n
    first = [psi.Z(j) for j in range(1, m + 1)]
    W1 = sum(_l1(z, pts, vol) for z in first)
    W2 = sum(_l1(z.Z(k), pts, vol) for z in first for k in range(1, m + 1))
    L1 = _l1(psi, pts, vol)
    TZ = _l1(psi.Z(params.index).Z(psi.N), pts, vol)
    return ScalingRow(L1, W1, W2, TZ, norm_bounds(params))


def norm_bounds(params: OscillationParams) -> dict:
    """The three displayed estimates, evaluated from the profile constants.

    With ``Z_j = d_j + 2 a_j d_t`` and ``|a_j| <= beta`` on the support:

    * ``||Z_j psi|| <= beta^{2n-1} delta F1 + 2 beta^{2n+1} G1``
    * ``sum_{k,j} ||Z_k Z_j psi|| <= beta^{2n-2} delta F2 + 4 (2n)^2 beta^{2n} F1 G1
      + 2 (2n) beta^{2n} G1 + 4 (2n)^2 beta^{2n+2} G2 / delta``
    * ``||T Z_i psi|| >= beta^{2n-1} F1 G1 - 2 beta^{2n+1} G2 / delta``
    """
    n, b, d = params.n, params.beta, params.delta
    m = 2 * n
    F1, G1, G2 = params.F1, params.G1, params.G2
    z1 = m * (b ** (2 * n - 1) * d * F1 + 2 * b ** (2 * n + 1) * G1)
    out = {"W1_upper": z1,
           "TZ_leading": b ** (2 * n - 1) * F1 * G1,
           "TZ_negative": 2 * b ** (2 * n + 1) * G2 / d}
    out["TZ_lower"] = out["TZ_leading"] - out["TZ_negative"]
    if n == 1:
        out["W2_upper"] = (b ** (2 * n - 2) * d * params.F2 + 4 * m * m * F1 * b ** (2 * n) * G1
                           + 2 * (2 * n) * b ** (2 * n) * G1 + 4 * m * m * b ** (2 * n + 2) * G2 / d)
    return out


def bv_lower_bound(psi, i: int, K: Box, h=None, cells: int | None = None) -> float:
    """Euclidean total variation of ``b_{n+i} = -X_i psi`` over ``K`` as ``||grad b_{n+i}||_{L^1(K)}``.

    For smooth ``b`` this is exactly ``|D b_{n+i}|(K)``; its t-component alone is ``||T X_i psi||``.
    """
    f = psi.psi if isinstance(psi, GeneratingFunction) else psi
    b = contact_from_psi(f)
    comp = b.components[f.n + i - 1]
    if cells is not None:
        h = (K.hi - K.lo) / cells
    pts, vol = cell_centers(K, h if h is not None else 0.05)
    grad = np.stack([comp.partial(a)(pts) for a in range(f.N)], axis=-1)
    return lp_from_values(np.linalg.norm(grad, axis=-1), vol, 1.0)


def scaling_study(params: OscillationParams, ladder, cells: int = 64) -> ConvergenceReport:
    """Norms along a decreasing beta ladder (delta = M beta^2 unless uncoupled)."""
    lad = np.asarray(ladder, dtype=float)
    if lad.size < 2 or np.any(np.diff(lad) >= 0):
        raise ValueError("beta ladder must be strictly decreasing")
    n = params.n
    cols = ["beta", "delta", "L1", "W1", "W2", "W21", "TZ_i", "bv_lower", "TZ_lower", "ratio"]
    rep = ConvergenceReport(kind="counterexample", parameter="beta", columns=cols,
                            tolerances={"exponent": 0.1, "slack": SLACK},
                            meta={"n": n, "index": params.index, "M": params.M, "G1": params.G1,
                                  "G2": params.G2, "F1": params.F1, "coupled": params.coupled})
    displayed = []
    half = []
    for beta in lad:
        p = OscillationParams(n, float(beta), None if params.coupled else params.delta, params.index, params.coupled)
        row = oscillation_norms(p, cells)
        bv = bv_lower_bound(oscillating_psi(p), p.index, p.support, cells=cells)
        w21 = row.L1 + row.W1 + row.W2
        bd = row.bounds
        rep.add_row(beta=float(beta), delta=p.delta, L1=row.L1, W1=row.W1, W2=row.W2, W21=w21, TZ_i=row.TZ,
                    bv_lower=bv, TZ_lower=bd["TZ_lower"], ratio=row.TZ / w21)
        ok = row.W1 <= (1 + SLACK) * bd["W1_upper"] and row.TZ >= bd["TZ_lower"] / (1 + SLACK)
        if "W2_upper" in bd:
            ok = ok and row.W2 <= (1 + SLACK) * bd["W2_upper"]
        displayed.append(bool(ok))
        half.append(abs(bd["TZ_negative"] / bd["TZ_leading"] - 0.5) <= SLACK * 0.5 if p.coupled else True)
    tz = rep.fit("TZ_i", "TZ_i", min_points=2)
    w = rep.fit("W21", "W21", min_points=2)
    rep.checks["TZ_exponent"] = abs(tz.rate - (2 * n - 1)) <= 0.1
    rep.checks["W21_exponent"] = w.rate >= 2 * n - 0.1
    rep.checks["TZ_lower_bound"] = bool(np.all(rep.column("TZ_i") >= (1 - SLACK) * rep.column("TZ_lower")))
    rep.checks["displayed_estimates"] = all(displayed)
    rep.checks["negative_term_is_half"] = all(half)
    rep.checks["ratio_increasing"] = strictly_monotone(rep.column("ratio"), "increasing")
    rep.checks["bv_dominates_TZ"] = bool(np.all(rep.column("bv_lower") >= rep.column("TZ_i") * (1 - 1e-12)))
    rep.verdict = "SEPARATED" if rep.passed else "NOT-SEPARATED"
    return rep
