"""Difference quotients along dilated left translations ``p -> p . delta_eps(w)``.

Limits are evaluated from exact derivatives of closed-form fields, so the
fitted eps-rates measure the Taylor remainder and nothing else.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fields import ScalarField
from .grid_calculus import Box, GridField, NormSpec, cell_centers, lattice_points, lp_from_values
from .heis_core import dilate, gauge, mul
from .report import ConvergenceReport, strictly_monotone

ORDERS = ("1", "2", "vertical1", "vertical2")
SLACK = 1.05


class AdmissibilityError(ValueError):
    pass


def cc_neighborhood(region: Box, r: float) -> Box:
    """A box containing every point within CC distance ``r`` of ``region``.

    If ``d(p, q) <= r`` then ``|q_H - p_H| <= r`` and
    ``|q_t - p_t| <= r^2 + 2 r |p_H|``.
    """
    big = np.maximum(np.abs(region.lo), np.abs(region.hi))
    ph = float(np.linalg.norm(big[:-1]))
    margin = np.full(region.dim, r)
    margin[-1] = r * r + 2.0 * r * ph
    return region.expand(margin)


def admissible(A: Box, omega: Box, w, eps: float) -> bool:
    """Sufficient test for ``eps (|w_H| + 2 sqrt|w_N|) < dist(A, boundary of omega)``."""
    r = eps * float(gauge(np.asarray(w, dtype=float)))
    if r == 0:
        return omega.contains_box(A)
    return omega.contains_box(cc_neighborhood(A, r * (1 + 1e-9)), tol=0.0)


def check_admissible(A: Box, omega: Box, w, ladder: Sequence[float]):
    for eps in ladder:
        if not admissible(A, omega, w, eps):
            raise AdmissibilityError(
                f"eps={eps} with w={list(np.asarray(w, dtype=float))} reaches outside the domain box"
            )


def _shift(pts: np.ndarray, w, eps: float) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return mul(pts, np.broadcast_to(dilate(eps, w), pts.shape))


def _hgrad(f, pts) -> np.ndarray:
    n = f.n
    return np.stack([f.Z(j)(pts) for j in range(1, 2 * n + 1)], axis=-1)


def quotient1_at(f: Callable, w, eps: float, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    return (f(_shift(pts, w, eps)) - f(pts)) / eps


def quotient2_at(f, w, eps: float, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    w = np.asarray(w, dtype=float)
    lin = np.sum(_hgrad(f, pts) * w[:-1], axis=-1)
    return (f(_shift(pts, w, eps)) - f(pts) - eps * lin) / eps**2


def vertical_split_at(f: Callable, w, eps: float, pts, power: int = 1) -> np.ndarray:
    """``[f(p . delta_eps(w)) - f(p . delta_eps(w_H, 0))] / eps^power``."""
    pts = np.asarray(pts, dtype=float)
    w = np.asarray(w, dtype=float)
    wh = w.copy()
    wh[-1] = 0.0
    return (f(_shift(pts, w, eps)) - f(_shift(pts, wh, eps))) / eps**power


def _as_grid(values_fn, A: Box, h) -> GridField:
    return GridField(A, h, values_fn(lattice_points(A, h)))


def quotient1(f, w, eps: float, A: Box, h: float = 0.05, omega: Box | None = None) -> GridField:
    """``p -> (f(p . delta_eps(w)) - f(p)) / eps`` sampled on the lattice of ``A``."""
    if omega is not None:
        check_admissible(A, omega, w, [eps])
    return _as_grid(lambda P: quotient1_at(f, w, eps, P), A, h)


def quotient2(f, w, eps: float, A: Box, h: float = 0.05, omega: Box | None = None) -> GridField:
    """``p -> (f(p . delta_eps(w)) - f(p) - eps <grad_H f(p), w_H>) / eps^2`` on the lattice of ``A``."""
    if omega is not None:
        check_admissible(A, omega, w, [eps])
    return _as_grid(lambda P: quotient2_at(f, w, eps, P), A, h)


def limit_at(f: ScalarField, w, order: str, pts) -> np.ndarray:
    """Pointwise eps -> 0 limit of the quotient of the given order."""
    pts = np.asarray(pts, dtype=float)
    w = np.asarray(w, dtype=float)
    wh, wn = w[:-1], w[-1]
    if order == "1":
        return np.sum(_hgrad(f, pts) * wh, axis=-1)
    if order == "vertical1":
        return np.zeros(pts.shape[:-1])
    tf = f.Z(f.N)(pts)
    if order == "vertical2":
        return wn * tf
    if order == "2":
        m = 2 * f.n
        quad = np.zeros(pts.shape[:-1])
        for i in range(m):
            if wh[i] == 0:
                continue
            for j in range(m):
                if wh[j] == 0:
                    continue
                quad = quad + f.Z(j + 1).Z(i + 1)(pts) * wh[i] * wh[j]
        return 0.5 * quad + wn * tf
    raise ValueError(f"unknown quotient order {order!r}")


def quotient_at(f, w, eps: float, order: str, pts) -> np.ndarray:
    if order == "1":
        return quotient1_at(f, w, eps, pts)
    if order == "2":
        return quotient2_at(f, w, eps, pts)
    if order == "vertical1":
        return vertical_split_at(f, w, eps, pts, 1)
    if order == "vertical2":
        return vertical_split_at(f, w, eps, pts, 2)
    raise ValueError(f"unknown quotient order {order!r}")


def _field_norm(values: np.ndarray, vol: float, s: float) -> float:
    return lp_from_values(values, vol, s)


def apriori_bound(f: ScalarField, w, order: str, omega: Box, s: float, h: float) -> float:
    """Right-hand side of the a-priori estimate for the quotient of this order.

    ``1``: ``(|w_H| + 2 sqrt|w_N|) ||grad_H f||``; ``vertical1``:
    ``2 sqrt|w_N| ||grad_H f||``; ``vertical2``: ``|w_N| ||Tf||``;
    ``2``: ``|w_N| ||Tf|| + |w_H|^2 ||Hess_H f||`` (Frobenius length, which
    dominates the operator norm). All norms are L^s over ``omega``.
    """
    w = np.asarray(w, dtype=float)
    pts, vol = cell_centers(omega, h)
    wh = float(np.linalg.norm(w[:-1]))
    wn = abs(float(w[-1]))
    if order in ("1", "vertical1"):
        g = _field_norm(np.linalg.norm(_hgrad(f, pts), axis=-1), vol, s)
        return (wh + 2 * np.sqrt(wn)) * g if order == "1" else 2 * np.sqrt(wn) * g
    tf = _field_norm(f.Z(f.N)(pts), vol, s)
    if order == "vertical2":
        return wn * tf
    m = 2 * f.n
    hess = np.sqrt(sum(f.Z(j).Z(i)(pts) ** 2 for i in range(1, m + 1) for j in range(1, m + 1)))
    return wn * tf + wh**2 * _field_norm(hess, vol, s)


@dataclass
class QuotientSpec:
    f: ScalarField
    w: Sequence[float]
    ladder: Sequence[float]
    order: str
    norm: NormSpec
    omega: Box
    h: float = 0.05
    bound_h: float | None = None
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")
        lad = np.asarray(self.ladder, dtype=float)
        if lad.size < 1 or np.any(lad <= 0) or np.any(np.diff(lad) >= 0):
            raise ValueError("eps ladder must be positive and strictly decreasing")
        check_admissible(self.norm.region, self.omega, self.w, lad)


def quotient_limit_error(spec: QuotientSpec, rate_floor: float = 1e-11) -> ConvergenceReport:
    """Per eps: ``||quotient - limit||_{L^s(A)}``, the quotient norm and its a-priori bound.

    A rate is fitted when the ladder has at least four points and the errors
    sit above ``rate_floor`` (for exact cases the error is round-off).
    """
    A = spec.norm.region
    s = spec.norm.s
    pts, vol = cell_centers(A, spec.h)
    lim = limit_at(spec.f, spec.w, spec.order, pts)
    bound = apriori_bound(spec.f, spec.w, spec.order, spec.omega, s, spec.bound_h or spec.h)
    rep = ConvergenceReport(
        kind="quotients",
        parameter="eps",
        columns=["eps", "error", "quotient_norm", "bound", "pass"],
        tolerances={"bound_slack": SLACK, "rate_floor": rate_floor},
        meta={"order": spec.order, "w": [float(v) for v in spec.w], "s": s, "h": spec.h, **spec.tags},
    )
    for eps in spec.ladder:
        q = quotient_at(spec.f, spec.w, eps, spec.order, pts)
        err = lp_from_values(q - lim, vol, s)
        qn = lp_from_values(q, vol, s)
        rep.rows.append({"eps": float(eps), "error": err, "quotient_norm": qn, "bound": bound,
                         "pass": bool(qn <= SLACK * bound + 1e-12)})
    rep.checks["apriori_bound"] = all(r["pass"] for r in rep.rows)
    errs = rep.column("error")
    if len(rep.rows) >= 4 and np.all(errs > rate_floor):
        rep.fit("error", "error")
        rep.checks["eventually_monotone"] = strictly_monotone(errs[-3:], "decreasing")
    return rep


def split_identity_residual(f, w, eps: float, pts) -> float:
    """Max of ``|q1(w) - q1((w_H, 0)) - vertical1(w)|``; zero up to round-off."""
    w = np.asarray(w, dtype=float)
    wh = w.copy()
    wh[-1] = 0.0
    lhs = quotient1_at(f, w, eps, pts)
    rhs = quotient1_at(f, wh, eps, pts) + vertical_split_at(f, w, eps, pts, 1)
    return float(np.max(np.abs(lhs - rhs)))


def lipschitz_hgrad(f: ScalarField, region: Box, h: float = 0.05) -> float:
    """Sup over ``region`` samples of the operator norm of ``Hess_H f``.

    Along a unit-speed horizontal curve the horizontal gradient changes at
    rate at most this value, so it bounds ``Lip(grad_H f)`` for the CC distance
    on any set whose horizontal connections stay in ``region``.
    """
    pts = lattice_points(region, h).reshape(-1, region.dim)
    m = 2 * f.n
    H = np.stack([np.stack([f.Z(j).Z(i)(pts) for j in range(1, m + 1)], axis=-1) for i in range(1, m + 1)], axis=-2)
    return float(np.max(np.linalg.norm(H, ord=2, axis=(-2, -1)))) if pts.size else 0.0


def linfty_bound_check(f: ScalarField, omega: Box, w, eps: float, h: float = 0.05, samples: int = 1000,
                       rng: np.random.Generator | None = None, lip_h: float | None = None) -> bool:
    """``|quotient2(p)| <= Lip(grad_H f) U(0, w)^2`` on random points of ``omega``.

    The Lipschitz constant is sampled on a box covering every point within
    CC distance ``eps U(0, w)`` of ``omega``; using ``U >= d`` gives a valid
    (weaker) form of the uniform second-order bound.
    """
    rng = rng or np.random.default_rng(0)
    w = np.asarray(w, dtype=float)
    U = float(gauge(w))
    region = cc_neighborhood(omega, eps * U)
    lip = lipschitz_hgrad(f, region, lip_h or h)
    pts = omega.lo + (omega.hi - omega.lo) * rng.random((samples, omega.dim))
    q = np.abs(quotient2_at(f, w, eps, pts))
    return bool(np.all(q <= lip * U * U * (1 + 1e-9) + 1e-10))
