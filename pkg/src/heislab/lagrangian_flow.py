"""Flows of vector fields, push-forward densities and the characteristic solvers.

A field is anything exposing ``velocity(pts, tau)``, ``velocity_jacobian(pts, tau)``
and ``divergence_at(pts, tau)`` (coordinate velocity, its Euclidean Jacobian
and the frame divergence); :class:`HVectorField` and
:class:`TimeDependentField` both qualify. The frame fields have zero Euclidean
divergence, so the frame divergence of ``b`` equals the trace of the velocity
Jacobian and ``log det D_p Phi`` grows at rate ``div b`` along trajectories.
"""
from __future__ import annotations

import csv
import io
import inspect
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .grid_calculus import Box, GridField, cell_centers, lattice_points
from .heis_core import frame_matrix, to_frame


class FlowEscapeError(RuntimeError):
    pass


class DegenerateJacobian(RuntimeError):
    pass


class _Reversed:
    """``-b`` for the minus form of the transport equation."""

    def __init__(self, b):
        self.b = b

    @property
    def n(self):
        return self.b.n

    def velocity(self, pts, tau=0.0):
        return -self.b.velocity(pts, tau)

    def velocity_jacobian(self, pts, tau=0.0):
        return -self.b.velocity_jacobian(pts, tau)

    def divergence_at(self, pts, tau=0.0):
        return -self.b.divergence_at(pts, tau)

    def __call__(self, pts, tau=0.0):
        return -_frame_values(self.b, pts, tau)

    def flow_terms(self, pts, tau=0.0):
        return tuple(-a for a in _flow_terms(self.b, pts, tau))


def _frame_values(b, pts, tau):
    try:
        return b(pts, tau)
    except TypeError:
        return b(pts)


def timed(f) -> Callable:
    """Normalise ``None``, a number, ``f(pts)`` or ``f(pts, tau)`` to ``g(pts, tau)``."""
    if f is None:
        return lambda pts, tau: np.zeros(np.shape(pts)[:-1])
    if isinstance(f, (int, float)):
        return lambda pts, tau: np.full(np.shape(pts)[:-1], float(f))
    target = f.__call__ if not inspect.isfunction(f) and not inspect.ismethod(f) else f
    try:
        params = [p for p in inspect.signature(target).parameters.values()
                  if p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)]
    except (TypeError, ValueError):
        params = []
    if len(params) >= 2:
        return lambda pts, tau: f(pts, tau)
    return lambda pts, tau: f(pts)


@dataclass
class FlowMap:
    """Recorded states of ``d/dtau Phi = b(tau, Phi)`` for a batch of initial points.

    ``points``/``jacobians``/``logdet``/``div_integral`` are indexed
    ``[record, point, ...]``; ``integrals`` holds any extra quantities
    accumulated along the trajectories.
    """

    times: np.ndarray
    points: np.ndarray
    jacobians: np.ndarray
    logdet: np.ndarray
    div_integral: np.ndarray
    integrals: dict = field(default_factory=dict)
    step: float = 0.0

    @property
    def initial(self) -> np.ndarray:
        return self.points[0]

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]

    @property
    def N(self) -> int:
        return self.points.shape[-1]

    def index(self, tau: float) -> int:
        k = int(np.argmin(np.abs(self.times - tau)))
        if not np.isclose(self.times[k], tau, rtol=0, atol=1e-12 + 1e-9 * abs(tau)):
            raise KeyError(f"tau={tau} was not recorded")
        return k

    def logdet_drift(self) -> float:
        """Max of ``|log det D_p Phi - int div b o Phi|`` over records and points."""
        return float(np.max(np.abs(self.logdet - self.div_integral)))

    def trajectory_csv(self, path=None, which: Sequence[int] | None = None) -> str:
        """Columns ``index, tau, x_1.., y_1.., t, logdet``."""
        from .report import fmt

        n = (self.N - 1) // 2
        names = ["index", "tau"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)] + ["t", "logdet"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names if n > 1 else ["index", "tau", "x", "y", "t", "logdet"])
        idx = range(self.points.shape[1]) if which is None else which
        for i in idx:
            for k, tau in enumerate(self.times):
                w.writerow([i, fmt(float(tau))] + [fmt(float(v)) for v in self.points[k, i]] + [fmt(float(self.logdet[k, i]))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _flow_terms(b, P, tau):
    if hasattr(b, "flow_terms"):
        return b.flow_terms(P, tau)
    return b.velocity(P, tau), b.velocity_jacobian(P, tau), b.divergence_at(P, tau)


def _rhs(b, tau, P, J, extra):
    V, DV, dl = _flow_terms(b, P, tau)
    dJ = DV @ J
    dx = {k: g(P, tau) for k, g in extra.items()}
    return V, dJ, dl, dx


def integrate_flow(b, initials, horizon: float, step: float = 1e-3, tau0: float = 0.0,
                   region: Box | None = None, record: str | int = "all",
                   integrands: dict | None = None) -> FlowMap:
    """Classical RK4 for the trajectories and the variational equation ``dJ = (dV/dp) J``.

    ``horizon`` may be negative (backward characteristics). ``record`` is
    ``"all"``, ``"final"`` or an integer stride. With ``region`` given, any
    trajectory leaving it raises :class:`FlowEscapeError`. ``integrands``
    maps names to ``g(pts, tau)`` accumulated along the trajectories.
    """
    P = np.array(initials, dtype=float).reshape(-1, np.shape(initials)[-1])
    m, N = P.shape
    M = int(round(abs(horizon) / step)) if horizon else 0
    hstep = horizon / M if M else 0.0
    extra = {k: timed(g) for k, g in (integrands or {}).items()}
    J = np.broadcast_to(np.eye(N), (m, N, N)).copy()
    ell = np.zeros(m)
    acc = {k: np.zeros(m) for k in extra}
    stride = M if record == "final" else (1 if record == "all" else int(record))
    stride = max(stride, 1)
    rec_t, rec_p, rec_j, rec_l = [tau0], [P.copy()], [J.copy()], [ell.copy()]
    rec_x = {k: [v.copy()] for k, v in acc.items()}
    tau = tau0
    for k in range(1, M + 1):
        h = hstep
        V1, J1, l1, x1 = _rhs(b, tau, P, J, extra)
        V2, J2, l2, x2 = _rhs(b, tau + h / 2, P + h / 2 * V1, J + h / 2 * J1, extra)
        V3, J3, l3, x3 = _rhs(b, tau + h / 2, P + h / 2 * V2, J + h / 2 * J2, extra)
        V4, J4, l4, x4 = _rhs(b, tau + h, P + h * V3, J + h * J3, extra)
        P = P + h / 6 * (V1 + 2 * V2 + 2 * V3 + V4)
        J = J + h / 6 * (J1 + 2 * J2 + 2 * J3 + J4)
        ell = ell + h / 6 * (l1 + 2 * l2 + 2 * l3 + l4)
        for key in acc:
            acc[key] = acc[key] + h / 6 * (x1[key] + 2 * x2[key] + 2 * x3[key] + x4[key])
        tau = tau0 + k * hstep
        if region is not None and not np.all(region.contains(P, tol=1e-9)):
            bad = int(np.sum(~region.contains(P, tol=1e-9)))
            raise FlowEscapeError(f"{bad} trajectories left the evaluable region by tau={tau:.6g}")
        if k % stride == 0 or k == M:
            if rec_t[-1] != tau:
                rec_t.append(tau)
                rec_p.append(P.copy())
                rec_j.append(J.copy())
                rec_l.append(ell.copy())
                for key in acc:
                    rec_x[key].append(acc[key].copy())
    jac = np.array(rec_j)
    sign, logabs = np.linalg.slogdet(jac)
    if np.any(sign <= 0):
        raise DegenerateJacobian("det D_p Phi lost positivity along a trajectory")
    return FlowMap(np.array(rec_t), np.array(rec_p), jac, logabs, np.array(rec_l),
                   {k: np.array(v) for k, v in rec_x.items()}, abs(hstep))


def flow_points(b, initials, horizon: float, step: float = 1e-3, tau0: float = 0.0, region=None) -> np.ndarray:
    return integrate_flow(b, initials, horizon, step, tau0, region, record="final").final


# -- diagnostics --------------------------------------------------------------------------------
def pushforward_bound(flow: FlowMap, b, region: Box | None = None, h: float = 0.05,
                      tol: float = 0.05) -> tuple[float, float, bool]:
    """``(C_measured, C_theory, C_measured <= C_theory (1 + tol))``.

    ``C_measured`` is the largest density ``exp(-int div b o Phi)`` of the
    push-forward; ``C_theory = exp(int ||(div b)^-||_inf dtau)`` with the sup
    taken over lattice samples of ``region`` (default: the bounding box of all
    trajectories) together with the trajectory points themselves.
    """
    measured = float(np.max(np.exp(-flow.div_integral)))
    pts = flow.points
    if region is None:
        region = Box(tuple(pts.reshape(-1, flow.N).min(axis=0)), tuple(pts.reshape(-1, flow.N).max(axis=0) + 1e-12))
    grid = lattice_points(region, h).reshape(-1, flow.N)
    sups = []
    for k, tau in enumerate(flow.times):
        neg = np.concatenate([-b.divergence_at(grid, tau), -b.divergence_at(pts[k], tau), [0.0]])
        sups.append(max(0.0, float(np.max(neg))))
    sups = np.array(sups)
    # the larger endpoint per step, since a trapezoid of sups need not bound the integral
    integral = float(np.sum(np.maximum(sups[1:], sups[:-1]) * np.abs(np.diff(flow.times)))) if len(sups) > 1 else 0.0
    theory = float(np.exp(integral))
    return measured, theory, bool(measured <= theory * (1 + tol))


def horizontality_defect(flow: FlowMap, per_time: bool = False):
    """Largest T-component of ``D_p Phi`` applied to ``X_j(p), Y_j(p)``, expanded at ``Phi(p)``."""
    N = flow.N
    p0 = flow.initial
    frames = frame_matrix(p0, "left")[:, : N - 1, :]  # (m, 2n, N) rows are coordinate vectors
    out = []
    for k in range(len(flow.times)):
        pushed = np.einsum("mab,mjb->mja", flow.jacobians[k], frames)
        at = np.broadcast_to(flow.points[k][:, None, :], pushed.shape)
        tcomp = to_frame(at, pushed)[..., -1]
        out.append(float(np.max(np.abs(tcomp))) if tcomp.size else 0.0)
    return np.array(out) if per_time else max(out)


def semigroup_defect(b, initials, t1: float, t2: float, step: float = 1e-3) -> float:
    """``max |Phi(t1 + t2, p) - Phi(t2, Phi(t1, p))|`` for autonomous ``b``."""
    direct = flow_points(b, initials, t1 + t2, step)
    split = flow_points(b, flow_points(b, initials, t1, step), t2, step)
    return float(np.max(np.abs(direct - split)))


# -- time fields ------------------------------------------------------------------------------
TIMEFIELD_VERSION = 1


@dataclass
class TimeField:
    """Grid snapshots ``(tau_i, u_i)`` joined piecewise-linearly in tau."""

    times: Sequence[float]
    snapshots: Sequence[GridField]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size != len(self.snapshots) or t.size < 1:
            raise ValueError("need one snapshot per time")
        if np.any(np.diff(t) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        self.times = t

    @property
    def box(self) -> Box:
        return self.snapshots[0].box

    def __call__(self, pts, tau: float) -> np.ndarray:
        t = self.times
        if tau <= t[0] or t.size == 1:
            return self.snapshots[0](pts)
        if tau >= t[-1]:
            return self.snapshots[-1](pts)
        k = int(np.searchsorted(t, tau, side="right")) - 1
        a = (tau - t[k]) / (t[k + 1] - t[k])
        if a == 0:
            return self.snapshots[k](pts)
        return (1 - a) * self.snapshots[k](pts) + a * self.snapshots[k + 1](pts)

    def map(self, fn: Callable) -> "TimeField":
        return TimeField(self.times, [s.map(fn) for s in self.snapshots])

    def save(self, directory) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        files = []
        for i, s in enumerate(self.snapshots):
            name = f"snapshot_{i:04d}.npz"
            s.save(d / name)
            files.append(name)
        index = {"format": "heislab-timefield", "version": TIMEFIELD_VERSION,
                 "times": [float(x) for x in self.times], "files": files}
        (d / "timefield.json").write_text(json.dumps(index, indent=2))
        return d

    @classmethod
    def load(cls, directory) -> "TimeField":
        d = Path(directory)
        index = json.loads((d / "timefield.json").read_text())
        if index.get("format") != "heislab-timefield" or index.get("version") != TIMEFIELD_VERSION:
            raise ValueError("not a supported time-field directory")
        return cls(index["times"], [GridField.load(d / f) for f in index["files"]])


# -- characteristic solvers ---------------------------------------------------------------------
FORMS = ("plus", "minus")
REACTIONS = ("multiplicative", "additive")


def _char_field(b, form: str):
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    return b if form == "plus" else _Reversed(b)


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 1 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("time grid must start at 0 and increase strictly")
    return t


def solve_transport(b, c, u0, times, box: Box, h: float = 0.05, form: str = "plus",
                    reaction: str = "multiplicative", step: float = 1e-2,
                    region: Box | None = None) -> TimeField:
    """Method of characteristics on the lattice of ``box``.

    ``plus``: ``du/dtau + <b, grad u> + c u = 0``; ``minus`` replaces ``b`` by
    ``-b``. With ``reaction="multiplicative"`` the solution is
    ``u0(X(0)) exp(-int c(X))`` along the backward characteristic ``X`` through
    the output point; ``"additive"`` uses ``u0(X(0)) - int c(X)`` instead.
    """
    if reaction not in REACTIONS:
        raise ValueError(f"reaction must be one of {REACTIONS}")
    t = _check_times(times)
    field_ = _char_field(b, form)
    cfn = timed(c)
    u0fn = timed(u0)
    pts = lattice_points(box, h)
    shape = pts.shape[:-1]
    flat = pts.reshape(-1, box.dim)
    snaps = []
    for tau in t:
        if tau == 0.0:
            vals = u0fn(flat, 0.0)
        else:
            m = max(1, int(round(tau / step)))
            fl = integrate_flow(field_, flat, -tau, tau / m, tau0=tau, region=region, record="final",
                                integrands={"c": cfn})
            # the accumulated integral runs from tau down to 0, so it is -int_0^tau c
            cint = -fl.integrals["c"][-1]
            base = u0fn(fl.final, 0.0)
            vals = base * np.exp(-cint) if reaction == "multiplicative" else base - cint
        snaps.append(GridField(box, h, vals.reshape(shape)))
    return TimeField(t, snaps)


def solve_continuity(b, u0, times, box: Box, h: float = 0.05, step: float = 1e-2,
                     region: Box | None = None) -> TimeField:
    """``du/dtau + div(b u) = 0`` via ``u(s, Phi(s, p)) = u0(p) / det D_p Phi(s, p)``.

    The backward flow from the output point ``q`` gives ``p = Phi(-s, q)`` and
    ``det D_q Phi(-s) = 1 / det D_p Phi(s)``.
    """
    t = _check_times(times)
    u0fn = timed(u0)
    pts = lattice_points(box, h)
    shape = pts.shape[:-1]
    flat = pts.reshape(-1, box.dim)
    snaps = []
    for tau in t:
        if tau == 0.0:
            vals = u0fn(flat, 0.0)
        else:
            m = max(1, int(round(tau / step)))
            fl = integrate_flow(b, flat, -tau, tau / m, tau0=tau, region=region, record="final")
            det = np.exp(fl.logdet[-1])
            if np.any(det < 1e-12):
                raise DegenerateJacobian("|det D_p Phi| < 1e-12 in the continuity solver")
            vals = u0fn(fl.final, 0.0) * det
        snaps.append(GridField(box, h, vals.reshape(shape)))
    return TimeField(t, snaps)


def mass(field_: TimeField, tau: float, region: Box | None = None, h: float | None = None) -> float:
    """Integral of the solution at ``tau``.

    At a recorded time with no ``region`` the trapezoid rule on the snapshot
    nodes is used (no interpolation, spectrally accurate for data vanishing
    at the box faces); otherwise a midpoint rule over ``region``.
    """
    hit = np.isclose(field_.times, tau, rtol=0, atol=1e-12)
    if region is None and h is None and np.any(hit):
        snap = field_.snapshots[int(np.argmax(hit))]
        w = np.array(snap.values, dtype=float)
        for ax in range(w.ndim):
            idx = [slice(None)] * w.ndim
            for end in (0, -1):
                idx[ax] = end
                w[tuple(idx)] *= 0.5
        return float(np.sum(w) * np.prod(snap.spacing))
    region = region or field_.box
    h = h or float(np.min(field_.snapshots[0].spacing))
    pts, vol = cell_centers(region, h)
    return float(np.sum(field_(pts, tau)) * vol)


# -- weak-form residuals -----------------------------------------------------------------------
@dataclass(frozen=True)
class TestFunction:
    """``phi(tau, p) = chi(tau) eta(p)`` with ``chi(tau) = (1 - tau / tau_bar)^2 (1 + tau)`` on ``[0, tau_bar]``.

    ``chi`` vanishes to second order at ``tau_bar`` and has non-zero slope at
    0, so the time quadrature error is a clean second-order term.
    """

    eta: object
    tau_bar: float

    __test__ = False

    def chi(self, tau) -> np.ndarray:
        s = np.clip(np.asarray(tau, dtype=float) / self.tau_bar, 0.0, 1.0)
        return (1 - s) ** 2 * (1 + np.asarray(tau, dtype=float))

    def dchi(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        s = np.clip(tau / self.tau_bar, 0.0, 1.0)
        return np.where(tau < self.tau_bar, -2 * (1 - s) / self.tau_bar * (1 + tau) + (1 - s) ** 2, 0.0)


def _weak_pairing(values: Callable, initial: Callable, b, reaction_term: Callable, phi: TestFunction,
                  times: np.ndarray, box: Box, h: float, form: str) -> float:
    eta = phi.eta
    n = eta.n
    pts, vol = cell_centers(box, h)
    P = pts.reshape(-1, box.dim)
    eta_v = eta(P)
    grad = np.stack([eta.Z(j)(P) for j in range(1, 2 * n + 2)], axis=-1)
    sign = 1.0 if form == "minus" else -1.0
    integrand = []
    for tau in times:
        bv = _frame_values(b, P, tau)
        div = b.divergence_at(P, tau)
        u = values(P, tau)
        bg = np.sum(bv * grad, axis=-1)
        val = u * (-phi.dchi(tau) * eta_v + sign * phi.chi(tau) * (bg + div * eta_v)) + reaction_term(P, tau) * phi.chi(tau) * eta_v
        integrand.append(float(np.sum(val) * vol))
    integrand = np.array(integrand)
    space_time = float(np.sum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times)))
    init = float(np.sum(initial(P) * phi.chi(0.0) * eta_v) * vol)
    return space_time - init


def _residual_setup(u, phi: TestFunction, box: Box | None):
    times = u.times
    if times[0] != 0.0 or times[-1] < phi.tau_bar - 1e-12:
        raise ValueError("time grid must cover [0, tau_bar]")
    times = times[times <= phi.tau_bar + 1e-12]
    box = box or u.box
    return times, box


def distributional_residual(u: TimeField, u0, b, c, phi: TestFunction, form: str = "plus",
                            box: Box | None = None, h: float | None = None) -> float:
    """Weak-form pairing of a candidate solution; zero for exact solutions.

    minus: ``-int u0 phi(0) + int int u [-d_tau phi + <b, grad phi> + (c + div b) phi]``;
    plus uses ``-b`` in place of ``b``. ``<b, grad phi> = sum_j b_j Z_j phi``.
    """
    return renormalization_residual(u, lambda r: r, u0, b, c, phi, form, box, h, _dbeta=np.ones_like)


def renormalization_residual(u: TimeField, beta: Callable, u0, b, c, phi: TestFunction, form: str = "plus",
                             box: Box | None = None, h: float | None = None, _dbeta: Callable | None = None) -> float:
    """The weak pairing for ``beta(u)`` with reaction ``c u beta'(u)``."""
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    times, box = _residual_setup(u, phi, box)
    h = h or float(np.min(u.snapshots[0].spacing))
    dbeta = _dbeta or _numeric_derivative(beta)
    cfn = timed(c)
    u0fn = timed(u0)

    def reaction(P, tau):
        v = u(P, tau)
        return cfn(P, tau) * v * dbeta(v)

    return _weak_pairing(lambda P, tau: beta(u(P, tau)), lambda P: beta(u0fn(P, 0.0)), b, reaction,
                         phi, times, box, h, form)


def _numeric_derivative(beta: Callable) -> Callable:
    import sympy as sp

    from .fields import R_SYMBOL

    return sp.lambdify(R_SYMBOL, sp.diff(beta(R_SYMBOL), R_SYMBOL), "numpy")


def frozen_solution(u0, times, box: Box, h: float) -> TimeField:
    """The wrong candidate ``u(tau) = u0`` used as a negative control."""
    u0fn = timed(u0)
    g = GridField.sample(lambda P: u0fn(P, 0.0), box, h)
    return TimeField(times, [g] * len(times))
