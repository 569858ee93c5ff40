"""The mollification commutator of the transport equation and its decomposition.

With ``u_eps = u * rho_eps`` the commutator is ``C_eps = C1 + C2`` where

    C1(p) = -((u div b) * rho_eps)(p)
            - int u(p q^-1) sum_j [b_j(p) Z_j rho_eps(q) - b_j(p q^-1) Z_j^r rho_eps(q)] dq
    C2(p) = int u(p q^-1) rho_eps(q) [c(p) - c(p q^-1)] dq.

After ``q = delta_eps(w)^-1`` the same quantity splits as
``-C1 = (u div b) * rho_eps + A1 + B1 + B2``, and ``B2`` carries the factor
``grad_H b_N + 4 J(b)`` that vanishes exactly for contact fields.

Two quadrature routes evaluate the integrals. The ``kernel`` route places a
Gauss lattice on the kernel support and suits smooth ``u``. The ``source``
route is for a :class:`ConcentratedDatum`, a unit-mass bump living on a group
box much smaller than the kernel scale: the lattice sits on the datum's
support, and the L^1 norm is taken over output points ``p0 . delta_eps(z)``
with ``z`` on a lattice covering every point the kernel can reach.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .contact_fields import HVectorField
from .fields import ScalarField
from .grid_calculus import Box, GridField, cell_centers, lattice_points, lp_from_values
from .heis_core import dilate, inverse, mul
from .mollification import CHUNK_ELEMENTS, Mollifier, _bump_mass, _gauss_lattice, required_box, scale
from .report import ConvergenceReport, strictly_monotone

CONTACT = "CONTACT-VANISHING"
BLOWUP = "NONCONTACT-BLOWUP"
INCONCLUSIVE = "INCONCLUSIVE"


class NoiseFloorError(RuntimeError):
    pass


@dataclass
class CommutatorInput:
    u: Callable
    b: HVectorField
    rho: Mollifier
    ladder: Sequence[float]
    K: Box
    c: ScalarField | None = None
    h: float = 0.05
    nodes: int | None = None
    ref_nodes: int | None = None
    source_nodes: int = 6
    output_nodes: int = 24
    threads: int = 1
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        lad = np.asarray(self.ladder, dtype=float)
        if lad.size < 1 or np.any(lad <= 0) or np.any(np.diff(lad) >= 0):
            raise ValueError("eps ladder must be positive and strictly decreasing")
        if isinstance(self.u, GridField):
            need = required_box(self.K, float(lad.max()), self.rho)
            if not self.u.box.contains_box(need):
                raise ValueError("evaluation region K is too close to the boundary of the grid for the largest eps")
        if isinstance(self.u, ConcentratedDatum):
            for eps in lad:
                if not self.K.contains_box(self.u.output_box(eps, self.rho)):
                    raise ValueError(f"region K does not contain the support of C_eps for eps={eps}")

    @property
    def route(self) -> str:
        return "source" if isinstance(self.u, ConcentratedDatum) else "kernel"

    @property
    def n(self) -> int:
        return self.b.n


@dataclass(frozen=True)
class ConcentratedDatum:
    """``u(r) = phi(center^-1 . r)`` with ``phi`` a unit-mass product bump on ``[-a, a]``.

    Translation preserves Haar measure, so ``u`` has unit mass as well. As the
    half-widths shrink below the kernel scale ``u`` approaches a point mass.
    """

    center: tuple
    half_widths: tuple
    power: int = 4

    @property
    def N(self) -> int:
        return len(self.center)

    @cached_property
    def _c(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    @cached_property
    def _a(self) -> np.ndarray:
        return np.asarray(self.half_widths, dtype=float)

    @cached_property
    def constant(self) -> float:
        return 1.0 / float(np.prod([_bump_mass(a, self.power) for a in self._a]))

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        z = mul(np.broadcast_to(inverse(self._c), r.shape), r) / self._a
        inside = np.all(np.abs(z) < 1.0, axis=-1)
        vals = self.constant * np.prod(np.clip(1.0 - z * z, 0.0, None) ** self.power, axis=-1)
        return np.where(inside, vals, 0.0)

    def lattice(self, nodes: int):
        """Gauss nodes ``center . s`` on the support and their weights."""
        S, ws = _gauss_lattice(tuple(self._a), nodes)
        return mul(np.broadcast_to(self._c, S.shape), S), ws

    def reach(self, eps: float, rho: Mollifier) -> np.ndarray:
        """Half-widths of a box of ``z`` with ``center . delta_eps(z)`` covering every output point.

        Output points are ``center . s . delta_eps(-w)``; in rescaled form
        ``z = delta_{1/eps}(s) . (-w)``.
        """
        a = self._a
        hw = rho.half_widths
        n = (self.N - 1) // 2
        sh = a / np.array([eps] * (2 * n) + [eps * eps])
        out = sh + hw
        out[-1] += 2.0 * np.sum(sh[:n] * hw[n : 2 * n] + hw[:n] * sh[n : 2 * n])
        return out

    def output_points(self, eps: float, rho: Mollifier, m: int):
        """Midpoints ``center . delta_eps(z)`` of an ``m``-per-axis lattice in ``z`` and the p-cell volume."""
        r = self.reach(eps, rho)
        zbox = Box(tuple(-r), tuple(r))
        Z, vol = cell_centers(zbox, 2 * r / m)
        Z = dilate(eps, Z.reshape(-1, self.N))
        P = mul(np.broadcast_to(self._c, Z.shape), Z)
        return P, vol * eps ** (self.N + 1)

    def output_box(self, eps: float, rho: Mollifier) -> Box:
        r = self.reach(eps, rho)
        corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * self.N, indexing="ij")).reshape(self.N, -1).T * r
        pts = mul(np.broadcast_to(self._c, corners.shape), dilate(eps, corners))
        # left translation by the centre is affine, so the corners bound the image
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return Box(tuple(lo), tuple(hi))


# -- field evaluation helpers -------------------------------------------------------------
class _Fields:
    """Numeric evaluators of everything the integrands need, built once per input."""

    def __init__(self, inp: CommutatorInput):
        b = inp.b
        n = b.n
        self.u = inp.u
        self.b = b
        self.div = b.divergence()
        self.grad_bN = [b.components[-1].Z(j) for j in range(1, 2 * n + 1)]
        self.T_bN = b.components[-1].Z(b.N)
        self.c = inp.c
        self.n = n

    def residual_vector(self, P: np.ndarray) -> np.ndarray:
        """``grad_H b_N + 4 J(b)_H`` at ``P``, shape ``(..., 2n)``."""
        n = self.n
        bp = self.b(P)
        g = np.stack([f(P) for f in self.grad_bN], axis=-1)
        jb = np.concatenate([-bp[..., n : 2 * n], bp[..., :n]], axis=-1)
        return g + 4.0 * jb


def _chunks(total: int, per: int):
    step = max(1, CHUNK_ELEMENTS // max(1, per))
    return [(s, min(total, s + step)) for s in range(0, total, step)]


def _run_blocks(P: np.ndarray, per: int, work: Callable, threads: int):
    blocks = _chunks(P.shape[0], per)
    if threads > 1 and len(blocks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda se: work(P[se[0] : se[1]]), blocks))
    else:
        parts = [work(P[s:e]) for s, e in blocks]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def _source_lattice(inp: CommutatorInput, nodes: int | None = None):
    return inp.u.lattice(nodes or inp.source_nodes)


# -- direct form ------------------------------------------------------------------------------
def _direct_block(F: _Fields, eps: float, P: np.ndarray, route: str, lattice) -> dict:
    """C1 and C2 at the points ``P`` (shape ``(m, N)``) from the q-integral form."""
    kernel = scale(F.b_rho, eps)
    m = P.shape[0]
    Pb = P[:, None, :]
    if route == "kernel":
        W, wt = lattice
        Q = dilate(eps, W)[None]  # q = delta_eps(w)
        weight = wt * eps ** kernel.rho.Q
        R = mul(np.broadcast_to(Pb, (m,) + Q.shape[1:]), np.broadcast_to(inverse(Q), (m,) + Q.shape[1:]))
    else:
        Rn, weight = lattice
        R = Rn[None]  # field values at the source nodes are shared by every output point
        shape = (m,) + Rn.shape
        Q = mul(np.broadcast_to(inverse(R), shape), np.broadcast_to(Pb, shape))  # q = r^-1 p
    rq = kernel(Q)
    zl = kernel.frame_derivatives(Q, "left")
    zr = kernel.frame_derivatives(Q, "right")
    ur = F.u(R)
    br = F.b(R)
    bp = F.b(P)
    div_r = F.div(R)
    c1 = -(ur * div_r * rq)
    inner = np.einsum("mj,mlj->ml", bp, np.broadcast_to(zl, (m,) + zl.shape[1:])) - np.sum(br * zr, axis=-1)
    c1 = c1 - ur * inner
    out = {"C1": _weighted(c1, weight)}
    if F.c is not None:
        c2 = ur * rq * (F.c(P)[:, None] - F.c(R))
        out["C2"] = _weighted(c2, weight)
    else:
        out["C2"] = np.zeros(m)
    return out


def _weighted(vals: np.ndarray, weight: np.ndarray) -> np.ndarray:
    if np.ndim(weight) == 1:
        return vals @ weight
    return np.sum(vals * weight, axis=-1)


# -- decomposed form ---------------------------------------------------------------------------
def _decomposed_block(F: _Fields, eps: float, P: np.ndarray, route: str, lattice) -> dict:
    rho = F.b_rho
    n = F.n
    N = 2 * n + 1
    m = P.shape[0]
    Pb = P[:, None, :]
    if route == "kernel":
        W, weight = lattice
        Wb = W[None]
        R = mul(np.broadcast_to(Pb, (m,) + W.shape), np.broadcast_to(dilate(eps, W)[None], (m,) + W.shape))
    else:
        Rn, wr = lattice
        R = Rn[None]
        shape = (m,) + Rn.shape
        Wb = dilate(1.0 / eps, mul(np.broadcast_to(inverse(Pb), shape), np.broadcast_to(R, shape)))
        weight = wr * eps ** (-rho.Q)
    r0 = rho(Wb)
    zl = rho.frame_derivatives(Wb, "left")
    ur = F.u(R)
    br = F.b(R)
    bp = F.b(P)
    gbn = np.stack([f(P) for f in F.grad_bN], axis=-1)
    v = F.residual_vector(P)
    wh = Wb[..., :-1]
    mdiv = _weighted(np.broadcast_to(ur * F.div(R) * r0, (m,) + r0.shape[1:]), weight)
    a1 = np.zeros((m,) + Wb.shape[1:-1])
    for j in range(2 * n):
        a1 = a1 + (br[..., j] - bp[:, None, j]) / eps * zl[..., j]
    A1 = _weighted(a1 * ur, weight)
    lin = np.einsum("mi,mli->ml", gbn, wh)
    b1 = (br[..., N - 1] - bp[:, None, N - 1] - eps * lin) / eps**2
    tr = zl[..., N - 1]
    B1 = _weighted(b1 * ur * tr, weight)
    b2 = np.einsum("mi,mli->ml", v, wh) / eps
    B2 = _weighted(b2 * ur * tr, weight)
    return {"mdiv": mdiv, "A1": A1, "B1": B1, "B2": B2}


def _lattice(inp: CommutatorInput, nodes: int | None, direct: bool):
    if inp.route == "kernel":
        return inp.rho.lattice(nodes or inp.nodes)
    return _source_lattice(inp, nodes)


def _prepare(inp: CommutatorInput) -> _Fields:
    F = _Fields(inp)
    F.b_rho = inp.rho
    return F


def evaluation_points(inp: CommutatorInput, eps: float, output_nodes: int | None = None):
    """Points and cell volume for L^1 norms: K cell centres, or the source-route output lattice."""
    if inp.route == "kernel":
        pts, vol = cell_centers(inp.K, inp.h)
        return pts.reshape(-1, inp.K.dim), vol
    return inp.u.output_points(eps, inp.rho, output_nodes or inp.output_nodes)


def _terms_at(inp: CommutatorInput, eps: float, P: np.ndarray, F=None, nodes=None, which=("direct", "decomposed")):
    F = F or _prepare(inp)
    out = {}
    L = _lattice(inp, nodes, True)
    per = L[0].shape[0]
    if "direct" in which:
        out.update(_run_blocks(P, per, lambda B: _direct_block(F, eps, B, inp.route, L), inp.threads))
    if "decomposed" in which:
        out.update(_run_blocks(P, per, lambda B: _decomposed_block(F, eps, B, inp.route, L), inp.threads))
    return out


def commutator_direct(inp: CommutatorInput, eps: float, points=None) -> GridField | dict:
    """``C_eps`` from the q-integral form.

    Without ``points`` the result is sampled on the lattice of ``K`` (spacing
    ``inp.h``) and returned as a :class:`GridField`; with ``points`` a dict of
    arrays ``C1``, ``C2``, ``C`` is returned.
    """
    if points is None:
        pts = lattice_points(inp.K, inp.h)
        flat = pts.reshape(-1, inp.K.dim)
        t = _terms_at(inp, eps, flat, which=("direct",))
        return GridField(inp.K, inp.h, (t["C1"] + t["C2"]).reshape(pts.shape[:-1]))
    P = np.asarray(points, dtype=float).reshape(-1, inp.K.dim)
    t = _terms_at(inp, eps, P, which=("direct",))
    t["C"] = t["C1"] + t["C2"]
    return t


@dataclass
class CommutatorBreakdown:
    eps: float
    points: np.ndarray
    cell_volume: float
    terms: dict
    norms: dict

    @property
    def C1(self) -> np.ndarray:
        t = self.terms
        return -(t["mdiv"] + t["A1"] + t["B1"] + t["B2"])


def commutator_decomposed(inp: CommutatorInput, eps: float, points=None, cell_volume=None) -> CommutatorBreakdown:
    """The split ``-C1 = (u div b) * rho_eps + A1 + B1 + B2`` plus ``C2``, with L^1 norms."""
    if points is None:
        P, vol = evaluation_points(inp, eps)
    else:
        P = np.asarray(points, dtype=float).reshape(-1, inp.K.dim)
        vol = cell_volume if cell_volume is not None else 1.0
    t = _terms_at(inp, eps, P)
    norms = {k: lp_from_values(t[k], vol, 1.0) for k in ("mdiv", "A1", "B1", "B2", "C2")}
    return CommutatorBreakdown(eps, P, vol, t, norms)


def limit_terms(inp: CommutatorInput, P: np.ndarray) -> dict:
    """Pointwise limits ``A1 -> -u div b + u T b_N`` and ``B1 -> -u T b_N``."""
    F = _prepare(inp)
    up = F.u(P)
    tb = F.T_bN(P)
    return {"A1": -up * F.div(P) + up * tb, "B1": -up * tb}


def moment_cancellations(rho: Mollifier, nodes: int | None = None) -> float:
    """Largest lattice value of ``int Z_j(w_i rho) dw`` (i, j horizontal) and ``int T(w_N rho) dw``."""
    W, wt = rho.lattice(nodes)
    n = rho.n
    r = rho(W)
    z = rho.frame_derivatives(W, "left")
    worst = 0.0
    for i in range(2 * n):
        for j in range(2 * n):
            integrand = (1.0 if i == j else 0.0) * r + W[:, i] * z[:, j]
            worst = max(worst, abs(float(integrand @ wt)))
    worst = max(worst, abs(float((r + W[:, -1] * z[:, -1]) @ wt)))
    return worst


def c2_bound(inp: CommutatorInput, eps: float, s: float = 2.0) -> tuple[float, float]:
    """``(||C2||_{L^1(K)}, sum_w rho(w) ||u o R_w||_{L^s(K)} ||c - c o R_w||_{L^{s'}(K)})``.

    ``R_w`` is right translation by ``delta_eps(w)``; Hoelder in p for every
    lattice node gives the bound exactly at the discrete level.
    """
    if inp.c is None:
        return 0.0, 0.0
    P, vol = cell_centers(inp.K, inp.h)
    P = P.reshape(-1, inp.K.dim)
    W, wt = inp.rho.kernel_lattice(inp.nodes)
    sp = np.inf if s == 1 else s / (s - 1.0)
    cp = inp.c(P)
    total = 0.0
    for w, weight in zip(dilate(eps, W), wt):
        if weight == 0:
            continue
        shifted = mul(P, np.broadcast_to(w, P.shape))
        total += weight * lp_from_values(inp.u(shifted), vol, s) * lp_from_values(cp - inp.c(shifted), vol, sp)
    lhs = commutator_decomposed(inp, eps).norms["C2"]
    return lhs, float(total)


def _noise(inp: CommutatorInput, eps: float, P, vol, base: np.ndarray, base_norm: float) -> float:
    if inp.route == "kernel":
        ref = inp.ref_nodes or (inp.nodes or inp.rho.nodes) + 6
        t = _terms_at(inp, eps, P, nodes=ref, which=("direct",))
        return lp_from_values(base - (t["C1"] + t["C2"]), vol, 1.0)
    # refine the source lattice and the output cells independently
    t = _terms_at(inp, eps, P, nodes=inp.source_nodes + 3, which=("direct",))
    quad = lp_from_values(base - (t["C1"] + t["C2"]), vol, 1.0)
    P2, vol2 = evaluation_points(inp, eps, inp.output_nodes + 8)
    t2 = _terms_at(inp, eps, P2, which=("direct",))
    cells = abs(lp_from_values(t2["C1"] + t2["C2"], vol2, 1.0) - base_norm)
    return max(quad, cells)


def commutator_study(inp: CommutatorInput, strict: bool = True, min_points: int = 4) -> ConvergenceReport:
    """Ladder of ``||C_eps||_{L^1}``, the decomposition diagnostics, noise floors and a verdict.

    The verdict is CONTACT-VANISHING when the norms strictly decrease with a
    positive fitted rate, NONCONTACT-BLOWUP when they strictly increase with a
    negative rate, INCONCLUSIVE otherwise. With ``strict`` the run aborts if
    the smallest eps leaves the commutator within 10x of its noise floor.
    """
    if len(inp.ladder) < min_points:
        raise ValueError(f"commutator study needs at least {min_points} ladder points")
    cols = ["eps", "C_total", "A1_err", "B1_err", "B2_norm", "noise_floor",
            "C1_norm", "C2_norm", "direct_decomposed_gap", "gap_tolerance"]
    rep = ConvergenceReport(kind="commutator", parameter="eps", columns=cols,
                            meta={"route": inp.route, "contact": inp.b.is_contact, "h": inp.h,
                                  "nodes": inp.nodes or inp.rho.nodes, **inp.tags})
    for eps in inp.ladder:
        P, vol = evaluation_points(inp, eps)
        t = _terms_at(inp, eps, P)
        direct = t["C1"] + t["C2"]
        ctot = lp_from_values(direct, vol, 1.0)
        decomposed_c1 = -(t["mdiv"] + t["A1"] + t["B1"] + t["B2"])
        gap = lp_from_values(t["C1"] - decomposed_c1, vol, 1.0)
        lim = limit_terms(inp, P)
        noise = _noise(inp, eps, P, vol, direct, ctot)
        scale_ = sum(lp_from_values(t[k], vol, 1.0) for k in ("mdiv", "A1", "B1", "B2"))
        tol = 2.0 * max(noise, 1e-12 * scale_)
        rep.add_row(
            eps=float(eps), C_total=ctot,
            A1_err=lp_from_values(t["A1"] - lim["A1"], vol, 1.0),
            B1_err=lp_from_values(t["B1"] - lim["B1"], vol, 1.0),
            B2_norm=lp_from_values(t["B2"], vol, 1.0),
            noise_floor=noise,
            C1_norm=lp_from_values(t["C1"], vol, 1.0),
            C2_norm=lp_from_values(t["C2"], vol, 1.0),
            direct_decomposed_gap=gap, gap_tolerance=tol,
        )
    C = rep.column("C_total")
    noise = rep.column("noise_floor")
    rep.noise_floor = float(noise.max())
    rep.checks["direct_matches_decomposed"] = bool(np.all(rep.column("direct_decomposed_gap") <= rep.column("gap_tolerance")))
    rep.checks["above_noise_floor"] = bool(C[-1] > 0 and C[-1] >= 10.0 * noise[-1])
    if strict and not rep.checks["above_noise_floor"]:
        raise NoiseFloorError(
            f"||C_eps|| = {C[-1]:.3e} at eps={inp.ladder[-1]} is within 10x of the quadrature noise {noise[-1]:.3e}"
        )
    if np.any(C <= 0):
        rep.verdict = INCONCLUSIVE
        return rep
    fit = rep.fit("C_total", "C_total", min_points)
    if strictly_monotone(C, "decreasing") and fit.rate > 0:
        rep.verdict = CONTACT
    elif strictly_monotone(C, "increasing") and fit.rate < 0:
        rep.verdict = BLOWUP
    else:
        rep.verdict = INCONCLUSIVE
    return rep
