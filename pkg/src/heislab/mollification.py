"""Even compactly supported mollifiers, their dilations, and group convolution.

The kernel is a tensor product of one-dimensional polynomial bumps

    rho(w) = C * prod_i (1 - (w_i / a)^2)^k * (1 - (w_N / b)^2)^k

on the box ``[-a, a]^{2n} x [-b, b]`` (zero outside). It is even, of class
C^{k-1}, and with ``a sqrt(2n) + 2 sqrt(b) < 1`` its support sits inside the
unit ball of the gauge ``|w_H| + 2 sqrt(|w_N|)``. Integrals against the kernel
use a tensor Gauss-Legendre lattice on that box; the lattice is symmetric
under ``w -> -w`` and integrates polynomial moments of the kernel exactly.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from math import gamma, sqrt, pi
from typing import Callable

import numpy as np
import sympy as sp

from .fields import ScalarField, coord_symbols
from .grid_calculus import Box, GridField, lattice_points
from .heis_core import dilate, gauge, mul

CHUNK_ELEMENTS = 4_000_000


def _bump_mass(width: float, k: int) -> float:
    # int_{-a}^{a} (1 - (x/a)^2)^k dx
    return width * sqrt(pi) * gamma(k + 1) / gamma(k + 1.5)


@dataclass(frozen=True)
class Mollifier:
    n: int = 1
    power: int = 8
    nodes: int = 17
    horizontal_width: float | None = None
    vertical_width: float = 1.0 / 16.0

    def __post_init__(self):
        if self.horizontal_width is None:
            object.__setattr__(self, "horizontal_width", 0.45 / sqrt(2 * self.n))
        if self.nodes < 17:
            raise ValueError("the kernel lattice needs at least 17 nodes per axis")
        if self.power < 2:
            raise ValueError("profile power must be >= 2 for a C^1 kernel")
        reach = self.horizontal_width * sqrt(2 * self.n) + 2.0 * sqrt(self.vertical_width)
        if reach >= 1.0:
            raise ValueError(f"support reaches gauge radius {reach:.3f} >= 1")

    @property
    def N(self) -> int:
        return 2 * self.n + 1

    @property
    def Q(self) -> int:
        return 2 * self.n + 2

    @property
    def half_widths(self) -> np.ndarray:
        return np.array([self.horizontal_width] * (2 * self.n) + [self.vertical_width])

    @property
    def support_radius(self) -> float:
        """Gauge radius of the support box corner, strictly below 1."""
        return float(gauge(self.half_widths))

    @cached_property
    def constant(self) -> float:
        mass = _bump_mass(self.horizontal_width, self.power) ** (2 * self.n)
        return 1.0 / (mass * _bump_mass(self.vertical_width, self.power))

    @cached_property
    def field(self) -> ScalarField:
        syms = coord_symbols(self.n)
        expr = sp.Float(self.constant)
        for s, w in zip(syms, self.half_widths):
            u = s / sp.Float(w)
            expr = expr * sp.Piecewise(((1 - u**2) ** self.power, sp.Abs(u) < 1), (0, True))
        return ScalarField(expr, self.n, name="rho")

    def __call__(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        u = w / self.half_widths
        inside = np.all(np.abs(u) < 1.0, axis=-1)
        vals = self.constant * np.prod(np.clip(1.0 - u * u, 0.0, None) ** self.power, axis=-1)
        return np.where(inside, vals, 0.0)

    def derivative(self, kind: str, j: int) -> Callable:
        """Closed-form ``Z_j rho`` or ``Z_j^r rho`` (symbolic route)."""
        return self.field.Z(j, kind)

    def euclidean_gradient(self, w) -> np.ndarray:
        """Numeric gradient by the product rule, shape ``(..., N)``."""
        w = np.asarray(w, dtype=float)
        u = w / self.half_widths
        inside = np.all(np.abs(u) < 1.0, axis=-1, keepdims=True)
        base = np.clip(1.0 - u * u, 0.0, None)
        k = self.power
        fac = base**k
        dfac = -2.0 * k * u * base ** (k - 1) / self.half_widths
        out = np.empty_like(w)
        for i in range(self.N):
            others = np.prod(np.delete(fac, i, axis=-1), axis=-1)
            out[..., i] = self.constant * others * dfac[..., i]
        return np.where(inside, out, 0.0)

    def frame_derivatives(self, w, kind: str = "left") -> np.ndarray:
        """All ``Z_j rho(w)`` (or ``Z_j^r rho(w)``) at once, shape ``(..., N)``."""
        w = np.asarray(w, dtype=float)
        g = self.euclidean_gradient(w)
        n = self.n
        c = 2.0 if kind == "left" else -2.0
        out = g.copy()
        out[..., :n] += c * w[..., n : 2 * n] * g[..., -1:]
        out[..., n : 2 * n] -= c * w[..., :n] * g[..., -1:]
        return out

    def lattice(self, nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Tensor Gauss-Legendre nodes ``(L, N)`` and weights ``(L,)`` on the support box."""
        return _gauss_lattice(tuple(self.half_widths), nodes or self.nodes)

    def kernel_lattice(self, nodes: int | None = None):
        """Lattice nodes with weights already multiplied by rho."""
        W, wt = self.lattice(nodes)
        return W, wt * self(W)

    def mass(self, nodes: int | None = None) -> float:
        _, wr = self.kernel_lattice(nodes)
        return float(wr.sum())


_LATTICE_CACHE: dict = {}


def _gauss_lattice(half_widths: tuple, m: int):
    key = (half_widths, m)
    if key not in _LATTICE_CACHE:
        x, w = np.polynomial.legendre.leggauss(m)
        # symmetrize exactly so that w -> -w maps nodes onto nodes bitwise
        x = 0.5 * (x - x[::-1])
        w = 0.5 * (w + w[::-1])
        axes = [x * h for h in half_widths]
        wts = [w * h for h in half_widths]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(half_widths))
        weight = wts[0]
        for extra in wts[1:]:
            weight = np.multiply.outer(weight, extra)
        _LATTICE_CACHE[key] = (grid, weight.reshape(-1))
    return _LATTICE_CACHE[key]


def make_mollifier(n: int = 1, **kwargs) -> Mollifier:
    return Mollifier(n=n, **kwargs)


@dataclass(frozen=True)
class ScaledKernel:
    """``rho_eps(p) = eps^{-Q} rho(delta_{1/eps} p)``."""

    rho: Mollifier
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    @property
    def n(self) -> int:
        return self.rho.n

    def __call__(self, q) -> np.ndarray:
        return self.eps ** (-self.rho.Q) * self.rho(dilate(1.0 / self.eps, np.asarray(q, dtype=float)))

    def frame_derivatives(self, q, kind: str = "left") -> np.ndarray:
        """All ``Z_j rho_eps(q)`` at once via the homogeneity rule, shape ``(..., N)``."""
        rho, eps = self.rho, self.eps
        orders = np.array([1.0] * (2 * rho.n) + [2.0])
        w = dilate(1.0 / eps, np.asarray(q, dtype=float))
        return rho.frame_derivatives(w, kind) * eps ** (-(rho.Q + orders))

    def support_box(self) -> Box:
        hw = self.rho.half_widths * np.array([self.eps] * (2 * self.n) + [self.eps**2])
        return Box(tuple(-hw), tuple(hw))

    def lattice(self, nodes: int | None = None):
        """Nodes ``q = delta_eps(w)`` with weights ``eps^Q * w_gauss`` (so that sum of weights * rho_eps = 1)."""
        W, wt = self.rho.lattice(nodes)
        return dilate(self.eps, W), wt * self.eps**self.rho.Q


def scale(rho: Mollifier, eps: float) -> ScaledKernel:
    return ScaledKernel(rho, float(eps))


def _homogeneity_order(n: int, j: int) -> int:
    return 1 if j <= 2 * n else 2


def kernel_derivative(kernel: ScaledKernel, kind: str, j: int) -> Callable:
    """Analytic ``Z_j rho_eps`` (or ``Z_j^r rho_eps``) from the homogeneity rule.

    Horizontal derivatives pick up ``eps^{-(Q+1)}``, the vertical one ``eps^{-(Q+2)}``.
    """
    rho, eps = kernel.rho, kernel.eps
    base = rho.derivative(kind, j)
    factor = eps ** (-(rho.Q + _homogeneity_order(rho.n, j)))

    def deriv(q):
        return factor * base(dilate(1.0 / eps, np.asarray(q, dtype=float)))

    return deriv


def kernel_derivative_chain(kernel: ScaledKernel, kind: str, j: int) -> Callable:
    """Same derivative through the Euclidean chain rule, with no homogeneity assumption."""
    from .heis_core import frame_vector

    rho, eps = kernel.rho, kernel.eps
    n = rho.n
    grads = rho.field.euclidean_grad()
    scales = np.array([1.0 / eps] * (2 * n) + [1.0 / eps**2])

    def deriv(q):
        q = np.asarray(q, dtype=float)
        w = dilate(1.0 / eps, q)
        egrad = np.stack([g(w) for g in grads], axis=-1) * scales * eps ** (-rho.Q)
        return np.sum(frame_vector(kind, j, q) * egrad, axis=-1)

    return deriv


def translation_reach(region: Box, eps: float, half_widths) -> np.ndarray:
    """Per-axis margin covering ``p . delta_eps(+-w)`` for ``p`` in ``region`` and ``|w_i| <= half_widths``."""
    hw = np.asarray(half_widths, dtype=float)
    n = region.n
    big = np.maximum(np.abs(region.lo), np.abs(region.hi))
    reach = np.empty(region.dim)
    reach[:-1] = eps * hw[:-1]
    # t-shift: eps^2 w_N + 2 eps sum_j (w_xj y_j - x_j w_yj)
    reach[-1] = eps**2 * hw[-1] + 2.0 * eps * np.sum(hw[:n] * big[n : 2 * n] + big[:n] * hw[n : 2 * n])
    return reach


def required_box(region: Box, eps: float, rho: Mollifier) -> Box:
    return region.expand(translation_reach(region, eps, rho.half_widths))


def lattice_integral(points: np.ndarray, eps: float, rho: Mollifier, integrand: Callable,
                     nodes: int | None = None, threads: int = 1) -> np.ndarray:
    """``sum_w weight(w) * integrand(points, p . delta_eps(w), w)`` over the kernel lattice.

    ``integrand(P, PW, W)`` receives broadcastable arrays of shapes ``(m, 1, N)``,
    ``(m, L, N)`` and ``(1, L, N)`` and returns ``(m, L)`` values; the kernel is
    not included in the weight.
    """
    P = np.asarray(points, dtype=float)
    lead = P.shape[:-1]
    P = P.reshape(-1, P.shape[-1])
    W, wt = rho.lattice(nodes)
    DW = dilate(eps, W)[None]
    step = max(1, CHUNK_ELEMENTS // max(1, W.shape[0]))

    def work(start):
        blk = P[start : start + step, None, :]
        PW = mul(np.broadcast_to(blk, (blk.shape[0],) + DW.shape[1:]), np.broadcast_to(DW, (blk.shape[0],) + DW.shape[1:]))
        return integrand(blk, PW, W[None]) @ wt

    starts = range(0, P.shape[0], step)
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    out = np.concatenate(parts) if parts else np.zeros(0)
    return out.reshape(lead)


def convolve_at(u: Callable, kernel: ScaledKernel, points, nodes: int | None = None, threads: int = 1) -> np.ndarray:
    """``(u * rho_eps)(p) = int u(p . q^{-1}) rho_eps(q) dq`` at ``points``.

    After ``q = delta_eps(w)`` and ``w -> -w`` (the kernel is even) this is
    ``int u(p . delta_eps(w)) rho(w) dw``.
    """
    rho = kernel.rho

    def integrand(P, PW, W):
        return u(PW) * rho(W)

    return lattice_integral(points, kernel.eps, rho, integrand, nodes, threads)


def group_convolve(u, kernel: ScaledKernel, region: Box | None = None, h=None,
                   nodes: int | None = None, threads: int = 1) -> GridField:
    """Mollify ``u`` and sample the result on the lattice of ``region``.

    For a grid input the region defaults to the largest box whose translates
    stay inside ``u.box``; an explicit region must satisfy the same condition.
    """
    eps = kernel.eps
    if isinstance(u, GridField):
        h = u.spacing if h is None else h
        if region is None:
            region = _shrink_to_fit(u.box, eps, kernel.rho)
        elif not u.box.contains_box(required_box(region, eps, kernel.rho)):
            raise ValueError("convolution region too close to the grid boundary for this eps")
    elif region is None or h is None:
        raise ValueError("closed-form input needs an explicit region and spacing")
    pts = lattice_points(region, h)
    vals = convolve_at(u, kernel, pts, nodes, threads)
    return GridField(region, h, vals)


def _shrink_to_fit(box: Box, eps: float, rho: Mollifier) -> Box:
    region = box
    for _ in range(50):
        reach = translation_reach(region, eps, rho.half_widths)
        cand = box.lo + reach, box.hi - reach
        if np.any(cand[0] >= cand[1]):
            raise ValueError("shrunken convolution region is empty")
        new = Box(tuple(cand[0]), tuple(cand[1]))
        if np.allclose(new.lo, region.lo) and np.allclose(new.hi, region.hi):
            return new
        region = new
    return region
