"""Vector fields in the left-invariant frame, contact fields and negative controls.

A field ``b = sum_j b_j Z_j`` is stored through its frame components
``(b_1, ..., b_N)``. Contact fields come from a generating function psi as
``b = -4 psi T - J(grad_H psi)``; replacing the factor 4 by another value gives
the non-contact controls used throughout the experiments.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import sympy as sp

from .fields import ScalarField, as_field, compact_bump, coord_symbols
from .grid_calculus import Box, GridField, NormSpec, cell_centers, lp_from_values
from .heis_core import from_frame, jmap_h


@dataclass(frozen=True)
class GeneratingFunction:
    psi: ScalarField
    name: str = "psi"

    @property
    def n(self) -> int:
        return self.psi.n


class HVectorField:
    """Frame components ``b_1..b_N`` of a vector field on H^n.

    Components may be closed-form :class:`ScalarField` objects (exact
    derivatives) or :class:`GridField` samples (stencil derivatives).
    """

    def __init__(self, components: Sequence, vertical_factor: float | None = None,
                 generator: GeneratingFunction | None = None, name: str = "b"):
        comps = list(components)
        self.n = (len(comps) - 1) // 2
        if len(comps) != 2 * self.n + 1 or self.n < 1:
            raise ValueError(f"need 2n+1 components, got {len(comps)}")
        self.components = [c if isinstance(c, GridField) else as_field(c, self.n) for c in comps]
        self.vertical_factor = vertical_factor
        self.generator = generator
        self.name = name

    @property
    def N(self) -> int:
        return 2 * self.n + 1

    @property
    def is_contact(self) -> bool:
        return self.generator is not None and self.vertical_factor == 4

    @property
    def closed_form(self) -> bool:
        return all(isinstance(c, ScalarField) for c in self.components)

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.stack([c(pts) for c in self.components], axis=-1)

    def norm_sq(self, pts) -> np.ndarray:
        """``|b|^2 = sum_j b_j^2`` (the frame is orthonormal)."""
        return np.sum(self(pts) ** 2, axis=-1)

    # -- calculus ---------------------------------------------------------------------
    def divergence(self):
        """``sum_j Z_j b_j`` as a field of the same kind as the components."""
        out = self.components[0].Z(1)
        for j in range(2, self.N + 1):
            out = out + self.components[j - 1].Z(j)
        return out

    def residual_components(self) -> list:
        """The 2n fields of ``grad_H b_N + 4 J(b)_H``."""
        n = self.n
        bN = self.components[-1]
        out = []
        for j in range(1, 2 * n + 1):
            jb = -self.components[n + j - 1] if j <= n else self.components[j - n - 1]
            out.append(bN.Z(j) + jb * 4)
        return out

    def contact_residual_at(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.stack([r(pts) for r in self.residual_components()], axis=-1)

    # -- coordinate expressions -----------------------------------------------------
    def velocity(self, pts, tau=None) -> np.ndarray:
        """Coordinate vector of ``b(p) = sum_j b_j(p) Z_j(p)``."""
        pts = np.asarray(pts, dtype=float)
        return from_frame(pts, self(pts))

    @cached_property
    def _velocity_exprs(self) -> list:
        if not self.closed_form:
            raise TypeError("coordinate Jacobian needs closed-form components")
        n = self.n
        syms = coord_symbols(n)
        comps = [c.expr for c in self.components]
        vel = comps[:-1] + [comps[-1] + 2 * sum(syms[n + j] * comps[j] - syms[j] * comps[n + j] for j in range(n))]
        params = {}
        for c in self.components:
            params.update(c.params)
        return [ScalarField(v, n, params) for v in vel]

    @cached_property
    def _jacobian_fields(self) -> list:
        return [[v.partial(a) for a in range(self.N)] for v in self._velocity_exprs]

    def velocity_jacobian(self, pts, tau=None) -> np.ndarray:
        """Euclidean Jacobian ``dV_i / dp_a`` of the coordinate velocity, shape ``(..., N, N)``."""
        pts = np.asarray(pts, dtype=float)
        return np.stack([np.stack([f(pts) for f in row], axis=-1) for row in self._jacobian_fields], axis=-2)

    @cached_property
    def _divergence_field(self):
        return self.divergence()

    def divergence_at(self, pts, tau=None) -> np.ndarray:
        return self._divergence_field(np.asarray(pts, dtype=float))

    @cached_property
    def _flow_kernel(self):
        exprs = [v.expr for v in self._velocity_exprs]
        exprs += [f.expr for row in self._jacobian_fields for f in row]
        exprs.append(self._divergence_field.expr)
        params = dict(self._velocity_exprs[0].params)
        params.update(self._divergence_field.params)
        keys = tuple(sorted(params, key=lambda s: s.name))
        fn = sp.lambdify(coord_symbols(self.n) + keys, exprs, modules="numpy", cse=True)
        return fn, [params[k] for k in keys]

    def flow_terms(self, pts, tau=None):
        """``(velocity, velocity_jacobian, divergence)`` from one compiled kernel."""
        pts = np.asarray(pts, dtype=float)
        if not self.closed_form:
            return self.velocity(pts), self.velocity_jacobian(pts), self.divergence_at(pts)
        fn, vals = self._flow_kernel
        N, shape = self.N, pts.shape[:-1]
        with np.errstate(all="ignore"):
            out = fn(*[pts[..., k] for k in range(N)], *vals)
        out = np.stack([np.broadcast_to(np.asarray(o, dtype=float), shape) for o in out], axis=-1)
        return out[..., :N], out[..., N:N + N * N].reshape(shape + (N, N)), out[..., -1]

    def scaled(self, factor: float) -> "HVectorField":
        comps = [c * factor for c in self.components]
        vf = self.vertical_factor
        gen = self.generator
        if gen is not None:
            gen = GeneratingFunction(gen.psi * factor, gen.name)
        return HVectorField(comps, vf, gen, f"{factor}*{self.name}")

    def __neg__(self) -> "HVectorField":
        return self.scaled(-1.0)

    def __repr__(self) -> str:
        tag = "contact" if self.is_contact else "field"
        return f"HVectorField({self.name}, {tag}, n={self.n})"


def perturbed_vertical(psi, lam: float) -> HVectorField:
    """``b = -lam psi T - J(grad_H psi)``; contact exactly when ``lam == 4``."""
    gen = psi if isinstance(psi, GeneratingFunction) else GeneratingFunction(as_field(psi))
    f = gen.psi
    n = f.n
    comps = [f.Z(n + j) for j in range(1, n + 1)] + [-f.Z(j) for j in range(1, n + 1)]
    comps.append(f * (-lam))
    return HVectorField(comps, vertical_factor=lam, generator=gen, name=f"b[{gen.name},lam={lam}]")


def contact_from_psi(psi) -> HVectorField:
    """``b_j = Y_j psi``, ``b_{n+j} = -X_j psi``, ``b_N = -4 psi``."""
    return perturbed_vertical(psi, 4)


def divergence(b: HVectorField):
    return b.divergence()


def contact_residual(b: HVectorField, K: Box, spec: NormSpec | float = np.inf, h: float = 0.05) -> float:
    """L^s(K) norm of the pointwise length of ``grad_H b_N + 4 J(b)_H``."""
    s = spec.s if isinstance(spec, NormSpec) else float(spec)
    if isinstance(spec, NormSpec):
        K = spec.region
    pts, vol = cell_centers(K, h)
    r = b.contact_residual_at(pts)
    return lp_from_values(np.linalg.norm(r, axis=-1), vol, s)


def horizontal_part(b: HVectorField) -> HVectorField:
    comps = list(b.components[:-1]) + [ScalarField.constant(0.0, b.n)]
    return HVectorField(comps, vertical_factor=0, generator=b.generator, name=f"H[{b.name}]")


def jmap_frame(b_values: np.ndarray) -> np.ndarray:
    """J acting on frame-component vectors ``(..., N)``: horizontal rotation, zero T-part."""
    out = np.zeros_like(b_values)
    out[..., :-1] = jmap_h(b_values[..., :-1])
    return out


# -- time-dependent fields --------------------------------------------------------------
@dataclass
class TimeDependentField:
    """Snapshots ``(tau_i, b_i)`` joined piecewise-linearly in tau."""

    times: Sequence[float]
    fields: Sequence[HVectorField]
    _times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size != len(self.fields) or t.size < 1:
            raise ValueError("need one snapshot per time")
        if np.any(np.diff(t) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        self._times = t

    @property
    def n(self) -> int:
        return self.fields[0].n

    @property
    def N(self) -> int:
        return self.fields[0].N

    def _weights(self, tau: float):
        t = self._times
        if t.size == 1 or tau <= t[0]:
            return [(0, 1.0)]
        if tau >= t[-1]:
            return [(t.size - 1, 1.0)]
        k = int(np.searchsorted(t, tau, side="right")) - 1
        a = (tau - t[k]) / (t[k + 1] - t[k])
        return [(k, 1.0 - a), (k + 1, a)]

    def _blend(self, method: str, pts, tau):
        return sum(w * getattr(self.fields[k], method)(pts) for k, w in self._weights(float(tau)))

    def __call__(self, pts, tau: float = 0.0) -> np.ndarray:
        return sum(w * self.fields[k](pts) for k, w in self._weights(float(tau)))

    def velocity(self, pts, tau: float = 0.0) -> np.ndarray:
        return self._blend("velocity", pts, tau)

    def velocity_jacobian(self, pts, tau: float = 0.0) -> np.ndarray:
        return self._blend("velocity_jacobian", pts, tau)

    def divergence_at(self, pts, tau: float = 0.0) -> np.ndarray:
        return self._blend("divergence_at", pts, tau)

    def flow_terms(self, pts, tau: float = 0.0):
        parts = [(w, self.fields[k].flow_terms(pts)) for k, w in self._weights(float(tau))]
        return tuple(sum(w * t[i] for w, t in parts) for i in range(3))

    @property
    def is_contact(self) -> bool:
        return all(f.is_contact for f in self.fields)


# -- presets ----------------------------------------------------------------------------
PRESETS = ("linear-x", "vertical-t", "bump", "constant", "oscillating")

_PRESET_RE = re.compile(r"^\s*([a-z\-]+)\s*(?:\(([^)]*)\))?\s*$")


def parse_preset(spec: str) -> tuple[str, list]:
    m = _PRESET_RE.match(spec)
    if not m or m.group(1) not in PRESETS:
        raise ValueError(f"unknown generating-function preset {spec!r}; choose from {PRESETS}")
    args = [float(a) for a in m.group(2).split(",")] if m.group(2) else []
    return m.group(1), args


def preset_psi(spec: str, n: int = 1, **params) -> GeneratingFunction:
    """Named generating functions.

    ``linear-x`` (psi = x_1), ``vertical-t`` (psi = t), ``constant(k)``,
    ``bump`` (compact bump, keyword ``radius``/``center``/``amplitude``) and
    ``oscillating(beta, delta)`` (the scaled profile of the counterexample).
    """
    name, args = parse_preset(spec)
    syms = coord_symbols(n)
    if name == "linear-x":
        return GeneratingFunction(ScalarField(syms[0], n), name)
    if name == "vertical-t":
        return GeneratingFunction(ScalarField(syms[-1], n), name)
    if name == "constant":
        k = args[0] if args else params.get("value", 1.0)
        return GeneratingFunction(ScalarField(sp.Float(k), n), f"constant({k})")
    if name == "bump":
        radius = params.get("radius", 0.9)
        center = params.get("center", 0.0)
        amp = params.get("amplitude", 1.0)
        return GeneratingFunction(compact_bump(center, radius, n, amp), "bump")
    from .counterexample import OscillationParams, oscillating_psi

    if len(args) == 2:
        params = {**params, "beta": args[0], "delta": args[1]}
    return oscillating_psi(OscillationParams(n=n, **params))
