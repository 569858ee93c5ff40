"""Boxes, sampled fields, horizontal derivatives and norms.

Integrals use the midpoint rule on cells; grid derivatives are second-order
central differences with second-order one-sided stencils at the box faces
(``numpy.gradient(..., edge_order=2)``), so they are exact on quadratics.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .fields import ScalarField, beta_derivative
from .heis_core import dim_to_n

GRID_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Box:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise ValueError("box corners have different lengths")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"box needs lower < upper componentwise, got {lo} / {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, half: float, n: int = 1, center=0.0) -> "Box":
        c = np.broadcast_to(np.asarray(center, dtype=float), (2 * n + 1,))
        return cls(tuple(c - half), tuple(c + half))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def n(self) -> int:
        return dim_to_n(self.dim)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def contains(self, pts, tol: float = 1e-12) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.all((pts >= self.lo - tol) & (pts <= self.hi + tol), axis=-1)

    def contains_box(self, other: "Box", tol: float = 1e-12) -> bool:
        return bool(np.all(other.lo >= self.lo - tol) and np.all(other.hi <= self.hi + tol))

    def shrink(self, margin) -> "Box":
        m = np.broadcast_to(np.asarray(margin, dtype=float), (self.dim,))
        return Box(tuple(self.lo + m), tuple(self.hi - m))

    def expand(self, margin) -> "Box":
        return self.shrink(-np.asarray(margin, dtype=float))


def _resolve_spacing(box: Box, h) -> tuple[np.ndarray, tuple]:
    h = np.broadcast_to(np.asarray(h, dtype=float), (box.dim,))
    if np.any(h <= 0):
        raise ValueError("grid spacing must be positive")
    ext = box.hi - box.lo
    shape = tuple(int(np.ceil(e / s - 1e-9)) + 1 for e, s in zip(ext, h))
    spacing = ext / (np.array(shape) - 1)
    return spacing, shape


def cell_centers(region: Box, h) -> tuple[np.ndarray, float]:
    """Midpoints of a cell partition of ``region`` with spacing at most ``h``.

    Returns ``(points, cell_volume)`` where ``points`` has shape ``cells + (N,)``.
    """
    spacing, shape = _resolve_spacing(region, h)
    axes = [lo + (np.arange(m - 1) + 0.5) * s for lo, m, s in zip(region.lo, shape, spacing)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return pts, float(np.prod(spacing))


def lattice_points(region: Box, h) -> np.ndarray:
    spacing, shape = _resolve_spacing(region, h)
    axes = [lo + np.arange(m) * s for lo, m, s in zip(region.lo, shape, spacing)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def lp_from_values(values: np.ndarray, cell_volume: float, s: float) -> float:
    """Midpoint-rule L^s norm from cell-center samples."""
    a = np.abs(np.asarray(values, dtype=float))
    if np.isinf(s):
        return float(a.max()) if a.size else 0.0
    return float((np.sum(a**s) * cell_volume) ** (1.0 / s))


@dataclass(frozen=True)
class NormSpec:
    s: float
    region: Box

    def __post_init__(self):
        if not self.s >= 1:
            raise ValueError(f"norm exponent must be >= 1, got {self.s}")

    @property
    def conjugate(self) -> float:
        return conjugate_exponent(self.s)


def conjugate_exponent(s: float) -> float:
    if s == 1:
        return np.inf
    if np.isinf(s):
        return 1.0
    return s / (s - 1.0)


class GridField:
    """Samples of a scalar function on the lattice of a box.

    The node count per axis is ``ceil((upper - lower) / h) + 1``; the stored
    spacing is the resulting (possibly slightly smaller) step so that the
    lattice spans the box exactly.
    """

    def __init__(self, box: Box, h, values: np.ndarray, extension: str = "zero"):
        spacing, shape = _resolve_spacing(box, h)
        values = np.asarray(values, dtype=float)
        if values.shape != shape:
            raise ValueError(f"value array shape {values.shape} does not match lattice {shape}")
        if extension not in ("zero", "error"):
            raise ValueError(f"extension policy must be 'zero' or 'error', got {extension!r}")
        self.box = box
        self.spacing = spacing
        self.values = values
        self.values.setflags(write=False)
        self.extension = extension
        self._interp = None

    @classmethod
    def sample(cls, f: Callable, box: Box, h, extension: str = "zero") -> "GridField":
        pts = lattice_points(box, h)
        return cls(box, h, f(pts), extension)

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def N(self) -> int:
        return self.box.dim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def axes(self) -> list:
        return [lo + np.arange(m) * s for lo, m, s in zip(self.box.lo, self.shape, self.spacing)]

    def nodes(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def _with_values(self, values) -> "GridField":
        return GridField(self.box, self.spacing, values, self.extension)

    def __call__(self, pts) -> np.ndarray:
        """Multilinear interpolation over the surrounding 2^N nodes."""
        pts = np.asarray(pts, dtype=float)
        inside = self.box.contains(pts)
        if self.extension == "error" and not np.all(inside):
            raise ValueError("evaluation point outside the grid box")
        if self._interp is None:
            self._interp = RegularGridInterpolator(
                self.axes(), self.values, method="linear", bounds_error=False, fill_value=0.0
            )
        flat = pts.reshape(-1, self.N)
        lo, hi = self.box.lo, self.box.hi
        # clip round-off just outside the faces, keep true outside points at zero
        clipped = np.clip(flat, lo, hi)
        out = self._interp(clipped)
        out[~inside.reshape(-1)] = 0.0
        return out.reshape(pts.shape[:-1])

    def partial(self, axis: int) -> "GridField":
        d = np.gradient(self.values, self.spacing[axis], axis=axis, edge_order=2)
        return self._with_values(d)

    def Z(self, j: int, kind: str = "left") -> "GridField":
        n, N = self.n, self.N
        if not 1 <= j <= N:
            raise IndexError(f"frame index {j} outside 1..{N}")
        if kind not in ("left", "right"):
            raise ValueError(f"kind must be 'left' or 'right', got {kind!r}")
        if j == N:
            return self.partial(N - 1)
        c = 2.0 if kind == "left" else -2.0
        nodes = self.nodes()
        dt = np.gradient(self.values, self.spacing[-1], axis=N - 1, edge_order=2)
        if j <= n:
            coef = c * nodes[..., n + j - 1]
        else:
            coef = -c * nodes[..., j - n - 1]
        d = np.gradient(self.values, self.spacing[j - 1], axis=j - 1, edge_order=2)
        return self._with_values(d + coef * dt)

    def map(self, fn: Callable) -> "GridField":
        return self._with_values(fn(self.values))

    def __add__(self, other):
        if isinstance(other, GridField):
            return self._with_values(self.values + other.values)
        return self._with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridField):
            return self._with_values(self.values - other.values)
        return self._with_values(self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridField):
            return self._with_values(self.values * other.values)
        return self._with_values(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self._with_values(-self.values)

    # -- serialization --------------------------------------------------------------
    def header(self) -> dict:
        return {
            "format": "heislab-gridfield",
            "version": GRID_FORMAT_VERSION,
            "lower": list(self.box.lower),
            "upper": list(self.box.upper),
            "spacing": [float(s) for s in self.spacing],
            "shape": list(self.shape),
            "extension": self.extension,
        }

    def save(self, path) -> Path:
        path = Path(path)
        np.savez(path, header=np.array(json.dumps(self.header())), values=self.values)
        return path if path.suffix == ".npz" else path.with_suffix(path.suffix + ".npz")

    @classmethod
    def load(cls, path) -> "GridField":
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            values = data["values"]
        if header.get("format") != "heislab-gridfield":
            raise ValueError("not a heislab grid field file")
        if header["version"] != GRID_FORMAT_VERSION:
            raise ValueError(f"unsupported grid format version {header['version']}")
        box = Box(tuple(header["lower"]), tuple(header["upper"]))
        return cls(box, header["spacing"], values, header["extension"])

    def __repr__(self) -> str:
        return f"GridField(shape={self.shape}, box={self.box.lower}..{self.box.upper})"


Field = Union[ScalarField, GridField]


def interp(field: GridField, p) -> np.ndarray | float:
    out = field(np.asarray(p, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def horizontal_derivative(field: Field, j: int, p, kind: str = "left"):
    """Z_j f (or Z_j^r f) at ``p``: analytic for closed forms, stencils for grids."""
    out = field.Z(j, kind)(np.asarray(p, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def horizontal_gradient(field: Field, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.stack([field.Z(j)(p) for j in range(1, 2 * field.n + 1)], axis=-1)


def horizontal_hessian(field: Field, p) -> np.ndarray:
    """``H[..., i, j] = Z_i Z_j f`` (not symmetrized)."""
    p = np.asarray(p, dtype=float)
    m = 2 * field.n
    first = [field.Z(j) for j in range(1, m + 1)]
    rows = [np.stack([first[j].Z(i + 1)(p) for j in range(m)], axis=-1) for i in range(m)]
    return np.stack(rows, axis=-2)


def _default_h(field, h):
    if h is not None:
        return h
    if isinstance(field, GridField):
        return field.spacing
    return 0.05


def _check_region(field, region: Box):
    if isinstance(field, GridField) and not field.box.contains_box(region):
        raise ValueError("norm region is not contained in the grid box")


def lp_norm(field: Field, spec: NormSpec, h=None) -> float:
    _check_region(field, spec.region)
    pts, vol = cell_centers(spec.region, _default_h(field, h))
    return lp_from_values(field(pts), vol, spec.s)


def lp_norm_vector(fields: Sequence[Field], spec: NormSpec, h=None) -> float:
    """L^s norm of the pointwise Euclidean length of a vector of fields."""
    for f in fields:
        _check_region(f, spec.region)
    pts, vol = cell_centers(spec.region, _default_h(fields[0], h))
    mag = np.sqrt(sum(f(pts) ** 2 for f in fields))
    return lp_from_values(mag, vol, spec.s)


def sobolev_h_norm(field: Field, k: int, spec: NormSpec, h=None) -> float:
    """``||u||_s + sum_j ||Z_j u||_s (+ sum_ij ||Z_i Z_j u||_s for k = 2)``, horizontal indices only."""
    if k not in (1, 2):
        raise ValueError("order must be 1 or 2")
    _check_region(field, spec.region)
    pts, vol = cell_centers(spec.region, _default_h(field, h))
    m = 2 * field.n
    total = lp_from_values(field(pts), vol, spec.s)
    first = [field.Z(j) for j in range(1, m + 1)]
    for g in first:
        total += lp_from_values(g(pts), vol, spec.s)
    if k == 2:
        for g in first:
            for i in range(1, m + 1):
                total += lp_from_values(g.Z(i)(pts), vol, spec.s)
    return total


def chain_rule_residual(u: Field, beta: Callable, j: int, K: Box, h=None, mode: str = "auto") -> float:
    """``|| Z_j(beta(u)) - beta'(u) Z_j u ||_{L^1(K)}``.

    ``mode="analytic"`` differentiates symbolically (closed-form ``u`` only);
    ``mode="grid"`` samples ``u`` on the lattice of ``K`` with spacing ``h`` and
    uses the grid stencils for both sides.
    """
    if mode == "auto":
        mode = "analytic" if isinstance(u, ScalarField) else "grid"
    dbeta = beta_derivative(beta)
    if mode == "analytic":
        if not isinstance(u, ScalarField):
            raise TypeError("analytic mode needs a closed-form field")
        lhs = u.compose(beta).Z(j)
        rhs = u.compose(dbeta) * u.Z(j)
        pts, vol = cell_centers(K, h if h is not None else 0.05)
        return lp_from_values(lhs(pts) - rhs(pts), vol, 1.0)
    if mode != "grid":
        raise ValueError(f"unknown mode {mode!r}")
    hh = _default_h(u, h)
    if isinstance(u, GridField):
        ug = u
    else:
        ug = GridField.sample(u, K, hh)
    beta_np = _numeric(beta)
    dbeta_np = _numeric(dbeta)
    bu = ug.map(beta_np)
    res = bu.Z(j) - ug.map(dbeta_np) * ug.Z(j)
    return lp_norm(res, NormSpec(1.0, K), hh)


def _numeric(beta: Callable) -> Callable:
    import sympy as sp

    from .fields import R_SYMBOL

    return sp.lambdify(R_SYMBOL, beta(R_SYMBOL), modules="numpy")
