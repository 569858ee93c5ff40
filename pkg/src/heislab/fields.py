"""Closed-form scalar fields on H^n backed by sympy expressions.

A :class:`ScalarField` carries an expression in the coordinate symbols
``x1..xn, y1..yn, t`` plus optional numeric parameters. Euclidean partials and
left/right-invariant derivatives are exact (symbolic), and numeric evaluation
goes through cached ``lambdify`` kernels, so a family of fields that differs
only in parameter values compiles once.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
import sympy as sp


@lru_cache(maxsize=None)
def coord_symbols(n: int) -> tuple:
    xs = sp.symbols(" ".join(f"x{j}" for j in range(1, n + 1)), real=True, seq=True)
    ys = sp.symbols(" ".join(f"y{j}" for j in range(1, n + 1)), real=True, seq=True)
    t = sp.Symbol("t", real=True)
    return tuple(xs) + tuple(ys) + (t,)


R_SYMBOL = sp.Symbol("r", real=True)


def bump_expr(s):
    """``exp(-1/(1-s))`` for ``s < 1`` and 0 otherwise (C-infinity in s)."""
    return sp.Piecewise((sp.exp(-1 / (1 - s)), s < 1), (0, True))


def poly_bump_expr(s, k: int = 4):
    """``(1 - s)^k`` for ``s < 1`` and 0 otherwise (C^{k-1} in s)."""
    return sp.Piecewise(((1 - s) ** k, s < 1), (0, True))


@lru_cache(maxsize=None)
def _compile(expr, syms: tuple):
    return sp.lambdify(syms, expr, modules="numpy", cse=True)


@lru_cache(maxsize=None)
def _diff(expr, sym):
    return sp.diff(expr, sym)


def _invariant_derivative(expr, n: int, j: int, kind: str):
    syms = coord_symbols(n)
    N = 2 * n + 1
    if not 1 <= j <= N:
        raise IndexError(f"frame index {j} outside 1..{N}")
    t = syms[-1]
    c = 2 if kind == "left" else -2
    if j == N:
        return _diff(expr, t)
    if j <= n:
        y = syms[n + j - 1]
        return _diff(expr, syms[j - 1]) + c * y * _diff(expr, t)
    x = syms[j - n - 1]
    return _diff(expr, syms[j - 1]) - c * x * _diff(expr, t)


class ScalarField:
    """A closed-form function ``H^n -> R`` with exact derivatives."""

    def __init__(self, expr, n: int = 1, params: dict | None = None, name: str | None = None):
        self.expr = sp.sympify(expr)
        self.n = int(n)
        self.params = dict(params or {})
        self.name = name
        coords = set(coord_symbols(self.n))
        free = self.expr.free_symbols - coords - set(self.params)
        if free:
            raise ValueError(f"unbound symbols in field expression: {sorted(map(str, free))}")

    # -- construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, value: float, n: int = 1) -> "ScalarField":
        return cls(sp.Float(value) if not isinstance(value, sp.Basic) else value, n)

    @classmethod
    def coordinate(cls, j: int, n: int = 1) -> "ScalarField":
        """The coordinate function p -> p_j (1-based)."""
        return cls(coord_symbols(n)[j - 1], n)

    @property
    def N(self) -> int:
        return 2 * self.n + 1

    @property
    def symbols(self) -> tuple:
        return coord_symbols(self.n)

    def _derived(self, expr) -> "ScalarField":
        return ScalarField(expr, self.n, self.params)

    # -- evaluation -------------------------------------------------------------
    def _param_items(self):
        keys = sorted(self.params, key=lambda s: s.name)
        return tuple(keys), [self.params[k] for k in keys]

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.shape[-1] != self.N:
            raise ValueError(f"expected points with {self.N} coordinates, got shape {pts.shape}")
        keys, vals = self._param_items()
        fn = _compile(self.expr, self.symbols + keys)
        args = [pts[..., k] for k in range(self.N)] + vals
        with np.errstate(all="ignore"):
            out = fn(*args)
        return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1]).copy()

    def at(self, p) -> float:
        return float(self(np.asarray(p, dtype=float)))

    # -- derivatives --------------------------------------------------------------
    def partial(self, axis: int) -> "ScalarField":
        """Euclidean partial along coordinate ``axis`` (0-based)."""
        return self._derived(_diff(self.expr, self.symbols[axis]))

    def Z(self, j: int, kind: str = "left") -> "ScalarField":
        """Left-invariant Z_j (or right-invariant Z_j^r) derivative, 1-based index."""
        if kind not in ("left", "right"):
            raise ValueError(f"kind must be 'left' or 'right', got {kind!r}")
        return self._derived(_invariant_derivative(self.expr, self.n, j, kind))

    def grad_h(self) -> list:
        return [self.Z(j) for j in range(1, 2 * self.n + 1)]

    def grad(self) -> list:
        """Full intrinsic gradient (Z_1 f, ..., Z_N f)."""
        return [self.Z(j) for j in range(1, self.N + 1)]

    def euclidean_grad(self) -> list:
        return [self.partial(a) for a in range(self.N)]

    def hessian_h(self) -> list:
        """Unsymmetrized horizontal Hessian ``H[i][j] = Z_i Z_j f``."""
        m = 2 * self.n
        return [[self.Z(j).Z(i) for j in range(1, m + 1)] for i in range(1, m + 1)]

    def laplacian_h(self) -> "ScalarField":
        return self._derived(sum(self.Z(i).Z(i).expr for i in range(1, 2 * self.n + 1)))

    # -- algebra --------------------------------------------------------------------
    def _coerce(self, other) -> "ScalarField":
        if isinstance(other, ScalarField):
            if other.n != self.n:
                raise ValueError("fields live on different groups")
            for k, v in other.params.items():
                if k in self.params and self.params[k] != v:
                    raise ValueError(f"conflicting values for parameter {k}")
            return other
        return ScalarField(sp.sympify(other), self.n)

    def _combine(self, other, op) -> "ScalarField":
        o = self._coerce(other)
        return ScalarField(op(self.expr, o.expr), self.n, {**self.params, **o.params})

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, lambda a, b: a / b)

    def __neg__(self):
        return self._derived(-self.expr)

    def compose(self, beta: Callable) -> "ScalarField":
        """``beta(f)`` for a sympy-compatible callable ``beta``."""
        return self._derived(beta(self.expr))

    def subs_coords(self, new_coords: Iterable) -> "ScalarField":
        """Precompose with a map given by expressions for each coordinate."""
        mapping = dict(zip(self.symbols, new_coords))
        return self._derived(self.expr.xreplace(mapping))

    def is_zero(self) -> bool:
        return sp.simplify(self.expr) == 0

    def __repr__(self) -> str:
        label = self.name or str(self.expr)
        if len(label) > 60:
            label = label[:57] + "..."
        return f"ScalarField({label}, n={self.n})"


def beta_derivative(beta: Callable) -> Callable:
    """Return ``beta'`` as a sympy-compatible callable."""
    d = sp.diff(beta(R_SYMBOL), R_SYMBOL)
    return lambda e: d.xreplace({R_SYMBOL: e})


def as_field(value, n: int = 1) -> ScalarField:
    if isinstance(value, ScalarField):
        return value
    return ScalarField(sp.sympify(value), n)


def random_polynomial(rng: np.random.Generator, n: int = 1, degree: int = 3, scale: float = 1.0) -> ScalarField:
    """Random polynomial of total degree <= ``degree`` with rational-free float coefficients."""
    syms = coord_symbols(n)
    monos = sorted(sp.itermonomials(syms, degree), key=sp.default_sort_key)
    coeffs = rng.uniform(-scale, scale, size=len(monos))
    expr = sum(sp.Float(float(c)) * m for c, m in zip(coeffs, monos))
    return ScalarField(expr, n, name=f"poly{degree}")


def gaussian_bump(center, widths, n: int = 1, amplitude: float = 1.0) -> ScalarField:
    syms = coord_symbols(n)
    center = np.broadcast_to(np.asarray(center, dtype=float), (2 * n + 1,))
    widths = np.broadcast_to(np.asarray(widths, dtype=float), (2 * n + 1,))
    s = sum(((x - float(c)) / float(w)) ** 2 for x, c, w in zip(syms, center, widths))
    return ScalarField(amplitude * sp.exp(-s), n, name="gaussian")


def compact_bump(center, radii, n: int = 1, amplitude: float = 1.0) -> ScalarField:
    """C-infinity bump supported in the coordinate ellipsoid around ``center``."""
    syms = coord_symbols(n)
    center = np.broadcast_to(np.asarray(center, dtype=float), (2 * n + 1,))
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (2 * n + 1,))
    s = sum(((x - float(c)) / float(r)) ** 2 for x, c, r in zip(syms, center, radii))
    return ScalarField(amplitude * sp.E * bump_expr(s), n, name="bump")


def parametric_bump(prefix: str, n: int = 1):
    """Symbolic bump family ``amp * e * bump(|(p - c) / r|^2)`` and its parameter symbols.

    Returns ``(expr, center_syms, radius_syms, amp_sym)``; bind values via the
    ``params`` argument of :class:`ScalarField`.
    """
    syms = coord_symbols(n)
    N = 2 * n + 1
    cs = sp.symbols(f"{prefix}_c0:{N}", real=True)
    rs = sp.symbols(f"{prefix}_r0:{N}", positive=True)
    amp = sp.Symbol(f"{prefix}_a", real=True)
    s = sum(((x - c) / r) ** 2 for x, c, r in zip(syms, cs, rs))
    return amp * sp.E * bump_expr(s), cs, rs, amp
