"""Exact algebra of the Heisenberg group H^n in exponential coordinates.

Points are stored as Euclidean coordinate vectors ``(x_1..x_n, y_1..y_n, t)``
of length ``N = 2n + 1``. All array functions broadcast over leading axes, so
``mul(P, Q)`` with ``P.shape == (k, N)`` multiplies ``k`` pairs at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np


@dataclass(frozen=True)
class GroupParams:
    n: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")

    @property
    def N(self) -> int:
        return 2 * self.n + 1

    @property
    def Q(self) -> int:
        """Homogeneous dimension."""
        return 2 * self.n + 2


def dim_to_n(N: int) -> int:
    if N < 3 or N % 2 == 0:
        raise ValueError(f"coordinate length {N} is not 2n+1 for n >= 1")
    return (N - 1) // 2


@dataclass(frozen=True)
class HPoint:
    """A single point of H^n."""

    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        dim_to_n(c.size)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_parts(cls, x, y, t) -> "HPoint":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if x.shape != y.shape:
            raise ValueError("x and y must have the same length")
        return cls(np.concatenate([x, y, [float(t)]]))

    @classmethod
    def origin(cls, n: int = 1) -> "HPoint":
        return cls(np.zeros(2 * n + 1))

    @property
    def n(self) -> int:
        return dim_to_n(self.coords.size)

    @property
    def N(self) -> int:
        return self.coords.size

    @property
    def x(self) -> np.ndarray:
        return self.coords[: self.n]

    @property
    def y(self) -> np.ndarray:
        return self.coords[self.n : 2 * self.n]

    @property
    def t(self) -> float:
        return float(self.coords[-1])

    @property
    def w_H(self) -> np.ndarray:
        return self.coords[:-1]

    @property
    def w_N(self) -> float:
        return float(self.coords[-1])

    def __getitem__(self, j: int) -> float:
        """1-based coordinate access, matching the frame index j = 1..N."""
        if not 1 <= j <= self.N:
            raise IndexError(f"coordinate index {j} outside 1..{self.N}")
        return float(self.coords[j - 1])

    def __mul__(self, other: "HPoint") -> "HPoint":
        return mul(self, other)

    def inverse(self) -> "HPoint":
        return inverse(self)

    def __repr__(self) -> str:
        return f"HPoint({np.array2string(self.coords, precision=6)})"

    def __eq__(self, other) -> bool:
        return isinstance(other, HPoint) and np.array_equal(self.coords, other.coords)

    def __hash__(self) -> int:
        return hash(self.coords.tobytes())


PointLike = Union[HPoint, np.ndarray]


def _as_array(p: PointLike) -> np.ndarray:
    if isinstance(p, HPoint):
        return p.coords
    return np.asarray(p, dtype=float)


def _wrap(result: np.ndarray, *inputs) -> PointLike:
    if all(isinstance(p, HPoint) for p in inputs):
        return HPoint(result)
    return result


def mul(p: PointLike, q: PointLike) -> PointLike:
    """Group law ``p . q``.

    ``(x, y, t) . (x', y', t') = (x + x', y + y', t + t' + 2 sum_j (x'_j y_j - x_j y'_j))``.
    """
    a, b = _as_array(p), _as_array(q)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    n = dim_to_n(a.shape[-1])
    x, y = a[..., :n], a[..., n : 2 * n]
    xp, yp = b[..., :n], b[..., n : 2 * n]
    out = a + b
    out[..., -1] = a[..., -1] + b[..., -1] + 2.0 * np.sum(xp * y - x * yp, axis=-1)
    return _wrap(out, p, q)


def inverse(p: PointLike) -> PointLike:
    return _wrap(-_as_array(p), p)


def dilate(lam: float, p: PointLike) -> PointLike:
    """Intrinsic dilation ``(lam x, lam y, lam^2 t)``."""
    if lam < 0:
        raise ValueError(f"dilation factor must be nonnegative, got {lam}")
    a = _as_array(p)
    out = lam * a
    out[..., -1] = lam * lam * a[..., -1]
    return _wrap(out, p)


def jmap(p: PointLike) -> PointLike:
    """Complex structure ``J(x, y, t) = (-y, x, 0)``."""
    a = _as_array(p)
    n = dim_to_n(a.shape[-1])
    out = np.zeros_like(a)
    out[..., :n] = -a[..., n : 2 * n]
    out[..., n : 2 * n] = a[..., :n]
    return _wrap(out, p)


def jmap_h(v: np.ndarray) -> np.ndarray:
    """J acting on horizontal 2n-vectors (gradients, frame components)."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1] // 2
    return np.concatenate([-v[..., n:], v[..., :n]], axis=-1)


def frame_matrix(p: PointLike, kind: str = "left") -> np.ndarray:
    """Coordinate expressions of Z_1..Z_N at ``p``.

    Returns an array of shape ``(..., N, N)`` whose row ``j - 1`` is the
    coordinate vector of ``Z_j(p)`` (``kind="left"``) or ``Z_j^r(p)``.
    """
    a = _as_array(p)
    N = a.shape[-1]
    n = dim_to_n(N)
    if kind == "left":
        c = 2.0
    elif kind == "right":
        c = -2.0
    else:
        raise ValueError(f"kind must be 'left' or 'right', got {kind!r}")
    F = np.broadcast_to(np.eye(N), a.shape[:-1] + (N, N)).copy()
    F[..., :n, -1] = c * a[..., n : 2 * n]
    F[..., n : 2 * n, -1] = -c * a[..., :n]
    return F


def frame_vector(kind: str, j: int, p: PointLike) -> np.ndarray:
    a = _as_array(p)
    N = a.shape[-1]
    if not 1 <= j <= N:
        raise IndexError(f"frame index {j} outside 1..{N}")
    return frame_matrix(a, kind)[..., j - 1, :]


def to_frame(p: PointLike, v: np.ndarray) -> np.ndarray:
    """Expand coordinate vectors ``v`` attached at ``p`` in the left-invariant frame."""
    a = _as_array(p)
    v = np.asarray(v, dtype=float)
    n = dim_to_n(a.shape[-1])
    out = v.copy()
    x, y = a[..., :n], a[..., n : 2 * n]
    out[..., -1] = v[..., -1] - 2.0 * np.sum(y * v[..., :n] - x * v[..., n : 2 * n], axis=-1)
    return out


def from_frame(p: PointLike, b: np.ndarray) -> np.ndarray:
    """Coordinate vector of ``sum_j b_j Z_j(p)``."""
    a = _as_array(p)
    b = np.asarray(b, dtype=float)
    n = dim_to_n(a.shape[-1])
    out = b.copy()
    x, y = a[..., :n], a[..., n : 2 * n]
    out[..., -1] = b[..., -1] + 2.0 * np.sum(y * b[..., :n] - x * b[..., n : 2 * n], axis=-1)
    return out


def gauge(w: PointLike) -> np.ndarray:
    """``|w_H| + 2 sqrt(|w_N|)``; an upper bound for d(0, w)."""
    a = _as_array(w)
    return np.linalg.norm(a[..., :-1], axis=-1) + 2.0 * np.sqrt(np.abs(a[..., -1]))


def cc_distance_upper(p: PointLike, q: PointLike) -> np.ndarray | float:
    """Upper bound ``U(p, q) = |w_H| + 2 sqrt(|w_N|)`` with ``w = p^{-1} q``.

    Built from a horizontal segment followed by a commutator square; it is
    left-invariant and 1-homogeneous but is not a metric.
    """
    w = mul(inverse(_as_array(p)), _as_array(q))
    u = gauge(w)
    return float(u) if np.ndim(u) == 0 else u


def bch_square_path(p: PointLike, w_N: float, eps: float) -> list:
    """Waypoints of the horizontal commutator square realizing a vertical step.

    Starting at ``p``, flow along Y_1, X_1, -Y_1, -X_1 for time
    ``(eps / 2) sqrt(|w_N|)`` each (the order of X_1 and Y_1 is swapped when
    ``w_N < 0``). The last waypoint equals ``p . (0, 0, eps^2 w_N)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    a = _as_array(p).astype(float)
    N = a.shape[-1]
    n = dim_to_n(N)
    tau = 0.5 * eps * np.sqrt(abs(w_N))
    ex = np.zeros(N)
    ex[0] = tau
    ey = np.zeros(N)
    ey[n] = tau
    first, second = (ey, ex) if w_N >= 0 else (ex, ey)
    steps = [first, second, -first, -second]
    pts = [a.copy()]
    for s in steps:
        pts.append(mul(pts[-1], s))
    if isinstance(p, HPoint):
        return [HPoint(q) for q in pts]
    return pts


def random_points(rng: np.random.Generator, k: int, n: int = 1, scale: float = 1.0) -> np.ndarray:
    return scale * rng.uniform(-1.0, 1.0, size=(k, 2 * n + 1))
