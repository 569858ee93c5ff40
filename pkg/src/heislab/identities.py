"""Battery of exact algebraic and calculus identities, each with its tolerance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ScalarField, coord_symbols, random_polynomial
from .grid_calculus import Box, GridField, chain_rule_residual
from .heis_core import (bch_square_path, cc_distance_upper, dilate, frame_vector, inverse, jmap, mul,
                        random_points)


@dataclass(frozen=True)
class IdentityResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)


def group_axioms(rng, n: int = 1, samples: int = 10_000) -> list:
    P, Q, R = (random_points(rng, samples, n) for _ in range(3))
    zero = np.zeros_like(P)
    assoc = np.max(np.abs(mul(mul(P, Q), R) - mul(P, mul(Q, R))))
    ident = max(np.max(np.abs(mul(zero, P) - P)), np.max(np.abs(mul(P, zero) - P)))
    inv = max(np.max(np.abs(mul(P, inverse(P)))), np.max(np.abs(mul(inverse(P), P))))
    lam = rng.uniform(0.1, 3.0)
    hom = np.max(np.abs(dilate(lam, mul(P, Q)) - mul(dilate(lam, P), dilate(lam, Q))))
    return [IdentityResult("associativity", float(assoc), 1e-12),
            IdentityResult("identity_element", float(ident), 0.0),
            IdentityResult("inverse", float(inv), 1e-12),
            IdentityResult("dilation_homomorphism", float(hom), 1e-12)]


def j_identities(rng, n: int = 1, samples: int = 1000) -> list:
    W, Z = random_points(rng, samples, n), random_points(rng, samples, n)
    jj = W.copy()
    jj[:, :-1] *= -1
    jj[:, -1] = 0
    e1 = np.max(np.abs(jmap(jmap(W)) - jj))
    e2 = np.max(np.abs(np.sum(jmap(W) * Z, axis=-1) + np.sum(W * jmap(Z), axis=-1)))
    return [IdentityResult("J_squared", float(e1), 0.0), IdentityResult("J_antisymmetric", float(e2), 1e-14)]


def commutator_battery(rng, n: int = 1, polys: int = 8, samples: int = 1000) -> list:
    """``Y_j X_j f - X_j Y_j f = 4 T f`` and the inversion rule on random cubics."""
    P = random_points(rng, samples, n)
    comm, inv = 0.0, 0.0
    syms = coord_symbols(n)
    for _ in range(polys):
        f = random_polynomial(rng, n, 3)
        for j in range(1, n + 1):
            lhs = f.Z(j).Z(n + j)(P) - f.Z(n + j).Z(j)(P)
            comm = max(comm, float(np.max(np.abs(lhs - 4 * f.Z(2 * n + 1)(P)))))
        g = f.subs_coords([-s for s in syms])
        for j in range(1, 2 * n + 2):
            lhs = g.Z(j)(P)
            rhs = -f.Z(j, "right")(inverse(P))
            inv = max(inv, float(np.max(np.abs(lhs - rhs))))
    return [IdentityResult("commutator_YX_4T", comm, 1e-10), IdentityResult("inversion_rule", inv, 1e-10)]


def frame_examples(n: int = 1) -> list:
    p = np.zeros(2 * n + 1)
    p[n] = 3.0
    left = frame_vector("left", 1, p)
    right = frame_vector("right", 1, p)
    eL = np.zeros(2 * n + 1)
    eL[0], eL[-1] = 1.0, 6.0
    eR = eL.copy()
    eR[-1] = -6.0
    err = max(np.max(np.abs(left - eL)), np.max(np.abs(right - eR)))
    return [IdentityResult("frame_vectors", float(err), 0.0)]


def gauge_checks(rng, n: int = 1, samples: int = 1000) -> list:
    G, P, Q = (random_points(rng, samples, n) for _ in range(3))
    inv = np.max(np.abs(cc_distance_upper(mul(G, P), mul(G, Q)) - cc_distance_upper(P, Q)))
    lam = rng.uniform(0.1, 3.0)
    hom = np.max(np.abs(cc_distance_upper(dilate(lam, P), dilate(lam, Q)) - lam * cc_distance_upper(P, Q)))
    self_ = np.max(np.abs(cc_distance_upper(P, P)))
    pt = random_points(rng, 1, n)[0]
    wn, eps = rng.uniform(0.1, 2.0), rng.uniform(0.1, 1.0)
    path = bch_square_path(pt, wn, eps)
    step = mul(inverse(path[0]), path[-1])
    target = np.zeros(2 * n + 1)
    target[-1] = eps * eps * wn
    bch = np.max(np.abs(step - target))
    return [IdentityResult("gauge_left_invariant", float(inv), 1e-12),
            IdentityResult("gauge_homogeneous", float(hom), 1e-12),
            IdentityResult("gauge_vanishes_on_diagonal", float(self_), 0.0),
            IdentityResult("bch_square_endpoint", float(bch), 1e-12)]


def grid_checks(rng, n: int = 1) -> list:
    box = Box.cube(1.0, n)
    syms = coord_symbols(n)
    aff = ScalarField(2 * syms[0] + syms[-1], n)
    g = GridField.sample(aff, box, 0.1)
    P = random_points(rng, 200, n, 0.9)
    e_aff = np.max(np.abs(g(P) - aff(P)))
    quad = random_polynomial(rng, n, 2)
    gq = GridField.sample(quad, box, 0.1)
    nodes = gq.nodes()
    e_quad = 0.0
    for j in range(1, 2 * n + 2):
        num = gq.Z(j).values
        e_quad = max(e_quad, float(np.max(np.abs(num - quad.Z(j)(nodes)))))
    u = ScalarField(syms[0], n)
    chain = chain_rule_residual(u, lambda r: r**2, 1, box, 0.1, mode="analytic")
    return [IdentityResult("interp_affine_exact", float(e_aff), 1e-12),
            IdentityResult("stencil_exact_on_quadratics", e_quad, 1e-9),
            IdentityResult("chain_rule_analytic", float(chain), 1e-10)]


def identity_battery(rng: np.random.Generator, n: int = 1) -> list:
    return (group_axioms(rng, n) + j_identities(rng, n) + commutator_battery(rng, n) + frame_examples(n)
            + gauge_checks(rng, n) + grid_checks(rng, n))
