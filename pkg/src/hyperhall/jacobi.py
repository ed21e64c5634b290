"""Homology pairings of surface-group cocycles.

Two real-valued group 2-cochains live here: the Euclidean one, half the
symplectic form of the exponent-sum (period lattice) vectors, and the
hyperbolic one, the oriented area of the orbit triangle (u, g1 u,
g1 g2 u).  Both are group 2-cocycles; paired against the fundamental
class through the fan triangulation of the relator polygon they give g
and 4 pi (g - 1), so their ratio is kappa(g) = 4 pi (g - 1) / g, and
c_hyp - kappa c_symp is a coboundary.  The coboundary oracle checks that
last statement by least squares over a ball: a trivializing 1-cochain q
restricted to a ball solves the interior constraint system exactly, so
the relative residual separates trivial from nontrivial classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import lsqr

from .fuchsian import GroupBall, GroupElement, SurfaceGroupPresentation
from .hypgeom import triangle_area_oriented, triangle_area_oriented_many

_LSQR_TOL = 1e-12


@dataclass(frozen=True)
class LatticeVector:
    """Integer period vector of an orbit point, base point mapped to 0."""

    entries: tuple[int, ...]

    @classmethod
    def of_orbit_point(cls, gamma: GroupElement) -> "LatticeVector":
        return cls(tuple(int(x) for x in gamma.abel))

    def __add__(self, other: "LatticeVector") -> "LatticeVector":
        if len(self.entries) != len(other.entries):
            raise ValueError("lattice vectors of different genus")
        return LatticeVector(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=np.int64)


@dataclass(frozen=True)
class GroupTwoCochain:
    """Real 2-cochain on a surface group.

    evaluator maps an element pair to a real number; batch, when present,
    evaluates over index arrays into a ball (same values, vectorized).
    """

    evaluator: Callable[[GroupElement, GroupElement], float]
    batch: Optional[Callable[[GroupBall, np.ndarray, np.ndarray], np.ndarray]] = None

    def __call__(self, g1: GroupElement, g2: GroupElement) -> float:
        return self.evaluator(g1, g2)

    def on_ball(self, ball: GroupBall, I, J) -> np.ndarray:
        I = np.asarray(I, dtype=np.int64)
        J = np.asarray(J, dtype=np.int64)
        if self.batch is not None:
            return self.batch(ball, I, J)
        return np.array(
            [self.evaluator(ball.elements[i], ball.elements[j]) for i, j in zip(I, J)]
        )


def symplectic_s(u, v) -> float:
    """Standard symplectic form pairing slot j with slot j+g."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1 or u.size % 2:
        raise ValueError("expected two equal-length vectors of even length")
    g = u.size // 2
    return float(np.dot(u[:g], v[g:]) - np.dot(u[g:], v[:g]))


def kappa(genus: int) -> float:
    """Ratio of the hyperbolic to the symplectic fundamental-class pairing."""
    if genus < 2:
        raise ValueError("genus must be at least 2")
    return 4.0 * math.pi * (genus - 1) / genus


def cocycle_symp(g1: GroupElement, g2: GroupElement) -> float:
    """Euclidean triangle area: half the symplectic form of the periods.

    Values are half-integers, exact in floating point.
    """
    return 0.5 * symplectic_s(g1.abel, g2.abel)


def cocycle_hyp(g1: GroupElement, g2: GroupElement) -> float:
    """Oriented hyperbolic area of the orbit triangle (u, g1 u, g1 g2 u).

    Evaluated in the frame translated by g1^-1, an exact invariance that
    keeps one vertex at the base point.
    """
    pres = g1.presentation
    u = pres.base_point.to_halfplane()
    return triangle_area_oriented(
        pres.inverse(g1).matrix(u), u, g2.matrix(u)
    )


def symp_cochain(presentation: SurfaceGroupPresentation) -> GroupTwoCochain:
    g = presentation.genus

    def batch(ball: GroupBall, I, J):
        u, v = ball.abel[I].astype(float), ball.abel[J].astype(float)
        return 0.5 * (
            np.einsum("nj,nj->n", u[:, :g], v[:, g:])
            - np.einsum("nj,nj->n", u[:, g:], v[:, :g])
        )

    return GroupTwoCochain(cocycle_symp, batch)


def hyp_cochain(presentation: SurfaceGroupPresentation) -> GroupTwoCochain:
    u = presentation.base_point.to_halfplane()

    def batch(ball: GroupBall, I, J):
        mid = np.full(len(I), u, dtype=complex)
        return triangle_area_oriented_many(ball.orbit_inv[I], mid, ball.orbit[J])

    return GroupTwoCochain(cocycle_hyp, batch)


def combination_cochain(presentation: SurfaceGroupPresentation,
                        hyp_weight: float = 1.0,
                        symp_weight: float = 0.0) -> GroupTwoCochain:
    ch = hyp_cochain(presentation)
    cs = symp_cochain(presentation)

    def ev(g1, g2):
        return hyp_weight * ch(g1, g2) + symp_weight * cs(g1, g2)

    def batch(ball, I, J):
        return hyp_weight * ch.on_ball(ball, I, J) + symp_weight * cs.on_ball(ball, I, J)

    return GroupTwoCochain(ev, batch)


def fan_pairing(c, presentation: SurfaceGroupPresentation) -> float:
    """Pair a 2-cochain with the fundamental class.

    The relator polygon is triangulated as a fan from the identity over
    the relator prefixes p_k; the pairing is sum_k c(p_k, letter_{k+1}).
    """
    letters = presentation.relator_letters
    total = 0.0
    prefix = presentation.identity
    for k in range(1, len(letters)):
        prefix = presentation.multiply(prefix, presentation.element((letters[k - 1],)))
        total += c(prefix, presentation.element((letters[k],)))
    return total


def relator_prefixes(presentation: SurfaceGroupPresentation) -> list[GroupElement]:
    """Proper prefixes p_1 .. p_{4g-1} of the relator word."""
    out = []
    prefix = presentation.identity
    for letter in presentation.relator_letters[:-1]:
        prefix = presentation.multiply(prefix, presentation.element((letter,)))
        out.append(prefix)
    return out


def _composable_pairs(ball: GroupBall):
    n = len(ball)
    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    I, J = I.ravel(), J.ravel()
    K = ball.product_index(I, J, cache=False)
    keep = K >= 0
    return I[keep], J[keep], K[keep]


def coboundary_residual(c, ball: GroupBall):
    """Least-squares trivialization of a 2-cochain over a ball.

    Minimizes sum |c(g1,g2) - q(g1) + q(g1 g2) - q(g2)|^2 over 1-cochains
    q with q(e) = 0, over all pairs composable inside the ball.  Returns
    (relative residual, q as an array over ball indices).
    """
    if len(ball) <= 1:
        raise ValueError("ball has no nonidentity elements")
    c = c if isinstance(c, GroupTwoCochain) else GroupTwoCochain(c)
    I, J, K = _composable_pairs(ball)
    b = c.on_ball(ball, I, J)

    # unknowns are q at indices 1..n-1; identity rows drop out via gauge
    rows = np.repeat(np.arange(len(I)), 3)
    cols = np.stack([I, J, K], axis=1).ravel()
    vals = np.tile(np.array([1.0, 1.0, -1.0]), len(I))
    keep = cols > 0
    A = coo_matrix(
        (vals[keep], (rows[keep], cols[keep] - 1)), shape=(len(I), len(ball) - 1)
    ).tocsr()

    sol = lsqr(A, b, atol=_LSQR_TOL, btol=_LSQR_TOL, iter_lim=20000)
    q = np.concatenate([[0.0], sol[0]])
    resid = float(np.linalg.norm(A @ sol[0] - b))
    norm_b = float(np.linalg.norm(b))
    rel = resid / norm_b if norm_b > 0 else resid
    return rel, q


def coboundary_of(q: Callable[[GroupElement], float]) -> GroupTwoCochain:
    """The 2-coboundary (dq)(g1,g2) = q(g1) - q(g1 g2) + q(g2)."""

    def ev(g1: GroupElement, g2: GroupElement) -> float:
        pres = g1.presentation
        return q(g1) - q(pres.multiply(g1, g2)) + q(g2)

    return GroupTwoCochain(ev)


def growth_fit(q: np.ndarray, ball: GroupBall) -> dict:
    """Fit |q| against word length as c0 + c1 l + c2 l^2.

    The trivializing cochain of the pairing-matched combination grows at
    worst quadratically in word length; the fit documents that.
    """
    lengths = ball.lengths.astype(float)
    A = np.stack([np.ones_like(lengths), lengths, lengths**2], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.abs(q), rcond=None)
    resid = np.abs(A @ coef - np.abs(q))
    return {
        "c0": float(coef[0]),
        "c1": float(coef[1]),
        "c2": float(coef[2]),
        "max_abs_q": float(np.max(np.abs(q))),
        "fit_residual_max": float(np.max(resid)),
    }


def pairing_report(presentation: SurfaceGroupPresentation) -> dict:
    """Fundamental-class pairings and their ratio, as a JSON-ready record."""
    g = presentation.genus
    hyp = fan_pairing(hyp_cochain(presentation), presentation)
    symp = fan_pairing(symp_cochain(presentation), presentation)
    k = kappa(g)
    return {
        "genus": g,
        "pairing_hyp": hyp,
        "pairing_symp": symp,
        "pairing_hyp_expected": 4.0 * math.pi * (g - 1),
        "pairing_symp_expected": float(g),
        "kappa": k,
        "ratio": hyp / symp,
        "ratio_defect": abs(hyp / symp - k),
    }


def coboundary_report(presentation: SurfaceGroupPresentation, radius: int) -> dict:
    """Residuals of the matched combination and of each cocycle alone."""
    ball = presentation.ball(radius)
    k = kappa(presentation.genus)
    rel_comb, q = coboundary_residual(
        combination_cochain(presentation, 1.0, -k), ball
    )
    rel_hyp, _ = coboundary_residual(hyp_cochain(presentation), ball)
    rel_symp, _ = coboundary_residual(symp_cochain(presentation), ball)
    return {
        "genus": presentation.genus,
        "radius": radius,
        "kappa": k,
        "residual_combination": rel_comb,
        "residual_hyp": rel_hyp,
        "residual_symp": rel_symp,
        "q_growth": growth_fit(q, ball),
    }
