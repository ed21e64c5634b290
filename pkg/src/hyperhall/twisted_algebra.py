"""Finitely supported kernels on a surface group, twisted by a multiplier.

A kernel is a complex function on an enumerated ball, multiplied by the
sigma-twisted convolution (A*B)(g) = sum over g1 g2 = g of
A(g1) B(g2) sigma(g1,g2).  Traces of triple products are evaluated as
pair sums: with g3 = (g1 g2)^-1 the second twisting factor
sigma(g1 g2, g3) is exactly 1 at our base point, so
tr(A*B*C) = sum A(g1) B(g2) C((g1 g2)^-1) sigma(g1,g2).
The cyclic cocycles built from the homology derivations delta_j and from
the hyperbolic-area weight both reduce to such sums.

Conventions: the identity is the first ball element, so trace = value at
index 0; derivations multiply by i times the exponent-sum coordinate;
the star twist conj(sigma(g, g^-1)) is kept in formulas even though it
is 1 at the disk-origin base point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fuchsian import GroupBall, GroupElement, Multiplier
from .hypgeom import triangle_area_oriented_many
from .jacobi import kappa

_CHUNK_PAIRS = 1 << 20


@dataclass(frozen=True, eq=False)
class TwistedKernel:
    """Finitely supported kernel over a ball, with its multiplier."""

    multiplier: Multiplier
    ball: GroupBall
    values: np.ndarray

    def __post_init__(self):
        if self.ball.words[0] != ():
            raise ValueError("ball must list the identity first")
        if self.values.shape != (len(self.ball),):
            raise ValueError("values must be dense over the ball")
        if self.multiplier.presentation is not self.ball.presentation:
            raise ValueError("multiplier and ball presentations differ")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, multiplier: Multiplier, ball: GroupBall) -> "TwistedKernel":
        return cls(multiplier, ball, np.zeros(len(ball), dtype=complex))

    @classmethod
    def delta(cls, multiplier: Multiplier, ball: GroupBall, gamma) -> "TwistedKernel":
        v = np.zeros(len(ball), dtype=complex)
        i = gamma if isinstance(gamma, (int, np.integer)) else ball.index_of(gamma)
        if i < 0:
            raise ValueError("element outside the ball")
        v[i] = 1.0
        return cls(multiplier, ball, v)

    @classmethod
    def unit(cls, multiplier: Multiplier, ball: GroupBall) -> "TwistedKernel":
        return cls.delta(multiplier, ball, 0)

    @classmethod
    def random(cls, multiplier: Multiplier, ball: GroupBall,
               support_radius: int = 2, seed: int = 0) -> "TwistedKernel":
        """Uniform [-1,1] real and imaginary entries on the sub-ball."""
        rng = np.random.default_rng(seed)
        n = ball.prefix_count(support_radius)
        v = np.zeros(len(ball), dtype=complex)
        v[:n] = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
        return cls(multiplier, ball, v)

    # -- structure ----------------------------------------------------------

    @property
    def support_count(self) -> int:
        """Length of the shortest listing prefix containing the support."""
        nz = np.flatnonzero(self.values)
        if nz.size == 0:
            return 0
        return int(self.ball.prefix_count(int(self.ball.lengths[nz[-1]])))

    def support(self) -> dict[GroupElement, complex]:
        return {
            self.ball.elements[i]: complex(self.values[i])
            for i in np.flatnonzero(self.values)
        }

    def value(self, gamma: GroupElement) -> complex:
        i = self.ball.index_of(gamma)
        return complex(self.values[i]) if i >= 0 else 0.0j

    def _like(self, values: np.ndarray) -> "TwistedKernel":
        return TwistedKernel(self.multiplier, self.ball, values)

    def __add__(self, other: "TwistedKernel") -> "TwistedKernel":
        self._check_compatible(other)
        return self._like(self.values + other.values)

    def __sub__(self, other: "TwistedKernel") -> "TwistedKernel":
        self._check_compatible(other)
        return self._like(self.values - other.values)

    def __neg__(self) -> "TwistedKernel":
        return self._like(-self.values)

    def scale(self, c: complex) -> "TwistedKernel":
        return self._like(c * self.values)

    def __mul__(self, other):
        if isinstance(other, TwistedKernel):
            return convolve(self, other)
        return self.scale(other)

    def __rmul__(self, c):
        return self.scale(c)

    def norm2(self) -> float:
        return float(np.linalg.norm(self.values))

    def _check_compatible(self, other: "TwistedKernel"):
        if self.ball is not other.ball or self.multiplier is not other.multiplier:
            raise ValueError("kernels live on different balls or multipliers")


def _pair_block(mult: Multiplier, ball: GroupBall, I, J, cache: bool):
    """Product indices and sigma values for index pair arrays."""
    K = ball.product_index(I, J, cache=cache)
    sig = mult.sigma_many(ball, I, J)
    return K, sig


def _full_tables(mult: Multiplier, ball: GroupBall, nA: int, nB: int):
    """Cached (product index, sigma) tables over a support rectangle."""
    cache = getattr(mult, "_pair_tables", None)
    if cache is None:
        cache = {}
        object.__setattr__(mult, "_pair_tables", cache) if hasattr(mult, "__dataclass_fields__") else setattr(mult, "_pair_tables", cache)
    key = (id(ball), nA, nB)
    if key not in cache:
        I, J = np.meshgrid(np.arange(nA), np.arange(nB), indexing="ij")
        K, sig = _pair_block(mult, ball, I.ravel(), J.ravel(), cache=False)
        cache[key] = (K.reshape(nA, nB), sig.reshape(nA, nB))
    return cache[key]


def convolve(A: TwistedKernel, B: TwistedKernel) -> TwistedKernel:
    """Twisted convolution; raises if the product leaves the stored ball."""
    A._check_compatible(B)
    ball, mult = A.ball, A.multiplier
    nzA = np.flatnonzero(A.values)
    nzB = np.flatnonzero(B.values)
    out = np.zeros(len(ball), dtype=complex)
    if nzA.size == 0 or nzB.size == 0:
        return A._like(out)
    I = np.repeat(nzA, nzB.size)
    J = np.tile(nzB, nzA.size)
    K, sig = _pair_block(mult, ball, I, J, cache=False)
    if np.any(K < 0):
        raise ValueError(
            "convolution leaves the stored ball; enumerate a larger radius"
        )
    np.add.at(out, K, A.values[I] * B.values[J] * sig)
    return A._like(out)


def star(A: TwistedKernel) -> TwistedKernel:
    """Adjoint kernel conj(A(g^-1)) conj(sigma(g, g^-1)); an exact involution."""
    inv = A.ball.inverse_index
    twist = np.array(
        [
            np.conj(A.multiplier.sigma(A.ball.elements[i], A.ball.elements[inv[i]]))
            for i in range(len(A.ball))
        ]
    )
    return A._like(np.conj(A.values[inv]) * twist)


def trace(A: TwistedKernel) -> complex:
    return complex(A.values[0])


def derivation_delta(j: int, A: TwistedKernel) -> TwistedKernel:
    """Homology derivation (delta_j A)(g) = i abel_j(g) A(g)."""
    g2 = 2 * A.ball.presentation.genus
    if not 1 <= j <= g2:
        raise IndexError(f"derivation index {j} outside 1..{g2}")
    return A._like(1j * A.ball.abel[:, j - 1] * A.values)


def triple_trace(A: TwistedKernel, B: TwistedKernel, C: TwistedKernel,
                 weight: Callable[..., np.ndarray] | None = None) -> complex:
    """tr(A*B*C), optionally with a weight w(I, J, Kinv) under the sum.

    I, J index the first two factors, Kinv the ball index of the inverted
    pair product (where C is read).  Pairs whose product falls outside the
    ball contribute zero (C vanishes there).  Large supports are processed
    in chunks without caching.
    """
    A._check_compatible(B)
    A._check_compatible(C)
    ball, mult = A.ball, A.multiplier
    nA, nB = A.support_count, B.support_count
    if nA == 0 or nB == 0:
        return 0.0j
    total = 0.0j
    if nA * nB <= _CHUNK_PAIRS:
        K, sig = _full_tables(mult, ball, nA, nB)
        ok = K >= 0
        I, J = np.nonzero(ok)
        Kinv = ball.inverse_index[K[ok]]
        vals = A.values[I] * B.values[J] * sig[ok] * C.values[Kinv]
        if weight is not None:
            vals = vals * weight(I, J, Kinv)
        total = complex(np.sum(vals))
    else:
        rows_per_chunk = max(1, _CHUNK_PAIRS // nB)
        Jb = np.arange(nB)
        for lo in range(0, nA, rows_per_chunk):
            hi = min(nA, lo + rows_per_chunk)
            I = np.repeat(np.arange(lo, hi), nB)
            J = np.tile(Jb, hi - lo)
            K, sig = _pair_block(mult, ball, I, J, cache=False)
            ok = K >= 0
            Kinv = ball.inverse_index[K[ok]]
            vals = A.values[I[ok]] * B.values[J[ok]] * sig[ok] * C.values[Kinv]
            if weight is not None:
                vals = vals * weight(I[ok], J[ok], Kinv)
            total += complex(np.sum(vals))
    return total


@dataclass(frozen=True)
class CyclicCochainReport:
    value: complex
    cyclicity_defect: float
    hochschild_defect: float


def cyclicity_defect(c, A0, A1, A2) -> float:
    """|c(A0,A1,A2) - c(A2,A0,A1)| for a trilinear functional."""
    return abs(c(A0, A1, A2) - c(A2, A0, A1))


def hochschild_b(c, A0, A1, A2, A3) -> complex:
    """Hochschild coboundary of a trilinear functional."""
    return (
        c(convolve(A0, A1), A2, A3)
        - c(A0, convolve(A1, A2), A3)
        + c(A0, A1, convolve(A2, A3))
        - c(convolve(A3, A0), A1, A2)
    )


def hochschild_b_bilinear(phi, A0, A1, A2) -> complex:
    """Hochschild coboundary of a bilinear functional."""
    return phi(convolve(A0, A1), A2) - phi(A0, convolve(A1, A2)) + phi(convolve(A2, A0), A1)


def cyclic_cjk_value(j: int, k: int, A0, A1, A2) -> complex:
    """c_{j,k}(A0,A1,A2) = tr(A0 (delta_j A1 delta_k A2 - delta_k A1 delta_j A2)).

    The (j,k)-antisymmetrized double derivative under the trace; this is
    the form that is cyclic, Hochschild-closed, and vanishes at j = k.
    """
    return triple_trace(A0, derivation_delta(j, A1), derivation_delta(k, A2)) \
        - triple_trace(A0, derivation_delta(k, A1), derivation_delta(j, A2))


def cyclic_cjk(j: int, k: int, A0, A1, A2, A3=None) -> CyclicCochainReport:
    """c_{j,k} with its cyclicity and Hochschild defects.

    A3 defaults to the seeded random kernel on the same ball.
    """
    if A3 is None:
        A3 = TwistedKernel.random(A0.multiplier, A0.ball, support_radius=1, seed=0)
    c = lambda X, Y, Z: cyclic_cjk_value(j, k, X, Y, Z)
    return CyclicCochainReport(
        value=c(A0, A1, A2),
        cyclicity_defect=cyclicity_defect(c, A0, A1, A2),
        hochschild_defect=abs(hochschild_b(c, A0, A1, A2, A3)),
    )


def tau_K(A0, A1, A2) -> complex:
    """Conductance cocycle kappa(g) sum_j c_{j,j+g}, evaluated in one pass.

    Summing the antisymmetrized double derivatives over the g handle pairs
    collapses to a single weighted triple trace: the i^2 from the two
    derivations and the handle sum combine into minus the symplectic form
    of the exponent sums of the middle and product-inverse elements.
    """
    g = A0.ball.presentation.genus
    abel = A0.ball.abel.astype(float)

    def weight(I, J, Kinv):
        u, v = abel[J], abel[Kinv]
        return -(
            np.einsum("nj,nj->n", u[:, :g], v[:, g:])
            - np.einsum("nj,nj->n", u[:, g:], v[:, :g])
        )

    return kappa(g) * triple_trace(A0, A1, A2, weight=weight)


def tau_K_oracle(A0, A1, A2) -> complex:
    """Term-by-term recomputation kappa sum_j c_{j,j+g}."""
    g = A0.ball.presentation.genus
    return kappa(g) * sum(cyclic_cjk_value(j, j + g, A0, A1, A2) for j in range(1, g + 1))


def tau_chern(A0, A1, A2) -> complex:
    """Chern-character cocycle: hyperbolic-area-weighted twisted triple trace."""
    ball = A0.ball
    u = ball.presentation.base_point.to_halfplane()

    def weight(I, J, Kinv):
        mid = np.full(len(I), u, dtype=complex)
        return triangle_area_oriented_many(ball.orbit_inv[I], mid, ball.orbit[J])

    return triple_trace(A0, A1, A2, weight=weight)


def chern_self_consistency(A0, A1, A2) -> float:
    """|constant-weight tau_chern - tr(A0*A1*A2)| via the convolution path."""
    flat = triple_trace(A0, A1, A2, weight=lambda I, J, Kinv: np.ones(len(I)))
    via_conv = trace(convolve(convolve(A0, A1), A2))
    return abs(flat - via_conv)


def bridge_report(multiplier: Multiplier) -> dict:
    """Fan pairing of tau_chern vs the c_{j,j+g} sum on delta-kernel triples.

    At theta = 0 the fan sum of tau_chern over triples
    (delta_{p_k}, delta_{letter}, delta_{p_{k+1}^{-1}}) is the hyperbolic
    fundamental-class pairing, while the c_{j,j+g} fan sum is -2 times the
    symplectic one (the commutator covers each handle pair twice and the
    Euclidean triangle area is half the symplectic form), so
    kappa = -2 S_chern / S_cjk.  The identity lives at zero twist, so the
    multiplier only contributes its presentation.
    """
    pres = multiplier.presentation
    if multiplier.theta_value != 0.0:
        multiplier = Multiplier(0.0, pres)
    g = pres.genus
    ball = pres.ball(2 * g)
    letters = pres.relator_letters
    s_chern = 0.0j
    s_cjk = 0.0j
    s_tauk = 0.0j
    prefix = pres.identity
    for k in range(1, len(letters)):
        prefix = pres.multiply(prefix, pres.element((letters[k - 1],)))
        nxt = pres.multiply(prefix, pres.element((letters[k],)))
        t0 = TwistedKernel.delta(multiplier, ball, prefix)
        t1 = TwistedKernel.delta(multiplier, ball, pres.element((letters[k],)))
        t2 = TwistedKernel.delta(multiplier, ball, pres.inverse(nxt))
        s_chern += tau_chern(t0, t1, t2)
        s_cjk += sum(
            cyclic_cjk_value(j, j + g, t0, t1, t2) for j in range(1, g + 1)
        )
        s_tauk += tau_K(t0, t1, t2)
    kappa_rec = -2.0 * (s_chern / s_cjk).real
    return {
        "genus": g,
        "fan_chern": s_chern.real,
        "fan_cjk": s_cjk.real,
        "fan_tau_K": s_tauk.real,
        "kappa": kappa(g),
        "kappa_recovered": kappa_rec,
        "kappa_defect": abs(kappa_rec - kappa(g)),
    }


def kernel_dump(A: TwistedKernel) -> dict:
    """JSON-ready kernel payload (words and complex entries)."""
    return {
        "genus": A.ball.presentation.genus,
        "radius": A.ball.radius,
        "theta": A.multiplier.theta_value,
        "entries": [
            {"word": list(map(int, A.ball.words[i])),
             "re": float(A.values[i].real), "im": float(A.values[i].imag)}
            for i in np.flatnonzero(A.values)
        ],
    }
