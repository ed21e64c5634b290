"""Cocompact genus-g surface groups acting on the hyperbolic plane.

The presentation is the standard one-relator presentation with generators
a_1..a_g, b_1..b_g and relator [a_1,b_1]...[a_g,b_g].  The generators are
side-pairing translations of the regular 4g-gon centered at the disk
origin whose interior angle is 2 pi / 4g, so that the polygon tiles the
plane and the quotient is a closed genus-g surface.

Letters of a word are signed integers: +j is the j-th generator in the
order (a_1..a_g, b_1..b_g), -j its inverse.  Words are kept freely
reduced; group-level coincidences (which first appear at word length 2g)
are resolved through a matrix fingerprint when balls are enumerated.

The multiplier sigma(x, y) is the holonomy of the geodesic triangle with
vertices (u, x u, x y u) at the base point u (the disk origin), and the
projective phase phi implements the associated magnetic translations.
Composing magnetic translations gives
U(g1) U(g2) = conj(sigma(g1, g2)) U(g1 g2);
the conjugate in that identity is a fixed convention of this package,
verified empirically by the test suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .hypgeom import (
    MagneticField,
    MoebiusMap,
    HyperbolicPoint,
    MODEL_DISK,
    disk_rotation,
    disk_translation,
    holonomy,
    holonomy_many,
    parallel_transport,
    su11_apply,
    su11_compose,
    su11_inverse,
    su11_to_sl2r,
    _apply_halfplane,
    _theta_value,
)

# Composing the magnetic translations U multiplies by the conjugate of
# sigma, not sigma itself; see the module docstring.
U_COMPOSITION_CONJUGATE = True

_FINGERPRINT_TOL = 1e-6
_RELATOR_TOL = 1e-8
_DEFAULT_BUDGET = 500_000


class BudgetError(RuntimeError):
    """Ball enumeration exceeded the configured element budget."""


def reduce_word(word) -> tuple[int, ...]:
    """Freely reduce a letter sequence (cancel adjacent x x^-1 pairs)."""
    out: list[int] = []
    for letter in word:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(int(letter))
    return tuple(out)


def invert_word(word) -> tuple[int, ...]:
    return tuple(-letter for letter in reversed(word))


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A group element: freely reduced word plus its matrix."""

    presentation: "SurfaceGroupPresentation"
    word: tuple[int, ...]
    mat: np.ndarray

    @property
    def matrix(self) -> MoebiusMap:
        return MoebiusMap(self.mat)

    @property
    def length(self) -> int:
        return len(self.word)

    @property
    def abel(self) -> np.ndarray:
        """Exponent-sum vector in Z^2g, slots ordered (a_1..a_g, b_1..b_g)."""
        v = np.zeros(2 * self.presentation.genus, dtype=np.int64)
        for letter in self.word:
            v[abs(letter) - 1] += 1 if letter > 0 else -1
        return v

    def is_identity(self) -> bool:
        return not self.word

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.presentation is other.presentation and self.word == other.word

    def __hash__(self):
        return hash((id(self.presentation), self.word))

    def __repr__(self):
        return f"GroupElement(word={self.word})"


def _pair_isometry(p1: complex, p2: complex, q1: complex, q2: complex):
    """SU(1,1) map sending the ordered pair (p1, p2) to (q1, q2).

    Requires equal geodesic distances d(p1,p2) = d(q1,q2); the map is the
    unique orientation-preserving isometry with that property.
    """

    def frame(a, b):
        t = disk_translation(a)
        b0 = su11_apply(t, b)
        return su11_compose(disk_rotation(-math.atan2(b0.imag, b0.real)), t)

    return su11_compose(su11_inverse(frame(q1, q2)), frame(p1, p2))


def _polygon_generators(genus: int) -> list[MoebiusMap]:
    """Side-pairing maps of the regular 4g-gon for the standard relator.

    Edge k runs from vertex V_k to V_{k+1} counterclockwise and carries
    the k-th letter of a_1 b_1 a_1^-1 b_1^-1 ... ; the gluing map of a
    letter sends the edge carrying its inverse onto the edge carrying the
    letter with reversed orientation.  Tracing the tiles around a vertex
    shows those gluings satisfy [m_a, m_b^-1] ... = 1, so the b-type
    generators are the inverses of their gluing maps; with that choice the
    standard commutator relator holds.
    """
    n = 4 * genus
    circ = 1.0 / math.tan(math.pi / n) ** 2  # cosh of the circumradius
    rho = math.sqrt((circ - 1.0) / (circ + 1.0))
    # Clockwise vertex order; the mirror image of the counterclockwise
    # polygon carries the same words but gives the relator fan positive
    # hyperbolic orientation, matching the positive symplectic pairing.
    verts = [rho * np.exp(-2j * math.pi * k / n) for k in range(n)]

    letters = []
    for i in range(genus):
        letters += [i + 1, genus + i + 1, -(i + 1), -(genus + i + 1)]

    gens = []
    for s in range(1, 2 * genus + 1):
        p = letters.index(s)
        q = letters.index(-s)
        g = _pair_isometry(
            verts[q], verts[(q + 1) % n], verts[(p + 1) % n], verts[p]
        )
        if s > genus:
            g = su11_inverse(g)
        gens.append(su11_to_sl2r(*g))
    return gens


class SurfaceGroupPresentation:
    """Genus-g surface group with explicit matrix generators.

    Attributes:
        genus: g >= 2.
        generators: the 2g MoebiusMap generators (a_1..a_g, b_1..b_g).
        base_point: the disk origin; orbit computations use its half-plane
            coordinate i.
        relator_letters: letters of [a_1,b_1]...[a_g,b_g].
    """

    def __init__(self, genus: int, generators: list[MoebiusMap]):
        if genus < 2:
            raise ValueError("genus must be at least 2")
        if len(generators) != 2 * genus:
            raise ValueError("expected 2g generators")
        self.genus = genus
        self.generators = list(generators)
        self.base_point = HyperbolicPoint(0j, MODEL_DISK)
        relator: list[int] = []
        for i in range(genus):
            relator += [i + 1, genus + i + 1, -(i + 1), -(genus + i + 1)]
        self.relator_letters = tuple(relator)
        self._letter_mats = {}
        for j, g in enumerate(self.generators, start=1):
            self._letter_mats[j] = g.mat
            self._letter_mats[-j] = g.inverse().mat
        self.identity = GroupElement(self, (), np.eye(2))
        self._balls: dict[int, "GroupBall"] = {}

    # -- elements ---------------------------------------------------------

    def letter_matrix(self, letter: int) -> np.ndarray:
        return self._letter_mats[letter]

    def element(self, word) -> GroupElement:
        """Build the element of a letter sequence (freely reduced)."""
        w = reduce_word(word)
        m = np.eye(2)
        for letter in w:
            m = m @ self._letter_mats[letter]
        return GroupElement(self, w, m)

    def generator(self, j: int) -> GroupElement:
        """Generator as an element; j in 1..2g."""
        return GroupElement(self, (j,), self._letter_mats[j])

    def multiply(self, x: GroupElement, y: GroupElement) -> GroupElement:
        w = reduce_word(x.word + y.word)
        if not w:
            return self.identity
        return GroupElement(self, w, x.mat @ y.mat)

    def inverse(self, x: GroupElement) -> GroupElement:
        if not x.word:
            return self.identity
        a, b, c, d = x.mat[0, 0], x.mat[0, 1], x.mat[1, 0], x.mat[1, 1]
        return GroupElement(self, invert_word(x.word), np.array([[d, -b], [-c, a]]))

    def relator_defect(self) -> float:
        """Max-norm distance of the relator word's matrix from +-identity."""
        m = self.element(self.relator_letters).mat
        return float(min(np.max(np.abs(m - np.eye(2))), np.max(np.abs(m + np.eye(2)))))

    # -- balls ------------------------------------------------------------

    def ball(self, radius: int, budget: int = _DEFAULT_BUDGET) -> "GroupBall":
        if radius not in self._balls:
            self._balls[radius] = GroupBall(self, radius, budget)
        return self._balls[radius]


def build_genus_g_group(genus: int) -> SurfaceGroupPresentation:
    """Construct the standard genus-g presentation from the regular 4g-gon.

    Raises RuntimeError if the constructed side pairings fail the relator
    or hyperbolicity checks; this guards the geometric construction.
    """
    pres = SurfaceGroupPresentation(genus, _polygon_generators(genus))
    defect = pres.relator_defect()
    if defect > _RELATOR_TOL:
        raise RuntimeError(f"relator defect {defect:.3e} exceeds {_RELATOR_TOL}")
    for j, g in enumerate(pres.generators, start=1):
        if abs(g.trace()) <= 2.0:
            raise RuntimeError(f"generator {j} is not hyperbolic")
    u = pres.base_point
    images = [g(u).coordinate for g in pres.generators]
    for i in range(len(images)):
        for k in range(i + 1, len(images)):
            if abs(images[i] - images[k]) < 1e-9:
                raise RuntimeError("generator images of the base point collide")
    return pres


def _fingerprints(mats: np.ndarray) -> np.ndarray:
    """Sign-normalized flattened matrices used as dedup keys.

    The sign is fixed by making the first entry of magnitude > 1e-6
    positive; entries of SL(2,R) matrices cannot all be below that.
    """
    flat = mats.reshape(-1, 4)
    lead = np.argmax(np.abs(flat) > _FINGERPRINT_TOL, axis=1)
    vals = flat[np.arange(len(flat)), lead]
    return flat * np.where(vals < 0, -1.0, 1.0)[:, None]


class GroupBall:
    """Breadth-first enumeration of the word-length ball of a presentation.

    Elements are listed layer by layer, lexicographically within a layer
    (letter order a_1 < ... < a_g < b_1 < ... < b_g < inverses), so each
    group element is represented by its lexicographically least geodesic
    word.  Distinct words mapping to the same matrix (up to sign) are
    merged through the fingerprint index.
    """

    def __init__(self, presentation: SurfaceGroupPresentation, radius: int,
                 budget: int = _DEFAULT_BUDGET):
        self.presentation = presentation
        self.radius = int(radius)
        g = presentation.genus
        letters = list(range(1, 2 * g + 1)) + [-j for j in range(1, 2 * g + 1)]
        letter_mats = np.stack([presentation.letter_matrix(l) for l in letters])

        words: list[tuple[int, ...]] = [()]
        mats = [np.eye(2)]
        layer_sizes = [1]
        fps = _fingerprints(np.stack(mats))
        prev_words = [()]
        prev_mats = np.stack(mats)

        for _ in range(self.radius):
            cand_words = []
            keep_parent = []
            keep_letter = []
            for pi, pw in enumerate(prev_words):
                last = pw[-1] if pw else 0
                for li, letter in enumerate(letters):
                    if letter == -last:
                        continue
                    cand_words.append(pw + (letter,))
                    keep_parent.append(pi)
                    keep_letter.append(li)
            if not cand_words:
                layer_sizes.append(0)
                prev_words, prev_mats = [], np.zeros((0, 2, 2))
                continue
            cand_mats = np.einsum(
                "nab,nbc->nac", prev_mats[keep_parent], letter_mats[keep_letter]
            )
            cand_fps = _fingerprints(cand_mats)

            tree_old = cKDTree(fps)
            dist, _ = tree_old.query(cand_fps, k=1, distance_upper_bound=_FINGERPRINT_TOL)
            new_mask = ~np.isfinite(dist)

            idx_new = np.flatnonzero(new_mask)
            if idx_new.size:
                tree_new = cKDTree(cand_fps[idx_new])
                dup = np.zeros(idx_new.size, dtype=bool)
                for i, j in tree_new.query_pairs(_FINGERPRINT_TOL):
                    dup[max(i, j)] = True
                idx_new = idx_new[~dup]

            layer_words = [cand_words[i] for i in idx_new]
            layer_mats = cand_mats[idx_new]
            layer_sizes.append(len(layer_words))
            words.extend(layer_words)
            mats.append(layer_mats)
            fps = np.concatenate([fps, cand_fps[idx_new]])
            if len(words) > budget:
                raise BudgetError(
                    f"ball at radius {self.radius} exceeds budget {budget}"
                )
            prev_words, prev_mats = layer_words, layer_mats

        self.words = words
        self.mats = np.concatenate([np.stack(mats[:1]), *[m for m in mats[1:] if len(m)]]) \
            if len(mats) > 1 else np.stack(mats)
        self.fps = fps
        self.layer_sizes = layer_sizes
        self.lengths = np.repeat(np.arange(len(layer_sizes)), layer_sizes)
        self.tree = cKDTree(self.fps)
        self.word_index = {w: i for i, w in enumerate(words)}
        self.elements = [
            GroupElement(presentation, w, self.mats[i]) for i, w in enumerate(words)
        ]
        abel = np.zeros((len(words), 2 * g), dtype=np.int64)
        for i, w in enumerate(words):
            for letter in w:
                abel[i, abs(letter) - 1] += 1 if letter > 0 else -1
        self.abel = abel

        u = 1j  # half-plane image of the disk origin
        a, b = self.mats[:, 0, 0], self.mats[:, 0, 1]
        c, d = self.mats[:, 1, 0], self.mats[:, 1, 1]
        self.orbit = (a * u + b) / (c * u + d)
        inv_mats = np.empty_like(self.mats)
        inv_mats[:, 0, 0], inv_mats[:, 0, 1] = d, -b
        inv_mats[:, 1, 0], inv_mats[:, 1, 1] = -c, a
        self.orbit_inv = (inv_mats[:, 0, 0] * u + inv_mats[:, 0, 1]) / (
            inv_mats[:, 1, 0] * u + inv_mats[:, 1, 1]
        )
        self.inverse_index = self.index_of_mats(inv_mats)
        if np.any(self.inverse_index < 0):
            raise RuntimeError("ball is not closed under inversion")
        self._prod_cache: dict[tuple[int, int], int] = {}

    def __len__(self):
        return len(self.words)

    @property
    def size(self) -> int:
        return len(self.words)

    def prefix_count(self, r: int) -> int:
        """Number of elements of word length <= r (a prefix of the listing)."""
        return int(np.sum(self.layer_sizes[: r + 1]))

    def element_at(self, i: int) -> GroupElement:
        return self.elements[i]

    def index_of(self, x: GroupElement) -> int:
        i = self.word_index.get(x.word)
        if i is not None:
            return i
        return int(self.index_of_mats(x.mat[None])[0])

    def index_of_mats(self, mats: np.ndarray) -> np.ndarray:
        """Ball indices of a stack of matrices; -1 where not in the ball."""
        fps = _fingerprints(np.asarray(mats))
        dist, idx = self.tree.query(fps, k=1, distance_upper_bound=_FINGERPRINT_TOL)
        idx = idx.astype(np.int64)
        idx[~np.isfinite(dist)] = -1
        return idx

    def product_index(self, I, J, cache: bool = True) -> np.ndarray:
        """Ball indices of pairwise products gamma_I gamma_J (-1 if outside)."""
        I = np.asarray(I, dtype=np.int64)
        J = np.asarray(J, dtype=np.int64)
        out = np.empty(I.shape, dtype=np.int64)
        if cache:
            flat_i, flat_j = I.ravel(), J.ravel()
            flat_out = np.empty(flat_i.shape, dtype=np.int64)
            miss = []
            for n, (i, j) in enumerate(zip(flat_i.tolist(), flat_j.tolist())):
                k = self._prod_cache.get((i, j))
                if k is None:
                    miss.append(n)
                else:
                    flat_out[n] = k
            if miss:
                miss = np.asarray(miss)
                prod = np.einsum(
                    "nab,nbc->nac", self.mats[flat_i[miss]], self.mats[flat_j[miss]]
                )
                found = self.index_of_mats(prod)
                flat_out[miss] = found
                for n, k in zip(miss.tolist(), found.tolist()):
                    self._prod_cache[(flat_i[n], flat_j[n])] = int(k)
            out = flat_out.reshape(I.shape)
        else:
            prod = np.einsum("...ab,...bc->...ac", self.mats[I], self.mats[J])
            out = self.index_of_mats(prod.reshape(-1, 2, 2)).reshape(I.shape)
        return out


def ball_sizes_oracle(ball: GroupBall) -> list[int]:
    """Layer sizes recomputed by quadratic all-pairs comparison (test oracle)."""
    mats = ball.mats
    n = len(mats)
    fps = _fingerprints(mats)
    for i in range(n):
        for j in range(i + 1, n):
            if np.max(np.abs(fps[i] - fps[j])) <= _FINGERPRINT_TOL:
                raise RuntimeError(f"duplicate elements {i}, {j} in ball")
    return list(ball.layer_sizes)


def export_ball_json(ball: GroupBall, path: str) -> None:
    """Write the enumerated ball (words, matrices, exponent sums) as JSON."""
    payload = {
        "genus": ball.presentation.genus,
        "radius": ball.radius,
        "count": len(ball),
        "elements": [
            {
                "word": list(map(int, w)),
                "matrix": [[float(x) for x in row] for row in ball.mats[i]],
                "abel": [int(x) for x in ball.abel[i]],
            }
            for i, w in enumerate(ball.words)
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


class Multiplier:
    """Group 2-cocycle sigma(x, y) = holonomy(u, x u, x y u) at strength theta.

    Values are unit modulus, sigma(e, .) = sigma(., e) = 1, and the cocycle
    identity sigma(x,y) sigma(xy,z) = sigma(x,yz) sigma(y,z) holds.  For
    numerical conditioning the holonomy is evaluated in the frame
    translated by x^-1 (an exact invariance).
    """

    def __init__(self, theta, presentation: SurfaceGroupPresentation):
        self.theta = theta if isinstance(theta, MagneticField) else MagneticField(float(theta))
        self.presentation = presentation
        self._cache: dict[tuple[tuple[int, ...], tuple[int, ...]], complex] = {}

    @property
    def theta_value(self) -> float:
        return self.theta.theta

    def u_halfplane(self) -> complex:
        return self.presentation.base_point.to_halfplane()

    def sigma(self, x: GroupElement, y: GroupElement) -> complex:
        if not x.word or not y.word or not reduce_word(x.word + y.word):
            return 1.0 + 0.0j  # degenerate triangle, exactly 1
        key = (x.word, y.word)
        val = self._cache.get(key)
        if val is None:
            u = self.u_halfplane()
            pres = self.presentation
            xinv_u = pres.inverse(x).matrix(u)
            y_u = y.matrix(u)
            val = holonomy(self.theta_value, xinv_u, u, y_u)
            self._cache[key] = val
        return val

    def sigma_many(self, ball: GroupBall, I, J) -> np.ndarray:
        """Vectorized sigma over ball index pairs (no exact-1 shortcut)."""
        I = np.asarray(I, dtype=np.int64)
        J = np.asarray(J, dtype=np.int64)
        u = np.full(I.shape, self.u_halfplane(), dtype=complex)
        return holonomy_many(self.theta_value, ball.orbit_inv[I], u, ball.orbit[J])

    def phi(self, z, gamma: GroupElement) -> complex:
        """Projective phase of the magnetic translation U(gamma) at z."""
        u = self.u_halfplane()
        if isinstance(z, HyperbolicPoint):
            z = z.to_halfplane()
        z = complex(z)
        ginv = self.presentation.inverse(gamma)
        gz = ginv.matrix(z)
        # holonomy(u, g^-1 u, g^-1 z) moved to the frame of gamma, where
        # the vertices stay away from the boundary circle
        w = holonomy(self.theta_value, gamma.matrix(u), u, z)
        return w * parallel_transport(self.theta_value, u, gz) / parallel_transport(
            self.theta_value, u, z
        )

    def translate(self, gamma: GroupElement, psi, z) -> complex:
        """(U(gamma) psi)(z) for a wavefunction psi given as a callable."""
        ginv = self.presentation.inverse(gamma)
        if isinstance(z, HyperbolicPoint):
            z = z.to_halfplane()
        return self.phi(z, gamma) * psi(ginv.matrix(complex(z)))


def sigma_cocycle_residual(multiplier: Multiplier, radius: int = 2) -> float:
    """Max cocycle defect over every triple in the ball of the radius.

    Checks sigma(x,y) sigma(xy,z) = sigma(x,yz) sigma(y,z) for all
    (x, y, z) in B_r^3, evaluating the two product points y^-1 x^-1 u and
    y z u pairwise so the whole n^3 check stays vectorized.
    """
    ball = multiplier.presentation.ball(radius)
    n = len(ball)
    u = multiplier.u_halfplane()
    theta = multiplier.theta_value

    # pairwise tables over (i, j)
    pair_invu = np.empty((n, n), dtype=complex)  # (x_i y_j)^-1 u
    pair_u = np.empty((n, n), dtype=complex)     # (x_i y_j) u
    inv_mats = ball.mats[ball.inverse_index]
    for j in range(n):
        pair_invu[:, j] = _apply_halfplane(inv_mats[j], ball.orbit_inv)
    for i in range(n):
        pair_u[i, :] = _apply_halfplane(ball.mats[i], ball.orbit)

    uu = np.full(n * n, u, dtype=complex)
    s_xy = holonomy_many(
        theta, np.repeat(ball.orbit_inv, n), uu, np.tile(ball.orbit, n)
    ).reshape(n, n)

    I, J, K = np.meshgrid(np.arange(n), np.arange(n), np.arange(n),
                          indexing="ij")
    I, J, K = I.ravel(), J.ravel(), K.ravel()
    ufull = np.full(I.shape, u, dtype=complex)
    lhs = s_xy[I, J] * holonomy_many(theta, pair_invu[I, J], ufull,
                                     ball.orbit[K])
    rhs = holonomy_many(theta, ball.orbit_inv[I], ufull,
                        pair_u[J, K]) * s_xy[J, K]
    return float(np.max(np.abs(lhs - rhs)))
