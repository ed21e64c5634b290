"""Hyperbolic plane geometry: models, isometries, areas, magnetic transport.

Conventions used throughout the package:

* The canonical model is the upper half-plane with metric
  (dx^2 + dy^2) / y^2, i.e. constant curvature -1.
* The disk model carries the pulled-back metric 4|dz|^2 / (1 - |z|^2)^2
  (also curvature -1), related to the half-plane by the Cayley map
  z = (zeta - i) / (zeta + i).
* Isometries are real 2x2 matrices of determinant one acting on the
  half-plane coordinate by fractional linear maps.
* The oriented area of a geodesic triangle is positive when the vertices
  are ordered counterclockwise (in either model; the Cayley map is
  conformal).  It is computed exactly from the closed-form line integral
  of dx/y along the geodesic sides: on the semicircle of center c the
  integral from angle t1 to t2 equals t1 - t2, and vertical sides
  contribute nothing.
* Parallel transport for a uniform magnetic field of strength theta is
  tau(z, w) = ((z - conj w) / (w - conj z))^theta, principal branch.
  This is the transport of the gauge eta = -theta dx / y from w to z.
* The holonomy of a geodesic triangle is
  holonomy(v, w, z) = tau(v, z)^-1 tau(v, w) tau(w, z)
  and equals exp(i theta area(v, w, z)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MODEL_HALFPLANE = "half-plane"
MODEL_DISK = "disk"

_BOUNDARY_TOL = 0.0  # strict inequalities define the open models


class DomainError(ValueError):
    """A coordinate fell outside the open model domain."""


def cayley_to_disk(zeta):
    """Map half-plane coordinates to disk coordinates, z = (zeta-i)/(zeta+i)."""
    zeta = np.asarray(zeta, dtype=complex)
    out = (zeta - 1j) / (zeta + 1j)
    return complex(out) if out.ndim == 0 else out


def cayley_to_halfplane(z):
    """Inverse Cayley map, zeta = i (1+z)/(1-z)."""
    z = np.asarray(z, dtype=complex)
    out = 1j * (1 + z) / (1 - z)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class HyperbolicPoint:
    """A point of the hyperbolic plane in one of the two supported models."""

    coordinate: complex
    model: str = MODEL_HALFPLANE

    def __post_init__(self):
        z = complex(self.coordinate)
        if self.model == MODEL_HALFPLANE:
            if not (math.isfinite(z.real) and math.isfinite(z.imag)) or z.imag <= _BOUNDARY_TOL:
                raise DomainError(f"not an interior half-plane point: {z}")
        elif self.model == MODEL_DISK:
            if not (math.isfinite(z.real) and math.isfinite(z.imag)) or abs(z) >= 1.0:
                raise DomainError(f"not an interior disk point: {z}")
        else:
            raise DomainError(f"unknown model tag: {self.model!r}")
        object.__setattr__(self, "coordinate", z)

    def to_halfplane(self) -> complex:
        if self.model == MODEL_HALFPLANE:
            return self.coordinate
        return cayley_to_halfplane(self.coordinate)

    def to_disk(self) -> complex:
        if self.model == MODEL_DISK:
            return self.coordinate
        return cayley_to_disk(self.coordinate)

    def in_model(self, model: str) -> "HyperbolicPoint":
        if model == self.model:
            return self
        if model == MODEL_HALFPLANE:
            return HyperbolicPoint(self.to_halfplane(), MODEL_HALFPLANE)
        return HyperbolicPoint(self.to_disk(), MODEL_DISK)


def halfplane_point(zeta) -> HyperbolicPoint:
    return HyperbolicPoint(complex(zeta), MODEL_HALFPLANE)


def disk_point(z) -> HyperbolicPoint:
    return HyperbolicPoint(complex(z), MODEL_DISK)


@dataclass(frozen=True)
class MagneticField:
    """Uniform magnetic field strength; theta = 0 gives trivial transport."""

    theta: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError("field strength must be finite")


def _theta_value(theta) -> float:
    if isinstance(theta, MagneticField):
        return theta.theta
    return float(theta)


@dataclass(frozen=True, eq=False)
class MoebiusMap:
    """Orientation-preserving isometry of the half-plane, det = 1.

    The matrix acts by zeta -> (a zeta + b) / (c zeta + d).  Construction
    normalizes an overall positive scale and rejects matrices that are not
    (projectively) in SL(2, R).
    """

    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=float)
        if m.shape != (2, 2):
            raise ValueError("expected a 2x2 real matrix")
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if det <= 0:
            raise ValueError("determinant must be positive (orientation preserving)")
        if abs(det - 1.0) > 1e-12:
            m = m / math.sqrt(det)
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(np.eye(2))

    @classmethod
    def from_entries(cls, a, b, c, d) -> "MoebiusMap":
        return cls(np.array([[a, b], [c, d]], dtype=float))

    @property
    def a(self) -> float:
        return float(self.mat[0, 0])

    @property
    def b(self) -> float:
        return float(self.mat[0, 1])

    @property
    def c(self) -> float:
        return float(self.mat[1, 0])

    @property
    def d(self) -> float:
        return float(self.mat[1, 1])

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap(self.mat @ other.mat)

    def inverse(self) -> "MoebiusMap":
        a, b, c, d = self.a, self.b, self.c, self.d
        return MoebiusMap(np.array([[d, -b], [-c, a]]))

    def trace(self) -> float:
        return self.a + self.d

    def __eq__(self, other):
        if not isinstance(other, MoebiusMap):
            return NotImplemented
        return projectively_close(self.mat, other.mat, tol=0.0)

    def __call__(self, point):
        return moebius_apply(self, point)


def projectively_close(m1: np.ndarray, m2: np.ndarray, tol: float = 1e-9) -> bool:
    """Whether two SL(2, R) matrices agree up to overall sign within tol."""
    return bool(
        np.max(np.abs(m1 - m2)) <= tol or np.max(np.abs(m1 + m2)) <= tol
    )


def _apply_halfplane(mat: np.ndarray, zeta):
    a, b, c, d = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    return (a * zeta + b) / (c * zeta + d)


def moebius_apply(g: MoebiusMap, point):
    """Apply an isometry to a point; the result stays in the input's model.

    Accepts a HyperbolicPoint or a bare complex number, which is then read
    as a half-plane coordinate.
    """
    if isinstance(point, HyperbolicPoint):
        zeta = point.to_halfplane()
        image = _apply_halfplane(g.mat, zeta)
        if point.model == MODEL_DISK:
            return HyperbolicPoint(cayley_to_disk(image), MODEL_DISK)
        return HyperbolicPoint(image, MODEL_HALFPLANE)
    return _apply_halfplane(g.mat, complex(point))


def apply_many(mats: np.ndarray, zeta) -> np.ndarray:
    """Vectorized half-plane action of a stack of matrices on one point."""
    a = mats[..., 0, 0]
    b = mats[..., 0, 1]
    c = mats[..., 1, 0]
    d = mats[..., 1, 1]
    return (a * zeta + b) / (c * zeta + d)


def _as_halfplane(p) -> complex:
    if isinstance(p, HyperbolicPoint):
        return p.to_halfplane()
    z = complex(p)
    if z.imag <= 0:
        raise DomainError(f"not an interior half-plane point: {z}")
    return z


def geodesic_distance(p, q) -> float:
    """Geodesic distance under curvature -1; mixed models are converted."""
    z = _as_halfplane(p)
    w = _as_halfplane(q)
    d2 = abs(z - w) ** 2
    arg = 1.0 + d2 / (2.0 * z.imag * w.imag)
    return math.acosh(max(arg, 1.0))


def _side_integrals(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Integral of dx/y along the directed geodesic side p -> q.

    On the semicircle of center c the antiderivative of dx/y is -t with
    t = atan2(y, x - c), so the side contributes t_p - t_q; vertical sides
    contribute zero.  The formula for c is antisymmetric under swapping
    p and q at the bit level, which makes degenerate configurations cancel
    exactly.
    """
    dx = p.real - q.real
    vertical = dx == 0.0
    dx_safe = np.where(vertical, 1.0, dx)
    c = (np.abs(p) ** 2 - np.abs(q) ** 2) / (2.0 * dx_safe)
    tp = np.arctan2(p.imag, p.real - c)
    tq = np.arctan2(q.imag, q.real - c)
    return np.where(vertical, 0.0, tp - tq)


def triangle_area_oriented_many(v: np.ndarray, w: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Oriented areas for arrays of half-plane vertex triples."""
    v = np.asarray(v, dtype=complex)
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return _side_integrals(v, w) + _side_integrals(w, z) + _side_integrals(z, v)


def triangle_area_oriented(v, w, z) -> float:
    """Oriented hyperbolic area of the geodesic triangle (v, w, z).

    The magnitude is the angle defect pi - (sum of interior angles), the
    sign is positive for counterclockwise vertex order, and degenerate
    triples give zero.  |area| < pi always.
    """
    zv = np.asarray(_as_halfplane(v), dtype=complex)
    zw = np.asarray(_as_halfplane(w), dtype=complex)
    zz = np.asarray(_as_halfplane(z), dtype=complex)
    return float(triangle_area_oriented_many(zv, zw, zz))


def parallel_transport_many(theta, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Vectorized transport phases for arrays of half-plane points."""
    t = _theta_value(theta)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    ang = np.angle(z - np.conj(w)) - np.angle(w - np.conj(z))
    return np.exp(1j * t * ang)


def parallel_transport(theta, z, w) -> complex:
    """Transport phase tau(z, w) = ((z - conj w)/(w - conj z))^theta.

    Unit modulus; tau(z, z) = 1; tau(z, w) = conj(tau(w, z)); theta = 0
    gives exactly 1.
    """
    zz = np.asarray(_as_halfplane(z), dtype=complex)
    zw = np.asarray(_as_halfplane(w), dtype=complex)
    return complex(parallel_transport_many(theta, zz, zw))


def holonomy_many(theta, v: np.ndarray, w: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorized triangle holonomies (product of three transport phases)."""
    tvz = parallel_transport_many(theta, v, z)
    tvw = parallel_transport_many(theta, v, w)
    twz = parallel_transport_many(theta, w, z)
    return tvw * twz / tvz


def holonomy(theta, v, w, z) -> complex:
    """Holonomy tau(v,z)^-1 tau(v,w) tau(w,z) = exp(i theta area(v,w,z))."""
    zv = np.asarray(_as_halfplane(v), dtype=complex)
    zw = np.asarray(_as_halfplane(w), dtype=complex)
    zz = np.asarray(_as_halfplane(z), dtype=complex)
    return complex(holonomy_many(theta, zv, zw, zz))


# ---------------------------------------------------------------------------
# SU(1, 1) forms.  Disk-model isometries are matrices [[alpha, beta],
# [conj beta, conj alpha]] with |alpha|^2 - |beta|^2 = 1; the conversion
# below is the Cayley conjugation written out in closed form.

def su11_to_sl2r(alpha: complex, beta: complex) -> MoebiusMap:
    """Half-plane form of the disk isometry z -> (alpha z + beta)/(conj(beta) z + conj(alpha))."""
    a1, a2 = alpha.real, alpha.imag
    b1, b2 = beta.real, beta.imag
    m = np.array([[a1 + b1, a2 - b2], [-(a2 + b2), a1 - b1]])
    return MoebiusMap(m)


def sl2r_to_su11(g: MoebiusMap) -> tuple[complex, complex]:
    """Disk-model (alpha, beta) parameters of a half-plane isometry."""
    a, b, c, d = g.a, g.b, g.c, g.d
    alpha = complex((a + d) / 2.0, (b - c) / 2.0)
    beta = complex((a - d) / 2.0, -(b + c) / 2.0)
    return alpha, beta


def disk_translation(p: complex) -> tuple[complex, complex]:
    """SU(1,1) parameters of the disk isometry sending p to the origin."""
    s = 1.0 / math.sqrt(1.0 - abs(p) ** 2)
    return complex(s), complex(-p * s)


def disk_rotation(phi: float) -> tuple[complex, complex]:
    """SU(1,1) parameters of the rotation z -> exp(i phi) z about the origin."""
    return complex(math.cos(phi / 2.0), math.sin(phi / 2.0)), 0j


def su11_compose(g1: tuple[complex, complex], g2: tuple[complex, complex]) -> tuple[complex, complex]:
    a1, b1 = g1
    a2, b2 = g2
    return (a1 * a2 + b1 * np.conj(b2), a1 * b2 + b1 * np.conj(a2))


def su11_inverse(g: tuple[complex, complex]) -> tuple[complex, complex]:
    a, b = g
    return (np.conj(a), -b)


def su11_apply(g: tuple[complex, complex], z: complex) -> complex:
    a, b = g
    return (a * z + b) / (np.conj(b) * z + np.conj(a))
