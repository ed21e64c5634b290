"""Half-plane geometry: areas, transport phases, model maps.

The area oracle is the angle defect pi - (alpha + beta + gamma), computed
from geodesic tangent directions at each vertex.  It shares no code with
the boundary-integral implementation.
"""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperhall.hypgeom import (
    DomainError,
    apply_many,
    cayley_to_disk,
    cayley_to_halfplane,
    disk_point,
    disk_rotation,
    disk_translation,
    geodesic_distance,
    halfplane_point,
    holonomy,
    holonomy_many,
    moebius_apply,
    parallel_transport,
    su11_apply,
    su11_compose,
    su11_inverse,
    su11_to_sl2r,
    triangle_area_oriented,
    triangle_area_oriented_many,
)

RNG = np.random.default_rng(20260816)


def random_halfplane(n, spread=2.0, rng=RNG):
    x = rng.uniform(-spread, spread, n)
    y = np.exp(rng.uniform(-1.5, 1.2, n))
    return x + 1j * y


def _tangent_toward(p: complex, q: complex) -> complex:
    """Unit tangent at p of the geodesic from p to q (half-plane)."""
    if abs(p.real - q.real) < 1e-13 * (1 + abs(p) + abs(q)):
        t = 1j
        return t if q.imag > p.imag else -t
    c = (abs(p) ** 2 - abs(q) ** 2) / (2.0 * (p.real - q.real))
    phi_p = math.atan2(p.imag, p.real - c)
    phi_q = math.atan2(q.imag, q.real - c)
    t = cmath.exp(1j * (phi_p + 0.5 * math.pi))
    return t if phi_q > phi_p else -t


def angle_defect_area(v: complex, w: complex, z: complex) -> float:
    """Unsigned area oracle: pi minus the sum of interior angles."""
    total = 0.0
    for a, b, c in ((v, w, z), (w, z, v), (z, v, w)):
        t1 = _tangent_toward(a, b)
        t2 = _tangent_toward(a, c)
        cosang = max(-1.0, min(1.0, (t1 * t2.conjugate()).real))
        total += math.acos(cosang)
    return math.pi - total


def test_area_matches_angle_defect_oracle():
    v, w, z = (random_halfplane(300) for _ in range(3))
    got = np.abs(triangle_area_oriented_many(v, w, z))
    want = np.array([angle_defect_area(a, b, c) for a, b, c in zip(v, w, z)])
    assert np.max(np.abs(got - want)) < 1e-9


def test_area_antisymmetric_under_swap():
    v, w, z = 0.3 + 1.1j, -0.7 + 0.4j, 1.9 + 2.5j
    assert triangle_area_oriented(v, w, z) == pytest.approx(
        -triangle_area_oriented(w, v, z), abs=1e-14
    )


def test_small_triangle_orientation_is_euclidean():
    # near-degenerate scale: geodesics are straight to first order, so the
    # oriented sign must agree with the euclidean cross product
    base = 0.5 + 1.0j
    for _ in range(50):
        d1, d2 = 1e-3 * (RNG.standard_normal(2) + 1j * RNG.standard_normal(2))
        cross = (d1.conjugate() * d2).imag
        if abs(cross) < 1e-9:
            continue
        area = triangle_area_oriented(base, base + d1, base + d2)
        assert math.copysign(1.0, area) == math.copysign(1.0, cross)


def test_triangle_area_bounded_by_pi():
    v, w, z = (random_halfplane(500, spread=40.0) for _ in range(3))
    assert np.max(np.abs(triangle_area_oriented_many(v, w, z))) < math.pi


def test_holonomy_equals_area_phase():
    v, w, z = (random_halfplane(250) for _ in range(3))
    area = triangle_area_oriented_many(v, w, z)
    for theta in (0.3, 1.0, 3.0, 7.5):
        got = holonomy_many(theta, v, w, z)
        assert np.max(np.abs(got - np.exp(1j * theta * area))) < 1e-8


def test_transport_unit_modulus():
    z, w = random_halfplane(200), random_halfplane(200)
    vals = np.array([parallel_transport(2.2, a, b) for a, b in zip(z, w)])
    assert np.max(np.abs(np.abs(vals) - 1.0)) < 1e-12


def test_four_point_identity():
    # transport factors telescope, so the identity holds to rounding
    theta = 1.7
    for _ in range(100):
        v, w, z, y = random_halfplane(4)
        lhs = holonomy(theta, v, w, z) * holonomy(theta, v, z, y)
        rhs = holonomy(theta, v, w, y) * holonomy(theta, w, z, y)
        assert abs(lhs - rhs) < 1e-9


def test_area_moebius_invariant():
    v, w, z = (random_halfplane(50) for _ in range(3))
    base = triangle_area_oriented_many(v, w, z)
    for _ in range(20):
        phi = RNG.uniform(0, 2 * math.pi)
        p = RNG.uniform(0, 0.9) * cmath.exp(1j * RNG.uniform(0, 2 * math.pi))
        g = su11_to_sl2r(*su11_compose(disk_rotation(phi), disk_translation(p)))
        gv = apply_many(np.broadcast_to(g.mat, (50, 2, 2)), v)
        gw = apply_many(np.broadcast_to(g.mat, (50, 2, 2)), w)
        gz = apply_many(np.broadcast_to(g.mat, (50, 2, 2)), z)
        moved = triangle_area_oriented_many(gv, gw, gz)
        assert np.max(np.abs(moved - base)) < 1e-9


def test_geodesic_distance_symmetric_invariant():
    p, q = 0.4 + 0.8j, -1.0 + 2.0j
    d = geodesic_distance(p, q)
    assert d == pytest.approx(geodesic_distance(q, p), rel=1e-12)
    g = su11_to_sl2r(*disk_translation(0.3 - 0.5j))
    assert geodesic_distance(
        moebius_apply(g, halfplane_point(p)), moebius_apply(g, halfplane_point(q))
    ) == pytest.approx(d, rel=1e-10)


def test_domain_validation():
    with pytest.raises(DomainError):
        halfplane_point(1.0 - 0.5j)
    with pytest.raises(DomainError):
        disk_point(1.2 + 0.1j)


finite_disk = st.complex_numbers(max_magnitude=0.97, allow_nan=False,
                                 allow_infinity=False)


@settings(max_examples=80, deadline=None)
@given(z=finite_disk)
def test_cayley_round_trip(z):
    zeta = cayley_to_halfplane(z)
    assert zeta.imag > 0
    assert abs(cayley_to_disk(zeta) - z) < 1e-10


@settings(max_examples=80, deadline=None)
@given(p=st.complex_numbers(max_magnitude=0.9, allow_nan=False,
                            allow_infinity=False),
       phi=st.floats(0, 2 * math.pi),
       z=finite_disk)
def test_su11_compose_inverse(p, phi, z):
    g = su11_compose(disk_rotation(phi), disk_translation(p))
    gi = su11_inverse(g)
    back = su11_apply(gi, su11_apply(g, z))
    assert abs(back - z) < 1e-8
    assert abs(su11_apply(disk_translation(p), p)) < 1e-12
