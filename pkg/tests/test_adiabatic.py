"""Driven-projection evolution, the contour commutator solution, and the
projector identities behind the conductance formula.

The eigenbasis construction of X is the oracle for the contour integral:
both must land on the same matrix although they never share code.
"""

import math

import numpy as np
import pytest

from hyperhall.adiabatic import (
    ContourResolutionError,
    GapClosedError,
    StepRefinementError,
    TimeFamily,
    avoided_crossing,
    berry_sphere_chern,
    commutator_residual,
    constant_family,
    contour_X,
    dP_ds,
    derivative_order,
    eigenbasis_X,
    equation_of_motion_residual,
    evolve_adiabatic,
    evolve_physical,
    intertwining_defect,
    kubo_identities,
    projector_tangent,
    qat_bound_check,
    random_projector,
    truncated_harper_family,
)
from hyperhall.fuchsian import Multiplier


@pytest.fixture(scope="module")
def two_level():
    return avoided_crossing(0.2)


@pytest.fixture(scope="module")
def harper_family(g2):
    return truncated_harper_family(
        lambda t: Multiplier(t, g2), radius=2, theta0=0.1, dtheta=0.3, fermi=0.8
    )


def test_two_level_family_validates(two_level):
    two_level.validate()
    gap = min(
        float(v[1] - v[0])
        for v in (two_level.eigensystem(s)[0] for s in np.linspace(0, 1, 101))
    )
    assert gap == pytest.approx(0.4, abs=1e-2)


def test_harper_family_validates(harper_family):
    harper_family.validate()
    assert harper_family.dimension == 65
    vals = harper_family.eigensystem(0.5)[0]
    below = vals[vals < 0.8].max()
    above = vals[vals > 0.8].min()
    assert above - below > 1.0  # protecting gap stays wide open


def test_projection_is_projection(two_level):
    P = two_level.projection(0.3)
    assert np.max(np.abs(P @ P - P)) < 1e-13
    assert round(np.trace(P).real) == 1


def test_gap_closed_raises():
    crossing = TimeFamily(
        2,
        lambda s: np.array([[s - 0.5, 0.0], [0.0, 0.5 - s]], dtype=complex),
        0.0,
        label="hard crossing",
    )
    with pytest.raises(GapClosedError):
        crossing.projection(0.5)
    with pytest.raises(GapClosedError):
        # 65 grid points place a sample exactly on the crossing
        crossing.validate(grid_points=65)


def test_projection_derivative_second_order(two_level):
    assert derivative_order(two_level) > 1.5


def test_evolution_unitary(two_level):
    res = evolve_physical(two_level, 5.0, 400)
    assert res.unitarity_defect < 1e-10
    U = res.unitaries[-1]
    assert np.max(np.abs(U @ U.conj().T - np.eye(2))) < 1e-10


def test_equation_of_motion_second_order(two_level):
    r1 = equation_of_motion_residual(two_level, 30.0, 0.37, h=2e-3)
    r2 = equation_of_motion_residual(two_level, 30.0, 0.37, h=1e-3)
    assert r1 / r2 == pytest.approx(4.0, rel=0.3)


def test_contour_matches_eigenbasis_two_level(two_level):
    X = contour_X(two_level, 0.3)
    Xe = eigenbasis_X(two_level, 0.3)
    assert np.linalg.norm(X - Xe, 2) < 1e-10
    assert commutator_residual(two_level, 0.3, X) < 1e-10


def test_contour_matches_eigenbasis_harper(harper_family):
    X = contour_X(harper_family, 0.5)
    Xe = eigenbasis_X(harper_family, 0.5)
    assert np.linalg.norm(X - Xe, 2) < 1e-8


def test_contour_undersampling_raises(two_level):
    with pytest.raises(ContourResolutionError):
        contour_X(two_level, 0.3, nodes=2, certify=True)


def test_adiabatic_intertwines_projections(two_level):
    res = evolve_adiabatic(two_level, 20.0, 2000)
    assert intertwining_defect(two_level, res) < 1e-4


def test_step_refinement_guard(two_level):
    with pytest.raises(StepRefinementError):
        evolve_adiabatic(two_level, 40.0, 400, certify=True)


def test_qat_bound_two_level(two_level):
    rep = qat_bound_check(two_level, [20.0, 40.0, 80.0, 160.0])
    assert rep["all_bounds_hold"]
    for r in rep["lhs_ratios"]:
        assert 0.3 < r < 0.7
    assert rep["scaled_top3_spread"] < 3.0


def test_constant_family_is_static(two_level):
    H = np.diag([-1.0, 1.0]).astype(complex)
    fam = constant_family(H, 0.0)
    fam.validate()
    assert np.max(np.abs(dP_ds(fam, 0.5))) < 1e-9
    res = evolve_physical(fam, 10.0, 200)
    assert intertwining_defect(fam, res) < 1e-10


def test_kubo_identities_exact():
    rng = np.random.default_rng(5)
    n, tau = 24, 37.0
    P = random_projector(n, 7, seed=5)
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = M + M.conj().T
    dP_j = projector_tangent(P, rng.standard_normal((n, n)))
    dP_k = projector_tangent(P, rng.standard_normal((n, n)))
    dP_t = projector_tangent(P, rng.standard_normal((n, n)))
    H_a = H + (1j / tau) * (dP_t @ P - P @ dP_t)
    rep = kubo_identities(P, dP_j, dP_k, H, H_a, dP_t / tau)
    assert rep["pinch_defect"] < 1e-12
    assert rep["double_commutator_defect"] < 1e-12
    assert rep["imag_part"] < 1e-12
    assert rep["antisymmetry_defect"] < 1e-12
    assert rep["lemma_exact_residual"] < 1e-12
    assert abs(rep["discarded_term"]) > 0


def test_berry_sphere_quadrature():
    rep = berry_sphere_chern()
    assert abs(rep["integral"] - 2.0 * math.pi) < 1e-6
    assert rep["chern"] == 1
