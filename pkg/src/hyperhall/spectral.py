"""Spectra of magnetic operators: closed form, continuum mesh, Cayley ball.

Three pictures of the same Hamiltonian family live here.  The closed
form is the Landau-level spectrum on the hyperbolic plane at field
strength theta: eigenvalues (2k+1) theta - k(k+1) for integer
k < theta - 1/2 below a continuum starting at 1/4 + theta^2.  Those
numbers are the spectrum of the full (unhalved) magnetic Laplacian;
the radial oracle below resolves that normalization independently, and
everything in this module uses it.

The continuum check discretizes the disk model.  In two dimensions the
magnetic Dirichlet form is conformally invariant, so the stiffness
matrix is the flat five-point form with Peierls link phases from the
gauge field 2 theta (x dy - y dx)/(1 - |z|^2), and the metric enters
only through the diagonal mass matrix 4 h^2/(1-|z|^2)^2.

The discrete picture is a Harper-type operator on a ball of a surface
group: sum of multiplier-twisted generator hops plus an optional vertex
potential, optionally drawn from the explicit sphere-indexed disorder
family g_{lambda,w}(z) = lambda (1-|z|^2)/|w-z|^2.  Spectral projections
at a gap feed the conductance pairings (the Kubo cocycle and the
area-weighted cocycle of the twisted algebra).
"""

from __future__ import annotations

import cmath
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from .fuchsian import GroupBall, GroupElement, Multiplier
from .hypgeom import cayley_to_disk, sl2r_to_su11
from .twisted_algebra import TwistedKernel, tau_K, tau_chern


class GapError(RuntimeError):
    """Fermi level does not sit strictly inside a spectral gap."""


class RefinementError(RuntimeError):
    """Mesh or grid refinement check failed."""


# -- closed form -----------------------------------------------------------


def comtet_levels(theta: float) -> tuple[list[float], float]:
    """Discrete Landau levels and continuum edge at field strength theta.

    Levels (2k+1) theta - k(k+1) for k = 0, 1, ... while k < theta - 1/2;
    continuum edge 1/4 + theta^2.  These are eigenvalues of the unhalved
    magnetic Laplacian (see radial_ode_levels for the resolution).
    """
    levels = []
    k = 0
    while k < theta - 0.5:
        levels.append((2 * k + 1) * theta - k * (k + 1))
        k += 1
    return levels, 0.25 + theta * theta


def radial_ode_levels(theta: float, r_max: float = 14.0, n: int = 6000,
                      count: int = 6) -> np.ndarray:
    """Low eigenvalues of the zero-angular-momentum radial problem.

    In geodesic polar coordinates the m = 0 sector of the magnetic
    Laplacian is the Sturm-Liouville problem
        -(sinh r f')' + theta^2 tanh(r/2)^2 sinh r f = E sinh r f
    on (0, r_max) with a natural boundary at 0 (the weight sinh r
    vanishes) and Dirichlet at r_max.  Cell-centered finite volumes give
    a symmetric tridiagonal pencil; this is the normalization oracle for
    the closed-form levels.
    """
    h = r_max / n
    edges = np.sinh(h * np.arange(n + 1))
    centers = h * (np.arange(n) + 0.5)
    w = np.sinh(centers)
    q = theta**2 * np.tanh(centers / 2.0) ** 2 * w
    diag = (edges[:-1] + edges[1:]) / h**2 + q
    off = -edges[1:-1] / h**2
    sw = np.sqrt(w)
    d = diag / w
    e = off / (sw[:-1] * sw[1:])
    vals = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))[0]
    return vals


# -- continuum finite differences ------------------------------------------


def _disk_mesh_operator(theta: float, r_dom: float, n: int):
    """Stiffness and mass matrices of the magnetic form on a disk mesh."""
    rho_max = math.tanh(r_dom / 2.0)
    h = 2.0 * rho_max / n
    c = -rho_max + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(c, c, indexing="ij")
    inside = X**2 + Y**2 < rho_max**2
    idx = -np.ones((n, n), dtype=np.int64)
    idx[inside] = np.arange(int(inside.sum()))
    m = int(inside.sum())

    rows, cols, vals = [], [], []

    def gauge(x, y):
        return 2.0 * theta / (1.0 - (x**2 + y**2))

    # horizontal links: phase = -y h * gauge(midpoint)
    a = inside[:-1, :] & inside[1:, :]
    ia, ja = idx[:-1, :][a], idx[1:, :][a]
    phase = -Y[:-1, :][a] * h * gauge(X[:-1, :][a] + h / 2.0, Y[:-1, :][a])
    rows.append(ia); cols.append(ja); vals.append(-np.exp(1j * phase))
    rows.append(ja); cols.append(ia); vals.append(-np.exp(-1j * phase))

    # vertical links: phase = +x h * gauge(midpoint)
    b = inside[:, :-1] & inside[:, 1:]
    ib, jb = idx[:, :-1][b], idx[:, 1:][b]
    phase = X[:, :-1][b] * h * gauge(X[:, :-1][b], Y[:, :-1][b] + h / 2.0)
    rows.append(ib); cols.append(jb); vals.append(-np.exp(1j * phase))
    rows.append(jb); cols.append(ib); vals.append(-np.exp(-1j * phase))

    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m, m),
    ).tocsr()
    # Dirichlet: full degree 4 regardless of dropped neighbors
    A = A + sp.identity(m, format="csr") * 4.0
    mass = 4.0 * h**2 / (1.0 - (X[inside] ** 2 + Y[inside] ** 2)) ** 2
    return A, mass


def fd_landau_levels(theta: float, r_dom: float = 4.0, n: int = 161,
                     count: int = 6) -> np.ndarray:
    """Lowest levels of the discretized continuum magnetic Laplacian."""
    A, mass = _disk_mesh_operator(theta, r_dom, n)
    s = 1.0 / np.sqrt(mass)
    B = sp.diags(s) @ A @ sp.diags(s)
    B = (B + B.getH()) * 0.5
    # the lowest level is a near-degenerate cluster; asking ARPACK for
    # fewer than ~4 vectors out of it stalls the restarts badly
    k = max(count, 6)
    vals = eigsh(B, k=k, sigma=0, which="LM", return_eigenvectors=False)
    return np.sort(vals.real)[:count]


def continuum_fd_solve(theta: float, r_dom: float = 4.0, n: int = 161,
                       count: int = 6, refine_tol: float = 0.01):
    """Continuum levels with a mesh-doubling certificate.

    Solves at n and at 2n+1 mesh cells; raises RefinementError when the
    reported levels move by more than refine_tol relatively.  Returns
    (levels at the fine mesh, report dict).
    """
    coarse = fd_landau_levels(theta, r_dom, n, count)
    fine = fd_landau_levels(theta, r_dom, 2 * n + 1, count)
    rel = np.abs(fine - coarse) / np.maximum(np.abs(fine), 1e-12)
    report = {
        "theta": theta,
        "r_dom": r_dom,
        "mesh": n,
        "mesh_fine": 2 * n + 1,
        "levels_coarse": coarse.tolist(),
        "levels": fine.tolist(),
        "refinement_rel_change": rel.tolist(),
        "refine_tol": refine_tol,
    }
    if np.any(rel > refine_tol):
        raise RefinementError(
            f"levels moved by up to {rel.max():.3%} under mesh doubling; "
            f"tolerance {refine_tol:.3%}"
        )
    return fine, report


# -- Harper operators on Cayley balls --------------------------------------


@dataclass(frozen=True, eq=False)
class SparseHamiltonian:
    """Hermitian sparse operator over an explicit basis."""

    matrix: sp.csr_matrix
    basis: object
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.getH()
        return float(np.abs(d.data).max()) if d.nnz else 0.0

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def harper_build(multiplier: Multiplier, radius: int,
                 potential: Optional[np.ndarray] = None) -> SparseHamiltonian:
    """Twisted hop operator: H = sum over generators of (T + T^*) + diag(V).

    T hops to the right-multiplied neighbor with amplitude
    sigma(x, generator); hops leaving the ball are dropped (Dirichlet
    truncation), which preserves Hermiticity.
    """
    pres = multiplier.presentation
    ball = pres.ball(radius)
    n = len(ball)
    rows, cols, vals = [], [], []
    I = np.arange(n)
    for j in range(1, 2 * pres.genus + 1):
        gen_idx = ball.index_of(pres.generator(j))
        J = np.full(n, gen_idx)
        K = ball.product_index(I, J, cache=False)
        ok = K >= 0
        amp = multiplier.sigma_many(ball, I[ok], J[ok])
        rows.append(I[ok]); cols.append(K[ok]); vals.append(amp)
        rows.append(K[ok]); cols.append(I[ok]); vals.append(np.conj(amp))
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    desc = "none"
    if potential is not None:
        potential = np.asarray(potential, dtype=float)
        if potential.shape != (n,):
            raise ValueError("potential must be one value per ball element")
        H = H + sp.diags(potential.astype(complex))
        desc = "vertex"
    return SparseHamiltonian(
        H, ball, {"theta": multiplier.theta_value, "radius": radius,
                  "potential": desc},
    )


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    ldos: Optional[np.ndarray]
    residual: float


_DENSE_LIMIT = 4000


def spectrum(H: SparseHamiltonian, k: Optional[int] = None,
             with_vectors: bool = False):
    """Sorted eigenvalues with identity-vertex local DOS weights.

    Dense solve below dimension 4000 (full spectrum), Lanczos above
    (k lowest); every reported pair is residual-checked at 1e-8.
    """
    n = H.dim
    if n <= _DENSE_LIMIT:
        dense = H.dense()
        vals, vecs = np.linalg.eigh(dense)
        if k is not None:
            vals, vecs = vals[:k], vecs[:, :k]
        resid = float(np.max(np.abs(dense @ vecs - vecs * vals)))
    else:
        if k is None:
            raise ValueError("iterative solve needs an eigenvalue count k")
        vals, vecs = eigsh(H.matrix, k=k, which="SA")
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        resid = float(
            max(
                np.linalg.norm(H.matrix @ vecs[:, i] - vals[i] * vecs[:, i])
                for i in range(len(vals))
            )
        )
    if resid > 1e-8:
        raise RuntimeError(f"eigenpair residual {resid:.3e} exceeds 1e-8")
    ldos = np.abs(vecs[0, :]) ** 2
    result = SpectrumResult(vals, ldos, resid)
    return (result, vecs) if with_vectors else result


def butterfly_sweep(multiplier_for, theta_grid, radius: int,
                    potential: Optional[np.ndarray] = None) -> list[tuple]:
    """Eigenvalue table over a field-strength grid.

    multiplier_for maps theta to a Multiplier (sharing one presentation).
    Returns rows (theta, index, eigenvalue, radius), grid order; dense
    solves only, so radius is practically <= 4 for genus 2.
    """
    rows = []
    for theta in theta_grid:
        H = harper_build(multiplier_for(float(theta)), radius, potential)
        vals = np.linalg.eigvalsh(H.dense())
        rows.extend(
            (float(theta), i, float(v), radius) for i, v in enumerate(vals)
        )
    return rows


# -- disorder ----------------------------------------------------------------


@dataclass(frozen=True)
class DisorderPoint:
    """Sphere-indexed potential parameters (lambda, w), |w| = 1."""

    lam: float
    w: complex

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if abs(abs(self.w) - 1.0) > 1e-9:
            raise ValueError("w must lie on the unit circle")
        object.__setattr__(self, "w", self.w / abs(self.w))


def disorder_potential(point: DisorderPoint, disk_points) -> np.ndarray:
    """g_{lambda,w}(z) = lambda (1 - |z|^2) / |w - z|^2 at disk points."""
    z = np.asarray(disk_points, dtype=complex)
    dist2 = np.abs(point.w - z) ** 2
    if np.any(dist2 < 1e-24):
        warnings.warn("potential singular: w collides with a vertex")
    return point.lam * (1.0 - np.abs(z) ** 2) / dist2


def transform_disorder(point: DisorderPoint, gamma: GroupElement) -> DisorderPoint:
    """Action on the parameter sphere matching g(gamma^-1 z) = g'(z).

    With gamma as an SU(1,1) pair (alpha, beta), the scale picks up
    lambda_{gamma,w} = |conj(beta) w + conj(alpha)|^-2 and w moves by the
    Moebius action.
    """
    alpha, beta = sl2r_to_su11(gamma.matrix)
    scale = 1.0 / abs(np.conj(beta) * point.w + np.conj(alpha)) ** 2
    w_new = (alpha * point.w + beta) / (np.conj(beta) * point.w + np.conj(alpha))
    return DisorderPoint(point.lam * scale, w_new)


def disorder_covariance_residual(point: DisorderPoint, ball: GroupBall,
                                 samples: int = 500, seed: int = 0) -> float:
    """Max defect of the equivariance law over random group elements and z.

    The defect is scaled by max(1, |g|): the potential is unbounded near
    its singular direction, so an absolute defect would only measure how
    close the draw came to the pole.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    pres = ball.presentation
    for _ in range(samples):
        i = int(rng.integers(1, len(ball)))
        gamma = ball.elements[i]
        z = (rng.uniform(0, 0.9) * cmath.exp(2j * math.pi * rng.uniform()))
        ginv = pres.inverse(gamma)
        alpha, beta = sl2r_to_su11(ginv.matrix)
        z_moved = (alpha * z + beta) / (np.conj(beta) * z + np.conj(alpha))
        lhs = disorder_potential(point, [z_moved])[0]
        rhs = disorder_potential(transform_disorder(point, gamma), [z])[0]
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst


def ball_disorder_potential(point: DisorderPoint, ball: GroupBall) -> np.ndarray:
    """Disorder potential sampled on the disk orbit of the ball."""
    return disorder_potential(point, cayley_to_disk(ball.orbit))


# -- projections and conductance --------------------------------------------


@dataclass(frozen=True)
class SpectralProjection:
    matrix: np.ndarray
    fermi_level: float
    gap: tuple[float, float]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def idempotency_defect(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix - self.matrix)))


def spectral_projection(H: SparseHamiltonian, fermi: float) -> SpectralProjection:
    """Projection below a Fermi level strictly inside a spectral gap."""
    if H.dim > _DENSE_LIMIT:
        raise ValueError("dense projection limited to dimension 4000")
    dense = H.dense()
    vals, vecs = np.linalg.eigh(dense)
    below = vals[vals < fermi]
    above = vals[vals > fermi]
    if below.size == 0 or above.size == 0:
        raise GapError(f"fermi level {fermi} outside the spectral range")
    lo, hi = float(below.max()), float(above.min())
    resid_scale = np.finfo(float).eps * np.abs(vals).max() * H.dim
    if hi - lo <= 10 * max(resid_scale, 1e-12):
        raise GapError(
            f"no gap at fermi={fermi}: nearest levels {lo:.6f}, {hi:.6f}"
        )
    occ = vecs[:, vals < fermi]
    P = occ @ occ.conj().T
    return SpectralProjection(P, fermi, (lo, hi))


def projection_kernel(P: SpectralProjection, multiplier: Multiplier,
                      ball: GroupBall) -> TwistedKernel:
    """Central-column kernel A(gamma) = <identity vertex| P |gamma vertex>."""
    if P.matrix.shape[0] != len(ball):
        raise ValueError("projection basis does not match the ball")
    return TwistedKernel(multiplier, ball, P.matrix[0, :].copy())


def kernel_decay_fit(A: TwistedKernel, floor: float = 1e-14) -> dict:
    """Linear fit of log |A| against word length; gap kernels decay."""
    mags = np.abs(A.values)
    keep = mags > floor
    x = A.ball.lengths[keep].astype(float)
    y = np.log(mags[keep])
    if x.size < 3 or np.ptp(x) == 0:
        return {"rate": 0.0, "r2": 0.0, "count": int(x.size)}
    coef = np.polyfit(x, y, 1)
    pred = np.polyval(coef, x)
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return {
        "rate": float(-coef[0]),
        "intercept": float(coef[1]),
        "r2": 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0,
        "count": int(x.size),
    }


def conductance_pairing(A: TwistedKernel) -> dict:
    """Kubo and area-cocycle pairings of a projection kernel with itself."""
    vk = tau_K(A, A, A)
    vc = tau_chern(A, A, A)
    g = A.ball.presentation.genus
    step = 2 * (g - 1)
    nearest = step * round(vc.real / step) if step else 0.0
    return {
        "tau_K_real": vk.real,
        "tau_K_imag": vk.imag,
        "tau_chern_real": vc.real,
        "tau_chern_imag": vc.imag,
        "nearest_lattice_value": float(nearest),
        "lattice_distance": abs(vc.real - nearest),
    }


def conductance_study(multiplier_for, theta: float, fermi: float,
                      radii, potential_for=None) -> dict:
    """Pairings across truncation radii, with gap data and decay fit.

    multiplier_for(theta) supplies the Multiplier; potential_for(ball),
    when given, supplies the vertex potential per radius.
    """
    t_start = time.perf_counter()
    radii = list(radii)
    per_radius = []
    kernels = {}
    for R in radii:
        mult = multiplier_for(theta)
        ball = mult.presentation.ball(R)
        V = potential_for(ball) if potential_for is not None else None
        H = harper_build(mult, R, V)
        P = spectral_projection(H, fermi)
        A = projection_kernel(P, mult, ball)
        kernels[R] = A
        entry = {
            "radius": R,
            "dim": H.dim,
            "gap": list(P.gap),
            "rank": P.rank,
            "idempotency_defect": P.idempotency_defect(),
        }
        entry.update(conductance_pairing(A))
        per_radius.append(entry)
    increments = [
        abs(b["tau_chern_real"] - a["tau_chern_real"])
        for a, b in zip(per_radius, per_radius[1:])
    ]
    return {
        "theta": theta,
        "fermi": fermi,
        "radii": radii,
        "per_radius": per_radius,
        "increments": increments,
        "increments_decreasing": all(
            b < a for a, b in zip(increments, increments[1:])
        ),
        "decay_fit": kernel_decay_fit(kernels[max(radii)]),
        "runtime_seconds": time.perf_counter() - t_start,
    }


def ldos_stability(multiplier, radii, grid=None,
                   potential_for=None) -> dict:
    """Sup-norm drift of the cumulative local DOS across radii."""
    radii = list(radii)
    curves = {}
    vals_all = []
    for R in radii:
        ball = multiplier.presentation.ball(R)
        V = potential_for(ball) if potential_for is not None else None
        H = harper_build(multiplier, R, V)
        res = spectrum(H)
        curves[R] = res
        vals_all.append(res.eigenvalues)
    if grid is None:
        lo = min(v.min() for v in vals_all)
        hi = max(v.max() for v in vals_all)
        grid = np.linspace(lo - 0.1, hi + 0.1, 512)
    cums = {
        R: np.array([res.ldos[res.eigenvalues <= e].sum() for e in grid])
        for R, res in curves.items()
    }
    drifts = [
        float(np.max(np.abs(cums[b] - cums[a])))
        for a, b in zip(radii, radii[1:])
    ]
    return {"radii": radii, "drifts": drifts, "grid_points": len(grid)}
