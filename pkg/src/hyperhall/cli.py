"""Command-line verification suites and spectral studies.

Every subcommand resolves a configuration (JSON file plus flag
overrides), validates it before any work starts, runs one study, and
writes a JSON summary plus CSV tables into the output directory.  The
summary lists each invariant with its measured value and pass/fail
state; the process exits nonzero when any invariant fails.

Outputs are deterministic: identical configuration and seed produce
byte-identical files.  Wall-clock timings therefore go to stderr, never
into artifacts.

Exit codes: 0 all invariants pass, 1 invariant failure, 2 configuration
or schema violation, 3 resource budget exceeded, 4 Fermi level not in a
spectral gap.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .adiabatic import (
    avoided_crossing,
    berry_sphere_chern,
    contour_X,
    eigenbasis_X,
    evolve_adiabatic,
    intertwining_defect,
    kubo_identities,
    projector_tangent,
    qat_bound_check,
    dP_ds,
    adiabatic_hamiltonian,
    truncated_harper_family,
)
from .fuchsian import (
    BudgetError,
    Multiplier,
    build_genus_g_group,
    ball_sizes_oracle,
    sigma_cocycle_residual,
)
from .hypgeom import (
    MoebiusMap,
    disk_rotation,
    disk_translation,
    holonomy,
    holonomy_many,
    su11_compose,
    su11_to_sl2r,
    triangle_area_oriented,
    triangle_area_oriented_many,
)
from .jacobi import coboundary_report, kappa, pairing_report
from .spectral import (
    DisorderPoint,
    GapError,
    RefinementError,
    ball_disorder_potential,
    butterfly_sweep,
    comtet_levels,
    conductance_study,
    continuum_fd_solve,
    disorder_covariance_residual,
    harper_build,
    radial_ode_levels,
    spectrum,
)
from .twisted_algebra import (
    TwistedKernel,
    bridge_report,
    chern_self_consistency,
    cyclic_cjk,
    hochschild_b,
    tau_K,
    tau_K_oracle,
    tau_chern,
    trace,
    convolve,
    star,
)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_SCHEMA = 2
EXIT_RESOURCE = 3
EXIT_GAP = 4


class SchemaError(ValueError):
    """Configuration fails validation before any work starts."""


# -- configuration -----------------------------------------------------------

_COMMON_KEYS = {"seed", "workers", "out", "genus", "theta", "radius", "fermi"}

_COMMAND_KEYS = {
    "geom-check": {"triangles", "theta_set"},
    "group-check": {"genus_set", "sigma_theta_set", "oracle_radius"},
    "pairing": set(),
    "coboundary": set(),
    "algebra-check": {"support_radius", "ball_radius"},
    "butterfly": {"theta_grid", "disorder"},
    "spectrum": {"disorder", "eig_count"},
    "comtet-compare": {"count", "ode_r_max", "ode_n", "fd_r_dom", "fd_mesh"},
    "conductance": {"radii", "disorder"},
    "adiabatic": {"tau_list", "qat_steps_scale", "delta", "theta0", "dtheta",
                  "harper_radius"},
}

_DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "out": "out",
    "genus": 2,
    "radius": 3,
    "theta": 1.0,
    "fermi": 0.8,
}


def _as_float(name, v):
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise SchemaError(f"{name} must be a number, got {v!r}")
    if not math.isfinite(x):
        raise SchemaError(f"{name} must be finite")
    return x


def _as_int(name, v, lo, hi):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{name} must be an integer, got {v!r}")
    if not lo <= v <= hi:
        raise SchemaError(f"{name} must lie in [{lo}, {hi}], got {v}")
    return v


def resolve_config(command: str, args) -> dict:
    cfg = dict(_DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise SchemaError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config is not valid JSON: {exc}")
        if not isinstance(loaded, dict):
            raise SchemaError("config root must be an object")
        cfg.update(loaded)
    for flag in ("seed", "workers", "out", "genus", "theta", "radius", "fermi"):
        v = getattr(args, flag, None)
        if v is not None:
            cfg[flag] = v

    allowed = _COMMON_KEYS | _COMMAND_KEYS[command]
    unknown = set(cfg) - allowed
    if unknown:
        raise SchemaError(f"unknown config keys for {command}: {sorted(unknown)}")

    cfg["seed"] = _as_int("seed", cfg["seed"], 0, 2**31 - 1)
    cfg["workers"] = _as_int("workers", cfg["workers"], 1, 64)
    cfg["genus"] = _as_int("genus", cfg["genus"], 2, 4)
    cfg["radius"] = _as_int("radius", cfg["radius"], 1, 6)
    cfg["theta"] = _as_float("theta", cfg["theta"])
    cfg["fermi"] = _as_float("fermi", cfg["fermi"])
    cfg["out"] = str(cfg["out"])

    if "theta_grid" in cfg:
        grid = cfg["theta_grid"]
        if not isinstance(grid, list) or not grid:
            raise SchemaError("theta_grid must be a nonempty list")
        cfg["theta_grid"] = [_as_float("theta_grid entry", v) for v in grid]
    if "radii" in cfg:
        radii = cfg["radii"]
        if not isinstance(radii, list) or not radii:
            raise SchemaError("radii must be a nonempty list")
        cfg["radii"] = [_as_int("radii entry", v, 1, 6) for v in radii]
        if sorted(cfg["radii"]) != cfg["radii"]:
            raise SchemaError("radii must be ascending")
    if "tau_list" in cfg:
        taus = cfg["tau_list"]
        if not isinstance(taus, list) or len(taus) < 4:
            raise SchemaError("tau_list needs at least four values")
        cfg["tau_list"] = [_as_float("tau", v) for v in taus]
        if any(t <= 0 for t in cfg["tau_list"]):
            raise SchemaError("tau values must be positive")
    if "disorder" in cfg and cfg["disorder"] is not None:
        d = cfg["disorder"]
        if not isinstance(d, dict):
            raise SchemaError("disorder must be an object")
        extra = set(d) - {"lam", "w_angle", "seed"}
        if extra:
            raise SchemaError(f"unknown disorder keys: {sorted(extra)}")
        lam = _as_float("disorder.lam", d.get("lam", 1.0))
        if lam <= 0:
            raise SchemaError("disorder.lam must be positive")
        cfg["disorder"] = {
            "lam": lam,
            "w_angle": _as_float("disorder.w_angle", d.get("w_angle", 0.0)),
            "seed": _as_int("disorder.seed", d.get("seed", 0), 0, 2**31 - 1),
        }
    return cfg


# -- small shared helpers ------------------------------------------------------


def _check(name, value, tolerance, passed=None):
    if passed is None:
        passed = bool(value < tolerance)
    entry = {"name": name, "tolerance": tolerance, "passed": bool(passed)}
    if value is not None:
        entry["value"] = float(value)
    return entry


def _disorder_point(cfg) -> DisorderPoint | None:
    d = cfg.get("disorder")
    if not d:
        return None
    return DisorderPoint(d["lam"], complex(math.cos(d["w_angle"]),
                                           math.sin(d["w_angle"])))


def _potential_for(cfg):
    point = _disorder_point(cfg)
    if point is None:
        return None
    return lambda ball: ball_disorder_potential(point, ball)


def _random_halfplane(rng, n):
    x = rng.uniform(-3.0, 3.0, n)
    y = np.exp(rng.uniform(math.log(0.05), math.log(5.0), n))
    return x + 1j * y


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    raise TypeError(f"not JSON serializable: {type(o)}")


# -- command handlers ----------------------------------------------------------


def cmd_geom_check(cfg):
    rng = np.random.default_rng(cfg["seed"])
    n = cfg.get("triangles", 1000)
    thetas = cfg.get("theta_set", [0.3, 1.0, 3.0, 7.5])
    v, w, z, t = (_random_halfplane(rng, n) for _ in range(4))
    areas = triangle_area_oriented_many(v, w, z)

    rows = []
    worst_hol = 0.0
    for theta in thetas:
        hol = holonomy_many(theta, v, w, z)
        defect = float(np.max(np.abs(hol - np.exp(1j * theta * areas))))
        worst_hol = max(worst_hol, defect)
        rows.append((theta, defect))

    four = holonomy_many(1.7, v, w, z) * holonomy_many(1.7, v, z, t) \
        - holonomy_many(1.7, v, w, t) * holonomy_many(1.7, w, z, t)
    four_defect = float(np.max(np.abs(four)))

    worst_inv = 0.0
    for k in range(20):
        p = rng.uniform(0, 0.9) * np.exp(2j * math.pi * rng.uniform())
        g = su11_to_sl2r(*su11_compose(disk_translation(p),
                                       disk_rotation(rng.uniform(0, 2 * math.pi))))
        gv, gw, gz = (np.array([g(complex(q)) for q in pts])
                      for pts in (v[:50], w[:50], z[:50]))
        moved = triangle_area_oriented_many(gv, gw, gz)
        worst_inv = max(worst_inv, float(np.max(np.abs(moved - areas[:50]))))

    checks = [
        _check("holonomy_equals_exp_theta_area", worst_hol, 1e-8),
        _check("four_point_identity", four_defect, 1e-9),
        _check("moebius_invariance_of_area", worst_inv, 1e-9),
    ]
    tables = {"holonomy": (["theta", "max_defect"], rows)}
    return checks, tables, {"triangles": n}


def cmd_group_check(cfg):
    checks = []
    size_rows = []
    sigma_rows = []
    for g in cfg.get("genus_set", [2, 3]):
        pres = build_genus_g_group(g)
        checks.append(_check(f"relator_defect_g{g}", pres.relator_defect(), 1e-8))
        min_tr = min(abs(np.trace(m.mat)) for m in pres.generators)
        checks.append(_check(f"generators_hyperbolic_g{g}", None, 2.0,
                             passed=min_tr > 2.0))
        r_oracle = cfg.get("oracle_radius", 3 if g == 2 else 2)
        ball = pres.ball(r_oracle)
        try:
            oracle = ball_sizes_oracle(ball)
            dedup_ok = list(ball.layer_sizes) == oracle
        except RuntimeError:
            dedup_ok = False
        checks.append(_check(f"ball_layers_match_oracle_g{g}", None, 0,
                             passed=dedup_ok))
        for r in range(r_oracle + 1):
            size_rows.append((g, r, ball.prefix_count(r)))
        for th in cfg.get("sigma_theta_set", [0.3, 1.0, 3.0]):
            res = sigma_cocycle_residual(Multiplier(th, pres), 2)
            sigma_rows.append((g, th, res))
            checks.append(_check(f"sigma_cocycle_g{g}_theta{th}", res, 1e-9))
    tables = {
        "ball_sizes": (["genus", "radius", "count"], size_rows),
        "sigma_cocycle": (["genus", "theta", "max_defect"], sigma_rows),
    }
    return checks, tables, {}


def cmd_pairing(cfg):
    g = cfg["genus"]
    pres = build_genus_g_group(g)
    rep = pairing_report(pres)
    target_hyp = 4.0 * math.pi * (g - 1)
    checks = [
        _check("fan_hyperbolic_equals_4pi_gm1",
               abs(rep["pairing_hyp"] - target_hyp), 1e-6),
        _check("fan_symplectic_equals_genus",
               abs(rep["pairing_symp"] - g), 1e-12),
        _check("ratio_equals_kappa", rep["ratio_defect"], 1e-6),
    ]
    rows = [(g, rep["pairing_hyp"], rep["pairing_symp"], kappa(g),
             rep["ratio"])]
    tables = {"pairing": (["genus", "fan_hyp", "fan_symp", "kappa",
                           "ratio"], rows)}
    return checks, tables, rep


def cmd_coboundary(cfg):
    g = cfg["genus"]
    pres = build_genus_g_group(g)
    rep = coboundary_report(pres, cfg["radius"])
    checks = [
        _check("combination_is_coboundary", rep["residual_combination"], 1e-6),
        _check("hyperbolic_alone_is_not", None, 1e-2,
               passed=rep["residual_hyp"] > 1e-2),
    ]
    rows = [(g, cfg["radius"], rep["residual_combination"],
             rep["residual_hyp"], rep["residual_symp"])]
    tables = {"residuals": (["genus", "radius", "combination", "hyp_alone",
                             "symp_alone"], rows)}
    return checks, tables, rep


def cmd_algebra_check(cfg):
    g = cfg["genus"]
    pres = build_genus_g_group(g)
    mult = Multiplier(cfg["theta"], pres)
    ball_radius = cfg.get("ball_radius", 6 if g == 2 else 4)
    support = cfg.get("support_radius", 2)
    ball = pres.ball(ball_radius)
    seed = cfg["seed"]
    A = TwistedKernel.random(mult, ball, support_radius=support, seed=seed)
    B = TwistedKernel.random(mult, ball, support_radius=support, seed=seed + 1)
    C = TwistedKernel.random(mult, ball, support_radius=support, seed=seed + 2)
    D = TwistedKernel.random(mult, ball, support_radius=1, seed=seed + 3)

    assoc = (convolve(convolve(A, B), C) - convolve(A, convolve(B, C))).norm2()
    tr_cyc = abs(trace(convolve(A, B)) - trace(convolve(B, A)))
    pos = trace(convolve(star(A), A))
    star_inv = (star(star(A)) - A).norm2()

    from .twisted_algebra import derivation_delta
    leib = max(
        (derivation_delta(j, convolve(A, B))
         - convolve(derivation_delta(j, A), B)
         - convolve(A, derivation_delta(j, B))).norm2()
        for j in range(1, 2 * g + 1)
    )

    cjk = cyclic_cjk(1, 1 + g, A, B, C, D)
    vk = tau_K(A, B, C)
    vk_oracle = tau_K_oracle(A, B, C)
    vc = tau_chern(A, B, C)
    chern_cyc = abs(vc - tau_chern(C, A, B))
    chern_hoch = abs(hochschild_b(tau_chern, A, B, C, D))
    self_cons = chern_self_consistency(A, B, C)
    bridge = bridge_report(mult)

    checks = [
        _check("associativity", assoc, 1e-8),
        _check("trace_is_tracial", tr_cyc, 1e-8),
        _check("trace_positivity", None, 0.0,
               passed=pos.real > 0 and abs(pos.imag) < 1e-12),
        _check("star_involutive", star_inv, 1e-12),
        _check("leibniz", leib, 1e-8),
        _check("cjk_cyclicity", cjk.cyclicity_defect, 1e-8),
        _check("cjk_hochschild", cjk.hochschild_defect, 1e-8),
        _check("tau_K_matches_derivation_sum", abs(vk - vk_oracle), 1e-8),
        _check("tau_chern_cyclicity", chern_cyc, 1e-8),
        _check("tau_chern_hochschild", chern_hoch, 1e-8),
        _check("tau_chern_self_consistency", self_cons, 1e-8),
        _check("bridge_recovers_kappa", bridge["kappa_defect"], 1e-8),
    ]
    rows = [(c["name"], c.get("value", ""), c["tolerance"], c["passed"])
            for c in checks]
    tables = {"defects": (["name", "value", "tolerance", "passed"], rows)}
    extras = {
        "tau_K": {"re": vk.real, "im": vk.imag},
        "tau_chern": {"re": vc.real, "im": vc.imag},
        "bridge": bridge,
    }
    return checks, tables, extras


def _butterfly_point(args):
    genus, theta, radius, disorder = args
    pres = build_genus_g_group(genus)
    potential = None
    if disorder:
        point = DisorderPoint(disorder["lam"],
                              complex(math.cos(disorder["w_angle"]),
                                      math.sin(disorder["w_angle"])))
        potential = ball_disorder_potential(point, pres.ball(radius))
    H = harper_build(Multiplier(theta, pres), radius, potential)
    return np.linalg.eigvalsh(H.dense())


def cmd_butterfly(cfg):
    if "theta_grid" not in cfg:
        raise SchemaError("butterfly requires theta_grid")
    grid = cfg["theta_grid"]
    radius = cfg["radius"]
    jobs = [(cfg["genus"], th, radius, cfg.get("disorder")) for th in grid]
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            results = list(pool.map(_butterfly_point, jobs))
    else:
        results = [_butterfly_point(j) for j in jobs]

    rows = []
    widest = (0.0, None, None)
    for theta, vals in zip(grid, results):
        for i, v in enumerate(vals):
            rows.append((theta, i, float(v), radius))
        d = np.diff(vals)
        k = int(np.argmax(d))
        if d[k] > widest[0]:
            widest = (float(d[k]), theta, float(0.5 * (vals[k] + vals[k + 1])))
    dims = {len(v) for v in results}
    checks = [
        _check("constant_dimension_across_grid", None, 0,
               passed=len(dims) == 1),
    ]
    tables = {"levels": (["theta", "index", "eigenvalue", "radius"], rows)}
    extras = {
        "grid_points": len(grid),
        "dimension": sorted(dims)[0],
        "widest_gap": {"width": widest[0], "theta": widest[1],
                       "fermi_midpoint": widest[2]},
    }
    return checks, tables, extras


def cmd_spectrum(cfg):
    pres = build_genus_g_group(cfg["genus"])
    mult = Multiplier(cfg["theta"], pres)
    ball = pres.ball(cfg["radius"])
    potential = None
    checks = []
    extras = {}
    point = _disorder_point(cfg)
    if point is not None:
        potential = ball_disorder_potential(point, ball)
        resid = disorder_covariance_residual(
            point, ball, samples=500, seed=cfg["disorder"]["seed"])
        checks.append(_check("disorder_equivariance", resid, 1e-10))
        extras["disorder"] = {"lam": point.lam,
                              "w": {"re": point.w.real, "im": point.w.imag}}
    H = harper_build(mult, cfg["radius"], potential)
    res = spectrum(H, k=cfg.get("eig_count"))
    checks += [
        _check("hermiticity", H.hermiticity_defect(), 1e-12),
        _check("eigen_residual", res.residual, 1e-8),
        _check("ldos_normalized", abs(res.ldos.sum() - 1.0), 1e-9),
    ]
    rows = [(i, float(v), float(w)) for i, (v, w) in
            enumerate(zip(res.eigenvalues, res.ldos))]
    tables = {"levels": (["index", "eigenvalue", "ldos_weight"], rows)}
    extras.update({"dimension": H.dim,
                   "range": [float(res.eigenvalues.min()),
                             float(res.eigenvalues.max())]})
    return checks, tables, extras


def cmd_comtet_compare(cfg):
    theta = cfg["theta"]
    count = cfg.get("count", 6)
    closed, edge = comtet_levels(theta)
    ode = radial_ode_levels(theta, cfg.get("ode_r_max", 14.0),
                            cfg.get("ode_n", 6000), count)
    fd, fd_report = continuum_fd_solve(theta, cfg.get("fd_r_dom", 4.0),
                                       cfg.get("fd_mesh", 161), count)

    rows = []
    ode_err = 0.0
    for k, level in enumerate(closed[:count]):
        rel = abs(ode[k] - level) / level
        ode_err = max(ode_err, rel)
        rows.append((k, level, float(ode[k]), rel))
    fd_rel = abs(fd[0] - closed[0]) / closed[0] if closed else math.inf
    doubling = max(fd_report["refinement_rel_change"])

    checks = [
        _check("radial_ode_matches_closed_form", ode_err, 1e-3),
        _check("fd_lowest_level_within_2pct", fd_rel, 0.02),
        _check("fd_mesh_doubling_below_1pct", doubling, 0.01),
    ]
    fd_rows = [(i, float(v)) for i, v in enumerate(fd)]
    tables = {
        "bound_levels": (["k", "closed_form", "radial_ode", "rel_error"], rows),
        "fd_levels": (["index", "eigenvalue"], fd_rows),
    }
    extras = {"continuum_edge": edge, "fd_report": {
        k: v for k, v in fd_report.items() if k != "refine_tol"}}
    return checks, tables, extras


def cmd_conductance(cfg):
    pres = build_genus_g_group(cfg["genus"])
    cache = {}

    def mult_for(th):
        if th not in cache:
            cache[th] = Multiplier(th, pres)
        return cache[th]

    radii = cfg.get("radii", [2, 3, 4])
    rep = conductance_study(mult_for, cfg["theta"], cfg["fermi"], radii,
                            potential_for=_potential_for(cfg))
    runtime = rep.pop("runtime_seconds")
    print(f"conductance study runtime: {runtime:.1f}s", file=sys.stderr)
    checks = [
        _check("runtime_within_30min", None, 1800.0, passed=runtime < 1800.0),
        _check("gap_found_at_every_radius", None, 0,
               passed=len(rep["per_radius"]) == len(radii)),
        _check("kernel_decay_rate_positive", rep["decay_fit"]["rate"], 0.0,
               passed=rep["decay_fit"]["rate"] > 0.0),
    ]
    rows = [
        (e["radius"], e["dim"], e["gap"][0], e["gap"][1], e["rank"],
         e["tau_chern_real"], e["tau_chern_imag"], e["tau_K_real"],
         e["tau_K_imag"], e["nearest_lattice_value"], e["lattice_distance"])
        for e in rep["per_radius"]
    ]
    tables = {"pairings": ([
        "radius", "dim", "gap_lo", "gap_hi", "rank", "tau_chern_re",
        "tau_chern_im", "tau_K_re", "tau_K_im", "nearest_2gm1Z",
        "distance"], rows)}
    return checks, tables, rep


def cmd_adiabatic(cfg):
    tau_list = cfg.get("tau_list", [20.0, 40.0, 80.0, 160.0])
    scale = cfg.get("qat_steps_scale", 16)
    steps_for = lambda tau: int(max(800, scale * tau))

    fam2 = avoided_crossing(cfg.get("delta", 0.2))
    pres = build_genus_g_group(cfg["genus"])
    mcache = {}

    def mult_for(th):
        if th not in mcache:
            mcache[th] = Multiplier(th, pres)
        return mcache[th]

    famH = truncated_harper_family(
        mult_for, radius=cfg.get("harper_radius", 2),
        theta0=cfg.get("theta0", 0.1), dtheta=cfg.get("dtheta", 0.3),
        fermi=cfg["fermi"])

    checks = []
    rows = []
    reports = {}
    for fam in (fam2, famH):
        rep = qat_bound_check(fam, tau_list, steps_for=steps_for)
        reports[fam.label] = rep
        key = "two_level" if fam is fam2 else "harper"
        for r in rep["rows"]:
            rows.append((key, r["tau"], r["steps"], r["lhs"], r["rhs"],
                         r["scaled_lhs"]))
        checks.append(_check(f"{key}_bound_holds", None, 0,
                             passed=rep["all_bounds_hold"]))
        top = rep["lhs_ratios"][-3:]
        checks.append(_check(f"{key}_halving_ratios", None, 0,
                             passed=all(0.3 <= x <= 0.7 for x in top)))
        checks.append(_check(f"{key}_scaled_spread", rep["scaled_top3_spread"],
                             3.0))

    s0 = 0.37
    X = contour_X(famH, s0, nodes=64)
    x_defect = float(np.linalg.norm(X - eigenbasis_X(famH, s0), 2))
    checks.append(_check("contour_matches_eigenbasis_X", x_defect, 1e-8))

    ad = evolve_adiabatic(famH, 40.0, 3200)
    checks.append(_check("intertwining", intertwining_defect(famH, ad), 1e-6))

    P = famH.projection(s0)
    rng = np.random.default_rng(cfg["seed"])
    n = famH.dimension
    mk = lambda: rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    dPj = projector_tangent(P, mk())
    dPk = projector_tangent(P, mk())
    tau0 = tau_list[0]
    dPt = dP_ds(famH, s0) / tau0
    kub = kubo_identities(P, dPj, dPk, famH.hamiltonian(s0),
                          adiabatic_hamiltonian(famH, tau0, s0), dPt)
    checks += [
        _check("projector_pinch", kub["pinch_defect"], 1e-12),
        _check("double_commutator", kub["double_commutator_defect"], 1e-12),
        _check("conductance_form_real", kub["imag_part"], 1e-12),
        _check("conductance_form_antisymmetric", kub["antisymmetry_defect"],
               1e-12),
        _check("current_lemma_exact_chain", kub["lemma_exact_residual"], 1e-12),
    ]
    berry = berry_sphere_chern()
    checks.append(_check("berry_sphere_2pi", berry["defect"], 1e-6))

    tables = {"qat": (["family", "tau", "steps", "lhs", "rhs", "scaled_lhs"],
                      rows)}
    extras = {
        "berry": berry,
        "discarded_term": {"re": kub["discarded_term"].real,
                           "im": kub["discarded_term"].imag},
        "lemma_lhs": {"re": kub["lemma_lhs"].real,
                      "im": kub["lemma_lhs"].imag},
        "lemma_rhs": {"re": kub["lemma_rhs"].real,
                      "im": kub["lemma_rhs"].imag},
        "sup_terms": {k: v["sup_term"] for k, v in reports.items()},
    }
    return checks, tables, extras


_HANDLERS = {
    "geom-check": cmd_geom_check,
    "group-check": cmd_group_check,
    "pairing": cmd_pairing,
    "coboundary": cmd_coboundary,
    "algebra-check": cmd_algebra_check,
    "butterfly": cmd_butterfly,
    "spectrum": cmd_spectrum,
    "comtet-compare": cmd_comtet_compare,
    "conductance": cmd_conductance,
    "adiabatic": cmd_adiabatic,
}


# -- output ----------------------------------------------------------------------


def _write_outputs(out_dir: Path, command: str, cfg: dict, checks, tables,
                   extras) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "command": command,
        "config": {k: v for k, v in sorted(cfg.items())},
        "checks": checks,
        "all_passed": all(c["passed"] for c in checks),
        "results": extras,
    }
    path = out_dir / f"{command}.json"
    with open(path, "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")
    for name, (columns, rows) in tables.items():
        with open(out_dir / f"{command}_{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            writer.writerows(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hyperhall",
        description="verification suites and spectral studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--radius", type=int, default=None)
        p.add_argument("--genus", type=int, default=None)
        p.add_argument("--fermi", type=float, default=None)
    args = parser.parse_args(argv)

    try:
        cfg = resolve_config(args.command, args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA

    t0 = time.perf_counter()
    try:
        checks, tables, extras = _HANDLERS[args.command](cfg)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except GapError as exc:
        print(f"gap error: {exc}", file=sys.stderr)
        return EXIT_GAP
    except (BudgetError, MemoryError) as exc:
        print(f"resource budget exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except RefinementError as exc:
        print(f"refinement failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT

    _write_outputs(Path(cfg["out"]), args.command, cfg, checks, tables, extras)
    elapsed = time.perf_counter() - t0
    failed = [c["name"] for c in checks if not c["passed"]]
    for c in checks:
        mark = "PASS" if c["passed"] else "FAIL"
        val = f" value={c['value']:.3e}" if "value" in c else ""
        print(f"[{mark}] {c['name']}{val}")
    print(f"{args.command}: {len(checks) - len(failed)}/{len(checks)} checks "
          f"passed ({elapsed:.1f}s)", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
