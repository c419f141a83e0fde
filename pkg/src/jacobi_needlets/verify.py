"""Verification suites behind ``jacobi-needlets verify``.

Each suite returns a list of checks.  A check is either a tolerance check
(an exact identity tested against a fixed tolerance) or a band check
(``max/min`` of an observed ratio compared with the configured slack).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .approx import fit_loglog
from .cutoff import cutoff_preset, pair_preset
from .errors import ParameterError
from .functions import equivalence_family
from .jacobi import WeightParams, eval_batch, nikolski_probe, random_polynomial, table_for
from .kernels import kernel_matrix, localization_probe, lp_integral_probe, make_kernel
from .needlets import analyze, build_system, cross_level_check, frame_energy, reconstruction_error
from .quadrature import (
    christoffel_lower_probe,
    companion_weight,
    composite_rule,
    level_geometry,
    theta_grid,
)
from .spaces import (
    BallIndicator,
    SpaceSpec,
    approximation_norm,
    b_norm,
    continuous_norm,
    f_norm,
    maximal_comparator,
    maximal_operator,
    sequence_norm,
)

DEFAULT_SLACK = 50.0
SUITES = ("quadrature", "frame", "localization", "norms", "nikolski", "lower-bounds", "maximal")
NORM_TRIPLES = ((0.0, 2.0, 2.0), (1.0, 2.0, 2.0), (0.5, 2.0, 1.0))
NIKOLSKI_DEGREES = (8, 16, 32, 64, 128, 256)


@dataclass
class VerifyConfig:
    params: WeightParams = field(default_factory=lambda: WeightParams(0.0, 0.0))
    levels: int | None = None
    cutoff: str = "tight"
    grid: int = 512
    slack: float = DEFAULT_SLACK
    seed: int = 0


def tolerance_check(name, observed, limit, **extra):
    ok = bool(np.isfinite(observed) and observed <= limit)
    return {"name": name, "kind": "tolerance", "observed": float(observed), "limit": float(limit),
            "pass": ok, **extra}


def band_check(name, values, slack, **extra):
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    width = hi / lo if lo > 0 else math.inf
    ok = bool(lo > 0 and np.isfinite(hi) and width <= slack)
    return {"name": name, "kind": "band", "band": [lo, hi], "width": width, "limit": float(slack),
            "pass": ok, **extra}


def kernel_cutoff(name):
    """A bare cutoff preset, or the analysis cutoff of a pair preset."""
    try:
        return cutoff_preset(name)
    except ParameterError:
        return pair_preset(name).a_hat


def _levels(cfg, default):
    return default if cfg.levels is None else cfg.levels


# ---------------------------------------------------------------------------
# suites


def quadrature_checks(params, max_level=8, geometry_level=10, samples=50, seed=0, slack=DEFAULT_SLACK):
    """Exactness to degree ``2^(j+2) - 1``, partition of the cells, geometry bands."""
    rng = np.random.default_rng(seed)
    checks = []
    mass = params.total_mass
    worst = 0.0
    for j in range(max_level + 1):
        geom = level_geometry(params, j, cap=max(geometry_level, max_level))
        deg = 2 ** (j + 2) - 1
        B = eval_batch(table_for(params, deg), deg, geom.nodes)
        c = rng.uniform(-1, 1, (samples, deg + 1))
        quad = (c @ B) @ geom.weights
        # only the constant term integrates to a nonzero value
        exact = c[:, 0] * math.sqrt(mass)
        scale = np.maximum(np.abs(exact), np.linalg.norm(c, axis=1))
        worst = max(worst, float(np.max(np.abs(quad - exact) / scale)))
    checks.append(tolerance_check("gauss exactness", worst, 1e-10, levels=max_level))
    gaps, cratio, mratio, part = [], [], [], 0.0
    for j in range(geometry_level + 1):
        geom = level_geometry(params, j, cap=geometry_level)
        theta = np.arccos(geom.nodes)
        gaps.append(np.diff(theta) * 2 ** j)
        cratio.append(geom.weights / (2.0 ** -j * companion_weight(params, 2 ** j, geom.nodes)))
        mratio.append(geom.cell_measures / geom.weights)
        part = max(part, abs(geom.cell_measures.sum() - mass) / mass)
    checks.append(tolerance_check("cell partition", part, 1e-10))
    checks.append(band_check("theta gap * 2^j", np.concatenate(gaps), slack))
    checks.append(band_check("c_xi / (2^-j W(2^j; xi))", np.concatenate(cratio), slack))
    checks.append(band_check("mu(I_xi) / c_xi", np.concatenate(mratio), slack))
    return checks


def frame_checks(params, pair="tight", levels=(4, 6, 8), members=20, seed=0, pairs=100):
    """Parseval (tight pairs), reconstruction, cross-level orthogonality."""
    rng = np.random.default_rng(seed)
    checks = []
    for J in levels:
        system = build_system(params, pair, J)
        parseval, recon = 0.0, 0.0
        for _ in range(members):
            f = random_polynomial(params, system.exact_degree, rng)
            tree = analyze(system, f)
            norm2 = f.l2_norm() ** 2
            parseval = max(parseval, abs(frame_energy(tree) - norm2) / norm2)
            recon = max(recon, reconstruction_error(system, tree, f) / f.l2_norm())
        if system.pair.tight:
            checks.append(tolerance_check(f"parseval J={J}", parseval, 1e-8, J=J))
        checks.append(tolerance_check(f"reconstruction J={J}", recon, 1e-8, J=J))
    J = max(levels)
    system = build_system(params, pair, J)
    worst, tested = 0.0, 0
    while tested < pairs:
        j, nu = (int(v) for v in rng.integers(0, J + 1, 2))
        if abs(nu - j) < 2:
            continue
        k = int(rng.integers(system.size(nu)))
        worst = max(worst, cross_level_check(system, j, nu, k)["max_coefficient"])
        tested += 1
    checks.append(tolerance_check("cross-level orthogonality", worst, 1e-14, pairs=pairs))
    return checks


def localization_checks(params, cutoff="tight", degrees=(64, 128, 256), sigmas=(1, 2, 3),
                        grid=512, slack=DEFAULT_SLACK):
    """Localization constants: finite, within a factor 2 when ``n`` doubles."""
    cut = kernel_cutoff(cutoff) if isinstance(cutoff, str) else cutoff
    kernels = [make_kernel(params, cut, n) for n in degrees]
    checks = []
    for sigma in sigmas:
        consts = [localization_probe(K, sigma, grid)["observed_constant"] for K in kernels]
        steps = [b / a for a, b in zip(consts, consts[1:])]
        drift = max(max(s, 1 / s) for s in steps)
        chk = tolerance_check(f"localization sigma={sigma}", drift, 2.0, constants=consts)
        chk["pass"] = chk["pass"] and all(np.isfinite(consts))
        checks.append(chk)
    l1 = [lp_integral_probe(K, 1.0)["observed_constant"] for K in kernels]
    checks.append(band_check("L1 integral constant across n", l1, slack))
    return checks


def reproducing_checks(params, degrees=(16, 64, 256), members=10, seed=0, grid=512):
    """Type (a) kernels reproduce ``Pi_n``: grid error relative to ``||g||_inf``.

    ``L_n * g`` is the physical integral ``int L_n(x, y) g(y) w(y) dy`` on a
    composite rule, so the check does not reuse the spectral multipliers.
    """
    rng = np.random.default_rng(seed)
    x = theta_grid(grid)
    worst = 0.0
    for n in degrees:
        K = make_kernel(params, cutoff_preset("type-a"), n)
        rule = composite_rule(params, panels=max(64, 2 * K.degree + 2))
        mat = kernel_matrix(K, x, rule.nodes) * rule.weights
        for _ in range(members):
            g = random_polynomial(params, n, rng)
            gx = g(x).real
            err = np.max(np.abs(mat @ g(rule.nodes).real - gx)) / np.max(np.abs(gx))
            worst = max(worst, float(err))
    return [tolerance_check("type-a reproducing kernel", worst, 1e-9, degrees=list(degrees))]


def lower_bound_checks(params, degrees=(32, 64, 128), eps=1.0, grid=512):
    """Christoffel-type and diagonal lower bounds: positive and stable within a factor 2."""
    g = theta_grid(grid)
    chris = [christoffel_lower_probe(params, n, eps, g)["min_scaled_value"] for n in degrees]
    tight = cutoff_preset("tight")
    diag = [localization_probe(make_kernel(params, tight, n), 0.0, grid)["diag_lower"] for n in degrees]
    checks = []
    for name, vals in (("Lambda_n W", chris), ("int |L_n|^2 w W / n", diag)):
        vals = np.asarray(vals)
        ratio = vals.max() / vals.min() if vals.min() > 0 else math.inf
        chk = tolerance_check(f"lower bound {name}", ratio, 2.0, minima=vals.tolist())
        chk["pass"] = chk["pass"] and bool(np.all(vals > 0))
        checks.append(chk)
    return checks


def maximal_checks(params, samples=200, seed=0, t_range=(0.5, 2.0), slack=DEFAULT_SLACK, grid=512):
    """``M_t 1_B`` against its closed-form profile over random ``(eta, eps, x, t)``."""
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(samples):
        eta = rng.uniform(0, 1)
        eps = math.exp(rng.uniform(math.log(1e-3), math.log(math.pi)))
        x = math.cos(rng.uniform(0, math.pi))
        t = math.exp(rng.uniform(*np.log(t_range)))
        value = maximal_operator(BallIndicator(params, eta, eps), t, x, grid)
        ratios.append(value / maximal_comparator(params, eta, eps, x, t))
    return [band_check("maximal law", ratios, slack, samples=samples, t_range=list(t_range))]


def norm_checks(params, pair="tight", levels=(6, 8), triples=NORM_TRIPLES, slack=DEFAULT_SLACK,
                drift_limit=0.25):
    """Continuous vs sequence norm bands, their drift between levels, and ``F^{0,2}_2 / L2``."""
    bands = {}
    for J in levels:
        system = build_system(params, pair, J)
        family = equivalence_family(params, J)
        trees = [analyze(system, f) for _, f in family]
        for s, p, q in triples:
            for fam in "FB":
                for scale in (1, 2):
                    spec = SpaceSpec(fam, s, p, q, scale)
                    r = [continuous_norm(f, spec, system) / sequence_norm(t, spec, system.geometries)
                         for (_, f), t in zip(family, trees)]
                    bands.setdefault(spec.label, {})[J] = r
            spec = SpaceSpec("B", s, p, q)
            r = [b_norm(f, spec, system) / approximation_norm(f, s, p, q, J) for _, f in family]
            bands.setdefault(f"B(s={s:g},p={p:g},q={q:g}) vs approximation", {})[J] = r
        r = [f_norm(f, SpaceSpec("F", 0, 2, 2), system) / f.l2_norm() for _, f in family]
        bands.setdefault("F(s=0,p=2,q=2) vs L2", {})[J] = r
    checks = []
    tight = pair_preset(pair).tight if isinstance(pair, str) else pair.tight
    for label, per_level in bands.items():
        for J, r in per_level.items():
            checks.append(band_check(f"{label} J={J}", r, slack, J=J))
        lo, hi = min(levels), max(levels)
        a, b = per_level[lo], per_level[hi]
        drift = max(abs(min(b) / min(a) - 1), abs(max(b) / max(a) - 1))
        checks.append(tolerance_check(f"{label} drift J={lo}->{hi}", drift, drift_limit))
        if label.startswith("F(s=0,p=2,q=2) vs L2") and tight:
            for J, r in per_level.items():
                checks.append(tolerance_check(f"{label} tight width J={J}", max(r) / min(r), 1.01))
    return checks


def nikolski_checks(params, degrees=NIKOLSKI_DEGREES, trials=100, q=2.0, p=math.inf, s=0.0,
                    seed=0, slope_limit=0.1):
    """Slope of ``log max_ratio`` against ``log n``; a bounded ratio has slope near 0."""
    reports = [nikolski_probe(table_for(params, n), n, q, p, trials, seed=seed, s=s) for n in degrees]
    checks = []
    for key, name in (("max_ratio", "unweighted"), ("weighted_max_ratio", f"weighted s={s:g}")):
        vals = [r[key] for r in reports]
        slope, _ = fit_loglog(degrees, vals)
        checks.append(tolerance_check(f"nikolski {name} |slope|", abs(slope), slope_limit,
                                      slope=slope, maxima=vals, degrees=list(degrees)))
    return checks


def run_suite(name, cfg=None):
    """Checks of one suite (or ``all``) under ``cfg``."""
    cfg = cfg or VerifyConfig()
    if name == "all":
        return [c for suite in SUITES for c in run_suite(suite, cfg)]
    P = cfg.params
    if name == "quadrature":
        top = _levels(cfg, 10)
        return quadrature_checks(P, max_level=min(top, 8), geometry_level=top, seed=cfg.seed,
                                 slack=cfg.slack)
    if name == "frame":
        J = _levels(cfg, None)
        return frame_checks(P, cfg.cutoff, (4, 6, 8) if J is None else (J,), seed=cfg.seed)
    if name == "localization":
        return (reproducing_checks(P, seed=cfg.seed, grid=cfg.grid)
                + localization_checks(P, cfg.cutoff, grid=cfg.grid, slack=cfg.slack))
    if name == "norms":
        J = _levels(cfg, 8)
        return norm_checks(P, cfg.cutoff, (max(J - 2, 1), J), slack=cfg.slack)
    if name == "nikolski":
        return nikolski_checks(P, seed=cfg.seed)
    if name == "lower-bounds":
        return lower_bound_checks(P, grid=cfg.grid)
    if name == "maximal":
        return maximal_checks(P, seed=cfg.seed, slack=cfg.slack, grid=cfg.grid)
    raise ParameterError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")


def report(name, cfg, checks):
    return {
        "suite": name,
        "params": cfg.params.as_dict(),
        "cutoff": cfg.cutoff,
        "slack": cfg.slack,
        "seed": cfg.seed,
        "pass": all(c["pass"] for c in checks),
        "checks": checks,
    }
