"""Greedy n-term needlet approximation and Jackson-rate experiments.

Terms are ranked by their contribution ``||h_xi psi_xi||_p = |h_xi| ||psi_xi||_p``
(ties broken by level, then node index), and the n-term approximant is the
synthesis of the top ``n`` terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, ParameterError
from .jacobi import ExpansionCoefficients, eval_batch
from .needlets import CoefficientTree, analyze, build_system, needlet_lp_norms, synthesize
from .quadrature import composite_rule


def needlet_norm_table(system, p, kind="psi"):
    """``||psi_xi||_p`` for every node, flattened in level-major order (cached)."""
    key = ("norms", kind, float(p))
    hit = system._cache.get(key)
    if hit is None:
        hit = np.concatenate([needlet_lp_norms(system, j, p, kind) for j in system.levels])
        hit.setflags(write=False)
        system._cache[key] = hit
    return hit


def contributions(tree, p):
    """``|h_xi| ||psi_xi||_p`` aligned with ``tree.flat()``."""
    norms = needlet_norm_table(tree.system, p)[: tree.flat().size]
    return np.abs(tree.flat()) * norms


def tau_for(s, p):
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    return 1.0 / (s + inv_p)


def btau_norm(tree, s, p):
    """``(sum_xi ||h_xi psi_xi||_p^tau)^(1/tau)`` with ``1/tau = s + 1/p``."""
    if s <= 0:
        raise ParameterError("s must be positive")
    tau = tau_for(s, p)
    c = contributions(tree, p)
    return float(np.sum(c ** tau) ** (1.0 / tau))


@dataclass
class NTermPlan:
    """Ranked nodes with the prefix errors evaluated so far."""

    p: float
    order: np.ndarray = field(repr=False)
    nodes: list = field(repr=False)
    contributions: np.ndarray = field(repr=False)
    errors: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.nodes)

    def prefix(self, n):
        return self.nodes[:n]


def rank(tree, p):
    """Plan over the nonzero coefficients of ``tree``."""
    c = contributions(tree, p)
    js, ks = tree.index()
    order = np.lexsort((ks, js, -c))
    order = order[c[order] > 0]
    nodes = [(int(js[i]), int(ks[i])) for i in order]
    return NTermPlan(p, order, nodes, c[order])


def _term_matrix(tree, order):
    """Rows are the expansions of ``h_xi psi_xi`` for ``xi`` in ``order``."""
    system = tree.system
    js, ks = tree.index()
    h = tree.flat()
    out = np.zeros((order.size, system.degree + 1), dtype=complex)
    for row, i in enumerate(order):
        j, k = js[i], ks[i]
        K = system.psi[j]
        col = system.basis(j)[: K.degree + 1, k] * system.sqrt_weights(j)[k]
        out[row, : K.degree + 1] = h[i] * K.multipliers * col
    return out


def _target(tree, against):
    if against == "synthesis":
        return synthesize(tree.system, tree)
    if against == "reference":
        if tree.reference is None:
            raise ParameterError("tree carries no reference expansion")
        return tree.reference
    if isinstance(against, ExpansionCoefficients):
        return against
    raise ParameterError(f"unknown error target {against!r}")


def _error_norms(target, partials, p, params):
    """``||target - partial_i||_p`` for each row of ``partials``."""
    n = max(target.values.size, partials.shape[1])
    ref = np.zeros(n, dtype=complex)
    ref[: target.values.size] = target.values
    diff = ref[None, :] - np.pad(partials, ((0, 0), (0, n - partials.shape[1])))
    if p == 2:
        return np.linalg.norm(diff, axis=1)
    panels = 32
    while panels < 2 * n:
        panels *= 2
    rule = composite_rule(params, panels=panels)
    from .jacobi import table_for

    pts = rule.sup_points if math.isinf(p) else rule.nodes
    P = eval_batch(table_for(params, n - 1), n - 1, pts)
    vals = np.abs(diff.real @ P + 1j * (diff.imag @ P))
    if math.isinf(p):
        return vals.max(axis=1)
    return (vals ** p @ rule.weights) ** (1.0 / p)


def sigma_curve(tree, n_grid, p=2.0, against="reference", plan=None):
    """Greedy errors ``||f - g_n||_p`` for ``n`` in ``n_grid``.

    Returns ``(plan, errors)``; ``plan.errors`` maps each ``n`` to its error.
    ``against`` selects the target: the tree's reference expansion or its full
    synthesis ``T_psi h``.
    """
    n_grid = np.asarray(sorted(set(int(n) for n in n_grid)))
    if n_grid.size and n_grid[0] < 0:
        raise ParameterError("n must be nonnegative")
    plan = plan or rank(tree, p)
    target = _target(tree, against)
    top = int(min(n_grid.max(initial=0), len(plan)))
    terms = _term_matrix(tree, plan.order[:top])
    partial = np.cumsum(terms, axis=0) if top else np.zeros((0, tree.system.degree + 1), complex)
    zero = np.zeros((1, tree.system.degree + 1), dtype=complex)
    rows = np.vstack([zero, partial])
    errs = _error_norms(target, rows[np.minimum(n_grid, top)], p, tree.system.params)
    for n, e in zip(n_grid, errs):
        plan.errors[int(n)] = float(e)
    return plan, errs


def greedy_nterm(tree, n, p=2.0, against="reference"):
    """Top-``n`` approximant: ``(plan, approximant expansion, error)``."""
    if n < 0:
        raise ParameterError("n must be nonnegative")
    plan = rank(tree, p)
    keep = np.zeros(tree.flat().size, dtype=bool)
    keep[plan.order[:n]] = True
    approximant = synthesize(tree.system, tree.restricted(keep))
    _, errs = sigma_curve(tree, [n], p, against, plan)
    return plan, approximant, float(errs[0])


def fit_loglog(x, y):
    """Least-squares slope of ``log y`` against ``log x`` and the RMS residual."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def decay_smoothness(contrib_sorted, lo, hi, p):
    """``s_emp = r - 1/p`` where ``c_k ~ k^(-r)`` on ``lo <= k <= hi``.

    If the sorted contributions decay like ``k^(-r)``, the tail after ``n``
    terms has ``l^p`` size ``n^(1/p - r)``.
    """
    k = np.arange(1, contrib_sorted.size + 1)
    sel = (k >= lo) & (k <= hi) & (contrib_sorted > 0)
    if np.count_nonzero(sel) < 2:
        return None, None
    slope, resid = fit_loglog(k[sel], contrib_sorted[sel])
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    return -slope - inv_p, resid


def jackson_experiment(f, p, n_grid, J, params=None, s_target=None, pair="tight",
                       against="synthesis", zero_tol=1e-14):
    """Fit the greedy n-term rate of ``f`` and compare it with ``s_emp``.

    ``f`` is an expansion, a callable (then ``params`` is required) or a
    ready-made :class:`CoefficientTree`, which is used as given.  The error
    target defaults to the synthesis of the full tree, i.e. the level-``J``
    Littlewood-Paley truncation of ``f``; the distance from the projection is
    reported as ``residual``.
    """
    if isinstance(f, CoefficientTree):
        if not f.system.pair.tight:
            raise ParameterError("n-term experiments need a tight system")
        tree, params, J = f, f.system.params, f.system.max_level
    else:
        if isinstance(f, ExpansionCoefficients):
            params = f.params
        elif params is None:
            raise ParameterError("params needed for a callable input")
        system = build_system(params, pair, J, cap=max(J, 10))
        if not system.pair.tight:
            raise ParameterError("n-term experiments need a tight system")
        tree = analyze(system, f)
    if not np.any(tree.flat()):
        raise DegenerateError("zero function: no rate to fit")
    n_grid = np.asarray(sorted(set(int(n) for n in n_grid)))
    plan, sigma = sigma_curve(tree, n_grid, p, against)
    raw = sigma.copy()
    sigma = np.minimum.accumulate(sigma)
    target = _target(tree, against)
    scale = target.l2_norm() if p == 2 else _error_norms(target, np.zeros((1, 1)), p, params)[0]
    notes = []
    positive = sigma > zero_tol * scale
    s_emp, s_resid = decay_smoothness(plan.contributions, n_grid.min(), n_grid.max(), p)
    if s_emp is None:
        notes.append("too few nonzero contributions to estimate s_emp")
    if np.count_nonzero(positive) < 2:
        notes.append("sigma_n vanishes on the grid; slope fit skipped")
        slope = slope_resid = None
    else:
        if not np.all(positive):
            notes.append(f"sigma_n vanishes for n >= {int(n_grid[~positive][0])}; fit uses the rest")
        slope, slope_resid = fit_loglog(n_grid[positive], sigma[positive])
    c_observed = None
    if s_emp is not None and s_emp > 0:
        bt = btau_norm(tree, s_emp, p)
        c_observed = float(np.max(sigma * n_grid.astype(float) ** s_emp) / bt)
    elif s_emp is not None:
        notes.append("s_emp <= 0; B^s_tau constant not defined")
    return {
        "J": J,
        "p": p,
        "s_target": s_target,
        "n_grid": n_grid.tolist(),
        "sigma": sigma.tolist(),
        "greedy_errors": raw.tolist(),
        "slope": slope,
        "slope_fit_residual": slope_resid,
        "s_emp": s_emp,
        "s_emp_fit_residual": s_resid,
        "c_observed": c_observed,
        "residual": tree.residual,
        "target": against if isinstance(against, str) else "expansion",
        "nonzero_terms": len(plan),
        "notes": notes,
    }


def bernstein_probe(system, n, s, p=2.0, trials=20, seed=0):
    """``max ||g||_{B^s_tau} / (n^s ||g||_p)`` over random ``g`` in ``Sigma_n``.

    ``g`` sums ``n`` needlets at random nodes with standard normal coefficients;
    the Besov quantity uses the needlet coefficients of ``g`` itself
    (``<g, psi_xi>``), not the ones used to build it.  Exploratory only.
    """
    if n < 1:
        raise ParameterError("n must be positive")
    rng = np.random.default_rng(seed)
    total = system.node_count()
    ratios = []
    from .spaces import lp_norm

    for _ in range(trials):
        picks = rng.choice(total, size=min(n, total), replace=False)
        flat = np.zeros(total)
        flat[picks] = rng.standard_normal(picks.size)
        parts = np.split(flat, np.cumsum([system.size(j) for j in system.levels])[:-1])
        g = synthesize(system, CoefficientTree(system, parts, "random"))
        gp = g.l2_norm() if p == 2 else lp_norm(g, p)
        tree = analyze(system, g)
        ratios.append(btau_norm(tree, s, p) / (n ** s * gp))
    return {
        "probe": "bernstein",
        "params": system.params.as_dict(),
        "n": n,
        "s": s,
        "p": p,
        "trials": trials,
        "seed": seed,
        "max_ratio": float(np.max(ratios)),
        "ratios": ratios,
    }
