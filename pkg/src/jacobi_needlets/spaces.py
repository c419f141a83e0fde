"""Weighted L^p, Triebel-Lizorkin and Besov norms (both scales), the
discrete sequence norms, the weighted maximal operator and best approximation.

Continuous norms are evaluated on a composite Gauss rule whose endpoint
panels absorb the singular factors of ``w``.  The Littlewood-Paley pieces
``Phi_j * f`` come from the analysis kernels of a :class:`NeedletSystem`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ParameterError, ShapeError
from .jacobi import ExpansionCoefficients, WeightParams, eval_batch, eval_series, table_for
from .quadrature import (
    CompositeRule,
    arc_distance,
    ball_interval,
    companion_weight,
    composite_rule,
    default_rule,
    interval_measure,
    theta_grid,
)

FAMILIES = ("F", "B")


@dataclass(frozen=True)
class SpaceSpec:
    """``F^{s,q}_p`` / ``B^{s,q}_p``; ``scale=2`` selects the ``W(2^j; .)^(-s)`` variant."""

    family: str
    s: float
    p: float
    q: float
    scale: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"family must be one of {FAMILIES}")
        if self.scale not in (1, 2):
            raise ParameterError("scale must be 1 or 2")
        if not (self.p > 0) or not (self.q > 0):
            raise ParameterError("p and q must be positive")
        if self.family == "F" and math.isinf(self.p):
            raise ParameterError("Triebel-Lizorkin norms require p < infinity")

    @property
    def label(self):
        tilde = "~" if self.scale == 2 else ""
        return f"{self.family}{tilde}(s={self.s:g},p={self.p:g},q={self.q:g})"


@dataclass(eq=False)
class DiscretizedFunction:
    """Values of a function at the nodes of a composite rule.

    ``sup_values`` (at ``rule.sup_points``) are used for ``p = infinity``; when
    missing, the max over nodes is used instead.
    """

    rule: CompositeRule
    values: np.ndarray
    sup_values: np.ndarray | None = None
    expansion: ExpansionCoefficients | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.rule.nodes.shape:
            raise ShapeError("values must match the rule nodes")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("function values must be finite")
        if self.sup_values is not None:
            self.sup_values = np.asarray(self.sup_values)

    @property
    def grid(self):
        return self.rule.nodes

    def sup(self):
        vals = self.values if self.sup_values is None else self.sup_values
        return float(np.max(np.abs(vals))) if vals.size else 0.0


def discretize(f, params=None, degree=None, rule=None):
    """Sample an expansion or callable on a composite rule."""
    if isinstance(f, DiscretizedFunction):
        return f
    if isinstance(f, ExpansionCoefficients):
        params = f.params
        if rule is None:
            rule = default_rule(params, degree if degree is not None else f.degree_max)
        table = table_for(params, f.degree_max)
        vals = _real_if_possible(eval_series(table, f.values, rule.nodes))
        sup = _real_if_possible(eval_series(table, f.values, rule.sup_points))
        return DiscretizedFunction(rule, vals, sup, f)
    if rule is None:
        if params is None:
            raise ParameterError("a rule or params is needed to discretize a callable")
        rule = default_rule(params, degree or 64)
    return DiscretizedFunction(rule, np.asarray(f(rule.nodes)), np.asarray(f(rule.sup_points)))


def _real_if_possible(v):
    return v.real if np.iscomplexobj(v) and not np.any(v.imag) else v


def lp_norm(f, p, rule=None, params=None):
    """``(int |f|^p w)^(1/p)``; ``p = infinity`` is the sup over the rule's points."""
    if not (p > 0):
        raise ParameterError("p must be positive")
    g = discretize(f, params=params, rule=rule)
    if math.isinf(p):
        return g.sup()
    return float(g.rule.integrate(np.abs(g.values) ** p) ** (1.0 / p))


# ---------------------------------------------------------------------------
# maximal operator


@dataclass(frozen=True)
class BallIndicator:
    """``1_{B_eta(eps)}`` with exact cell integrals."""

    params: WeightParams
    center: float
    radius: float

    @property
    def interval(self):
        return ball_interval(self.center, self.radius)

    def __call__(self, x):
        return (arc_distance(x, self.center) <= self.radius).astype(float)


def _panel_sup(bps, integrals, measures, xs):
    """``sup`` over ``[bps[a], bps[b]]`` containing ``x`` of ``integral / measure``."""
    S = np.concatenate([[0.0], np.cumsum(integrals)])
    M = np.concatenate([[0.0], np.cumsum(measures)])
    with np.errstate(invalid="ignore", divide="ignore"):
        R = (S[None, :] - S[:, None]) / (M[None, :] - M[:, None])
    a_idx, b_idx = np.indices(R.shape)
    R = np.where(b_idx > a_idx, R, -np.inf)
    R = np.maximum.accumulate(R, axis=0)
    R = np.maximum.accumulate(R[:, ::-1], axis=1)[:, ::-1]
    A = np.searchsorted(bps, xs, side="right") - 1
    B = np.searchsorted(bps, xs, side="left")
    A = np.clip(A, 0, bps.size - 1)
    B = np.clip(np.maximum(B, 1), 0, bps.size - 1)
    return R[A, B]


def maximal_operator(f, t, x, grid_size=512):
    """``(M_t f)(x) = sup_{I containing x} (mu(I)^-1 int_I |f|^t w)^(1/t)``.

    The sup runs over intervals whose endpoints lie on a theta-uniform grid
    of ``grid_size`` points refined by ``x`` itself (and, for a
    :class:`BallIndicator`, by the ball's endpoints, which makes every cell
    integral exact).  For a :class:`DiscretizedFunction` the rule's panel
    breakpoints serve as the grid.
    """
    if not (t > 0):
        raise ParameterError("t must be positive")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(xs) > 1):
        raise ParameterError("x must lie in [-1, 1]")
    if isinstance(f, BallIndicator):
        out = np.empty(xs.size)
        left, right = f.interval
        for i, xv in enumerate(xs):
            bps = np.unique(np.concatenate([theta_grid(grid_size), [left, right, xv]]))
            meas = interval_measure(f.params, bps[:-1], bps[1:])
            # ball ends are breakpoints, so each cell is inside or outside
            mids = (bps[:-1] + bps[1:]) / 2
            ints = np.where((mids >= left) & (mids <= right), meas, 0.0)
            out[i] = _panel_sup(bps, ints, meas, np.array([xv]))[0]
        res = out ** (1.0 / t)
        return res if np.ndim(x) else float(res[0])
    g = f if isinstance(f, DiscretizedFunction) else discretize(f)
    rule = g.rule
    ints = rule.panel_integrals(np.abs(g.values) ** t)
    meas = rule.panel_measures()
    res = _panel_sup(rule.breakpoints, ints, meas, xs) ** (1.0 / t)
    return res if np.ndim(x) else float(res[0])


def maximal_comparator(params, eta, eps, x, t):
    """Closed-form profile of ``M_t 1_{B_eta(eps)}`` at ``x``.

    ``(1 + d/eps)^(-1/t) (1 + d/(eps + d(eta, e)))^(-(2a+1)/t)`` with ``d = d(eta, x)``,
    where ``e = 1, a = alpha`` for ``eta >= 0`` and ``e = -1, a = beta`` otherwise.
    """
    if eta >= 0:
        pole, expo = 1.0, params.alpha
    else:
        pole, expo = -1.0, params.beta
    d = arc_distance(eta, x)
    d_pole = arc_distance(eta, pole)
    return (1 + d / eps) ** (-1.0 / t) * (1 + d / (eps + d_pole)) ** (-(2 * expo + 1) / t)


# ---------------------------------------------------------------------------
# best approximation


class ApproxValue(float):
    """A float carrying ``proxy``: True when the value is ``||f - S_n f||_p``
    rather than the exact best approximation."""

    proxy: bool

    def __new__(cls, value, proxy=False):
        obj = super().__new__(cls, value)
        obj.proxy = proxy
        return obj


def best_approx(coeffs, n, p=2.0):
    """``E_n(f)_p``: exact tail norm for ``p = 2``, projection proxy otherwise."""
    if n < 0:
        raise ParameterError("n must be nonnegative")
    vals = coeffs.values
    if vals.size <= n + 1:
        if coeffs.band_limited:
            return ApproxValue(0.0, proxy=p != 2)
        raise CapacityError(f"expansion of degree {coeffs.degree_max} does not determine E_{n}")
    tail = vals.copy()
    tail[: n + 1] = 0
    if p == 2:
        return ApproxValue(float(np.linalg.norm(tail)))
    return ApproxValue(lp_norm(ExpansionCoefficients(coeffs.params, tail), p), proxy=True)


# ---------------------------------------------------------------------------
# Littlewood-Paley norms


def _check_band(f, system):
    top = f.effective_degree()
    if top > system.degree:
        raise CapacityError(
            f"f has degree {top}; levels 0..{system.max_level} cover degree {system.degree}"
        )
    if not f.band_limited and f.degree_max > system.degree:
        raise CapacityError("expansion is not declared band-limited within the level budget")


def littlewood_paley(f, system, points, basis=None):
    """Matrix ``[(Phi_j * f)(x)]`` with rows ``j = 0..J``."""
    _check_band(f, system)
    deg = system.degree
    coeffs = f.padded(deg).values if f.degree_max < deg else f.values[: deg + 1]
    P = eval_batch(system.table, deg, points) if basis is None else basis
    M = np.zeros((system.max_level + 1, deg + 1))
    for j, K in enumerate(system.phi):
        M[j, : K.degree + 1] = K.multipliers
    mc = M * coeffs
    out = np.ascontiguousarray(mc.real) @ P
    if np.any(mc.imag):
        out = out + 1j * (np.ascontiguousarray(mc.imag) @ P)
    return out


def _lp_rule(system, p):
    """Composite rule, evaluation points and basis there (cached on the system)."""
    key = ("lp_rule", math.isinf(p))
    hit = system._cache.get(key)
    if hit is None:
        rule = composite_rule(system.params, panels=max(64, 2 * system.degree + 2))
        pts = rule.sup_points if math.isinf(p) else rule.nodes
        hit = (rule, pts, eval_batch(system.table, system.degree, pts))
        system._cache[key] = hit
    return hit


def _level_factors(system, spec, pts):
    js = np.arange(system.max_level + 1, dtype=float)
    if spec.scale == 1 or spec.s == 0:
        return (2.0 ** (spec.s * js))[:, None] * np.ones((1, np.size(pts)))
    return np.array([
        2.0 ** (spec.s * j) * companion_weight(system.params, 2.0 ** j, pts) ** (-spec.s)
        for j in js
    ])


def _lq(values, q, axis=0):
    if math.isinf(q):
        return np.max(values, axis=axis)
    return np.sum(values ** q, axis=axis) ** (1.0 / q)


def f_norm(f, spec, system):
    """``|| (sum_j (2^{sj} |Phi_j * f|)^q)^(1/q) ||_p`` over levels ``0..J``."""
    if spec.family != "F":
        raise ParameterError("f_norm needs an F spec")
    rule, pts, basis = _lp_rule(system, spec.p)
    lp = np.abs(littlewood_paley(f, system, pts, basis)) * _level_factors(system, spec, pts)
    g = _lq(lp, spec.q)
    return float(rule.integrate(g ** spec.p) ** (1.0 / spec.p))


def b_norm(f, spec, system):
    """``(sum_j (2^{sj} ||Phi_j * f||_p)^q)^(1/q)`` over levels ``0..J``."""
    if spec.family != "B":
        raise ParameterError("b_norm needs a B spec")
    rule, pts, basis = _lp_rule(system, spec.p)
    lp = np.abs(littlewood_paley(f, system, pts, basis)) * _level_factors(system, spec, pts)
    if math.isinf(spec.p):
        per_level = lp.max(axis=1)
    else:
        per_level = (lp ** spec.p @ rule.weights) ** (1.0 / spec.p)
    return float(_lq(per_level, spec.q))


def continuous_norm(f, spec, system):
    return f_norm(f, spec, system) if spec.family == "F" else b_norm(f, spec, system)


# ---------------------------------------------------------------------------
# sequence norms


def _tree_levels(h, geometries):
    levels = h.levels if hasattr(h, "levels") else h
    if len(levels) > len(geometries):
        raise ShapeError("more coefficient levels than geometries")
    out = []
    for j, arr in enumerate(levels):
        arr = np.abs(np.asarray(arr)).ravel()
        if arr.size != geometries[j].size:
            raise ShapeError(f"level {j}: {arr.size} coefficients for {geometries[j].size} cells")
        out.append(arr)
    return out


def _cell_weight(spec, j, mu):
    """Per-cell factor multiplying ``|h_xi|``."""
    if spec.scale == 1:
        return 2.0 ** (spec.s * j) * np.ones_like(mu)
    return mu ** (-spec.s)


def sequence_norm(h, spec, geometries):
    """Discrete ``f`` / ``b`` norm of multilevel coefficients.

    f-norms integrate the step function
    ``(sum_xi (w_j |h_xi| mu(I_xi)^(-1/2) 1_{I_xi})^q)^(1/q)``, ``w_j`` being
    the level factor, exactly over the common refinement of all level cells.
    """
    levels = _tree_levels(h, geometries)
    p, q = spec.p, spec.q
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    if spec.family == "B":
        per_level = []
        for j, arr in enumerate(levels):
            mu = geometries[j].cell_measures
            vals = _cell_weight(spec, j, mu) * mu ** (inv_p - 0.5) * arr
            per_level.append(vals.max() if math.isinf(p) else np.sum(vals ** p) ** (1.0 / p))
        return float(_lq(np.array(per_level), q)) if per_level else 0.0
    # F: piecewise-constant integrand on elementary intervals
    edges = np.unique(np.concatenate([geometries[j].cells.ravel() for j in range(len(levels))]))
    mids = (edges[:-1] + edges[1:]) / 2
    stack = []
    for j, arr in enumerate(levels):
        geom = geometries[j]
        lefts = geom.cells[:, 0]
        # cells are ordered by decreasing x; cell k holds mids in [left_k, left_{k-1})
        k = np.searchsorted(-lefts, -mids, side="left")
        mu = geom.cell_measures
        vals = _cell_weight(spec, j, mu) * mu ** -0.5 * arr
        stack.append(vals[np.clip(k, 0, arr.size - 1)])
    g = _lq(np.array(stack), q)
    if math.isinf(p):
        return float(g.max())
    meas = interval_measure(geometries[0].rule.params, edges[:-1], edges[1:])
    return float(np.sum(g ** p * meas) ** (1.0 / p))


# ---------------------------------------------------------------------------
# potential and approximation norms


def potential_norm(f, s, p):
    """``|| sum_n (n+1)^s a_n(f) P^_n ||_p``."""
    vals = f.values * (np.arange(f.values.size) + 1.0) ** s
    g = ExpansionCoefficients(f.params, vals, band_limited=f.band_limited)
    if p == 2:
        return g.l2_norm()
    return lp_norm(g, p)


def approximation_norm(f, s, p, q, J):
    """``||f||_p + (sum_{j=0}^J (2^{sj} E_{2^j}(f)_p)^q)^(1/q)``."""
    base = f.l2_norm() if p == 2 else lp_norm(f, p)
    terms = np.array([2.0 ** (s * j) * best_approx(f, 2 ** j, p) for j in range(J + 1)])
    return float(base + _lq(terms, q))


# ---------------------------------------------------------------------------
# experiments


def equivalence_experiment(norm_a, norm_b, family, slack=50.0, spec=None, descriptor=""):
    """Band ``[min, max]`` of ``norm_a(f) / norm_b(f)`` over ``family``.

    ``family`` is a list of ``(name, f)``.  Members where either norm vanishes
    are skipped and listed in ``notes``.
    """
    members, notes, ratios = [], [], []
    for name, f in family:
        a, b = float(norm_a(f)), float(norm_b(f))
        if a == 0 or b == 0 or not (np.isfinite(a) and np.isfinite(b)):
            notes.append(f"{name}: skipped (norms {a:.3g}, {b:.3g})")
            continue
        members.append({"name": name, "norm_a": a, "norm_b": b, "ratio": a / b})
        ratios.append(a / b)
    if not ratios:
        band = [float("nan"), float("nan")]
        width = float("nan")
    else:
        band = [min(ratios), max(ratios)]
        width = band[1] / band[0]
    return {
        "spec": spec.label if isinstance(spec, SpaceSpec) else spec,
        "family": descriptor,
        "members": members,
        "band": band,
        "width": width,
        "slack": slack,
        "pass": bool(ratios) and width <= slack,
        "notes": notes,
    }
