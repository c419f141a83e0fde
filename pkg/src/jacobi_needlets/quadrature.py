"""Gauss-Jacobi rules, the multilevel knot sets and their dyadic cells.

Level ``j`` uses the ``2**(j+1)`` zeros of ``P_{2^{j+1}}``; nodes are stored
in decreasing order (increasing ``theta = arccos x``) so that index 0 is the
node closest to ``x = 1``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh_tridiagonal
from scipy.optimize import brentq
from scipy.special import jv

from .errors import CapacityError, NumericError, ParameterError
from .jacobi import WeightParams, build_recurrence, eval_with_derivative, table_for

#: Highest level built by default (``2**11`` nodes).
DEFAULT_LEVEL_CAP = 10
#: Points per panel used for cell measures.
CELL_ORDER = 32
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    params: WeightParams
    node_count: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def theta(self):
        return np.arccos(self.nodes)

    def integrate(self, values):
        return np.asarray(values) @ self.weights


def _jacobi_matrix(a, b, n):
    k = np.arange(n, dtype=float)
    ab = a + b
    diag = np.empty(n)
    diag[0] = (b - a) / (ab + 2)
    kk = k[1:]
    diag[1:] = (b * b - a * a) / ((2 * kk + ab) * (2 * kk + ab + 2))
    k1 = np.arange(1, n, dtype=float)
    off = np.sqrt(
        4 * k1 * (k1 + a) * (k1 + b) * (k1 + ab)
        / ((2 * k1 + ab) ** 2 * (2 * k1 + ab + 1) * (2 * k1 + ab - 1))
    )
    return diag, off


@functools.lru_cache(maxsize=16)
def _bessel_zero(order):
    """First positive zero of ``J_order`` (``order > -1``)."""
    grid = np.linspace(1e-3, order + 8.0, 4000)
    vals = jv(order, grid)
    idx = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    return brentq(lambda t: jv(order, t), grid[idx], grid[idx + 1], xtol=1e-15)


def _gauss_jacobi_raw(a, b, n, newton_steps=2):
    """Nodes (descending) and weights for ``(1-x)^a (1+x)^b`` with ``a, b > -1``."""
    if n < 1:
        raise ParameterError("a Gauss rule needs at least one node")
    diag, off = _jacobi_matrix(a, b, n)
    try:
        x = eigvalsh_tridiagonal(diag, off)
    except LinAlgError as exc:
        raise NumericError(f"tridiagonal eigensolver failed for n={n}, a={a}, b={b}: {exc}") from exc
    x = np.sort(x)[::-1].copy()
    # Newton on P_n through the recurrence; table built without the -1/2 guard.
    params = _RawParams(a, b)
    table = build_recurrence(params, n)
    for _ in range(newton_steps):
        p, dp = eval_with_derivative(table, n, x)
        step = p / dp
        x = x - step
    if a == b:
        x = (x - x[::-1]) / 2
    if np.any(np.abs(x) >= 1) or np.any(np.diff(x) >= 0):
        raise NumericError(f"Gauss-Jacobi nodes lost monotonicity for n={n}")
    # Christoffel numbers 1 / sum_k P^_k(x)^2
    ssum = np.zeros_like(x)
    for k, pk in enumerate(table.iter_unnormalized(x, n - 1)):
        ssum += (pk * table.norm_factors[k]) ** 2
    return x, 1.0 / ssum


@dataclass(frozen=True)
class _RawParams:
    """Weight exponents without the ``> -1/2`` restriction (internal rules)."""

    alpha: float
    beta: float


def check_zero_asymptotics(params, nodes, count=3):
    """Max of ``n * |n theta_nu - j_{alpha,nu}|`` style deviation for the first zero.

    Returns ``|n theta_1 - j_{alpha,1}|``, which should be ``O(1/n)``.
    """
    n = nodes.size
    theta1 = np.arccos(nodes[0])
    return abs(n * theta1 - _bessel_zero(params.alpha))


def gauss_jacobi(params: WeightParams, n: int) -> QuadratureRule:
    """Gauss rule with ``n`` nodes for the Jacobi weight."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    return _gauss_jacobi_cached(params, int(n))


@functools.lru_cache(maxsize=64)
def _gauss_jacobi_cached(params, n):
    x, c = _gauss_jacobi_raw(params.alpha, params.beta, n)
    if n >= 8:
        # first zero sits at j_{alpha,1}/n + O(n^-2)
        dev = check_zero_asymptotics(params, x)
        if dev > 10.0 * (1 + abs(params.alpha) + abs(params.beta)) ** 2 / n + 1e-6:
            raise NumericError(f"first zero deviates from Bessel asymptotics by {dev:.3g}")
    x.setflags(write=False)
    c.setflags(write=False)
    return QuadratureRule(params, n, x, c)


def companion_weight(params, n, x):
    """``W(n; x) = (1 - x + n^-2)^(alpha+1/2) (1 + x + n^-2)^(beta+1/2)``."""
    x = np.asarray(x, dtype=float)
    e = 1.0 / (float(n) ** 2)
    return (1 - x + e) ** (params.alpha + 0.5) * (1 + x + e) ** (params.beta + 0.5)


def arc_distance(x, y):
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    y = np.clip(np.asarray(y, dtype=float), -1.0, 1.0)
    return np.abs(np.arccos(x) - np.arccos(y))


def theta_grid(size):
    """``size`` points uniform in ``arccos x``, ascending in ``x``, endpoints included."""
    if size < 2:
        raise ParameterError("grid size must be at least 2")
    return np.cos(np.pi * (1.0 - np.arange(size) / (size - 1)))


# ---------------------------------------------------------------------------
# weighted measure of intervals


@functools.lru_cache(maxsize=16)
def _legendre(order):
    return np.polynomial.legendre.leggauss(order)


@functools.lru_cache(maxsize=64)
def _endpoint_rule(a, b, order):
    """Gauss rule for ``(1-u)^a (1+u)^b`` on [-1, 1], ascending nodes."""
    x, c = _gauss_jacobi_raw(a, b, order)
    return x[::-1].copy(), c[::-1].copy()


def _right_panel(params, a, order):
    """Nodes and weights on ``[a, 1]`` with the ``(1-x)^alpha`` factor absorbed."""
    u, c = _endpoint_rule(params.alpha, 0.0, order)
    half = (1 - np.asarray(a, dtype=float))[..., None] / 2
    x = 1 - half * (1 - u)
    return x, c * (1 + x) ** params.beta * half ** (params.alpha + 1)


def _left_panel(params, b, order):
    u, c = _endpoint_rule(0.0, params.beta, order)
    half = (1 + np.asarray(b, dtype=float))[..., None] / 2
    x = -1 + half * (1 + u)
    return x, c * (1 - x) ** params.alpha * half ** (params.beta + 1)


def _measure_to_right(params, a, order):
    """``int_a^1 w``."""
    return np.sum(_right_panel(params, a, order)[1], axis=-1)


def _measure_to_left(params, b, order):
    """``int_{-1}^b w``."""
    return np.sum(_left_panel(params, b, order)[1], axis=-1)


def _measure_interior(params, a, b, order):
    t, c = _legendre(order)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    x = (a + b) / 2 + (b - a) / 2 * t
    return np.sum(c * params.weight(x), axis=-1) * (b - a)[..., 0] / 2


def interval_measure(params, a, b, order=CELL_ORDER):
    """``mu([a, b]) = int_a^b w`` for arrays of intervals.

    Interior intervals use Gauss-Legendre; intervals touching, or close to,
    an endpoint are integrated with a Gauss-Jacobi pullback that absorbs the
    endpoint singularity of ``w``.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.zeros(a.shape)
    length = b - a
    near_right = (1 - b) < length
    near_left = ((1 + a) < length) & ~near_right
    full = near_right & ((1 + a) < length)
    inner = ~(near_right | near_left)
    if np.any(inner):
        out[inner] = _measure_interior(params, a[inner], b[inner], order)
    sel = near_right & ~full
    if np.any(sel):
        out[sel] = _measure_to_right(params, a[sel], order) - _measure_to_right(params, b[sel], order)
    if np.any(near_left):
        out[near_left] = _measure_to_left(params, b[near_left], order) - _measure_to_left(params, a[near_left], order)
    if np.any(full):
        mid = np.zeros(np.count_nonzero(full))
        aa, bb = a[full], b[full]
        mid = np.clip(mid, aa, bb)
        out[full] = (
            _measure_to_left(params, mid, order) - _measure_to_left(params, aa, order)
            + _measure_to_right(params, mid, order) - _measure_to_right(params, bb, order)
        )
    return out if out.ndim else float(out)


def ball_interval(y, r):
    """``B_y(r) = {x : d(x, y) <= r}`` as ``(left, right)``."""
    g = np.arccos(np.clip(y, -1, 1))
    return float(np.cos(min(g + r, np.pi))), float(np.cos(max(g - r, 0.0)))


def ball_measure(params, y, r):
    left, right = ball_interval(y, r)
    return interval_measure(params, left, right)


# ---------------------------------------------------------------------------
# composite rule used for L^p norms


@dataclass(frozen=True, eq=False)
class CompositeRule:
    """Panel-wise Gauss rule for ``int g w`` on [-1, 1].

    ``breakpoints`` are ascending panel ends; ``panel`` maps each node to its
    panel.  ``sup_points`` (nodes plus breakpoints) serve for sup norms.
    """

    params: WeightParams
    breakpoints: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    panel: np.ndarray = field(repr=False)
    order: int = 16

    @functools.cached_property
    def sup_points(self):
        return np.union1d(self.nodes, self.breakpoints)

    @property
    def panel_count(self):
        return self.breakpoints.size - 1

    def integrate(self, values):
        return np.asarray(values) @ self.weights

    def panel_integrals(self, values):
        starts = np.searchsorted(self.panel, np.arange(self.panel_count))
        return np.add.reduceat(np.asarray(values) * self.weights, starts)

    def panel_measures(self):
        return self.panel_integrals(np.ones(self.nodes.size))


def composite_rule(params, panels=64, order=16, extra_breakpoints=()):
    """Composite rule on ``panels`` theta-uniform panels plus any extra breakpoints."""
    return _composite_cached(params, int(panels), int(order), tuple(sorted(set(
        float(v) for v in np.ravel(extra_breakpoints) if -1 < v < 1
    ))))


@functools.lru_cache(maxsize=32)
def _composite_cached(params, panels, order, extra):
    bps = theta_grid(panels + 1)
    if extra:
        bps = np.union1d(bps, np.asarray(extra))
    bps[0], bps[-1] = -1.0, 1.0
    t, c = _legendre(order)
    a = bps[:-1, None]
    b = bps[1:, None]
    x = (a + b) / 2 + (b - a) / 2 * t
    wts = c * (b - a) / 2 * params.weight(x)
    # endpoint panels absorb the singular factor of w
    x[-1], wts[-1] = _right_panel(params, bps[-2], order)
    x[0], wts[0] = _left_panel(params, bps[1], order)
    panel = np.repeat(np.arange(bps.size - 1), order)
    rule = CompositeRule(params, bps, x.ravel(), wts.ravel(), panel, order)
    for arr in (rule.breakpoints, rule.nodes, rule.weights, rule.panel):
        arr.setflags(write=False)
    return rule


def default_rule(params, degree):
    """Composite rule adequate for ``|g|^p`` with ``g`` of the given degree."""
    panels = 32
    while panels < degree + 1:
        panels *= 2
    return composite_rule(params, panels=panels)


# ---------------------------------------------------------------------------
# levels


@dataclass(frozen=True, eq=False)
class LevelGeometry:
    level: int
    rule: QuadratureRule
    cells: np.ndarray = field(repr=False)
    cell_measures: np.ndarray = field(repr=False)

    @property
    def nodes(self):
        return self.rule.nodes

    @property
    def weights(self):
        return self.rule.weights

    @property
    def size(self):
        return self.rule.node_count


def level_geometry(params: WeightParams, j: int, cap: int = DEFAULT_LEVEL_CAP) -> LevelGeometry:
    if j < 0:
        raise ParameterError("level must be nonnegative")
    if j > cap:
        raise CapacityError(f"level {j} exceeds configured cap {cap}")
    return _level_cached(params, int(j))


@functools.lru_cache(maxsize=64)
def _level_cached(params, j):
    rule = gauss_jacobi(params, 2 ** (j + 1))
    x = rule.nodes
    mids = (x[:-1] + x[1:]) / 2
    right = np.concatenate([[1.0], mids])
    left = np.concatenate([mids, [-1.0]])
    cells = np.stack([left, right], axis=1)
    measures = interval_measure(params, left, right)
    cells.setflags(write=False)
    measures.setflags(write=False)
    return LevelGeometry(j, rule, cells, measures)


def christoffel_lower_probe(params, n, eps, grid):
    """Minimum over ``grid`` of ``Lambda_n(x) W(n; x)``.

    ``Lambda_n(x) = sum_{k=n}^{n + floor(eps n)} P_k(x)^2`` (classical normalization).
    """
    if n < 1 or n * eps < 1:
        raise ParameterError("need n >= 1/eps")
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    top = n + int(np.floor(eps * n))
    table = table_for(params, top)
    lam = np.zeros_like(grid)
    for k, pk in enumerate(table.iter_unnormalized(grid, top)):
        if k >= n:
            lam += pk * pk
    scaled = lam * companion_weight(params, n, grid)
    i = int(np.argmin(scaled))
    return {
        "probe": "christoffel_lower",
        "params": params.as_dict(),
        "n": n,
        "eps": eps,
        "min_scaled_value": float(scaled[i]),
        "argmin": float(grid[i]),
        "values": lam,
    }


# ---------------------------------------------------------------------------
# serialization


def geometry_to_dict(geom: LevelGeometry):
    return {
        "format": "jacobi-needlets/level-geometry",
        "version": FORMAT_VERSION,
        "params": geom.rule.params.as_dict(),
        "level": geom.level,
        "nodes": geom.nodes.tolist(),
        "weights": geom.weights.tolist(),
        "cells": geom.cells.tolist(),
        "measures": geom.cell_measures.tolist(),
    }


def geometry_from_dict(doc):
    if doc.get("version") != FORMAT_VERSION:
        raise ParameterError(f"unsupported geometry document version {doc.get('version')!r}")
    params = WeightParams(**doc["params"])
    nodes = np.asarray(doc["nodes"], dtype=float)
    rule = QuadratureRule(params, nodes.size, nodes, np.asarray(doc["weights"], dtype=float))
    return LevelGeometry(
        int(doc["level"]), rule, np.asarray(doc["cells"], dtype=float),
        np.asarray(doc["measures"], dtype=float),
    )
