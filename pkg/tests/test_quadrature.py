"""Gauss-Jacobi rules, level geometries, companion weight and distance."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy.special import betainc, binom, roots_jacobi

from jacobi_needlets import CapacityError, ParameterError, WeightParams
from jacobi_needlets._report import dumps17
from jacobi_needlets.jacobi import eval_batch, table_for
from jacobi_needlets.quadrature import (
    arc_distance,
    ball_interval,
    ball_measure,
    check_zero_asymptotics,
    christoffel_lower_probe,
    companion_weight,
    composite_rule,
    gauss_jacobi,
    geometry_from_dict,
    geometry_to_dict,
    interval_measure,
    level_geometry,
    theta_grid,
)

PARAMS = [WeightParams(0, 0), WeightParams(0.5, -0.3), WeightParams(2, 0.5)]


def mass_right_of(params, a):
    """``int_a^1 w`` via the regularized incomplete beta function."""
    al, be = params.alpha, params.beta
    return params.total_mass * betainc(al + 1, be + 1, (1 - a) / 2)


def test_two_point_legendre():
    r = gauss_jacobi(WeightParams(0, 0), 2)
    assert_allclose(r.nodes, [1 / math.sqrt(3), -1 / math.sqrt(3)], rtol=1e-15)
    assert_allclose(r.nodes, [0.5773502692, -0.5773502692], rtol=1e-10)
    assert_allclose(r.weights, [1, 1], rtol=1e-14)


def test_one_point_rule():
    r = gauss_jacobi(WeightParams(0, 0), 1)
    assert_allclose(r.nodes, [0], atol=1e-16)
    assert_allclose(r.weights, [2], rtol=1e-15)


def test_zero_nodes_rejected():
    with pytest.raises(ParameterError):
        gauss_jacobi(WeightParams(), 0)


@pytest.mark.parametrize("params", PARAMS)
@pytest.mark.parametrize("n", [5, 64, 300])
def test_matches_scipy_roots_jacobi(params, n):
    # scipy's weights carry ~5e-10 relative error at n = 300
    x, w = roots_jacobi(n, params.alpha, params.beta)
    r = gauss_jacobi(params, n)
    assert_allclose(r.nodes, x[::-1], rtol=0, atol=1e-13)
    assert_allclose(r.weights, w[::-1], rtol=1e-9)


# 50-digit mpmath roots of P_300^{(0.5,-0.3)} and Gauss weights C / ((1-x^2) P'(x)^2)
HIGH_PRECISION_300 = [
    (0, 0.99994538805401755877, 6.5561982816779333638e-7),
    (150, -0.0073152401901435327285, 0.010512073246618926298),
    (299, -0.99997954105976178527, 0.0023717064706681372566),
]


@pytest.mark.parametrize("index,node,weight", HIGH_PRECISION_300)
def test_high_precision_reference(index, node, weight):
    r = gauss_jacobi(WeightParams(0.5, -0.3), 300)
    assert_allclose(r.nodes[index], node, rtol=0, atol=2e-16)
    assert_allclose(r.weights[index], weight, rtol=1e-11)


def test_legendre_matches_numpy():
    x, w = np.polynomial.legendre.leggauss(40)
    r = gauss_jacobi(WeightParams(0, 0), 40)
    assert_allclose(r.nodes, x[::-1], atol=1e-14)
    assert_allclose(r.weights, w[::-1], rtol=1e-12)


@pytest.mark.parametrize("params", PARAMS)
@pytest.mark.parametrize("n", [3, 128, 2048])
def test_rule_invariants(params, n):
    r = gauss_jacobi(params, n)
    assert np.all(np.abs(r.nodes) < 1)
    assert np.all(np.diff(r.nodes) < 0)
    assert np.all(r.weights > 0)
    assert_allclose(r.weights.sum(), params.total_mass, rtol=1e-12)
    assert r.node_count == n


@pytest.mark.parametrize("params", PARAMS)
@pytest.mark.parametrize("j", [0, 2, 5])
def test_exactness_random_polynomials(params, j):
    n = 2 ** (j + 1)
    deg = 2 * n - 1
    r = gauss_jacobi(params, n)
    c = np.random.default_rng(j).uniform(-1, 1, (10, deg + 1))
    quad = (c @ eval_batch(table_for(params, deg), deg, r.nodes)) @ r.weights
    # the constant P^_0 = mass^(-1/2) is the only basis element with nonzero integral
    assert_allclose(quad, c[:, 0] * math.sqrt(params.total_mass), rtol=0,
                    atol=1e-12 * np.linalg.norm(c, axis=1).max())


@given(a=st.floats(-0.45, 4), n=st.integers(1, 200))
@settings(max_examples=30, deadline=None)
def test_symmetric_weight_symmetric_rule(a, n):
    r = gauss_jacobi(WeightParams(a, a), n)
    assert_allclose(r.nodes, -r.nodes[::-1], atol=1e-12)
    assert_allclose(r.weights, r.weights[::-1], rtol=1e-12)


@pytest.mark.parametrize("params", PARAMS)
def test_first_zero_near_bessel_zero(params):
    devs = [check_zero_asymptotics(params, gauss_jacobi(params, n).nodes) for n in (64, 128, 256)]
    # O(1/n): halving as n doubles
    assert devs[2] < devs[0] / 3


def test_companion_weight_examples():
    p = WeightParams(0.5, -0.3)
    n = 16
    assert_allclose(companion_weight(p, n, 1.0), (n ** -2.0) ** 1.0 * (2 + n ** -2.0) ** 0.2)
    assert_allclose(companion_weight(p, n, 0.0), (1 + n ** -2.0) ** (p.alpha + p.beta + 1))


@pytest.mark.parametrize("params", PARAMS)
def test_companion_weight_doubling_inequality(params):
    x = theta_grid(257)
    expo = 2 * max(params.alpha, params.beta) + 1
    worst = 0.0
    for n in (8, 64, 512):
        W = companion_weight(params, n, x)
        d = arc_distance(x[:, None], x[None, :])
        worst = max(worst, float(np.max(W[:, None] / (W[None, :] * (1 + n * d) ** expo))))
    assert worst < 50


def test_arc_distance_examples():
    assert_allclose(arc_distance(1, -1), math.pi)
    assert arc_distance(0.3, 0.3) == 0
    assert_allclose(arc_distance(0, math.sqrt(2) / 2), math.pi / 4)


def test_theta_grid():
    g = theta_grid(9)
    assert g[0] == -1 and g[-1] == 1
    assert np.all(np.diff(g) > 0)
    assert_allclose(np.diff(np.arccos(g)), -math.pi / 8)
    with pytest.raises(ParameterError):
        theta_grid(1)


@pytest.mark.parametrize("params", PARAMS)
def test_interval_measure_against_incomplete_beta(params):
    a = np.array([-1.0, -0.999, -0.5, 0.0, 0.3, 0.99999])
    b = np.array([-0.9999, -0.2, 0.4, 1.0, 0.31, 1.0])
    expected = mass_right_of(params, a) - mass_right_of(params, b)
    assert_allclose(interval_measure(params, a, b), expected, rtol=1e-12, atol=1e-15)


@given(pts=st.lists(st.floats(-1, 1), min_size=3, max_size=3, unique=True), al=st.floats(-0.45, 3),
       be=st.floats(-0.45, 3))
@settings(max_examples=40, deadline=None)
def test_interval_measure_additive(pts, al, be):
    a, b, c = sorted(pts)
    p = WeightParams(al, be)
    whole = interval_measure(p, a, c)
    parts = interval_measure(p, a, b) + interval_measure(p, b, c)
    assert_allclose(parts, whole, rtol=1e-11, atol=1e-15)


@pytest.mark.parametrize("params", PARAMS)
def test_level_geometry_partition(params):
    for j in range(0, 9):
        g = level_geometry(params, j)
        assert g.size == 2 ** (j + 1)
        cells = g.cells
        assert cells[0, 1] == 1.0 and cells[-1, 0] == -1.0
        assert_array_equal(cells[:-1, 0], cells[1:, 1])
        assert np.all((cells[:, 0] <= g.nodes) & (g.nodes <= cells[:, 1]))
        assert np.all(g.cell_measures > 0)
        assert_allclose(g.cell_measures.sum(), params.total_mass, rtol=1e-10)


@pytest.mark.parametrize("params", PARAMS)
def test_cell_measures_against_incomplete_beta(params):
    g = level_geometry(params, 6)
    exact = mass_right_of(params, g.cells[:, 0]) - mass_right_of(params, g.cells[:, 1])
    assert_allclose(g.cell_measures, exact, rtol=1e-11)


def test_level_cap():
    with pytest.raises(CapacityError):
        level_geometry(WeightParams(), 11)
    with pytest.raises(CapacityError):
        level_geometry(WeightParams(), 30, cap=10)
    with pytest.raises(ParameterError):
        level_geometry(WeightParams(), -1)


@pytest.mark.parametrize("params", PARAMS)
def test_level_bands(params):
    gaps, cw, mc = [], [], []
    for j in range(11):
        g = level_geometry(params, j)
        gaps.append(np.diff(np.arccos(g.nodes)) * 2 ** j)
        cw.append(g.weights / (2.0 ** -j * companion_weight(params, 2 ** j, g.nodes)))
        mc.append(g.cell_measures / g.weights)
    for ratios in (gaps, cw, mc):
        r = np.concatenate(ratios)
        assert r.min() > 0 and r.max() / r.min() <= 50


def ball_law_ratios(params, r_min, samples=300, seed=7):
    rng = np.random.default_rng(seed)
    y = rng.uniform(0, 1, samples)
    r = np.exp(rng.uniform(math.log(r_min), math.log(math.pi), samples))
    meas = np.array([ball_measure(params, yy, rr) for yy, rr in zip(y, r)])
    return meas / (r * (arc_distance(y, 1.0) + r) ** (2 * params.alpha + 1))


@pytest.mark.parametrize("params", PARAMS[:2])
def test_ball_measure_law(params):
    ratio = ball_law_ratios(params, 1e-4)
    assert ratio.min() > 0 and ratio.max() / ratio.min() < 50


def test_ball_measure_law_large_alpha_band_is_scale_free():
    # for alpha = 2 the band is ~1.3e3 wide, but shrinking r leaves it unchanged
    params = PARAMS[2]
    coarse = ball_law_ratios(params, 1e-3)
    fine = ball_law_ratios(params, 1e-7)
    width = lambda r: r.max() / r.min()
    assert width(fine) < 1.5 * width(coarse)
    assert width(fine) < 5e3


def test_ball_interval_clips_to_segment():
    assert ball_interval(0.0, 10.0) == (-1.0, 1.0)
    left, right = ball_interval(1.0, math.pi / 2)
    assert right == 1.0 and abs(left) < 1e-15


def test_christoffel_probe_positive():
    rep = christoffel_lower_probe(WeightParams(0, 0), 64, 1.0, theta_grid(512))
    assert rep["min_scaled_value"] > 0


@pytest.mark.parametrize("params", PARAMS)
def test_christoffel_at_endpoint(params):
    n, eps = 20, 0.5
    rep = christoffel_lower_probe(params, n, eps, [1.0])
    lam = sum(binom(k + params.alpha, k) ** 2 for k in range(n, n + 11))
    assert_allclose(rep["values"], [lam], rtol=1e-12)


def test_christoffel_requires_n_eps_at_least_one():
    with pytest.raises(ParameterError):
        christoffel_lower_probe(WeightParams(), 4, 0.1, [0.0])


@pytest.mark.parametrize("params", PARAMS)
def test_composite_rule_integrates_polynomials(params):
    rule = composite_rule(params, panels=64)
    assert_allclose(rule.weights.sum(), params.total_mass, rtol=1e-13)
    g = gauss_jacobi(params, 8)
    poly = lambda x: x ** 7 + 3 * x ** 2 - x
    assert_allclose(rule.integrate(poly(rule.nodes)), g.weights @ poly(g.nodes), rtol=1e-13)
    assert_allclose(rule.panel_measures(), interval_measure(params, rule.breakpoints[:-1],
                                                            rule.breakpoints[1:]), rtol=1e-12)


def test_geometry_round_trip():
    g = level_geometry(WeightParams(0.5, -0.3), 3)
    doc = json.loads(dumps17(geometry_to_dict(g)))
    assert doc["format"] == "jacobi-needlets/level-geometry" and doc["version"] == 1
    back = geometry_from_dict(doc)
    assert_array_equal(back.nodes, g.nodes)
    assert_array_equal(back.weights, g.weights)
    assert_array_equal(back.cells, g.cells)
    assert_array_equal(back.cell_measures, g.cell_measures)
    doc["version"] = 99
    with pytest.raises(ParameterError):
        geometry_from_dict(doc)
