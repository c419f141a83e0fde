"""Jacobi polynomials: recurrence, normalization, expansions, Nikolski probe."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.special import binom, eval_jacobi

from jacobi_needlets import (
    AccuracyError,
    CapacityError,
    ParameterError,
    WeightParams,
    build_recurrence,
    eval_batch,
    eval_normalized,
    eval_unnormalized,
    expand,
)
from jacobi_needlets.jacobi import (
    ExpansionCoefficients,
    eval_series,
    eval_with_derivative,
    nikolski_probe,
    random_polynomial,
    table_for,
)
from jacobi_needlets.quadrature import gauss_jacobi

PARAMS = [WeightParams(0, 0), WeightParams(0.5, -0.3), WeightParams(2, 0.5), WeightParams(-0.4, 1.5)]

# frozen scipy.integrate.quad values of int P_n^2 w
H5_LEGENDRE = 0.18181818181818177
H3_HALF_MINUS = 0.33260136173071914


def explicit_jacobi(n, a, b, x):
    """Closed-form sum for ``P_n^{(a,b)}``, independent of any recurrence."""
    x = np.asarray(x, dtype=float)
    return sum(
        binom(n + a, n - s) * binom(n + b, s) * ((x - 1) / 2) ** s * ((x + 1) / 2) ** (n - s)
        for s in range(n + 1)
    )


def test_weight_params_validation():
    with pytest.raises(ParameterError, match="alpha must exceed -1/2"):
        WeightParams(-0.6, 0)
    with pytest.raises(ParameterError, match="beta must exceed -1/2"):
        WeightParams(0, -0.5)
    with pytest.raises(ParameterError):
        WeightParams(float("nan"), 0)


@pytest.mark.parametrize("a,b", [(0, 0), (0.5, -0.3), (2, 0.5)])
def test_total_mass(a, b):
    expected = 2 ** (a + b + 1) * math.gamma(a + 1) * math.gamma(b + 1) / math.gamma(a + b + 2)
    assert_allclose(WeightParams(a, b).total_mass, expected, rtol=1e-14)


def test_h_constants_legendre():
    t = build_recurrence(WeightParams(0, 0), 5)
    assert_allclose(t.h_consts[0], 2.0, rtol=1e-15)
    assert_allclose(t.h_consts[5], 2 / 11, rtol=1e-14)
    assert_allclose(t.h_consts[5], H5_LEGENDRE, rtol=1e-12)


def test_h_constant_matches_numerical_integral():
    t = build_recurrence(WeightParams(0.5, -0.3), 3)
    assert_allclose(t.h_consts[3], H3_HALF_MINUS, rtol=1e-10)


@pytest.mark.parametrize("params", PARAMS[:3])
def test_h_times_n_band(params):
    t = build_recurrence(params, 4096)
    n = np.arange(1, 4097)
    r = t.h_consts[1:] * (n + 1)
    assert r.max() / r.min() < 3
    assert np.all(np.isfinite(t.norm_factors))


def test_build_recurrence_rejects_negative_degree():
    with pytest.raises(ParameterError):
        build_recurrence(WeightParams(), -1)


def test_normalized_values():
    t = build_recurrence(WeightParams(0, 0), 8)
    assert_allclose(eval_normalized(t, 0, 0.3), 1 / math.sqrt(2), rtol=1e-15)
    assert eval_normalized(t, 1, 0.0) == 0.0


def test_out_of_range_degree():
    t = build_recurrence(WeightParams(), 4)
    with pytest.raises(CapacityError):
        eval_normalized(t, 5, 0.1)
    with pytest.raises(CapacityError):
        eval_batch(t, 7, [0.0])


@pytest.mark.parametrize("params", PARAMS)
@pytest.mark.parametrize("n", range(5))
def test_recurrence_matches_explicit_sum(params, n):
    x = np.linspace(-1, 1, 41)
    t = build_recurrence(params, 4)
    assert_allclose(eval_unnormalized(t, n, x), explicit_jacobi(n, params.alpha, params.beta, x),
                    rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("params", PARAMS)
def test_matches_scipy_eval_jacobi(params):
    x = np.cos(np.linspace(0, np.pi, 57))
    t = table_for(params, 60)
    for n in (7, 23, 60):
        assert_allclose(eval_unnormalized(t, n, x), eval_jacobi(n, params.alpha, params.beta, x),
                        rtol=1e-10, atol=1e-10 * abs(eval_jacobi(n, params.alpha, params.beta, 1.0)))


@pytest.mark.parametrize("params", PARAMS)
def test_endpoint_normalization(params):
    t = build_recurrence(params, 30)
    for n in (0, 1, 4, 17, 30):
        assert_allclose(eval_unnormalized(t, n, 1.0), binom(n + params.alpha, n), rtol=1e-12)


@given(x=st.floats(-1, 1), a=st.floats(-0.45, 3), n=st.integers(0, 40))
@settings(max_examples=60, deadline=None)
def test_symmetry_reflection(x, a, n):
    params = WeightParams(a, a)
    t = build_recurrence(params, 40)
    assert_allclose(eval_normalized(t, n, -x), (-1) ** n * eval_normalized(t, n, x),
                    rtol=1e-12, atol=1e-12)


def test_batch_single_point():
    t = build_recurrence(WeightParams(0.5, -0.3), 0)
    out = eval_batch(t, 0, [0.2])
    assert out.shape == (1, 1)
    assert_allclose(out[0, 0], t.h_consts[0] ** -0.5)


@pytest.mark.parametrize("params", PARAMS[:3])
def test_batch_and_series_consistency(params):
    t = table_for(params, 50)
    x = np.linspace(-1, 1, 13)
    B = eval_batch(t, 50, x)
    for n in (0, 3, 50):
        assert_allclose(B[n], eval_normalized(t, n, x), rtol=1e-13, atol=1e-13)
    c = np.random.default_rng(1).standard_normal(51)
    assert_allclose(eval_series(t, c, x), c @ B, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("params", PARAMS[:3])
def test_gram_matrix_identity(params):
    n = 80
    rule = gauss_jacobi(params, n + 1)
    B = eval_batch(table_for(params, n), n, rule.nodes)
    G = (B * rule.weights) @ B.T
    assert_allclose(G, np.eye(n + 1), atol=1e-10)


def test_derivative_matches_finite_difference():
    t = table_for(WeightParams(0.5, -0.3), 12)
    x = np.linspace(-0.9, 0.9, 7)
    p, dp = eval_with_derivative(t, 12, x)
    h = 1e-6
    fd = (eval_unnormalized(t, 12, x + h) - eval_unnormalized(t, 12, x - h)) / (2 * h)
    assert_allclose(p, eval_unnormalized(t, 12, x))
    assert_allclose(dp, fd, rtol=1e-6)


def test_expand_orthonormal_polynomial():
    params = WeightParams(0.5, -0.3)
    t = table_for(params, 5)
    f = lambda x: eval_normalized(t, 3, x)
    c = expand(f, t, 5, 6)
    assert_allclose(c.values, [0, 0, 0, 1, 0, 0], atol=1e-12)
    assert c.degree_max == 5 and c.values.size == 6


def test_expand_zero_and_square():
    params = WeightParams(0, 0)
    t = table_for(params, 6)
    assert not np.any(expand(lambda x: np.zeros_like(x), t, 6, 8).values)
    c = expand(lambda x: x * x, t, 6, 8)
    assert_allclose(c.values[0].real, 0.4714045208, rtol=1e-9)
    assert_allclose(c.values[0].real, 0.4714045207910317, rtol=1e-13)
    assert_allclose(c.values[1::2], 0, atol=1e-14)


def test_expand_preconditions():
    t = table_for(WeightParams(), 10)
    with pytest.raises(ParameterError):
        expand(np.cos, t, 10, 10)
    with pytest.raises(AccuracyError):
        expand(lambda x: x ** 12, t, 10, 11, declared_degree=12)
    exact = expand(lambda x: x ** 12, t, 10, 12, declared_degree=12)
    assert not exact.band_limited


def test_expansion_padding_rules():
    params = WeightParams()
    c = ExpansionCoefficients(params, [1.0, 2.0])
    with pytest.raises(CapacityError):
        c.padded(4)
    p = ExpansionCoefficients.polynomial(params, [1.0, 2.0]).padded(4)
    assert_allclose(p.values, [1, 2, 0, 0, 0])
    assert p.band_limited
    assert c.padded(0).values.size == 1


def test_random_polynomial_is_seeded():
    params = WeightParams(0.5, -0.3)
    a = random_polynomial(params, 10, np.random.default_rng(3))
    b = random_polynomial(params, 10, np.random.default_rng(3))
    assert_allclose(a.values, b.values)
    assert np.all(np.abs(a.values) <= 1) and a.values.size == 11


def test_nikolski_equal_exponents_give_one():
    params = WeightParams(0.5, -0.3)
    rep = nikolski_probe(table_for(params, 1), 1, 2.0, 2.0, trials=3)
    assert_allclose(rep["max_ratio"], 1.0, rtol=1e-12)
    assert rep["bound_exponent"] == 0.0


def test_nikolski_bounded_ratio_legendre():
    params = WeightParams(0, 0)
    vals = [nikolski_probe(table_for(params, n), n, 2.0, math.inf, 20)["max_ratio"] for n in (8, 32, 128)]
    assert np.all(np.isfinite(vals))
    assert max(vals) < 1.0


def test_nikolski_rejects_bad_exponents():
    t = table_for(WeightParams(), 8)
    with pytest.raises(ParameterError):
        nikolski_probe(t, 8, 2.0, 1.0, 2)
