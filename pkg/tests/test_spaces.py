"""Weighted L^p, Littlewood-Paley norms, sequence norms, maximal operator and E_n."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from jacobi_needlets import CapacityError, ParameterError, ShapeError, WeightParams
from jacobi_needlets.functions import equivalence_family, jacobi_function
from jacobi_needlets.jacobi import ExpansionCoefficients, random_polynomial
from jacobi_needlets.needlets import analyze, build_system
from jacobi_needlets.quadrature import composite_rule
from jacobi_needlets.spaces import (
    BallIndicator,
    SpaceSpec,
    approximation_norm,
    b_norm,
    best_approx,
    continuous_norm,
    discretize,
    equivalence_experiment,
    f_norm,
    lp_norm,
    maximal_comparator,
    maximal_operator,
    potential_norm,
    sequence_norm,
)

P_HALF = WeightParams(0.5, -0.3)


@pytest.fixture(scope="module")
def system():
    return build_system(P_HALF, "tight", 6)


def test_space_spec_validation():
    with pytest.raises(ParameterError):
        SpaceSpec("F", 1, math.inf, 2)
    with pytest.raises(ParameterError):
        SpaceSpec("H", 1, 2, 2)
    with pytest.raises(ParameterError):
        SpaceSpec("B", 1, 2, 0)
    with pytest.raises(ParameterError):
        SpaceSpec("B", 1, 2, 2, scale=3)
    assert SpaceSpec("B", 0.5, math.inf, 1, scale=2).label == "B~(s=0.5,p=inf,q=1)"


def test_lp_norm_of_one():
    assert_allclose(lp_norm(lambda x: np.ones_like(x), 1, params=WeightParams()), 2.0, rtol=1e-12)


@pytest.mark.parametrize("nu", [0, 3, 40])
def test_lp_norm_of_orthonormal_polynomial(nu):
    assert_allclose(lp_norm(jacobi_function(P_HALF, nu), 2), 1.0, rtol=1e-10)


@pytest.mark.parametrize("p", [0.5, 1, 2, 3.5, math.inf])
def test_lp_norm_homogeneous(p):
    f = random_polynomial(P_HALF, 12, np.random.default_rng(0))
    assert_allclose(lp_norm(f.scaled(-3.0), p), 3.0 * lp_norm(f, p), rtol=1e-12)


def test_lp_norm_validation():
    with pytest.raises(ParameterError):
        lp_norm(jacobi_function(P_HALF, 1), 0)
    with pytest.raises(ParameterError):
        discretize(np.cos)


def test_discretized_function_sup():
    g = discretize(jacobi_function(WeightParams(), 2))
    assert_allclose(g.sup(), math.sqrt(5 / 2), rtol=1e-12)


def test_maximal_of_constant():
    g = discretize(lambda x: np.ones_like(x), rule=composite_rule(P_HALF, panels=32))
    assert_allclose(maximal_operator(g, 1.0, np.array([-0.9, 0.0, 0.99])), 1.0, rtol=1e-12)


def test_maximal_of_ball_inside():
    ball = BallIndicator(P_HALF, 0.3, 0.2)
    assert_allclose(maximal_operator(ball, 2.0, 0.3), 1.0, rtol=1e-12)
    assert maximal_operator(ball, 1.0, -0.9) < 1


def test_maximal_validation():
    ball = BallIndicator(P_HALF, 0.3, 0.2)
    with pytest.raises(ParameterError):
        maximal_operator(ball, 0.0, 0.1)
    with pytest.raises(ParameterError):
        maximal_operator(ball, 1.0, 1.5)


def test_maximal_law_band():
    params = WeightParams(0, 0)
    rng = np.random.default_rng(11)
    ratios = []
    for _ in range(40):
        eta = rng.uniform(0, 1)
        eps = rng.uniform(0.01, 0.5)
        x = rng.uniform(-1, 1)
        t = math.exp(rng.uniform(math.log(0.5), math.log(2)))
        m = maximal_operator(BallIndicator(params, eta, eps), t, x, grid_size=256)
        ratios.append(m / maximal_comparator(params, eta, eps, x, t))
    assert max(ratios) / min(ratios) <= 50


def test_maximal_dominates_needlets(system):
    # |psi_xi| <= c M_1(mu(I)^-1/2 1_I) with one c across levels
    x = np.linspace(-0.98, 0.98, 41)
    per_level = []
    for j in (3, 4, 5, 6):
        geom = system.geometries[j]
        worst = 0.0
        for k in range(0, geom.size, max(1, geom.size // 6)):
            lo, hi = np.arccos(geom.cells[k, 1]), np.arccos(geom.cells[k, 0])
            ball = BallIndicator(system.params, math.cos((lo + hi) / 2), (hi - lo) / 2)
            m = maximal_operator(ball, 1.0, x, grid_size=128) / math.sqrt(geom.cell_measures[k])
            worst = max(worst, float(np.max(np.abs(system.psi_eval(j, k, x)) / m)))
        per_level.append(worst)
    assert max(per_level) / min(per_level) <= 50


def test_best_approximation():
    f = random_polynomial(P_HALF, 10, np.random.default_rng(2))
    assert best_approx(f, 10) == 0.0
    assert_allclose(best_approx(jacobi_function(P_HALF, 6), 5), 1.0)
    vals = [best_approx(f, n) for n in range(11)]
    assert np.all(np.diff(vals) <= 0)
    proxy = best_approx(f, 4, p=1.0)
    assert proxy.proxy and proxy > 0
    assert not best_approx(f, 4).proxy
    with pytest.raises(CapacityError):
        best_approx(ExpansionCoefficients(P_HALF, np.ones(5)), 6)
    with pytest.raises(ParameterError):
        best_approx(f, -1)


def test_f_norm_tight_equals_l2(system):
    for seed in range(3):
        f = random_polynomial(P_HALF, 32, np.random.default_rng(seed))
        assert_allclose(f_norm(f, SpaceSpec("F", 0, 2, 2), system), f.l2_norm(), rtol=1e-10)


def test_level_zero_only_for_constant(system):
    f = jacobi_function(P_HALF, 0)
    for fam in "FB":
        assert_allclose(continuous_norm(f, SpaceSpec(fam, 1.0, 2, 2), system), 1.0, rtol=1e-12)


@pytest.mark.parametrize("q", [1.0, 2.0, math.inf])
def test_b_norm_of_single_polynomial(system, q):
    nu, s = 11, 0.7
    a = system.pair.a_hat
    terms = np.array([2 ** (s * j) * a(nu / 2 ** (j - 1)) for j in range(1, 7)])
    expected = terms.max() if math.isinf(q) else np.sum(terms ** q) ** (1 / q)
    got = b_norm(jacobi_function(P_HALF, nu), SpaceSpec("B", s, 2, q), system)
    assert_allclose(got, expected, rtol=1e-10)


def test_family_mismatch(system):
    f = jacobi_function(P_HALF, 1)
    with pytest.raises(ParameterError):
        f_norm(f, SpaceSpec("B", 0, 2, 2), system)
    with pytest.raises(ParameterError):
        b_norm(f, SpaceSpec("F", 0, 2, 2), system)


def test_band_beyond_levels(system):
    with pytest.raises(CapacityError):
        f_norm(jacobi_function(P_HALF, 100), SpaceSpec("F", 0, 2, 2), system)


@pytest.mark.parametrize("fam", ["F", "B"])
def test_scales_agree_at_zero_smoothness(system, fam):
    f = random_polynomial(P_HALF, 24, np.random.default_rng(4))
    one = continuous_norm(f, SpaceSpec(fam, 0, 1.5, 2), system)
    two = continuous_norm(f, SpaceSpec(fam, 0, 1.5, 2, scale=2), system)
    assert one == two


@pytest.mark.parametrize("spec", [
    SpaceSpec("F", 1, 2, 2), SpaceSpec("B", 0.5, 1, 1, scale=2), SpaceSpec("B", 0.5, 2, 0.5),
    SpaceSpec("F", 0.5, 3, 0.5, scale=2),
])
def test_quasi_norm_axioms(system, spec):
    rng = np.random.default_rng(8)
    inv = 1 / min(spec.p, spec.q, 1.0)
    c = 2 ** (inv - 1)
    for _ in range(4):
        f = random_polynomial(P_HALF, 30, rng)
        g = random_polynomial(P_HALF, 30, rng)
        nf = continuous_norm(f, spec, system)
        assert_allclose(continuous_norm(f.scaled(-2.5), spec, system), 2.5 * nf, rtol=1e-12)
        total = continuous_norm(ExpansionCoefficients.polynomial(P_HALF, f.values + g.values), spec, system)
        assert total <= c * (nf + continuous_norm(g, spec, system)) * (1 + 1e-12)


@pytest.mark.parametrize("fam", ["F", "B"])
def test_embedding_scale_two(fam):
    """Target over source stays bounded when s - 1/p = s1 - 1/p1."""
    params = WeightParams(2, 0.5)
    s = build_system(params, "tight", 6)
    src, tgt = SpaceSpec(fam, 1.0, 1.0, 2.0, 2), SpaceSpec(fam, 0.5, 2.0, 2.0, 2)
    for _, f in equivalence_family(params, 6):
        assert continuous_norm(f, tgt, s) <= 50 * continuous_norm(f, src, s)


def _single(system, j, k):
    h = [np.zeros(system.size(i)) for i in system.levels]
    h[j][k] = 1.0
    return h


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_sequence_norm_single_term(system, p):
    j, k, s = 4, 9, 0.8
    mu = system.geometries[j].cell_measures[k]
    expected = 2 ** (j * s) * mu ** (1 / p - 0.5)
    h = _single(system, j, k)
    assert_allclose(sequence_norm(h, SpaceSpec("B", s, p, 2), system.geometries), expected, rtol=1e-12)
    assert_allclose(sequence_norm(h, SpaceSpec("F", s, p, p), system.geometries), expected, rtol=1e-10)


def test_sequence_norm_scale_two_single_term(system):
    j, k, s, p = 3, 2, 0.5, 2.0
    mu = system.geometries[j].cell_measures[k]
    got = sequence_norm(_single(system, j, k), SpaceSpec("B", s, p, 1, scale=2), system.geometries)
    assert_allclose(got, mu ** (-s + 1 / p - 0.5), rtol=1e-12)


def test_sequence_norm_zero_and_shape(system):
    zero = [np.zeros(system.size(j)) for j in system.levels]
    assert sequence_norm(zero, SpaceSpec("F", 1, 2, 2), system.geometries) == 0.0
    with pytest.raises(ShapeError):
        sequence_norm([np.zeros(3)], SpaceSpec("B", 1, 2, 2), system.geometries)


def test_sequence_matches_energy_at_zero_smoothness(system):
    f = random_polynomial(P_HALF, 32, np.random.default_rng(6))
    tree = analyze(system, f)
    b = sequence_norm(tree, SpaceSpec("B", 0, 2, 2), system.geometries)
    assert_allclose(b, np.linalg.norm(tree.flat()), rtol=1e-12)
    assert_allclose(b, f.l2_norm(), rtol=1e-8)


def test_potential_norm():
    params = P_HALF
    c0 = jacobi_function(params, 0)
    assert_allclose(potential_norm(c0, 1.7, 2), 1.0)
    assert_allclose(potential_norm(c0, 1.7, 1), lp_norm(c0, 1), rtol=1e-12)
    f = random_polynomial(params, 20, np.random.default_rng(3))
    spectral = np.sqrt(np.sum((np.arange(21) + 1.0) ** 3 * np.abs(f.values) ** 2))
    assert_allclose(potential_norm(f, 1.5, 2), spectral, rtol=1e-12)


def test_approximation_norm_of_polynomial():
    f = random_polynomial(P_HALF, 4, np.random.default_rng(1))
    # E_{2^j} vanishes for 2^j >= 4
    expected = f.l2_norm() + np.hypot(best_approx(f, 1), 2 * best_approx(f, 2))
    assert_allclose(approximation_norm(f, 1.0, 2, 2, 5), expected, rtol=1e-12)


def test_equivalence_experiment_identity(system):
    family = equivalence_family(P_HALF, 6)
    spec = SpaceSpec("F", 1, 2, 2)
    rep = equivalence_experiment(lambda f: f_norm(f, spec, system), lambda f: f_norm(f, spec, system),
                                 family, spec=spec)
    assert rep["band"] == [1.0, 1.0] and rep["pass"]
    assert len(rep["members"]) == 20


def test_equivalence_experiment_skips_zero():
    family = [("zero", 0.0), ("one", 1.0)]
    rep = equivalence_experiment(lambda f: f, lambda f: 1.0, family)
    assert len(rep["members"]) == 1
    assert rep["notes"] and rep["notes"][0].startswith("zero")


def test_cutoff_independence():
    params = P_HALF
    tight = build_system(params, "tight", 6)
    other = build_system(params, "calderon(additive)", 6)
    spec = SpaceSpec("F", 1, 2, 2)
    rep = equivalence_experiment(lambda f: f_norm(f, spec, tight), lambda f: f_norm(f, spec, other),
                                 equivalence_family(params, 6), spec=spec)
    assert rep["pass"] and np.isfinite(rep["width"])
