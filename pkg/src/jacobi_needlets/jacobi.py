"""Normalized Jacobi polynomials on [-1, 1].

The classical polynomials :math:`P_n^{(\\alpha,\\beta)}` (normalized by
:math:`P_n(1) = \\binom{n+\\alpha}{n}`) are generated with the three-term
recurrence and then scaled by :math:`h_n^{-1/2}` so that the resulting family
is orthonormal with respect to :math:`w(x) = (1-x)^\\alpha (1+x)^\\beta`.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, gammaln

from .errors import AccuracyError, CapacityError, ParameterError


@dataclass(frozen=True)
class WeightParams:
    """The exponents of the Jacobi weight ``(1-x)**alpha * (1+x)**beta``."""

    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= -0.5:
                raise ParameterError(f"{name} must exceed -1/2")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    def weight(self, x):
        x = np.asarray(x, dtype=float)
        return (1.0 - x) ** self.alpha * (1.0 + x) ** self.beta

    @property
    def total_mass(self):
        """``int_{-1}^{1} w(x) dx``."""
        a, b = self.alpha, self.beta
        return float(np.exp((a + b + 1) * np.log(2.0) + betaln(a + 1, b + 1)))

    def swapped(self):
        return WeightParams(self.beta, self.alpha)

    def as_dict(self):
        return {"alpha": self.alpha, "beta": self.beta}


def log_h(alpha, beta, n):
    """Logarithm of the squared norm ``h_n`` of the unnormalized polynomial."""
    n = np.asarray(n, dtype=float)
    ab = alpha + beta
    return (
        (ab + 1) * np.log(2.0)
        - np.log(2 * n + ab + 1)
        + gammaln(n + alpha + 1)
        + gammaln(n + beta + 1)
        - gammaln(n + ab + 1)
        - gammaln(n + 1)
    )


@dataclass(frozen=True, eq=False)
class RecurrenceTable:
    """Recurrence ``P_n = (a_n x + b_n) P_{n-1} - c_n P_{n-2}`` plus norms.

    Entry 0 of the coefficient arrays is unused.
    """

    params: WeightParams
    degree_max: int
    a_coeffs: np.ndarray = field(repr=False)
    b_coeffs: np.ndarray = field(repr=False)
    c_coeffs: np.ndarray = field(repr=False)
    h_consts: np.ndarray = field(repr=False)
    norm_factors: np.ndarray = field(repr=False)

    def _check(self, n):
        if n < 0 or n > self.degree_max:
            raise CapacityError(
                f"degree {n} outside table range 0..{self.degree_max}"
            )

    def iter_unnormalized(self, x, n_max):
        """Yield ``P_0(x), ..., P_{n_max}(x)`` one at a time."""
        self._check(n_max)
        x = np.asarray(x, dtype=float)
        p_prev = np.zeros_like(x)
        p = np.ones_like(x)
        yield p
        for n in range(1, n_max + 1):
            p, p_prev = (self.a_coeffs[n] * x + self.b_coeffs[n]) * p - self.c_coeffs[n] * p_prev, p
            yield p


def build_recurrence(params: WeightParams, degree_max: int) -> RecurrenceTable:
    if degree_max < 0:
        raise ParameterError("degree_max must be nonnegative")
    a_, b_ = params.alpha, params.beta
    ab = a_ + b_
    size = degree_max + 1
    a = np.zeros(size)
    b = np.zeros(size)
    c = np.zeros(size)
    if degree_max >= 1:
        a[1] = (ab + 2) / 2
        b[1] = (a_ - b_) / 2
    n = np.arange(2, size, dtype=float)
    if n.size:
        d = 2 * n * (n + ab) * (2 * n + ab - 2)
        a[2:] = (2 * n + ab - 1) * (2 * n + ab) * (2 * n + ab - 2) / d
        b[2:] = (2 * n + ab - 1) * (a_ * a_ - b_ * b_) / d
        c[2:] = 2 * (n + a_ - 1) * (n + b_ - 1) * (2 * n + ab) / d
    lh = log_h(a_, b_, np.arange(size))
    table = RecurrenceTable(
        params=params,
        degree_max=int(degree_max),
        a_coeffs=a,
        b_coeffs=b,
        c_coeffs=c,
        h_consts=np.exp(lh),
        norm_factors=np.exp(-0.5 * lh),
    )
    for arr in (a, b, c, table.h_consts, table.norm_factors):
        arr.setflags(write=False)
    return table


@functools.lru_cache(maxsize=64)
def _cached_table(params, size):
    return build_recurrence(params, size)


def table_for(params: WeightParams, degree: int) -> RecurrenceTable:
    """Shared table covering at least ``degree`` (sizes rounded up to 2**k)."""
    size = 64
    while size < degree:
        size *= 2
    return _cached_table(params, size)


def eval_unnormalized(table, n, x):
    """Classical ``P_n^{(alpha, beta)}(x)`` with ``P_n(1) = binom(n+alpha, n)``."""
    for k, p in enumerate(table.iter_unnormalized(x, n)):
        if k == n:
            return p if np.ndim(p) else float(p)


def eval_normalized(table, n, x):
    """Orthonormal ``h_n**-1/2 P_n(x)``."""
    return eval_unnormalized(table, n, x) * table.norm_factors[n]


def eval_batch(table, n_max, points):
    """Matrix of orthonormal values, row ``n`` holding ``P^_n`` at ``points``."""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    out = np.empty((n_max + 1, points.size))
    for n, p in enumerate(table.iter_unnormalized(points, n_max)):
        out[n] = p
    out *= table.norm_factors[: n_max + 1, None]
    return out


def eval_series(table, coeffs, points):
    """Evaluate ``sum_n coeffs[n] P^_n(x)`` without storing the basis."""
    coeffs = np.asarray(coeffs)
    points = np.asarray(points, dtype=float)
    n_max = coeffs.size - 1
    if n_max < 0:
        return np.zeros(points.shape, dtype=coeffs.dtype)
    acc = np.zeros(points.shape, dtype=np.result_type(coeffs, float))
    scaled = coeffs * table.norm_factors[: n_max + 1]
    for n, p in enumerate(table.iter_unnormalized(points, n_max)):
        if scaled[n] != 0:
            acc += scaled[n] * p
    return acc


def eval_with_derivative(table, n, x):
    """``P_n(x)`` and ``P_n'(x)`` for interior points (used by Newton steps)."""
    a, b = table.params.alpha, table.params.beta
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x), np.zeros_like(x)
    prev = None
    cur = None
    for k, p in enumerate(table.iter_unnormalized(x, n)):
        prev, cur = cur, p
    s = 2 * n + a + b
    deriv = (n * ((a - b) - s * x) * cur + 2 * (n + a) * (n + b) * prev) / (s * (1 - x * x))
    return cur, deriv


@dataclass
class ExpansionCoefficients:
    """Coefficients ``a_nu(f) = <f, P^_nu>`` of a function in the orthonormal basis.

    ``band_limited`` marks expansions that are exact: every coefficient past
    ``degree_max`` is known to vanish, so consumers may zero-pad freely.
    """

    params: WeightParams
    values: np.ndarray
    degree_max: int = -1
    quadrature_degree_used: int = 0
    band_limited: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).ravel()
        self.degree_max = self.values.size - 1

    @classmethod
    def polynomial(cls, params, values):
        return cls(params, values, band_limited=True)

    @property
    def real(self):
        return bool(np.all(self.values.imag == 0))

    def padded(self, degree):
        """Return a copy with ``degree + 1`` coefficients.

        Truncating is always allowed; extending requires ``band_limited``.
        """
        if degree + 1 <= self.values.size:
            vals = self.values[: degree + 1]
            limited = self.band_limited and not np.any(self.values[degree + 1:])
        else:
            if not self.band_limited:
                raise CapacityError(
                    f"expansion known only up to degree {self.degree_max}, "
                    f"degree {degree} requested"
                )
            vals = np.concatenate([self.values, np.zeros(degree + 1 - self.values.size)])
            limited = True
        return ExpansionCoefficients(
            self.params, vals, quadrature_degree_used=self.quadrature_degree_used,
            band_limited=limited,
        )

    def effective_degree(self):
        nz = np.flatnonzero(self.values)
        return int(nz[-1]) if nz.size else 0

    def __call__(self, x):
        table = table_for(self.params, self.degree_max)
        vals = eval_series(table, self.values, x)
        if self.real:
            vals = vals.real
        return vals

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    def scaled(self, factor):
        return ExpansionCoefficients(
            self.params, self.values * factor, quadrature_degree_used=self.quadrature_degree_used,
            band_limited=self.band_limited,
        )

    def __sub__(self, other):
        n = max(self.values.size, other.values.size)
        a = np.zeros(n, dtype=complex)
        a[: self.values.size] = self.values
        a[: other.values.size] -= other.values
        return ExpansionCoefficients(
            self.params, a, band_limited=self.band_limited and other.band_limited
        )


def expand(f, table, degree_max, quadrature_degree, declared_degree=None):
    """Gauss-Jacobi projection of ``f`` onto ``P^_0..P^_degree_max``.

    ``f`` must accept an array of points.  If ``declared_degree`` is given,
    ``f`` is taken to be a polynomial of that degree and the result is exact
    (an ``AccuracyError`` is raised when the rule is too small for it).
    """
    from .quadrature import gauss_jacobi

    if degree_max > table.degree_max:
        raise CapacityError(f"table covers degree {table.degree_max}, need {degree_max}")
    if quadrature_degree < degree_max + 1:
        raise ParameterError("quadrature_degree must be at least degree_max + 1")
    if declared_degree is not None and declared_degree + degree_max > 2 * quadrature_degree - 1:
        raise AccuracyError(
            f"{quadrature_degree}-point rule is not exact for degree "
            f"{declared_degree} inputs against degree {degree_max}"
        )
    rule = gauss_jacobi(table.params, quadrature_degree)
    values = np.asarray(f(rule.nodes))
    if values.shape != rule.nodes.shape:
        values = np.broadcast_to(values, rule.nodes.shape)
    basis = eval_batch(table, degree_max, rule.nodes)
    coeffs = basis @ (rule.weights * values)
    return ExpansionCoefficients(
        table.params,
        coeffs,
        quadrature_degree_used=quadrature_degree,
        band_limited=declared_degree is not None and declared_degree <= degree_max,
    )


def random_polynomial(params, n, rng):
    """Coefficients i.i.d. uniform on [-1, 1] in the orthonormal basis."""
    return ExpansionCoefficients.polynomial(params, rng.uniform(-1.0, 1.0, n + 1))


def nikolski_exponent(params):
    """Growth exponent multiplying ``1/q - 1/p`` in the unweighted inequality."""
    return 2.0 + 2.0 * min(0.0, max(params.alpha, params.beta))


def nikolski_probe(table, n, q, p, trials, seed=0, s=0.0):
    """Ratios of Nikolski type on random polynomials of degree ``n``.

    Returns the maximum over ``trials`` of the unweighted ratio
    ``||g||_p / (n**(e (1/q - 1/p)) ||g||_q)`` and of the weighted ratio
    ``||W^s g||_p / (n**(1/q - 1/p) ||W^(s + 1/p - 1/q) g||_q``.
    """
    from .quadrature import companion_weight, composite_rule
    from .spaces import DiscretizedFunction, lp_norm

    if q <= 0 or p < q:
        raise ParameterError("need 0 < q <= p")
    if n < 1:
        raise ParameterError("n must be positive")
    params = table.params
    rule = composite_rule(params, panels=max(32, 2 * n))
    rng = np.random.default_rng(seed)
    inv = (1.0 / q) - (0.0 if np.isinf(p) else 1.0 / p)
    exponent = nikolski_exponent(params)
    w_nodes = companion_weight(params, n, rule.nodes)
    w_sup = companion_weight(params, n, rule.sup_points)
    basis = eval_batch(table, n, rule.nodes)
    basis_sup = eval_batch(table, n, rule.sup_points)
    t_exp = s + (0.0 if np.isinf(p) else 1.0 / p) - 1.0 / q
    ratios = []
    weighted = []
    for _ in range(trials):
        c = rng.uniform(-1.0, 1.0, n + 1)
        g = DiscretizedFunction(rule, c @ basis, c @ basis_sup)
        num = lp_norm(g, p)
        den = lp_norm(g, q)
        ratios.append(num / (n ** (exponent * inv) * den))
        gw_num = DiscretizedFunction(rule, g.values * w_nodes ** s, g.sup_values * w_sup ** s)
        gw_den = DiscretizedFunction(rule, g.values * w_nodes ** t_exp, g.sup_values * w_sup ** t_exp)
        weighted.append(lp_norm(gw_num, p) / (n ** inv * lp_norm(gw_den, q)))
    return {
        "n": n,
        "p": p,
        "q": q,
        "s": s,
        "trials": trials,
        "seed": seed,
        "bound_exponent": exponent * inv,
        "max_ratio": float(np.max(ratios)),
        "weighted_exponent": inv,
        "weighted_max_ratio": float(np.max(weighted)),
    }
