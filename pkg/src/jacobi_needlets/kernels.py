"""Smoothed spectral kernels ``L_n(x, y) = sum_nu a^(nu/n) P^_nu(x) P^_nu(y)``.

Kernels are stored by their spectral multipliers and never materialized as
matrices unless a probe asks for one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ParameterError
from .jacobi import ExpansionCoefficients, WeightParams, eval_batch, eval_series, table_for
from .quadrature import arc_distance, companion_weight, composite_rule, theta_grid

DEFAULT_PROBE_GRID = 512
PROFILE_POINTS = (1.0, 0.5, 0.0)


@dataclass(frozen=True, eq=False)
class SpectralKernel:
    """Kernel with multipliers ``m_nu`` for ``nu = 0..degree``.

    ``n`` is the dilation (``2**(j-1)`` for level ``j >= 1``).  ``n = 0`` marks
    the rank-one level-0 kernel ``P^_0(x) P^_0(y)``.
    """

    params: WeightParams
    cutoff: object
    n: float
    multipliers: np.ndarray = field(repr=False)
    table: object = field(repr=False)

    @property
    def degree(self):
        return self.multipliers.size - 1

    @property
    def band(self):
        """Degrees with nonzero multiplier."""
        return np.flatnonzero(self.multipliers)

    @property
    def scale(self):
        """The ``n`` entering localization bounds (1 for the rank-one kernel)."""
        return max(float(self.n), 1.0)

    def __call__(self, x, y):
        return kernel_eval(self, x, y)


def make_kernel(params, cutoff, n, table=None):
    """``L_n`` for a cutoff function; ``n = 0`` gives ``P^_0 (x) P^_0``."""
    if n < 0:
        raise ParameterError("dilation must be nonnegative")
    if n == 0:
        mult = np.ones(1)
    else:
        top = int(np.ceil(2 * n))
        mult = np.asarray(cutoff(np.arange(top + 1) / n), dtype=float)
        nz = np.flatnonzero(mult)
        mult = mult[: (nz[-1] + 1 if nz.size else 1)]
    if table is None:
        table = table_for(params, mult.size - 1)
    elif table.degree_max < mult.size - 1:
        raise CapacityError(f"table covers degree {table.degree_max}, kernel needs {mult.size - 1}")
    mult.setflags(write=False)
    return SpectralKernel(params, cutoff, float(n), mult, table)


def level_kernel(params, cutoff, j):
    """``Phi_j``: rank-one at ``j = 0``, otherwise dilation ``2**(j-1)``."""
    if j < 0:
        raise ParameterError("level must be nonnegative")
    return make_kernel(params, cutoff, 0 if j == 0 else 2.0 ** (j - 1))


def _basis(K, points):
    return eval_batch(K.table, K.degree, np.ravel(points))


def kernel_eval(K, x, y):
    """Pointwise ``K(x, y)`` for broadcastable ``x`` and ``y``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    px = _basis(K, x)
    py = _basis(K, y)
    # elementwise product first keeps K(x, y) == K(y, x) bit for bit
    vals = K.multipliers @ (px * py)
    return vals.reshape(x.shape) if x.ndim else float(vals[0])


def kernel_matrix(K, xs, ys):
    """``[K(x_i, y_k)]`` for two point sets."""
    px = _basis(K, xs)
    py = _basis(K, ys)
    return px.T @ (K.multipliers[:, None] * py)


def kernel_diagonal_l2(K, x):
    """``int |K(x, y)|^2 w(y) dy = sum_nu |m_nu|^2 P^_nu(x)^2``."""
    px = _basis(K, x)
    return (np.abs(K.multipliers) ** 2) @ (px * px)


def convolve(K, coeffs, conjugate=False):
    """Spectral ``K * f``: coefficient ``nu`` becomes ``m_nu a_nu`` (``conj(m_nu)`` if asked)."""
    deg = int(K.band[-1]) if K.band.size else 0
    if coeffs.degree_max < deg:
        coeffs = coeffs.padded(deg)  # raises unless the expansion is exact
    mult = np.conj(K.multipliers) if conjugate else K.multipliers
    out = mult * coeffs.values[: K.degree + 1]
    return ExpansionCoefficients(
        coeffs.params, out, quadrature_degree_used=coeffs.quadrature_degree_used,
        band_limited=True,
    )


def convolve_physical(K, f, x, rule=None):
    """``int K(x, y) f(y) w(y) dy`` by composite quadrature, for cross-checks."""
    if rule is None:
        rule = composite_rule(K.params, panels=max(64, 2 * K.degree + 2))
    mat = kernel_matrix(K, x, rule.nodes)
    return mat @ (rule.weights * f(rule.nodes))


# ---------------------------------------------------------------------------
# probes


def _grid(x_grid, size):
    return theta_grid(size) if x_grid is None else np.asarray(x_grid, dtype=float)


def localization_probe(K, sigma, grid_size=DEFAULT_PROBE_GRID):
    """Observed constant in ``|K(x,y)| <= c n / (sqrt W(n;x) W(n;y) (1 + n d)^sigma)``.

    The statistic is maximized over the product of a theta-uniform grid with
    itself.  ``profile`` lists ``[d(x, y), statistic]`` along ``y`` for
    ``x`` in {1, 1/2, 0}; ``diag_lower`` is the minimum of
    ``W(n;x)/n * int |K(x,y)|^2 w(y) dy``.
    """
    if sigma < 0:
        raise ParameterError("sigma must be nonnegative")
    n = K.scale
    grid = theta_grid(grid_size)
    wx = np.sqrt(companion_weight(K.params, n, grid))
    dist = arc_distance(grid[:, None], grid[None, :])
    mat = kernel_matrix(K, grid, grid)
    stat = np.abs(mat) * wx[:, None] * wx[None, :] * (1 + n * dist) ** sigma / n
    profile = {}
    for x0 in PROFILE_POINTS:
        row = np.abs(kernel_matrix(K, [x0], grid)[0])
        d = arc_distance(x0, grid)
        vals = row * np.sqrt(companion_weight(K.params, n, x0)) * wx * (1 + n * d) ** sigma / n
        order = np.argsort(d, kind="stable")
        profile[f"{x0:g}"] = np.column_stack([d[order], vals[order]]).tolist()
    diag = kernel_diagonal_l2(K, grid) * companion_weight(K.params, n, grid) / n
    return {
        "probe": "localization",
        "params": K.params.as_dict(),
        "n": n,
        "sigma": sigma,
        "observed_constant": float(stat.max()),
        "diag_lower": float(diag.min()),
        "profile": profile,
    }


def lp_integral_probe(K, p, x_grid=None, grid_size=64, panels=None):
    """``max_x int |K(x,y)|^p w(y) dy / (n / W(n;x))^(p-1)`` (and the min)."""
    if p <= 0:
        raise ParameterError("p must be positive")
    n = K.scale
    xs = _grid(x_grid, grid_size)
    rule = composite_rule(K.params, panels=panels or max(64, 2 * K.degree + 2))
    integrals = (np.abs(kernel_matrix(K, xs, rule.nodes)) ** p) @ rule.weights
    scaled = integrals / (n / companion_weight(K.params, n, xs)) ** (p - 1)
    report = {
        "probe": "lp_integral",
        "params": K.params.as_dict(),
        "n": n,
        "p": p,
        "observed_constant": float(scaled.max()),
        "min_scaled_integral": float(scaled.min()),
        "profile": np.column_stack([xs, scaled]).tolist(),
    }
    if p == 2:
        spectral = kernel_diagonal_l2(K, xs)
        report["spectral_mismatch"] = float(np.max(np.abs(integrals - spectral) / spectral))
    return report


def lipschitz_probe(K, samples=200, sigma=2.0, c_star=1.0, seed=0, grid_size=256):
    """Observed constant of the Lipschitz bound with ``z = xi``.

    For random ``x`` and ``xi`` with ``d(x, xi) <= c_star / n`` reports
    ``max |K(x,y) - K(xi,y)| sqrt W(n;y) sqrt W(n;xi) (1 + n d(y,xi))^sigma / (n^2 d(x,xi))``
    over a theta-uniform ``y`` grid.
    """
    n = K.scale
    rng = np.random.default_rng(seed)
    tx = rng.uniform(0, np.pi, samples)
    txi = np.clip(tx + rng.uniform(-1, 1, samples) * c_star / n, 0, np.pi)
    x, xi = np.cos(tx), np.cos(txi)
    ys = theta_grid(grid_size)
    diff = np.abs(kernel_matrix(K, x, ys) - kernel_matrix(K, xi, ys))
    dx = arc_distance(x, xi)
    wy = np.sqrt(companion_weight(K.params, n, ys))
    wz = np.sqrt(companion_weight(K.params, n, xi))
    dyz = arc_distance(ys[None, :], xi[:, None])
    with np.errstate(invalid="ignore", divide="ignore"):
        stat = diff * wy[None, :] * wz[:, None] * (1 + n * dyz) ** sigma / (n * n * dx[:, None])
    stat = np.where(dx[:, None] > 0, stat, 0.0)
    return {
        "probe": "lipschitz",
        "params": K.params.as_dict(),
        "n": n,
        "sigma": sigma,
        "observed_constant": float(stat.max()),
        "profile": np.column_stack([dx, stat.max(axis=1)]).tolist(),
    }


def univariate_probe(K, k=2, grid_size=DEFAULT_PROBE_GRID):
    """Observed ``c_k`` in ``|L_n(cos t)| <= c_k n^(2a+2) / (1 + n t)^(k + a - b)``.

    ``L_n(x) = K(1, x)``.  The bound is stated for ``alpha >= beta``; for
    ``alpha < beta`` the kernel is probed at ``-1`` with the exponents
    swapped, which is the same statement after ``x -> -x``.
    """
    a, b = K.params.alpha, K.params.beta
    reflected = a < b
    n = K.scale
    theta = np.linspace(0, np.pi, grid_size)
    pole = -1.0 if reflected else 1.0
    x = pole * np.cos(theta)
    vals = np.abs(kernel_eval(K, np.full_like(x, pole), x))
    if reflected:
        a, b = b, a
    stat = vals * (1 + n * theta) ** (k + a - b) / n ** (2 * a + 2)
    return {
        "probe": "univariate",
        "params": K.params.as_dict(),
        "n": n,
        "k": k,
        "reflected": reflected,
        "observed_constant": float(stat.max()),
        "profile": np.column_stack([theta, stat]).tolist(),
    }


def kernel_series(K, coeffs, points):
    """Evaluate ``K * f`` at ``points`` without forming the band matrix."""
    conv = convolve(K, coeffs)
    return eval_series(K.table, conv.values, points)
