"""Named test functions and the family used by the norm-equivalence experiments."""

from __future__ import annotations

import re

import numpy as np

from .errors import ParameterError
from .jacobi import (
    ExpansionCoefficients,
    eval_batch,
    random_polynomial,
    table_for,
)
from .quadrature import _gauss_jacobi_raw, gauss_jacobi

#: Members of the equivalence family.
FAMILY_JACOBI = (0, 1, 2, 5, 11, 23)
FAMILY_RANDOM = 10
FAMILY_ENDPOINT = (0.3, 0.6, 1.2)
FAMILY_SEED = 20240611


def jacobi_function(params, nu):
    vals = np.zeros(nu + 1)
    vals[nu] = 1.0
    return ExpansionCoefficients.polynomial(params, vals)


def endpoint_function(params, gamma, degree):
    """Projection of ``(1-x)^gamma`` onto ``Pi_degree``.

    ``<(1-x)^gamma, P^_nu>_w`` is computed exactly with the Gauss rule of the
    weight ``(1-x)^(alpha+gamma) (1+x)^beta``.
    """
    if gamma <= -0.5 - params.alpha:
        raise ParameterError("gamma too small for (1-x)^gamma to lie in L2(w)")
    x, c = _gauss_jacobi_raw(params.alpha + gamma, params.beta, degree // 2 + 2)
    table = table_for(params, degree)
    vals = eval_batch(table, degree, x) @ c
    return ExpansionCoefficients(params, vals, band_limited=True)


def step_function(params, degree, center=0.0, width=0.25):
    """Projection of a smooth transition ``(1 + tanh((x - c)/width))/2``."""
    rule = gauss_jacobi(params, degree + 64)
    table = table_for(params, degree)
    f = 0.5 * (1 + np.tanh((rule.nodes - center) / width))
    vals = eval_batch(table, degree, rule.nodes) @ (rule.weights * f)
    return ExpansionCoefficients(params, vals, band_limited=True)


def random_band_limited(params, degree, seed):
    return random_polynomial(params, degree, np.random.default_rng(seed))


def equivalence_family(params, J):
    """Twenty ``(name, expansion)`` pairs, all of degree at most ``2**(J-1)``."""
    band = 2 ** (J - 1)
    out = []
    for nu in FAMILY_JACOBI:
        if nu <= band:
            out.append((f"jacobi:{nu}", jacobi_function(params, nu)))
    for i in range(FAMILY_RANDOM):
        deg = min(band, (8, 16, 32)[i % 3])
        out.append((f"random:{deg}:{i}", random_band_limited(params, deg, FAMILY_SEED + i)))
    for gamma in FAMILY_ENDPOINT:
        out.append((f"endpoint:{gamma:g}", endpoint_function(params, gamma, band)))
    out.append(("step", step_function(params, band)))
    return out


_PRESET = re.compile(r"^(jacobi|endpoint|random):(.+)$")


def preset(name, params, degree):
    """Expansion for a CLI preset name.

    ``jacobi:nu``, ``endpoint:gamma`` and ``step`` are projected to ``degree``;
    ``zero`` is the zero function; ``random:seed`` draws a random polynomial
    of degree ``degree // 2``, the band a ``degree = 2**J`` budget reproduces.
    """
    name = name.strip()
    if name == "zero":
        return ExpansionCoefficients.polynomial(params, np.zeros(1))
    if name == "step":
        return step_function(params, degree)
    m = _PRESET.match(name)
    if not m:
        raise ParameterError(f"unknown function preset {name!r}")
    kind, arg = m.groups()
    try:
        if kind == "jacobi":
            nu = int(arg)
            if nu < 0:
                raise ValueError
            return jacobi_function(params, nu)
        if kind == "endpoint":
            return endpoint_function(params, float(arg), degree)
        return random_band_limited(params, degree // 2, int(arg))
    except ValueError:
        raise ParameterError(f"bad argument in preset {name!r}") from None
