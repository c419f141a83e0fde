"""Admissible C-infinity cutoff functions and Calderon companion pairs.

Everything is built from the smooth step::

    rho(t) = e(2t - 1) / (e(2t - 1) + e(2 - 2t)),    e(u) = exp(-1/u) for u > 0

which vanishes for ``t <= 1/2`` and equals one for ``t >= 1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, ParameterError

TYPE_A = "type_a"
TYPE_B = "type_b"
DENOMINATOR_FLOOR = 1e-8
CALDERON_TOL = 1e-12


def _e(u):
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(t):
    t = np.asarray(t, dtype=float)
    num = _e(2 * t - 1)
    den = num + _e(2 - 2 * t)
    return num / den


def make_smooth_step():
    return smooth_step


@dataclass(frozen=True, eq=False)
class CutoffFunction:
    """A cutoff ``a^ : [0, inf) -> R`` together with its admissibility data.

    Values are forced to zero outside ``support`` so that band edges are
    exact zeros rather than rounding residue.
    """

    kind: str
    evaluator: Callable = field(repr=False)
    support: tuple
    positive: bool = False
    name: str = ""

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.support
        vals = np.zeros(t.shape)
        if self.kind == TYPE_B:
            inside = (t > lo) & (t < hi)
        else:
            inside = (t >= 0) & (t < hi)
        if np.any(inside):
            vals[inside] = self.evaluator(t[inside])
        return vals if vals.ndim else float(vals)

    def positivity_minimum(self, samples=2001):
        """``min |a^|`` on [3/5, 5/3]."""
        return float(np.min(np.abs(self(np.linspace(0.6, 5 / 3, samples)))))


def _tight(t):
    return np.where(
        t <= 1.0,
        np.sin(np.pi / 2 * smooth_step(t)),
        np.cos(np.pi / 2 * smooth_step(t / 2)),
    )


def _additive(t):
    return np.where(t <= 1.0, smooth_step(t), 1.0 - smooth_step(t / 2))


def make_tight_cutoff():
    """Type (b) cutoff with ``a^(t)^2 + a^(2t)^2 = 1`` on [1/2, 1]."""
    return CutoffFunction(TYPE_B, _tight, (0.5, 2.0), positive=True, name="tight")


def make_additive_cutoff():
    """Type (b) cutoff with ``a^(t) + a^(2t) = 1`` on [1/2, 1] (not tight)."""
    return CutoffFunction(TYPE_B, _additive, (0.5, 2.0), positive=True, name="additive")


def make_type_a():
    """Equals one on [0, 1] and decays smoothly to zero on [1, 2]."""
    return CutoffFunction(TYPE_A, lambda t: 1.0 - smooth_step(t / 2), (0.0, 2.0), name="type-a")


@dataclass(frozen=True, eq=False)
class CutoffPair:
    a_hat: CutoffFunction
    b_hat: CutoffFunction
    calderon_verified: bool
    tight: bool
    calderon_error: float = 0.0
    name: str = ""


def calderon_error(a_hat, b_hat, samples=1000):
    t = np.linspace(0.5, 1.0, samples)
    lhs = np.conj(a_hat(t)) * b_hat(t) + np.conj(a_hat(2 * t)) * b_hat(2 * t)
    return float(np.max(np.abs(lhs - 1)))


def partition_error(a_hat, b_hat, t):
    """``max |sum_nu conj(a^(2^-nu t)) b^(2^-nu t) - 1|`` over ``t >= 1``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 1):
        raise ParameterError("partition of unity is checked on t >= 1")
    total = np.zeros(t.shape)
    nu_max = int(np.ceil(np.log2(t.max()))) + 2
    for nu in range(nu_max + 1):
        u = t * 2.0 ** -nu
        total += np.real(np.conj(a_hat(u)) * b_hat(u))
    return float(np.max(np.abs(total - 1)))


def make_calderon_partner(a_hat, samples=1000):
    """Companion ``b^`` with ``conj(a^) b^ + conj(a^(2.)) b^(2.) = 1`` on [1/2, 1].

    ``b^ = conj(a^) / (|a^(t)|^2 + |a^(2t)|^2 + |a^(t/2)|^2)``.  When the
    denominator is identically one (a tight cutoff) ``b^`` is ``a^`` itself.
    """
    if a_hat.kind != TYPE_B or not a_hat.positive:
        raise AdmissibilityError("Calderon partner needs a positive type (b) cutoff")

    def denominator(t):
        return np.abs(a_hat(t)) ** 2 + np.abs(a_hat(2 * t)) ** 2 + np.abs(a_hat(t / 2)) ** 2

    grid = np.linspace(0.5, 2.0, 20 * samples + 1)[1:-1]
    den = denominator(grid)
    on_supp = np.abs(a_hat(grid)) > 0
    if np.min(den[on_supp]) < DENOMINATOR_FLOOR:
        raise AdmissibilityError(
            f"denominator drops to {np.min(den[on_supp]):.3g} on the support of a^"
        )
    tight = bool(np.max(np.abs(den - 1.0)) < 1e-13)
    if tight:
        b_hat = a_hat
    else:
        def partner(t):
            return np.conj(a_hat.evaluator(t)) / denominator(t)

        b_hat = CutoffFunction(
            TYPE_B, partner, a_hat.support, positive=True, name=f"partner({a_hat.name})"
        )
    err = calderon_error(a_hat, b_hat, samples)
    return CutoffPair(
        a_hat, b_hat, calderon_verified=err <= CALDERON_TOL, tight=tight,
        calderon_error=err, name=f"calderon({a_hat.name})",
    )


def fourth_difference_bound(f, lo=0.0, hi=2.5, h=1e-3):
    """Largest ``|Delta_h^4 f| / h^4`` over a grid; a finite-difference smoothness proxy."""
    t = np.arange(lo, hi + h / 2, h)
    v = f(t)
    d4 = v[4:] - 4 * v[3:-1] + 6 * v[2:-2] - 4 * v[1:-3] + v[:-4]
    return float(np.max(np.abs(d4)) / h ** 4)


_CUTOFFS = {
    "tight": make_tight_cutoff,
    "additive": make_additive_cutoff,
    "type-a": make_type_a,
}


def cutoff_preset(name):
    try:
        return _CUTOFFS[name]()
    except KeyError:
        raise ParameterError(f"unknown cutoff preset {name!r}") from None


def pair_preset(name):
    """``tight`` or ``calderon(<preset>)``."""
    m = re.fullmatch(r"calderon\((.+)\)", name.strip())
    inner = m.group(1) if m else name.strip()
    pair = make_calderon_partner(cutoff_preset(inner))
    return CutoffPair(
        pair.a_hat, pair.b_hat, pair.calderon_verified, pair.tight,
        pair.calderon_error, name=name.strip(),
    )
