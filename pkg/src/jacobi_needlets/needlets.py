"""Needlet systems ``phi_xi = c_xi^(1/2) Phi_j(., xi)`` and ``psi_xi = c_xi^(1/2) Psi_j(., xi)``.

Analysis and synthesis are spectral: with ``B_j[mu, k] = P^_mu(xi_{j,k})``,

    <f, phi_{j,k}>  = c_k^(1/2) sum_mu conj(a^(mu / 2^(j-1))) a_mu(f) B_j[mu, k]
    a_mu(T h)       = sum_j b^(mu / 2^(j-1)) sum_k h_{j,k} c_k^(1/2) B_j[mu, k]

Level 0 uses the multiplier 1 at ``mu = 0`` only.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._report import dumps17
from .cutoff import CutoffPair, pair_preset
from .errors import AdmissibilityError, CapacityError, ParameterError, ParseError, ShapeError
from .jacobi import ExpansionCoefficients, WeightParams, eval_batch, table_for
from .kernels import convolve, level_kernel
from .quadrature import (
    DEFAULT_LEVEL_CAP,
    arc_distance,
    companion_weight,
    composite_rule,
    level_geometry,
)

CSV_COLUMNS = ("level", "node_index", "node_x", "c_xi", "coeff_re", "coeff_im")
TREE_FORMAT = "jacobi-needlets/coefficient-tree"


@dataclass(frozen=True, eq=False)
class NeedletSystem:
    params: WeightParams
    pair: CutoffPair
    max_level: int
    geometries: tuple = field(repr=False)
    phi: tuple = field(repr=False)
    psi: tuple = field(repr=False)
    table: object = field(repr=False)
    quadrature_degree: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def levels(self):
        return range(self.max_level + 1)

    @property
    def degree(self):
        """Highest degree present in any needlet (``2**J - 1`` for ``J >= 1``)."""
        return max(k.degree for k in self.phi + self.psi)

    @property
    def exact_degree(self):
        """Largest ``N`` with ``T_psi S_phi = Id`` on ``Pi_N``."""
        return 0 if self.max_level == 0 else 2 ** (self.max_level - 1)

    def size(self, j):
        return self.geometries[j].size

    def node_count(self):
        return sum(g.size for g in self.geometries)

    def sqrt_weights(self, j):
        return np.sqrt(self.geometries[j].weights)

    def basis(self, j):
        """``P^_mu(xi_{j,k})`` as a ``(degree_j + 1) x 2^(j+1)`` matrix."""
        return _level_basis(self, j)

    def needlet_coefficients(self, j, k, kind="psi"):
        """Expansion coefficients of ``psi_{j,k}`` (or ``phi_{j,k}``)."""
        K = (self.psi if kind == "psi" else self.phi)[j]
        col = self.basis(j)[:, k] * self.sqrt_weights(j)[k]
        vals = K.multipliers * col[: K.degree + 1]
        return ExpansionCoefficients.polynomial(self.params, vals)

    def psi_eval(self, j, k, x):
        """``psi_{j,k}(x)``."""
        return self.needlet_coefficients(j, k, "psi")(x)

    def phi_eval(self, j, k, x):
        return self.needlet_coefficients(j, k, "phi")(x)

    def node(self, j, k):
        return float(self.geometries[j].nodes[k])


def _level_basis(system, j):
    mat = system._cache.get(("basis", j))
    if mat is None:
        deg = max(system.phi[j].degree, system.psi[j].degree)
        mat = eval_batch(system.table, deg, system.geometries[j].nodes)
        mat.setflags(write=False)
        system._cache[("basis", j)] = mat
    return mat


def build_system(params, pair, J, quadrature_degree=None, cap=DEFAULT_LEVEL_CAP):
    """Needlet system with levels ``0..J``.

    ``quadrature_degree`` is the number of Gauss nodes used when a function
    (rather than an expansion) is analyzed; default ``2**(J+1)``.
    """
    if isinstance(pair, str):
        pair = pair_preset(pair)
    if not pair.calderon_verified:
        raise AdmissibilityError("cutoff pair does not satisfy the Calderon condition")
    if J < 0:
        raise ParameterError("J must be nonnegative")
    geoms = tuple(level_geometry(params, j, cap=cap) for j in range(J + 1))
    phi = tuple(level_kernel(params, pair.a_hat, j) for j in range(J + 1))
    psi = phi if pair.tight else tuple(level_kernel(params, pair.b_hat, j) for j in range(J + 1))
    table = table_for(params, 2 ** J + 1)
    return NeedletSystem(params, pair, J, geoms, phi, psi, table, quadrature_degree or 2 ** (J + 1))


@dataclass
class CoefficientTree:
    """Needlet coefficients ``h[j][k]`` keyed by ``(level, node index)``."""

    system: NeedletSystem
    levels: list
    source: str = ""
    reference: ExpansionCoefficients | None = None
    residual: float = 0.0

    def __post_init__(self):
        if len(self.levels) > self.system.max_level + 1:
            raise ShapeError(f"{len(self.levels)} levels exceed system depth {self.system.max_level}")
        fixed = []
        for j, arr in enumerate(self.levels):
            arr = np.asarray(arr, dtype=complex).ravel()
            if arr.size != self.system.size(j):
                raise ShapeError(f"level {j} holds {arr.size} coefficients, expected {self.system.size(j)}")
            fixed.append(arr)
        self.levels = fixed

    @classmethod
    def zeros(cls, system, source="zero"):
        return cls(system, [np.zeros(system.size(j), dtype=complex) for j in system.levels], source)

    @property
    def truncation_level(self):
        return len(self.levels) - 1

    def items(self):
        """``((j, k), value)`` in level-major order."""
        for j, arr in enumerate(self.levels):
            for k, v in enumerate(arr):
                yield (j, k), v

    def flat(self):
        return np.concatenate(self.levels) if self.levels else np.zeros(0, dtype=complex)

    def index(self):
        """Arrays ``(level, node_index)`` aligned with :meth:`flat`."""
        js = np.concatenate([np.full(a.size, j) for j, a in enumerate(self.levels)])
        ks = np.concatenate([np.arange(a.size) for a in self.levels])
        return js, ks

    def nonzero_count(self):
        return int(np.count_nonzero(self.flat()))

    def scaled(self, factor):
        return CoefficientTree(self.system, [a * factor for a in self.levels], self.source,
                               None if self.reference is None else self.reference.scaled(factor),
                               abs(factor) * self.residual)

    def restricted(self, keep):
        """Tree keeping only the flat positions in ``keep`` (a boolean mask)."""
        flat = np.where(keep, self.flat(), 0)
        parts = np.split(flat, np.cumsum([a.size for a in self.levels])[:-1])
        return CoefficientTree(self.system, parts, self.source + " (restricted)")


def _as_expansion(system, f, degree):
    if isinstance(f, ExpansionCoefficients):
        if f.degree_max < degree and not f.band_limited:
            raise CapacityError(f"expansion covers degree {f.degree_max}, analysis needs {degree}")
        return f
    from .jacobi import expand

    qd = max(system.quadrature_degree, degree + 1)
    return expand(f, table_for(system.params, degree), degree, qd)


def analyze(system, f, source=""):
    """``S_phi f = {<f, phi_xi>}``.

    ``f`` is an expansion or a callable.  Non band-limited input is projected
    to degree ``2**J``; the L2 part of that projection not reproduced by
    synthesis is stored as ``residual``.
    """
    need = max(k.degree for k in system.phi)
    ref_degree = max(need, 2 ** system.max_level)
    coeffs = _as_expansion(system, f, ref_degree)
    src = source or ("expansion" if isinstance(f, ExpansionCoefficients) else getattr(f, "__name__", "callable"))
    levels = []
    for j in system.levels:
        K = system.phi[j]
        conv = convolve(K, coeffs, conjugate=True)
        B = system.basis(j)[: K.degree + 1]
        levels.append(system.sqrt_weights(j) * (conv.values @ B))
    tree = CoefficientTree(system, levels, src, reference=coeffs)
    tree.residual = float(reconstruction_error(system, tree, coeffs))
    return tree


def synthesize(system, tree):
    """Expansion of ``T_psi h = sum h_xi psi_xi``."""
    if tree.truncation_level > system.max_level:
        raise ShapeError("tree deeper than system")
    out = np.zeros(system.degree + 1, dtype=complex)
    for j, h in enumerate(tree.levels):
        K = system.psi[j]
        if not np.any(h):
            continue
        B = system.basis(j)[: K.degree + 1]
        out[: K.degree + 1] += K.multipliers * (B @ (system.sqrt_weights(j) * h))
    return ExpansionCoefficients.polynomial(system.params, out)


def reconstruction_error(system, tree, reference):
    """``||reference - T_psi h||_2`` computed spectrally."""
    rec = synthesize(system, tree)
    n = max(rec.values.size, reference.values.size)
    diff = np.zeros(n, dtype=complex)
    diff[: reference.values.size] = reference.values
    diff[: rec.values.size] -= rec.values
    return float(np.linalg.norm(diff))


def frame_energy(tree):
    """``sum_xi |h_xi|^2``."""
    return float(np.sum(np.abs(tree.flat()) ** 2))


# ---------------------------------------------------------------------------
# needlet norms


def needlet_l2_norms(system, j, kind="psi"):
    """``||psi_{j,k}||_2`` for every node of level ``j``."""
    K = (system.psi if kind == "psi" else system.phi)[j]
    B = system.basis(j)[: K.degree + 1]
    return system.sqrt_weights(j) * np.sqrt((np.abs(K.multipliers) ** 2) @ (B * B))


def needlet_lp_norms(system, j, p, kind="psi", chunk=256):
    """``||psi_{j,k}||_p`` for every node of level ``j`` (composite quadrature)."""
    if p == 2:
        return needlet_l2_norms(system, j, kind)
    if not (p > 0):
        raise ParameterError("p must be positive")
    K = (system.psi if kind == "psi" else system.phi)[j]
    rule = composite_rule(system.params, panels=max(64, 2 * K.degree + 2))
    pts = rule.sup_points if math.isinf(p) else rule.nodes
    P = eval_batch(system.table, K.degree, pts)
    B = system.basis(j)[: K.degree + 1] * system.sqrt_weights(j)
    out = np.empty(B.shape[1])
    for start in range(0, B.shape[1], chunk):
        vals = np.abs(P.T @ (K.multipliers[:, None] * B[:, start:start + chunk]))
        if math.isinf(p):
            out[start:start + chunk] = vals.max(axis=0)
        else:
            out[start:start + chunk] = (rule.weights @ vals ** p) ** (1.0 / p)
    return out


def needlet_norm(system, node, p, kind="psi"):
    """``||psi_xi||_p`` and the ratio to ``(2^j / W(2^j; xi))^(1/2 - 1/p)``."""
    j, k = node
    if not (0 <= j <= system.max_level and 0 <= k < system.size(j)):
        raise ShapeError(f"no node {node}")
    coeffs = system.needlet_coefficients(j, k, kind)
    if p == 2:
        value = coeffs.l2_norm()
    else:
        from .spaces import lp_norm

        # same rule as needlet_lp_norms so both paths agree
        rule = composite_rule(system.params, panels=max(64, 2 * coeffs.degree_max + 2))
        value = lp_norm(coeffs, p, rule=rule)
    return value, value / norm_scale(system, j, system.node(j, k), p)


def norm_scale(system, j, x, p):
    """``(2^j / W(2^j; x))^(1/2 - 1/p)``."""
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    n = 2.0 ** j
    return (n / companion_weight(system.params, n, x)) ** (0.5 - inv_p)


def peak_statistic(system, j):
    """``psi_xi(xi) / (2^j / W(2^j; xi))^(1/2)`` over level ``j``."""
    K = system.psi[j]
    B = system.basis(j)[: K.degree + 1]
    peak = system.sqrt_weights(j) * (K.multipliers @ (B * B))
    return peak / norm_scale(system, j, system.geometries[j].nodes, np.inf)


def localization_statistic(system, j, sigma, grid):
    """``max |psi_xi(x)| sqrt W(2^j;x) (1 + 2^j d(xi,x))^sigma / 2^(j/2)`` per node."""
    K = system.psi[j]
    n = 2.0 ** j
    P = eval_batch(system.table, K.degree, grid)
    B = system.basis(j)[: K.degree + 1] * system.sqrt_weights(j)
    vals = np.abs(P.T @ (K.multipliers[:, None] * B))
    d = arc_distance(grid[:, None], system.geometries[j].nodes[None, :])
    scale = np.sqrt(companion_weight(system.params, n, grid))[:, None] * (1 + n * d) ** sigma
    return (vals * scale).max(axis=0) / 2 ** (j / 2)


def cross_level_check(system, j, nu, k, sigma=2.0, grid=None):
    """``Phi_j * psi_xi`` for ``xi = xi_{nu, k}``.

    For ``|nu - j| >= 2`` the product of multipliers vanishes identically and
    ``max_coefficient`` is the largest output coefficient.  For ``|nu - j| <= 1``
    the localization statistic against ``2^(j/2) / sqrt W(2^j; x)`` is reported.
    """
    K = system.phi[j]
    coeffs = system.needlet_coefficients(nu, k, "psi")
    n = max(coeffs.values.size, K.degree + 1)
    out = convolve(K, coeffs.padded(n - 1))
    report = {
        "level": j,
        "needlet_level": nu,
        "node_index": k,
        "max_coefficient": float(np.max(np.abs(out.values))),
        "disjoint": abs(nu - j) >= 2,
    }
    if abs(nu - j) <= 1:
        from .quadrature import theta_grid

        grid = theta_grid(512) if grid is None else np.asarray(grid, dtype=float)
        vals = np.abs(out(grid))
        scale = 2.0 ** j
        d = arc_distance(system.node(nu, k), grid)
        stat = vals * np.sqrt(companion_weight(system.params, scale, grid)) * (1 + scale * d) ** sigma
        report["statistic"] = float(np.max(stat) / 2 ** (j / 2))
    return report


# ---------------------------------------------------------------------------
# CSV export


def export_tree(tree, csv_path, sidecar_path=None):
    """Write ``tree`` as CSV plus a JSON sidecar describing the system."""
    system = tree.system
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for j, arr in enumerate(tree.levels):
        geom = system.geometries[j]
        for k, v in enumerate(arr):
            writer.writerow([j, k, f"{geom.nodes[k]:.17g}", f"{geom.weights[k]:.17g}",
                             f"{v.real:.17g}", f"{v.imag:.17g}"])
    with open(csv_path, "w", newline="") as fh:
        fh.write(buf.getvalue())
    if sidecar_path is None:
        sidecar_path = str(csv_path) + ".json"
    meta = tree_metadata(tree)
    with open(sidecar_path, "w") as fh:
        fh.write(dumps17(meta) + "\n")
    return csv_path, sidecar_path


def tree_metadata(tree):
    system = tree.system
    return {
        "format": TREE_FORMAT,
        "version": 1,
        "params": system.params.as_dict(),
        "levels": system.max_level,
        "cutoff": system.pair.name,
        "tight": system.pair.tight,
        "source": tree.source,
        "truncation_level": tree.truncation_level,
        "residual": tree.residual,
    }


def import_tree(csv_path, sidecar_path=None, system=None):
    """Read a tree written by :func:`export_tree`."""
    if sidecar_path is None:
        sidecar_path = str(csv_path) + ".json"
    try:
        with open(sidecar_path) as fh:
            meta = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"sidecar is not valid JSON: {exc.msg}", exc.lineno) from None
    if meta.get("format") != TREE_FORMAT:
        raise ParseError("sidecar does not describe a coefficient tree")
    if system is None:
        system = build_system(WeightParams(**meta["params"]), meta["cutoff"], int(meta["levels"]))
    levels = [np.zeros(system.size(j), dtype=complex) for j in system.levels]
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise ParseError(f"expected header {','.join(CSV_COLUMNS)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise ParseError(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}", lineno)
            try:
                j, k = int(row[0]), int(row[1])
                re_, im_ = float(row[4]), float(row[5])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if not (0 <= j <= system.max_level and 0 <= k < system.size(j)):
                raise ParseError(f"node ({j}, {k}) not in the system", lineno)
            levels[j][k] = complex(re_, im_)
    tree = CoefficientTree(system, levels, meta.get("source", ""))
    tree.residual = float(meta.get("residual", 0.0))
    return tree
