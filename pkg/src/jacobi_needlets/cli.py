"""Command-line front end.

Every subcommand prints a JSON report on stdout and writes its files to
``--out``.  Failures print ``{"error": ..., "type": ..., "exit_code": ...}``
on stderr.  Exit codes: 0 pass, 1 failed check, 2 usage or parameter error,
3 capacity error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from ._report import dumps17, fmt17
from .errors import NeedletError, ParameterError, ParseError
from .functions import preset
from .jacobi import ExpansionCoefficients, WeightParams, eval_batch, table_for
from .quadrature import DEFAULT_LEVEL_CAP, gauss_jacobi, geometry_to_dict, level_geometry

EXIT_PASS, EXIT_FAIL = 0, 1
COEFF_COLUMNS = ("nu", "re", "im")
GRID_DIRECTIVE = "# grid:"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--alpha", type=float, default=0.0)
    g.add_argument("--beta", type=float, default=0.0)
    g.add_argument("--levels", type=int, default=None, help="top level J")
    g.add_argument("--cutoff", default="tight", help="tight, calderon(<preset>) or type-a")
    g.add_argument("--grid", type=int, default=512, help="probe grid size")
    g.add_argument("--slack", type=float, default=50.0, help="allowed band width max/min")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=None, help="cap on BLAS threads")
    g.add_argument("--out", default=".", help="output directory")
    return p


def _add_input(p, required=True):
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--function", help="preset: jacobi:NU, endpoint:GAMMA, step, zero, random:SEED")
    src.add_argument("--coeffs", help="CSV of expansion coefficients (nu,re,im)")
    src.add_argument("--samples", help="CSV of samples (x,value) on a declared grid")


def build_parser():
    common = _common()
    # global flags live on each subparser so they may follow the subcommand
    parser = _Parser(prog="jacobi-needlets", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("quadrature", parents=[common], help="Gauss-Jacobi rule and cells of one level")
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--cap", type=int, default=DEFAULT_LEVEL_CAP)

    p = sub.add_parser("decompose", parents=[common], help="needlet coefficients of a function")
    _add_input(p)
    p.add_argument("--name", default="tree.csv", help="coefficient CSV file name")

    p = sub.add_parser("reconstruct", parents=[common], help="synthesize a coefficient tree")
    p.add_argument("--tree", required=True, help="coefficient CSV written by decompose")
    p.add_argument("--sidecar", default=None)
    _add_input(p, required=False)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", required=True)

    p = sub.add_parser("norms", parents=[common], help="continuous and sequence norms of a function")
    _add_input(p)
    p.add_argument("--space", choices=("F", "B"), default="F")
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--scale", type=int, choices=(1, 2), default=1)

    p = sub.add_parser("nterm", parents=[common], help="greedy n-term approximation curve")
    _add_input(p)
    p.add_argument("--n-grid", default="16,32,64,128,256,512,1024")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--against", choices=("synthesis", "reference"), default="synthesis")

    p = sub.add_parser("probe", parents=[common], help="kernel, polynomial and frame probes")
    p.add_argument("--kind", required=True, choices=(
        "localization", "lp-integral", "lipschitz", "univariate", "nikolski", "christoffel",
        "bernstein"))
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=100)
    return parser


# ---------------------------------------------------------------------------
# input files


def _number(text, lineno, what):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{what} {text.strip()!r} is not a number", lineno) from None


def _data_rows(path):
    """Non-comment CSV rows with their 1-based line numbers, and the comment lines."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read {path}: {exc.strerror}") from None
    rows, comments = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            comments.append((lineno, stripped))
            continue
        rows.append((lineno, next(csv.reader([stripped]))))
    return rows, comments


def read_coefficients(path, params):
    """Expansion coefficients from a ``nu,re,im`` CSV (``im`` may be omitted)."""
    rows, _ = _data_rows(path)
    if not rows:
        raise ParseError("no data", 1)
    lineno, header = rows[0]
    names = tuple(h.strip() for h in header)
    if names not in (COEFF_COLUMNS, COEFF_COLUMNS[:2]):
        raise ParseError(f"expected header {','.join(COEFF_COLUMNS)}", lineno)
    entries = {}
    for lineno, row in rows[1:]:
        if len(row) != len(names):
            raise ParseError(f"expected {len(names)} fields, got {len(row)}", lineno)
        nu = _number(row[0], lineno, "degree")
        if nu < 0 or nu != int(nu):
            raise ParseError(f"degree {row[0].strip()!r} is not a nonnegative integer", lineno)
        if int(nu) in entries:
            raise ParseError(f"degree {int(nu)} listed twice", lineno)
        im = _number(row[2], lineno, "value") if len(row) == 3 else 0.0
        entries[int(nu)] = complex(_number(row[1], lineno, "value"), im)
    if not entries:
        raise ParseError("no coefficients", lineno)
    vals = np.zeros(max(entries) + 1, dtype=complex)
    for nu, v in entries.items():
        vals[nu] = v
    if not np.any(vals.imag):
        vals = vals.real
    return ExpansionCoefficients.polynomial(params, vals)


def read_samples(path, params):
    """Expansion from samples at the Gauss-Jacobi nodes declared by ``# grid: gauss-jacobi N``.

    The samples are taken as the degree ``N - 1`` interpolant, whose
    coefficients the ``N``-point rule computes exactly.
    """
    rows, comments = _data_rows(path)
    declared = [(ln, c) for ln, c in comments if c.lower().startswith(GRID_DIRECTIVE)]
    if not declared:
        raise ParseError(f"missing '{GRID_DIRECTIVE} gauss-jacobi N' declaration", 1)
    lineno, text = declared[0]
    parts = text[len(GRID_DIRECTIVE):].split()
    if len(parts) != 2 or parts[0] != "gauss-jacobi" or not parts[1].isdigit() or int(parts[1]) < 1:
        raise ParseError("grid declaration must read 'gauss-jacobi N' with N >= 1", lineno)
    n = int(parts[1])
    if not rows:
        raise ParseError("no data", lineno)
    hl, header = rows[0]
    if tuple(h.strip() for h in header) != ("x", "value"):
        raise ParseError("expected header x,value", hl)
    data = rows[1:]
    if len(data) != n:
        last = data[-1][0] if data else hl
        raise ParseError(f"declared {n} samples, found {len(data)}", last)
    rule = gauss_jacobi(params, n)
    order = np.argsort(-rule.nodes)
    xs, vals = np.empty(n), np.empty(n)
    for i, (ln, row) in enumerate(data):
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", ln)
        xs[i] = _number(row[0], ln, "x")
        vals[i] = _number(row[1], ln, "value")
    idx = np.argsort(-xs)
    for i, k in enumerate(idx):
        if abs(xs[k] - rule.nodes[order[i]]) > 1e-12:
            raise ParseError(f"x = {fmt17(xs[k])} is not a node of the declared grid", data[k][0])
    degree = n - 1
    basis = eval_batch(table_for(params, degree), degree, rule.nodes[order])
    coeffs = basis @ (rule.weights[order] * vals[idx])
    return ExpansionCoefficients(params, coeffs, quadrature_degree_used=n, band_limited=True)


def write_coefficients(path, coeffs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COEFF_COLUMNS)
        vals = np.asarray(coeffs.values, dtype=complex)
        for nu, v in enumerate(vals):
            w.writerow([nu, fmt17(v.real), fmt17(v.imag)])


def _input(args, params, degree):
    if getattr(args, "function", None):
        return preset(args.function, params, degree), args.function
    if getattr(args, "coeffs", None):
        return read_coefficients(args.coeffs, params), args.coeffs
    if getattr(args, "samples", None):
        return read_samples(args.samples, params), args.samples
    return None, None


# ---------------------------------------------------------------------------
# commands


def _emit(args, name, report):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = dumps17(report)
    (out / f"{name}.json").write_text(text + "\n")
    print(text)


def _levels(args, default):
    return default if args.levels is None else args.levels


def cmd_quadrature(args, params):
    level = args.level if args.level is not None else args.levels
    if level is None:
        raise ParameterError("quadrature needs --level")
    geom = level_geometry(params, level, cap=args.cap)
    from .verify import quadrature_checks

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rule_path = out / f"rule_level{level}.json"
    rule_path.write_text(dumps17(geometry_to_dict(geom)) + "\n")
    checks = quadrature_checks(params, max_level=level, geometry_level=level, seed=args.seed,
                               slack=args.slack)
    report = {
        "command": "quadrature",
        "params": params.as_dict(),
        "level": level,
        "node_count": geom.size,
        "exact_degree": 2 * geom.size - 1,
        "rule_file": rule_path.name,
        "pass": all(c["pass"] for c in checks),
        "checks": checks,
    }
    _emit(args, f"quadrature_level{level}", report)
    return EXIT_PASS if report["pass"] else EXIT_FAIL


def cmd_decompose(args, params):
    from .needlets import analyze, build_system, export_tree

    J = _levels(args, 6)
    system = build_system(params, args.cutoff, J)
    f, source = _input(args, params, 2 ** J)
    tree = analyze(system, f, source=source)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, sidecar = export_tree(tree, out / args.name)
    report = {
        "command": "decompose",
        "params": params.as_dict(),
        "levels": J,
        "cutoff": system.pair.name,
        "source": source,
        "tree_file": Path(csv_path).name,
        "sidecar_file": Path(sidecar).name,
        "nonzero_levels": [j for j, h in enumerate(tree.levels) if np.any(h)],
        "nonzero_count": tree.nonzero_count(),
        "residual": tree.residual,
        "relative_residual": tree.residual / f.l2_norm() if f.l2_norm() > 0 else 0.0,
    }
    _emit(args, "decompose", report)
    return EXIT_PASS


def cmd_reconstruct(args, params):
    from .needlets import import_tree, synthesize

    tree = import_tree(args.tree, args.sidecar)
    system = tree.system
    rec = synthesize(system, tree)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    coeff_path = out / "reconstruction.csv"
    write_coefficients(coeff_path, rec)
    report = {
        "command": "reconstruct",
        "params": system.params.as_dict(),
        "levels": system.max_level,
        "cutoff": system.pair.name,
        "coefficients_file": coeff_path.name,
        "l2_norm": rec.l2_norm(),
    }
    ref, source = _input(args, system.params, 2 ** system.max_level)
    if ref is None and tree.source:
        try:
            ref, source = preset(tree.source, system.params, 2 ** system.max_level), tree.source
        except ParameterError:
            ref = None
    if ref is not None:
        err = (rec - ref).l2_norm()
        report["reference"] = source
        report["residual"] = err
        report["relative_residual"] = err / ref.l2_norm() if ref.l2_norm() > 0 else err
    _emit(args, "reconstruct", report)
    return EXIT_PASS


def cmd_verify(args, params):
    from .verify import SUITES, VerifyConfig, report, run_suite

    if args.suite not in SUITES + ("all",):
        raise ParameterError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES + ('all',))}")
    cfg = VerifyConfig(params, args.levels, args.cutoff, args.grid, args.slack, args.seed)
    result = report(args.suite, cfg, run_suite(args.suite, cfg))
    _emit(args, f"verify_{args.suite}", result)
    return EXIT_PASS if result["pass"] else EXIT_FAIL


def cmd_norms(args, params):
    from .needlets import analyze, build_system
    from .spaces import SpaceSpec, continuous_norm, lp_norm, sequence_norm

    J = _levels(args, 6)
    spec = SpaceSpec(args.space, args.s, args.p, args.q, args.scale)
    system = build_system(params, args.cutoff, J)
    f, source = _input(args, params, 2 ** (J - 1) if J else 0)
    if f.effective_degree() > system.degree:
        f = ExpansionCoefficients(params, f.values[: system.degree + 1], band_limited=True)
    tree = analyze(system, f, source=source)
    cont = continuous_norm(f, spec, system)
    seq = sequence_norm(tree, spec, system.geometries)
    report = {
        "command": "norms",
        "params": params.as_dict(),
        "levels": J,
        "cutoff": system.pair.name,
        "source": source,
        "spec": spec.label,
        "continuous": cont,
        "sequence": seq,
        "ratio": cont / seq if seq > 0 else None,
        "lp_norm": f.l2_norm() if args.p == 2 else lp_norm(f, args.p),
    }
    _emit(args, "norms", report)
    return EXIT_PASS


def _n_grid(text):
    try:
        grid = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"--n-grid must be comma-separated integers, got {text!r}") from None
    if not grid or min(grid) < 0:
        raise ParameterError("--n-grid needs nonnegative integers")
    return grid


def cmd_nterm(args, params):
    from .approx import jackson_experiment

    J = _levels(args, 10)
    grid = _n_grid(args.n_grid)
    f, source = _input(args, params, 2 ** J)
    rep = jackson_experiment(f, args.p, grid, J, params=params, pair=args.cutoff,
                             against=args.against)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "nterm.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("n", "sigma_n"))
        for n, s in zip(rep["n_grid"], rep["sigma"]):
            w.writerow([n, fmt17(s)])
    summary = {
        "command": "nterm",
        "params": params.as_dict(),
        "source": source,
        "curve_file": "nterm.csv",
        **{k: rep[k] for k in ("J", "p", "slope", "slope_fit_residual", "s_emp", "s_emp_fit_residual",
                               "c_observed", "residual", "target", "nonzero_terms", "notes")},
    }
    _emit(args, "nterm", summary)
    return EXIT_PASS


def cmd_probe(args, params):
    from . import kernels
    from .jacobi import nikolski_probe
    from .quadrature import christoffel_lower_probe, theta_grid
    from .verify import kernel_cutoff

    kind = args.kind
    if kind == "nikolski":
        rep = nikolski_probe(table_for(params, args.n), args.n, args.q, args.p, args.trials,
                             seed=args.seed, s=args.s)
    elif kind == "christoffel":
        rep = christoffel_lower_probe(params, args.n, args.eps, theta_grid(args.grid))
        rep.pop("values")
    elif kind == "bernstein":
        from .approx import bernstein_probe
        from .needlets import build_system

        system = build_system(params, args.cutoff, _levels(args, 6))
        rep = bernstein_probe(system, args.n, args.s, args.p, args.trials, args.seed)
    else:
        K = kernels.make_kernel(params, kernel_cutoff(args.cutoff), args.n)
        if kind == "localization":
            rep = kernels.localization_probe(K, args.sigma, args.grid)
        elif kind == "lp-integral":
            rep = kernels.lp_integral_probe(K, args.p)
        elif kind == "lipschitz":
            rep = kernels.lipschitz_probe(K, sigma=args.sigma, seed=args.seed)
        else:
            rep = kernels.univariate_probe(K, grid_size=args.grid)
    _emit(args, f"probe_{kind}", rep)
    return EXIT_PASS


COMMANDS = {
    "quadrature": cmd_quadrature,
    "decompose": cmd_decompose,
    "reconstruct": cmd_reconstruct,
    "verify": cmd_verify,
    "norms": cmd_norms,
    "nterm": cmd_nterm,
    "probe": cmd_probe,
}


def _fail(exc, code):
    body = {"error": str(exc), "type": type(exc).__name__, "exit_code": code}
    if isinstance(exc, ParseError) and exc.line is not None:
        body["line"] = exc.line
    print(json.dumps(body), file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        params = WeightParams(args.alpha, args.beta)
        if args.threads is not None and args.threads < 1:
            raise ParameterError("--threads must be positive")
        if args.grid < 2:
            raise ParameterError("--grid must be at least 2")
        if not (args.slack >= 1):
            raise ParameterError("--slack must be at least 1")
        threads = args.threads or os.cpu_count() or 1
        with threadpool_limits(limits=threads):
            return COMMANDS[args.command](args, params)
    except NeedletError as exc:
        return _fail(exc, exc.exit_code)
    except (FloatingPointError, np.linalg.LinAlgError, OverflowError) as exc:
        return _fail(exc, 4)
    except MemoryError as exc:
        return _fail(exc, 3)


if __name__ == "__main__":
    sys.exit(main())
