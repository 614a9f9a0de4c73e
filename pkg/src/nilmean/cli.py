"""Command-line front end.

Subcommands: ``sig`` (signature of a CSV path), ``barycenter`` (group mean of
signature files, any or all algorithms), ``gen-polys`` (correction-polynomial
families and count tables), ``basis`` (Lyndon basis dump), ``bm-check``
(Brownian-motion verification: exact projection identity plus Monte-Carlo
decay ladder).

Exit codes: 0 success, 2 input error, 3 tolerance/assertion failure.
``NILMEAN_THREADS`` sets the worker count for Monte-Carlo sampling.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import paths, polynomials
from .barycenter import ALGORITHMS, DiscreteMeasure, ToleranceError, barycenter_ambient
from .lyndon import get_basis, lie_dim
from .tensor import Shape, TruncatedTensor, log, mul, pi1, tensor_from_json, tensor_to_json

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_TOLERANCE = 3


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _write_output(payload, out: str | None):
    text = json.dumps(payload, indent=2)
    if out is None or out == "-":
        print(text)
    else:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def _load_csv(path: str) -> np.ndarray:
    text = _read_text(path)
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        cells = line.replace(",", " ").split()
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            if rows:
                raise ValueError(f"malformed CSV row: {line!r}")
            continue  # header line
    if not rows:
        raise ValueError(f"no numeric rows in {path}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"ragged CSV in {path}: row widths {sorted(widths)}")
    return np.array(rows)


def _load_tensors(paths_list) -> list[TruncatedTensor]:
    tensors = []
    for p in paths_list:
        obj = json.loads(_read_text(p))
        items = obj if isinstance(obj, list) else [obj]
        tensors.extend(tensor_from_json(item) for item in items)
    return tensors


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("NILMEAN_THREADS", "1")))
    except ValueError:
        return 1


# -- subcommands -----------------------------------------------------------------


def cmd_sig(args) -> int:
    pts = _load_csv(args.input)
    if pts.shape[1] != args.d:
        raise ValueError(f"path has {pts.shape[1]} columns, expected d={args.d}")
    sig = paths.sig_pwl(paths.PiecewiseLinearPath(pts), Shape(args.d, args.L))
    _write_output(tensor_to_json(sig), args.out)
    return EXIT_OK


def cmd_barycenter(args) -> int:
    tensors = _load_tensors(args.input)
    if args.d is not None and args.L is not None:
        shape = Shape(args.d, args.L)
        if any(t.shape != shape for t in tensors):
            raise ValueError("input tensors do not match the requested shape")
    weights = None
    if args.weights:
        weights = _load_csv(args.weights).ravel()
    nu = DiscreteMeasure(tensors, weights)
    scale = nu.coefficient_scale()
    names = list(ALGORITHMS) if args.algo == "all" else [args.algo]
    results, timing = {}, {}
    for name in names:
        t0 = time.perf_counter()
        results[name] = ALGORITHMS[name](nu)
        timing[name] = time.perf_counter() - t0
    max_disc = 0.0
    items = list(results.values())
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            diff = max(
                abs(a - b)
                for la, lb in zip(items[i].mean.levels, items[j].mean.levels)
                for a, b in zip(la, lb)
            )
            max_disc = max(max_disc, diff / scale)
    primary = items[0]
    payload = {
        "algorithm": args.algo,
        "mean": tensor_to_json(primary.mean),
        "lyndon_coords": [float(v) for v in primary.lyndon_coords],
        "residual_norm": primary.residual_norm,
        "timing_seconds": timing,
    }
    if args.algo == "all":
        payload["max_discrepancy"] = max_disc
        payload["residual_norms"] = {n: r.residual_norm for n, r in results.items()}
    _write_output(payload, args.out)
    if any(r.residual_norm > args.tol * scale for r in items):
        raise ToleranceError("residual norm above tolerance")
    if max_disc > args.tol:
        raise ToleranceError(f"algorithms disagree by {max_disc:.3e} > {args.tol:.1e}")
    return EXIT_OK


def cmd_gen_polys(args) -> int:
    if args.table:
        value = {
            "Q": lambda: polynomials.max_r_terms(args.d, args.L),
            "P": lambda: polynomials.max_p_terms(args.d, args.L),
            "B": lambda: lie_dim(Shape(args.d, args.L)),
        }[args.table]()
        print(value)
        return EXIT_OK
    shape = Shape(args.d, args.L)
    n = get_basis(args.d, args.L).dim
    order = None
    if args.order:
        order = {
            "lex": polynomials.MonomialOrder.lex_c_desc,
            "deglex": polynomials.MonomialOrder.deglex_c_asc,
            "degrevlex": polynomials.MonomialOrder.degrevlex_c_asc,
        }[args.order](n)
    if args.family == "r":
        polys = polynomials.generate_r(shape, order, scan_prefixes=args.scan_prefixes)
    elif args.family == "p":
        polys = polynomials.generate_p(shape)
    elif args.family == "q":
        polys = polynomials.generate_q(shape)
    else:
        polys = polynomials.generate_abch_r(shape)
    counts = polynomials.term_counts(polys)
    if args.format == "json":
        payload = {
            "d": args.d,
            "L": args.L,
            "family": args.family,
            "term_counts": counts,
            "max_terms": max(counts, default=0),
            "polynomials": polynomials.family_to_json(args.family, polys),
        }
        _write_output(payload, args.out)
    else:
        lines = [f"{args.family}_{j} = {p}" for j, p in enumerate(polys, start=1)]
        lines.append(f"max terms: {max(counts, default=0)}")
        text = "\n".join(lines)
        if args.out and args.out != "-":
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    return EXIT_OK


def cmd_basis(args) -> int:
    basis = get_basis(args.d, args.L)
    payload = {"d": args.d, "L": args.L, "B": basis.dim, "words": basis.basis_json()}
    _write_output(payload, args.out)
    return EXIT_OK


def cmd_bm_check(args) -> int:
    if args.sigma:
        sigma = paths.CovarianceMatrix(_load_csv(args.sigma))
        if sigma.dim != args.d:
            raise ValueError(f"covariance is {sigma.dim}x{sigma.dim}, expected d={args.d}")
    else:
        sigma = paths.CovarianceMatrix(np.eye(args.d))
    shape = Shape(args.d, args.L)

    expected = paths.expected_sig_bm(sigma, shape)
    pi1_norm = pi1(expected).norm_inf()

    ladder = [int(v) for v in args.ladder.split(",") if v]
    if sorted(ladder) != ladder or len(ladder) < 2:
        raise ValueError("ladder must be an increasing list of at least two sample counts")
    norms = []
    for m in ladder:
        sigs = paths.sample_bm_signatures(
            sigma, args.steps, args.seed, shape, m, workers=_threads()
        )
        mean = barycenter_ambient(DiscreteMeasure(sigs)).mean
        norms.append(log(mean).norm_inf())
    ratio = norms[-1] / norms[0] if norms[0] else 0.0
    payload = {
        "d": args.d,
        "L": args.L,
        "pi1_of_expected_signature": pi1_norm,
        "ladder": [{"samples": m, "log_mean_norm": v} for m, v in zip(ladder, norms)],
        "last_to_first_ratio": ratio,
    }
    _write_output(payload, args.out)
    if pi1_norm > args.exact_tol:
        raise ToleranceError(
            f"pi1 of the expected signature is {pi1_norm:.3e} > {args.exact_tol:.1e}"
        )
    if ratio >= args.decay_ratio:
        raise ToleranceError(
            f"Monte-Carlo norms do not decay: ratio {ratio:.3f} >= {args.decay_ratio}"
        )
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nilmean", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p_sig = sub.add_parser("sig", help="signature of a piecewise-linear CSV path")
    p_sig.add_argument("--d", type=int, required=True)
    p_sig.add_argument("--L", type=int, required=True)
    p_sig.add_argument("--input", required=True, help="CSV path file, '-' for stdin")
    p_sig.add_argument("--out", default=None)
    p_sig.set_defaults(func=cmd_sig)

    p_bar = sub.add_parser("barycenter", help="group mean of grouplike tensors")
    p_bar.add_argument("--algo", choices=[*ALGORITHMS, "all"], default="ambient")
    p_bar.add_argument("--d", type=int, default=None)
    p_bar.add_argument("--L", type=int, default=None)
    p_bar.add_argument(
        "--input", nargs="+", required=True,
        help="JSON tensor files or arrays of tensors; '-' for stdin",
    )
    p_bar.add_argument("--weights", default=None, help="CSV file of weights (default uniform)")
    p_bar.add_argument("--tol", type=float, default=1e-10)
    p_bar.add_argument("--out", default=None)
    p_bar.set_defaults(func=cmd_barycenter)

    p_gen = sub.add_parser("gen-polys", help="correction-polynomial families and tables")
    p_gen.add_argument("--d", type=int, required=True)
    p_gen.add_argument("--L", type=int, required=True)
    p_gen.add_argument("--family", choices=["p", "q", "r", "abch"], default="r")
    p_gen.add_argument("--order", choices=["lex", "deglex", "degrevlex"], default=None)
    p_gen.add_argument("--scan-prefixes", action="store_true")
    p_gen.add_argument("--format", choices=["json", "text"], default="text")
    p_gen.add_argument(
        "--table", choices=["Q", "B", "P"], default=None,
        help="print one table cell: Q = max reduced terms, B = Lie dimension, P = max raw terms",
    )
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(func=cmd_gen_polys)

    p_basis = sub.add_parser("basis", help="dump the Lyndon basis as JSON")
    p_basis.add_argument("--d", type=int, required=True)
    p_basis.add_argument("--L", type=int, required=True)
    p_basis.add_argument("--out", default=None)
    p_basis.set_defaults(func=cmd_basis)

    p_bm = sub.add_parser("bm-check", help="Brownian-motion verification experiment")
    p_bm.add_argument("--d", type=int, default=2)
    p_bm.add_argument("--L", type=int, default=4)
    p_bm.add_argument("--sigma", default=None, help="CSV covariance matrix (default identity)")
    p_bm.add_argument("--seed", type=int, default=0)
    p_bm.add_argument("--ladder", default="1000,2000,4000")
    p_bm.add_argument("--steps", type=int, default=128)
    p_bm.add_argument("--exact-tol", type=float, default=1e-13)
    p_bm.add_argument("--decay-ratio", type=float, default=0.75)
    p_bm.add_argument("--out", default=None)
    p_bm.set_defaults(func=cmd_bm_check)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ToleranceError as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
