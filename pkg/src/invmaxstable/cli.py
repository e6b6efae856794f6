"""Command-line interface.

Subcommands: simulate, fit, quantiles, theory, verify, fig2. Every output
file gets a ``<file>.manifest.json`` with the command line, family, seeds,
thresholds, version, timestamp and output hashes.

Exit codes: 0 success, 2 usage or parameter domain error, 3 data error,
4 numerical failure (including failed verification suites).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .exponent import FAMILIES, ParameterError, UnsupportedTailError, make_family, parse_family
from .fit import (FIGURE_PROBS, FitDataError, fit_model, figure2, quantile_curves,
                  theoretical_curves)
from .norming import REFERENCE_LEVELS, limit_law_for, norming_for
from .numerics import ConvergenceError, RandomStream
from .simulate import SampleDataError, file_sha256, format_float, load_sample, sample
from .verify import run_suites

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

#: command-line flag -> family parameter name
PARAM_FLAGS = {"lambda": "lam", "rho": "rho", "nu": "nu", "theta": "theta", "phi": "phi",
               "alpha": "alpha", "gamma": "gamma", "kappa": "kappa", "delta": "delta"}

MARKER_PROBS = (0.95, 1 - 1e-7, 1 - 1e-13)


class UsageError(ValueError):
    """Invalid combination of command-line arguments."""


# ---------------------------------------------------------------------------
# helpers

def _parse_value(text: str):
    """A float, or an ``a..b`` sweep returned as a (lo, hi) tuple."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        try:
            return float(lo), float(hi)
        except ValueError:
            raise UsageError(f"bad sweep {text!r}; expected a..b") from None
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"bad number {text!r}") from None


def _sweep_values(lo, hi, steps):
    if steps < 2:
        raise UsageError("--steps must be at least 2")
    if lo > 0 and hi > 0:
        return np.geomspace(lo, hi, steps)
    return np.linspace(lo, hi, steps)


def _family_params(args, allow_sweep=False):
    """(family name, fixed params, swept name or None, swept values)."""
    if getattr(args, "spec", None):
        if args.family:
            raise UsageError("use either --spec or --family, not both")
        fam = parse_family(args.spec)
        return fam.family_id, dict(fam.params), None, None
    if not args.family:
        raise UsageError("a family is required (--family NAME or --spec TEXT)")
    params, swept, values = {}, None, None
    for flag, name in PARAM_FLAGS.items():
        raw = getattr(args, f"p_{flag}", None)
        if raw is None:
            continue
        val = _parse_value(raw)
        if isinstance(val, tuple):
            if not allow_sweep:
                raise UsageError(f"--{flag}: sweeps are only accepted by 'theory'")
            if swept is not None:
                raise UsageError("only one parameter may be swept")
            swept, values = name, _sweep_values(*val, args.steps)
        else:
            params[name] = val
    return args.family, params, swept, values


def _family(args):
    name, params, _, _ = _family_params(args)
    return make_family(name, **params)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else format_float(v) for v in row)
                     + "\n")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _write_manifest(path, argv, extra):
    man = {"command": ["invmaxstable", *argv], "tool_version": __version__,
           "timestamp": datetime.now(timezone.utc).isoformat(),
           "outputs": {Path(path).name: file_sha256(path)}}
    man.update(extra)
    _write_json(str(path) + ".manifest.json", man)


def _family_record(fam):
    d = fam.to_dict()
    return {"family": d["family_id"], "params": d["params"]}


def _out_path(base, index, total):
    if total == 1:
        return Path(base)
    p = Path(base)
    return p.with_name(f"{p.stem}_rep{index:03d}{p.suffix}")


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args, argv):
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    fam = _family(args)
    for i in range(args.reps):
        index = args.stream_index + i
        s = sample(fam, args.n, RandomStream(args.seed, index), backend=args.backend)
        path = _out_path(args.out, i, args.reps)
        s.to_csv(path)
        _write_manifest(path, argv, {**s.manifest(), "backend": s.backend})
    return EXIT_OK


def _load_pairs(path):
    return load_sample(path).pairs


def cmd_fit(args, argv):
    pairs = _load_pairs(args.input)
    fit = fit_model(pairs, args.model, args.threshold_quantile, args.empirical_threshold)
    out = Path(args.out)
    _write_json(out, fit.to_json())
    extra = {"input": str(args.input), "input_sha256": file_sha256(args.input),
             "model": fit.spec.kind, "threshold_quantile": args.threshold_quantile,
             "empirical_threshold": args.empirical_threshold, "threshold": fit.threshold_u}
    _write_manifest(out, argv, extra)
    res_path = Path(args.residuals) if args.residuals else out.with_name(
        out.stem + "_residuals.csv")
    keep = pairs[:, 0] > fit.threshold_u
    _write_csv(res_path, ("x", "y", "z"),
               zip(pairs[keep, 0], pairs[keep, 1], fit.residuals))
    _write_manifest(res_path, argv, extra)
    return EXIT_OK


def _probs(text):
    try:
        probs = [float(p) for p in text.split(",")]
    except ValueError:
        raise UsageError(f"bad probability list {text!r}") from None
    if any(not 0 < p < 1 for p in probs):
        raise UsageError("probabilities must lie in (0, 1)")
    return sorted(probs)


def cmd_quantiles(args, argv):
    pairs = _load_pairs(args.input)
    probs = _probs(args.probs)
    fit = fit_model(pairs, args.model, args.threshold_quantile, args.empirical_threshold)
    x_max = args.x_max if args.x_max is not None else float(pairs[:, 0].max())
    if not x_max > fit.threshold_u:
        raise UsageError("--x-max must exceed the threshold")
    grid = np.linspace(fit.threshold_u, x_max, args.n_points)
    rows = [("fitted", c.prob, x, q) for c in quantile_curves(fit, probs, grid)
            for x, q in zip(c.x_grid, c.values)]
    extra = {"input": str(args.input), "model": fit.spec.kind,
             "estimates": fit.spec.params, "threshold": fit.threshold_u,
             "quantile_method": "type-7"}
    if args.family or args.spec:
        fam = _family(args)
        rows += [("theory", c.prob, x, q) for c in theoretical_curves(fam, probs, grid)
                 for x, q in zip(c.x_grid, c.values)]
        extra.update(_family_record(fam))
    _write_csv(args.out, ("source", "p", "x", "q"), rows)
    _write_manifest(args.out, argv, extra)
    return EXIT_OK


def _theory_grid(args):
    lo = -math.log1p(-args.p_min)
    xs = np.geomspace(lo, args.x_max, args.n_points)
    markers = [-math.log1p(-p) for p in MARKER_PROBS]
    return np.unique(np.concatenate([xs, [m for m in markers if lo <= m <= args.x_max]]))


def cmd_theory(args, argv):
    name, params, swept, values = _family_params(args, allow_sweep=True)
    settings = [dict(params)] if swept is None else [
        {**params, swept: float(v)} for v in values]
    rows = []
    marker_x = {-math.log1p(-p): p for p in MARKER_PROBS}
    if args.what == "norming":
        header = ("setting", "x", "a", "b", "a_over_x", "logb_over_logx", "marker_p")
        xs = _theory_grid(args)
        for k, p in enumerate(settings):
            nm = norming_for(make_family(name, **p))
            a, b = np.asarray(nm.a(xs)), np.asarray(nm.b(xs))
            for x, ai, bi in zip(xs, a, b):
                mk = marker_x.get(float(x))
                rows.append((k, x, ai, bi, ai / x, math.log(bi) / math.log(x),
                             format_float(mk) if mk is not None else ""))
    else:
        header = ("setting", "z", "G")
        for k, p in enumerate(settings):
            law = limit_law_for(make_family(name, **p))
            zq = law.quantile(np.array([0.001, 0.999]))
            z = np.linspace(zq[0], zq[1], args.n_points)
            rows += [(k, zi, gi) for zi, gi in zip(z, np.asarray(law.cdf(z)))]
    _write_csv(args.out, header, rows)
    _write_manifest(args.out, argv, {"family": name, "what": args.what,
                                     "settings": settings,
                                     "reference_levels": list(REFERENCE_LEVELS)})
    return EXIT_OK


def cmd_verify(args, argv):
    suites = run_suites(args.suite or ["all"])
    report = {"passed": all(s.passed for s in suites),
              "suites": [s.to_json() for s in suites]}
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        _write_manifest(args.out, argv, {"suites": [s.name for s in suites]})
    else:
        print(text)
    for s in suites:
        print(f"{s.name}: {'PASS' if s.passed else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_NUMERIC


def cmd_fig2(args, argv):
    try:
        lams = [float(v) for v in args.lambdas.split(",")]
    except ValueError:
        raise UsageError(f"bad --lambda list {args.lambdas!r}") from None
    if args.reps < 1 or args.n < 1:
        raise UsageError("--reps and --n must be positive")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {}
    for lam in lams:
        res = figure2(lam, reps=args.reps, n=args.n, threshold_quantile=args.threshold,
                      base_seed=args.seed, n_points=args.n_points, backend=args.backend)
        rows = [(kind, c.prob, x, q) for kind, curves in res.averaged.items()
                for c in curves for x, q in zip(c.x_grid, c.values)]
        rows += [("theory", c.prob, x, q) for c in res.theoretical
                 for x, q in zip(c.x_grid, c.values)]
        path = out_dir / f"fig2_lambda{format_float(lam)}.csv"
        _write_csv(path, ("model", "p", "x", "q"), rows)
        key = format_float(lam)
        summary[key] = {
            "median_gap_relative_iqr": res.median_gap,
            "non_converged_fits": res.n_failed,
            "discrepancy_relative_iqr": {
                kind: {format_float(d.prob): d.mean_abs_relative_iqr for d in ds}
                for kind, ds in res.discrepancies.items()},
        }
        _write_manifest(path, argv, {"family": "smith", "params": {"lam": lam},
                                     "seed": args.seed, "reps": args.reps, "n": args.n,
                                     "threshold_quantile": args.threshold})
    spath = out_dir / "fig2_summary.json"
    _write_json(spath, summary)
    _write_manifest(spath, argv, {"seed": args.seed})
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _add_family_args(p, required=False):
    g = p.add_argument_group("family")
    g.add_argument("--family", choices=sorted(FAMILIES), required=False)
    g.add_argument("--spec", help="family text, e.g. 'family=smith lambda=1.3'")
    for flag in PARAM_FLAGS:
        g.add_argument(f"--{flag}", dest=f"p_{flag}", metavar="VALUE")


def _add_fit_args(p):
    p.add_argument("--input", required=True, help="CSV with columns x,y")
    p.add_argument("--model", choices=("canonical", "smith", "gamma"), default="canonical")
    p.add_argument("--threshold-quantile", type=float, default=0.935)
    p.add_argument("--empirical-threshold", action="store_true",
                   help="use the empirical quantile of x instead of -log(1-q)")


def build_parser():
    ap = argparse.ArgumentParser(prog="invmaxstable", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw samples in exponential margins")
    _add_family_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream-index", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--backend", choices=("python", "cython"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a conditional-extremes model")
    _add_fit_args(p)
    p.add_argument("--out", required=True, help="fit JSON path")
    p.add_argument("--residuals", help="residual CSV path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("quantiles", help="fitted and theoretical quantile curves")
    _add_fit_args(p)
    _add_family_args(p)
    p.add_argument("--probs", default=",".join(str(v) for v in FIGURE_PROBS))
    p.add_argument("--x-max", type=float)
    p.add_argument("--n-points", type=int, default=40)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quantiles)

    p = sub.add_parser("theory", help="norming functions or limit laws")
    _add_family_args(p)
    p.add_argument("--what", choices=("norming", "limit"), default="norming")
    p.add_argument("--steps", type=int, default=25, help="points in a parameter sweep")
    p.add_argument("--p-min", type=float, default=0.87,
                   help="x grid starts at -log(1 - p_min)")
    p.add_argument("--x-max", type=float, default=35.0)
    p.add_argument("--n-points", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("--suite", action="append",
                   choices=("all", "moment", "eta", "lemma1", "convergence", "variation"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fig2", help="replicated simulation study for Smith data")
    p.add_argument("--lambda", dest="lambdas", default="0.3,1.3")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=0.935)
    p.add_argument("--n-points", type=int, default=40)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--backend", choices=("python", "cython"))
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_fig2)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args, argv)
    except (FitDataError, SampleDataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParameterError, UnsupportedTailError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
