"""Command-line front end: ``rankpref {stats,fit,predict,experiment,audit}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys

from rankpref import _backend, consistency, report, svd
from rankpref.config import ConfigError, build_config, read_config_values
from rankpref.harness import MethodSpec, audit_consensus_order, parse_methods, run_experiment
from rankpref.ratings import DataError, load_dataset, subsample, summarize

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_dataset(p, required=True):
    p.add_argument("--dataset", required=required, help="ratings file")
    p.add_argument("--format", choices=("movielens", "csv"), default=None,
                   help="file format (default: .dat is movielens, else csv)")
    p.add_argument("--max-users", type=int, default=None,
                   help="keep only the first N users by index")
    p.add_argument("--max-items", type=int, default=None,
                   help="keep only the first N items by index")


def _load(args):
    matrix = load_dataset(args.dataset, args.format)
    if args.max_users is not None or args.max_items is not None:
        matrix = subsample(matrix, args.max_users, args.max_items)
    return matrix


def cmd_stats(args):
    s = summarize(_load(args))
    print(f"users       {s['n_users']}")
    print(f"items       {s['n_items']}")
    print(f"entries     {s['nnz']:,}")
    print(f"sparsity    {100 * s['sparsity']:.2f}%")
    print(f"components  {s['n_components']}")
    print("histogram")
    for value, count in s["histogram"].items():
        print(f"  {value:g}  {count}")
    return EXIT_OK


def cmd_fit(args):
    specs = parse_methods(args.methods, _fractions(args))
    if len(specs) != 1:
        raise UsageError("fit takes exactly one method (use svd:<fraction> for SVD)")
    spec = specs[0]
    matrix = _load(args)
    if spec.kind == "svd":
        model = svd.fit_svd(matrix, spec.fraction, seed=args.seed)
        svd.save_model(model, args.out_model)
        print(f"{spec.name}: k={model.rank} -> {args.out_model}")
        return EXIT_OK
    fit = consistency.fit_uc if spec.kind == "uc" else consistency.fit_sc
    model = fit(matrix, tol=args.tol, max_iter=args.max_iter)
    consistency.save_model(model, args.out_model)
    st = model.fit_stats
    print(f"{spec.name}: {st.iterations} sweeps, residual {st.final_residual:.3g}, "
          f"{model.components.n_components} component(s) -> {args.out_model}")
    return EXIT_OK if st.converged else EXIT_NONCONVERGED


def _read_model(path):
    with open(path, encoding="utf-8") as fh:
        tag = fh.readline().split(" ", 1)[0]
    if tag == consistency.FORMAT_TAG:
        return consistency.load_model(path)
    if tag == svd.FORMAT_TAG:
        return svd.load_model(path)
    raise DataError(f"{path}: unrecognised model file")


def cmd_predict(args):
    model = _read_model(args.model)
    u, i = args.user, args.item
    if args.dataset:
        matrix = _load(args)
        try:
            u = matrix.user_index(_as_id(u, matrix.user_ids))
            i = matrix.item_index(_as_id(i, matrix.item_ids))
        except KeyError as exc:
            raise DataError(f"unknown id {exc}") from None
    else:
        u, i = int(u), int(i)
    if isinstance(model, svd.SvdModel):
        value = svd.predict_svd(model, u, i)
    else:
        value = consistency.predict(model, u, i, clamp=args.clamp)
    print(repr(value))
    return EXIT_OK


def _as_id(text, ids):
    return int(text) if ids.dtype.kind in "iu" else text


def _fractions(args):
    if getattr(args, "svd_fractions", None):
        return tuple(float(x) for x in args.svd_fractions.split(",") if x.strip())
    return svd.DEFAULT_FRACTIONS


def cmd_experiment(args):
    values = read_config_values(args.config) if args.config else {}
    overrides = {
        "dataset": args.dataset, "format": args.format, "methods": args.methods,
        "svd_fractions": args.svd_fractions, "gaps": args.gaps, "seed": args.seed,
        "max_users": args.pairs, "subsample_users": args.max_users,
        "subsample_items": args.max_items, "out_csv": args.out_csv, "out_svg": args.out_svg,
        "tol": args.tol, "max_iter": args.max_iter, "workers": args.workers,
    }
    values.update({k: str(v) for k, v in overrides.items() if v is not None})
    cfg = build_config(values)
    if cfg.dataset is None:
        raise UsageError("no dataset given (config key 'dataset' or --dataset)")
    result = run_experiment(cfg)
    print(f"{'method':<10} {'gap':>5} {'pairs':>6} {'disc':>6} {'conc':>6} {'ties':>5} "
          f"{'skip':>5} {'tau':>8} {'rmse':>7}")
    for r in result.reports:
        print(f"{r.method:<10} {r.r_hi:g}/{r.r_lo:g}".ljust(16)
              + f" {r.n_pairs:>6} {r.discordant:>6} {r.concordant:>6} {r.ties:>5} "
              f"{r.skipped:>5} {r.kendall_tau:>8.4f} {r.rmse_withheld:>7.4f}")
    if cfg.out_csv:
        report.emit_report(result.reports, "csv", cfg.out_csv)
    if cfg.out_svg:
        report.emit_report(result.reports, "svg", cfg.out_svg)
    if result.unconverged:
        cells = ", ".join(f"{m} {g[0]:g}/{g[1]:g}" for m, g in result.unconverged)
        print(f"balancing did not converge for: {cells}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_audit(args):
    method = args.method.lower()
    if method == "svd":
        spec = MethodSpec("svd", args.fraction)
        svd.rank_for_fraction(args.fraction, 1, 1)
    elif method in ("uc", "sc"):
        spec = MethodSpec(method)
    else:
        raise UsageError(f"unknown method {args.method!r}")
    res = audit_consensus_order(spec, trials=args.trials, seed=args.seed, tol=args.tol,
                                max_iter=args.max_iter)
    print(f"{res.method}: {res.violations} violations in {res.trials} trials "
          f"({res.resampled} draws resampled)")
    if spec.kind in ("uc", "sc") and res.violations:
        print(f"{res.method} must never violate consensus order", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="rankpref", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s (kernels: {_backend.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", help="dataset summary statistics")
    _add_dataset(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("fit", help="fit one method and save the model")
    _add_dataset(p)
    p.add_argument("--methods", required=True, help="uc, sc or svd:<fraction>")
    p.add_argument("--svd-fractions", default=None)
    p.add_argument("--out-model", required=True)
    p.add_argument("--tol", type=float, default=consistency.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=consistency.DEFAULT_MAX_ITER)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict one rating from a saved model")
    _add_dataset(p, required=False)
    p.add_argument("--model", required=True)
    p.add_argument("--user", required=True,
                   help="dense user index, or external id when --dataset is given")
    p.add_argument("--item", required=True,
                   help="dense item index, or external id when --dataset is given")
    p.add_argument("--clamp", action="store_true", help="clamp to the rating scale")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("experiment", help="pair-withholding discordance experiment")
    p.add_argument("config", nargs="?", help="key = value config file")
    p.add_argument("--dataset")
    p.add_argument("--format", choices=("movielens", "csv"))
    p.add_argument("--methods")
    p.add_argument("--svd-fractions")
    p.add_argument("--gaps", help="e.g. '5,1;5,2;5,3;5,4'")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-users", type=int, help="keep only the first N users by index")
    p.add_argument("--max-items", type=int, help="keep only the first N items by index")
    p.add_argument("--pairs", help="withheld pairs per gap (K), or 'all'")
    p.add_argument("--out-csv")
    p.add_argument("--out-svg")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("audit", help="consensus-order audit on random unanimous matrices")
    p.add_argument("method", help="uc, sc or svd")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fraction", type=float, default=0.3, help="retained fraction for svd")
    p.add_argument("--tol", type=float, default=consistency.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=consistency.DEFAULT_MAX_ITER)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"rankpref: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"rankpref: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"rankpref: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
