"""Command-line interface.

Exit codes: 0 success, 1 usage, 2 input/parse error, 3 fit failure,
4 degenerate data.
"""

import argparse
import logging
import shlex
import sys
import warnings

import numpy as np

from . import __version__
from .alpha import alpha_bootstrap, krippendorff_alpha
from .data import LEVELS, DataError, DegenerateDataError, read_csv, write_csv
from .diagnostics import alpha_influence, influence
from .estimation import FitError, FitOptions, fit
from .kernels import InfeasibleError
from .marginals import FAMILIES, parse_margin_spec
from .objectives import METHODS
from .plotdata import bland_altman, histogram_density, table_to_csv
from .report import fit_document, fit_summary, format_table, to_json
from .simulate import simulate_data
from .structures import STRUCTURES, InterCoder
from .study import load_scenario, results_to_csv, run_scenario
from .uncertainty import confint

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_FIT, EXIT_DEGENERATE = 0, 1, 2, 3, 4


class UsageError(Exception):
    """Invalid or incompatible command-line options."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_model_options(p):
    p.add_argument("input", help="CSV file with a c.<coder>.<replicate> header")
    p.add_argument("--level", choices=LEVELS, default="nominal")
    p.add_argument("--method", type=str.upper, choices=METHODS)
    p.add_argument("--structure", choices=sorted(STRUCTURES), default="inter")
    p.add_argument("--dist", choices=sorted(FAMILIES), help="marginal family")
    p.add_argument("--covariates", help="CSV of coder covariates (gold-regression)")
    p.add_argument("--link", choices=("probit", "logit"), default="probit")
    p.add_argument("--gold-methods", type=_int_list, default=[1])
    p.add_argument("--ecdf", choices=("standard", "winsorized", "smoothed"),
                   default="winsorized")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--gtol", type=float, default=1e-6)
    p.add_argument("--ftol", type=float, default=1e-10)
    p.add_argument("--keep-singletons", action="store_true",
                   help="keep units with a single score")
    p.add_argument("--multistart", action="store_true")


def _add_boot_options(p, confint=True):
    if confint:
        p.add_argument("--confint", choices=("asymptotic", "bootstrap", "none"),
                       default="asymptotic")
        p.add_argument("--interval", choices=("gaussian", "quantile"), default="gaussian")
        p.add_argument("--truncate", action="store_true",
                       help="clip agreement intervals to [0, 1]")
    p.add_argument("--bootit", type=int, default=1000)
    p.add_argument("--conf-level", type=float, default=0.95)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--nodes", type=int, help="worker count (default: available CPUs)")
    p.add_argument("--seed", type=int)


def _add_output(p):
    p.add_argument("--json", metavar="PATH", help="write a JSON result document")
    p.add_argument("--output", "-o", metavar="PATH", help="write text output here")


def build_parser():
    parser = _Parser(prog="sklars-omega",
                     description="Agreement analysis with Gaussian-copula models")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--quiet", action="store_true", help="suppress warnings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="estimate agreement")
    _add_model_options(p)
    _add_boot_options(p)
    _add_output(p)

    p = sub.add_parser("alpha", help="Krippendorff's alpha")
    p.add_argument("input")
    p.add_argument("--level", choices=LEVELS, default="nominal")
    p.add_argument("--units", type=_int_list, default=[],
                   help="1-based units for leave-one-out influence")
    _add_boot_options(p, confint=False)
    _add_output(p)

    p = sub.add_parser("influence", help="DFBETAs by unit and coder")
    _add_model_options(p)
    p.add_argument("--units", type=_int_list, default=[], help="1-based unit numbers")
    p.add_argument("--coders", type=_int_list, default=[], help="coder numbers")
    _add_output(p)

    p = sub.add_parser("simulate", help="simulate a dataset")
    p.add_argument("--margin", required=True, help="e.g. 'beta(1.5,2)', 'bernoulli(0.7)'")
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--units", type=int, required=True)
    p.add_argument("--coders", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o", metavar="PATH")

    p = sub.add_parser("study", help="run a simulation scenario")
    p.add_argument("--scenario", required=True, action="append",
                   help="registered name or key = value file (repeatable)")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--bootit", type=int, help="inner bootstrap size")
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--nodes", type=int)
    p.add_argument("--output", "-o", metavar="PATH")

    p = sub.add_parser("export-plot", help="write plot data as CSV")
    p.add_argument("input")
    p.add_argument("--kind", choices=("bland-altman", "histogram-density"), required=True)
    p.add_argument("--level", choices=LEVELS, default="interval")
    p.add_argument("--columns", type=_int_list, default=[1, 2],
                   help="1-based column pair for bland-altman")
    p.add_argument("--dist", choices=sorted(FAMILIES), help="family for the density")
    p.add_argument("--bins", default="auto")
    p.add_argument("--output", "-o", metavar="PATH")
    return parser


def _workers(args):
    if not getattr(args, "parallel", False):
        return 1
    return args.nodes if args.nodes else -1


def _check_compatible(args):
    """Reject incompatible option combinations before any computation."""
    categorical = args.level in ("nominal", "ordinal")
    method = getattr(args, "method", None)
    dist = getattr(args, "dist", None)
    if method == "ML" and categorical:
        raise UsageError("ML needs interval or ratio data; use DT or CML")
    if method in ("DT", "CML") and not categorical:
        raise UsageError(f"{method} needs nominal or ordinal data")
    if method == "SMP" and categorical:
        raise UsageError("SMP needs interval or ratio data")
    if dist is not None and (dist == "categorical") != categorical:
        raise UsageError(f"--dist {dist} does not match --level {args.level}")
    if getattr(args, "bootit", 1) is not None and getattr(args, "bootit", 1) < 1:
        raise UsageError("--bootit must be positive")
    level = getattr(args, "conf_level", 0.5)
    if not 0 < level < 1:
        raise UsageError("--conf-level must lie in (0, 1)")
    if getattr(args, "structure", None) == "gold-regression" and not args.covariates:
        raise UsageError("gold-regression needs --covariates")


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fit_from_args(args):
    data = read_csv(args.input, args.level)
    covariates = None
    if args.covariates:
        covariates = np.loadtxt(args.covariates, delimiter=",", ndmin=2)
    options = FitOptions(args.max_iter, args.gtol, args.ftol, not args.keep_singletons,
                         args.multistart)
    return data, fit(data, args.structure, family=args.dist, method=args.method,
                     options=options, covariates=covariates, link=args.link,
                     gold_methods=tuple(args.gold_methods), ecdf=args.ecdf)


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("json", "output")}


def cmd_fit(args, argv):
    _, f = _fit_from_args(args)
    ci = None
    if args.confint != "none":
        ci = confint(f, args.confint, args.conf_level, args.bootit, args.seed, _workers(args),
                     args.interval, args.truncate)
    control = {"confint": args.confint}
    if args.confint != "none":
        control.update(bootit=args.bootit, parallel="TRUE" if args.parallel else "FALSE",
                       nodes=args.nodes or (1 if not args.parallel else "all"))
    call = "sklars-omega " + " ".join(shlex.quote(a) for a in argv)
    _emit(fit_summary(f, ci, call=call, control=control), args.output)
    if args.json:
        _emit(to_json(fit_document(f, ci, _config(args))), args.json)
    if not f.converged:
        return EXIT_FIT
    return EXIT_OK


def cmd_alpha(args, argv):
    data = read_csv(args.input, args.level)
    res = alpha_bootstrap(data, args.level, args.bootit, args.seed, args.conf_level)
    lines = [f"Krippendorff's alpha ({args.level} metric): {res.alpha:.4f}",
             f"{100 * args.conf_level:g}% bootstrap interval: ({res.lower:.4f}, "
             f"{res.upper:.4f})  n_b = {res.n_b}, skipped = {res.n_skipped}",
             f"MCSE of endpoints: ({res.mcse[0]:.4f}, {res.mcse[1]:.4f})"]
    doc = {"alpha": res.alpha, "level": args.level, "lower": res.lower, "upper": res.upper,
           "mcse_lower": res.mcse[0], "mcse_upper": res.mcse[1], "n_b": res.n_b,
           "n_skipped": res.n_skipped, "config": _config(args)}
    if args.units:
        inf = alpha_influence(data, args.level, [u - 1 for u in args.units])
        for u, a, d in zip(args.units, inf.alpha_without, inf.delta):
            lines.append(f"without unit {u}: alpha = {a:.4f}, delta = {d:.4f}")
        doc["influence"] = {str(u): {"alpha": float(a), "delta": float(d)}
                            for u, a, d in zip(args.units, inf.alpha_without, inf.delta)}
    _emit("\n".join(lines) + "\n", args.output)
    if args.json:
        _emit(to_json(doc), args.json)
    return EXIT_OK


def cmd_influence(args, argv):
    data, f = _fit_from_args(args)
    for u in args.units:
        if not 1 <= u <= data.n_units:
            raise UsageError(f"unit {u} out of range 1..{data.n_units}")
    rep = influence(f, [u - 1 for u in args.units], args.coders)

    def table(label, keys, rows):
        body = [(str(k), [f"{v:.8f}" for v in row]) for k, row in zip(keys, rows)]
        return f"{label}\n" + format_table(body, rep.names) + "\n"

    parts = []
    if args.units:
        parts.append(table("dfbeta.units", args.units, rep.dfbeta_units))
    if args.coders:
        parts.append(table("dfbeta.coders", args.coders, rep.dfbeta_coders))
    _emit("\n".join(parts) or "nothing to drop\n", args.output)
    if args.json:
        doc = {"names": list(rep.names),
               "dfbeta_units": {str(u): r.tolist() for u, r in zip(args.units, rep.dfbeta_units)},
               "dfbeta_coders": {str(c): r.tolist()
                                 for c, r in zip(args.coders, rep.dfbeta_coders)},
               "delta_units": {str(u): r.tolist() for u, r in zip(args.units, rep.delta_units)},
               "delta_coders": {str(c): r.tolist()
                                for c, r in zip(args.coders, rep.delta_coders)},
               "config": _config(args)}
        _emit(to_json(doc), args.json)
    return EXIT_OK


def cmd_simulate(args, argv):
    try:
        margin = parse_margin_spec(args.margin)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    if not 0 <= args.omega < 1:
        raise UsageError("--omega must lie in [0, 1)")
    data = simulate_data(InterCoder(args.omega), margin, args.units, args.coders,
                         seed=args.seed)
    _emit(write_csv(data), args.output)
    return EXIT_OK


def cmd_study(args, argv):
    results = []
    for name in args.scenario:
        try:
            sc = load_scenario(name, reps=args.reps, seed=args.seed, n_boot=args.bootit)
        except (OSError, ValueError) as exc:
            raise UsageError(f"scenario {name!r}: {exc}") from None
        results.append(run_scenario(sc, _workers(args)))
    _emit(results_to_csv(results), args.output)
    return EXIT_OK


def cmd_export_plot(args, argv):
    data = read_csv(args.input, args.level)
    if args.kind == "bland-altman":
        if len(args.columns) != 2:
            raise UsageError("--columns needs exactly two column numbers")
        table = bland_altman(data, [c - 1 for c in args.columns])
        _emit(table_to_csv(["mean", "difference"], table), args.output)
        return EXIT_OK
    if data.is_categorical:
        raise UsageError("histogram-density needs interval or ratio data")
    f = fit(data, "inter", family=args.dist, method="ML")
    bins = int(args.bins) if args.bins.isdigit() else args.bins
    edges, counts, grid, dens = histogram_density(f, bins)
    rows = [("bin", lo, hi, c) for lo, hi, c in zip(edges[:-1], edges[1:], counts)]
    rows += [("density", x, x, d) for x, d in zip(grid, dens)]
    _emit(table_to_csv(["section", "x0", "x1", "value"], rows), args.output)
    return EXIT_OK


_COMMANDS = {"fit": cmd_fit, "alpha": cmd_alpha, "influence": cmd_influence,
             "simulate": cmd_simulate, "study": cmd_study, "export-plot": cmd_export_plot}


def run(argv=None):
    """Run the CLI and return its exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    if args.quiet:
        warnings.simplefilter("ignore")
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command not in ("simulate", "study"):
            _check_compatible(args)
        return _COMMANDS[args.command](args, argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except DegenerateDataError as exc:
        sys.stderr.write(f"degenerate data: {exc}\n")
        return EXIT_DEGENERATE
    except (DataError, OSError, UnicodeDecodeError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_PARSE
    except (FitError, InfeasibleError, ValueError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"fit error: {exc}\n")
        return EXIT_FIT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
