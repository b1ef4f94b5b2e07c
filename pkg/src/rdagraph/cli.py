"""Command-line entry point: ``rdagraph <experiment> [options]``.

Exit status is 0 on success, 1 for configuration errors and 2 when a
simulation produces a non-finite state or a level inversion fails.
"""

import argparse
import os
import sys

from . import experiments as ex
from .config import KINDS, ConfigError, default_config, load_config
from .hamiltonian import InversionError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def build_parser():
    parser = argparse.ArgumentParser(prog="rdagraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="key=value file overriding the defaults")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--desk", action="store_true", help="reduced Monte Carlo sizes")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--scheme", choices=("exp-euler", "euler-maruyama"))
        p.add_argument("--plot", action="store_true", help="also write a plotting script")
    return parser


def resolve_config(args):
    overrides = load_config(args.config) if args.config else {}
    if args.seed is not None:
        overrides["mc_seed"] = args.seed
    if args.scheme is not None:
        overrides["scheme_name"] = args.scheme
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return default_config(args.kind, desk=args.desk, overrides=overrides)


def _report(table, label):
    for lab, err, se in table.rows:
        print(f"{label}={lab:.6g}  error={err:.6e}  std_error={se:.3e}")


def _report_slope(table):
    if ex.is_exact(table):
        print(f"all errors below {ex.EXACT_FLOOR:g}: exact")
        return
    slope, half = ex.fit_loglog_slope(table)
    print(f"log-log slope {slope:.4f} +/- {half:.4f} (95%)")


def run(args):
    cfg = resolve_config(args)
    out = args.out
    kind = cfg.kind
    if kind in ("convergence-2d", "convergence-graph"):
        fn = ex.run_convergence_2d if kind == "convergence-2d" else ex.run_convergence_graph
        table = fn(cfg, threads=args.threads)
        _report(table, "tau")
        _report_slope(table)
        written = ex.emit_outputs(table, cfg, out, plot=args.plot)
    elif kind == "asymptotics":
        table = ex.run_asymptotics(cfg, threads=args.threads)
        _report(table, "eps")
        if len(table) > 1:
            print(f"Spearman(eps, error) = {ex.spearman_trend(table):.4f}")
        written = ex.emit_outputs(table, cfg, out, plot=args.plot)
    elif kind == "ap-compare":
        t_exp, t_em = ex.run_ap_compare(cfg)
        print("exponential Euler:")
        _report(t_exp, "eps")
        print("Euler-Maruyama:")
        _report(t_em, "eps")
        written = ex.emit_outputs(t_exp, cfg, out, name="ap-compare-exp-euler", plot=args.plot)
        written += ex.emit_outputs(t_em, cfg, out, name="ap-compare-euler-maruyama",
                                   plot=args.plot)
    elif kind == "kernel-table":
        header, rows = ex.kernel_table(cfg)
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, "kernel-table.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
        for row in [header] + rows:
            print("  ".join(f"{v:>12}" if isinstance(v, str) else f"{v:12.6g}" for v in row))
        written = [path]
    else:
        report = ex.run_validate_profile(cfg)
        print(report)
        if not report.passed:
            return EXIT_NUMERIC
        written = []
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, InversionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
