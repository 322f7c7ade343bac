"""Command-line entry point.

Verbs: run (train all seeds of a config), reference (ground-truth files),
aggregate (per-step quantiles over run directories), eval (metrics of a
stored run), certify (defect and entropy diagnostics of a stored run).
Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import sys

from . import config as cf
from . import optimizer as op
from . import quadrature as qd
from . import reference as rf
from . import runner as rn

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="thinn",
        description="Entropy-dissipation training for small PDE networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train every seed of a config file")
    p_run.add_argument("config", help="path to an INI config file")

    p_ref = sub.add_parser("reference", help="write a ground-truth file")
    p_ref.add_argument("problem", choices=("heat", "burgers", "nse"))
    p_ref.add_argument("out", help="output CSV path")
    p_ref.add_argument("--nu", type=float, required=True)
    p_ref.add_argument("--T", type=float, default=1.0)
    p_ref.add_argument("--ic", default="sine",
                       choices=("sine", "bump", "constant"))
    p_ref.add_argument("--amplitude", type=float, default=None)
    p_ref.add_argument("--n-x", type=int, default=512)
    p_ref.add_argument("--n-out", type=int, default=257)
    p_ref.add_argument("--dt", type=float, default=None)

    p_agg = sub.add_parser("aggregate", help="quantiles over run directories")
    p_agg.add_argument("dirs", nargs="+", help="run directories")
    p_agg.add_argument("--out", default="aggregate.csv")
    p_agg.add_argument("--stat", default="median", choices=("median", "q25"))

    p_eval = sub.add_parser("eval", help="metrics of a stored run")
    p_eval.add_argument("run_dir")

    p_cert = sub.add_parser("certify", help="diagnostics of a stored run")
    p_cert.add_argument("run_dir")
    p_cert.add_argument("--out", default=None)
    return parser


def cmd_run(args):
    cfg = cf.load(args.config)
    dirs = rn.run_all(cfg)
    for d in dirs:
        print(d)
    return EXIT_OK


def cmd_reference(args):
    ic_params = {}
    if args.amplitude is not None:
        ic_params["amplitude"] = args.amplitude
    rn.reference_to_file(args.problem, args.nu, args.out, ic=args.ic,
                         ic_params=ic_params, n_x=args.n_x, T=args.T,
                         n_out=args.n_out, dt=args.dt)
    print(args.out)
    return EXIT_OK


def cmd_aggregate(args):
    out = rn.aggregate(args.dirs, args.out, stat=args.stat)
    print(out)
    return EXIT_OK


def cmd_eval(args):
    metrics = rn.evaluate_run(args.run_dir)
    for key in ("eps1", "eps2", "rate"):
        print(f"{key} = {metrics[key]:.17g}")
    return EXIT_OK


def cmd_certify(args):
    cert = rn.certify_run(args.run_dir, out_path=args.out)
    for name, value in cert.as_rows():
        print(f"{name} = {value:.17g}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "reference": cmd_reference,
    "aggregate": cmd_aggregate,
    "eval": cmd_eval,
    "certify": cmd_certify,
}

CONFIG_ERRORS = (cf.ConfigError, qd.QuadratureError, rn.RunnerError,
                 FileNotFoundError)
NUMERIC_ERRORS = (op.TrainAbort, rf.CFLError, rf.ReferenceError)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
