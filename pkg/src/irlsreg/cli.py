"""Command-line entry point.

Subcommands ``bench``, ``cs``, ``mixedq`` and ``deblur`` run the experiments;
``solve`` runs one solver on a matrix file. Exit status is 0 on success,
2 on configuration or input errors and 3 on solver errors.
"""

import argparse
import logging
import os
import sys
from dataclasses import fields

import numpy as np

from . import fileio
from .experiments import RUNNERS, ConfigError, ExperimentConfig
from .linops import load_dense_operator, rescale_problem
from .penalty import PenaltySpec, kkt_residual, load_penalty
from .solvers import VARIANTS, SolverConfig, SolverError, solve
from .surrogate import audit_monotone_chain

log = logging.getLogger("irlsreg")

EXIT_CONFIG = 2
EXIT_SOLVER = 3

SUBCOMMANDS = {
    "bench": "convergence_bench",
    "cs": "cs_recovery",
    "mixedq": "mixed_q",
    "deblur": "deblur",
}
_COMMON = ("seed", "out", "audit", "experiment")


def _add_common(sp):
    sp.add_argument("--config", metavar="PATH", help="key = value configuration file")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", metavar="DIR")
    sp.add_argument("--audit", action="store_true", default=None,
                    help="audit the surrogate descent chain of every IRLS run")
    sp.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="irlsreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve one problem given as text files")
    _add_common(sp)
    sp.add_argument("--matrix", help="dense matrix file ('nrows ncols' header)")
    sp.add_argument("--rhs", help="data vector, one value per line")
    sp.add_argument("--penalty", help="two-column 'lam q' file")
    sp.add_argument("--lam", type=float, help="uniform lam (instead of --penalty)")
    sp.add_argument("--q", type=float, default=1.0, help="uniform q with --lam")
    sp.add_argument("--variant", default="IRLS", choices=VARIANTS)
    sp.add_argument("--max-iters", type=int, default=1000)
    sp.add_argument("--step-tol", type=float)
    sp.add_argument("--no-rescale", action="store_true",
                    help="the operator already has spectral norm below 1")

    for name, experiment in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=f"run the {experiment} experiment")
        _add_common(sp)
        for f in fields(ExperimentConfig):
            if f.name not in _COMMON:
                sp.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, metavar="VALUE")
    return parser


def _config_values(args):
    values = fileio.read_config(args.config) if args.config else {}
    for key, val in vars(args).items():
        if key in ("command", "config", "verbose") or val is None:
            continue
        if key in {f.name for f in fields(ExperimentConfig)}:
            values[key] = val if isinstance(val, str) else str(val)
    return values


def _run_experiment(args):
    cfg = ExperimentConfig.from_strings(SUBCOMMANDS[args.command], _config_values(args))
    result = RUNNERS[cfg.experiment](cfg)
    if cfg.audit:
        _report_audit(cfg, result)
    log.info("wrote outputs to %s", cfg.out)


def _report_audit(cfg, result):
    if cfg.experiment == "convergence_bench":
        counts = [v["chain_violations"] for v in result.values() if v["chain_violations"] is not None]
    elif cfg.experiment == "deblur":
        counts = [result.path.chain_violations or 0]
    else:
        counts = [r.chain_violations for r in result.values() if r.chain_violations is not None]
    total = sum(counts)
    with open(os.path.join(cfg.out, "audit.txt"), "w") as fh:
        fh.write(f"chain_violations {total}\n")
    if total:
        log.warning("surrogate chain audit found %d violation(s)", total)


def _run_solve(args):
    cfg_vals = fileio.read_config(args.config) if args.config else {}
    matrix = args.matrix or cfg_vals.get("matrix")
    rhs = args.rhs or cfg_vals.get("rhs")
    if not matrix or not rhs:
        raise ConfigError("solve needs --matrix and --rhs")
    for path in (matrix, rhs, args.penalty):
        if path and not os.path.isfile(path):
            raise ConfigError(f"file not found: {path}")
    op = load_dense_operator(matrix)
    b = fileio.load_vector(rhs)
    if b.size != op.nrows:
        raise ConfigError(f"rhs has {b.size} entries, matrix has {op.nrows} rows")
    if args.penalty:
        p = load_penalty(args.penalty)
    elif args.lam is not None:
        p = PenaltySpec.uniform(op.ncols, args.lam, args.q)
    else:
        raise ConfigError("give --penalty or --lam")
    if p.n != op.ncols:
        raise ConfigError(f"penalty has {p.n} entries, matrix has {op.ncols} columns")
    c = 1.0
    if not args.no_rescale:
        op, b, c = rescale_problem(op, b)
        # same minimizer: the scaled residual is the original divided by c^2
        p = p.with_lam(p.lam / c**2)
    scfg = SolverConfig(variant=args.variant, max_iters=args.max_iters, step_tol=args.step_tol,
                        keep_iterates=bool(args.audit) and args.variant == "IRLS")
    res = solve(op, b, p, scfg)
    out = args.out or cfg_vals.get("out", "out")
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "trace.csv"), "w", newline="") as fh:
        res.trace.to_csv(fh)
    fileio.save_vector(res.x_final, os.path.join(out, "x.txt"))
    lines = [f"variant {args.variant}", f"iterations {res.iterations_run}",
             f"termination {res.termination}", f"scale {c!r}"]
    if np.all(p.q >= 1):
        lines.append(f"kkt_max_residual {kkt_residual(op, b, res.x_final, p).max_residual!r}")
    if args.audit and args.variant == "IRLS":
        v = audit_monotone_chain(op, b, res.trace.snapshots(p), p)
        lines.append(f"chain_violations {len(v)}")
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            _run_solve(args)
        else:
            _run_experiment(args)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
