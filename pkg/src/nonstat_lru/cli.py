"""Command-line front end.

Exit status: 0 on success, 1 for configuration errors, 2 when any row of the
output carries a numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .analytic import TrafficMix
from .config import ExperimentSpec, SimOverrides, load_spec
from .errors import ConfigError, DomainError, NumericError, RegimeError
from .experiments import builtin_experiments, find_experiments, run_experiment, write_outputs
from .profiles import make_profile
from .simulator import make_sim_config, write_workload
from .stationary import ZipfCatalog
from .volumes import ParetoVolume

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
THREADS_ENV = "NONSTAT_LRU_THREADS"


def _default_threads():
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(THREADS_ENV, f"expected an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(THREADS_ENV, "must be at least 1")
    return n


def _add_globals(p, suppress):
    # globals are accepted before and after the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(None), help="base seed for simulations")
    p.add_argument("--reps", type=int, default=d(None), help="simulation replications")
    p.add_argument("--out-dir", default=d(None),
                   help="write <name>.csv (and summaries) here instead of stdout")
    p.add_argument("--threads", type=int, default=d(None),
                   help=f"worker processes for replications (default ${THREADS_ENV} or 1)")


def _add_model_source(p):
    src = p.add_argument_group("model input (a config file, a built-in name, or inline flags)")
    src.add_argument("--config", help="YAML experiment document")
    src.add_argument("--experiment", help="built-in experiment name")
    src.add_argument("--gamma", type=float, default=100.0, help="new contents per day")
    src.add_argument("--profile", default="exponential",
                     choices=["exponential", "powerlaw", "uniform", "triangular"])
    src.add_argument("--lifetime", type=float, default=10.0, help="profile scale L in days")
    src.add_argument("--zeta", type=float, default=None, help="power-law exponent")
    src.add_argument("--v-min", type=float, default=1.0, help="Pareto volume minimum")
    src.add_argument("--beta", type=float, default=3.0, help="Pareto volume exponent")
    src.add_argument("--sizes", type=float, nargs="+", default=[1, 10, 100, 1000],
                     help="cache sizes (contents), ascending")
    src.add_argument("--horizon", type=float, help="simulated days")
    src.add_argument("--warmup", type=float, help="unmeasured initial days")
    src.add_argument("--lookback", type=float, help="days of content births before t=0")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nonstat-lru",
        description="LRU hit probabilities under non-stationary content popularity.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in [("solve", "analytic model only"),
                        ("simulate", "Monte Carlo simulation only"),
                        ("compare", "model and simulation side by side")]:
        p = sub.add_parser(name, help=help_)
        _add_globals(p, suppress=True)
        _add_model_source(p)
        if name != "solve":
            p.add_argument("--workload", metavar="CSV",
                           help="also export the replication-0 request stream")

    p = sub.add_parser("stationary", help="static Zipf catalogue model")
    _add_globals(p, suppress=True)
    p.add_argument("--catalog-size", "-M", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sizes", type=float, nargs="+", required=True)
    p.add_argument("--simulate", action="store_true", help="add an IRM LRU simulation")
    p.add_argument("--requests", type=int, default=100_000,
                   help="measured requests per replication")

    p = sub.add_parser("list-experiments", help="show built-in experiment names")
    _add_globals(p, suppress=True)

    p = sub.add_parser("run", help="run a built-in experiment or group, or a config file")
    _add_globals(p, suppress=True)
    p.add_argument("name", help="experiment name, group (e.g. fig1-desk) or path to YAML")
    p.add_argument("--no-sim", action="store_true", help="skip simulation sections")
    return parser


def _inline_spec(args, with_sim):
    try:
        profile = make_profile(args.profile, args.lifetime, args.zeta)
        mix = TrafficMix.single(args.gamma, profile, ParetoVolume(args.v_min, args.beta))
    except DomainError as exc:
        raise ConfigError("arguments", str(exc)) from None
    sim = SimOverrides(horizon=args.horizon, warmup=args.warmup, lookback=args.lookback) if with_sim else None
    return ExperimentSpec(name="inline", mix=mix, cache_sizes=args.sizes, sim=sim)


def _source_spec(args, with_sim):
    if args.config and args.experiment:
        raise ConfigError("arguments", "--config and --experiment are mutually exclusive")
    if args.config:
        spec = load_spec(args.config)
    elif args.experiment:
        matches = find_experiments(args.experiment)
        if len(matches) != 1:
            raise ConfigError("arguments", f"{args.experiment!r} names a group; pick one experiment")
        spec = matches[0]
    else:
        return _inline_spec(args, with_sim)
    if with_sim and spec.sim is None:
        spec = ExperimentSpec(**{**spec.__dict__, "sim": SimOverrides()})
    return spec


def _emit(spec, table, args, out):
    if args.out_dir:
        for path in write_outputs(spec, table, args.out_dir):
            print(path, file=out)
    else:
        out.write(table.to_csv())
    return EXIT_NUMERIC if table.failed_rows else EXIT_OK


def _threads(args):
    return args.threads if args.threads is not None else _default_threads()


def _run(args, out):
    cmd = args.command
    if cmd == "list-experiments":
        for s in builtin_experiments():
            print(f"{s.name:24s} {s.description}", file=out)
        return EXIT_OK

    if cmd == "stationary":
        sim = SimOverrides(requests=args.requests) if args.simulate else None
        try:
            spec = ExperimentSpec(name="stationary", cache_sizes=args.sizes, sim=sim,
                                  catalog=ZipfCatalog(args.catalog_size, args.alpha))
        except DomainError as exc:
            raise ConfigError("arguments", str(exc)) from None
        table = run_experiment(spec, args.seed, args.reps, _threads(args))
        return _emit(spec, table, args, out)

    if cmd in ("solve", "simulate", "compare"):
        spec = _source_spec(args, with_sim=cmd != "solve")
        table = run_experiment(spec, args.seed, args.reps, _threads(args),
                               model=cmd != "simulate", simulate=cmd != "solve")
        if getattr(args, "workload", None) and spec.mix is not None:
            cfg = make_sim_config(spec.mix, int(max(spec.cache_sizes)), spec.sim.horizon,
                                  spec.sim.warmup, spec.sim.lookback)
            seed = args.seed if args.seed is not None else (spec.sim.seed or 0)
            write_workload(args.workload, spec.mix, cfg.horizon, cfg.lookback, seed, replication=0)
        return _emit(spec, table, args, out)

    # run
    if os.path.isfile(args.name):
        specs = [load_spec(args.name)]
    else:
        specs = find_experiments(args.name)
    args.out_dir = args.out_dir or "results"
    status = EXIT_OK
    for spec in specs:
        table = run_experiment(spec, args.seed, args.reps, _threads(args), simulate=not args.no_sim)
        status = max(status, _emit(spec, table, args, out))
    return status


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args, out)
    except (ConfigError, RegimeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
