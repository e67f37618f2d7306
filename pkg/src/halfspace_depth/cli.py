"""Command-line front end.

Exit status: 0 on success, 2 on a usage error (unknown flag, value out of
range), 1 when the computation itself fails. Scalars are printed with 12
significant digits; regions and structured results are printed as JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import asymptotics, distributions, empirical, experiments, geometry

NUM = "%.12g"


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return NUM % x


def _emit(text: str, out: str | None) -> None:
    if out:
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    else:
        print(text)


def _alpha(args, upper: float = 0.5) -> float:
    if args.alpha is None:
        raise UsageError("--alpha is required")
    if not 0.0 < args.alpha < upper:
        raise UsageError(f"--alpha must lie in (0, {upper:g}), got {args.alpha:g}")
    return args.alpha


def _planar(args):
    if args.dist not in distributions.PLANAR:
        raise UsageError(f"--dist must be one of {', '.join(distributions.PLANAR)} here")
    return distributions.get_distribution(args.dist)


def _sample_from_args(args) -> empirical.WeightedSample:
    if args.sample:
        return empirical.WeightedSample.read_csv(args.sample)
    if args.dist is None or args.n is None:
        raise UsageError("give --sample FILE or --dist with --n")
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    d = _planar(args)
    prng, wrng = experiments.replication_streams(args.seed, 0)
    law = experiments.weight_law(args.weights)
    return empirical.WeightedSample(d.sample(args.n, prng), law.sample(args.n, wrng))


# subcommands ------------------------------------------------------------------


def cmd_depth(args) -> str:
    if args.x is None:
        raise UsageError("--x is required")
    if args.sample:
        s = empirical.WeightedSample.read_csv(args.sample)
        if args.y is None:
            raise UsageError("--y is required for a planar sample")
        return _fmt(empirical.emp_depth(s, (args.x, args.y)))
    if args.dist in distributions.UNIVARIATE:
        return _fmt(float(distributions.depth(distributions.get_distribution(args.dist), args.x)))
    if args.y is None:
        raise UsageError("--y is required for a planar law")
    return _fmt(float(distributions.depth(_planar(args), np.array([args.x, args.y]))))


def cmd_region(args) -> str:
    alpha = _alpha(args)
    if args.dist in distributions.UNIVARIATE:
        lo, hi = distributions.region_1d(distributions.get_distribution(args.dist), alpha)
        return json.dumps({"interval": [lo, hi]})
    if args.resolution < 16:
        raise UsageError("--resolution must be at least 16")
    return _planar(args).region(alpha, args.resolution).to_json()


def cmd_emp_region(args) -> str:
    if args.alpha is None or not args.alpha > 0:
        raise UsageError("--alpha must be positive")
    s = _sample_from_args(args)
    return empirical.emp_region(s, args.alpha, mode=args.mode, grid_size=args.grid_size).to_json()


def cmd_hausdorff(args) -> str:
    if not (args.a and args.b):
        raise UsageError("--a and --b are required")
    return _fmt(geometry.hausdorff_distance(geometry.load_region(args.a), geometry.load_region(args.b)))


def cmd_deviation(args) -> str:
    if args.extra_dirs < 0:
        raise UsageError("--extra-dirs must be nonnegative")
    s = _sample_from_args(args)
    if args.dist is None:
        raise UsageError("--dist is required")
    res = empirical.sup_deviation(s, _planar(args), extra_dirs=args.extra_dirs)
    return json.dumps(res.to_dict())


def cmd_constants(args) -> str:
    alpha = _alpha(args)
    M = args.M if args.M is not None else experiments.weight_law(args.weights).M
    if M < 1.0:
        raise UsageError("--M must be at least 1")
    return json.dumps(asymptotics.lil_constant(_planar(args), alpha, M).to_dict())


def cmd_rate(args) -> str:
    alpha = _alpha(args)
    t = args.t
    if t == 0 or not (0 < alpha - abs(t) and alpha + abs(t) < 0.5):
        raise UsageError("--t must be nonzero with alpha -/+ |t| inside (0, 1/2)")
    d = _planar(args)
    est = asymptotics.richardson_rate(d, alpha, t, args.resolution)
    return json.dumps(
        {
            "distribution": d.tag,
            "alpha": alpha,
            "t": t,
            "rate": est.rate,
            "rate_half_t": est.rate_half,
            "limit": asymptotics.hausdorff_rate_limit(d, alpha),
            "stable": est.stable,
        }
    )


def cmd_experiment(args) -> str:
    cfg = experiments.load_config(args.config) if args.config else experiments.ExperimentConfig()
    overrides = {
        "experiment": args.kind,
        "distribution": args.dist,
        "alpha": args.alpha,
        "weights": args.weights_override,
        "replications": args.reps,
        "seed": args.seed_override,
        "p": args.p,
        "mode": args.mode_override,
        "grid_size": args.grid_size_override,
        "format": args.format,
        "workers": args.workers,
        "n_max": args.n,
    }
    if args.gamma_mults:
        overrides["gamma_mults"] = [float(g) for g in args.gamma_mults.split(",")]
    try:
        cfg = cfg.replace(**overrides)
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from exc
    result = experiments.run_experiment(cfg)
    rec_path, summ_path = experiments.save_result(result, args.out and cfg.output_path(args.out))
    return json.dumps({"records": str(rec_path), "summary": str(summ_path), **_jsonable(result.summary)})


def _jsonable(d: dict) -> dict:
    return json.loads(json.dumps(d))


# parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="halfspace-depth", description="Halfspace depth, trimmed regions and their asymptotics.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        return sp

    tags = list(distributions.TAGS)
    weights = list(experiments.WEIGHT_LAWS)

    sp = add("depth", cmd_depth, "depth of a point under a model law or a sample")
    sp.add_argument("--dist", choices=tags)
    sp.add_argument("--sample", help="CSV with header x,y,w")
    sp.add_argument("--x", type=float)
    sp.add_argument("--y", type=float)

    sp = add("region", cmd_region, "trimmed region of a model law as JSON")
    sp.add_argument("--dist", choices=tags, required=True)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--resolution", type=int, default=1024)
    sp.add_argument("--out")

    for name, fn, help_ in (
        ("emp-region", cmd_emp_region, "empirical trimmed region as JSON"),
        ("deviation", cmd_deviation, "largest halfplane mass deviation from a model law"),
    ):
        sp = add(name, fn, help_)
        sp.add_argument("--dist", choices=tags)
        sp.add_argument("--sample")
        sp.add_argument("--n", type=int)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--weights", choices=weights, default="const1")
        sp.add_argument("--out")
        if name == "emp-region":
            sp.add_argument("--alpha", type=float)
            sp.add_argument("--mode", choices=list(experiments.MODES), default="exact")
            sp.add_argument("--grid-size", type=int, default=empirical.DEFAULT_GRID)
        else:
            sp.add_argument("--extra-dirs", type=int, default=1024)

    sp = add("hausdorff", cmd_hausdorff, "Hausdorff distance between two region JSON files")
    sp.add_argument("--a")
    sp.add_argument("--b")

    sp = add("constants", cmd_constants, "LIL constant with its components")
    sp.add_argument("--dist", choices=tags, required=True)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--M", type=float)
    sp.add_argument("--weights", choices=weights, default="const1")

    sp = add("rate", cmd_rate, "finite-difference Hausdorff rate and its limit")
    sp.add_argument("--dist", choices=tags, required=True)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--t", type=float, default=1e-3)
    sp.add_argument("--resolution", type=int, default=1024)

    sp = add("experiment", cmd_experiment, "run and persist a Monte Carlo experiment")
    sp.add_argument("kind", choices=list(experiments.EXPERIMENTS))
    sp.add_argument("--config")
    sp.add_argument("--dist", choices=list(distributions.PLANAR))
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--weights", dest="weights_override", choices=weights)
    sp.add_argument("--n", type=int, help="largest sample size of the schedule")
    sp.add_argument("--reps", type=int)
    sp.add_argument("--gamma-mults")
    sp.add_argument("--p", type=float)
    sp.add_argument("--seed", dest="seed_override", type=int)
    sp.add_argument("--mode", dest="mode_override", choices=list(experiments.MODES))
    sp.add_argument("--grid-size", dest="grid_size_override", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--out", help="output path template with {experiment}, {dist}, {alpha}")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, geometry.GeometryError) as exc:
        print(f"{parser.prog}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _emit(text, getattr(args, "out", None) if args.command != "experiment" else None)
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
