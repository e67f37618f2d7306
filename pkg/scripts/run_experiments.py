"""Run one or more experiment configs and save records plus a JSON summary.

    python scripts/run_experiments.py scripts/configs/*.yaml --out results/{experiment}/{dist}/{alpha}/{name}.csv

``{name}`` in the output template expands to the config file stem. Pass
``--reps`` or ``--n`` to shrink a run for a quick look.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from halfspace_depth import experiments as X


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="+", type=Path)
    ap.add_argument("--out", default="results/{experiment}/{dist}/{alpha}/{name}.csv")
    ap.add_argument("--reps", type=int, help="override the replication count")
    ap.add_argument("--n", type=int, help="override the largest sample size")
    ap.add_argument("--workers", type=int, default=X.default_workers())
    args = ap.parse_args(argv)

    for path in args.configs:
        cfg = X.load_config(path).replace(replications=args.reps, workers=args.workers)
        if args.n is not None:
            ns = [n for n in cfg.ns if n < args.n] + [args.n]
            cfg = cfg.replace(schedule=ns)
        t0 = time.perf_counter()
        result = X.run_experiment(cfg)
        out = cfg.output_path(args.out.replace("{name}", path.stem))
        rec, summ = X.save_result(result, out)
        print(f"{path.name}: {len(result.records)} records in {time.perf_counter() - t0:.1f}s -> {rec}")
        print(json.dumps(result.summary, indent=1, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
