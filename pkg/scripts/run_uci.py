#!/usr/bin/env python3
"""k-sweep over the UCI datasets (files are not downloaded; pass their paths).

    python scripts/run_uci.py --letter letter-recognition.data \
        --magic magic04.data --poker poker-hand-testing.data --poker-subsample 100000

Column layouts: Letter has the class letter first and 16 integer features;
Magic has 10 real features then the class; Poker has 10 attributes then the
hand class. Subsampled runs are flagged in the saved reports.
"""

import argparse
import logging
from pathlib import Path

from emkm import bench

LAYOUTS = {
    "letter": {"features": "1-16", "drop": "0"},
    "magic": {"features": "0-9", "drop": "10"},
    "poker": {"features": "0-9", "drop": "10"},
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name in LAYOUTS:
        p.add_argument(f"--{name}", help=f"path to the {name} data file")
    p.add_argument("--poker-subsample", type=int, default=None)
    p.add_argument("--k", default="10-15")
    p.add_argument("--seeds", default="0")
    p.add_argument("--out", default="runs/uci")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    for name, cols in LAYOUTS.items():
        path = getattr(args, name)
        if path is None:
            continue
        cfg = bench.ExperimentConfig(
            data_path=path, algorithms=("stem", "kmeans", "kmem", "hbemkm"),
            ks=bench.parse_columns(args.k), seeds=bench.parse_columns(args.seeds),
            subsample=args.poker_subsample if name == "poker" else None, **cols)
        reports = bench.run_experiment(cfg)
        out = Path(args.out) / name
        bench.save_run(reports, out, cfg)
        bench.write_report(reports, "csv", out)
        print(f"== {name}")
        print(bench.emit_report(reports, "table")["report.txt"])


if __name__ == "__main__":
    main()
