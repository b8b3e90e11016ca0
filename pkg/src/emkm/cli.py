"""Command line: ``emkm generate | run | report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench, datagen


def _int_list(text: str) -> list[int]:
    return bench.parse_columns(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emkm", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic scenario dataset")
    g.add_argument("--scenario", choices=datagen.SCENARIOS, default="distinct-all")
    g.add_argument("--n", type=int, default=50000, help="total points")
    g.add_argument("--k", type=int, default=10, help="true cluster count")
    g.add_argument("--d", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--spacing", type=float, default=10.0)
    g.add_argument("--spread", type=float, default=1.0)
    g.add_argument("--out", required=True, help="CSV path; manifest goes beside it")

    r = sub.add_parser("run", help="run a k-sweep and save raw results")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="delimited text dataset")
    src.add_argument("--scenario", choices=datagen.SCENARIOS)
    r.add_argument("--features", help="feature columns, e.g. 1-16")
    r.add_argument("--drop", help="columns to discard, e.g. 0")
    r.add_argument("--n", type=int, default=50000, help="synthetic: total points")
    r.add_argument("--d", type=int, default=10, help="synthetic: dimension")
    r.add_argument("--true-k", type=int, default=10, help="synthetic: cluster count")
    r.add_argument("--data-seed", type=int, default=0)
    r.add_argument("--algorithms", default="stem,kmem,hbemkm",
                   help=f"comma list from {','.join(bench.ALGORITHMS)}")
    r.add_argument("--k", default="10-15", help="k values, e.g. 10-15 or 3,5")
    r.add_argument("--seeds", default="0", help="seed list, e.g. 0-4")
    r.add_argument("--threshold", type=float, default=3.0, help="percent")
    r.add_argument("--max-iterations", type=int, default=500)
    r.add_argument("--lam", type=float, default=0.5)
    r.add_argument("--inter-n", choices=("k", "N"), default="k")
    r.add_argument("--cov-mean", choices=("prior", "updated"), default="prior")
    r.add_argument("--sse", choices=("mean", "squared"), default="mean")
    r.add_argument("--subsample", type=int)
    r.add_argument("--jobs", type=int, default=1, help="parallel runs (timings contend)")
    r.add_argument("--format", choices=bench.FORMATS, default="table")
    r.add_argument("--out", required=True, help="run directory")

    rep = sub.add_parser("report", help="re-emit tables from a saved run directory")
    rep.add_argument("--run-dir", required=True)
    rep.add_argument("--format", choices=bench.FORMATS, default="table")
    rep.add_argument("--out", help="output directory (default: run dir)")
    return p


def _run(args) -> int:
    config = bench.ExperimentConfig(
        data_path=args.data, features=args.features, drop=args.drop,
        scenario=args.scenario, n=args.n, d=args.d, true_k=args.true_k,
        data_seed=args.data_seed,
        algorithms=tuple(a.strip() for a in args.algorithms.split(",") if a.strip()),
        ks=tuple(_int_list(args.k)), seeds=tuple(_int_list(args.seeds)),
        threshold=args.threshold, max_iterations=args.max_iterations, lam=args.lam,
        inter_n=args.inter_n, covariance_mean=args.cov_mean, sse_variant=args.sse,
        subsample=args.subsample, jobs=args.jobs,
    )
    data = bench.load_experiment_data(config)
    reports = bench.run_experiment(config, data)
    bench.save_run(reports, args.out, config)
    bench.write_report(reports, args.format, args.out)
    if args.format == "table":
        sys.stdout.write(bench.emit_report(reports, "table")["report.txt"])
    failed = sum(r.status == "failed" for r in reports)
    if failed:
        logging.getLogger("emkm").warning("%d of %d runs failed", failed, len(reports))
    return 0


def _report(args) -> int:
    _, reports = bench.load_run(args.run_dir)
    bench.write_report(reports, args.format, args.out or args.run_dir)
    if args.format == "table":
        sys.stdout.write(bench.emit_report(reports, "table")["report.txt"])
    return 0


def _generate(args) -> int:
    spec = datagen.default_spec(args.scenario, k=args.k, d=args.d, n=args.n,
                                seed=args.seed, spacing=args.spacing, spread=args.spread)
    data, labels = datagen.generate(spec)
    manifest = datagen.write_dataset(args.out, data, labels, spec)
    print(f"wrote {args.out} ({data.shape[0]} x {data.shape[1]}) and {manifest}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"generate": _generate, "run": _run, "report": _report}[args.command]
    try:
        return handler(args)
    except (ValueError, OSError) as exc:
        print(f"emkm {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
