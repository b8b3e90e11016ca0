"""Benchmark harness: dataset loading, k-sweeps, timing and reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import datagen, metrics
from .em import em_run
from .hybrid import hbemkm_run, kmem_run
from .kmeans import kmeans_run
from .model import FitConfig, FitResult, as_dataset, select_initial_rows

log = logging.getLogger(__name__)

ALGORITHM_ORDER = ("stem", "kmeans", "kmem", "hbemkm")
METRICS = ("time", "cf", "sse")
FORMATS = ("csv", "table", "json")


def _kmeans(data, k, rng, config, callback=None) -> FitResult:
    rows = select_initial_rows(data.shape[0], k, rng)
    return kmeans_run(data, data[rows], config, callback)


ALGORITHMS = {
    "stem": em_run,
    "kmeans": _kmeans,
    "kmem": kmem_run,
    "hbemkm": hbemkm_run,
}


class DataFormatError(ValueError):
    pass


# ---------------------------------------------------------------- loading

def parse_columns(spec: str | None) -> list[int]:
    """"1-16" or "0,2,5-7" -> sorted column indices."""
    if spec is None or spec.strip() == "":
        return []
    out: set[int] = set()
    for part in spec.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"bad column range {part!r}")
            out.update(range(lo, hi + 1))
        else:
            out.add(int(part))
    if any(c < 0 for c in out):
        raise ValueError("column indices must be non-negative")
    return sorted(out)


def _split(line: str, delimiter: str | None) -> list[str]:
    if delimiter is None:
        delimiter = "," if "," in line else None
    if delimiter is None:
        return line.split()
    return [c.strip() for c in line.split(delimiter)]


def _numeric(cells, cols) -> bool:
    try:
        for c in cols:
            float(cells[c])
    except ValueError:
        return False
    return True


def load_dataset(path, features: str | None = None, drop: str | None = None,
                 delimiter: str | None = None, header: bool | None = None) -> np.ndarray:
    """Read a delimited text file into an (N, d) dataset.

    ``features`` selects feature columns (default: every column not in
    ``drop``). The delimiter is sniffed per line (comma, else whitespace)
    unless given. ``header=None`` skips a first line that does not parse.
    Row and column positions in errors are 1-based line / 0-based column.
    """
    feat = parse_columns(features)
    dropped = set(parse_columns(drop))
    rows: list[list[float]] = []
    width = None
    cols = None
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = _split(line, delimiter)
            if width is None:
                width = len(cells)
                cols = feat or [c for c in range(width) if c not in dropped]
                if max(cols) >= width:
                    raise DataFormatError(f"line {lineno}: feature column {max(cols)} "
                                          f"out of range for {width} columns")
                if header or (header is None and not _numeric(cells, cols)):
                    continue
            elif len(cells) != width:
                raise DataFormatError(f"line {lineno}: expected {width} columns, "
                                      f"found {len(cells)}")
            row = []
            for c in cols:
                try:
                    row.append(float(cells[c]))
                except ValueError:
                    raise DataFormatError(f"line {lineno}, column {c}: "
                                          f"non-numeric value {cells[c]!r}") from None
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    try:
        return as_dataset(rows)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


# ------------------------------------------------------------- experiment

@dataclass
class ExperimentConfig:
    data_path: str | None = None
    features: str | None = None
    drop: str | None = None
    scenario: str | None = None
    n: int = 50000
    d: int = 10
    true_k: int = 10
    data_seed: int = 0
    algorithms: tuple[str, ...] = ("stem", "kmem", "hbemkm")
    ks: tuple[int, ...] = (10, 11, 12, 13, 14, 15)
    seeds: tuple[int, ...] = (0,)
    threshold: float = 3.0
    max_iterations: int = 500
    lam: float = metrics.DEFAULT_LAMBDA
    inter_n: str = "k"
    covariance_mean: str = "prior"
    sse_variant: str = "mean"
    subsample: int | None = None
    jobs: int = 1

    def __post_init__(self):
        self.algorithms = tuple(self.algorithms)
        self.ks = tuple(int(k) for k in self.ks)
        self.seeds = tuple(int(s) for s in self.seeds)
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if not self.algorithms:
            raise ValueError("no algorithms selected")
        if not self.ks or min(self.ks) < 1:
            raise ValueError("k range must be non-empty and positive")
        if not self.seeds:
            raise ValueError("seed list must be non-empty")
        if (self.data_path is None) == (self.scenario is None):
            raise ValueError("give exactly one of a dataset path or a scenario")
        if self.inter_n not in ("k", "N"):
            raise ValueError("inter_n must be 'k' or 'N'")
        if self.sse_variant not in ("mean", "squared"):
            raise ValueError("sse_variant must be 'mean' or 'squared'")
        if not 0 < self.lam < 1:
            raise ValueError("lambda must lie in (0, 1)")
        self.fit_config()  # validates threshold, cap and covariance_mean

    def fit_config(self) -> FitConfig:
        return FitConfig(self.threshold, self.max_iterations, self.covariance_mean)

    def source(self) -> str:
        if self.data_path is not None:
            return str(self.data_path)
        return f"synthetic:{self.scenario}(n={self.n},d={self.d},k={self.true_k},seed={self.data_seed})"


@dataclass
class RunReport:
    algorithm: str
    k: int
    seed: int
    time_s: float
    iterations: int
    cf: float
    sse: float
    sizes: list[int]
    status: str = "ok"  # ok | max_iterations | failed
    error: str = ""
    phase_iterations: dict = field(default_factory=dict)
    dataset: str = ""
    subsampled: bool = False
    workers: int = 1
    labels: np.ndarray | None = field(default=None, repr=False)
    means: np.ndarray | None = field(default=None, repr=False)

    def record(self) -> dict:
        out = asdict(self)
        out.pop("labels")
        out.pop("means")
        return out


def load_experiment_data(config: ExperimentConfig) -> np.ndarray:
    if config.data_path is not None:
        data = load_dataset(config.data_path, config.features, config.drop)
    else:
        spec = datagen.default_spec(config.scenario, k=config.true_k, d=config.d,
                                    n=config.n, seed=config.data_seed)
        data, _ = datagen.generate(spec)
        data = as_dataset(data)
    if config.subsample is not None and config.subsample < data.shape[0]:
        rng = np.random.default_rng(np.random.SeedSequence([config.data_seed, 0x5AB]))
        rows = np.sort(rng.choice(data.shape[0], size=config.subsample, replace=False))
        data = as_dataset(data[rows])
    return data


def seed_rng(seed: int, k: int) -> np.random.Generator:
    """The generator that picks initial rows for (k, seed); same for every algorithm."""
    return np.random.default_rng(np.random.SeedSequence([seed, k]))


def run_one(data: np.ndarray, algorithm: str, k: int, seed: int,
            config: ExperimentConfig) -> RunReport:
    """Time one clustering run; scoring happens after the clock stops."""
    fn = ALGORITHMS[algorithm]
    rng = seed_rng(seed, k)
    fit_config = config.fit_config()
    common = dict(dataset=config.source(), subsampled=config.subsample is not None)
    try:
        start = time.perf_counter()
        res = fn(data, k, rng, fit_config)
        elapsed = time.perf_counter() - start
    except Exception as exc:  # reported, the sweep carries on
        log.warning("%s k=%d seed=%d failed: %s", algorithm, k, seed, exc)
        return RunReport(algorithm, k, seed, float("nan"), 0, float("nan"), float("nan"),
                         [], status="failed", error=f"{type(exc).__name__}: {exc}", **common)
    result = metrics.ClusteringResult.from_labels(data, res.labels)
    cf = metrics.clustering_fitness(result, config.lam, config.inter_n)
    err = metrics.sse(result, config.sse_variant)
    return RunReport(
        algorithm, k, seed, elapsed, res.iterations, cf, err,
        np.bincount(res.labels, minlength=k).tolist(),
        status="ok" if res.converged else "max_iterations",
        phase_iterations=dict(res.phase_iterations),
        labels=res.labels, means=res.means, **common,
    )


def _run_task(args):
    data, algorithm, k, seed, config = args
    return run_one(data, algorithm, k, seed, config)


def run_experiment(config: ExperimentConfig, data: np.ndarray | None = None) -> list[RunReport]:
    """Every (k, seed, algorithm) run, data loaded once before any timing."""
    if data is None:
        data = load_experiment_data(config)
    tasks = [(k, seed, alg) for k in config.ks for seed in config.seeds
             for alg in config.algorithms]
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            return list(pool.map(_run_task, [(data, a, k, s, config) for k, s, a in tasks]))
    out = []
    for k, seed, alg in tasks:
        r = run_one(data, alg, k, seed, config)
        log.info("%-6s k=%-3d seed=%-3d %8.3fs it=%-4d CF=%.4f SSE=%.6g %s",
                 alg, k, seed, r.time_s, r.iterations, r.cf, r.sse, r.status)
        out.append(r)
    return out


# ------------------------------------------------------------- persistence

def save_run(reports: list[RunReport], run_dir, config: ExperimentConfig) -> Path:
    """results.json with per-run records plus one npz of labels/means per run."""
    run_dir = Path(run_dir)
    (run_dir / "raw").mkdir(parents=True, exist_ok=True)
    for r in reports:
        if r.labels is not None:
            np.savez(run_dir / "raw" / f"{r.algorithm}_k{r.k}_s{r.seed}.npz",
                     labels=r.labels, means=r.means)
    payload = {"config": asdict(config), "runs": [r.record() for r in reports]}
    path = run_dir / "results.json"
    path.write_text(json.dumps(payload, indent=1, default=_json_default))
    return path


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))


def load_run(run_dir, with_labels: bool = False) -> tuple[dict, list[RunReport]]:
    run_dir = Path(run_dir)
    payload = json.loads((run_dir / "results.json").read_text())
    reports = []
    for rec in payload["runs"]:
        r = RunReport(**rec)
        raw = run_dir / "raw" / f"{r.algorithm}_k{r.k}_s{r.seed}.npz"
        if with_labels and raw.exists():
            with np.load(raw) as z:
                r.labels, r.means = z["labels"], z["means"]
        reports.append(r)
    return payload["config"], reports


# ---------------------------------------------------------------- reports

def _metric(r: RunReport, metric: str) -> float:
    return {"time": r.time_s, "cf": r.cf, "sse": r.sse}[metric]


def metric_table(reports: list[RunReport], metric: str):
    """(header, rows) with one row per (k, seed) and one column per algorithm."""
    algs = [a for a in ALGORITHM_ORDER if any(r.algorithm == a for r in reports)]
    cells: dict[tuple[int, int], dict[str, float]] = {}
    for r in reports:
        cells.setdefault((r.k, r.seed), {})[r.algorithm] = _metric(r, metric)
    header = ["k", "seed"] + algs
    rows = [[k, s] + [cells[(k, s)].get(a, float("nan")) for a in algs]
            for k, s in sorted(cells)]
    return header, rows


def emit_report(reports: list[RunReport], fmt: str = "csv") -> dict[str, str]:
    """Serialize reports; returns {filename: content}.

    csv   one table per metric (time.csv, cf.csv, sse.csv), floats in repr form
    table the same tables as aligned text in report.txt
    json  runs.json with full per-run records
    Every format also carries plot series ``series/<metric>_<alg>_s<seed>.dat``
    with two columns (k, value).
    """
    if not reports:
        raise ValueError("no reports to emit")
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    files: dict[str, str] = {}
    if fmt == "csv":
        for metric in METRICS:
            header, rows = metric_table(reports, metric)
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([row[0], row[1]] + [repr(float(v)) for v in row[2:]])
            files[f"{metric}.csv"] = buf.getvalue()
    elif fmt == "table":
        files["report.txt"] = "\n".join(_text_table(reports, m) for m in METRICS)
    else:
        files["runs.json"] = json.dumps([r.record() for r in reports], indent=1,
                                        default=_json_default)
    for metric in METRICS:
        for (alg, seed), pts in _series(reports, metric).items():
            body = "".join(f"{k} {v!r}\n" for k, v in pts)
            files[f"series/{metric}_{alg}_s{seed}.dat"] = body
    return files


TITLES = {"time": "Execution time (s)", "cf": "Clustering fitness", "sse": "SSE"}


def _text_table(reports, metric) -> str:
    header, rows = metric_table(reports, metric)
    fmt_cell = (lambda v: f"{v:.4f}") if metric != "sse" else (lambda v: f"{v:.8g}")
    body = [[str(row[0]), str(row[1])] + [fmt_cell(v) for v in row[2:]] for row in rows]
    widths = [max(len(h), *(len(b[i]) for b in body)) for i, h in enumerate(header)]
    lines = [TITLES[metric], "  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(b, widths)) for b in body]
    return "\n".join(lines) + "\n"


def _series(reports, metric):
    out: dict[tuple[str, int], list] = {}
    for r in sorted(reports, key=lambda r: (r.algorithm, r.seed, r.k)):
        out.setdefault((r.algorithm, r.seed), []).append((r.k, float(_metric(r, metric))))
    return out


def write_report(reports, fmt, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    for name, body in emit_report(reports, fmt).items():
        p = out_dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(body)
        written.append(p)
    return written


def parse_metric_csv(text: str) -> tuple[list[str], list[list[float]]]:
    """Inverse of the csv emitter for one metric table."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = [[int(r[0]), int(r[1])] + [float(v) for v in r[2:]] for r in reader]
    return header, rows
