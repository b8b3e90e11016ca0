"""Synthetic multivariate normal clusters.

Three scenarios:
  distinct-all       every cluster has its own mean and covariance
  shared-mean        clusters 0-2 share cluster 0's mean, covariances differ
  shared-covariance  clusters 0-2 share cluster 0's covariance, means differ

Samples are mean + L z with L the Cholesky factor of the covariance and z
drawn from numpy's ziggurat standard normal generator, one independent
substream per cluster spawned from the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg

SCENARIOS = ("distinct-all", "shared-mean", "shared-covariance")
SHARED = 3  # number of clusters that share a mean or covariance


@dataclass
class ScenarioSpec:
    means: np.ndarray  # (k, d)
    covariances: np.ndarray  # (k, d, d)
    sizes: list[int]
    scenario: str = "distinct-all"
    seed: int = 0
    params: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def manifest(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "k": self.k,
            "d": self.d,
            "sizes": list(map(int, self.sizes)),
            "params": self.params,
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }


def lattice_means(k: int, d: int, spacing: float) -> np.ndarray:
    """k points of the integer grid {0..side-1}^d scaled by ``spacing``.

    ``side`` is the smallest grid size holding k points; points are taken
    in mixed-radix order.
    """
    side = 2
    while side ** d < k:
        side += 1
    out = np.zeros((k, d))
    for j in range(k):
        v = j
        for l in range(d):
            out[j, l] = v % side
            v //= side
    return out * spacing


def random_spd(d: int, rng: np.random.Generator, scale: float) -> np.ndarray:
    """A^T A + I with A entries drawn N(0, scale^2)."""
    a = rng.standard_normal((d, d)) * scale
    m = a.T @ a + np.eye(d)
    return 0.5 * (m + m.T)


def default_spec(scenario: str = "distinct-all", k: int = 10, d: int = 10,
                 n: int = 50000, seed: int = 0, spacing: float = 10.0,
                 spread: float = 1.0) -> ScenarioSpec:
    """The documented default parameter set for a scenario.

    Cluster sizes are as equal as possible (remainder goes to the first
    clusters). ``spread`` scales the random covariance factor.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    if k < 1 or d < 1 or n < k:
        raise ValueError("need k >= 1, d >= 1 and n >= k")
    if scenario != "distinct-all" and k < 2:
        raise ValueError(f"scenario {scenario!r} needs at least two clusters")
    param_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EC]))
    means = lattice_means(k, d, spacing)
    covs = np.stack([random_spd(d, param_rng, spread) for _ in range(k)])
    share = min(SHARED, k)
    if scenario == "shared-mean":
        means[1:share] = means[0]
        # distinct lattice points freed up by the sharing are dropped, so
        # shift the remaining clusters down to keep the lattice compact
        if k > share:
            means[share:] = lattice_means(k - share + 1, d, spacing)[1:]
    elif scenario == "shared-covariance":
        covs[1:share] = covs[0]
    base, extra = divmod(n, k)
    sizes = [base + (1 if j < extra else 0) for j in range(k)]
    return ScenarioSpec(means, covs, sizes, scenario, seed,
                        {"n": n, "spacing": spacing, "spread": spread})


def mvn_sample(mean, covariance, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` draws of mean + L z."""
    mean = np.asarray(mean, dtype=float)
    try:
        L = linalg.cholesky(linalg.regularize(np.asarray(covariance, dtype=float)))
    except linalg.NotPositiveDefiniteError as exc:
        raise ValueError(f"covariance is not positive definite: {exc}") from None
    z = rng.standard_normal((count, mean.shape[0]))
    return mean + z @ L.T


def generate(spec: ScenarioSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sample every cluster, then shuffle rows. Returns (data, true_labels)."""
    streams = np.random.SeedSequence(spec.seed).spawn(spec.k + 1)
    parts = []
    labels = []
    for j in range(spec.k):
        rng = np.random.default_rng(streams[j])
        parts.append(mvn_sample(spec.means[j], spec.covariances[j], spec.sizes[j], rng))
        labels.append(np.full(spec.sizes[j], j))
    data = np.concatenate(parts)
    truth = np.concatenate(labels)
    perm = np.random.default_rng(streams[-1]).permutation(data.shape[0])
    return data[perm], truth[perm]


def write_dataset(path, data: np.ndarray, labels: np.ndarray, spec: ScenarioSpec) -> Path:
    """CSV with features then the true label as the last column, plus a manifest.

    The manifest lands next to the CSV as ``<name>.manifest.json`` and records
    the column spec needed to read it back.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d = data.shape[1]
    with open(path, "w") as fh:
        for row, lab in zip(data, labels):
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write(f",{int(lab)}\n")
    manifest = spec.manifest()
    manifest["file"] = path.name
    manifest["columns"] = {"features": f"0-{d - 1}", "drop": str(d)}
    mpath = path.with_name(path.name + ".manifest.json")
    mpath.write_text(json.dumps(manifest, indent=1))
    return mpath
