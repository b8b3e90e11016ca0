"""Clustering Fitness and the mean-distance SSE.

Empty clusters are dropped before scoring: k in the averages below is the
number of clusters that actually hold points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

DEFAULT_LAMBDA = 0.5


@dataclass(frozen=True)
class ClusteringResult:
    data: np.ndarray
    labels: np.ndarray
    centroids: np.ndarray  # (k, d), non-empty clusters only
    counts: np.ndarray  # (k,)
    index: np.ndarray  # position of each point's centroid in ``centroids``

    @classmethod
    def from_labels(cls, data, labels) -> "ClusteringResult":
        data = np.asarray(data, dtype=float)
        labels = np.asarray(labels)
        ids, index, counts = np.unique(labels, return_inverse=True, return_counts=True)
        sums = np.zeros((ids.shape[0], data.shape[1]))
        np.add.at(sums, index, data)
        return cls(data, labels, sums / counts[:, None], counts, index)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def point_distances(self) -> np.ndarray:
        diff = self.data - self.centroids[self.index]
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def intra_cluster_similarity(members, centroid) -> float:
    """(1 + n_j) / (1 + sum of member-to-centroid distances)."""
    members = np.atleast_2d(np.asarray(members, dtype=float))
    dist = np.sqrt(np.sum((members - np.asarray(centroid, dtype=float)) ** 2, axis=1))
    return (1.0 + members.shape[0]) / (1.0 + float(dist.sum()))


def intra_similarity_overall(result: ClusteringResult) -> float:
    per_point = result.point_distances()
    radii = np.bincount(result.index, weights=per_point, minlength=result.k)
    return float(np.mean((1.0 + result.counts) / (1.0 + radii)))


def inter_cluster_similarity(result: ClusteringResult, n: Literal["k", "N"] = "k") -> float:
    """(1 + n) / (1 + sum of centroid distances to the centroid of centroids).

    ``n="k"`` uses the number of clusters in the numerator, ``n="N"`` the
    number of points.
    """
    if n == "k":
        count = result.k
    elif n == "N":
        count = result.data.shape[0]
    else:
        raise ValueError(f"unknown inter-similarity count {n!r}")
    centre = result.centroids.mean(axis=0)
    spread = np.sqrt(np.sum((result.centroids - centre) ** 2, axis=1)).sum()
    return (1.0 + count) / (1.0 + float(spread))


def clustering_fitness(result: ClusteringResult, lam: float = DEFAULT_LAMBDA,
                       n: Literal["k", "N"] = "k") -> float:
    """lam * intra + (1 - lam) / inter; higher is better."""
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie strictly between 0 and 1")
    return lam * intra_similarity_overall(result) + (1.0 - lam) / inter_cluster_similarity(result, n)


def sse(result: ClusteringResult, variant: Literal["mean", "squared"] = "mean") -> float:
    """Error of points against their centroids.

    "mean": average Euclidean distance to the assigned centroid.
    "squared": conventional sum of squared distances.
    """
    dist = result.point_distances()
    if variant == "mean":
        return float(dist.sum() / dist.shape[0])
    if variant == "squared":
        return float(np.sum(dist ** 2))
    raise ValueError(f"unknown SSE variant {variant!r}")
