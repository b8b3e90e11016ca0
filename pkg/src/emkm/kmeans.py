"""Lloyd-style K-Means with reassignment-count termination."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .model import Assignment, FitConfig, FitResult, Termination


def euclidean_distance(x, m) -> float:
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    if x.shape != m.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {m.shape}")
    return float(np.sqrt(np.sum((x - m) ** 2)))


def squared_distances(data: np.ndarray, means: np.ndarray) -> np.ndarray:
    """(N, k) matrix of squared Euclidean distances.

    Computed from explicit differences rather than the |x|^2 - 2x.m + |m|^2
    expansion so that exact ties stay exact.
    """
    out = np.empty((data.shape[0], means.shape[0]))
    for j, m in enumerate(means):
        diff = data - m
        out[:, j] = np.einsum("ij,ij->i", diff, diff)
    return out


def nearest(data: np.ndarray, means: np.ndarray) -> np.ndarray:
    """argmin over ``squared_distances`` without building it for every row.

    A single matrix product gives the expanded distances; rows whose two
    smallest expanded distances lie within the rounding bound of each other
    are settled with explicit differences, so the result (ties included)
    equals the exact argmin.
    """
    data = np.asarray(data, dtype=float)
    k, d = means.shape
    if k == 1:
        return np.zeros(data.shape[0], dtype=np.intp)
    ref = means.mean(axis=0)
    xs = data - ref
    ms = means - ref
    x2 = np.einsum("ij,ij->i", xs, xs)
    m2 = np.einsum("ij,ij->i", ms, ms)
    approx = xs @ (-2.0 * ms.T)
    approx += m2
    labels = np.argmin(approx, axis=1)
    best = approx[np.arange(data.shape[0]), labels]
    approx[np.arange(data.shape[0]), labels] = np.inf
    second = approx.min(axis=1)
    # forward error of the expansion is below (d+4) u (|x|^2 + |m|^2) per entry
    tol = 4.0 * (d + 4) * np.finfo(float).eps * (x2 + m2.max())
    close = np.flatnonzero(second - best <= tol)
    if close.size:
        labels[close] = np.argmin(squared_distances(data[close], means), axis=1)
    return labels


def assign_nearest(data, means, previous: Assignment | None = None) -> Assignment:
    """Label each point with its nearest mean; ties go to the lowest index."""
    labels = nearest(np.asarray(data, dtype=float), np.asarray(means, dtype=float))
    return Assignment.from_labels(labels, previous)


def update_means(data, assign: Assignment, k: int, previous_means=None):
    """Member means and counts per cluster.

    An empty cluster is re-seeded with the data point farthest from its old
    mean (``previous_means`` is required for that). Returns (means, counts).
    """
    data = np.asarray(data, dtype=float)
    labels = assign.labels
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, data.shape[1]))
    np.add.at(sums, labels, data)
    means = np.empty_like(sums)
    nonempty = counts > 0
    means[nonempty] = sums[nonempty] / counts[nonempty, None]
    empty = np.flatnonzero(~nonempty)
    if empty.size:
        if previous_means is None:
            raise ValueError("empty cluster and no previous means to repair from")
        used: set[int] = set()
        for j in empty:
            means[j] = data[farthest_point(data, previous_means[j], used)]
    return means, counts


def farthest_point(data: np.ndarray, ref: np.ndarray, exclude: set[int]) -> int:
    """Index of the point farthest from ``ref``; records it in ``exclude``."""
    diff = data - ref
    dist = np.einsum("ij,ij->i", diff, diff)
    if exclude:
        dist[list(exclude)] = -np.inf
    i = int(np.argmax(dist))
    exclude.add(i)
    return i


def distortion(data, labels, means) -> float:
    diff = np.asarray(data) - np.asarray(means)[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def kmeans_run(
    data,
    initial_means,
    config: FitConfig = FitConfig(),
    callback: Callable[[dict], None] | None = None,
) -> FitResult:
    """Alternate nearest-mean assignment and mean updates until termination.

    One iteration is assign followed by update. ``callback`` (if given) is
    called after every iteration with the current labels, means and counts.
    """
    data = np.asarray(data, dtype=float)
    means = np.array(initial_means, dtype=float)
    k = means.shape[0]
    stop = Termination(config.threshold)
    assign = None
    converged = False
    it = 0
    while it < config.max_iterations:
        assign = assign_nearest(data, means, assign)
        it += 1
        done = stop.update(assign.changed)
        means, counts = update_means(data, assign, k, means)
        if callback is not None:
            callback({"iteration": it, "labels": assign.labels, "means": means,
                      "counts": counts, "psi": assign.changed})
        if done:
            converged = True
            break
    return FitResult(
        labels=assign.labels,
        means=means,
        iterations=it,
        converged=converged,
        psi_history=stop.history,
        phase_iterations={"kmeans": it},
    )
