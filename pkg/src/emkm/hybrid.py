"""Composite pipelines built from the K-Means and EM steps.

kmem_run: K-Means to convergence, then EM seeded from its clusters.
hbemkm_run: one EM pass and one K-Means pass in alternation, each followed
by the reassignment-count termination check.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import em, linalg
from .kmeans import assign_nearest, kmeans_run
from .model import (
    Assignment,
    FitConfig,
    FitResult,
    MixtureState,
    Termination,
    select_initial_rows,
)


def repair_empty(data, labels: np.ndarray, previous_means: np.ndarray) -> np.ndarray:
    """Give every empty cluster the point farthest from its previous mean.

    Points are only taken from clusters with at least two members, so no
    repair empties another cluster. Returns the (possibly new) label array.
    """
    k = previous_means.shape[0]
    counts = np.bincount(labels, minlength=k)
    if np.all(counts > 0):
        return labels
    labels = labels.copy()
    for j in np.flatnonzero(counts == 0):
        diff = data - previous_means[j]
        dist = np.einsum("ij,ij->i", diff, diff)
        dist[counts[labels] < 2] = -np.inf
        i = int(np.argmax(dist))
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] = 1
    return labels


def hard_m_step(data, assign: Assignment, previous_means: np.ndarray, t: int = 0):
    """Mixture parameters from hard labels.

    Weights are n_j/N, means the member means and covariances the
    population covariance of the members about their own mean. Empty
    clusters are repaired first, which may relabel points, so the
    (possibly updated) assignment is returned alongside the state.
    """
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    k = previous_means.shape[0]
    labels = repair_empty(data, assign.labels, previous_means)
    if labels is not assign.labels:
        assign = Assignment(labels, assign.changed)
    counts = np.bincount(labels, minlength=k)
    means = np.empty((k, d))
    covs = np.empty((k, d, d))
    # one stable sort groups every cluster's members into a contiguous block
    grouped = data[np.argsort(labels, kind="stable")].T.copy()
    ends = np.cumsum(counts)
    for j in range(k):
        members = grouped[:, ends[j] - counts[j]:ends[j]]
        means[j] = members.mean(axis=1)
        diff = members - means[j][:, None]
        covs[j] = linalg.regularize(diff @ diff.T / counts[j])
    state = MixtureState.build(means, covs, counts / n, t=t)
    return state, assign


def kmem_run(data, k: int, rng: np.random.Generator, config: FitConfig = FitConfig(),
             callback: Callable[[dict], None] | None = None) -> FitResult:
    """K-Means from random rows, then EM from the K-Means clusters."""
    data = np.asarray(data, dtype=float)
    rows = select_initial_rows(data.shape[0], k, rng)
    km = kmeans_run(data, data[rows], config)
    start = Assignment(km.labels, data.shape[0])
    state, start = hard_m_step(data, start, km.means, t=0)
    # the EM phase counts reassignments relative to the K-Means labels
    res = em.em_loop(data, state, config, previous=start, callback=callback)
    res.phase_iterations = {"kmeans": km.iterations, "em": res.iterations}
    res.iterations = km.iterations + res.iterations
    res.converged = km.converged and res.converged
    res.psi_history = km.psi_history + res.psi_history
    return res


def hbemkm_run(data, k: int, rng: np.random.Generator, config: FitConfig = FitConfig(),
               callback: Callable[[dict], None] | None = None) -> FitResult:
    """Alternate a hard-M/E pass and a soft-mean/K-Means pass until termination.

    One iteration is: M-step from the current hard clusters (weights n_j/N),
    E-step hard assignment, check; then if still progressing, means from the
    E-step responsibilities, nearest-mean assignment, check. Both checks share
    one rolling reassignment history.
    """
    data = np.asarray(data, dtype=float)
    rows = select_initial_rows(data.shape[0], k, rng)
    means = data[rows].copy()
    assign = assign_nearest(data, means)
    stop = Termination(config.threshold)
    stop.update(assign.changed)
    state = None
    converged = False
    it = 0
    while it < config.max_iterations:
        it += 1
        state, assign = hard_m_step(data, assign, means, t=it)
        resp, assign, _ = em.responsibilities(data, state, assign)
        if callback is not None:
            callback({"iteration": it, "step": "e", "resp": resp, "labels": assign.labels,
                      "psi": assign.changed, "state": state})
        if stop.update(assign.changed):
            converged = True
            means = state.means
            break
        soft = resp.sum(axis=0)
        means = np.where(soft[:, None] > 0, resp.T @ data / np.maximum(soft, 1e-300)[:, None],
                         state.means)
        assign = assign_nearest(data, means, assign)
        if callback is not None:
            callback({"iteration": it, "step": "kmeans", "labels": assign.labels,
                      "psi": assign.changed, "means": means})
        if stop.update(assign.changed):
            converged = True
            break
    return FitResult(
        labels=assign.labels,
        means=means,
        iterations=it,
        converged=converged,
        state=state,
        psi_history=stop.history,
        phase_iterations={"hbemkm": it},
    )
