"""Standard EM for full-covariance Gaussian mixtures.

All density work happens in log space from the Cholesky factors cached on
the MixtureState; covariance inverses are never formed.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import linalg
from .model import (
    Assignment,
    ClusterParams,
    FitConfig,
    FitResult,
    MixtureState,
    Termination,
    global_covariance,
    init_params,
)

LOG_2PI = float(np.log(2.0 * np.pi))
MIN_SOFT_COUNT = 1e-12


def log_gaussian_pdf(x, params: ClusterParams, factor: np.ndarray | None = None) -> float:
    """log N(x | mean, covariance) for one point."""
    x = np.asarray(x, dtype=float)
    if factor is None:
        factor = linalg.cholesky(params.covariance)
    d = x.shape[0]
    maha = linalg.mahalanobis_sq(factor, (x - params.mean)[None, :])[0]
    return -0.5 * d * LOG_2PI - 0.5 * linalg.log_det(factor) - 0.5 * maha


def component_log_pdfs(data: np.ndarray, state: MixtureState) -> np.ndarray:
    """(N, k) matrix of log N(x_i | mu_j, Sigma_j)."""
    d = data.shape[1]
    maha = linalg.mahalanobis_sq_many(state.inv_factors, state.means, data)
    return (-0.5 * d * LOG_2PI) - 0.5 * state.log_dets - 0.5 * maha


def logsumexp_rows(a: np.ndarray) -> np.ndarray:
    top = np.max(a, axis=1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    return (top + np.log(np.sum(np.exp(a - top), axis=1, keepdims=True)))[:, 0]


def weighted_log_pdfs(data, state: MixtureState) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_w = np.log(state.weights)
    return component_log_pdfs(data, state) + log_w


def mixture_log_density(x, state: MixtureState) -> float:
    """log sum_l W_l N(x | mu_l, Sigma_l) for one point."""
    x = np.asarray(x, dtype=float)[None, :]
    return float(logsumexp_rows(weighted_log_pdfs(x, state))[0])


def responsibilities(data, state: MixtureState, previous: Assignment | None = None):
    """Posterior cluster probabilities and the hard max-probability assignment.

    Returns (resp, assignment, log_density) where log_density holds the
    per-point mixture log density (the normalizer).
    """
    data = np.asarray(data, dtype=float)
    joint = weighted_log_pdfs(data, state)
    log_density = logsumexp_rows(joint)
    resp = np.exp(joint - log_density[:, None])
    labels = np.argmax(joint, axis=1)
    return resp, Assignment.from_labels(labels, previous), log_density


def m_step(
    data,
    resp: np.ndarray,
    state: MixtureState,
    covariance_mean: str = "prior",
    log_density: np.ndarray | None = None,
) -> MixtureState:
    """Weighted means, covariances and weights for iteration t+1.

    With ``covariance_mean="prior"`` each covariance is centred on the
    component's mean from ``state`` (iteration t); "updated" centres it on
    the new mean. A component whose soft count vanishes is reset to the
    lowest-density point with the global covariance and weight 1/k.
    """
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    k = state.k
    soft = resp.sum(axis=0)
    means = np.empty((k, d))
    covs = np.empty((k, d, d))
    weights = soft / n
    degenerate = []
    data_t = np.ascontiguousarray(data.T)  # (d, N) rows keep the products contiguous
    for j in range(k):
        if soft[j] < MIN_SOFT_COUNT:
            degenerate.append(j)
            continue
        r = resp[:, j]
        means[j] = data_t @ r / soft[j]
        centre = state.means[j] if covariance_mean == "prior" else means[j]
        diff = data_t - centre[:, None]
        cov = (diff * r) @ diff.T / soft[j]
        covs[j] = linalg.regularize(cov)
    if degenerate:
        if log_density is None:
            log_density = logsumexp_rows(weighted_log_pdfs(data, state))
        order = np.argsort(log_density, kind="stable")
        gcov = linalg.regularize(global_covariance(data))
        for rank, j in enumerate(degenerate):
            means[j] = data[order[rank]]
            covs[j] = gcov
            weights[j] = 1.0 / k
    weights = weights / weights.sum()
    return MixtureState.build(means, covs, weights, t=state.t + 1)


def em_loop(
    data,
    state: MixtureState,
    config: FitConfig,
    previous: Assignment | None = None,
    callback: Callable[[dict], None] | None = None,
) -> FitResult:
    """E-step, M-step, termination check; repeated from a given state."""
    stop = Termination(config.threshold)
    assign = previous
    converged = False
    it = 0
    while it < config.max_iterations:
        resp, assign, log_density = responsibilities(data, state, assign)
        new_state = m_step(data, resp, state, config.covariance_mean, log_density)
        it += 1
        if callback is not None:
            callback({"iteration": it, "step": "em", "resp": resp, "labels": assign.labels,
                      "psi": assign.changed, "state": new_state})
        state = new_state
        if stop.update(assign.changed):
            converged = True
            break
    return FitResult(
        labels=assign.labels,
        means=state.means,
        iterations=it,
        converged=converged,
        state=state,
        psi_history=stop.history,
        phase_iterations={"em": it},
    )


def em_run(data, k: int, rng: np.random.Generator, config: FitConfig = FitConfig(),
           callback=None) -> FitResult:
    """Standard EM from random-row means and the global covariance."""
    state = init_params(data, k, rng)
    return em_loop(data, state, config, callback=callback)
