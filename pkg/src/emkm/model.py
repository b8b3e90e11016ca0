"""Shared data model: datasets, mixture state, assignments, termination."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import linalg

DEFAULT_THRESHOLD = 3.0
DEFAULT_MAX_ITERATIONS = 500


@dataclass(frozen=True)
class FitConfig:
    """Knobs shared by every clustering pipeline.

    threshold: stop once the percentage change of reassignment counts drops
        below this many percent.
    max_iterations: safety cap on loop passes; hitting it is reported via
        ``FitResult.converged`` and is not an error.
    covariance_mean: "prior" centres the M-step covariance on the mean from
        the previous iteration, "updated" on the freshly computed one.
    """

    threshold: float = DEFAULT_THRESHOLD
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    covariance_mean: Literal["prior", "updated"] = "prior"

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.covariance_mean not in ("prior", "updated"):
            raise ValueError(f"unknown covariance_mean {self.covariance_mean!r}")


def as_dataset(x) -> np.ndarray:
    """Validate and freeze an (N, d) float matrix."""
    data = np.array(x, dtype=float, order="C", copy=True)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError(f"dataset must be a non-empty 2-D array, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("dataset contains non-finite values")
    data.setflags(write=False)
    return data


@dataclass(frozen=True)
class ClusterParams:
    mean: np.ndarray
    covariance: np.ndarray
    weight: float


@dataclass
class MixtureState:
    """k Gaussian components plus the cached Cholesky factors.

    Build through ``MixtureState.build`` so that the cached Cholesky factors,
    their inverses and the log-determinants always match ``covariances``.
    """

    means: np.ndarray  # (k, d)
    covariances: np.ndarray  # (k, d, d)
    weights: np.ndarray  # (k,)
    t: int = 0
    factors: np.ndarray = field(repr=False, default=None)
    log_dets: np.ndarray = field(repr=False, default=None)
    inv_factors: np.ndarray = field(repr=False, default=None)

    @classmethod
    def build(cls, means, covariances, weights, t=0) -> "MixtureState":
        means = np.array(means, dtype=float)
        covariances = np.array(covariances, dtype=float)
        weights = np.array(weights, dtype=float)
        k = means.shape[0]
        if k < 1 or covariances.shape[0] != k or weights.shape != (k,):
            raise ValueError("inconsistent component counts")
        factors = np.empty_like(covariances)
        log_dets = np.empty(k)
        inv_factors = np.empty_like(covariances)
        for j in range(k):
            factors[j], log_dets[j] = linalg.factorize(covariances[j])
            inv_factors[j] = linalg.inverse_factor(factors[j])
        return cls(means, covariances, weights, t, factors, log_dets, inv_factors)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def clusters(self) -> list[ClusterParams]:
        return [
            ClusterParams(self.means[j], self.covariances[j], float(self.weights[j]))
            for j in range(self.k)
        ]


@dataclass(frozen=True)
class Assignment:
    labels: np.ndarray
    changed: int

    @classmethod
    def from_labels(cls, labels, previous: "Assignment | None" = None) -> "Assignment":
        """Wrap labels, counting changes against ``previous`` (all N if none)."""
        labels = np.asarray(labels, dtype=np.intp)
        if previous is None:
            changed = labels.shape[0]
        else:
            changed = int(np.count_nonzero(labels != previous.labels))
        return cls(labels, changed)


@dataclass
class FitResult:
    """Outcome of one clustering run.

    ``iterations`` counts loop passes; ``phase_iterations`` breaks them down
    for multi-phase pipelines. ``state`` is None for plain K-Means.
    """

    labels: np.ndarray
    means: np.ndarray
    iterations: int
    converged: bool
    state: MixtureState | None = None
    psi_history: list[int] = field(default_factory=list)
    phase_iterations: dict[str, int] = field(default_factory=dict)


def global_covariance(data: np.ndarray) -> np.ndarray:
    """Population covariance (divide by N) about the dataset mean."""
    data = np.asarray(data, dtype=float)
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / data.shape[0]
    return 0.5 * (cov + cov.T)


def select_initial_rows(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """k distinct row indices drawn uniformly; shared by every algorithm."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples N={n}")
    return rng.choice(n, size=k, replace=False)


def init_params(data: np.ndarray, k: int, rng: np.random.Generator) -> MixtureState:
    """Uniform weights, random data rows as means, global covariance everywhere."""
    rows = select_initial_rows(data.shape[0], k, rng)
    cov = linalg.regularize(global_covariance(data))
    return MixtureState.build(
        data[rows].copy(),
        np.broadcast_to(cov, (k,) + cov.shape),
        np.full(k, 1.0 / k),
        t=0,
    )


def percentage_change(psi_t: int, psi_t1: int) -> float | None:
    """|psi_t - psi_t1| / psi_t * 100, or None (terminate) when psi_t == 0."""
    if psi_t < 0 or psi_t1 < 0:
        raise ValueError("reassignment counts must be non-negative")
    if psi_t == 0:
        return None
    return abs(psi_t - psi_t1) / psi_t * 100.0


class Termination:
    """Rolling bookkeeping of reassignment counts.

    Feed each assignment pass's changed-count to ``update``; it returns True
    once the run should stop. A zero count stops immediately (fixed point);
    otherwise the first count never stops and later ones stop when the
    percentage change against the previous count is below the threshold.
    """

    def __init__(self, threshold: float = DEFAULT_THRESHOLD):
        self.threshold = threshold
        self.history: list[int] = []
        self.changes: list[float] = []

    def update(self, psi: int) -> bool:
        prev = self.history[-1] if self.history else None
        self.history.append(int(psi))
        if psi == 0:
            return True
        if prev is None:
            return False
        pc = percentage_change(prev, psi)
        if pc is None:
            return True
        self.changes.append(pc)
        return pc < self.threshold
