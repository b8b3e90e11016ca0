"""Gaussian-mixture EM, K-Means and their hybrids, with CF/SSE scoring."""

from .em import em_run
from .hybrid import hbemkm_run, kmem_run
from .kmeans import kmeans_run
from .model import FitConfig, FitResult, MixtureState

__all__ = ["FitConfig", "FitResult", "MixtureState", "em_run", "hbemkm_run",
           "kmeans_run", "kmem_run"]
