"""beta-Lloyd's local search with an iteration cap, and the full clustering cost."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .core import Clustering, ClusteringInstance, hamming_mismatches
from .seeding import SeedVector, seed

CENTER_RULES = ("medoid", "euclidean_mean")


@dataclass(frozen=True)
class LloydsConfig:
    """``beta`` in [1, inf], iteration cap ``T``, and the center rule.

    ``euclidean_mean`` replaces the medoid step by the coordinate centroid and
    is only meaningful for ``beta = 2``. ``full_scan`` lets the medoid of a
    cluster be any point of the instance instead of one of its own members.
    """

    beta: float = 2.0
    T: int = 3
    center_rule: str = "medoid"
    full_scan: bool = False

    def __post_init__(self):
        if self.center_rule == "mean":
            object.__setattr__(self, "center_rule", "euclidean_mean")
        if self.center_rule not in CENTER_RULES:
            raise ValueError(f"unknown center rule {self.center_rule!r}")
        if not self.beta >= 1:
            raise ValueError("beta must be >= 1")
        if self.T < 1:
            raise ValueError("T must be a positive integer")
        if self.center_rule == "euclidean_mean" and self.beta != 2:
            raise ValueError("the mean rule requires beta = 2")


def center_update(instance: ClusteringInstance, cluster, config: LloydsConfig):
    """New center for one cluster: medoid index, or centroid coordinates."""
    members = np.asarray(sorted(int(v) for v in cluster), dtype=np.int64)
    if members.size == 0:
        return None
    X = instance.points
    if config.center_rule == "euclidean_mean":
        return X[members].mean(axis=0)
    cand = np.arange(instance.n) if config.full_scan else members
    diff = X[cand][:, None, :] - X[members][None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    cost = d.max(axis=1) if np.isinf(config.beta) else (d ** config.beta).sum(axis=1)
    return int(cand[int(np.argmin(cost))])


def lloyds_iterate(instance: ClusteringInstance, initial_centers, config: LloydsConfig):
    """Alternate Voronoi assignment and center updates, at most ``T`` times.

    Stops early once an update leaves the center set unchanged. Returns the
    clustering induced by the final centers and the iterations used.
    """
    X = instance.points
    init = np.asarray(initial_centers)
    if config.center_rule == "euclidean_mean":
        C0 = X[init] if init.ndim == 1 else np.asarray(init, dtype=np.float64)
        if C0.shape[0] != instance.k:
            raise ValueError("need exactly k initial centers")
        assign, C, it, conv = kernels.lloyds_mean(X, np.ascontiguousarray(C0), config.T)
    else:
        if init.ndim != 1 or init.shape[0] != instance.k:
            raise ValueError("medoid rule needs k initial center indices")
        assign, C, it, conv = kernels.lloyds_medoid(
            X, init.astype(np.int64), float(config.beta), config.T, config.full_scan)
    return Clustering(assign, instance.k, C, iterations=it, converged=conv), it


def clus_mismatches(instance: ClusteringInstance, Z, alpha: float, config: LloydsConfig) -> int:
    centers = seed(instance, Z, alpha)
    clustering, _ = lloyds_iterate(instance, centers, config)
    return hamming_mismatches(clustering.assignment, instance.target, instance.k)


def clus_cost(instance: ClusteringInstance, Z, alpha: float, config: LloydsConfig) -> float:
    """Hamming cost of seeding + Lloyd's against the instance target."""
    return clus_mismatches(instance, Z, alpha, config) / instance.n


def centers_mismatches(instance: ClusteringInstance, centers, config: LloydsConfig) -> int:
    """Mismatch count when Lloyd's starts from the given seed centers."""
    clustering, _ = lloyds_iterate(instance, np.asarray(centers, dtype=np.int64), config)
    return hamming_mismatches(clustering.assignment, instance.target, instance.k)
