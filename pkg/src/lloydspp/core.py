"""Clustering instances, clusterings, and the two cost functions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._backend import kernels

# Bound on the per-instance loss; Hamming cost lives in [0, 1].
MAX_LOSS = 1.0


class InstanceError(ValueError):
    """Raised when an instance or clustering violates its invariants."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, order="C")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ClusteringInstance:
    """Point set with Euclidean metric, cluster count ``k`` and target labels.

    ``target[v]`` is the ground-truth label of point ``v`` in ``0..k-1``; every
    label must be used at least once.
    """

    points: np.ndarray
    k: int
    target: np.ndarray
    metric: str = "euclidean"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise InstanceError("points must be a non-empty (n, dim) array")
        if not np.all(np.isfinite(pts)):
            raise InstanceError("points must be finite")
        object.__setattr__(self, "points", _frozen(pts, np.float64))
        n = pts.shape[0]
        if self.metric != "euclidean":
            raise InstanceError(f"unsupported metric {self.metric!r}")
        if not 1 <= int(self.k) <= n:
            raise InstanceError(f"k exceeds point count (k={self.k}, n={n})"
                                if int(self.k) > n else "k must be positive")
        object.__setattr__(self, "k", int(self.k))
        tgt = np.asarray(self.target)
        if tgt.shape != (n,):
            raise InstanceError("target must assign one label per point")
        if tgt.size and (tgt.min() < 0 or tgt.max() >= self.k):
            raise InstanceError("target labels must lie in 0..k-1")
        if np.unique(tgt).size != self.k:
            raise InstanceError("every target label 0..k-1 must appear")
        object.__setattr__(self, "target", _frozen(tgt, np.int64))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def distance_matrix(self) -> np.ndarray:
        diff = self.points[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@dataclass(frozen=True, eq=False)
class Clustering:
    """A k-partition: ``assignment[v]`` in ``0..k-1``, optional centers.

    ``centers`` holds point indices (medoid rule) or a ``(k, dim)`` coordinate
    array (mean rule). Empty clusters are allowed.
    """

    assignment: np.ndarray
    k: int
    centers: Optional[np.ndarray] = None
    iterations: int = 0
    converged: bool = False

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.ndim != 1:
            raise InstanceError("assignment must be one-dimensional")
        if a.size and (a.min() < 0 or a.max() >= self.k):
            raise InstanceError("cluster index out of range")
        object.__setattr__(self, "assignment", _frozen(a, np.int64))
        if self.centers is not None:
            object.__setattr__(self, "centers", _frozen(self.centers, np.asarray(self.centers).dtype))

    @property
    def center_indices(self) -> bool:
        return self.centers is not None and self.centers.ndim == 1

    def center_coords(self, instance: ClusteringInstance) -> np.ndarray:
        if self.centers is None:
            raise InstanceError("clustering carries no centers")
        if self.center_indices:
            return instance.points[self.centers]
        return np.asarray(self.centers, dtype=np.float64)

    def key(self) -> tuple:
        """Hashable identity of the output (partition plus centers)."""
        c = () if self.centers is None else tuple(np.ravel(self.centers).tolist())
        return tuple(self.assignment.tolist()), c


@dataclass(frozen=True)
class DistanceStats:
    """Spread of the pairwise distances of an instance.

    ``R`` is the largest ratio between non-zero distances and ``s`` the smallest
    ratio between two distinct distances (``inf`` with fewer than two).
    """

    R: float
    s: float
    dmax: float
    dmin_nonzero: float


def pairwise_distance(instance: ClusteringInstance, i: int, j: int) -> float:
    n = instance.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"point index out of range for n={n}")
    diff = instance.points[i] - instance.points[j]
    return float(np.sqrt(diff @ diff))


def distance_stats(instance: ClusteringInstance) -> DistanceStats:
    D = instance.distance_matrix()
    vals = np.unique(D[np.triu_indices(instance.n, 1)])
    vals = vals[vals > 0]
    if vals.size == 0:
        return DistanceStats(1.0, np.inf, 0.0, 0.0)
    s = float(np.min(vals[1:] / vals[:-1])) if vals.size > 1 else np.inf
    return DistanceStats(float(vals[-1] / vals[0]), s, float(vals[-1]), float(vals[0]))


def voronoi_partition(instance: ClusteringInstance, centers) -> Clustering:
    """Assign every point to its nearest center (ties: lowest position)."""
    centers = np.asarray(centers)
    if centers.size == 0:
        raise InstanceError("empty center list")
    if centers.ndim == 1 and np.issubdtype(centers.dtype, np.integer):
        coords = instance.points[centers]
        kept = centers.astype(np.int64)
    else:
        coords = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        kept = coords
    assign = kernels.voronoi(instance.points, np.ascontiguousarray(coords))
    return Clustering(assign, len(coords), kept)


def lp_cost(instance: ClusteringInstance, clustering: Clustering, beta: float) -> float:
    """The l_beta objective ``(sum_v d(v, c_v)^beta)^(1/beta)``; max for beta=inf."""
    if clustering.centers is None:
        raise InstanceError("lp_cost needs a clustering with centers")
    if not beta >= 1:
        raise ValueError("beta must be >= 1")
    C = clustering.center_coords(instance)
    diff = instance.points - C[clustering.assignment]
    d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if np.isinf(beta):
        return float(d.max())
    return float(np.sum(d ** beta) ** (1.0 / beta))


def beta_objective(instance: ClusteringInstance, clustering: Clustering, beta: float) -> float:
    """``sum_v d(v, c_v)^beta`` without the outer root."""
    C = clustering.center_coords(instance)
    diff = instance.points - C[clustering.assignment]
    d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return float(np.sum(d ** beta))


def optimal_matching(confusion) -> np.ndarray:
    """Permutation ``sigma`` maximizing ``sum_i confusion[i, sigma[i]]``."""
    W = np.asarray(confusion)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("confusion matrix must be square")
    return kernels.hungarian_max(W)


def brute_force_matching(confusion) -> tuple[tuple[int, ...], float]:
    """Exhaustive search over all permutations; a test oracle for small k."""
    W = np.asarray(confusion)
    k = W.shape[0]
    best, best_perm = -np.inf, None
    for perm in itertools.permutations(range(k)):
        s = float(sum(W[i, perm[i]] for i in range(k)))
        if s > best:
            best, best_perm = s, perm
    return best_perm, best


def confusion_matrix(assignment, target, k: int) -> np.ndarray:
    conf = np.zeros((k, k), dtype=np.int64)
    np.add.at(conf, (np.asarray(assignment), np.asarray(target)), 1)
    return conf


def hamming_mismatches(assignment, target, k: int) -> int:
    """Number of points outside the best cluster-to-label matching."""
    a = np.ascontiguousarray(assignment, dtype=np.int64)
    t = np.ascontiguousarray(target, dtype=np.int64)
    if a.shape != t.shape:
        raise InstanceError("clustering and target cover different point sets")
    return int(kernels.mismatches(a, t, k))


def hamming_distance(found: Clustering | Sequence[int], target, k: Optional[int] = None) -> float:
    """Fraction of points clustered differently from the target, minimized
    over relabelings of the clusters."""
    if isinstance(found, Clustering):
        a, k_found = found.assignment, found.k
    else:
        a = np.asarray(found, dtype=np.int64)
        k_found = int(a.max()) + 1 if a.size else 0
    t = np.asarray(target, dtype=np.int64)
    if a.shape != t.shape:
        raise InstanceError("clustering and target cover different point sets")
    kk = max(k_found, int(t.max()) + 1 if t.size else 0, k or 0)
    return hamming_mismatches(a, t, kk) / a.shape[0]
