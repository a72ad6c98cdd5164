"""d^alpha seeding driven by a pre-drawn vector of uniforms.

Round 1 picks uniformly over all points (equal-width intervals in index order).
Later rounds sort points by descending distance to the chosen centers (ties by
ascending index) and lay out one interval per point with width proportional to
``d^alpha``; the point whose interval contains ``z_t`` becomes the next center.
Points at distance zero always get weight zero, so ``alpha=0`` is uniform over
uncovered points. ``alpha=inf`` is farthest-first traversal with tied maxima
sharing ``z_t`` equally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from ._backend import kernels
from .core import ClusteringInstance


class FamilyContractError(ValueError):
    """A seeding family broke normalization, monotonicity or non-crossing."""


@dataclass(frozen=True, eq=False)
class SeedVector:
    """The ``k`` uniforms in ``[0, 1)`` that make seeding deterministic."""

    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=np.float64)
        if z.ndim != 1 or z.size == 0:
            raise ValueError("seed vector must be a non-empty 1-D sequence")
        if np.any(z < 0.0) or np.any(z >= 1.0):
            raise ValueError("seed vector entries must lie in [0, 1)")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    def __len__(self):
        return self.z.shape[0]


@dataclass(frozen=True, eq=False)
class SortedDistanceProfile:
    """Distances to the current centers, sorted descending.

    ``order[r]`` is the point at rank ``r``; ``d[r]`` its distance. ``d`` is
    ``None`` for the round-1 profile (no centers yet), where every point has
    equal weight.
    """

    order: np.ndarray
    d: Optional[np.ndarray]
    is_center: np.ndarray

    @property
    def n(self) -> int:
        return self.order.shape[0]

    @property
    def uniform(self) -> bool:
        return self.d is None

    @property
    def degenerate(self) -> bool:
        return self.d is not None and not np.any(self.d > 0)

    def log_weights(self):
        if self.d is None:
            raise ValueError("round-1 profile has no distances")
        return kernels.log_weights(np.ascontiguousarray(self.d))

    def ratios(self, alpha: float) -> np.ndarray:
        """``D_i(alpha) / D_n(alpha)`` for every rank ``i = 1..n``."""
        if self.d is None:
            return np.arange(1, self.n + 1) / self.n
        if self.degenerate:
            raise ValueError("all distances are zero")
        lr, n_pos = self.log_weights()
        if np.isinf(alpha):
            top = np.count_nonzero(self.d[:n_pos] == self.d[0])
            w = np.zeros(self.n)
            w[:top] = 1.0
        elif alpha == 0.0:
            w = np.zeros(self.n)
            w[:n_pos] = 1.0
        else:
            w = np.zeros(self.n)
            w[:n_pos] = np.exp(alpha * lr[:n_pos])
        cum = np.cumsum(w)
        return cum / cum[-1]


def distance_profile(instance: ClusteringInstance, centers: Sequence[int] = ()) -> SortedDistanceProfile:
    n = instance.n
    is_center = np.zeros(n, dtype=bool)
    if len(centers) == 0:
        return SortedDistanceProfile(np.arange(n, dtype=np.int64), None, is_center)
    dmin = np.full(n, np.inf)
    for c in centers:
        if not 0 <= int(c) < n:
            raise IndexError("center index out of range")
        kernels.update_min_dist(instance.points, dmin, int(c))
        is_center[int(c)] = True
    order, ds = kernels.sorted_profile(dmin)
    return SortedDistanceProfile(order, ds, is_center)


def partial_sum_ratio(profile: SortedDistanceProfile, i: int, alpha: float) -> float:
    """Probability that the next pick has rank ``<= i`` (1-based)."""
    if not 1 <= i <= profile.n:
        raise IndexError("rank out of range")
    return float(profile.ratios(alpha)[i - 1])


def _pick_free(profile: SortedDistanceProfile, z: float) -> int:
    free = np.flatnonzero(~profile.is_center)
    return int(free[min(int(z * free.shape[0]), free.shape[0] - 1)])


def pick_center(profile: SortedDistanceProfile, alpha: float, z: float) -> int:
    """Original index of the point whose interval contains ``z``."""
    if not 0.0 <= z < 1.0:
        raise ValueError("z must lie in [0, 1)")
    if profile.uniform:
        return int(min(int(z * profile.n), profile.n - 1))
    if profile.degenerate:
        return _pick_free(profile, z)
    lr, n_pos = profile.log_weights()
    if np.isinf(alpha):
        r = kernels.pick_rank_inf(np.ascontiguousarray(profile.d), n_pos, z)
    else:
        r = kernels.pick_rank(lr, n_pos, float(alpha), z)
    return int(profile.order[r])


def seed(instance: ClusteringInstance, Z, alpha: float) -> tuple[int, ...]:
    """Ordered sequence of ``k`` distinct initial centers for ``(instance, Z, alpha)``."""
    z = Z.z if isinstance(Z, SeedVector) else SeedVector(Z).z
    if z.shape[0] != instance.k:
        raise ValueError(f"seed vector has {z.shape[0]} entries, instance has k={instance.k}")
    if not alpha >= 0:
        raise ValueError("alpha must be >= 0")
    inf = bool(np.isinf(alpha))
    out = kernels.seed_centers(instance.points, z, 0.0 if inf else float(alpha), inf)
    return tuple(int(c) for c in out)


def seed_reference(instance: ClusteringInstance, Z, alpha: float) -> tuple[int, ...]:
    """Round-by-round seeding through the public profile API (slow path)."""
    z = Z.z if isinstance(Z, SeedVector) else np.asarray(Z, dtype=float)
    centers: list[int] = []
    for t in range(instance.k):
        centers.append(pick_center(distance_profile(instance, centers), alpha, float(z[t])))
    return tuple(centers)


@runtime_checkable
class SeedingFamily(Protocol):
    """An alpha-parameterized rule for picking the next center.

    ``ranking`` lists points in an alpha-independent order; ``partial_sums``
    returns the cumulative pick probabilities along that order. For every
    center set they must end at 1, increase with alpha, and never cross.
    ``derivative_bound`` bounds their slope in alpha.
    """

    def ranking(self, instance: ClusteringInstance, centers: Sequence[int]) -> np.ndarray: ...

    def partial_sums(self, instance: ClusteringInstance, centers: Sequence[int],
                     alpha: float) -> np.ndarray: ...

    def derivative_bound(self, instance: ClusteringInstance) -> float: ...


class DAlphaFamily:
    """d^alpha sampling expressed through the generic family interface."""

    def ranking(self, instance, centers):
        return distance_profile(instance, centers).order

    def partial_sums(self, instance, centers, alpha):
        prof = distance_profile(instance, centers)
        if prof.degenerate:
            w = (~prof.is_center).astype(float)
            return np.cumsum(w) / w.sum()
        return prof.ratios(alpha)

    def derivative_bound(self, instance):
        # slope of D_i/D_n is at most min(2 ln(n) / alpha, ln(d_1/d_n))
        return 4.0 * math.log(max(instance.n, 2))


class UniformFamily:
    """Uniform over non-center points, whatever alpha is."""

    def ranking(self, instance, centers):
        return np.arange(instance.n, dtype=np.int64)

    def partial_sums(self, instance, centers, alpha):
        w = np.ones(instance.n)
        w[list(centers)] = 0.0
        return np.cumsum(w) / w.sum()

    def derivative_bound(self, instance):
        return 0.0


class AffineFamily:
    """Slides linearly from uniform (at ``a``) to the first free point (at ``b``).

    Over the free points in index order, ``S_i = (1 - lam) i / m + lam`` with
    ``lam = clip((alpha - a) / (b - a), 0, 1)``. Its boundaries have closed
    forms, which makes it a convenient check on the generic enumeration.
    """

    def __init__(self, a: float = 0.0, b: float = 10.0):
        if not b > a:
            raise ValueError("need b > a")
        self.a, self.b = float(a), float(b)

    def lam(self, alpha):
        return min(max((alpha - self.a) / (self.b - self.a), 0.0), 1.0)

    def ranking(self, instance, centers):
        taken = set(int(c) for c in centers)
        free = [v for v in range(instance.n) if v not in taken]
        return np.array(free + sorted(taken), dtype=np.int64)

    def partial_sums(self, instance, centers, alpha):
        m = instance.n - len(set(int(c) for c in centers))
        lam = self.lam(alpha)
        i = np.arange(1, instance.n + 1, dtype=float)
        s = (1.0 - lam) * np.minimum(i, m) / m + lam
        return np.minimum(s, 1.0)

    def derivative_bound(self, instance):
        return 1.0 / (self.b - self.a)

    def root(self, i: int, m: int, z: float) -> float:
        """Alpha where ``S_i`` reaches ``z`` (requires ``i/m <= z < 1``)."""
        lam = (z - i / m) / (1.0 - i / m)
        return self.a + lam * (self.b - self.a)


def family_partial_sum(family: SeedingFamily, instance: ClusteringInstance,
                       centers: Sequence[int], i: int, alpha: float) -> float:
    return float(family.partial_sums(instance, centers, alpha)[i - 1])


def family_pick(family: SeedingFamily, instance, centers, alpha, z) -> int:
    """Next center under ``family``: first rank with ``z < S_i(alpha)``."""
    S = family.partial_sums(instance, centers, alpha)
    r = int(np.searchsorted(S, z, side="right"))
    return int(family.ranking(instance, centers)[min(r, len(S) - 1)])


def check_family(family: SeedingFamily, instance: ClusteringInstance,
                 centers: Sequence[int], alphas: Sequence[float], slack: float = 1e-12) -> None:
    """Spot-check the family contract; raise ``FamilyContractError`` on failure."""
    prev = None
    for a in sorted(alphas):
        S = np.asarray(family.partial_sums(instance, centers, a), dtype=float)
        if abs(S[-1] - 1.0) > 1e-9:
            raise FamilyContractError(f"partial sums end at {S[-1]} at alpha={a}")
        if np.any(np.diff(S) < -slack):
            raise FamilyContractError(f"partial sums cross at alpha={a}")
        if prev is not None and np.any(S < prev - slack):
            raise FamilyContractError(f"partial sums decrease in alpha near {a}")
        prev = S
