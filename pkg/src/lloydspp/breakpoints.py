"""Exact piecewise-constant structure of seeding as a function of alpha.

For a fixed instance and seed vector, ``alpha -> seed(instance, Z, alpha)`` is
piecewise constant. The enumeration walks the execution tree depth first: a
node is a partial center sequence plus the alpha interval producing it, and its
children split that interval by which point is picked next. Because the
cumulative pick probabilities along the descending-distance order increase with
alpha and never cross, the picked rank only moves toward rank 1 as alpha grows,
so each boundary is found by bisection.

All bisection happens on one dyadic grid ``alpha_lo + j * (alpha_hi - alpha_lo)
/ 2**L`` with spacing at most ``eps``. Every boundary is a grid point where the
new center was verified by a direct pick, so leaves agree with ``seed`` at every
grid point, and off-grid alphas can only disagree within ``eps`` of a boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._backend import kernels
from .core import ClusteringInstance
from .seeding import (DAlphaFamily, SeedingFamily, SeedVector, SortedDistanceProfile,
                      family_pick)

DEFAULT_EPS = 1e-7


@dataclass(frozen=True)
class AlphaInterval:
    """``[lo, hi)``, or ``[lo, hi]`` when ``closed`` (the last one of a range)."""

    lo: float
    hi: float
    closed: bool = False

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi) or math.isinf(self.hi):
            raise ValueError(f"invalid alpha interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, alpha) -> bool:
        return self.lo <= alpha < self.hi or (self.closed and alpha == self.hi)


@dataclass(frozen=True)
class ExecutionNode:
    centers: tuple
    interval: AlphaInterval
    depth: int


@dataclass(frozen=True)
class ExecutionLeaf:
    """Complete center sequence and the alpha interval producing it.

    ``lo_idx``/``hi_idx`` are the grid indices behind the interval; ``lo`` is
    always a grid point where the sequence was verified directly.
    """

    centers: tuple
    interval: AlphaInterval
    lo_idx: int = 0
    hi_idx: int = 0


@dataclass
class BreakpointSet:
    """Sorted alpha boundaries, each tagged with the sample it came from."""

    alphas: np.ndarray
    sources: np.ndarray
    eps: float = DEFAULT_EPS

    def __len__(self):
        return self.alphas.shape[0]

    @classmethod
    def merge(cls, sets: Sequence["BreakpointSet"], eps: Optional[float] = None) -> "BreakpointSet":
        """Union of several sets, deduplicated at spacing ``eps``."""
        if not sets:
            return cls(np.zeros(0), np.zeros(0, dtype=np.int64), eps or DEFAULT_EPS)
        eps = eps if eps is not None else max(s.eps for s in sets)
        a = np.concatenate([s.alphas for s in sets])
        src = np.concatenate([s.sources for s in sets])
        order = np.lexsort((src, a))
        a, src = a[order], src[order]
        keep = np.ones(a.shape[0], dtype=bool)
        last = -np.inf
        for j, v in enumerate(a):
            if v - last <= eps:
                keep[j] = False
            else:
                last = v
        return cls(a[keep], src[keep], eps)


@dataclass
class ExecutionTree:
    leaves: list
    breakpoints: BreakpointSet
    range: AlphaInterval
    levels: int
    nodes: int = 0
    max_steps: int = 0

    @property
    def bounds(self) -> np.ndarray:
        """Left endpoints of the leaves, in increasing alpha."""
        return np.array([lf.interval.lo for lf in self.leaves])

    def leaf_at(self, alpha: float) -> ExecutionLeaf:
        if alpha not in self.range:
            raise ValueError(f"alpha={alpha} outside {self.range}")
        j = int(np.searchsorted(self.bounds, alpha, side="right")) - 1
        return self.leaves[max(j, 0)]


def grid_levels(width: float, eps: float) -> int:
    """Halvings needed so the grid spacing ``width / 2**L`` is at most ``eps``."""
    if width <= 0:
        return 0
    return max(0, math.ceil(math.log2(width / eps)))


def _alpha_at(idx, rng: AlphaInterval, L):
    return kernels.alpha_at(int(idx), rng.lo, rng.hi, L)


def solve_breakpoint(profile: SortedDistanceProfile, i: int, z: float,
                     search: AlphaInterval, eps: float = DEFAULT_EPS) -> float:
    """Alpha where ``D_i(alpha) / D_n(alpha)`` crosses ``z`` (1-based rank ``i``).

    Needs ``ratio(lo) <= z < ratio(hi)``. Returns the first point of a grid with
    spacing ``<= eps`` at which the ratio exceeds ``z``, so the answer is at most
    ``eps`` above the true root; ``ceil(log2(width / eps))`` bisection steps.
    """
    lo_r = profile.ratios(search.lo)[i - 1]
    hi_r = profile.ratios(search.hi)[i - 1]
    if not lo_r <= z < hi_r:
        raise ValueError(f"no crossing of z={z} on [{search.lo}, {search.hi}] "
                         f"(ratio {lo_r} .. {hi_r})")
    L = grid_levels(search.width, eps)
    lo, hi = 0, 1 << L
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if profile.ratios(_alpha_at(mid, search, L))[i - 1] > z:
            hi = mid
        else:
            lo = mid
    return _alpha_at(hi, search, L)


def _interval(rng: AlphaInterval, L: int, a: int, b: int) -> AlphaInterval:
    g = 1 << L
    closed = b > g
    hi = rng.hi if closed else _alpha_at(b, rng, L)
    return AlphaInterval(_alpha_at(a, rng, L), hi, closed)


def child_intervals(node: ExecutionNode, instance: ClusteringInstance, z: float,
                    eps: float = DEFAULT_EPS, *, rng: Optional[AlphaInterval] = None,
                    L: Optional[int] = None):
    """Split ``node.interval`` by the next center picked with uniform ``z``.

    Returns ``[(center, AlphaInterval), ...]`` in increasing alpha. When the
    node belongs to a larger enumeration pass its root range ``rng`` and grid
    level ``L`` so boundaries land on the shared grid; otherwise the node's own
    interval defines the grid.
    """
    if node.depth >= instance.k:
        raise ValueError("node already has k centers")
    rng = rng or node.interval
    L = grid_levels(rng.width, eps) if L is None else L
    a, b = _locate(node.interval, rng, L)
    out = []
    for c, s, e in _split(instance, node.centers, z, rng, L, a, b, None)[0]:
        out.append((c, _interval(rng, L, s, e)))
    return out


def _locate(interval: AlphaInterval, rng: AlphaInterval, L: int):
    g = 1 << L
    if L == 0 or rng.width == 0:
        return 0, g + 1
    step = rng.width / g
    a = int(round((interval.lo - rng.lo) / step))
    b = g + 1 if interval.closed else int(round((interval.hi - rng.lo) / step))
    return a, b


def _split(instance, centers, z, rng, L, a, b, dmin):
    """Children of one node as ``[(center, start_idx, end_idx)]`` plus the new
    distance array and the most bisection steps spent on a boundary."""
    n = instance.n
    if len(centers) == 0:
        return [(min(int(z * n), n - 1), a, b)], None, 0
    if dmin is None:
        dmin = np.full(n, np.inf)
        for c in centers:
            kernels.update_min_dist(instance.points, dmin, int(c))
    order, ds = kernels.sorted_profile(dmin)
    lr, n_pos = kernels.log_weights(ds)
    if n_pos == 0:
        taken = set(int(c) for c in centers)
        free = [v for v in range(n) if v not in taken]
        return [(free[min(int(z * len(free)), len(free) - 1)], a, b)], dmin, 0
    starts, ranks, steps = kernels.child_splits(lr, n_pos, float(z), rng.lo, rng.hi, L, a, b)
    ends = np.append(starts[1:], b)
    kids = [(int(order[r]), int(s), int(e)) for r, s, e in zip(ranks, starts, ends)]
    return kids, dmin, steps


def _check_range(rng: AlphaInterval, eps: float):
    if rng.lo < 0:
        raise ValueError("alpha range must start at >= 0")
    if not eps > 0:
        raise ValueError("eps must be positive")


def enumerate_execution_tree(instance: ClusteringInstance, Z, alpha_range: AlphaInterval,
                             eps: float = DEFAULT_EPS, *, source: int = 0,
                             family: Optional[SeedingFamily] = None) -> ExecutionTree:
    """All leaves (full center sequences with their alpha intervals) over
    ``alpha_range``, found by depth-first traversal of the execution tree."""
    rng = AlphaInterval(alpha_range.lo, alpha_range.hi, True)
    _check_range(rng, eps)
    z = Z.z if isinstance(Z, SeedVector) else SeedVector(Z).z
    if z.shape[0] != instance.k:
        raise ValueError("seed vector length must equal k")
    if family is not None and not isinstance(family, DAlphaFamily):
        return _enumerate_generic(instance, z, rng, eps, family, source)
    L = grid_levels(rng.width, eps)
    g = 1 << L
    k = instance.k
    leaves = []
    nodes = 0
    max_steps = 0
    X = instance.points
    # stack entries: (centers, parent dmin or None, start_idx, end_idx)
    stack = [((), None, 0, g + 1)]
    while stack:
        centers, dmin, a, b = stack.pop()
        nodes += 1
        if dmin is not None and len(centers) > 0:
            dmin = dmin.copy()
            kernels.update_min_dist(X, dmin, centers[-1])
        elif len(centers) > 0:
            dmin = np.full(instance.n, np.inf)
            kernels.update_min_dist(X, dmin, centers[-1])
        kids, dmin, steps = _split(instance, centers, z[len(centers)], rng, L, a, b, dmin)
        max_steps = max(max_steps, steps)
        depth = len(centers) + 1
        for c, s, e in reversed(kids):
            seq = centers + (c,)
            if depth == k:
                leaves.append(ExecutionLeaf(seq, _interval(rng, L, s, e), s, e))
            else:
                stack.append((seq, dmin, s, e))
    leaves.sort(key=lambda lf: lf.lo_idx)
    bps = np.array([lf.interval.lo for lf in leaves[1:]])
    return ExecutionTree(leaves, BreakpointSet(bps, np.full(bps.shape[0], source, dtype=np.int64), eps),
                         rng, L, nodes, max_steps)


def _enumerate_generic(instance, z, rng, eps, family, source):
    """Same traversal through the ``SeedingFamily`` interface (pure Python)."""
    L = grid_levels(rng.width, eps)
    g = 1 << L

    def pick(centers, idx):
        return family_pick(family, instance, centers, _alpha_at(idx, rng, L), float(z[len(centers)]))

    def rank_of(centers, v):
        return int(np.flatnonzero(family.ranking(instance, centers) == v)[0])

    leaves, nodes, max_steps = [], 0, 0
    stack = [((), 0, g + 1)]
    while stack:
        centers, a, b = stack.pop()
        nodes += 1
        last = b - 1
        cur, c = a, pick(centers, a)
        r, r_last = rank_of(centers, c), rank_of(centers, pick(centers, last))
        kids = [(c, a)]
        while r > r_last:
            lo, hi, steps = cur, last, 0
            while hi - lo > 1:
                mid = (lo + hi) >> 1
                steps += 1
                if rank_of(centers, pick(centers, mid)) < r:
                    hi = mid
                else:
                    lo = mid
            max_steps = max(max_steps, steps)
            cur = hi
            c = pick(centers, cur)
            r = rank_of(centers, c)
            kids.append((c, cur))
        ends = [s for _, s in kids[1:]] + [b]
        for (c, s), e in zip(reversed(kids), reversed(ends)):
            seq = centers + (c,)
            if len(seq) == instance.k:
                leaves.append(ExecutionLeaf(seq, _interval(rng, L, s, e), s, e))
            else:
                stack.append((seq, s, e))
    leaves.sort(key=lambda lf: lf.lo_idx)
    bps = np.array([lf.interval.lo for lf in leaves[1:]])
    return ExecutionTree(leaves, BreakpointSet(bps, np.full(bps.shape[0], source, dtype=np.int64), eps),
                         rng, L, nodes, max_steps)


def count_intervals_vs_n(distribution, n_grid: Sequence[int], m: int, seed: int,
                         alpha_range: AlphaInterval = AlphaInterval(0.0, 20.0, True),
                         eps: float = DEFAULT_EPS, threads: int = 1):
    """Mean and standard error of the leaf count for each instance size ``n``.

    Returns rows ``(n, mean_intervals, stderr)``.
    """
    from dataclasses import replace

    from .parallel import ordered_map

    rows = []
    for n in n_grid:
        if n < distribution.k:
            raise ValueError(f"n={n} is below k={distribution.k}")
        dist = replace(distribution, n=int(n))

        def count(i, dist=dist):
            inst, Z = dist.sample(seed, i)
            return len(enumerate_execution_tree(inst, Z, alpha_range, eps).leaves)

        counts = np.asarray(ordered_map(count, range(m), threads), dtype=float)
        se = float(counts.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
        rows.append((int(n), float(counts.mean()), se))
    return rows


def breakpoint_histogram(bps: BreakpointSet, bins: int, alpha_range: AlphaInterval):
    """Fixed-width bins over the range: rows ``(bin_lo, bin_hi, count)``.
    The last bin is closed on the right."""
    if len(bps) == 0:
        return []
    edges = np.linspace(alpha_range.lo, alpha_range.hi, bins + 1)
    counts, _ = np.histogram(bps.alphas, bins=edges)
    return [(float(edges[j]), float(edges[j + 1]), int(counts[j])) for j in range(bins)]


def expected_count_constant(mean_count: float, n: int, k: int, alpha_range: AlphaInterval,
                            R: float) -> float:
    """Implied constant ``c`` in ``mean <= c n k ln(n) ln(alpha_hi/alpha_lo)``
    (``ln(alpha_hi ln R)`` when the range starts at 0)."""
    if alpha_range.lo > 0:
        scale = math.log(alpha_range.hi / alpha_range.lo)
    else:
        scale = math.log(max(alpha_range.hi * math.log(R), math.e))
    return mean_count / (n * k * math.log(n) * scale)
