"""Learning alpha and beta from a sample of clustering instances.

Costs are kept as integer mismatch counts per instance so that sample means are
exact rationals, rounded once. Two evaluation routes therefore agree to the
last bit whenever they see the same clusterings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._backend import kernels
from .breakpoints import (DEFAULT_EPS, AlphaInterval, BreakpointSet,
                          enumerate_execution_tree)
from .core import MAX_LOSS, ClusteringInstance
from .lloyds import LloydsConfig, centers_mismatches
from .parallel import ordered_map
from .seeding import SeedVector

DEFAULT_RANGE = AlphaInterval(0.0, 20.0, True)


def default_alpha_grid(rng: AlphaInterval = DEFAULT_RANGE, points: int = 50) -> tuple:
    return tuple(float(a) for a in np.linspace(rng.lo, rng.hi, points))


def default_beta_grid(points: int = 25) -> tuple:
    return tuple(float(b) for b in np.linspace(1.0, 10.0, points))


@dataclass(frozen=True)
class TunerConfig:
    m: int = 100
    alpha_range: AlphaInterval = DEFAULT_RANGE
    alpha_grid: tuple = field(default_factory=default_alpha_grid)
    beta_grid: tuple = field(default_factory=default_beta_grid)
    eps: float = DEFAULT_EPS
    delta: float = 0.05
    T: int = 3
    seed: int = 0
    center_rule: str = "medoid"
    full_scan: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if not self.alpha_grid or not self.beta_grid:
            raise ValueError("parameter grids must be non-empty")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    def lloyds(self, beta: float) -> LloydsConfig:
        return LloydsConfig(beta=beta, T=self.T, center_rule=self.center_rule,
                            full_scan=self.full_scan)


# -- exact sample means --------------------------------------------------------

def _weights(ns: Sequence[int]) -> tuple[np.ndarray, int]:
    """Integer weights ``L / n_i`` with ``L = lcm(n_i)``, so that
    ``sum mism_i / n_i = sum mism_i * w_i / L`` exactly."""
    L = math.lcm(*{int(n) for n in ns})
    if L * len(ns) * max(ns) >= 2 ** 53:
        raise OverflowError("instance sizes too varied for exact averaging")
    return np.asarray([L // int(n) for n in ns], dtype=np.int64), L


def mean_cost(mismatches, ns) -> float:
    """Exact mean of ``mismatches[i] / ns[i]``, rounded once."""
    w, L = _weights(ns)
    total = int(np.dot(np.asarray(mismatches, dtype=np.int64), w))
    return total / (L * len(ns))


def _stderr(mismatches, ns) -> float:
    m = len(ns)
    if m < 2:
        return 0.0
    c = np.asarray(mismatches, dtype=float) / np.asarray(ns, dtype=float)
    return float(c.std(ddof=1) / math.sqrt(m))


def empirical_cost(sample, alpha: float, beta: float, config: TunerConfig) -> tuple[float, float]:
    """Mean Hamming cost over the sample and its standard error."""
    if not sample:
        raise ValueError("empty sample")
    cfg = config.lloyds(beta)
    alphas = np.array([alpha], dtype=float)

    def one(item):
        inst, Z = item
        centers = kernels.seed_batch(inst.points, Z.z, alphas)[0]
        return centers_mismatches(inst, centers, cfg)

    mism = ordered_map(one, sample, config.threads)
    ns = [inst.n for inst, _ in sample]
    return mean_cost(mism, ns), _stderr(mism, ns)


# -- cost surfaces -------------------------------------------------------------

@dataclass
class CostSurface:
    alphas: np.ndarray
    betas: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray

    def argmin(self) -> tuple[int, int]:
        """Cell with the lowest mean; ties go to the smallest (alpha, beta)."""
        best = None
        for a in range(self.alphas.shape[0]):
            for b in range(self.betas.shape[0]):
                key = (self.mean[a, b], self.alphas[a], self.betas[b])
                if best is None or key < best[0]:
                    best = (key, (a, b))
        return best[1]

    def value(self, alpha: float, beta: float) -> float:
        a = int(np.flatnonzero(self.alphas == alpha)[0])
        b = int(np.flatnonzero(self.betas == beta)[0])
        return float(self.mean[a, b])

    def rows(self):
        for a, alpha in enumerate(self.alphas):
            for b, beta in enumerate(self.betas):
                yield float(alpha), float(beta), float(self.mean[a, b]), float(self.stderr[a, b])


def sweep_surface(sample, alpha_grid: Sequence[float], beta_grid: Sequence[float],
                  config: TunerConfig) -> CostSurface:
    """Mean Hamming cost on the full alpha x beta grid."""
    if not sample:
        raise ValueError("empty sample")
    if len(alpha_grid) == 0 or len(beta_grid) == 0:
        raise ValueError("grids must be non-empty")
    alphas = np.asarray(alpha_grid, dtype=float)
    betas = np.asarray(beta_grid, dtype=float)
    cfgs = [config.lloyds(float(b)) for b in betas]

    def one(item):
        inst, Z = item
        seeds = kernels.seed_batch(inst.points, Z.z, alphas)
        out = np.empty((alphas.shape[0], betas.shape[0]), dtype=np.int64)
        memo = {}
        for a in range(alphas.shape[0]):
            key_a = tuple(seeds[a].tolist())
            for b, cfg in enumerate(cfgs):
                key = (key_a, b)
                if key not in memo:
                    memo[key] = centers_mismatches(inst, seeds[a], cfg)
                out[a, b] = memo[key]
        return out

    mism = np.stack(ordered_map(one, sample, config.threads))
    ns = [inst.n for inst, _ in sample]
    mean = np.empty(mism.shape[1:])
    se = np.empty(mism.shape[1:])
    for a in range(alphas.shape[0]):
        for b in range(betas.shape[0]):
            mean[a, b] = mean_cost(mism[:, a, b], ns)
            se[a, b] = _stderr(mism[:, a, b], ns)
    return CostSurface(alphas, betas, mean, se)


# -- breakpoint-based alpha tuning ----------------------------------------------

@dataclass
class StepCost:
    """Piecewise-constant sample cost over an alpha range.

    Piece ``j`` covers ``[starts[j], starts[j+1])`` (the last one closed at
    ``range.hi``) and has exact mean ``totals[j] / scale``.
    """

    starts: np.ndarray
    totals: np.ndarray
    scale: int
    range: AlphaInterval

    def __call__(self, alpha):
        a = np.asarray(alpha, dtype=float)
        j = np.searchsorted(self.starts, a, side="right") - 1
        j = np.clip(j, 0, self.starts.shape[0] - 1)
        return self.totals[j] / self.scale

    @property
    def midpoints(self) -> np.ndarray:
        ends = np.append(self.starts[1:], self.range.hi)
        return 0.5 * (self.starts + ends)


@dataclass
class InstanceLeaves:
    """One sample element's leaves: left endpoints and mismatch counts."""

    starts: np.ndarray
    mismatches: np.ndarray
    n: int
    breakpoints: BreakpointSet
    midpoints: np.ndarray


def instance_leaves(inst: ClusteringInstance, Z: SeedVector, rng: AlphaInterval, eps: float,
                    cfg: LloydsConfig, source: int = 0) -> InstanceLeaves:
    tree = enumerate_execution_tree(inst, Z, rng, eps, source=source)
    memo = {}
    mism = np.empty(len(tree.leaves), dtype=np.int64)
    for j, leaf in enumerate(tree.leaves):
        if leaf.centers not in memo:
            memo[leaf.centers] = centers_mismatches(inst, leaf.centers, cfg)
        mism[j] = memo[leaf.centers]
    starts = np.array([lf.interval.lo for lf in tree.leaves])
    mids = np.array([lf.interval.midpoint for lf in tree.leaves])
    return InstanceLeaves(starts, mism, inst.n, tree.breakpoints, mids)


def step_cost(leaves: Sequence[InstanceLeaves], rng: AlphaInterval) -> StepCost:
    """Sum the per-instance step functions into the exact sample mean."""
    w, L = _weights([lv.n for lv in leaves])
    pos = [np.array([rng.lo])]
    delta = [np.array([sum(int(lv.mismatches[0]) * int(wi) for lv, wi in zip(leaves, w))])]
    for lv, wi in zip(leaves, w):
        if lv.starts.shape[0] > 1:
            pos.append(lv.starts[1:])
            delta.append(np.diff(lv.mismatches) * wi)
    pos = np.concatenate(pos)
    delta = np.concatenate(delta).astype(np.int64)
    order = np.argsort(pos, kind="stable")
    pos, delta = pos[order], delta[order]
    uniq, first = np.unique(pos, return_index=True)
    summed = np.add.reduceat(delta, first)
    return StepCost(uniq, np.cumsum(summed), L * len(leaves), rng)


@dataclass
class TuneResult:
    alpha: float
    cost: float
    candidates: np.ndarray
    costs: np.ndarray
    evaluations: int
    step: StepCost
    breakpoints: BreakpointSet


def tune_alpha(sample, beta: float, alpha_range: AlphaInterval = DEFAULT_RANGE,
               eps: float = DEFAULT_EPS, config: Optional[TunerConfig] = None,
               extra_candidates: Sequence[float] = ()) -> TuneResult:
    """Empirically optimal alpha for fixed beta, without discretizing alpha.

    Each sample element's execution tree gives its exact cost as a step
    function of alpha. Candidates are the deduplicated breakpoints, every leaf
    midpoint, both range ends and the midpoint of every piece of the merged
    step function; the last group alone already attains the sample minimum.
    Ties go to the smallest alpha. ``evaluations`` counts the Lloyd's runs.
    """
    if not sample:
        raise ValueError("empty sample")
    config = config or TunerConfig()
    rng = AlphaInterval(alpha_range.lo, alpha_range.hi, True)
    cfg = config.lloyds(beta)
    items = list(enumerate(sample))
    leaves = ordered_map(lambda it: instance_leaves(it[1][0], it[1][1], rng, eps, cfg, it[0]),
                         items, config.threads)
    step = step_cost(leaves, rng)
    bps = BreakpointSet.merge([lv.breakpoints for lv in leaves], eps)
    cands = np.unique(np.concatenate([
        bps.alphas, *[lv.midpoints for lv in leaves], [rng.lo, rng.hi], step.midpoints,
        np.asarray(extra_candidates, dtype=float)]))
    cands = cands[(cands >= rng.lo) & (cands <= rng.hi)]
    costs = step(cands)
    j = int(np.argmin(costs))  # first minimum = smallest alpha
    evaluations = int(sum(lv.starts.shape[0] for lv in leaves))
    return TuneResult(float(cands[j]), float(costs[j]), cands, costs, evaluations, step, bps)


@dataclass
class BaselineResult:
    alpha: float
    cost: float
    evaluations: int
    alphas: np.ndarray
    costs: np.ndarray


def discretized_baseline(sample, beta: float, alpha_range: AlphaInterval, step: float,
                         config: Optional[TunerConfig] = None) -> BaselineResult:
    """Best alpha on the uniform grid ``lo, lo+step, ...`` (ties: smallest).

    ``evaluations`` is the number of grid points, ``floor(width/step) + 1``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    config = config or TunerConfig()
    count = int(math.floor(alpha_range.width / step * (1 + 1e-12))) + 1
    alphas = np.minimum(alpha_range.lo + step * np.arange(count), alpha_range.hi)
    cfg = config.lloyds(beta)

    def one(item):
        inst, Z = item
        seeds = kernels.seed_batch(inst.points, Z.z, alphas)
        uniq, inv = np.unique(seeds, axis=0, return_inverse=True)
        vals = np.array([centers_mismatches(inst, u, cfg) for u in uniq], dtype=np.int64)
        return vals[np.ravel(inv)]

    mism = np.stack(ordered_map(one, sample, config.threads))
    w, L = _weights([inst.n for inst, _ in sample])
    costs = (mism * w[:, None]).sum(axis=0) / (L * len(sample))
    j = int(np.argmin(costs))
    return BaselineResult(float(alphas[j]), float(costs[j]), count, alphas, costs)


# -- generalization -------------------------------------------------------------

def suggested_m(eps: float, delta: float, n: int, k: int, T: int,
                alpha_range: AlphaInterval, R: Optional[float] = None, H: float = MAX_LOSS) -> int:
    """Advisory sample size ``(H/eps)^2 (min(T,k) ln n + ln k + ln(1/delta) + ln ln(.))``
    with the hidden constant set to 1. The last term is ``ln ln(hi/lo)``, or
    ``ln ln(hi ln R)`` for ranges starting at 0."""
    if alpha_range.lo > 0:
        inner = math.log(alpha_range.hi / alpha_range.lo)
    else:
        if R is None:
            raise ValueError("ranges starting at 0 need the distance ratio R")
        inner = math.log(max(alpha_range.hi * math.log(R), 1.0))
    lnln = math.log(inner) if inner > 1 else 0.0
    body = min(T, k) * math.log(n) + math.log(k) + math.log(1 / delta) + lnln
    return int(math.ceil((H / eps) ** 2 * body))


@dataclass
class TrainTestReport:
    alpha: float
    train_cost: float
    test_cost: float
    candidates: np.ndarray
    train_costs: np.ndarray
    test_costs: np.ndarray
    max_gap: float
    grid_alphas: np.ndarray
    grid_train: np.ndarray
    grid_test: np.ndarray
    grid_gap: float
    flagged: bool
    suggested_m: Optional[int] = None

    def summary(self) -> dict:
        return {"alpha": self.alpha, "train_cost": self.train_cost, "test_cost": self.test_cost,
                "max_gap": self.max_gap, "grid_gap": self.grid_gap, "flagged": self.flagged,
                "candidates": int(self.candidates.shape[0]), "suggested_m": self.suggested_m}


def train_test_report(train, test, beta: float, config: TunerConfig,
                      gap_threshold: float = 0.05) -> TrainTestReport:
    """Tune alpha on ``train`` and score every candidate on ``test`` too.

    The two samples may come from different distributions (a transfer study).
    ``flagged`` marks a max per-candidate gap above ``gap_threshold``.
    """
    if not train or not test:
        raise ValueError("train and test samples must be non-empty")
    rng = AlphaInterval(config.alpha_range.lo, config.alpha_range.hi, True)
    res = tune_alpha(train, beta, rng, config.eps, config)
    cfg = config.lloyds(beta)
    test_leaves = ordered_map(
        lambda it: instance_leaves(it[1][0], it[1][1], rng, config.eps, cfg, it[0]),
        list(enumerate(test)), config.threads)
    test_step = step_cost(test_leaves, rng)
    test_costs = test_step(res.candidates)
    grid = np.asarray(config.alpha_grid, dtype=float)
    grid = grid[(grid >= rng.lo) & (grid <= rng.hi)]
    g_train, g_test = res.step(grid), test_step(grid)
    gap = float(np.max(np.abs(res.costs - test_costs)))
    grid_gap = float(np.max(np.abs(g_train - g_test))) if grid.size else 0.0
    inst0 = train[0][0]
    try:
        from .core import distance_stats
        R = distance_stats(inst0).R if inst0.n <= 2048 else None
        sm = suggested_m(0.01, config.delta, max(i.n for i, _ in train), inst0.k, config.T, rng, R)
    except (ValueError, OverflowError):
        sm = None
    return TrainTestReport(res.alpha, res.cost, float(test_step(res.alpha)), res.candidates,
                           res.costs, test_costs, gap, grid, g_train, g_test, grid_gap,
                           gap > gap_threshold, sm)


def split_sample(distribution, m: int, seed: int):
    """Draw ``m`` samples and split them evenly: first half trains, rest tests."""
    from .datagen import draw_sample

    if m < 2:
        raise ValueError("train/test split needs m >= 2")
    sample = draw_sample(distribution, m, seed)
    return sample[: m // 2], sample[m // 2:]


def transfer_report(train_distribution, test_distribution, m: int, seed: int, beta: float,
                    config: TunerConfig) -> TrainTestReport:
    """Tune on ``m`` draws from one distribution, score on ``m`` from another.

    Test draws use sample indices ``m..2m-1`` so the two halves never share
    randomness even when the distributions coincide.
    """
    from .datagen import draw_sample

    train = draw_sample(train_distribution, m, seed)
    test = draw_sample(test_distribution, m, seed, start=m)
    return train_test_report(train, test, beta, config)
