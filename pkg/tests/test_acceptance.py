"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single ``criterion N PASS|FAIL`` line (repeated in the
session summary) and then asserts it. Sample sizes are the desk-scale ones:
m=2,000 for the Gaussian-grid surface, m=200 for the interval counts.
"""

import itertools
import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats
from scipy.stats import qmc

from conftest import random_instance
from oracles import chain_probabilities, tv_distance

from lloydspp import (AlphaInterval, DistributionConfig, LloydsConfig,
                      TunerConfig, discretized_baseline, draw_sample, empirical_cost,
                      enumerate_execution_tree, lloyds_iterate, optimal_matching, seed,
                      sweep_surface, train_test_report, tune_alpha)
from lloydspp._backend import kernels
from lloydspp.breakpoints import count_intervals_vs_n, expected_count_constant
from lloydspp.core import distance_stats, hamming_mismatches
from lloydspp.datagen import STREAM_Z, stream_uniforms
from lloydspp.seeding import SortedDistanceProfile
from lloydspp.tuner import DEFAULT_RANGE, default_alpha_grid

pytestmark = pytest.mark.slow

GAUSSIAN = DistributionConfig("gaussian_grid", k=4, N=120)
GAUSSIAN_SEED = 0
GAUSSIAN_M = 2000


def _seq_counts(inst, Z):
    counts = {}
    for z in Z:
        key = seed(inst, z, 2.0)
        counts[key] = counts.get(key, 0) + 1
    return counts


def _tv(counts, exact, draws):
    return tv_distance({key: c / draws for key, c in counts.items()}, exact)


def test_c1_sampling_equivalence(verdict):
    n, k, draws = 12, 3, 200_000
    inst = random_instance(np.random.default_rng(2024), n, k)
    exact = chain_probabilities(inst.points, k, 2.0)

    # Low-discrepancy uniforms: the deterministic runs see an even spread of Z.
    halton = qmc.Halton(d=k, scramble=True, seed=7).random(draws)
    tv_halton = _tv(_seq_counts(inst, halton), exact, draws)

    # Independent uniforms from the package stream, judged against the
    # sampling noise a perfect sampler would show at the same draw count.
    iid = stream_uniforms(3, 0, STREAM_Z, k * draws).reshape(draws, k)
    tv_iid = _tv(_seq_counts(inst, iid), exact, draws)
    keys = list(exact)
    p = np.array([exact[key] for key in keys])
    sims = np.random.default_rng(0).multinomial(draws, p / p.sum(), size=400) / draws
    null99 = float(np.quantile(0.5 * np.abs(sims - p).sum(axis=1), 0.99))

    ok = tv_halton <= 0.01 and tv_iid <= null99
    verdict(1, "sampling equivalence", ok,
            f"TV(halton)={tv_halton:.4f} <= 0.01; TV(iid)={tv_iid:.4f} <= null 99% {null99:.4f}")


def test_c2_breakpoint_enumeration(verdict):
    rng = np.random.default_rng(31)
    eps = 1e-7
    span = AlphaInterval(0.5, 20.0, True)
    grid = np.linspace(span.lo, span.hi, 100_000)
    mismatched = skipped = 0
    for _ in range(20):
        inst = random_instance(rng, 30, 3)
        z = rng.random(3)
        tree = enumerate_execution_tree(inst, z, span, eps)
        bounds = tree.bounds
        centers = np.array([lf.centers for lf in tree.leaves])
        direct = kernels.seed_batch(inst.points, z, grid)
        stored = centers[np.clip(np.searchsorted(bounds, grid, side="right") - 1, 0, None)]
        pad = np.concatenate([[-np.inf], bounds[1:], [np.inf]])
        j = np.searchsorted(bounds[1:], grid)
        near = np.minimum(grid - pad[j], pad[j + 1] - grid) <= eps
        bad = np.any(direct != stored, axis=1)
        mismatched += int(np.count_nonzero(bad & ~near))
        skipped += int(np.count_nonzero(near))
    verdict(2, "breakpoint enumeration", mismatched == 0,
            f"{mismatched} mismatches over 20 x 100000 alphas ({skipped} within eps skipped)")


def _random_profile(rng):
    n = int(rng.integers(2, 60))
    d = np.sort(np.exp(rng.normal(scale=rng.uniform(0.1, 3.0), size=n)))[::-1]
    if rng.random() < 0.2:
        d[rng.integers(0, n)] = d[0]  # ties with the maximum
    d = np.ascontiguousarray(np.sort(d)[::-1])
    return SortedDistanceProfile(np.arange(n), d, np.zeros(n, dtype=bool))


def test_c3_partial_sum_properties(verdict):
    rng = np.random.default_rng(5)
    grid = np.linspace(0.0, 50.0, 501)
    h = 1e-5
    fd_alphas = np.linspace(0.1, 30.0, 300)
    worst_mono = worst_cross = worst_slope = -np.inf
    for _ in range(500):
        prof = _random_profile(rng)
        R = np.array([prof.ratios(a) for a in grid])
        worst_mono = max(worst_mono, float(np.max(R[:-1] - R[1:])))
        worst_cross = max(worst_cross, float(np.max(R[:, :-1] - R[:, 1:])))
        n = prof.n
        spread = math.log(prof.d[0] / prof.d[-1])
        for a in fd_alphas:
            slope = (prof.ratios(a + h) - prof.ratios(a - h)) / (2 * h)
            bound = min(2 * math.log(n) / a, spread) + 1e-3
            worst_slope = max(worst_slope, float(np.max(slope)) - bound)
    ok = worst_mono <= 1e-12 and worst_cross <= 1e-12 and worst_slope <= 0
    verdict(3, "partial-sum monotonicity and slope", ok,
            f"max decrease in alpha {worst_mono:.2e}, max crossing {worst_cross:.2e}, "
            f"max slope excess {worst_slope:.2e}")


def test_c4_farthest_first_limit(verdict):
    rng = np.random.default_rng(17)
    draws, delta = 2000, 0.05
    worst = 1.0
    pvals = []
    for trial in range(5):
        n, k = int(rng.integers(8, 20)), int(rng.integers(2, 5))
        inst = random_instance(rng, n, k)
        s = distance_stats(inst).s
        alpha = 1.01 * math.log(n * k / delta) / math.log(s)
        Z = stream_uniforms(41, trial, STREAM_Z, k * draws).reshape(draws, k)
        agree = sum(seed(inst, z, alpha) == seed(inst, z, np.inf) for z in Z)
        worst = min(worst, agree / draws)
        pvals.append(stats.binomtest(agree, draws, 0.95, alternative="less").pvalue)
    ok = worst >= 0.95 and min(pvals) >= 0.01
    verdict(4, "farthest-first limit", ok,
            f"lowest agreement {worst:.4f} >= 0.95; smallest one-sided p {min(pvals):.3f} >= 0.01")


def test_c5_hungarian_oracle(verdict):
    rng = np.random.default_rng(8)
    wrong = 0
    for _ in range(200):
        k = int(rng.integers(1, 7))
        W = rng.integers(0, 6, size=(k, k))
        perm = optimal_matching(W)
        got = int(sum(W[i, perm[i]] for i in range(k)))
        best = max(sum(W[i, p[i]] for i in range(k)) for p in itertools.permutations(range(k)))
        wrong += sorted(perm.tolist()) != list(range(k)) or got != best
    verdict(5, "Hungarian vs exhaustive matching", wrong == 0, f"{wrong} of 200 matrices differ")


@pytest.fixture(scope="module")
def gaussian_sample():
    return draw_sample(GAUSSIAN, GAUSSIAN_M, GAUSSIAN_SEED)


@pytest.fixture(scope="module")
def mean_rule():
    return TunerConfig(m=GAUSSIAN_M, beta_grid=(2.0,), center_rule="mean", T=3,
                       seed=GAUSSIAN_SEED)


@pytest.fixture(scope="module")
def gaussian_surface(gaussian_sample, mean_rule):
    return sweep_surface(gaussian_sample, default_alpha_grid(), (2.0,), mean_rule)


def test_c6_gaussian_grid_gap(verdict, gaussian_sample, mean_rule, gaussian_surface):
    kpp, _ = empirical_cost(gaussian_sample, 2.0, 2.0, mean_rule)
    best = float(gaussian_surface.mean.min())
    ratio = kpp / best if best > 0 else math.inf
    ok = 0.04 <= kpp <= 0.10 and best <= 0.03 and ratio >= 2
    verdict(6, "Gaussian-grid error gap", ok,
            f"cost(2,2)={kpp:.4f} in [0.04,0.10]; best={best:.4f} <= 0.03; ratio={ratio:.2f} >= 2")


def test_c7_interval_count_band(verdict):
    dist = DistributionConfig("gaussian_grid", k=4, N=120)
    (n, mean, se), = count_intervals_vs_n(dist, [480], m=200, seed=1)
    ok = 715 <= mean <= 1192
    verdict(7, "interval count at n=480", ok, f"mean leaves {mean:.1f} +- {se:.1f} in [715, 1192]")


def test_c7_interval_count_scaling(verdict):
    dist = DistributionConfig("gaussian_grid", k=4, N=120)
    n_grid = list(range(50, 1001, 50))
    rows = count_intervals_vs_n(dist, n_grid, m=200, seed=2)
    means = np.array([r[1] for r in rows])
    monotone = bool(np.all(np.diff(means) > 0))
    ratio = means[n_grid.index(1000)] / means[n_grid.index(100)]
    # implied constant in the n k ln(n) growth, using the largest R seen at n=1000
    R = max(distance_stats(replace(dist, n=1000).instance(2, i)).R for i in range(20))
    c = max(expected_count_constant(mean, n, dist.k, DEFAULT_RANGE, R)
            for n, mean, _ in rows)
    ok = monotone and 5 <= ratio <= 20 and c <= 64
    verdict(7, "interval count scaling", ok,
            f"monotone over n=50..1000: {monotone}; mean(1000)/mean(100)={ratio:.2f} in [5, 20]; "
            f"implied constant {c:.3f} <= 64")


def test_c8_generalization_gap(verdict, gaussian_sample, mean_rule, gaussian_surface):
    train, test = gaussian_sample[: GAUSSIAN_M // 2], gaussian_sample[GAUSSIAN_M // 2:]
    report = train_test_report(train, test, 2.0, mean_rule)
    near2 = int(np.argmin(np.abs(report.candidates - 2.0)))
    # the step functions from the trees must reproduce the direct sweep
    pooled = 0.5 * (report.grid_train + report.grid_test)
    agree = float(np.max(np.abs(pooled - gaussian_surface.mean[:, 0])))
    ok = (report.max_gap <= 0.03 and report.train_cost <= report.train_costs[near2]
          and agree <= 1e-12)
    verdict(8, "generalization gap", ok,
            f"max |train-test| over {report.candidates.size} candidates {report.max_gap:.4f} "
            f"<= 0.03; chosen alpha={report.alpha:.4f} train {report.train_cost:.4f} <= "
            f"{report.train_costs[near2]:.4f} near alpha=2; tree vs sweep {agree:.1e}")


def _dense_minimum(sample, grid, cfg):
    total = np.zeros(grid.shape[0], dtype=np.int64)
    for inst, Z in sample:
        seeds = kernels.seed_batch(inst.points, Z.z, grid)
        uniq, inv = np.unique(seeds, axis=0, return_inverse=True)
        vals = []
        for u in uniq:
            clustering, _ = lloyds_iterate(inst, u, cfg)
            vals.append(hamming_mismatches(clustering.assignment, inst.target, inst.k))
        total += np.asarray(vals, dtype=np.int64)[np.ravel(inv)]
    n = sample[0][0].n
    return float(total.min()) / (n * len(sample))


def test_c9_tuner_dominance(verdict):
    dist = DistributionConfig("gaussian_grid", k=3, n=30)
    config = TunerConfig(m=20)
    cfg = config.lloyds(2.0)
    steps = (1.0, 0.1, 0.01, 1e-3, 1e-4)
    dense = np.linspace(DEFAULT_RANGE.lo, DEFAULT_RANGE.hi, 100_000)
    failures = []
    evals = base_evals = 0
    for s in range(3):
        sample = draw_sample(dist, 20, 100 + s)
        res = tune_alpha(sample, 2.0, DEFAULT_RANGE, config=config)
        for step in steps:
            base = discretized_baseline(sample, 2.0, DEFAULT_RANGE, step, config)
            if res.cost > base.cost:
                failures.append(f"set {s} step {step}: {res.cost} > {base.cost}")
            if step == 1e-4:
                evals += res.evaluations
                base_evals += base.evaluations
                if res.evaluations >= base.evaluations:
                    failures.append(f"set {s}: {res.evaluations} evaluations")
        dense_min = _dense_minimum(sample, dense, cfg)
        if res.cost != dense_min:
            failures.append(f"set {s}: tuned {res.cost} != dense {dense_min}")
    verdict(9, "tuner dominance", not failures,
            "; ".join(failures) or f"3 sets x {len(steps)} steps; equals dense minimum; "
            f"evaluations {evals} < {base_evals}")


def test_c10_beta_piecewise_constant(verdict):
    rng = np.random.default_rng(23)
    n, k, T = 14, 2, 2
    betas = np.linspace(1.0, 10.0, 10_000)
    limit = min(n ** (3 * T), n ** (k + 3))
    worst_distinct, broken = 0, 0
    for _ in range(10):
        inst = random_instance(rng, n, k)
        centers = seed(inst, rng.random(k), 2.0)

        def run(beta):
            clustering, _ = lloyds_iterate(inst, centers, LloydsConfig(beta=float(beta), T=T))
            return clustering.key()

        keys = [run(b) for b in betas]
        worst_distinct = max(worst_distinct, len(set(keys)))
        for j in range(len(betas) - 1):
            if keys[j] == keys[j + 1] and run(0.5 * (betas[j] + betas[j + 1])) != keys[j]:
                broken += 1
    ok = worst_distinct <= limit and broken == 0
    verdict(10, "Lloyd's piecewise constant in beta", ok,
            f"at most {worst_distinct} distinct outputs <= {limit}; {broken} runs not constant")
