from fractions import Fraction

import numpy as np
import pytest

from lloydspp.breakpoints import AlphaInterval
from lloydspp.core import ClusteringInstance
from lloydspp.datagen import DistributionConfig, draw_sample
from lloydspp.lloyds import LloydsConfig, clus_cost
from lloydspp.seeding import SeedVector
from lloydspp.tuner import (TunerConfig, discretized_baseline, empirical_cost, mean_cost,
                            split_sample, suggested_m, sweep_surface, train_test_report,
                            transfer_report, tune_alpha)

from conftest import random_instance

TOY = AlphaInterval(0.0, 20.0, True)


def toy_sample(rng, m=20, n=30, k=3):
    return [(random_instance(rng, n, k), SeedVector(rng.random(k))) for _ in range(m)]


def separable_sample(m=3):
    X = np.array([0.0, 0.3, 0.6, 50.0, 50.3, 50.6])
    inst = ClusteringInstance(X, 2, [0, 0, 0, 1, 1, 1])
    return [(inst, SeedVector([0.1 + 0.3 * j, 0.5])) for j in range(m)]


class TestConfig:
    def test_defaults(self):
        cfg = TunerConfig()
        assert len(cfg.alpha_grid) == 50 and cfg.alpha_grid[-1] == 20.0
        assert len(cfg.beta_grid) == 25 and cfg.beta_grid[0] == 1.0 and cfg.beta_grid[-1] == 10.0
        assert cfg.T == 3

    @pytest.mark.parametrize("kw", [{"m": 0}, {"alpha_grid": ()}, {"beta_grid": ()}, {"eps": 0.0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TunerConfig(**kw)


class TestMeans:
    def test_exact_rational_mean(self):
        assert mean_cost([1, 1, 1], [3, 3, 3]) == 1 / 3
        # correctly rounded, unlike the naive float expression
        exact = (Fraction(1, 4) + Fraction(2, 6)) / 2
        assert mean_cost([1, 2], [4, 6]) == float(exact)
        assert mean_cost([3, 0, 7], [7, 11, 13]) == float((Fraction(3, 7) + Fraction(7, 13)) / 3)

    def test_separable_is_zero(self):
        mean, se = empirical_cost(separable_sample(), 2.0, 2.0, TunerConfig())
        assert mean == 0.0 and se == 0.0

    def test_single_element(self, rng):
        s = toy_sample(rng, m=1, n=15, k=2)
        mean, se = empirical_cost(s, 2.0, 2.0, TunerConfig())
        assert mean == pytest.approx(clus_cost(s[0][0], s[0][1], 2.0, LloydsConfig()))
        assert se == 0.0

    def test_recomposition(self, rng):
        s = toy_sample(rng, m=5, n=15, k=2)
        mean, _ = empirical_cost(s, 3.0, 1.5, TunerConfig())
        direct = np.mean([clus_cost(i, Z, 3.0, LloydsConfig(beta=1.5)) for i, Z in s])
        assert mean == pytest.approx(direct, abs=1e-15)

    def test_empty(self):
        with pytest.raises(ValueError):
            empirical_cost([], 2.0, 2.0, TunerConfig())


class TestSurface:
    def test_single_cell(self, rng):
        s = toy_sample(rng, m=4, n=15, k=2)
        cfg = TunerConfig()
        surf = sweep_surface(s, [2.0], [2.0], cfg)
        assert surf.mean[0, 0] == empirical_cost(s, 2.0, 2.0, cfg)[0]

    def test_grid_order_irrelevant(self, rng):
        s = toy_sample(rng, m=4, n=15, k=2)
        cfg = TunerConfig()
        a = sweep_surface(s, [0.0, 2.0, 9.0], [1.0, 3.0], cfg)
        b = sweep_surface(s, [9.0, 0.0, 2.0], [3.0, 1.0], cfg)
        for al in (0.0, 2.0, 9.0):
            for be in (1.0, 3.0):
                assert a.value(al, be) == b.value(al, be)

    def test_reproducible_and_bounded(self, rng):
        s = toy_sample(rng, m=3, n=15, k=2)
        a = sweep_surface(s, [0.0, 5.0], [1.0, 2.0], TunerConfig())
        b = sweep_surface(s, [0.0, 5.0], [1.0, 2.0], TunerConfig())
        np.testing.assert_array_equal(a.mean, b.mean)
        assert np.all((a.mean >= 0) & (a.mean <= 1))

    def test_argmin_ties_smallest(self):
        s = separable_sample()
        surf = sweep_surface(s, [3.0, 1.0], [2.0, 1.0], TunerConfig())
        a, b = surf.argmin()
        assert surf.alphas[a] == 1.0 and surf.betas[b] == 1.0

    def test_threads_do_not_change_results(self, rng):
        s = toy_sample(rng, m=6, n=15, k=2)
        a = sweep_surface(s, [0.0, 4.0], [1.0, 2.0], TunerConfig(threads=1))
        b = sweep_surface(s, [0.0, 4.0], [1.0, 2.0], TunerConfig(threads=3))
        np.testing.assert_array_equal(a.mean, b.mean)


class TestTuneAlpha:
    def test_k_one_returns_left_end(self, rng):
        s = [(random_instance(rng, 10, 1), SeedVector([0.4])) for _ in range(3)]
        res = tune_alpha(s, 2.0, AlphaInterval(1.0, 5.0))
        assert res.alpha == 1.0 and res.cost == 0.0

    def test_dominates_grid(self, rng):
        s = toy_sample(rng)
        res = tune_alpha(s, 2.0, TOY)
        grid = discretized_baseline(s, 2.0, TOY, 0.01)
        assert res.cost <= grid.cost
        assert res.evaluations < grid.evaluations

    def test_matches_dense_grid_minimum(self, rng):
        s = toy_sample(rng, m=6)
        res = tune_alpha(s, 2.0, TOY)
        dense = np.linspace(0, 20, 20001)
        vals = res.step(dense)
        assert res.cost == vals.min()
        # the step function really is the sample cost
        for a in (0.0, 1.3, 2.0, 7.7, 20.0):
            assert res.step(a) == pytest.approx(empirical_cost(s, a, 2.0, TunerConfig())[0],
                                                abs=1e-15)

    def test_chosen_cost_is_candidate_minimum(self, rng):
        res = tune_alpha(toy_sample(rng, m=5), 2.0, TOY)
        assert res.cost == res.costs.min()
        assert res.alpha == res.candidates[np.flatnonzero(res.costs == res.cost)[0]]

    def test_more_candidates_never_hurt(self, rng):
        s = toy_sample(rng, m=5)
        a = tune_alpha(s, 2.0, TOY)
        b = tune_alpha(s, 2.0, TOY, extra_candidates=np.linspace(0, 20, 33))
        assert b.cost <= a.cost

    def test_mean_rule(self, rng):
        s = toy_sample(rng, m=5)
        res = tune_alpha(s, 2.0, TOY, config=TunerConfig(center_rule="mean"))
        two = empirical_cost(s, 2.0, 2.0, TunerConfig(center_rule="mean"))[0]
        assert res.cost <= two


class TestBaseline:
    def test_width_step(self, rng):
        b = discretized_baseline(toy_sample(rng, m=2), 2.0, TOY, 20.0)
        assert b.evaluations == 2 and b.alphas.tolist() == [0.0, 20.0]

    @pytest.mark.parametrize("step,count", [(0.5, 41), (0.3, 67), (7.0, 3)])
    def test_count(self, rng, step, count):
        b = discretized_baseline(toy_sample(rng, m=2), 2.0, TOY, step)
        assert b.evaluations == count == b.alphas.shape[0]

    def test_matches_empirical_cost(self, rng):
        s = toy_sample(rng, m=3)
        b = discretized_baseline(s, 2.0, TOY, 5.0)
        for a, c in zip(b.alphas, b.costs):
            assert c == empirical_cost(s, a, 2.0, TunerConfig())[0]

    def test_bad_step(self, rng):
        with pytest.raises(ValueError):
            discretized_baseline(toy_sample(rng, m=1), 2.0, TOY, 0.0)


class TestGeneralization:
    def test_identical_halves_no_gap(self):
        s = separable_sample(4)
        rep = train_test_report(s, s, 2.0, TunerConfig())
        assert rep.max_gap == 0.0 and not rep.flagged

    def test_easy_vs_hard_is_flagged(self, rng):
        easy = separable_sample(4)
        X = np.concatenate([rng.normal(size=(10, 2)), rng.normal(size=(10, 2))])
        hard = [(ClusteringInstance(X, 2, np.arange(20) % 2), SeedVector(rng.random(2)))
                for _ in range(4)]
        rep = train_test_report(easy, hard, 2.0, TunerConfig())
        assert rep.flagged and rep.max_gap > 0.05

    def test_split_is_deterministic(self):
        dist = DistributionConfig(k=2, N=5)
        a, b = split_sample(dist, 5, 3)
        c, d = split_sample(dist, 5, 3)
        assert len(a) == 2 and len(b) == 3
        np.testing.assert_array_equal(a[0][0].points, c[0][0].points)

    def test_transfer(self):
        cfg = TunerConfig(alpha_range=AlphaInterval(0, 10, True))
        rep = transfer_report(DistributionConfig(k=2, N=8), DistributionConfig(k=3, N=6), 3, 0,
                              2.0, cfg)
        assert 0.0 <= rep.test_cost <= 1.0
        assert rep.candidates.shape == rep.test_costs.shape

    def test_suggested_m(self):
        m1 = suggested_m(0.05, 0.05, 100, 4, 3, AlphaInterval(1, 20))
        m2 = suggested_m(0.1, 0.05, 100, 4, 3, AlphaInterval(1, 20))
        assert m1 > m2 > 0
        with pytest.raises(ValueError):
            suggested_m(0.1, 0.05, 100, 4, 3, AlphaInterval(0, 20))
