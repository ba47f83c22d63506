import math

import numpy as np
import pytest
from scipy.stats import norm

from shardmix import Gaussian, MixingDistribution, OverlapSpec
from shardmix.simulate import generate, generate_report, max_overlap, pairwise_overlap


class TestPairwiseOverlap:
    def test_identical_components_do_not_overlap(self):
        # strict inequality never fires when both sides agree exactly
        g = Gaussian(0.0, 1.0)
        G = MixingDistribution([0.5, 0.5], [g, g])
        assert pairwise_overlap(G, 0, 1, mc_samples=10_000, seed=0) == (0.0, 0.0)

    def test_unit_separation_matches_gaussian_tail(self):
        # oracle: P(X > 0 | X ~ N(-1, 1)) = Phi(-1)
        G = MixingDistribution(
            [0.5, 0.5], [Gaussian(-1.0, 1.0), Gaussian(1.0, 1.0)]
        )
        n = 100_000
        o_ji, o_ij = pairwise_overlap(G, 0, 1, mc_samples=n, seed=1)
        expected = norm.cdf(-1.0)
        se = math.sqrt(expected * (1 - expected) / n)
        assert abs(o_ji - expected) <= 3 * se
        assert abs(o_ij - expected) <= 3 * se

    def test_distant_means_have_negligible_overlap(self):
        G = MixingDistribution(
            [0.5, 0.5], [Gaussian(0.0, 1.0), Gaussian(10.0, 1.0)]
        )
        o_ji, o_ij = pairwise_overlap(G, 0, 1, mc_samples=100_000, seed=2)
        assert o_ji <= 1e-4
        assert o_ij <= 1e-4

    def test_rejects_equal_indices(self):
        G = MixingDistribution([1.0], [Gaussian(0.0, 1.0)])
        with pytest.raises(ValueError):
            pairwise_overlap(G, 0, 0)

    def test_deterministic(self):
        G = MixingDistribution(
            [0.4, 0.6], [Gaussian(-1.0, 1.0), Gaussian(0.5, 2.0)]
        )
        a = pairwise_overlap(G, 0, 1, mc_samples=5000, seed=7)
        b = pairwise_overlap(G, 0, 1, mc_samples=5000, seed=7)
        assert a == b


class TestGenerate:
    def test_hits_targets(self):
        for target in (0.01, 0.05, 0.10):
            spec = OverlapSpec(d=2, K=3, max_omega=target, seed=42)
            report = generate_report(spec)
            assert abs(report.achieved - target) <= 0.05 * target
            # re-measuring the returned model reproduces the achieved value
            from shardmix.rng import derive

            measured = max_overlap(
                report.model, spec.mc_samples, derive(spec.seed, "simgen-mc")
            )
            assert measured == report.achieved

    def test_weights_respect_floor(self):
        model = generate(OverlapSpec(d=2, K=4, max_omega=0.05, seed=3, mc_samples=20_000))
        assert np.all(model.weights >= 1.0 / (2 * 4) - 1e-12)

    def test_deterministic(self):
        spec = OverlapSpec(d=2, K=3, max_omega=0.05, seed=5, mc_samples=20_000)
        assert generate(spec) == generate(spec)

    def test_trace_monotone_in_scale(self):
        report = generate_report(OverlapSpec(d=2, K=3, max_omega=0.05, seed=6, mc_samples=50_000))
        by_scale = sorted(report.trace)
        values = [v for _, v in by_scale]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))

    def test_generated_covariances_are_spd(self):
        model = generate(OverlapSpec(d=3, K=3, max_omega=0.05, seed=8, mc_samples=20_000))
        for g in model.components:
            assert np.array_equal(g.cov, g.cov.T)
            assert np.linalg.eigvalsh(g.cov)[0] > 0.0

    def test_unreachable_target_reports_range(self):
        spec = OverlapSpec(d=2, K=2, max_omega=1e-9, seed=9, mc_samples=2000)
        with pytest.raises(RuntimeError, match="achieved range"):
            generate(spec)

    def test_rejects_bad_spec(self):
        with pytest.raises(ValueError):
            OverlapSpec(d=2, K=3, max_omega=0.0)
        with pytest.raises(ValueError):
            OverlapSpec(d=0, K=3, max_omega=0.1)
