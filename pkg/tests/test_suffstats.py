from __future__ import annotations

import math

import numpy as np
import pytest

from sparsehawkes.kernels import ExponentialKernel
from sparsehawkes.model import ModelParams, Path
from sparsehawkes.suffstats import (ClassStats, aggregate, compute_suff_stats, contrast,
                                    contrast_gradient, log_density_from_stats)
from sparsehawkes.model import log_density

from conftest import random_path
from oracles import central_diff, naive_event_rows, quad_gram

BETA = 3.0


class TestComputeSuffStats:
    def test_empty_path(self, kernel3):
        p = Path(T=5.0, events=[np.empty(0), np.empty(0)])
        s = compute_suff_stats(p, kernel3)
        expected = np.zeros((3, 3))
        expected[0, 0] = 1.0
        np.testing.assert_array_equal(s.G, expected)
        np.testing.assert_array_equal(s.b, 0.0)
        np.testing.assert_array_equal(s.comp, 0.0)

    def test_single_event_closed_form(self, kernel3):
        p = Path(T=5.0, events=[np.array([1.0])])
        s = compute_suff_stats(p, kernel3)
        g01 = (1 - math.exp(-12.0)) / 5.0
        g11 = (3.0 / 10.0) * (1 - math.exp(-24.0))
        assert s.G[0, 1] == pytest.approx(g01, rel=1e-14)
        assert s.G[1, 1] == pytest.approx(g11, rel=1e-14)
        assert g01 == pytest.approx(0.19999877, abs=5e-9)
        assert g11 == pytest.approx(0.3000, abs=5e-5)
        assert s.b[0, 0] == pytest.approx(1 / 5.0)

    def test_gram_matches_quadrature(self, kernel3):
        rng = np.random.default_rng(2024)
        p = random_path(rng, 3, max_events=8)
        while p.n_events < 15:
            p = random_path(rng, 3, max_events=8)
        G_ref = quad_gram(p, BETA)
        s = compute_suff_stats(p, kernel3)
        np.testing.assert_allclose(s.G, G_ref, rtol=0, atol=1e-8)

    def test_event_rows_match_naive(self, kernel3):
        rng = np.random.default_rng(5)
        for _ in range(8):
            p = random_path(rng, 3, max_events=33)
            s = compute_suff_stats(p, kernel3)
            ref = naive_event_rows(p, BETA)
            for j in range(3):
                np.testing.assert_allclose(s.event_rows[j], ref[j], rtol=0, atol=1e-12)

    def test_b_intercept_is_count_over_T(self, kernel3):
        rng = np.random.default_rng(9)
        p = random_path(rng, 4, max_events=12)
        s = compute_suff_stats(p, kernel3)
        np.testing.assert_array_equal(s.b[:, 0], p.counts / p.T)

    def test_gram_psd_and_symmetric(self, kernel3):
        rng = np.random.default_rng(31)
        for _ in range(10):
            p = random_path(rng, 4, max_events=20)
            s = compute_suff_stats(p, kernel3)
            np.testing.assert_array_equal(s.G, s.G.T)
            assert np.linalg.eigvalsh(s.G).min() >= -1e-10

    def test_equal_cross_component_times(self, kernel3):
        # ties across components contribute exp(0) pair terms
        p = Path(T=2.0, events=[np.array([1.0]), np.array([1.0])])
        s = compute_suff_stats(p, kernel3)
        G_ref = quad_gram(p, BETA)
        np.testing.assert_allclose(s.G, G_ref, rtol=0, atol=1e-9)


class TestAggregate:
    def test_single_path_identity(self, kernel3):
        rng = np.random.default_rng(1)
        p = random_path(rng, 2)
        s = compute_suff_stats(p, kernel3)
        cs = aggregate([s])
        np.testing.assert_array_equal(cs.G_bar, s.G)
        np.testing.assert_array_equal(cs.b_bar, s.b)
        assert cs.n_k == 1

    def test_duplicated_path_idempotent(self, kernel3):
        rng = np.random.default_rng(2)
        s = compute_suff_stats(random_path(rng, 2), kernel3)
        one = aggregate([s])
        two = aggregate([s, s])
        np.testing.assert_allclose(two.G_bar, one.G_bar, rtol=1e-15)
        np.testing.assert_allclose(two.b_bar, one.b_bar, rtol=1e-15)

    def test_permutation_invariance_bitwise(self, kernel3):
        rng = np.random.default_rng(3)
        stats = [compute_suff_stats(random_path(rng, 3), kernel3) for _ in range(11)]
        base = aggregate(stats)
        for seed in range(5):
            perm = np.random.default_rng(seed).permutation(len(stats))
            other = aggregate([stats[i] for i in perm])
            np.testing.assert_array_equal(other.G_bar, base.G_bar)
            np.testing.assert_array_equal(other.b_bar, base.b_bar)

    def test_empty_aggregate_flagged(self):
        cs = aggregate([], M=3)
        assert cs.empty and cs.n_k == 0
        np.testing.assert_array_equal(cs.G_bar, 0.0)

    def test_mixed_dimensions_rejected(self, kernel3):
        rng = np.random.default_rng(4)
        s2 = compute_suff_stats(random_path(rng, 2), kernel3)
        s3 = compute_suff_stats(random_path(rng, 3), kernel3)
        with pytest.raises(ValueError, match="mixed dimensions"):
            aggregate([s2, s3])

    def test_gbar_psd(self, kernel3):
        rng = np.random.default_rng(6)
        stats = [compute_suff_stats(random_path(rng, 3), kernel3) for _ in range(7)]
        cs = aggregate(stats)
        assert np.linalg.eigvalsh(cs.G_bar).min() >= -1e-10


def _direct_contrast(paths, params, beta):
    """Definition-level evaluation: per-path quadrature of lambda^2 and event sums."""
    from oracles import naive_history, quad_gram_entry
    total = 0.0
    for p in paths:
        per_path = 0.0
        for j in range(p.M):
            theta_j = np.concatenate([[params.mu[j]], params.A[j]])
            # integral of lambda_j^2 = theta_j' (T G) theta_j
            Gp = quad_gram(p, beta)
            per_path += theta_j @ Gp @ theta_j
            ev_sum = sum(theta_j @ naive_history(p, beta, t) for t in p.events[j])
            per_path -= 2.0 / p.T * ev_sum
        total += per_path
    return total / len(paths)


class TestContrast:
    def test_zero_theta(self, kernel3):
        rng = np.random.default_rng(1)
        cs = aggregate([compute_suff_stats(random_path(rng, 2), kernel3)])
        zero = ModelParams(mu=np.zeros(2), A=np.zeros((2, 2)))
        assert contrast(cs, zero) == 0.0

    def test_empty_path_univariate(self, kernel3):
        p = Path(T=5.0, events=[np.empty(0)])
        cs = aggregate([compute_suff_stats(p, kernel3)])
        params = ModelParams(mu=np.array([0.7]), A=np.array([[0.4]]))
        assert contrast(cs, params) == pytest.approx(0.7 ** 2, rel=1e-15)

    def test_matches_definition_oracle(self, kernel3):
        rng = np.random.default_rng(44)
        paths = []
        while len(paths) < 2:
            p = random_path(rng, 2, max_events=6)
            if 2 <= p.n_events <= 10:
                paths.append(p)
        params = ModelParams(mu=np.array([0.5, 0.3]), A=np.array([[0.2, 0.4], [0.1, 0.6]]))
        cs = aggregate([compute_suff_stats(p, kernel3) for p in paths])
        ref = _direct_contrast(paths, params, BETA)
        assert contrast(cs, params) == pytest.approx(ref, abs=1e-8)

    def test_row_additivity(self, kernel3):
        # modifying theta_j changes only row-j terms
        rng = np.random.default_rng(12)
        cs = aggregate([compute_suff_stats(random_path(rng, 3), kernel3) for _ in range(3)])
        theta = rng.uniform(0, 1, (3, 4))
        base = ModelParams.from_theta(theta)
        mod = theta.copy()
        mod[1] = rng.uniform(0, 1, 4)
        diff_full = contrast(cs, ModelParams.from_theta(mod)) - contrast(cs, base)
        row = lambda th: th[1] @ cs.G_bar @ th[1] - 2 * cs.b_bar[1] @ th[1]
        assert diff_full == pytest.approx(row(mod) - row(theta), rel=1e-10, abs=1e-12)

    def test_bounded_below(self, kernel3):
        rng = np.random.default_rng(13)
        cs = aggregate([compute_suff_stats(random_path(rng, 2), kernel3) for _ in range(4)])
        Gp = np.linalg.pinv(cs.G_bar)
        lower = -sum(cs.b_bar[j] @ Gp @ cs.b_bar[j] for j in range(2))
        for _ in range(50):
            params = ModelParams.from_theta(rng.normal(size=(2, 3)) * 3)
            assert contrast(cs, params) >= lower - 1e-8


class TestContrastGradient:
    def test_zero_theta_gradient(self, kernel3):
        rng = np.random.default_rng(14)
        cs = aggregate([compute_suff_stats(random_path(rng, 2), kernel3)])
        zero = ModelParams(mu=np.zeros(2), A=np.zeros((2, 2)))
        np.testing.assert_allclose(contrast_gradient(cs, zero), -2.0 * cs.b_bar, rtol=1e-15)

    def test_stationary_at_unpenalized_minimizer(self, kernel3):
        rng = np.random.default_rng(15)
        stats = []
        while len(stats) < 6:
            p = random_path(rng, 2, max_events=15)
            if p.n_events >= 6:
                stats.append(compute_suff_stats(p, kernel3))
        cs = aggregate(stats)
        theta = np.linalg.solve(cs.G_bar, cs.b_bar.T).T
        grad = contrast_gradient(cs, ModelParams.from_theta(theta))
        assert np.max(np.abs(grad)) <= 1e-8

    def test_matches_finite_differences(self, kernel3):
        rng = np.random.default_rng(16)
        cs = aggregate([compute_suff_stats(random_path(rng, 3), kernel3) for _ in range(4)])
        theta = rng.uniform(0.1, 0.9, (3, 4))
        grad = contrast_gradient(cs, ModelParams.from_theta(theta))

        def f(x):
            return contrast(cs, ModelParams.from_theta(x.reshape(3, 4)))

        fd = central_diff(f, theta.ravel()).reshape(3, 4)
        denom = np.maximum(np.abs(fd), 1e-8)
        assert np.max(np.abs(grad - fd) / denom) < 1e-5


class TestLogDensityFromStats:
    def test_matches_direct_log_density(self, kernel3):
        rng = np.random.default_rng(17)
        for _ in range(5):
            p = random_path(rng, 3, max_events=15)
            params = ModelParams(mu=rng.uniform(0.1, 1, 3), A=rng.uniform(0, 0.4, (3, 3)))
            s = compute_suff_stats(p, kernel3)
            a = log_density_from_stats(s, params)
            b = log_density(params, kernel3, p)
            assert a.value == pytest.approx(b.value, rel=1e-12)
            assert a.clamped == b.clamped
