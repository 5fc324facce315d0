import math

import numpy as np
import pytest

from sqzphase import (
    DegenerateStateError,
    PhaseGrid,
    QuadratureVariances,
    StateModel,
    estimate_variance_monte_carlo,
    fisher_at_phase,
    initial_posterior,
    laplace_width,
    log_likelihood,
    map_estimate,
    max_fisher,
    optimal_phase,
    posterior,
    posterior_fwhm,
    quadrature_variance_at,
    sample_batch,
    streaming_update,
    sufficient_statistic,
    variances,
)
from sqzphase.estimator import estimate_summary, posterior_to_csv

VACUUM = QuadratureVariances(1.0, 1.0)
PURE_R1 = variances(StateModel(r=1.0))


def random_variances(rng) -> QuadratureVariances:
    return variances(
        StateModel(
            r=float(rng.uniform(0.05, 2.0)),
            eta=float(rng.uniform(0.5, 1.0)),
            xi=float(rng.uniform(0.0, 0.2)),
        )
    )


def integral(post) -> float:
    return float(np.sum(post.grid.trapezoid_weights() * post.density()))


class TestLogLikelihood:
    def test_standard_normal_at_zero(self):
        assert log_likelihood(VACUUM, 0.0, 0.0, 1) == pytest.approx(
            -0.5 * math.log(2.0 * math.pi), rel=1e-14
        )

    def test_one_sample_unit(self):
        assert log_likelihood(VACUUM, 0.0, 1.0, 1) == pytest.approx(
            -0.5 * math.log(2.0 * math.pi) - 0.5, rel=1e-14
        )

    def test_sufficiency(self):
        # per-sample sum equals the (S, m) form
        batch = sample_batch(PURE_R1, 0.4, 500, seed=31)
        phis = np.linspace(0.0, math.pi / 2, 64)
        single_sum = sum(
            log_likelihood(PURE_R1, phis, float(x) ** 2, 1) for x in batch.samples
        )
        joint = log_likelihood(
            PURE_R1, phis, sufficient_statistic(batch), batch.m
        )
        np.testing.assert_allclose(single_sum, joint, rtol=0.0, atol=1e-9)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            log_likelihood(VACUUM, 0.0, 1.0, 0)
        with pytest.raises(ValueError):
            log_likelihood(VACUUM, 0.0, -1.0, 5)


class TestPosterior:
    def test_vacuum_posterior_is_flat(self):
        post = posterior(VACUUM, (0.0, 1))
        density = post.density()
        assert float(np.ptp(density)) < 1e-12
        # uniform density on [0, pi/2] has std (pi/2)/sqrt(12)
        assert post.credible_width == pytest.approx(
            (math.pi / 2) / math.sqrt(12.0), rel=1e-6
        )

    def test_normalization_over_random_batches(self):
        rng = np.random.default_rng(7)
        for case in range(50):
            v = random_variances(rng)
            phi = float(rng.uniform(0.0, math.pi / 2))
            m = int(rng.integers(1, 400))
            batch = sample_batch(v, phi, m, seed=case)
            post = posterior(v, batch)
            assert integral(post) == pytest.approx(1.0, abs=1e-6)

    def test_map_near_truth(self):
        phi_true = math.pi / 8
        batch = sample_batch(PURE_R1, phi_true, 1000, seed=77)
        post = posterior(PURE_R1, batch)
        assert abs(post.map_phase - phi_true) <= 3.0 * post.credible_width
        assert post.credible_width > 0.0

    def test_custom_prior(self):
        batch = sample_batch(PURE_R1, 0.3, 50, seed=5)
        flat = posterior(PURE_R1, batch)
        tilted = posterior(
            PURE_R1, batch, log_prior=lambda p: -0.5 * ((p - 0.3) / 0.05) ** 2
        )
        assert integral(tilted) == pytest.approx(1.0, abs=1e-6)
        assert tilted.credible_width < flat.credible_width

    def test_accepts_sufficient_statistic(self):
        batch = sample_batch(PURE_R1, 0.3, 200, seed=6)
        a = posterior(PURE_R1, batch)
        b = posterior(PURE_R1, (sufficient_statistic(batch), batch.m))
        np.testing.assert_allclose(a.log_density, b.log_density, atol=1e-9)


class TestMapEstimate:
    def test_inverts_variance_curve(self):
        v = PURE_R1
        target = float(quadrature_variance_at(v, math.pi / 8))
        assert map_estimate(v, target * 100, 100) == pytest.approx(math.pi / 8, rel=1e-12)

    def test_boundary_clamps(self):
        assert map_estimate(PURE_R1, 0.05 * 10, 10) == 0.0
        assert map_estimate(PURE_R1, 10.0 * 10, 10) == math.pi / 2

    def test_matches_grid_argmax(self):
        rng = np.random.default_rng(11)
        grid = PhaseGrid()
        for case in range(100):
            v = random_variances(rng)
            phi = float(rng.uniform(0.0, math.pi / 2))
            m = int(rng.integers(5, 500))
            batch = sample_batch(v, phi, m, seed=2000 + case)
            closed = map_estimate(v, sufficient_statistic(batch), m)
            post = posterior(v, batch, grid)
            assert abs(closed - post.map_phase) <= grid.step + 1e-15

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateStateError):
            map_estimate(VACUUM, 1.0, 1)


class TestStreaming:
    def test_single_update_equals_posterior(self):
        x = 0.37
        start = initial_posterior(PURE_R1)
        one = streaming_update(start, x)
        batch_form = posterior(PURE_R1, (x * x, 1))
        np.testing.assert_allclose(one.log_density, batch_form.log_density, atol=1e-10)
        assert one.m_used == 1

    def test_sequential_equals_batch(self):
        batch = sample_batch(PURE_R1, 0.3, 1000, seed=55)
        post = initial_posterior(PURE_R1)
        for x in batch.samples:
            post = streaming_update(post, float(x))
        reference = posterior(PURE_R1, batch)
        assert post.m_used == 1000
        np.testing.assert_allclose(post.log_density, reference.log_density, atol=1e-8)

    def test_normalized_after_every_update(self):
        batch = sample_batch(PURE_R1, 0.25, 60, seed=56)
        post = initial_posterior(PURE_R1)
        for x in batch.samples:
            post = streaming_update(post, float(x))
            assert integral(post) == pytest.approx(1.0, abs=1e-6)

    def test_width_eventually_decreasing(self):
        # drawn at the optimal phase; checked at doubling checkpoints
        phi = optimal_phase(PURE_R1)
        batch = sample_batch(PURE_R1, phi, 640, seed=58)
        post = initial_posterior(PURE_R1)
        widths = {}
        for i, x in enumerate(batch.samples, start=1):
            post = streaming_update(post, float(x))
            widths[i] = post.credible_width
        checkpoints = [10, 20, 40, 80, 160, 320, 640]
        values = [widths[c] for c in checkpoints]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_immutability(self):
        start = initial_posterior(PURE_R1)
        updated = streaming_update(start, 0.2)
        assert start.m_used == 0 and updated.m_used == 1
        assert updated is not start


class TestWidths:
    def test_laplace_matches_crb_at_map(self):
        batch = sample_batch(PURE_R1, 0.3, 1000, seed=60)
        s = sufficient_statistic(batch)
        phi_hat = map_estimate(PURE_R1, s, batch.m)
        expected = 1.0 / math.sqrt(batch.m * fisher_at_phase(PURE_R1, phi_hat))
        assert laplace_width(PURE_R1, s, batch.m) == pytest.approx(expected, rel=1e-12)

    def test_laplace_nan_when_clamped(self):
        assert math.isnan(laplace_width(PURE_R1, 0.0, 10))

    def test_fwhm_of_gaussian_like_posterior(self):
        batch = sample_batch(PURE_R1, 0.3, 2000, seed=61)
        post = posterior(PURE_R1, batch)
        ratio = posterior_fwhm(post) / post.credible_width
        assert ratio == pytest.approx(2.3548, rel=0.05)


class TestMonteCarlo:
    def test_crb_saturation(self):
        phi_opt = optimal_phase(PURE_R1)
        mc = estimate_variance_monte_carlo(PURE_R1, phi_opt, 1000, 500, seed=4)
        crb = 1.0 / (1000 * max_fisher(PURE_R1))
        assert crb == pytest.approx(3.801e-5, abs=1e-8)
        assert 0.85 <= mc.variance / crb <= 1.3
        assert abs(mc.mean - phi_opt) < 3.0 * math.sqrt(crb / 500) + 1e-3
        assert mc.informative

    def test_crb_saturation_across_central_phases(self):
        # asymptotic efficiency holds away from the support boundaries
        for i, phi in enumerate((0.35, 0.6, 0.9, 1.2)):
            mc = estimate_variance_monte_carlo(
                PURE_R1, phi, 1000, 500, seed=14, stream0=i * 500
            )
            crb = 1.0 / (1000 * fisher_at_phase(PURE_R1, phi))
            assert 0.85 <= mc.variance / crb <= 1.3, phi

    def test_phase_dependence_matches_fisher_shape(self):
        # minimum at the optimal phase, growth toward both support edges
        results = {
            phi: estimate_variance_monte_carlo(
                PURE_R1, phi, 1000, 300, seed=8, stream0=int(phi * 1e4) * 1000
            ).variance
            for phi in (optimal_phase(PURE_R1), math.pi / 4, 1.5, 0.02)
        }
        v_opt, v_mid, v_upper, v_edge = results.values()
        assert v_opt < v_mid < v_upper
        assert v_edge > 4.0 * v_opt

    def test_vacuum_flagged_non_informative(self):
        mc = estimate_variance_monte_carlo(VACUUM, 0.3, 100, 10, seed=1)
        assert not mc.informative
        assert mc.variance == 0.0

    def test_mean_width_tracks_crb(self):
        phi_opt = optimal_phase(PURE_R1)
        mc = estimate_variance_monte_carlo(
            PURE_R1, phi_opt, 1000, 100, seed=5, with_width=True
        )
        crb_sigma = 1.0 / math.sqrt(1000 * max_fisher(PURE_R1))
        assert mc.mean_width == pytest.approx(crb_sigma, rel=0.15)

    def test_order_independence(self):
        # two half-runs with shifted streams reproduce the full run
        full = estimate_variance_monte_carlo(PURE_R1, 0.2, 200, 40, seed=9)
        half_a = estimate_variance_monte_carlo(PURE_R1, 0.2, 200, 20, seed=9, stream0=0)
        half_b = estimate_variance_monte_carlo(PURE_R1, 0.2, 200, 20, seed=9, stream0=20)
        merged_mean = 0.5 * (half_a.mean + half_b.mean)
        assert merged_mean == pytest.approx(full.mean, rel=1e-12)

    def test_too_few_trials(self):
        with pytest.raises(ValueError):
            estimate_variance_monte_carlo(PURE_R1, 0.2, 100, 1, seed=1)


class TestExports:
    def test_posterior_csv_shape(self):
        post = posterior(PURE_R1, sample_batch(PURE_R1, 0.3, 50, seed=3), PhaseGrid(k=100))
        lines = posterior_to_csv(post).strip().splitlines()
        assert lines[0] == "phi,density"
        assert len(lines) == 101
        phi0, d0 = lines[1].split(",")
        assert float(phi0) == 0.0 and float(d0) >= 0.0

    def test_summary_keys(self):
        post = posterior(PURE_R1, sample_batch(PURE_R1, 0.3, 50, seed=3))
        summary = estimate_summary(post)
        assert set(summary) == {"map", "width", "m", "clamped"}
        assert summary["m"] == 50
