import json
import math

import numpy as np
import pytest
from scipy.stats import kstest

from sqzphase import (
    QuadratureVariances,
    StateModel,
    load_batch,
    quadrature_variance_at,
    sample_batch,
    sample_timeseries,
    save_batch,
    standard_normals,
    sufficient_statistic,
    variances,
)

RNG = np.random.default_rng(42)

VACUUM = QuadratureVariances(1.0, 1.0)
PURE_R1 = variances(StateModel(r=1.0))


def random_variances(rng) -> QuadratureVariances:
    return variances(
        StateModel(
            r=float(rng.uniform(0.1, 2.0)),
            eta=float(rng.uniform(0.5, 1.0)),
            xi=float(rng.uniform(0.0, 0.3)),
        )
    )


class TestDeterminism:
    def test_bit_identical_repeat(self):
        a = sample_batch(PURE_R1, 0.3, 1000, seed=7)
        b = sample_batch(PURE_R1, 0.3, 1000, seed=7)
        assert np.array_equal(a.samples, b.samples)

    def test_seed_and_stream_change_samples(self):
        base = sample_batch(PURE_R1, 0.3, 1000, seed=7).samples
        other_seed = sample_batch(PURE_R1, 0.3, 1000, seed=8).samples
        other_stream = sample_batch(PURE_R1, 0.3, 1000, seed=7, stream=1).samples
        assert not np.array_equal(base, other_seed)
        assert not np.array_equal(base, other_stream)

    def test_different_seeds_uncorrelated(self):
        m = 100_000
        a = sample_batch(VACUUM, 0.0, m, seed=1).samples
        b = sample_batch(VACUUM, 0.0, m, seed=2).samples
        corr = float(np.corrcoef(a, b)[0, 1])
        assert abs(corr) < 3.0 / math.sqrt(m)


class TestStatistics:
    def test_vacuum_variance(self):
        x = sample_batch(VACUUM, 0.7, 100_000, seed=11).samples
        assert np.var(x) == pytest.approx(1.0, rel=0.02)

    def test_squeezed_variance_at_zero(self):
        x = sample_batch(PURE_R1, 0.0, 100_000, seed=12).samples
        assert np.var(x) == pytest.approx(math.exp(-2.0), rel=0.02)

    def test_variance_at_pi_over_8(self):
        x = sample_batch(PURE_R1, math.pi / 8, 100_000, seed=13).samples
        expected = float(quadrature_variance_at(PURE_R1, math.pi / 8))
        assert np.var(x) == pytest.approx(expected, rel=0.02)
        assert expected == pytest.approx(1.197618, abs=1e-6)

    def test_kolmogorov_smirnov(self):
        rng = np.random.default_rng(123)
        for case in range(20):
            v = random_variances(rng)
            phi = float(rng.uniform(0.0, math.pi / 2))
            x = sample_batch(v, phi, 100_000, seed=1000 + case).samples
            scale = math.sqrt(float(quadrature_variance_at(v, phi)))
            assert kstest(x, "norm", args=(0.0, scale)).pvalue > 1e-3

    def test_scaling_by_construction(self):
        # same stream at a different variance is a pure rescaling
        z = standard_normals(5, 0, 500)
        x = sample_batch(PURE_R1, 0.4, 500, seed=5).samples
        v = float(quadrature_variance_at(PURE_R1, 0.4))
        np.testing.assert_allclose(x, math.sqrt(v) * z, rtol=0.0, atol=0.0)

    def test_mean_sanity_bound(self):
        for seed in range(5):
            batch = sample_batch(PURE_R1, 0.2, 2000, seed=seed)
            assert batch.sample_mean_within_bound()


class TestSufficientStatistic:
    def test_zeros(self):
        from sqzphase import QuadratureBatch

        batch = QuadratureBatch(np.zeros(5), 0.0, VACUUM, seed=0)
        assert sufficient_statistic(batch) == 0.0

    def test_arithmetic(self):
        assert sufficient_statistic(np.array([1.0, -1.0, 2.0])) == pytest.approx(6.0)

    def test_concentration(self):
        batch = sample_batch(PURE_R1, math.pi / 8, 100_000, seed=3)
        expected = float(quadrature_variance_at(PURE_R1, math.pi / 8))
        assert sufficient_statistic(batch) / batch.m == pytest.approx(expected, rel=0.02)


class TestBatch:
    def test_shape_and_immutability(self):
        batch = sample_batch(PURE_R1, 0.1, 100, seed=1)
        assert batch.m == 100
        with pytest.raises(ValueError):
            batch.samples[0] = 3.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sample_batch(PURE_R1, 0.1, 0, seed=1)

    def test_seed_must_be_u64(self):
        with pytest.raises(ValueError):
            sample_batch(PURE_R1, 0.1, 10, seed=-1)
        with pytest.raises(ValueError):
            sample_batch(PURE_R1, 0.1, 10, seed=2**64)

    def test_jitter_keeps_deviate_stream(self):
        clean = sample_batch(PURE_R1, 0.4, 1000, seed=9)
        jittered = sample_batch(PURE_R1, 0.4, 1000, seed=9, phase_jitter_rms=0.02)
        assert not np.array_equal(clean.samples, jittered.samples)
        # same underlying normals: signs match sample by sample
        assert np.array_equal(np.sign(clean.samples), np.sign(jittered.samples))

    def test_csv_round_trip(self, tmp_path):
        batch = sample_batch(PURE_R1, 0.25, 257, seed=99)
        csv, meta = tmp_path / "batch.csv", tmp_path / "batch.json"
        save_batch(batch, csv, meta)
        loaded = load_batch(csv, meta)
        np.testing.assert_array_equal(loaded.samples, batch.samples)
        assert loaded.phi_true == batch.phi_true
        assert loaded.vars == batch.vars
        assert loaded.seed == batch.seed
        sidecar = json.loads(meta.read_text())
        assert set(sidecar) == {"m", "phi_true", "v_minus", "v_plus", "seed"}

    def test_load_rejects_bad_header(self, tmp_path):
        (tmp_path / "b.csv").write_text("a,b\n0,1.0\n")
        (tmp_path / "b.json").write_text(
            json.dumps({"m": 1, "phi_true": 0.0, "v_minus": 1.0, "v_plus": 1.0, "seed": 0})
        )
        with pytest.raises(ValueError):
            load_batch(tmp_path / "b.csv", tmp_path / "b.json")


class TestTimeseries:
    def test_constant_phase_matches_batch(self):
        t, x = sample_timeseries(PURE_R1, lambda t: 0.3, fs=1.0e4, duration=0.05, seed=21)
        batch = sample_batch(PURE_R1, 0.3, 500, seed=21)
        assert t.size == 500
        np.testing.assert_array_equal(x, batch.samples)

    def test_modulated_phase(self):
        fs, duration = 1.0e6, 0.1
        phase_fn = lambda t: 0.13 + 0.01 * np.sin(2 * np.pi * 3000.0 * t)
        t, x = sample_timeseries(PURE_R1, phase_fn, fs, duration, seed=2)
        assert x.size == 100_000
        assert t[1] - t[0] == pytest.approx(1.0 / fs, rel=1e-12)

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            sample_timeseries(PURE_R1, lambda t: 0.0, fs=10.0, duration=0.05, seed=1)

    @pytest.mark.parametrize("fs,duration", [(0.0, 1.0), (-5.0, 1.0), (100.0, 0.0)])
    def test_bad_arguments(self, fs, duration):
        with pytest.raises(ValueError):
            sample_timeseries(PURE_R1, lambda t: 0.0, fs, duration, seed=1)
