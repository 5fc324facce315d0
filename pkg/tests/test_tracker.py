import math

import numpy as np
import pytest

from sqzphase import (
    NoiseProfile,
    PhaseTimeSeries,
    TrackerConfig,
    aperture_gain,
    bandpass,
    map_estimate,
    max_fisher,
    optimal_phase,
    sample_timeseries,
    spectrum,
    state_for_target_photons,
    synthesize_demo_signal,
    tone_amplitude,
    track,
    variances,
)

# demo probe: 6 detected photons through 11% loss
V6 = variances(state_for_target_photons(6.0, 0.89))
F6 = max_fisher(V6)
PHI_C = optimal_phase(V6)


def default_cfg(**kwargs) -> TrackerConfig:
    base = dict(fs=1.0e6, window_m=100, center_phase=PHI_C, band_lo=2000.0, band_hi=4000.0)
    base.update(kwargs)
    return TrackerConfig(**base)


def tracked_record(tone_amp: float, duration: float, seed: int, noise=NoiseProfile()):
    cfg = default_cfg()
    phase_fn = synthesize_demo_signal(cfg, 3000.0, tone_amp, noise)
    _, x = sample_timeseries(V6, phase_fn, cfg.fs, duration, seed)
    return cfg, track(x, V6, cfg)


class TestTrack:
    def test_windowing_consistency(self):
        # per-window output equals the batch MAP estimate, window by window
        cfg = default_cfg()
        _, x = sample_timeseries(V6, lambda t: PHI_C, cfg.fs, 0.002, seed=5)
        series = track(x, V6, cfg)
        assert len(series) == 20
        for k in range(20):
            window = x[k * 100 : (k + 1) * 100]
            expected = map_estimate(V6, float(np.dot(window, window)), 100)
            assert series.delta_phi[k] == pytest.approx(expected - PHI_C, abs=1e-15)

    def test_single_window_equals_batch(self):
        cfg = default_cfg(window_m=400, band_lo=100.0, band_hi=1000.0)
        _, x = sample_timeseries(V6, lambda t: 0.1, cfg.fs, 4e-4, seed=6)
        series = track(x, V6, cfg)
        assert len(series) == 1
        assert series.delta_phi[0] == pytest.approx(
            map_estimate(V6, float(np.dot(x, x)), 400) - PHI_C, abs=1e-15
        )

    def test_uniform_time_step(self):
        _, series = tracked_record(0.0, 0.01, seed=7)
        dt = np.diff(series.t)
        np.testing.assert_allclose(dt, 100 / 1.0e6, rtol=1e-9)

    def test_short_input_rejected(self):
        cfg = default_cfg()
        with pytest.raises(ValueError):
            track(np.zeros(99), V6, cfg)

    def test_noise_floor_saturates_crb(self):
        _, series = tracked_record(0.0, 0.2, seed=101)
        floor = float(np.var(series.delta_phi))
        crb = 1.0 / (100 * F6)
        assert len(series) >= 500
        assert floor == pytest.approx(crb, rel=0.15)
        # mean tracks the preset phase
        assert abs(float(np.mean(series.delta_phi))) < 5.0 * math.sqrt(crb / len(series))

    def test_tone_recovery_with_aperture_correction(self):
        cfg, series = tracked_record(0.010, 1.0, seed=101)
        gain = aperture_gain(cfg, 3000.0)
        recovered = tone_amplitude(series, 3000.0) / gain
        assert recovered == pytest.approx(0.010, rel=0.10)

    def test_small_signal_linearity(self):
        # common random numbers across amplitudes isolate the gain curve
        amps = [0.001, 0.002, 0.005, 0.010, 0.020]
        cfg = default_cfg()
        gain = aperture_gain(cfg, 3000.0)
        recovered = []
        for amp in amps:
            phase_fn = synthesize_demo_signal(cfg, 3000.0, amp)
            _, x = sample_timeseries(V6, phase_fn, cfg.fs, 2.0, seed=777)
            series = track(x, V6, cfg)
            recovered.append(tone_amplitude(series, 3000.0) / gain)
        design = np.vstack([amps, np.ones(len(amps))]).T
        coef, *_ = np.linalg.lstsq(design, np.asarray(recovered), rcond=None)
        predictions = design @ coef
        assert coef[0] == pytest.approx(1.0, abs=0.05)
        assert float(np.max(np.abs(recovered - predictions) / predictions)) <= 0.05


class TestBandpass:
    FS_EST = 1.0e4

    def tone_series(self, freq: float, n: int = 20000) -> PhaseTimeSeries:
        t = np.arange(n) / self.FS_EST
        return PhaseTimeSeries(t, np.sin(2 * np.pi * freq * t), self.FS_EST)

    def test_passband_tone_preserved(self):
        out = bandpass(self.tone_series(3000.0), 2000.0, 4000.0)
        assert tone_amplitude(out, 3000.0) == pytest.approx(1.0, rel=0.01)

    def test_low_frequency_tone_rejected(self):
        out = bandpass(self.tone_series(100.0), 2000.0, 4000.0)
        attenuation_db = 20.0 * math.log10(tone_amplitude(out, 100.0))
        assert attenuation_db <= -40.0

    def test_band_edge_attenuation(self):
        # forward-backward pass puts the edges at -6 dB, beyond the 3 dB mark
        for edge in (2000.0, 4000.0):
            out = bandpass(self.tone_series(edge), 2000.0, 4000.0)
            edge_db = 20.0 * math.log10(tone_amplitude(out, edge))
            assert edge_db <= -3.0

    def test_zero_in_zero_out(self):
        t = np.arange(4096) / self.FS_EST
        series = PhaseTimeSeries(t, np.zeros_like(t), self.FS_EST)
        out = bandpass(series, 2000.0, 4000.0)
        np.testing.assert_allclose(out.delta_phi, 0.0, atol=1e-12)

    def test_invalid_band_rejected(self):
        series = self.tone_series(3000.0, n=1024)
        with pytest.raises(ValueError):
            bandpass(series, 4000.0, 2000.0)
        with pytest.raises(ValueError):
            bandpass(series, 2000.0, 6000.0)  # above Nyquist

    def test_out_of_band_suppression(self):
        _, series = tracked_record(0.010, 1.0, seed=101)
        filtered = bandpass(series, 2000.0, 4000.0)
        freq, psd = spectrum(filtered)
        in_band = np.mean(psd[(freq >= 2000.0) & (freq <= 4000.0)])
        below = np.mean(psd[(freq > 0.0) & (freq <= 1000.0)])
        above = np.mean(psd[freq >= 4750.0])
        assert 10.0 * math.log10(in_band / below) >= 30.0
        assert 10.0 * math.log10(in_band / above) >= 30.0


class TestSpectrum:
    def test_parseval(self):
        _, series = tracked_record(0.010, 0.5, seed=11)
        freq, psd = spectrum(series)
        df = freq[1] - freq[0]
        assert float(np.sum(psd) * df) == pytest.approx(
            float(np.var(series.delta_phi)), rel=0.02
        )

    def test_tone_peak_location_and_power(self):
        fs_est = 1.0e4
        amp = 0.037
        t = np.arange(32768) / fs_est
        series = PhaseTimeSeries(t, amp * np.sin(2 * np.pi * 3000.0 * t), fs_est)
        freq, psd = spectrum(series)
        peak = int(np.argmax(psd))
        df = freq[1] - freq[0]
        assert abs(freq[peak] - 3000.0) <= df
        power = float(np.sum(psd[peak - 5 : peak + 6]) * df)
        assert power == pytest.approx(amp * amp / 2.0, rel=0.10)

    def test_white_floor_is_flat_at_crb_level(self):
        _, series = tracked_record(0.0, 1.0, seed=31)
        freq, psd = spectrum(series, nperseg=256)
        level = 2.0 / (series.fs_est * 100 * F6)  # 2 sigma^2 / fs_est, sigma^2 = 1/(m F)
        band = (freq > 200.0) & (freq < 4800.0)
        assert float(np.mean(psd[band])) == pytest.approx(level, rel=0.10)
        spread_db = 10.0 * math.log10(np.max(psd[band]) / np.min(psd[band]))
        assert spread_db <= 3.0

    def test_zero_series(self):
        t = np.arange(1024) / 1.0e4
        freq, psd = spectrum(PhaseTimeSeries(t, np.zeros_like(t), 1.0e4))
        np.testing.assert_allclose(psd, 0.0, atol=1e-20)

    def test_too_short_rejected(self):
        t = np.arange(8) / 1.0e4
        with pytest.raises(ValueError):
            spectrum(PhaseTimeSeries(t, np.zeros_like(t), 1.0e4))


class TestSynthesize:
    def test_silent_signal_is_constant(self):
        cfg = default_cfg()
        fn = synthesize_demo_signal(cfg, 3000.0, 0.0)
        t = np.linspace(0.0, 1.0, 1000)
        np.testing.assert_allclose(fn(t), cfg.center_phase, atol=1e-15)

    def test_tone_outside_band_rejected(self):
        cfg = default_cfg()
        with pytest.raises(ValueError):
            synthesize_demo_signal(cfg, 6000.0, 0.01)  # above estimate-rate Nyquist

    def test_deterministic_noise(self):
        cfg = default_cfg()
        noise = NoiseProfile(rms=0.05, corner_hz=200.0, seed=3)
        t = np.linspace(0.0, 0.5, 4096)
        np.testing.assert_array_equal(
            synthesize_demo_signal(cfg, 3000.0, 0.0, noise)(t),
            synthesize_demo_signal(cfg, 3000.0, 0.0, noise)(t),
        )

    def test_noise_rms_calibration(self):
        cfg = default_cfg()
        noise = NoiseProfile(rms=0.05, corner_hz=200.0, seed=3)
        fn = synthesize_demo_signal(cfg, 3000.0, 0.0, noise)
        t = np.arange(2_000_000) / 1.0e6  # 2 s covers many periods of every component
        excursion = fn(t) - cfg.center_phase
        assert float(np.std(excursion)) == pytest.approx(0.05, rel=0.05)

    def test_noise_psd_rises_below_corner(self):
        noise = NoiseProfile(rms=0.05, corner_hz=200.0, seed=9)
        cfg = default_cfg()
        fn = synthesize_demo_signal(cfg, 3000.0, 0.0, noise)
        _, x = sample_timeseries(V6, fn, cfg.fs, 1.0, seed=41)
        series = track(x, V6, cfg)
        freq, psd = spectrum(series, nperseg=2048)
        low = np.mean(psd[(freq >= 20.0) & (freq <= 100.0)])
        mid = np.mean(psd[(freq >= 400.0) & (freq <= 1000.0)])
        assert low > 10.0 * mid


class TestApertureAndToneFit:
    def test_known_gain_value(self):
        cfg = default_cfg()
        gain = aperture_gain(cfg, 3000.0)
        expected = abs(
            math.sin(math.pi * 3000.0 * 100 / 1.0e6)
            / (100 * math.sin(math.pi * 3000.0 / 1.0e6))
        )
        assert gain == pytest.approx(expected, rel=1e-12)
        assert gain == pytest.approx(0.858406, abs=1e-6)

    def test_gain_limits(self):
        cfg = default_cfg()
        assert aperture_gain(cfg, 0.0) == 1.0
        assert aperture_gain(cfg, 1.0) == pytest.approx(1.0, abs=1e-6)

    def test_exact_tone_fit(self):
        fs_est = 1.0e4
        t = np.arange(5000) / fs_est
        series = PhaseTimeSeries(
            t, 0.123 * np.sin(2 * np.pi * 917.0 * t + 0.7) + 0.05, fs_est
        )
        assert tone_amplitude(series, 917.0) == pytest.approx(0.123, rel=1e-6)


class TestConfigValidation:
    def test_band_must_fit_under_estimate_nyquist(self):
        with pytest.raises(ValueError):
            TrackerConfig(fs=1.0e6, window_m=100, band_lo=2000.0, band_hi=5500.0)
        with pytest.raises(ValueError):
            TrackerConfig(fs=1.0e6, window_m=100, band_lo=0.0, band_hi=4000.0)

    def test_bad_window(self):
        with pytest.raises(ValueError):
            TrackerConfig(fs=1.0e6, window_m=0)

    def test_non_finite_series_rejected(self):
        with pytest.raises(ValueError):
            PhaseTimeSeries(np.array([0.0, 1.0]), np.array([0.0, math.nan]), 1.0)
