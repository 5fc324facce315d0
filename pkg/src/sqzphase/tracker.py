"""Windowed real-time estimation of a dynamically varying phase.

A raw quadrature record at sample rate ``fs`` is cut into consecutive
non-overlapping windows of ``window_m`` samples; each window yields one
closed-form MAP estimate, reported relative to the preset measurement
phase at the window-midpoint time. The estimate stream (rate
fs / window_m) then feeds zero-phase bandpass filtering and Welch spectra.

Note on amplitudes: averaging a tone over a finite window attenuates it by
the aperture gain sin(pi f m / fs) / (m sin(pi f / fs)). ``aperture_gain``
exposes that factor so narrowband amplitude measurements at a known
frequency can be corrected; the filtering here is zero-phase
(forward-backward), unlike a causal real-time chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, sosfiltfilt, welch

from .model import QuadratureVariances
from .sampler import uniforms

__all__ = [
    "TrackerConfig",
    "PhaseTimeSeries",
    "NoiseProfile",
    "track",
    "bandpass",
    "spectrum",
    "synthesize_demo_signal",
    "aperture_gain",
    "tone_amplitude",
]

_SPECTRUM_WINDOWS = ("hann", "boxcar")


@dataclass(frozen=True)
class TrackerConfig:
    """Windowing, preset phase and analysis band for the tracker.

    ``center_phase`` is the preset measurement phase the estimates are
    referenced to (pick the optimal phase of the probe for best
    sensitivity). The estimate rate is fs / window_m and must oversample
    the signal band: band_hi < fs / (2 window_m).
    """

    fs: float = 1.0e6
    window_m: int = 100
    center_phase: float = 0.0
    band_lo: float = 2000.0
    band_hi: float = 4000.0
    spectrum_window: str = "hann"

    def __post_init__(self) -> None:
        if self.fs <= 0.0:
            raise ValueError("sample rate must be > 0")
        if self.window_m < 1:
            raise ValueError("window_m must be >= 1")
        if not 0.0 < self.band_lo < self.band_hi < self.estimate_nyquist:
            raise ValueError(
                f"need 0 < band_lo < band_hi < {self.estimate_nyquist} Hz "
                f"(estimate-rate Nyquist), got [{self.band_lo}, {self.band_hi}]"
            )
        if self.spectrum_window not in _SPECTRUM_WINDOWS:
            raise ValueError(f"spectrum_window must be one of {_SPECTRUM_WINDOWS}")

    @property
    def estimate_rate(self) -> float:
        return self.fs / self.window_m

    @property
    def estimate_nyquist(self) -> float:
        return 0.5 * self.estimate_rate


@dataclass(frozen=True)
class PhaseTimeSeries:
    """Phase shifts relative to the preset measurement phase, on a uniform
    time base of one estimate per window."""

    t: np.ndarray
    delta_phi: np.ndarray
    fs_est: float

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        d = np.asarray(self.delta_phi, dtype=float)
        if t.shape != d.shape or t.ndim != 1:
            raise ValueError("t and delta_phi must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(d))):
            raise ValueError("phase time series must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "delta_phi", d)

    def __len__(self) -> int:
        return int(self.t.size)


def track(
    x: np.ndarray,
    vars: QuadratureVariances,
    cfg: TrackerConfig,
) -> PhaseTimeSeries:
    """Per-window MAP phase estimates of a raw quadrature record.

    Windows are consecutive and non-overlapping; a trailing partial window
    is dropped. Each estimate is the closed-form MAP of that window's sum
    of squares, timestamped at the window midpoint, minus
    ``cfg.center_phase``.
    """
    x = np.asarray(x, dtype=float)
    w = cfg.window_m
    n_win = x.size // w
    if n_win < 1:
        raise ValueError(f"input ({x.size} samples) shorter than one window ({w})")
    windows = x[: n_win * w].reshape(n_win, w)
    ratio = np.einsum("ij,ij->i", windows, windows) / w
    span = vars.v_plus - vars.v_minus
    if span <= 0.0:
        raise ValueError("tracking needs v_minus < v_plus")
    # clip implements the boundary clamps: ratio <= V- -> 0, >= V+ -> pi/2
    arg = np.clip((vars.v_plus + vars.v_minus - 2.0 * ratio) / span, -1.0, 1.0)
    estimates = 0.5 * np.arccos(arg)
    t = (np.arange(n_win) * w + 0.5 * (w - 1)) / cfg.fs
    return PhaseTimeSeries(t, estimates - cfg.center_phase, cfg.estimate_rate)


def bandpass(
    series: PhaseTimeSeries, band_lo: float, band_hi: float
) -> PhaseTimeSeries:
    """Zero-phase 4th-order Butterworth bandpass of the estimate stream.

    Two biquad sections applied forward and backward (sosfiltfilt), so the
    passband is amplitude-true and the output is phase-aligned with the
    input; band edges sit at -6 dB due to the double pass.
    """
    if not 0.0 < band_lo < band_hi < 0.5 * series.fs_est:
        raise ValueError(
            f"need 0 < band_lo < band_hi < {0.5 * series.fs_est} Hz, "
            f"got [{band_lo}, {band_hi}]"
        )
    sos = butter(2, [band_lo, band_hi], btype="bandpass", fs=series.fs_est, output="sos")
    filtered = sosfiltfilt(sos, series.delta_phi)
    return PhaseTimeSeries(series.t, filtered, series.fs_est)


def spectrum(
    series: PhaseTimeSeries,
    nperseg: int | None = None,
    window: str = "hann",
) -> tuple[np.ndarray, np.ndarray]:
    """Welch power spectral density of the estimate stream, rad^2/Hz.

    Hann-tapered averaged periodogram with 50% overlap and per-segment mean
    removal, so the integrated PSD matches the time-domain variance.
    """
    if len(series) < 16:
        raise ValueError(f"need at least 16 estimates, got {len(series)}")
    if nperseg is None:
        nperseg = min(1024, len(series))
    freq, psd = welch(
        series.delta_phi,
        fs=series.fs_est,
        window=window,
        nperseg=nperseg,
        detrend="constant",
        scaling="density",
    )
    return freq, psd


@dataclass(frozen=True)
class NoiseProfile:
    """Low-frequency phase noise for the demo signal.

    Synthesized as ``n_components`` equally spaced tones below
    ``corner_hz`` with amplitudes proportional to 1 / sqrt(f) (so the PSD
    rises like 1/f toward low frequencies) and Philox-derived phases;
    ``rms`` fixes the total root-mean-square phase excursion.
    """

    rms: float = 0.0
    corner_hz: float = 200.0
    n_components: int = 32
    seed: int = 0
    stream: int = 0

    def __post_init__(self) -> None:
        if self.rms < 0.0:
            raise ValueError("noise rms must be >= 0")
        if self.corner_hz <= 0.0 or self.n_components < 1:
            raise ValueError("need corner_hz > 0 and n_components >= 1")


def synthesize_demo_signal(
    cfg: TrackerConfig,
    tone_freq: float,
    tone_amp: float,
    noise: NoiseProfile = NoiseProfile(),
):
    """Phase-signal generator: preset phase + tone + low-frequency noise.

    Returns a callable phi(t) for sample_timeseries. The tone must sit
    below the estimate-rate Nyquist so the tracker can resolve it; noise
    components land below ``noise.corner_hz``.
    """
    if tone_amp != 0.0 and not 0.0 < tone_freq < cfg.estimate_nyquist:
        raise ValueError(
            f"tone at {tone_freq} Hz outside the resolvable band "
            f"(0, {cfg.estimate_nyquist}) Hz"
        )
    center = cfg.center_phase

    if noise.rms > 0.0:
        k = noise.n_components
        freqs = noise.corner_hz * np.arange(1, k + 1) / k
        weights = 1.0 / np.sqrt(freqs)
        # sum of k sinusoids: total variance is sum(a_j^2) / 2 = rms^2
        amps = noise.rms * weights / math.sqrt(0.5 * float(np.sum(weights**2)))
        phases = (2.0 * math.pi) * uniforms(noise.seed, noise.stream, k)
    else:
        freqs = amps = phases = None

    def phase_fn(t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, center)
        if tone_amp != 0.0:
            out += tone_amp * np.sin((2.0 * math.pi * tone_freq) * t)
        if amps is not None:
            for f, a, p in zip(freqs, amps, phases):
                out += a * np.sin((2.0 * math.pi * f) * t + p)
        return out

    return phase_fn


def aperture_gain(cfg: TrackerConfig, freq: float) -> float:
    """Attenuation of a tone at ``freq`` caused by averaging over one
    estimation window: |sin(pi f m / fs) / (m sin(pi f / fs))|."""
    if freq == 0.0:
        return 1.0
    num = math.sin(math.pi * freq * cfg.window_m / cfg.fs)
    den = cfg.window_m * math.sin(math.pi * freq / cfg.fs)
    return abs(num / den)


def tone_amplitude(series: PhaseTimeSeries, freq: float) -> float:
    """Amplitude of the tone at ``freq`` by least-squares fit of
    sin/cos/constant to the series (robust to partial cycles)."""
    w = 2.0 * math.pi * freq * series.t
    design = np.column_stack([np.sin(w), np.cos(w), np.ones_like(w)])
    coef, *_ = np.linalg.lstsq(design, series.delta_phi, rcond=None)
    return float(math.hypot(coef[0], coef[1]))
