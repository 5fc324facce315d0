"""Reproducible synthetic homodyne measurement records.

Randomness contract: all draws come from the Philox-4x64-10 counter-based
generator keyed by the pair (seed, stream). Uniforms are the top 53 bits
of each 64-bit word mapped to [0, 1); Gaussians are produced from uniform
pairs by the Box-Muller transform. The same (seed, stream) therefore
reproduces the same samples bit for bit within a platform, and the
construction is simple enough to re-create statistically elsewhere.
Distinct streams are independent, so batches can be generated and consumed
concurrently without shared state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import QuadratureVariances, quadrature_variance_at

__all__ = [
    "QuadratureBatch",
    "uniforms",
    "standard_normals",
    "sample_batch",
    "sufficient_statistic",
    "sample_timeseries",
    "save_batch",
    "load_batch",
]

# Streams above this offset are reserved for per-sample phase jitter so a
# jittered batch reuses the exact quadrature deviates of its clean twin.
JITTER_STREAM_OFFSET = 1 << 48


def uniforms(seed: int, stream: int, count: int) -> np.ndarray:
    """``count`` uniforms in [0, 1) from the (seed, stream) Philox stream."""
    if not (0 <= seed < 2**64 and 0 <= stream < 2**64):
        raise ValueError("seed and stream must be unsigned 64-bit integers")
    key = np.array([seed, stream], dtype=np.uint64)
    raw = np.random.Philox(key=key).random_raw(count)
    return (raw >> np.uint64(11)) * 2.0**-53


def standard_normals(seed: int, stream: int, count: int) -> np.ndarray:
    """``count`` standard normal deviates via Box-Muller over Philox.

    Pairs (u1, u2) map to r cos(2 pi u2), r sin(2 pi u2) with
    r = sqrt(-2 ln(1 - u1)); the 1 - u1 form keeps the log argument in
    (0, 1].
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    pairs = (count + 1) // 2
    u = uniforms(seed, stream, 2 * pairs)
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = (2.0 * math.pi) * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count]


@dataclass(frozen=True)
class QuadratureBatch:
    """A set of homodyne outcomes drawn at one true phase.

    ``samples`` are in vacuum units; ``seed`` (with the generating stream)
    is what reproduces them.
    """

    samples: np.ndarray
    phi_true: float
    vars: QuadratureVariances
    seed: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("a batch needs at least one sample")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def m(self) -> int:
        return int(self.samples.size)

    def sample_mean_within_bound(self) -> bool:
        """Sanity check, not a hard reject: the squared sample mean of an
        honest zero-mean batch should not exceed 10 V(phi_true) / m."""
        v = float(quadrature_variance_at(self.vars, self.phi_true))
        return float(np.mean(self.samples)) ** 2 <= 10.0 * v / self.m


def sample_batch(
    vars: QuadratureVariances,
    phi_true: float,
    m: int,
    seed: int,
    stream: int = 0,
    phase_jitter_rms: float = 0.0,
) -> QuadratureBatch:
    """Draw ``m`` independent outcomes of the zero-mean Gaussian with
    variance V(phi_true).

    Samples are the standard normals of stream (seed, stream) scaled by
    sqrt(V), so a batch at one variance is the unit-variance batch of the
    same stream rescaled. ``phase_jitter_rms`` > 0 adds Gaussian jitter to
    the per-sample phase (from a reserved companion stream) to emulate lock
    residuals; the quadrature deviates are unchanged by the jitter setting.
    """
    if m < 1:
        raise ValueError("batch size m must be >= 1")
    z = standard_normals(seed, stream, m)
    if phase_jitter_rms > 0.0:
        jitter = standard_normals(seed, stream + JITTER_STREAM_OFFSET, m)
        phases = phi_true + phase_jitter_rms * jitter
        v = quadrature_variance_at(vars, phases)
    else:
        v = quadrature_variance_at(vars, phi_true)
    return QuadratureBatch(np.sqrt(v) * z, phi_true, vars, seed)


def sufficient_statistic(batch) -> float:
    """Sum of squared outcomes, the only data dependence of the likelihood.

    Accepts a QuadratureBatch or a plain sample array.
    """
    x = batch.samples if isinstance(batch, QuadratureBatch) else np.asarray(batch, float)
    return float(np.dot(x, x))


def sample_timeseries(
    vars: QuadratureVariances,
    phase_fn,
    fs: float,
    duration: float,
    seed: int,
    stream: int = 0,
    phase_jitter_rms: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample a quadrature record while the phase follows ``phase_fn``.

    ``phase_fn`` maps a time array (seconds) to phase (radians); a scalar
    return is broadcast. Sample i is taken at t = i / fs with variance
    V(phase_fn(t)). Returns (t, x).
    """
    if fs <= 0.0 or duration <= 0.0:
        raise ValueError("sample rate and duration must be > 0")
    n = int(math.floor(fs * duration + 1e-9))
    if n < 1:
        raise ValueError("duration * fs < 1: no samples to draw")
    t = np.arange(n) / fs
    phi = np.asarray(phase_fn(t), dtype=float)
    if phi.ndim == 0:
        phi = np.full(n, float(phi))
    if phase_jitter_rms > 0.0:
        phi = phi + phase_jitter_rms * standard_normals(
            seed, stream + JITTER_STREAM_OFFSET, n
        )
    v = quadrature_variance_at(vars, phi)
    x = np.sqrt(v) * standard_normals(seed, stream, n)
    return t, x


def save_batch(batch: QuadratureBatch, csv_path, meta_path) -> None:
    """Write a batch as ``index,x`` CSV plus a JSON metadata sidecar."""
    lines = ["index,x"]
    lines.extend(f"{i},{x!r}" for i, x in enumerate(batch.samples.tolist()))
    Path(csv_path).write_text("\n".join(lines) + "\n")
    meta = {
        "m": batch.m,
        "phi_true": batch.phi_true,
        "v_minus": batch.vars.v_minus,
        "v_plus": batch.vars.v_plus,
        "seed": batch.seed,
    }
    Path(meta_path).write_text(json.dumps(meta, indent=2) + "\n")


def load_batch(csv_path, meta_path) -> QuadratureBatch:
    """Read a batch saved by save_batch; samples round-trip exactly."""
    meta = json.loads(Path(meta_path).read_text())
    rows = Path(csv_path).read_text().strip().splitlines()
    if not rows or rows[0].strip() != "index,x":
        raise ValueError(f"{csv_path}: expected an 'index,x' header")
    samples = np.array([float(row.split(",")[1]) for row in rows[1:]])
    if samples.size != int(meta["m"]):
        raise ValueError(
            f"{csv_path}: {samples.size} samples but sidecar says m={meta['m']}"
        )
    return QuadratureBatch(
        samples=samples,
        phi_true=float(meta["phi_true"]),
        vars=QuadratureVariances(float(meta["v_minus"]), float(meta["v_plus"])),
        seed=int(meta["seed"]),
    )
