"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

import math
from typing import Any, Optional

from pydantic import BaseModel, Field, model_validator

from ..model import QuadratureVariances, StateModel


class ProbeSpec(BaseModel):
    """Probe description: either physical (r or photons, plus eta/xi) or
    raw variances (v_minus, v_plus)."""

    r: Optional[float] = None
    photons: Optional[float] = None
    eta: float = 1.0
    xi: float = 0.0
    v_minus: Optional[float] = None
    v_plus: Optional[float] = None

    @model_validator(mode="after")
    def _one_description(self) -> "ProbeSpec":
        has_vars = self.v_minus is not None or self.v_plus is not None
        has_state = self.r is not None or self.photons is not None
        if has_vars:
            if self.v_minus is None or self.v_plus is None:
                raise ValueError("v_minus and v_plus must be given together")
            if has_state:
                raise ValueError("give either (v_minus, v_plus) or (r | photons), not both")
        elif not has_state:
            raise ValueError("probe needs r, photons, or (v_minus, v_plus)")
        elif self.r is not None and self.photons is not None:
            raise ValueError("give either r or photons, not both")
        return self

    def resolve(self) -> tuple[Optional[StateModel], QuadratureVariances]:
        from ..experiments import resolve_state
        from ..model import variances

        if self.v_minus is not None:
            return None, QuadratureVariances(self.v_minus, self.v_plus)
        state = resolve_state(r=self.r, photons=self.photons, eta=self.eta, xi=self.xi)
        return state, variances(state)


class StateInfoResponse(BaseModel):
    r: Optional[float]
    eta: Optional[float]
    xi: Optional[float]
    v_minus: float
    v_plus: float
    mean_photons: Optional[float]
    squeezing_db: float
    antisqueezing_db: float
    optimal_phase: Optional[float]
    max_fisher: float
    sensitivity_per_sample: Optional[float]


class GridSpec(BaseModel):
    """Explicit values, or start/stop/num with linear or log spacing."""

    values: Optional[list[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    num: Optional[int] = None
    spacing: str = "log"

    @model_validator(mode="after")
    def _consistent(self) -> "GridSpec":
        if self.values is None:
            if None in (self.start, self.stop, self.num):
                raise ValueError("grid needs either values or start/stop/num")
            if self.spacing not in ("log", "linear"):
                raise ValueError("spacing must be 'log' or 'linear'")
        return self

    def materialize(self) -> list[float]:
        if self.values is not None:
            return [float(v) for v in self.values]
        import numpy as np

        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.num).tolist()
        return np.linspace(self.start, self.stop, self.num).tolist()


class BoundsRequest(BaseModel):
    photons: GridSpec
    eta: float = 0.89


class BoundsRow(BaseModel):
    n: float
    sigma: dict[str, float]
    fisher: dict[str, float]


class BoundsResponse(BaseModel):
    eta: float
    rows: list[BoundsRow]
    squeezed_noon_crossover: Optional[float]


class CrossoverRequest(BaseModel):
    eta: float = Field(gt=0.0, le=1.0)


class CrossoverResponse(BaseModel):
    eta: float
    photons: float


class SampleBatchRequest(BaseModel):
    probe: ProbeSpec
    phi_true: float
    m: int = Field(ge=1)
    seed: int = 1
    stream: int = 0
    phase_jitter_rms: float = 0.0
    include_samples: bool = False


class SampleBatchResponse(BaseModel):
    m: int
    phi_true: float
    v_minus: float
    v_plus: float
    seed: int
    stream: int
    sum_sq: float
    sample_variance: float
    samples: Optional[list[float]] = None


class PhaseGridSpec(BaseModel):
    lo: float = 0.0
    hi: float = math.pi / 2.0
    k: int = 10000


class PosteriorData(BaseModel):
    """Exactly one of: a batch recipe to simulate, raw samples, or the
    sufficient statistic (sum_sq, m)."""

    phi_true: Optional[float] = None
    m: Optional[int] = None
    seed: int = 1
    stream: int = 0
    samples: Optional[list[float]] = None
    sum_sq: Optional[float] = None

    @model_validator(mode="after")
    def _one_source(self) -> "PosteriorData":
        recipe = self.phi_true is not None
        stat = self.sum_sq is not None
        raw = self.samples is not None
        if recipe + stat + raw != 1:
            raise ValueError("give exactly one of phi_true(+m), samples, or sum_sq(+m)")
        if (recipe or stat) and self.m is None:
            raise ValueError("m is required with phi_true or sum_sq")
        return self


class PosteriorRequest(BaseModel):
    probe: ProbeSpec
    data: PosteriorData
    grid: PhaseGridSpec = PhaseGridSpec()
    include_density: bool = False


class PosteriorResponse(BaseModel):
    map: float
    width: float
    width_fwhm: float
    width_laplace: Optional[float]
    clamped: bool
    m: int
    sum_sq: float
    grid: PhaseGridSpec
    phi: Optional[list[float]] = None
    density: Optional[list[float]] = None


class LimitsRequest(BaseModel):
    photons: GridSpec
    eta: float = 0.89
    seed: int = 1


class SweepPhaseRequest(BaseModel):
    photons: Optional[float] = 1.8
    r: Optional[float] = None
    eta: float = 1.0
    xi: float = 0.0
    m: int = 1000
    trials: int = 200
    phases: Optional[GridSpec] = None
    seed: int = 1
    grid_k: int = 10000


class SweepPhotonsRequest(BaseModel):
    photons: Optional[GridSpec] = None
    eta: float = 0.89
    m: int = 1000
    trials: int = 200
    seed: int = 1
    grid_k: int = 10000


class EstimateRequest(BaseModel):
    probe: Optional[ProbeSpec] = None
    phi_true: Optional[float] = None
    m: int = 1000
    seed: int = 1
    grid: PhaseGridSpec = PhaseGridSpec()
    snapshots: list[int] = Field(default_factory=list)
    export_batch: bool = False
    # imported batch, mutually exclusive with probe simulation
    batch_samples: Optional[list[float]] = None
    batch_phi_true: Optional[float] = None
    batch_v_minus: Optional[float] = None
    batch_v_plus: Optional[float] = None
    batch_seed: Optional[int] = None

    @model_validator(mode="after")
    def _probe_or_batch(self) -> "EstimateRequest":
        if self.batch_samples is not None:
            needed = (self.batch_phi_true, self.batch_v_minus, self.batch_v_plus)
            if any(v is None for v in needed):
                raise ValueError(
                    "an imported batch needs batch_phi_true, batch_v_minus, batch_v_plus"
                )
        elif self.probe is None:
            raise ValueError("give a probe to simulate or an imported batch")
        return self


class TrackRequest(BaseModel):
    photons: float = 6.0
    eta: float = 0.89
    fs: float = 1.0e6
    window_m: int = 100
    duration: float = 0.5
    tone_freq: float = 3000.0
    tone_amp: float = 0.01
    band_lo: float = 2000.0
    band_hi: float = 4000.0
    noise_rms: float = 0.0
    noise_corner: float = 200.0
    seed: int = 1


class RunResponse(BaseModel):
    artifacts: dict[str, str]
    summary: dict[str, Any]


class HealthResponse(BaseModel):
    status: str
    version: str
