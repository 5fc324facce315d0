"""FastAPI application exposing the estimation library.

All computation lives in the core package; handlers translate between the
wire models and library calls. Domain validation errors surface as 422,
non-finite numerical failures as 500 with code "numerical".
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bounds import max_fisher, optimal_phase, squeezed_noon_crossover
from ..estimator import (
    PhaseGrid,
    laplace_width,
    posterior,
    posterior_fwhm,
)
from ..experiments import (
    NumericalError,
    run_estimate,
    run_limits,
    run_sweep_phase,
    run_sweep_photons,
    run_track,
)
from ..model import (
    DegenerateStateError,
    QuadratureVariances,
    mean_photon_number,
    squeezing_db,
)
from ..sampler import QuadratureBatch, sample_batch, sufficient_statistic
from . import schemas

__all__ = ["create_app"]


def create_app() -> FastAPI:
    app = FastAPI(
        title="sqzphase",
        version=__version__,
        description=(
            "Squeezed-vacuum homodyne phase estimation: probe statistics, "
            "sensitivity limits, sampling, Bayesian inference and tracking "
            "experiments."
        ),
    )

    @app.exception_handler(ValueError)
    async def _domain_error(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(NumericalError)
    async def _numerical_error(request: Request, exc: NumericalError) -> JSONResponse:
        return JSONResponse(
            status_code=500,
            content={"detail": {"code": "numerical", "message": str(exc)}},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/state/info", response_model=schemas.StateInfoResponse)
    def state_info(probe: schemas.ProbeSpec) -> schemas.StateInfoResponse:
        state, v = probe.resolve()
        sq, asq = squeezing_db(v)
        degenerate = not v.v_minus < v.v_plus
        fisher = max_fisher(v)
        return schemas.StateInfoResponse(
            r=state.r if state else None,
            eta=state.eta if state else None,
            xi=state.xi if state else None,
            v_minus=v.v_minus,
            v_plus=v.v_plus,
            mean_photons=mean_photon_number(state) if state else None,
            squeezing_db=sq,
            antisqueezing_db=asq,
            optimal_phase=None if degenerate else optimal_phase(v),
            max_fisher=fisher,
            sensitivity_per_sample=None if fisher == 0.0 else 1.0 / math.sqrt(fisher),
        )

    @app.post("/bounds/table", response_model=schemas.BoundsResponse)
    def bounds_table(req: schemas.BoundsRequest) -> schemas.BoundsResponse:
        from ..bounds import build_bound_table

        table = build_bound_table(req.photons.materialize(), req.eta)
        rows = [
            schemas.BoundsRow(
                n=float(table.photons[i]),
                sigma={k.value: float(col[i]) for k, col in table.sensitivity.items()},
                fisher={k.value: float(col[i]) for k, col in table.fisher.items()},
            )
            for i in range(len(table))
        ]
        try:
            crossover = squeezed_noon_crossover(req.eta)
        except ValueError:
            crossover = None
        return schemas.BoundsResponse(
            eta=req.eta, rows=rows, squeezed_noon_crossover=crossover
        )

    @app.post("/bounds/crossover", response_model=schemas.CrossoverResponse)
    def bounds_crossover(req: schemas.CrossoverRequest) -> schemas.CrossoverResponse:
        return schemas.CrossoverResponse(
            eta=req.eta, photons=squeezed_noon_crossover(req.eta)
        )

    @app.post("/sample/batch", response_model=schemas.SampleBatchResponse)
    def sample_batch_endpoint(req: schemas.SampleBatchRequest) -> schemas.SampleBatchResponse:
        _, v = req.probe.resolve()
        batch = sample_batch(
            v,
            req.phi_true,
            req.m,
            req.seed,
            stream=req.stream,
            phase_jitter_rms=req.phase_jitter_rms,
        )
        sum_sq = sufficient_statistic(batch)
        return schemas.SampleBatchResponse(
            m=batch.m,
            phi_true=batch.phi_true,
            v_minus=v.v_minus,
            v_plus=v.v_plus,
            seed=req.seed,
            stream=req.stream,
            sum_sq=sum_sq,
            sample_variance=sum_sq / batch.m,
            samples=batch.samples.tolist() if req.include_samples else None,
        )

    @app.post("/estimate/posterior", response_model=schemas.PosteriorResponse)
    def estimate_posterior(req: schemas.PosteriorRequest) -> schemas.PosteriorResponse:
        _, v = req.probe.resolve()
        grid = PhaseGrid(req.grid.lo, req.grid.hi, req.grid.k)
        d = req.data
        if d.samples is not None:
            data = np.asarray(d.samples, dtype=float)
        elif d.sum_sq is not None:
            data = (d.sum_sq, d.m)
        else:
            data = sample_batch(v, d.phi_true, d.m, d.seed, stream=d.stream)
        post = posterior(v, data, grid)
        try:
            lap = laplace_width(v, post.sum_sq, post.m_used)
            lap = None if math.isnan(lap) else lap
        except DegenerateStateError:
            lap = None
        return schemas.PosteriorResponse(
            map=post.map_phase,
            width=post.credible_width,
            width_fwhm=posterior_fwhm(post),
            width_laplace=lap,
            clamped=post.clamped,
            m=post.m_used,
            sum_sq=post.sum_sq,
            grid=req.grid,
            phi=post.grid.points().tolist() if req.include_density else None,
            density=post.density().tolist() if req.include_density else None,
        )

    @app.post("/experiments/limits", response_model=schemas.RunResponse)
    def experiments_limits(req: schemas.LimitsRequest) -> schemas.RunResponse:
        res = run_limits(req.photons.materialize(), eta=req.eta, seed=req.seed)
        return schemas.RunResponse(artifacts=res.artifacts, summary=res.summary)

    @app.post("/experiments/sweep-phase", response_model=schemas.RunResponse)
    def experiments_sweep_phase(req: schemas.SweepPhaseRequest) -> schemas.RunResponse:
        res = run_sweep_phase(
            photons=req.photons,
            r=req.r,
            eta=req.eta,
            xi=req.xi,
            m=req.m,
            trials=req.trials,
            phases=req.phases.materialize() if req.phases else None,
            seed=req.seed,
            grid_k=req.grid_k,
        )
        return schemas.RunResponse(artifacts=res.artifacts, summary=res.summary)

    @app.post("/experiments/sweep-photons", response_model=schemas.RunResponse)
    def experiments_sweep_photons(req: schemas.SweepPhotonsRequest) -> schemas.RunResponse:
        res = run_sweep_photons(
            photons=req.photons.materialize() if req.photons else None,
            eta=req.eta,
            m=req.m,
            trials=req.trials,
            seed=req.seed,
            grid_k=req.grid_k,
        )
        return schemas.RunResponse(artifacts=res.artifacts, summary=res.summary)

    @app.post("/experiments/estimate", response_model=schemas.RunResponse)
    def experiments_estimate(req: schemas.EstimateRequest) -> schemas.RunResponse:
        batch = None
        if req.batch_samples is not None:
            batch = QuadratureBatch(
                samples=np.asarray(req.batch_samples, dtype=float),
                phi_true=req.batch_phi_true,
                vars=QuadratureVariances(req.batch_v_minus, req.batch_v_plus),
                seed=req.batch_seed if req.batch_seed is not None else 0,
            )
            res = run_estimate(
                grid_lo=req.grid.lo,
                grid_hi=req.grid.hi,
                grid_k=req.grid.k,
                snapshots=req.snapshots,
                export_batch=req.export_batch,
                batch=batch,
            )
        else:
            probe = req.probe
            if probe.v_minus is not None:
                raise ValueError(
                    "the estimate experiment simulates a physical probe; "
                    "give r or photons (use /estimate/posterior for raw variances)"
                )
            res = run_estimate(
                photons=probe.photons,
                r=probe.r,
                eta=probe.eta,
                xi=probe.xi,
                phi_true=req.phi_true,
                m=req.m,
                seed=req.seed,
                grid_lo=req.grid.lo,
                grid_hi=req.grid.hi,
                grid_k=req.grid.k,
                snapshots=req.snapshots,
                export_batch=req.export_batch,
            )
        return schemas.RunResponse(artifacts=res.artifacts, summary=res.summary)

    @app.post("/experiments/track", response_model=schemas.RunResponse)
    def experiments_track(req: schemas.TrackRequest) -> schemas.RunResponse:
        res = run_track(
            photons=req.photons,
            eta=req.eta,
            fs=req.fs,
            window_m=req.window_m,
            duration=req.duration,
            tone_freq=req.tone_freq,
            tone_amp=req.tone_amp,
            band_lo=req.band_lo,
            band_hi=req.band_hi,
            noise_rms=req.noise_rms,
            noise_corner=req.noise_corner,
            seed=req.seed,
        )
        return schemas.RunResponse(artifacts=res.artifacts, summary=res.summary)

    return app
