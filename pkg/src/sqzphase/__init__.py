"""Squeezed-vacuum homodyne phase estimation toolkit.

Core library: Gaussian probe model (model), Fisher-information sensitivity
limits (bounds), seeded quadrature sampling (sampler), grid Bayesian phase
inference (estimator) and windowed tracking of dynamic phase signals
(tracker). The experiments module packages these into reproducible runs; a
FastAPI service (sqzphase.service) exposes them over HTTP and the bundled
CLI (sqzphase.cli) is a thin client of that service.
"""

__version__ = "0.1.0"

from .model import (
    DegenerateStateError,
    QuadratureVariances,
    StateModel,
    mean_photon_number,
    quadrature_variance_at,
    squeezing_db,
    state_for_target_photons,
    variances,
)
from .bounds import (
    BoundTable,
    SchemeKind,
    build_bound_table,
    fisher_at_phase,
    max_fisher,
    max_fisher_at_photons,
    optimal_phase,
    sensitivity_displaced_squeezed,
    sensitivity_noon_ideal,
    sensitivity_noon_lossy,
    sensitivity_snl,
    sensitivity_squeezed_ideal,
    squeezed_noon_crossover,
)
from .sampler import (
    QuadratureBatch,
    load_batch,
    sample_batch,
    sample_timeseries,
    save_batch,
    standard_normals,
    sufficient_statistic,
)
from .estimator import (
    MonteCarloResult,
    PhaseGrid,
    PhasePosterior,
    estimate_variance_monte_carlo,
    initial_posterior,
    laplace_width,
    log_likelihood,
    map_estimate,
    posterior,
    posterior_fwhm,
    streaming_update,
)
from .tracker import (
    NoiseProfile,
    PhaseTimeSeries,
    TrackerConfig,
    aperture_gain,
    bandpass,
    spectrum,
    synthesize_demo_signal,
    tone_amplitude,
    track,
)
