"""Grid-based Bayesian phase inference from quadrature records.

The posterior lives on a uniform grid over [0, pi/2] (the prior support),
is normalized by trapezoidal quadrature in log space, and exposes both the
MAP phase and the posterior standard deviation as the uncertainty width.
Because the likelihood depends on the data only through (sum of squares,
count), batch and streaming updates agree exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .bounds import fisher_at_phase
from .model import DegenerateStateError, QuadratureVariances, quadrature_variance_at
from .sampler import QuadratureBatch, standard_normals, sufficient_statistic

__all__ = [
    "PhaseGrid",
    "PhasePosterior",
    "MonteCarloResult",
    "log_likelihood",
    "posterior",
    "initial_posterior",
    "streaming_update",
    "map_estimate",
    "laplace_width",
    "posterior_fwhm",
    "estimate_variance_monte_carlo",
    "posterior_to_csv",
    "estimate_summary",
    "estimate_summary_json",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform phase grid carrying the prior support (default [0, pi/2])."""

    lo: float = 0.0
    hi: float = math.pi / 2.0
    k: int = 10000

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.k < 2:
            raise ValueError(f"need at least 2 grid points, got {self.k}")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.k - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.k)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.k, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w


@dataclass(frozen=True)
class PhasePosterior:
    """Immutable snapshot of the discretized posterior over the phase.

    ``log_density`` is normalized so exp(log_density) integrates to 1 by
    the trapezoidal rule; ``credible_width`` is the posterior standard
    deviation; ``map_phase`` is the lowest-index grid argmax. ``vars`` and
    ``sum_sq`` ride along so streaming updates can continue from here.
    """

    grid: PhaseGrid
    log_density: np.ndarray
    map_phase: float
    credible_width: float
    m_used: int
    sum_sq: float
    vars: QuadratureVariances

    def density(self) -> np.ndarray:
        return np.exp(self.log_density)

    @property
    def clamped(self) -> bool:
        return self.map_phase <= self.grid.lo or self.map_phase >= self.grid.hi


def log_likelihood(vars: QuadratureVariances, phi, sum_sq: float, m: int):
    """Batch log-likelihood through the sufficient statistic:
    -(m/2) ln(2 pi V(phi)) - sum_sq / (2 V(phi)). Accepts array ``phi``."""
    if m < 1:
        raise ValueError("need m >= 1 samples")
    if sum_sq < 0.0:
        raise ValueError("sum of squares cannot be negative")
    v = quadrature_variance_at(vars, phi)
    return -0.5 * m * (_LOG_2PI + np.log(v)) - sum_sq / (2.0 * v)


def _finalize(
    grid: PhaseGrid,
    unnormalized: np.ndarray,
    m_used: int,
    sum_sq: float,
    vars: QuadratureVariances,
) -> PhasePosterior:
    """Normalize a log-density by trapezoidal log-sum-exp and summarize."""
    phis = grid.points()
    log_w = np.log(grid.trapezoid_weights())
    log_norm = logsumexp(unnormalized + log_w)
    log_density = unnormalized - log_norm
    idx = int(np.argmax(log_density))  # lowest-index maximizer on ties
    p = np.exp(log_density)
    w = grid.trapezoid_weights()
    mean = float(np.sum(w * p * phis))
    var = float(np.sum(w * p * (phis - mean) ** 2))
    return PhasePosterior(
        grid=grid,
        log_density=log_density,
        map_phase=float(phis[idx]),
        credible_width=math.sqrt(max(var, 0.0)),
        m_used=m_used,
        sum_sq=sum_sq,
        vars=vars,
    )


def _as_sufficient(data) -> tuple[float, int]:
    if isinstance(data, QuadratureBatch):
        return sufficient_statistic(data), data.m
    if isinstance(data, tuple) and len(data) == 2:
        return float(data[0]), int(data[1])
    x = np.asarray(data, dtype=float)
    return float(np.dot(x, x)), int(x.size)


def posterior(
    vars: QuadratureVariances,
    data,
    grid: PhaseGrid = PhaseGrid(),
    log_prior=None,
) -> PhasePosterior:
    """Posterior over the phase given a batch, sample array, or (sum_sq, m).

    The prior is uniform on the grid support unless ``log_prior`` (callable
    on the grid points) is supplied; either way the density is renormalized
    on the grid.
    """
    sum_sq, m = _as_sufficient(data)
    phis = grid.points()
    ll = log_likelihood(vars, phis, sum_sq, m)
    if log_prior is not None:
        ll = ll + log_prior(phis)
    return _finalize(grid, ll, m, sum_sq, vars)


def initial_posterior(
    vars: QuadratureVariances,
    grid: PhaseGrid = PhaseGrid(),
    log_prior=None,
) -> PhasePosterior:
    """The m = 0 snapshot (the normalized prior), for streaming updates."""
    base = np.zeros(grid.k) if log_prior is None else np.asarray(log_prior(grid.points()))
    return _finalize(grid, base, 0, 0.0, vars)


def streaming_update(post: PhasePosterior, x: float) -> PhasePosterior:
    """Absorb one quadrature outcome and return the renormalized posterior.

    Chaining single-sample updates reproduces the batch posterior on the
    same data (the likelihood factorizes), so the order of absorption does
    not matter.
    """
    phis = post.grid.points()
    v = quadrature_variance_at(post.vars, phis)
    ll_one = -0.5 * (_LOG_2PI + np.log(v)) - (x * x) / (2.0 * v)
    return _finalize(
        post.grid,
        post.log_density + ll_one,
        post.m_used + 1,
        post.sum_sq + x * x,
        post.vars,
    )


def map_estimate(vars: QuadratureVariances, sum_sq: float, m: int) -> float:
    """Closed-form MAP phase under the flat prior on [0, pi/2].

    The unconstrained maximizer satisfies V(phi) = sum_sq / m, inverted as
    phi = arccos((V+ + V- - 2 sum_sq/m) / (V+ - V-)) / 2 and clamped to the
    prior support when sum_sq/m falls outside [V-, V+].
    """
    if not vars.v_minus < vars.v_plus:
        raise DegenerateStateError("MAP phase undefined for equal variances")
    if m < 1:
        raise ValueError("need m >= 1 samples")
    ratio = sum_sq / m
    if ratio <= vars.v_minus:
        return 0.0
    if ratio >= vars.v_plus:
        return math.pi / 2.0
    arg = (vars.v_plus + vars.v_minus - 2.0 * ratio) / (vars.v_plus - vars.v_minus)
    return 0.5 * math.acos(arg)


def laplace_width(vars: QuadratureVariances, sum_sq: float, m: int) -> float:
    """Gaussian-approximation width from the log-likelihood curvature at the
    closed-form MAP, 1 / sqrt(-l''(phi_hat)) = 1 / sqrt(m F(phi_hat)).

    Returns nan when the estimate clamps to a boundary, where the quadratic
    approximation does not apply; the posterior standard deviation is the
    robust width there.
    """
    phi_hat = map_estimate(vars, sum_sq, m)
    if phi_hat <= 0.0 or phi_hat >= math.pi / 2.0:
        return math.nan
    return 1.0 / math.sqrt(m * fisher_at_phase(vars, phi_hat))


def posterior_fwhm(post: PhasePosterior) -> float:
    """Full width at half maximum of the posterior density, by linear
    interpolation of the half-max crossings (boundary-truncated)."""
    p = post.density()
    half = 0.5 * float(p.max())
    phis = post.grid.points()
    above = p >= half

    idx = int(np.argmax(p))
    lo = phis[0]
    for i in range(idx, 0, -1):
        if not above[i - 1]:
            frac = (half - p[i - 1]) / (p[i] - p[i - 1])
            lo = phis[i - 1] + frac * (phis[i] - phis[i - 1])
            break
    hi = phis[-1]
    for i in range(idx, post.grid.k - 1):
        if not above[i + 1]:
            frac = (p[i] - half) / (p[i] - p[i + 1])
            hi = phis[i] + frac * (phis[i + 1] - phis[i])
            break
    return float(hi - lo)


@dataclass(frozen=True)
class MonteCarloResult:
    """Summary of repeated seeded estimation trials at one true phase."""

    mean: float
    variance: float
    clamped_fraction: float
    mean_width: float | None
    informative: bool
    m: int
    trials: int


def estimate_variance_monte_carlo(
    vars: QuadratureVariances,
    phi_true: float,
    m: int,
    trials: int,
    seed: int,
    stream0: int = 0,
    with_width: bool = False,
    grid: PhaseGrid = PhaseGrid(),
) -> MonteCarloResult:
    """Mean and variance of MAP estimates over independent seeded batches.

    Trial i draws from stream (seed, stream0 + i), so trials are
    embarrassingly parallel and the result is independent of evaluation
    order. For a degenerate probe (V- = V+) the posterior stays flat; the
    result is flagged non-informative and estimates sit at the grid origin.
    ``with_width`` additionally averages the posterior standard deviation
    over trials (it costs a grid evaluation per trial).
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    v_true = float(quadrature_variance_at(vars, phi_true))
    informative = vars.v_minus < vars.v_plus

    sums = np.empty(trials)
    for i in range(trials):
        z = standard_normals(seed, stream0 + i, m)
        sums[i] = v_true * float(np.dot(z, z))

    if informative:
        ratio = sums / m
        span = vars.v_plus - vars.v_minus
        arg = np.clip((vars.v_plus + vars.v_minus - 2.0 * ratio) / span, -1.0, 1.0)
        estimates = 0.5 * np.arccos(arg)
    else:
        estimates = np.full(trials, grid.lo)

    clamped = float(np.mean((estimates <= 0.0) | (estimates >= math.pi / 2.0)))
    mean_width = None
    if with_width:
        widths = [
            posterior(vars, (float(s), m), grid).credible_width for s in sums
        ]
        mean_width = float(np.mean(widths))
    return MonteCarloResult(
        mean=float(np.mean(estimates)),
        variance=float(np.var(estimates, ddof=1)),
        clamped_fraction=clamped if informative else 0.0,
        mean_width=mean_width,
        informative=informative,
        m=m,
        trials=trials,
    )


def posterior_to_csv(post: PhasePosterior) -> str:
    """Render the posterior as ``phi,density`` rows."""
    lines = ["phi,density"]
    lines.extend(
        f"{phi!r},{p!r}"
        for phi, p in zip(post.grid.points().tolist(), post.density().tolist())
    )
    return "\n".join(lines) + "\n"


def estimate_summary(post: PhasePosterior) -> dict:
    """The fixed estimate-summary payload: map, width, m, clamped."""
    return {
        "map": post.map_phase,
        "width": post.credible_width,
        "m": post.m_used,
        "clamped": post.clamped,
    }


def estimate_summary_json(post: PhasePosterior) -> str:
    return json.dumps(estimate_summary(post), sort_keys=True, indent=2) + "\n"
