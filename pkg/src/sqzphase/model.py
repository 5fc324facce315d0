"""Gaussian probe state model and its homodyne measurement statistics.

Conventions used throughout the package:

* quadrature variances are normalized so the vacuum variance is 1;
* optical loss is a single lumped beam-splitter channel of power
  transmission ``eta`` applied before detection;
* excess thermal noise ``xi`` enters both quadratures additively;
* photon numbers count the flux surviving the loss channel, i.e. the
  photons actually interrogating the sample and reaching the detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateStateError",
    "StateModel",
    "QuadratureVariances",
    "variances",
    "quadrature_variance_at",
    "mean_photon_number",
    "squeezing_db",
    "state_for_target_photons",
]

# Slack for the Heisenberg product check; pure states sit exactly on the
# bound and float rounding must not reject them.
_UNCERTAINTY_SLACK = 1e-9


class DegenerateStateError(ValueError):
    """Raised when an operation needs V- < V+ but the state carries no
    phase information (equal variances, e.g. vacuum)."""


@dataclass(frozen=True)
class StateModel:
    """Physical description of the squeezed-vacuum probe.

    r: squeezing parameter, >= 0 (r = 0 is the vacuum)
    eta: power transmission of the lumped loss channel, in (0, 1]
    xi: excess noise added to both quadratures, vacuum units, >= 0
    """

    r: float
    eta: float = 1.0
    xi: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.r) and self.r >= 0.0):
            raise ValueError(f"squeezing parameter must be finite and >= 0, got {self.r}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"transmission must lie in (0, 1], got {self.eta}")
        if not (math.isfinite(self.xi) and self.xi >= 0.0):
            raise ValueError(f"excess noise must be finite and >= 0, got {self.xi}")


@dataclass(frozen=True)
class QuadratureVariances:
    """Squeezed / anti-squeezed quadrature variances in vacuum units.

    The pair (V-, V+) is the full description of the zero-mean Gaussian
    measurement statistics; only 0 < V- <= V+ and the uncertainty product
    V- * V+ >= 1 are required (a noisy state may have V- > 1).
    """

    v_minus: float
    v_plus: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.v_minus) and math.isfinite(self.v_plus)):
            raise ValueError(
                f"variances must be finite, got ({self.v_minus}, {self.v_plus})"
            )
        if not 0.0 < self.v_minus <= self.v_plus:
            raise ValueError(
                f"need 0 < v_minus <= v_plus, got ({self.v_minus}, {self.v_plus})"
            )
        if self.v_minus * self.v_plus < 1.0 - _UNCERTAINTY_SLACK:
            raise ValueError(
                "uncertainty product v_minus * v_plus = "
                f"{self.v_minus * self.v_plus} violates the vacuum-normalized bound of 1"
            )


def variances(state: StateModel) -> QuadratureVariances:
    """Map a physical state to detected quadrature variances.

    Beam-splitter loss mixes in vacuum: V∓ = eta * e^(∓2r) + (1 - eta) + xi.
    """
    loss = 1.0 - state.eta
    return QuadratureVariances(
        v_minus=state.eta * math.exp(-2.0 * state.r) + loss + state.xi,
        v_plus=state.eta * math.exp(2.0 * state.r) + loss + state.xi,
    )


def quadrature_variance_at(vars: QuadratureVariances, phi):
    """Homodyne variance at measurement phase ``phi`` (radians).

    V(phi) = V- cos^2(phi) + V+ sin^2(phi); pi-periodic, defined on all of R
    and monotone non-decreasing on [0, pi/2]. Accepts scalars or arrays.
    """
    c = np.cos(phi)
    s = np.sin(phi)
    return vars.v_minus * c * c + vars.v_plus * s * s


def mean_photon_number(state: StateModel) -> float:
    """Mean photon number reaching the detector: eta * sinh^2(r) + xi / 2."""
    return state.eta * math.sinh(state.r) ** 2 + 0.5 * state.xi


def squeezing_db(vars: QuadratureVariances) -> tuple[float, float]:
    """(squeezing, anti-squeezing) in dB relative to vacuum.

    Positive squeezing dB means noise below vacuum: (-10 log10 V-, 10 log10 V+).
    """
    return (-10.0 * math.log10(vars.v_minus), 10.0 * math.log10(vars.v_plus))


def state_for_target_photons(n_target: float, eta: float = 1.0) -> StateModel:
    """Pure-source state whose detected photon number equals ``n_target``.

    Inverts mean_photon_number at xi = 0: r = asinh(sqrt(n_target / eta)).
    """
    if n_target < 0.0:
        raise ValueError(f"target photon number must be >= 0, got {n_target}")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"transmission must lie in (0, 1], got {eta}")
    return StateModel(r=math.asinh(math.sqrt(n_target / eta)), eta=eta, xi=0.0)
