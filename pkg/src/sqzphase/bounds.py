"""Fisher information of the homodyne measurement and sensitivity limits.

All Fisher values are per single quadrature sample, in rad^-2; all
sensitivities are per single sample, in radians. An M-sample estimate has
variance lower bound 1 / (M * F), i.e. the per-sample sensitivity divided
by sqrt(M).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .model import (
    DegenerateStateError,
    QuadratureVariances,
    quadrature_variance_at,
    state_for_target_photons,
    variances,
)

__all__ = [
    "SchemeKind",
    "BoundTable",
    "fisher_at_phase",
    "optimal_phase",
    "max_fisher",
    "max_fisher_at_photons",
    "sensitivity_squeezed_ideal",
    "sensitivity_snl",
    "sensitivity_noon_ideal",
    "sensitivity_noon_lossy",
    "sensitivity_displaced_squeezed",
    "squeezed_noon_crossover",
    "build_bound_table",
]


class SchemeKind(Enum):
    """Phase estimation schemes compared by the bound table."""

    SQUEEZED_IDEAL = "squeezed_ideal"
    SQUEEZED_LOSSY = "squeezed_lossy"
    SNL = "snl"
    NOON_IDEAL = "noon_ideal"
    NOON_LOSSY = "noon_lossy"
    DISPLACED_SQUEEZED = "displaced_squeezed"


def fisher_at_phase(vars: QuadratureVariances, phi):
    """Fisher information about the phase carried by one quadrature sample.

    For a zero-mean Gaussian with variance V(phi):
    F(phi) = V'(phi)^2 / (2 V(phi)^2) with V'(phi) = (V+ - V-) sin(2 phi).
    Vanishes at the variance extrema phi = 0, pi/2 and everywhere for
    V- = V+. Accepts scalar or array ``phi``.
    """
    v = quadrature_variance_at(vars, phi)
    dv = (vars.v_plus - vars.v_minus) * np.sin(2.0 * np.asarray(phi, dtype=float))
    out = dv * dv / (2.0 * v * v)
    return float(out) if np.ndim(phi) == 0 else out


def optimal_phase(vars: QuadratureVariances) -> float:
    """Measurement phase maximizing the Fisher information, in [0, pi/4].

    Closed form: phi* = arccos((V+ - V-) / (V+ + V-)) / 2, which for a pure
    state reduces to arccos(tanh 2r) / 2.
    """
    if not vars.v_minus < vars.v_plus:
        raise DegenerateStateError(
            "optimal phase undefined for equal variances (no phase information)"
        )
    return 0.5 * math.acos((vars.v_plus - vars.v_minus) / (vars.v_plus + vars.v_minus))


def max_fisher(vars: QuadratureVariances) -> float:
    """Fisher information at the optimal phase: (V+ - V-)^2 / (2 V+ V-).

    Equals 2 sinh^2(2r) for a pure state; 0 for equal variances.
    """
    d = vars.v_plus - vars.v_minus
    return d * d / (2.0 * vars.v_plus * vars.v_minus)


def max_fisher_at_photons(n: float, eta: float = 1.0) -> float:
    """Optimal Fisher information of the eta-degraded state carrying ``n``
    detected photons."""
    return max_fisher(variances(state_for_target_photons(n, eta)))


def _require_positive(name: str, value: float) -> None:
    if not value > 0.0:
        raise ValueError(f"{name} must be > 0, got {value}")


def sensitivity_squeezed_ideal(n: float) -> float:
    """Per-sample sensitivity of the ideal squeezed-vacuum scheme,
    1 / sqrt(8 (n^2 + n))."""
    _require_positive("photon number", n)
    return 1.0 / math.sqrt(8.0 * (n * n + n))


def sensitivity_snl(n: float) -> float:
    """Shot-noise limit 1 / sqrt(n)."""
    _require_positive("photon number", n)
    return 1.0 / math.sqrt(n)


def sensitivity_noon_ideal(n: float) -> float:
    """Ideal NOON-state bound 1 / (2n), i.e. 1/N with N = 2n photons in the
    two-beam interferometer of which half traverse the sample."""
    _require_positive("photon number", n)
    return 1.0 / (2.0 * n)


def sensitivity_noon_lossy(n: float, eta: float) -> float:
    """Loss-degraded NOON bound under the all-or-nothing survival model.

    The N-photon interference fringe requires all N = 2n photons to survive
    transmission eta, giving 1 / sqrt(N^2 * eta^N). This is a documented
    model choice, not a measured curve; swap in an alternative bound by
    passing a different column to the table builder if needed.
    """
    _require_positive("photon number", n)
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"transmission must lie in (0, 1], got {eta}")
    big_n = 2.0 * n
    return 1.0 / math.sqrt(big_n * big_n * eta**big_n)


def sensitivity_displaced_squeezed(v_minus: float, n: float) -> float:
    """Conventional displaced-squeezed interferometry limit sqrt(V- / n)."""
    _require_positive("squeezed variance", v_minus)
    _require_positive("photon number", n)
    return math.sqrt(v_minus / n)


def squeezed_noon_crossover(
    eta: float,
    bracket: tuple[float, float] = (0.5, 50.0),
    tol: float = 1e-10,
) -> float:
    """Photon number where the lossy squeezed scheme stops beating the ideal
    NOON bound, by bisection of max_fisher_at_photons(n, eta) - (2n)^2.

    Raises ValueError when the two curves do not cross inside ``bracket``
    (e.g. eta = 1, where the squeezed scheme wins at every n).
    """

    def gap(n: float) -> float:
        return max_fisher_at_photons(n, eta) - 4.0 * n * n

    lo, hi = bracket
    # scan for a sign change; the gap is positive at small n when squeezing wins
    grid = np.geomspace(lo, hi, 256)
    values = [gap(float(n)) for n in grid]
    idx = next(
        (i for i in range(len(grid) - 1) if values[i] > 0.0 >= values[i + 1]), None
    )
    if idx is None:
        raise ValueError(f"no squeezed/NOON crossover in {bracket} for eta={eta}")
    a, b = float(grid[idx]), float(grid[idx + 1])
    while b - a > tol:
        mid = 0.5 * (a + b)
        if gap(mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


@dataclass
class BoundTable:
    """Per-photon-number sensitivities and Fisher informations per scheme.

    ``sensitivity`` and ``fisher`` hold one column per scheme over
    ``photons``; sigma = 1 / sqrt(F) holds for every entry by construction.
    ``eta`` is the transmission used by the lossy columns.
    """

    photons: np.ndarray
    eta: float
    sensitivity: dict[SchemeKind, np.ndarray] = field(default_factory=dict)
    fisher: dict[SchemeKind, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.photons)


def build_bound_table(
    photon_grid,
    eta: float,
    displaced_v_minus: float | None = None,
) -> BoundTable:
    """Evaluate all six scheme columns over ``photon_grid``.

    The lossy squeezed column uses the optimal Fisher information of the
    eta-degraded state with the given detected photon number. The
    displaced-squeezed column uses sqrt(V- / n) with V- taken from that same
    state unless a fixed ``displaced_v_minus`` is supplied.
    """
    photons = np.asarray(list(photon_grid), dtype=float)
    if photons.size and (np.any(photons <= 0.0) or np.any(np.diff(photons) <= 0.0)):
        raise ValueError("photon grid must be strictly positive and increasing")
    table = BoundTable(photons=photons, eta=eta)

    def column(kind: SchemeKind, sigma_of_n) -> None:
        sigma = np.array([sigma_of_n(float(n)) for n in photons])
        table.sensitivity[kind] = sigma
        table.fisher[kind] = 1.0 / (sigma * sigma) if sigma.size else sigma.copy()

    def sigma_lossy_squeezed(n: float) -> float:
        return 1.0 / math.sqrt(max_fisher_at_photons(n, eta))

    def sigma_displaced(n: float) -> float:
        if displaced_v_minus is not None:
            return sensitivity_displaced_squeezed(displaced_v_minus, n)
        vm = variances(state_for_target_photons(n, eta)).v_minus
        return sensitivity_displaced_squeezed(vm, n)

    column(SchemeKind.SQUEEZED_IDEAL, sensitivity_squeezed_ideal)
    column(SchemeKind.SQUEEZED_LOSSY, sigma_lossy_squeezed)
    column(SchemeKind.SNL, sensitivity_snl)
    column(SchemeKind.NOON_IDEAL, sensitivity_noon_ideal)
    column(SchemeKind.NOON_LOSSY, lambda n: sensitivity_noon_lossy(n, eta))
    column(SchemeKind.DISPLACED_SQUEEZED, sigma_displaced)
    return table
