"""Reproducible experiment runners behind the service endpoints.

Each runner is a pure function of its configuration (seed included) and
returns a RunResult holding fully rendered artifact files (CSV/SVG/JSON
text keyed by filename) plus a machine-readable summary. Every CSV embeds
the resolved configuration as ``# key = value`` comment lines, so a result
file is self-describing and byte-identical across re-runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bounds import (
    SchemeKind,
    build_bound_table,
    fisher_at_phase,
    max_fisher,
    optimal_phase,
    sensitivity_noon_ideal,
    sensitivity_noon_lossy,
    sensitivity_snl,
    sensitivity_squeezed_ideal,
    squeezed_noon_crossover,
)
from .estimator import (
    PhaseGrid,
    estimate_summary,
    estimate_variance_monte_carlo,
    laplace_width,
    map_estimate,
    posterior,
    posterior_fwhm,
    posterior_to_csv,
)
from .model import (
    StateModel,
    mean_photon_number,
    quadrature_variance_at,
    squeezing_db,
    state_for_target_photons,
    variances,
)
from .sampler import QuadratureBatch, sample_batch, sample_timeseries, sufficient_statistic
from .svgplot import Series, line_plot, polar_plot
from .tracker import (
    NoiseProfile,
    TrackerConfig,
    aperture_gain,
    bandpass,
    spectrum,
    synthesize_demo_signal,
    tone_amplitude,
    track,
)

__all__ = [
    "NumericalError",
    "RunResult",
    "resolve_state",
    "run_limits",
    "run_sweep_phase",
    "run_sweep_photons",
    "run_estimate",
    "run_track",
]

# Stream used for the synthesized low-frequency noise phases; quadrature
# sampling and Monte Carlo trials stay below 2^32 streams.
NOISE_STREAM = 1 << 32


class NumericalError(RuntimeError):
    """A computation produced non-finite values."""


@dataclass
class RunResult:
    """Rendered artifacts (filename -> file text) and a summary payload."""

    artifacts: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return ";".join(_fmt(v) for v in value)
    return str(value)


def _meta_lines(command: str, config: dict) -> list[str]:
    lines = [f"# command = {command}", f"# artifact_version = {__version__}"]
    lines.extend(f"# {key} = {_fmt(config[key])}" for key in sorted(config))
    return lines


def _csv(command: str, config: dict, columns: list[str], rows) -> str:
    lines = _meta_lines(command, config)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _summary_json(command: str, config: dict, payload: dict) -> str:
    doc = {"command": command, "config": config, **payload}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _require_finite(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite values encountered in {name}")
    return arr


def resolve_state(
    r: float | None = None,
    photons: float | None = None,
    eta: float = 1.0,
    xi: float = 0.0,
) -> StateModel:
    """Build the probe state from either the squeezing parameter or a
    target detected photon number (exactly one of the two)."""
    if (r is None) == (photons is None):
        raise ValueError("give exactly one of the squeezing parameter or photon number")
    if r is None:
        base = state_for_target_photons(photons, eta)
        return StateModel(r=base.r, eta=eta, xi=xi)
    return StateModel(r=r, eta=eta, xi=xi)


def _state_config(state: StateModel) -> dict:
    v = variances(state)
    sq_db, asq_db = squeezing_db(v)
    return {
        "r": state.r,
        "eta": state.eta,
        "xi": state.xi,
        "v_minus": v.v_minus,
        "v_plus": v.v_plus,
        "mean_photons": mean_photon_number(state),
        "squeezing_db": sq_db,
        "antisqueezing_db": asq_db,
    }


# ---------------------------------------------------------------- limits


def run_limits(photons, eta: float = 0.89, seed: int = 1) -> RunResult:
    """Sensitivity and Fisher columns for all schemes over a photon grid.

    The seed is recorded in the metadata for uniformity although this run
    draws no samples.
    """
    grid = [float(n) for n in photons]
    if not grid:
        raise ValueError("photon grid must not be empty")
    table = build_bound_table(grid, eta)
    config = {"photons": grid, "eta": eta, "seed": seed}

    order = [
        ("sqz_ideal", SchemeKind.SQUEEZED_IDEAL),
        ("sqz_lossy", SchemeKind.SQUEEZED_LOSSY),
        ("snl", SchemeKind.SNL),
        ("noon_ideal", SchemeKind.NOON_IDEAL),
        ("noon_lossy", SchemeKind.NOON_LOSSY),
        ("disp_sqz", SchemeKind.DISPLACED_SQUEEZED),
    ]
    columns = (
        ["n"]
        + [f"sigma_{name}" for name, _ in order]
        + [f"fisher_{name}" for name, _ in order]
    )
    for _, kind in order:
        _require_finite(f"sensitivity[{kind.value}]", table.sensitivity[kind])
    rows = [
        [table.photons[i]]
        + [float(table.sensitivity[kind][i]) for _, kind in order]
        + [float(table.fisher[kind][i]) for _, kind in order]
        for i in range(len(table))
    ]

    svg = line_plot(
        [
            Series("squeezed ideal", table.photons, table.sensitivity[SchemeKind.SQUEEZED_IDEAL]),
            Series(f"squeezed, eta={eta}", table.photons, table.sensitivity[SchemeKind.SQUEEZED_LOSSY]),
            Series("shot-noise limit", table.photons, table.sensitivity[SchemeKind.SNL], dashed=True),
            Series("NOON ideal", table.photons, table.sensitivity[SchemeKind.NOON_IDEAL], dashed=True),
            Series(f"NOON, eta={eta}", table.photons, table.sensitivity[SchemeKind.NOON_LOSSY], dashed=True),
            Series("displaced squeezed", table.photons, table.sensitivity[SchemeKind.DISPLACED_SQUEEZED]),
        ],
        title="Per-sample phase sensitivity limits",
        xlabel="mean photon number",
        ylabel="sensitivity (rad)",
        logx=True,
        logy=True,
    )

    try:
        crossover = squeezed_noon_crossover(eta)
    except ValueError:
        crossover = None
    summary = {"rows": len(table), "eta": eta, "squeezed_noon_crossover": crossover}
    return RunResult(
        artifacts={
            "bounds.csv": _csv("limits", config, columns, rows),
            "bounds.svg": svg,
            "summary.json": _summary_json("limits", config, summary),
        },
        summary=summary,
    )


# ----------------------------------------------------------- sweep-phase


def run_sweep_phase(
    photons: float | None = 1.8,
    r: float | None = None,
    eta: float = 1.0,
    xi: float = 0.0,
    m: int = 1000,
    trials: int = 200,
    phases=None,
    seed: int = 1,
    grid_k: int = 10000,
) -> RunResult:
    """Estimator variance and posterior width versus the true phase.

    The probe is set by ``r`` when given, else by the target ``photons``.
    """
    state = resolve_state(
        r=r, photons=None if r is not None else photons, eta=eta, xi=xi
    )
    v = variances(state)
    if phases is None:
        phases = np.linspace(0.02, math.pi / 2.0 - 0.02, 25).tolist()
    phases = [float(p) for p in phases]
    if not phases:
        raise ValueError("phase grid must not be empty")
    if trials < 1 or m < 1:
        raise ValueError("need trials >= 1 and m >= 1")

    n_mean = mean_photon_number(state)
    config = _state_config(state) | {
        "m": m,
        "trials": trials,
        "seed": seed,
        "grid_k": grid_k,
        "phases": phases,
    }
    grid = PhaseGrid(k=grid_k)

    var_col: list[float] = []
    width_col: list[float] = []
    mean_col: list[float] = []
    clamped_col: list[float] = []
    for idx, phi in enumerate(phases):
        if trials == 1:
            batch = sample_batch(v, phi, m, seed, stream=idx)
            post = posterior(v, batch, grid)
            mean_col.append(post.map_phase)
            width_col.append(post.credible_width)
            clamped_col.append(1.0 if post.clamped else 0.0)
        else:
            mc = estimate_variance_monte_carlo(
                v, phi, m, trials, seed, stream0=idx * trials, with_width=True, grid=grid
            )
            var_col.append(mc.variance)
            width_col.append(mc.mean_width)
            mean_col.append(mc.mean)
            clamped_col.append(mc.clamped_fraction)

    crb = [1.0 / (m * fisher_at_phase(v, phi)) if fisher_at_phase(v, phi) > 0 else math.inf for phi in phases]
    var_snl_ref = 1.0 / (m * n_mean) if n_mean > 0 else math.inf
    var_noon_ref = 1.0 / (m * (2.0 * n_mean) ** 2) if n_mean > 0 else math.inf

    columns = ["phi_true"]
    if trials >= 2:
        columns.append("var_estimates")
    columns += ["mean_width", "crb", "mean_estimate", "clamped_fraction", "var_snl_ref", "var_noon_ref"]
    rows = []
    for i, phi in enumerate(phases):
        row = [phi]
        if trials >= 2:
            row.append(var_col[i])
        row += [width_col[i], crb[i], mean_col[i], clamped_col[i], var_snl_ref, var_noon_ref]
        rows.append(row)
    _require_finite("mean_width", width_col)

    spread = var_col if trials >= 2 else [w * w for w in width_col]
    _require_finite("variance sweep", spread)
    finite_crb = np.where(np.isfinite(crb), crb, np.nan)
    series = [
        Series("measured variance" if trials >= 2 else "posterior width^2", np.asarray(phases), np.asarray(spread)),
        Series("Cramer-Rao bound", np.asarray(phases), finite_crb, dashed=True),
        Series("shot-noise ref", np.asarray(phases), np.full(len(phases), var_snl_ref), dashed=True),
        Series("NOON ref (N=2n)", np.asarray(phases), np.full(len(phases), var_noon_ref), dashed=True),
    ]
    svg = line_plot(
        series,
        title=f"Phase-estimate variance vs true phase (n={n_mean:.3g}, M={m})",
        xlabel="true phase (rad)",
        ylabel="variance (rad^2)",
        logy=True,
    )
    polar = polar_plot(
        np.asarray(phases),
        np.asarray(spread),
        label="variance vs phase",
        title="Polar view of the phase sweep",
    )

    best = int(np.argmin(spread))
    summary = {
        "eta": eta,
        "mean_photons": n_mean,
        "optimal_phase": optimal_phase(v) if v.v_minus < v.v_plus else None,
        "min_variance_phase": phases[best],
        "min_variance": float(spread[best]),
    }
    return RunResult(
        artifacts={
            "sweep_phase.csv": _csv("sweep-phase", config, columns, rows),
            "sweep_phase.svg": svg,
            "sweep_phase_polar.svg": polar,
            "summary.json": _summary_json("sweep-phase", config, summary),
        },
        summary=summary,
    )


# --------------------------------------------------------- sweep-photons


def run_sweep_photons(
    photons=None,
    eta: float = 0.89,
    m: int = 1000,
    trials: int = 200,
    seed: int = 1,
    grid_k: int = 10000,
) -> RunResult:
    """Optimized empirical sensitivity versus photon number, with theory."""
    if photons is None:
        photons = np.geomspace(0.5, 20.0, 12).tolist()
    grid_n = [float(n) for n in photons]
    if not grid_n:
        raise ValueError("photon grid must not be empty")
    if trials < 2:
        raise ValueError("sweep-photons needs trials >= 2 for a variance")

    config = {
        "photons": grid_n,
        "eta": eta,
        "m": m,
        "trials": trials,
        "seed": seed,
        "grid_k": grid_k,
    }
    grid = PhaseGrid(k=grid_k)

    columns = [
        "n",
        "r",
        "phi_opt",
        "var_mc",
        "sens_mc",
        "sens_width",
        "sens_theory",
        "sigma_sqz_ideal",
        "sigma_snl",
        "sigma_noon_ideal",
        "sigma_noon_lossy",
        "clamped_fraction",
    ]
    rows = []
    sens_mc_col, sens_theory_col = [], []
    for q, n in enumerate(grid_n):
        state = state_for_target_photons(n, eta)
        v = variances(state)
        phi_opt = optimal_phase(v)
        mc = estimate_variance_monte_carlo(
            v, phi_opt, m, trials, seed, stream0=q * trials, with_width=True, grid=grid
        )
        sens_mc = math.sqrt(m * mc.variance)
        sens_theory = 1.0 / math.sqrt(max_fisher(v))
        rows.append(
            [
                n,
                state.r,
                phi_opt,
                mc.variance,
                sens_mc,
                math.sqrt(m) * mc.mean_width,
                sens_theory,
                sensitivity_squeezed_ideal(n),
                sensitivity_snl(n),
                sensitivity_noon_ideal(n),
                sensitivity_noon_lossy(n, eta),
                mc.clamped_fraction,
            ]
        )
        sens_mc_col.append(sens_mc)
        sens_theory_col.append(sens_theory)
    _require_finite("empirical sensitivity", sens_mc_col)

    n_arr = np.asarray(grid_n)
    svg = line_plot(
        [
            Series("Monte Carlo", n_arr, np.asarray(sens_mc_col)),
            Series(f"theory, eta={eta}", n_arr, np.asarray(sens_theory_col), dashed=True),
            Series("squeezed ideal", n_arr, np.array([r[7] for r in rows]), dashed=True),
            Series("shot-noise limit", n_arr, np.array([r[8] for r in rows]), dashed=True),
            Series("NOON ideal", n_arr, np.array([r[9] for r in rows]), dashed=True),
        ],
        title=f"Optimized per-sample sensitivity vs photon number (M={m})",
        xlabel="mean photon number",
        ylabel="sensitivity (rad)",
        logx=True,
        logy=True,
    )
    try:
        crossover = squeezed_noon_crossover(eta)
    except ValueError:
        crossover = None
    summary = {
        "eta": eta,
        "rows": len(rows),
        "squeezed_noon_crossover": crossover,
        "max_ratio_to_theory": float(np.max(np.asarray(sens_mc_col) / np.asarray(sens_theory_col))),
    }
    return RunResult(
        artifacts={
            "sweep_photons.csv": _csv("sweep-photons", config, columns, rows),
            "sweep_photons.svg": svg,
            "summary.json": _summary_json("sweep-photons", config, summary),
        },
        summary=summary,
    )


# -------------------------------------------------------------- estimate


def run_estimate(
    photons: float | None = None,
    r: float | None = None,
    eta: float = 1.0,
    xi: float = 0.0,
    phi_true: float | None = None,
    m: int = 1000,
    seed: int = 1,
    grid_lo: float = 0.0,
    grid_hi: float = math.pi / 2.0,
    grid_k: int = 10000,
    snapshots=(),
    export_batch: bool = False,
    batch: QuadratureBatch | None = None,
) -> RunResult:
    """Single-batch Bayesian estimate: posterior, MAP and widths.

    When ``batch`` is supplied (e.g. an imported record) it is analyzed
    as-is and the probe parameters are taken from it; otherwise a batch is
    simulated from the resolved state at ``phi_true`` (default: the optimal
    phase). ``r`` wins when both probe descriptions are set; the default
    probe is r = 1 pure.
    """
    grid = PhaseGrid(grid_lo, grid_hi, grid_k)
    if batch is None:
        if r is None and photons is None:
            r = 1.0
        state = resolve_state(
            r=r, photons=None if r is not None else photons, eta=eta, xi=xi
        )
        v = variances(state)
        if phi_true is None:
            phi_true = optimal_phase(v)
        batch = sample_batch(v, phi_true, m, seed)
        config = _state_config(state) | {
            "phi_true": phi_true,
            "m": m,
            "seed": seed,
            "source": "simulated",
        }
    else:
        v = batch.vars
        config = {
            "v_minus": v.v_minus,
            "v_plus": v.v_plus,
            "phi_true": batch.phi_true,
            "m": batch.m,
            "seed": batch.seed,
            "source": "imported",
        }
    config |= {"grid_lo": grid.lo, "grid_hi": grid.hi, "grid_k": grid.k}

    post = posterior(v, batch, grid)
    _require_finite("posterior map/width", [post.map_phase, post.credible_width])

    artifacts = {"posterior.csv": _attach_meta(posterior_to_csv(post), "estimate", config)}
    snapshot_posts = []
    snapshots = sorted({int(s) for s in snapshots if 1 <= int(s) <= batch.m})
    x = batch.samples
    for s in snapshots:
        part = posterior(v, (float(np.dot(x[:s], x[:s])), s), grid)
        snapshot_posts.append((s, part))
        artifacts[f"posterior_m{s}.csv"] = _attach_meta(
            posterior_to_csv(part), "estimate", config | {"snapshot_m": s}
        )

    fixed = estimate_summary(post)
    artifacts["estimate.json"] = json.dumps(fixed, sort_keys=True, indent=2) + "\n"

    series = [
        Series(f"M={s}", part.grid.points(), part.density(), dashed=True)
        for s, part in snapshot_posts
    ]
    series.append(Series(f"M={batch.m}", grid.points(), post.density()))
    artifacts["estimate.svg"] = line_plot(
        series,
        title="Posterior phase density",
        xlabel="phase (rad)",
        ylabel="density (1/rad)",
    )

    if export_batch:
        lines = ["index,x"]
        lines.extend(f"{i},{xv!r}" for i, xv in enumerate(batch.samples.tolist()))
        artifacts["batch.csv"] = "\n".join(lines) + "\n"
        artifacts["batch_meta.json"] = (
            json.dumps(
                {
                    "m": batch.m,
                    "phi_true": batch.phi_true,
                    "v_minus": v.v_minus,
                    "v_plus": v.v_plus,
                    "seed": batch.seed,
                },
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )

    sum_sq = sufficient_statistic(batch)
    summary = dict(fixed)
    summary |= {
        "map_closed_form": map_estimate(v, sum_sq, batch.m) if v.v_minus < v.v_plus else None,
        "width_fwhm": posterior_fwhm(post),
        "width_laplace": _nan_to_none(laplace_width(v, sum_sq, batch.m)) if v.v_minus < v.v_plus else None,
        "sum_sq": sum_sq,
        "phi_true": batch.phi_true,
    }
    artifacts["summary.json"] = _summary_json("estimate", config, summary)
    return RunResult(artifacts=artifacts, summary=summary)


def _nan_to_none(value: float):
    return None if math.isnan(value) else value


def _attach_meta(csv_body: str, command: str, config: dict) -> str:
    return "\n".join(_meta_lines(command, config)) + "\n" + csv_body


# ----------------------------------------------------------------- track


def run_track(
    photons: float = 6.0,
    eta: float = 0.89,
    fs: float = 1.0e6,
    window_m: int = 100,
    duration: float = 0.5,
    tone_freq: float = 3000.0,
    tone_amp: float = 0.01,
    band_lo: float = 2000.0,
    band_hi: float = 4000.0,
    noise_rms: float = 0.0,
    noise_corner: float = 200.0,
    seed: int = 1,
) -> RunResult:
    """Dynamic-phase tracking demo: tone + noise injected on the probe
    phase, tracked, bandpassed, and spectrally analyzed."""
    state = state_for_target_photons(photons, eta)
    v = variances(state)
    center = optimal_phase(v)
    cfg = TrackerConfig(
        fs=fs,
        window_m=window_m,
        center_phase=center,
        band_lo=band_lo,
        band_hi=band_hi,
    )
    noise = NoiseProfile(rms=noise_rms, corner_hz=noise_corner, seed=seed, stream=NOISE_STREAM)
    phase_fn = synthesize_demo_signal(cfg, tone_freq, tone_amp, noise)
    _, x = sample_timeseries(v, phase_fn, fs, duration, seed, stream=0)

    series = track(x, v, cfg)
    filtered = bandpass(series, band_lo, band_hi)
    freq_raw, psd_raw = spectrum(series, window=cfg.spectrum_window)
    freq_flt, psd_flt = spectrum(filtered, window=cfg.spectrum_window)
    _require_finite("raw PSD", psd_raw)
    _require_finite("filtered PSD", psd_flt)

    fisher = max_fisher(v)
    crb_floor = 1.0 / (window_m * fisher)
    gain = aperture_gain(cfg, tone_freq)
    recovered = tone_amplitude(series, tone_freq) / gain if tone_amp != 0.0 else 0.0
    peak_idx = int(np.argmax(psd_raw[1:])) + 1  # skip the DC bin
    config = _state_config(state) | {
        "photons": photons,
        "fs": fs,
        "window_m": window_m,
        "duration": duration,
        "tone_freq": tone_freq,
        "tone_amp": tone_amp,
        "band_lo": band_lo,
        "band_hi": band_hi,
        "noise_rms": noise_rms,
        "noise_corner": noise_corner,
        "seed": seed,
        "center_phase": center,
    }

    def ts_csv(ts) -> str:
        return _csv(
            "track", config, ["t", "delta_phi"], zip(ts.t.tolist(), ts.delta_phi.tolist())
        )

    def psd_csv(freq, psd) -> str:
        return _csv("track", config, ["freq_hz", "psd"], zip(freq.tolist(), psd.tolist()))

    summary = {
        "n_windows": len(series),
        "estimate_rate_hz": cfg.estimate_rate,
        "center_phase": center,
        "max_fisher": fisher,
        "crb_floor_variance": crb_floor,
        "measured_variance": float(np.var(series.delta_phi)),
        "aperture_gain": gain,
        "tone_freq_hz": tone_freq,
        "injected_amplitude": tone_amp,
        "recovered_amplitude": recovered,
        "psd_peak_hz": float(freq_raw[peak_idx]),
        "psd_bin_hz": float(freq_raw[1] - freq_raw[0]),
    }
    track_svg = line_plot(
        [
            Series("tracked", series.t, series.delta_phi),
            Series(f"bandpassed {band_lo:g}-{band_hi:g} Hz", filtered.t, filtered.delta_phi),
        ],
        title=f"Tracked phase signal ({photons:g} photons, window M={window_m})",
        xlabel="time (s)",
        ylabel="phase shift (rad)",
    )
    psd_svg = line_plot(
        [
            Series("raw", freq_raw, psd_raw),
            Series("bandpassed", freq_flt, psd_flt),
        ],
        title="Phase signal spectrum",
        xlabel="frequency (Hz)",
        ylabel="PSD (rad^2/Hz)",
        logy=True,
    )
    return RunResult(
        artifacts={
            "track_raw.csv": ts_csv(series),
            "track_filtered.csv": ts_csv(filtered),
            "psd_raw.csv": psd_csv(freq_raw, psd_raw),
            "psd_filtered.csv": psd_csv(freq_flt, psd_flt),
            "track.svg": track_svg,
            "psd.svg": psd_svg,
            "summary.json": _summary_json("track", config, summary),
        },
        summary=summary,
    )
