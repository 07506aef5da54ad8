"""Pilot-based CIR tracking and the three SFO estimators.

Pipeline: pilot CFR extraction -> zero-padded IDFT per pilot symbol
(delay-slow-time profile) -> windowed peak tracking of the reference path ->
least-squares slope of the delay migration.  The adaptive estimator caps the
number of used pilot symbols at the first migration step whose implied
per-step slope is not explainable by the configured maximum SFO, which keeps
ISI-contaminated columns out of the fit.  Forcing the full column count
reproduces the plain delay-based estimator; the phase baseline skips the
delay domain entirely and fits the pilot phase ramp across subcarriers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .ofdm import OfdmConfig, PilotGrid
from .radar import WindowKind, mainlobe_halfwidth_bins, profile_peak_sinr, window_taps

__all__ = [
    "SfoMethod",
    "DelaySlowTimeProfile",
    "DelayTrack",
    "SfoEstimate",
    "extract_pilot_cfr",
    "cir_profile",
    "czt_delay_zoom",
    "track_reference_delay",
    "ls_sfo",
    "tito_select",
    "estimate_sfo",
    "estimate_sfo_from_cfr",
]


class SfoMethod(str, Enum):
    TITO = "tito"  # adaptive pilot-symbol count
    FULL_DELAY = "full"  # all pilot symbols, Wu-style
    PHASE = "phase"  # subcarrier phase ramp, Tsai-style baseline


@dataclass(frozen=True)
class DelaySlowTimeProfile:
    """Zero-padded CIR estimate per pilot symbol, one column each."""

    columns: np.ndarray  # (zp_factor * n_pilot_subcarriers, n_pilot_symbols)
    bin_resolution: float  # seconds per delay bin
    zp_factor: int
    window_kind: WindowKind = WindowKind.RECTANGULAR


@dataclass(frozen=True)
class DelayTrack:
    """Reference-path delay migration across the profile columns."""

    migrations: np.ndarray  # seconds, relative to column 0
    peak_sinr_db: np.ndarray
    peak_bins: np.ndarray  # unwrapped bin positions, diagnostic


@dataclass(frozen=True)
class SfoEstimate:
    delta_hat: float
    method: SfoMethod
    m_pil_used: int
    track: DelayTrack | None


def extract_pilot_cfr(y: np.ndarray, pilots: PilotGrid) -> np.ndarray:
    """Per-pilot-cell CFR estimates: receive cell over known pilot value."""
    if (
        y.ndim != 2
        or pilots.subcarrier_indices[-1] >= y.shape[0]
        or pilots.symbol_indices[-1] >= y.shape[1]
    ):
        raise ValueError("receive grid does not cover the pilot lattice")
    if np.any(pilots.values == 0):
        raise ValueError("pilot values must be non-zero")
    return y[np.ix_(pilots.subcarrier_indices, pilots.symbol_indices)] / pilots.values


def _pilot_step_seconds(cfg: OfdmConfig) -> float:
    """Elapsed time between consecutive pilot OFDM symbols."""
    return cfg.pilot_sym_spacing * cfg.symbol_len * cfg.sample_period


def cir_profile(
    cfr: np.ndarray,
    eta: int,
    cfg: OfdmConfig,
    window: WindowKind = WindowKind.RECTANGULAR,
) -> DelaySlowTimeProfile:
    """Zero-padded IDFT of each CFR column onto a delay grid."""
    if eta < 1:
        raise ValueError("zero-padding factor must be >= 1")
    n_pil = cfr.shape[0]
    taps = window_taps(window, n_pil)
    columns = np.fft.ifft(cfr * taps[:, None], n=eta * n_pil, axis=0)
    bin_resolution = 1.0 / (
        eta * n_pil * cfg.subcarrier_spacing * cfg.pilot_subc_spacing
    )
    return DelaySlowTimeProfile(columns, bin_resolution, eta, WindowKind(window))


def czt_delay_zoom(
    cfr_column: np.ndarray,
    cfg: OfdmConfig,
    eta: int,
    center_bin: int,
    span_bins: int,
    window: WindowKind = WindowKind.RECTANGULAR,
) -> np.ndarray:
    """Chirp-z zoom onto ``span_bins`` delay bins around ``center_bin``.

    Produces the same values as the matching slice of the zero-padded IDFT
    in :func:`cir_profile` without computing the full delay axis; useful
    when only the neighbourhood of the tracked path is needed.
    """
    from scipy.signal import czt

    n_pil = cfr_column.shape[0]
    n_bins = eta * n_pil
    taps = window_taps(window, n_pil)
    start = center_bin - span_bins // 2
    w = np.exp(2j * np.pi / n_bins)
    a = np.exp(-2j * np.pi * start / n_bins)
    return czt(cfr_column * taps, m=span_bins, w=w, a=a) / n_bins


def _parabolic_offset(mags: np.ndarray, peak: int) -> float:
    """Sub-bin vertex offset of a parabola through the peak and neighbours."""
    n = mags.size
    left, mid, right = mags[(peak - 1) % n], mags[peak], mags[(peak + 1) % n]
    denom = left - 2 * mid + right
    if denom >= 0:  # flat or not a local maximum: leave on the grid
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def track_reference_delay(
    d: DelaySlowTimeProfile,
    cfg: OfdmConfig,
    *,
    delta_max: float = 1e-3,
    epsilon: float = 0.1,
    window_scale: float = 2.0,
    subbin: str = "none",
) -> DelayTrack:
    """Follow the dominant peak across columns and log its drift.

    Column 0 takes the global magnitude argmax (the reference path is the
    dominant return); every later column searches a circular window around
    the previous peak.  The window spans ``window_scale`` times the largest
    admissible per-step drift so that a step violating the adaptive
    selection threshold is still observable rather than clipped.  Exact
    magnitude ties resolve toward the bin closest to the previous peak.

    ``subbin="parabolic"`` refines each logged delay by the vertex of a
    parabola through the peak and its neighbours; the default stays on the
    grid, matching the quantized-argmax accuracy model.
    """
    if d.columns.size == 0:
        raise ValueError("empty delay profile")
    if subbin not in ("none", "parabolic"):
        raise ValueError(f"unknown sub-bin mode {subbin!r}")
    mags = np.abs(d.columns)
    n_bins, n_cols = mags.shape
    step_time = _pilot_step_seconds(cfg)
    max_step_bins = window_scale * (1 + epsilon) * abs(delta_max) * step_time / d.bin_resolution
    half = int(np.clip(np.ceil(max_step_bins), 4, max(4, (n_bins - 1) // 2)))
    lobe = mainlobe_halfwidth_bins(d.window_kind, n_bins // d.zp_factor, d.zp_factor)

    offsets = np.arange(-half, half + 1)
    peak = int(np.argmax(mags[:, 0]))
    refine = _parabolic_offset if subbin == "parabolic" else (lambda m, p: 0.0)
    bins = np.empty(n_cols, dtype=float)
    sinr = np.empty(n_cols)
    unwrapped = peak
    bins[0] = unwrapped + refine(mags[:, 0], peak)
    sinr[0] = profile_peak_sinr(d.columns[:, 0], peak, lobe)
    wrapped = peak
    for col in range(1, n_cols):
        window_vals = mags[(wrapped + offsets) % n_bins, col]
        best = window_vals.max()
        candidates = offsets[window_vals == best]
        shift = int(candidates[np.argmin(np.abs(candidates))])
        wrapped = (wrapped + shift) % n_bins
        unwrapped += shift
        bins[col] = unwrapped + refine(mags[:, col], wrapped)
        sinr[col] = profile_peak_sinr(d.columns[:, col], wrapped, lobe)
    migrations = (bins - bins[0]) * d.bin_resolution
    return DelayTrack(migrations=migrations, peak_sinr_db=sinr, peak_bins=bins)


def ls_sfo(track: DelayTrack, m_used: int, cfg: OfdmConfig) -> float:
    """Closed-form LS slope of the first ``m_used`` migrations vs time."""
    if not 2 <= m_used <= track.migrations.size:
        raise ValueError("m_used must be in [2, track length]")
    x = np.arange(m_used) * _pilot_step_seconds(cfg)
    y = track.migrations[:m_used]
    num = m_used * np.sum(x * y) - np.sum(x) * np.sum(y)
    den = m_used * np.sum(x * x) - np.sum(x) ** 2
    return float(num / den)


def tito_select(track: DelayTrack, delta_max: float, epsilon: float, cfg: OfdmConfig) -> int:
    """Number of leading columns whose per-step drift stays admissible.

    Walks the consecutive migration differences and stops at the first step
    whose implied slope exceeds ``(1 + epsilon) * |delta_max|``; at least two
    columns are always kept so a slope remains defined.
    """
    if track.migrations.size < 2:
        raise ValueError("track must cover at least two pilot symbols")
    if delta_max <= 0:
        raise ValueError("delta_max must be > 0")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    steps = np.diff(track.migrations) / _pilot_step_seconds(cfg)
    violations = np.flatnonzero(np.abs(steps) > (1 + epsilon) * abs(delta_max))
    if violations.size == 0:
        return int(track.migrations.size)
    return int(max(2, violations[0] + 1))


def _phase_sfo(cfr: np.ndarray, cfg: OfdmConfig) -> float:
    """Pilot-phase-ramp baseline: fit the per-pair phase slope across n."""
    if cfr.shape[1] < 2:
        raise ValueError("phase baseline needs at least two pilot symbols")
    n = (cfg.pilot_subcarrier_indices - cfg.n_subcarriers // 2).astype(float)
    keep = n != 0
    n = n[keep]
    pair_phase = np.angle(cfr[keep, 1:] * np.conj(cfr[keep, :-1]))
    # expected ramp: -2*pi*delta*n*(pilot symbol step in samples)/N per pair
    coeff = -2.0 * np.pi * cfg.pilot_sym_spacing * cfg.symbol_len / cfg.n_subcarriers
    slopes = n @ pair_phase / (coeff * np.sum(n * n))
    return float(np.mean(slopes))


def estimate_sfo_from_cfr(
    cfr: np.ndarray,
    cfg: OfdmConfig,
    method: SfoMethod = SfoMethod.TITO,
    *,
    eta: int = 20,
    delta_max: float = 1e-3,
    epsilon: float = 0.1,
    window: WindowKind = WindowKind.RECTANGULAR,
    window_scale: float = 2.0,
) -> SfoEstimate:
    """Run one estimator on an already-extracted pilot CFR matrix."""
    method = SfoMethod(method)
    if method is SfoMethod.PHASE:
        return SfoEstimate(
            delta_hat=_phase_sfo(cfr, cfg),
            method=method,
            m_pil_used=int(cfr.shape[1]),
            track=None,
        )
    profile = cir_profile(cfr, eta, cfg, window)
    track = track_reference_delay(
        profile, cfg, delta_max=delta_max, epsilon=epsilon, window_scale=window_scale
    )
    if method is SfoMethod.TITO:
        m_used = tito_select(track, delta_max, epsilon, cfg)
    else:
        m_used = int(track.migrations.size)
    return SfoEstimate(
        delta_hat=ls_sfo(track, m_used, cfg),
        method=method,
        m_pil_used=m_used,
        track=track,
    )


def estimate_sfo(
    y: np.ndarray,
    pilots: PilotGrid,
    cfg: OfdmConfig,
    method: SfoMethod = SfoMethod.TITO,
    **kwargs,
) -> SfoEstimate:
    """Full pipeline from a receive frame: CFR -> profile -> track -> slope."""
    return estimate_sfo_from_cfr(extract_pilot_cfr(y, pilots), cfg, method, **kwargs)
