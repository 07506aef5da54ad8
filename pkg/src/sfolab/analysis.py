"""Closed-form sampling-frequency-offset effects, admissibility limits and
estimator accuracy bounds.

Everything here is pure arithmetic on an :class:`~sfolab.ofdm.OfdmConfig`;
the simulation and estimation modules are tested against these expressions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import k as K_BOLTZMANN

from .ofdm import OfdmConfig

__all__ = [
    "SfoLimits",
    "BoundReport",
    "sfo_delay",
    "delay_migration",
    "subcarrier_freq_shift",
    "freq_shift_migration",
    "sfo_amplitude",
    "sfo_phase",
    "sfo_limits",
    "delay_bounds",
    "sfo_std_bounds",
    "bound_report",
    "link_budget_snr",
    "processing_gain_db",
]


@dataclass(frozen=True)
class SfoLimits:
    """Largest normalized SFO tolerable before ICI / ISI set in."""

    ici_limit: float
    isi_limit: float


@dataclass(frozen=True)
class BoundReport:
    """Delay-estimate and SFO-estimate accuracy floors for one operating point."""

    sigma_tau_crlb: float
    sigma_tau_mle: float
    sigma_delta_crlb: float
    sigma_delta_mle: float


def sfo_delay(m, delta: float, cfg: OfdmConfig):
    """Apparent delay of OFDM symbol ``m`` under normalized SFO ``delta``."""
    m = np.asarray(m)
    return delta * (m * cfg.symbol_len + cfg.cp_len) * cfg.sample_period


def delay_migration(m, delta: float, cfg: OfdmConfig):
    """Delay drift of symbol ``m`` relative to symbol 0."""
    m = np.asarray(m)
    return delta * m * cfg.symbol_len * cfg.sample_period


def subcarrier_freq_shift(n, delta: float, cfg: OfdmConfig):
    """Frequency shift of subcarrier ``n`` (signed index)."""
    return delta * np.asarray(n) * cfg.subcarrier_spacing


def freq_shift_migration(delta: float, cfg: OfdmConfig) -> float:
    """Shift difference between the last and the first subcarrier."""
    n_hi = cfg.n_subcarriers // 2 - 1
    n_lo = -(cfg.n_subcarriers // 2)
    return float(
        subcarrier_freq_shift(n_hi, delta, cfg) - subcarrier_freq_shift(n_lo, delta, cfg)
    )


def _dirichlet_ratio(u: np.ndarray, n: int) -> np.ndarray:
    """sin(pi*u) / (n*sin(pi*u/n)) with the removable singularities filled."""
    u = np.asarray(u, dtype=float)
    den = n * np.sin(np.pi * u / n)
    num = np.sin(np.pi * u)
    out = np.empty_like(u)
    tiny = np.abs(den) < 1e-12 * n
    out[~tiny] = num[~tiny] / den[~tiny]
    # l'Hopital at u = k*n, includes the u = 0 unit-gain point
    out[tiny] = np.cos(np.pi * u[tiny]) / np.cos(np.pi * u[tiny] / n)
    return out


def sfo_amplitude(delta: float, cfg: OfdmConfig, n=None) -> np.ndarray:
    """Per-subcarrier amplitude modulation caused by the SFO.

    This is the signed Dirichlet-kernel peak value; it crosses zero once
    ``|delta * n|`` exceeds 1 (plots usually show its magnitude in dB).
    """
    if n is None:
        n = cfg.subcarrier_index
    return _dirichlet_ratio(delta * np.asarray(n), cfg.n_subcarriers)


def sfo_phase(delta: float, cfg: OfdmConfig, n=None, m=None) -> np.ndarray:
    """SFO phase rotation for subcarrier(s) ``n`` and symbol(s) ``m``.

    Broadcasts to an ``(n, m)`` matrix when both arguments are arrays.
    """
    if n is None:
        n = cfg.subcarrier_index
    if m is None:
        m = np.arange(cfg.n_symbols)
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    n_col = n[..., None] if n.ndim and m.ndim else n
    big_n = cfg.n_subcarriers
    sample_offset = m * cfg.symbol_len + cfg.cp_len
    return (
        -2.0 * np.pi * delta * n_col / big_n * sample_offset
        - np.pi * delta * n_col / big_n * (big_n - 1)
    )


def sfo_limits(cfg: OfdmConfig) -> SfoLimits:
    """ICI-free and ISI-free normalized-SFO upper limits."""
    ici = 1.0 / (5.0 * cfg.n_subcarriers)
    denom = (cfg.n_symbols - 1) * cfg.symbol_len + cfg.cp_len
    isi = cfg.cp_len / (cfg.bandwidth * denom * cfg.sample_period)
    return SfoLimits(ici_limit=ici, isi_limit=isi)


def delay_bounds(snr_linear: float, eta: int, cfg: OfdmConfig) -> tuple[float, float]:
    """Accuracy floors for one per-pilot-symbol delay estimate.

    Returns ``(sigma_tau_crlb, sigma_tau_mle)``: the high-SNR CRLB for an
    unbiased estimator and the quantization floor of an argmax on a
    zero-padded delay grid with padding factor ``eta``.
    """
    if snr_linear <= 0:
        raise ValueError("snr_linear must be > 0")
    if eta < 1:
        raise ValueError("eta must be >= 1")
    n_pil = cfg.n_pilot_subcarriers
    df = cfg.subcarrier_spacing
    dn = cfg.pilot_subc_spacing
    crlb = np.sqrt(6.0 / (snr_linear * (n_pil**2 - 1.0) * n_pil)) / (2.0 * np.pi * df * dn)
    mle = np.sqrt(3.0) / (6.0 * eta * n_pil * df * dn)
    return float(crlb), float(mle)


def _regressor(m_pil_used: int, cfg: OfdmConfig) -> np.ndarray:
    """Time abscissa of the delay-migration fit for each used pilot symbol."""
    steps = np.arange(m_pil_used) * cfg.pilot_sym_spacing
    return steps * cfg.symbol_len * cfg.sample_period


def sfo_std_bounds(sigma_tau: float, m_pil_used: int, cfg: OfdmConfig) -> float:
    """Standard deviation of the LS slope fit given per-point delay std.

    Uses the exact least-squares slope variance ``sigma_tau / sqrt(sum
    (x - mean(x))^2)``, equivalently ``sigma_tau * sqrt(M) / sqrt(M*sum(x^2)
    - (sum x)^2)``.
    """
    if m_pil_used < 2:
        raise ValueError("slope std undefined for fewer than 2 points")
    if sigma_tau < 0:
        raise ValueError("sigma_tau must be >= 0")
    x = _regressor(m_pil_used, cfg)
    sxx = np.sum((x - x.mean()) ** 2)
    return float(sigma_tau / np.sqrt(sxx))


def bound_report(
    snr_linear: float, eta: int, cfg: OfdmConfig, m_pil_used: int | None = None
) -> BoundReport:
    """Bundle the delay floors with the SFO-estimate floors they imply."""
    if m_pil_used is None:
        m_pil_used = cfg.n_pilot_symbols
    tau_crlb, tau_mle = delay_bounds(snr_linear, eta, cfg)
    return BoundReport(
        sigma_tau_crlb=tau_crlb,
        sigma_tau_mle=tau_mle,
        sigma_delta_crlb=sfo_std_bounds(tau_crlb, m_pil_used, cfg),
        sigma_delta_mle=sfo_std_bounds(tau_mle, m_pil_used, cfg),
    )


def link_budget_snr(
    p_tx: float,
    alpha: float,
    cfg: OfdmConfig,
    noise_figure: float = 1.0,
    temperature: float = 290.0,
) -> float:
    """Pre-processing linear SNR of a path with composite amplitude ``alpha``."""
    if min(p_tx, alpha, noise_figure, temperature) <= 0:
        raise ValueError("all link budget inputs must be > 0")
    noise_power = K_BOLTZMANN * cfg.bandwidth * temperature * noise_figure
    return p_tx * alpha**2 / noise_power


def processing_gain_db(cfg: OfdmConfig) -> float:
    """Coherent gain of one pilot-based CIR estimate, in dB."""
    return 10.0 * np.log10(cfg.n_pilot_subcarriers)
