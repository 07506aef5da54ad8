"""SFO removal: fractional resampling of the receive stream or a
phase-only frequency-domain fix for very small offsets."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .analysis import sfo_phase
from .ofdm import OfdmConfig, SampleStream

__all__ = ["ResamplerStructure", "ResamplerConfig", "farrow_resample", "zf_phase_correct"]


class ResamplerStructure(str, Enum):
    FARROW_CUBIC = "farrow_cubic"


@dataclass(frozen=True)
class ResamplerConfig:
    structure: ResamplerStructure = ResamplerStructure.FARROW_CUBIC
    block_len: int = 65536

    def __post_init__(self):
        if self.block_len < 4:
            raise ValueError("block_len must cover the 4-tap cubic support")


def _cubic_weights(mu: np.ndarray) -> tuple[np.ndarray, ...]:
    """Cubic-Lagrange tap weights for taps at offsets -1, 0, 1, 2."""
    w_m1 = -mu * (mu - 1.0) * (mu - 2.0) / 6.0
    w_0 = (mu - 1.0) * (mu + 1.0) * (mu - 2.0) / 2.0
    w_1 = -mu * (mu + 1.0) * (mu - 2.0) / 2.0
    w_2 = mu * (mu + 1.0) * (mu - 1.0) / 6.0
    return w_m1, w_0, w_1, w_2


def _gather(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    valid = (idx >= 0) & (idx < x.size)
    return np.where(valid, x[np.clip(idx, 0, x.size - 1)], 0.0)


def farrow_resample(
    rx: SampleStream,
    delta_hat: float,
    cfg: OfdmConfig,
    config: ResamplerConfig | None = None,
) -> SampleStream:
    """Invert the receiver time base with a cubic Farrow interpolator.

    Output sample ``s`` is the 4-tap cubic interpolation of the input at
    fractional index ``s / (1 - delta_hat)``, i.e. at transmit time
    ``s * T_s``; positions past the captured stream read zero.
    """
    if not abs(delta_hat) < 1:
        raise ValueError("|delta_hat| must be < 1")
    if config is None:
        config = ResamplerConfig()
    x = np.asarray(rx.samples)
    out = np.empty(cfg.frame_len, dtype=complex)
    for lo in range(0, out.size, config.block_len):
        s = np.arange(lo, min(lo + config.block_len, out.size))
        u = s / (1.0 - delta_hat)
        base = np.floor(u).astype(int)
        w = _cubic_weights(u - base)
        acc = w[0] * _gather(x, base - 1)
        for tap, weight in zip((0, 1, 2), w[1:]):
            acc += weight * _gather(x, base + tap)
        out[s] = acc
    return SampleStream(out, rx.sample_rate)


def zf_phase_correct(y: np.ndarray, delta_hat: float, cfg: OfdmConfig) -> np.ndarray:
    """Divide out the SFO phase ramp per cell; amplitude taper taken as 1.

    Only meaningful while the offset is small enough that ICI and the
    amplitude modulation are negligible.
    """
    m = np.arange(y.shape[1])
    return y * np.exp(-1j * sfo_phase(delta_hat, cfg, m=m))
