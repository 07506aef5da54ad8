"""OFDM frame construction, pilot layout and (de)modulation.

Conventions shared by every module in this package:

* A frame is a complex ``(N, M)`` array.  Storage row ``r`` holds subcarrier
  ``n = r - N//2``, i.e. rows run over the signed index n = -N/2 .. N/2-1.
* ``modulate`` maps row ``r`` to DFT bin ``n mod N`` (``np.fft.ifftshift``),
  runs a per-symbol IDFT (``np.fft.ifft`` scaling, so a unit-modulus frame
  yields time samples with mean power 1/N) and prepends the last ``cp_len``
  IDFT outputs as cyclic prefix.
* A full frame serialises to ``M * (N + cp_len)`` samples at rate
  ``bandwidth``; the transmit sampling period is ``1 / bandwidth``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C0

__all__ = [
    "OfdmConfig",
    "PilotGrid",
    "SampleStream",
    "build_pilot_grid",
    "generate_frame",
    "modulate",
    "demodulate",
]

_QPSK_POINTS = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))


def _pilot_lattice(extent: int, spacing: int) -> np.ndarray:
    """Pilot indices along one frame dimension.

    Multiples of ``spacing`` that fall inside the frame; when the spacing
    swallows the whole dimension the far edge is added so that at least two
    observation points remain for interpolation and slope fitting.
    """
    idx = np.arange(0, extent, spacing, dtype=np.int64)
    if idx.size == 1 and extent >= 2:
        idx = np.append(idx, extent - 1)
    return idx


@dataclass(frozen=True)
class OfdmConfig:
    """Waveform scalars and the derived quantities used everywhere else."""

    n_subcarriers: int
    n_symbols: int
    cp_len: int
    bandwidth: float
    carrier_freq: float
    pilot_subc_spacing: int
    pilot_sym_spacing: int

    def __post_init__(self):
        if self.n_subcarriers < 1 or self.n_symbols < 1:
            raise ValueError("frame dimensions must be >= 1")
        if self.cp_len < 0:
            raise ValueError("cp_len must be >= 0")
        if self.bandwidth <= 0 or self.carrier_freq <= 0:
            raise ValueError("bandwidth and carrier_freq must be > 0")
        if not 1 <= self.pilot_subc_spacing <= self.n_subcarriers:
            raise ValueError("pilot_subc_spacing out of range")
        if not 1 <= self.pilot_sym_spacing <= self.n_symbols:
            raise ValueError("pilot_sym_spacing out of range")

    @property
    def subcarrier_spacing(self) -> float:
        return self.bandwidth / self.n_subcarriers

    @property
    def sample_period(self) -> float:
        return 1.0 / self.bandwidth

    @property
    def wavelength(self) -> float:
        return C0 / self.carrier_freq

    @property
    def symbol_len(self) -> int:
        """Samples per CP-bearing OFDM symbol."""
        return self.n_subcarriers + self.cp_len

    @property
    def frame_len(self) -> int:
        """Samples in the serialised frame."""
        return self.n_symbols * self.symbol_len

    @property
    def subcarrier_index(self) -> np.ndarray:
        """Signed subcarrier index n for each storage row."""
        return np.arange(self.n_subcarriers) - self.n_subcarriers // 2

    @property
    def pilot_subcarrier_indices(self) -> np.ndarray:
        return _pilot_lattice(self.n_subcarriers, self.pilot_subc_spacing)

    @property
    def pilot_symbol_indices(self) -> np.ndarray:
        return _pilot_lattice(self.n_symbols, self.pilot_sym_spacing)

    @property
    def n_pilot_subcarriers(self) -> int:
        return int(self.pilot_subcarrier_indices.size)

    @property
    def n_pilot_symbols(self) -> int:
        return int(self.pilot_symbol_indices.size)


@dataclass(frozen=True)
class PilotGrid:
    """Known unit-magnitude pilot cells on the frame lattice."""

    subcarrier_indices: np.ndarray
    symbol_indices: np.ndarray
    values: np.ndarray  # (n_pilot_subcarriers, n_pilot_symbols)

    def __post_init__(self):
        for idx in (self.subcarrier_indices, self.symbol_indices):
            if np.any(np.diff(idx) <= 0):
                raise ValueError("pilot indices must be strictly increasing")
        if self.values.shape != (self.subcarrier_indices.size, self.symbol_indices.size):
            raise ValueError("pilot value matrix does not match the index lattice")
        if not np.allclose(np.abs(self.values), 1.0):
            raise ValueError("pilot values must have unit magnitude")


@dataclass(frozen=True)
class SampleStream:
    """Complex baseband samples at a fixed rate."""

    samples: np.ndarray
    sample_rate: float

    def __len__(self) -> int:
        return int(self.samples.size)


def build_pilot_grid(cfg: OfdmConfig, seed: int) -> PilotGrid:
    """Seeded unit-magnitude QPSK pilots on the uniform lattice of ``cfg``."""
    rows = cfg.pilot_subcarrier_indices
    cols = cfg.pilot_symbol_indices
    rng = np.random.default_rng(seed)
    values = _QPSK_POINTS[rng.integers(0, 4, size=(rows.size, cols.size))]
    return PilotGrid(rows, cols, values)


def generate_frame(cfg: OfdmConfig, pilots: PilotGrid, payload_seed: int) -> np.ndarray:
    """Transmit frame: QPSK payload everywhere, pilot cells overwritten."""
    if (
        pilots.subcarrier_indices.size != cfg.n_pilot_subcarriers
        or pilots.symbol_indices.size != cfg.n_pilot_symbols
        or pilots.subcarrier_indices[-1] >= cfg.n_subcarriers
        or pilots.symbol_indices[-1] >= cfg.n_symbols
    ):
        raise ValueError("pilot grid does not match the frame configuration")
    rng = np.random.default_rng(payload_seed)
    frame = _QPSK_POINTS[rng.integers(0, 4, size=(cfg.n_subcarriers, cfg.n_symbols))]
    frame[np.ix_(pilots.subcarrier_indices, pilots.symbol_indices)] = pilots.values
    return frame


def modulate(frame: np.ndarray, cfg: OfdmConfig) -> SampleStream:
    """Per-symbol IDFT, CP prepend, parallel-to-serial."""
    if frame.shape != (cfg.n_subcarriers, cfg.n_symbols):
        raise ValueError("frame shape does not match the configuration")
    sym = np.fft.ifft(np.fft.ifftshift(frame, axes=0), axis=0)
    if cfg.cp_len:
        sym = np.vstack([sym[-cfg.cp_len:, :], sym])
    return SampleStream(sym.T.reshape(-1), cfg.bandwidth)


def demodulate(stream: SampleStream, cfg: OfdmConfig) -> np.ndarray:
    """Inverse of :func:`modulate`: CP strip and per-symbol DFT."""
    samples = np.asarray(stream.samples)
    if samples.size < cfg.frame_len:
        raise ValueError(
            f"stream too short: {samples.size} < {cfg.frame_len} samples"
        )
    blocks = samples[: cfg.frame_len].reshape(cfg.n_symbols, cfg.symbol_len)
    return np.fft.fftshift(np.fft.fft(blocks[:, cfg.cp_len:], axis=1), axes=1).T
