"""Bistatic range-Doppler imaging and peak quality metrics.

The image is formed from the element-wise quotient of the receive and the
known transmit frame: window + IDFT along subcarriers (range), window + DFT
along symbols (Doppler).  With a rectangular window and a single on-bin path
the peak magnitude is exactly ``N * M * amplitude``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.constants import c as C0
from scipy.signal.windows import chebwin

from .ofdm import OfdmConfig

__all__ = [
    "WindowKind",
    "RadarImage",
    "PeakReport",
    "window_taps",
    "window_loss_db",
    "mainlobe_halfwidth_bins",
    "range_doppler_image",
    "recenter_on_reference",
    "image_peak",
    "peak_sinr",
    "profile_peak_sinr",
    "peak_report",
    "evm_db",
]

EVM_FLOOR_DB = -200.0


class WindowKind(str, Enum):
    RECTANGULAR = "rectangular"
    CHEBYSHEV_100DB = "chebyshev_100db"


def window_taps(kind: WindowKind, n: int) -> np.ndarray:
    kind = WindowKind(kind)
    if n < 2 or kind is WindowKind.RECTANGULAR:
        return np.ones(n)
    return chebwin(n, at=100.0)


def window_loss_db(kind: WindowKind, n: int) -> float:
    """Coherent-integration SNR loss of the window versus rectangular."""
    w = window_taps(kind, n)
    return float(-10.0 * np.log10(np.sum(w) ** 2 / (n * np.sum(w**2))))


def mainlobe_halfwidth_bins(kind: WindowKind, n_taps: int, pad_factor: int) -> int:
    """Peak-to-first-null distance of the window spectrum, in padded bins."""
    w = window_taps(kind, n_taps)
    mag = np.abs(np.fft.fft(w, n_taps * pad_factor))
    rising = np.flatnonzero(np.diff(mag) >= 0)
    if rising.size == 0:
        return max(1, pad_factor)
    return max(int(rising[0]), 1)


@dataclass(frozen=True)
class RadarImage:
    """Magnitude image with physical axes and the lobe geometry of its window."""

    pixels: np.ndarray  # (range bins, Doppler bins), real magnitude
    range_axis: np.ndarray  # meters, bin 0 = zero relative bistatic range
    doppler_axis: np.ndarray  # Hz, signed (DC at index n_doppler//2)
    window_kind: WindowKind
    range_lobe_bins: int
    doppler_lobe_bins: int


@dataclass(frozen=True)
class PeakReport:
    range_m: float
    doppler_hz: float
    magnitude_db: float
    sinr_db: float


def range_doppler_image(
    y: np.ndarray,
    x_known: np.ndarray,
    cfg: OfdmConfig,
    window: WindowKind = WindowKind.RECTANGULAR,
    range_pad: int = 1,
    doppler_pad: int = 1,
) -> RadarImage:
    """Form the range-Doppler image of ``y`` given the transmit frame."""
    if y.shape != x_known.shape or y.shape != (cfg.n_subcarriers, cfg.n_symbols):
        raise ValueError("grids must both match the frame configuration")
    if np.any(x_known == 0):
        raise ValueError("x_known contains zero entries")
    if range_pad < 1 or doppler_pad < 1:
        raise ValueError("padding factors must be >= 1")
    big_n, big_m = y.shape
    quotient = y / x_known
    quotient = quotient * window_taps(window, big_n)[:, None]
    quotient = quotient * window_taps(window, big_m)[None, :]
    z = np.fft.ifft(quotient, n=range_pad * big_n, axis=0) * (range_pad * big_n)
    z = np.fft.fft(z, n=doppler_pad * big_m, axis=1)
    z = np.fft.fftshift(z, axes=1)
    range_axis = np.arange(range_pad * big_n) * C0 / (range_pad * cfg.bandwidth)
    doppler_res = 1.0 / (big_m * cfg.symbol_len * cfg.sample_period)
    n_dopp = doppler_pad * big_m
    doppler_axis = (np.arange(n_dopp) - n_dopp // 2) * doppler_res / doppler_pad
    return RadarImage(
        pixels=np.abs(z),
        range_axis=range_axis,
        doppler_axis=doppler_axis,
        window_kind=WindowKind(window),
        range_lobe_bins=mainlobe_halfwidth_bins(window, big_n, range_pad),
        doppler_lobe_bins=mainlobe_halfwidth_bins(window, big_m, doppler_pad),
    )


def image_peak(img: RadarImage) -> tuple[int, int]:
    """Indices of the strongest image cell."""
    flat = int(np.argmax(img.pixels))
    return np.unravel_index(flat, img.pixels.shape)


def recenter_on_reference(img: RadarImage) -> RadarImage:
    """Circularly shift the image so the strongest peak sits at (0 m, 0 Hz)."""
    ri, di = image_peak(img)
    zero_dopp = img.doppler_axis.size // 2
    pixels = np.roll(np.roll(img.pixels, -ri, axis=0), zero_dopp - di, axis=1)
    return RadarImage(
        pixels=pixels,
        range_axis=img.range_axis,
        doppler_axis=img.doppler_axis,
        window_kind=img.window_kind,
        range_lobe_bins=img.range_lobe_bins,
        doppler_lobe_bins=img.doppler_lobe_bins,
    )


def _circular_distance(n: int, center: int) -> np.ndarray:
    d = np.abs(np.arange(n) - center)
    return np.minimum(d, n - d)


def peak_sinr(img: RadarImage, peak: tuple[int, int] | None = None) -> float:
    """Peak power over mean power outside the peak's main lobe, in dB."""
    if peak is None:
        peak = image_peak(img)
    ri, di = peak
    power = img.pixels**2
    in_lobe = (
        (_circular_distance(power.shape[0], ri) <= img.range_lobe_bins)[:, None]
        & (_circular_distance(power.shape[1], di) <= img.doppler_lobe_bins)[None, :]
    )
    outside = power[~in_lobe]
    if outside.size == 0:
        raise ValueError("main lobe covers the whole image")
    return float(10.0 * np.log10(power[ri, di] / np.mean(outside)))


def profile_peak_sinr(column: np.ndarray, peak_bin: int, lobe_halfwidth: int) -> float:
    """Same ratio for one delay-profile column."""
    power = np.abs(column) ** 2
    outside = power[_circular_distance(power.size, peak_bin) > lobe_halfwidth]
    if outside.size == 0:
        raise ValueError("main lobe covers the whole profile")
    return float(10.0 * np.log10(power[peak_bin] / np.mean(outside)))


def peak_report(img: RadarImage) -> PeakReport:
    ri, di = image_peak(img)
    return PeakReport(
        range_m=float(img.range_axis[ri]),
        doppler_hz=float(img.doppler_axis[di]),
        magnitude_db=float(20.0 * np.log10(img.pixels[ri, di])),
        sinr_db=peak_sinr(img, (ri, di)),
    )


def evm_db(rx: np.ndarray, ref: np.ndarray) -> float:
    """Error vector magnitude of ``rx`` against ``ref``, in dB."""
    rx = np.asarray(rx)
    ref = np.asarray(ref)
    if rx.size == 0 or rx.shape != ref.shape:
        raise ValueError("rx and ref must be non-empty and equally shaped")
    err = np.mean(np.abs(rx - ref) ** 2)
    if err == 0:
        return EVM_FLOOR_DB
    return float(np.maximum(10.0 * np.log10(err / np.mean(np.abs(ref) ** 2)), EVM_FLOOR_DB))
