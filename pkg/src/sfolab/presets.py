"""Named waveform configurations.

``table1`` is the full-scale parameter set the reference experiments use;
``desk`` is the scaled-down variant for fast sweeps and CI, with every
expected value recomputed from the closed forms instead of copied.
"""

from __future__ import annotations

from .ofdm import OfdmConfig

__all__ = ["table1", "desk", "get_preset", "PRESETS"]


def table1() -> OfdmConfig:
    return OfdmConfig(
        n_subcarriers=2048,
        n_symbols=4096,
        cp_len=512,
        bandwidth=500e6,
        carrier_freq=26.2e9,
        pilot_subc_spacing=2,
        pilot_sym_spacing=4,
    )


def desk() -> OfdmConfig:
    return OfdmConfig(
        n_subcarriers=512,
        n_symbols=512,
        cp_len=128,
        bandwidth=500e6,
        carrier_freq=26.2e9,
        pilot_subc_spacing=2,
        pilot_sym_spacing=4,
    )


PRESETS = {"table1": table1, "desk": desk}


def get_preset(name: str) -> OfdmConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
