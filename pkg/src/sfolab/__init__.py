"""Desk-scale simulation of pilot-based SFO estimation and correction for
bistatic OFDM sensing: waveform, channel, estimators, bounds, imaging and a
Monte-Carlo sweep harness."""

from .analysis import (
    BoundReport,
    SfoLimits,
    bound_report,
    delay_bounds,
    delay_migration,
    freq_shift_migration,
    link_budget_snr,
    processing_gain_db,
    sfo_amplitude,
    sfo_delay,
    sfo_limits,
    sfo_phase,
    sfo_std_bounds,
    subcarrier_freq_shift,
)
from .channel import (
    ChannelScenario,
    PropagationPath,
    analytic_subcarrier_oracle,
    apply_channel,
    bistatic_doppler,
    noise_std,
    propagate,
    receive_symbols,
    reference_attenuation,
    target_attenuation,
)
from .correction import ResamplerConfig, ResamplerStructure, farrow_resample, zf_phase_correct
from .estimation import (
    DelaySlowTimeProfile,
    DelayTrack,
    SfoEstimate,
    SfoMethod,
    cir_profile,
    estimate_sfo,
    estimate_sfo_from_cfr,
    extract_pilot_cfr,
    ls_sfo,
    tito_select,
    track_reference_delay,
)
from .ofdm import OfdmConfig, PilotGrid, SampleStream, build_pilot_grid, demodulate, generate_frame, modulate
from .presets import desk, get_preset, table1
from .radar import (
    PeakReport,
    RadarImage,
    WindowKind,
    evm_db,
    image_peak,
    peak_report,
    peak_sinr,
    profile_peak_sinr,
    range_doppler_image,
    recenter_on_reference,
    window_loss_db,
)

__version__ = "0.1.0"
