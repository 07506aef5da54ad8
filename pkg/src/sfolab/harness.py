"""Monte-Carlo sweep harness: experiment specs, deterministic trial seeding,
CSV emission and the composed residual-shift correction baseline.

A sweep crosses the SNR axis with the SFO axis; each point shares one
noiseless channel evaluation across trials and draws per-trial noise from
seeds derived from ``(base_seed, point index, trial index)``, so results are
byte-identical regardless of scheduling.  Worker count is capped by the
``SFO_LAB_THREADS`` environment variable.
"""

from __future__ import annotations

import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.constants import c as C0

from .analysis import delay_migration
from .channel import ChannelScenario, PropagationPath, noise_std, propagate, receive_symbols
from .correction import farrow_resample
from .estimation import SfoMethod, estimate_sfo_from_cfr
from .ofdm import OfdmConfig, SampleStream, build_pilot_grid, demodulate, generate_frame, modulate
from .presets import get_preset
from .radar import WindowKind, evm_db

__all__ = [
    "TargetSpec",
    "ExperimentSpec",
    "run_experiment",
    "write_csv",
    "load_spec",
    "residual_shift_correct",
    "phase_with_residual_shift",
]

CSV_FIELDS = [
    "axis_point",
    "method",
    "trials",
    "rmse_ppm",
    "bias_ppm",
    "mean_mpil_used",
    "mean_sinr_db",
    "mean_evm_db",
]

PPM = 1e-6


@dataclass(frozen=True)
class TargetSpec:
    """Point target relative to the reference path."""

    rel_range_m: float
    doppler_hz: float
    rel_amp_db: float

    def as_path(self) -> PropagationPath:
        return PropagationPath(
            delay=self.rel_range_m / C0,
            doppler=self.doppler_hz,
            attenuation=10.0 ** (self.rel_amp_db / 20.0),
        )


@dataclass(frozen=True)
class ExperimentSpec:
    """One reproducible sweep: waveform, scenario template, axes, seeds."""

    name: str
    cfg: OfdmConfig
    delta_ppm: tuple[float, ...] = (0.0,)
    snr_db: tuple[float, ...] = (20.0,)
    methods: tuple[SfoMethod, ...] = (SfoMethod.TITO,)
    n_trials: int = 10
    base_seed: int = 1234
    eta: int = 20
    delta_max_ppm: float = 1000.0
    epsilon: float = 0.1
    cir_window: WindowKind = WindowKind.CHEBYSHEV_100DB
    targets: tuple[TargetSpec, ...] = ()
    measure_evm: bool = False
    csv_path: str | None = None
    plot_path: str | None = None

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if not self.delta_ppm or not self.snr_db or not self.methods:
            raise ValueError("sweep axes must be non-empty")
        object.__setattr__(self, "delta_ppm", tuple(float(d) for d in self.delta_ppm))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "methods", tuple(SfoMethod(m) for m in self.methods))
        object.__setattr__(self, "targets", tuple(self.targets))

    def axis_points(self) -> list[tuple[float, float]]:
        return list(product(self.snr_db, self.delta_ppm))


def _axis_label(snr_db: float, delta_ppm: float) -> str:
    return f"snr{snr_db:g}dB_delta{delta_ppm:g}ppm"


def _trial_rng(base_seed: int, point_idx: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(point_idx, trial)))


def _evm_symbols(cfg: OfdmConfig, n: int = 8) -> np.ndarray:
    return np.unique(np.linspace(0, cfg.n_symbols - 1, n).astype(int))


def _run_point(spec: ExperimentSpec, point_idx: int) -> list[dict]:
    cfg = spec.cfg
    snr_db, delta_ppm = spec.axis_points()[point_idx]
    pilots = build_pilot_grid(cfg, spec.base_seed)
    frame = generate_frame(cfg, pilots, spec.base_seed + 1)
    tx = modulate(frame, cfg)
    scen = ChannelScenario(
        paths=(PropagationPath(0.0, 0.0, 1.0, is_reference=True),)
        + tuple(t.as_path() for t in spec.targets),
        delta=delta_ppm * PPM,
        snr_db=snr_db,
    )
    sigma_t = noise_std(float(np.mean(np.abs(tx.samples) ** 2)), scen)
    sigma_f = sigma_t * np.sqrt(cfg.n_subcarriers)
    if spec.measure_evm:
        # full-stream mode: the estimate must see the same noise realization
        # as the stream it corrects
        rx_clean = propagate(tx, scen, cfg, frame=frame)
        evm_syms = _evm_symbols(cfg)
    else:
        clean = receive_symbols(tx, scen, cfg, cfg.pilot_symbol_indices, frame=frame)

    stats = {
        m: {"err": [], "m_used": [], "sinr": [], "evm": []} for m in spec.methods
    }
    for trial in range(spec.n_trials):
        rng = _trial_rng(spec.base_seed, point_idx, trial)
        if spec.measure_evm:
            stream_noise = rng.normal(size=rx_clean.size) + 1j * rng.normal(size=rx_clean.size)
            rx = SampleStream(rx_clean + sigma_t / np.sqrt(2.0) * stream_noise, cfg.bandwidth)
            grid = demodulate(rx, cfg)
            y = grid[:, cfg.pilot_symbol_indices]
        else:
            noise = rng.normal(size=clean.shape) + 1j * rng.normal(size=clean.shape)
            y = clean + sigma_f / np.sqrt(2.0) * noise
        cfr = y[pilots.subcarrier_indices, :] / pilots.values
        for method in spec.methods:
            est = estimate_sfo_from_cfr(
                cfr,
                cfg,
                method,
                eta=spec.eta,
                delta_max=spec.delta_max_ppm * PPM,
                epsilon=spec.epsilon,
                window=spec.cir_window,
            )
            rec = stats[method]
            rec["err"].append(est.delta_hat - delta_ppm * PPM)
            rec["m_used"].append(est.m_pil_used)
            rec["sinr"].append(est.track.peak_sinr_db[0] if est.track is not None else np.nan)
            if spec.measure_evm:
                corrected = demodulate(farrow_resample(rx, est.delta_hat, cfg), cfg)
                rec["evm"].append(evm_db(corrected[:, evm_syms], frame[:, evm_syms]))

    rows = []
    for method in spec.methods:
        rec = stats[method]
        err = np.asarray(rec["err"])
        rows.append(
            {
                "axis_point": _axis_label(snr_db, delta_ppm),
                "method": method.value,
                "trials": spec.n_trials,
                "rmse_ppm": float(np.sqrt(np.mean(err**2)) / PPM),
                "bias_ppm": float(np.mean(err) / PPM),
                "mean_mpil_used": float(np.mean(rec["m_used"])),
                "mean_sinr_db": float(np.mean(rec["sinr"])),
                "mean_evm_db": float(np.mean(rec["evm"])) if rec["evm"] else float("nan"),
            }
        )
    return rows


def _worker_count(n_points: int) -> int:
    env = os.environ.get("SFO_LAB_THREADS")
    if env is not None:
        return max(1, min(int(env), n_points))
    return max(1, min(os.cpu_count() or 1, n_points, 4))


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    """Run the sweep and return result rows (also writes CSV/plot if asked)."""
    n_points = len(spec.axis_points())
    workers = _worker_count(n_points)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_point, [spec] * n_points, range(n_points)))
    else:
        chunks = [_run_point(spec, i) for i in range(n_points)]
    rows = [row for chunk in chunks for row in chunk]
    if spec.csv_path:
        write_csv(rows, spec.csv_path)
    if spec.plot_path:
        plot_rmse(rows, spec.plot_path)
    return rows


def write_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in CSV_FIELDS})


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def plot_rmse(rows: list[dict], path: str) -> None:
    """Optional SVG convenience; the CSV is the contract."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    methods = sorted({row["method"] for row in rows})
    for method in methods:
        pts = [(row["axis_point"], row["rmse_ppm"]) for row in rows if row["method"] == method]
        ax.semilogy([p[0] for p in pts], [max(p[1], 1e-12) for p in pts], marker="o", label=method)
    ax.set_xlabel("axis point")
    ax.set_ylabel("RMSE (ppm)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    plt.setp(ax.get_xticklabels(), rotation=45, ha="right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# composed baseline: phase estimate + resampling + per-symbol integer shifts
# ---------------------------------------------------------------------------

def residual_shift_correct(rx: SampleStream, residual_delta: float, cfg: OfdmConfig) -> SampleStream:
    """Undo residual delay migration by integer-shifting each OFDM symbol.

    Compensates range migration only; the per-subcarrier frequency shift
    (Doppler migration) of a residual SFO is untouched.
    """
    x = np.asarray(rx.samples)
    out = np.zeros(cfg.frame_len, dtype=complex)
    sym_len = cfg.symbol_len
    for m in range(cfg.n_symbols):
        shift = int(np.round(delay_migration(m, residual_delta, cfg) / cfg.sample_period))
        lo = m * sym_len + shift
        hi = lo + sym_len
        src_lo, src_hi = max(lo, 0), min(hi, x.size)
        if src_lo >= src_hi:
            continue
        dst = m * sym_len + (src_lo - lo)
        out[dst : dst + (src_hi - src_lo)] = x[src_lo:src_hi]
    return SampleStream(out, rx.sample_rate)


def phase_with_residual_shift(
    rx: SampleStream,
    pilots,
    cfg: OfdmConfig,
    *,
    eta: int = 20,
    delta_max: float = 1e-3,
    epsilon: float = 0.1,
    window: WindowKind = WindowKind.CHEBYSHEV_100DB,
) -> tuple[SampleStream, dict]:
    """Phase-baseline SFO correction plus residual range-migration shifting.

    First pass: phase-ramp estimate and Farrow resampling.  Second pass: the
    leftover SFO is measured from the delay track of the resampled stream
    and compensated symbol-by-symbol in the discrete-time domain.
    """
    grid = demodulate(rx, cfg)
    cfr = grid[np.ix_(pilots.subcarrier_indices, pilots.symbol_indices)] / pilots.values
    first = estimate_sfo_from_cfr(
        cfr, cfg, SfoMethod.PHASE, eta=eta, delta_max=delta_max, epsilon=epsilon, window=window
    )
    resampled = farrow_resample(rx, first.delta_hat, cfg)
    grid2 = demodulate(resampled, cfg)
    cfr2 = grid2[np.ix_(pilots.subcarrier_indices, pilots.symbol_indices)] / pilots.values
    second = estimate_sfo_from_cfr(
        cfr2, cfg, SfoMethod.TITO, eta=eta, delta_max=delta_max, epsilon=epsilon, window=window
    )
    corrected = residual_shift_correct(resampled, second.delta_hat, cfg)
    diagnostics = {"phase_delta_hat": first.delta_hat, "residual_delta_hat": second.delta_hat}
    return corrected, diagnostics


# ---------------------------------------------------------------------------
# TOML experiment files
# ---------------------------------------------------------------------------

def load_spec(path: str) -> ExperimentSpec:
    """Read an :class:`ExperimentSpec` from a TOML file."""
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    if "ofdm" in doc:
        o = doc["ofdm"]
        cfg = OfdmConfig(
            n_subcarriers=o["n_subcarriers"],
            n_symbols=o["n_symbols"],
            cp_len=o["cp_len"],
            bandwidth=o["bandwidth"],
            carrier_freq=o["carrier_freq"],
            pilot_subc_spacing=o["pilot_subc_spacing"],
            pilot_sym_spacing=o["pilot_sym_spacing"],
        )
    else:
        cfg = get_preset(doc.get("preset", "desk"))
    targets = tuple(
        TargetSpec(t["rel_range_m"], t["doppler_hz"], t["rel_amp_db"])
        for t in doc.get("scenario", {}).get("targets", [])
    )
    output = doc.get("output", {})
    return ExperimentSpec(
        name=doc.get("name", os.path.splitext(os.path.basename(path))[0]),
        cfg=cfg,
        delta_ppm=tuple(doc.get("delta_ppm", [0.0])),
        snr_db=tuple(doc.get("snr_db", [20.0])),
        methods=tuple(doc.get("methods", ["tito"])),
        n_trials=doc.get("n_trials", 10),
        base_seed=doc.get("base_seed", 1234),
        eta=doc.get("eta", 20),
        delta_max_ppm=doc.get("delta_max_ppm", 1000.0),
        epsilon=doc.get("epsilon", 0.1),
        cir_window=WindowKind(doc.get("cir_window", "chebyshev_100db")),
        targets=targets,
        measure_evm=doc.get("measure_evm", False),
        csv_path=output.get("csv"),
        plot_path=output.get("plot"),
    )
