"""Command-line front end.

Subcommands: ``limits``, ``effects``, ``bounds``, ``estimate``, ``image``,
``sweep``.  Each one maps onto the in-memory API; ``sweep`` runs a TOML
experiment spec and writes the result CSV.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np
from scipy.constants import c as C0

from . import analysis
from .channel import ChannelScenario, PropagationPath, apply_channel
from .correction import farrow_resample, zf_phase_correct
from .estimation import SfoMethod, estimate_sfo
from .harness import TargetSpec, load_spec, run_experiment, write_csv
from .ofdm import build_pilot_grid, demodulate, generate_frame, modulate
from .presets import PRESETS, get_preset
from .radar import WindowKind, peak_report, range_doppler_image, recenter_on_reference

PPM = 1e-6


def _add_cfg_arg(parser):
    parser.add_argument("--preset", default="desk", choices=sorted(PRESETS),
                        help="waveform preset (default: desk)")


def _add_common(parser):
    parser.add_argument("--delta", type=float, default=0.0, help="normalized SFO in ppm")
    parser.add_argument("--snr", type=float, default=20.0, help="reference-path SNR in dB")
    parser.add_argument("--seed", type=int, default=1234)


def _scenario(args, targets=()):
    paths = (PropagationPath(0.0, 0.0, 1.0, is_reference=True),) + tuple(targets)
    return ChannelScenario(paths=paths, delta=args.delta * PPM, snr_db=args.snr,
                           noise_seed=args.seed)


def cmd_limits(args) -> int:
    cfg = get_preset(args.preset)
    lim = analysis.sfo_limits(cfg)
    print(f"ICI-free |delta| < {lim.ici_limit / PPM:.2f} ppm")
    print(f"ISI-free 0 <= delta < {lim.isi_limit / PPM:.2f} ppm")
    return 0


def cmd_effects(args) -> int:
    cfg = get_preset(args.preset)
    delta = args.delta * PPM
    mig = analysis.delay_migration(cfg.n_symbols, delta, cfg)
    n_half = cfg.n_subcarriers // 2
    f_lo = analysis.subcarrier_freq_shift(-n_half, delta, cfg)
    f_hi = analysis.subcarrier_freq_shift(n_half, delta, cfg)
    alpha = analysis.sfo_amplitude(delta, cfg)
    print(f"delay migration over the frame: {mig * 1e9:.3f} ns = {C0 * float(mig):.3f} m")
    print(f"subcarrier frequency shift endpoints: {f_lo:.1f} Hz .. {f_hi:.1f} Hz")
    print(f"worst amplitude modulation: {20 * np.log10(np.min(np.abs(alpha))):.2f} dB")
    return 0


def cmd_bounds(args) -> int:
    cfg = get_preset(args.preset)
    m_pil = args.m_pil or cfg.n_pilot_symbols
    rep = analysis.bound_report(10 ** (args.snr / 10.0), args.eta, cfg, m_pil)
    print(f"delay std floor (unbiased): {rep.sigma_tau_crlb * 1e12:.4f} ps")
    print(f"delay std floor (grid argmax, eta={args.eta}): {rep.sigma_tau_mle * 1e12:.4f} ps")
    print(f"SFO std floor (unbiased, {m_pil} pilot symbols): {rep.sigma_delta_crlb / PPM:.3g} ppm")
    print(f"SFO std floor (grid argmax): {rep.sigma_delta_mle / PPM:.3g} ppm")
    return 0


def cmd_estimate(args) -> int:
    cfg = get_preset(args.preset)
    pilots = build_pilot_grid(cfg, args.seed)
    frame = generate_frame(cfg, pilots, args.seed + 1)
    tx = modulate(frame, cfg)
    base = _scenario(args)
    estimates, m_useds = [], []
    for trial in range(args.trials):
        scen = dataclasses.replace(base, noise_seed=args.seed + trial)
        rx = apply_channel(tx, scen, cfg)
        est = estimate_sfo(
            demodulate(rx, cfg), pilots, cfg, SfoMethod(args.method),
            eta=args.eta, delta_max=args.delta_max * PPM, epsilon=args.epsilon,
            window=WindowKind.CHEBYSHEV_100DB,
        )
        estimates.append(est.delta_hat)
        m_useds.append(est.m_pil_used)
    err = np.asarray(estimates) - args.delta * PPM
    print(f"method={args.method} delta_hat={np.mean(estimates) / PPM:.4f} ppm "
          f"(rmse {np.sqrt(np.mean(err**2)) / PPM:.4f} ppm over {args.trials} trial(s)), "
          f"mean pilot symbols used: {np.mean(m_useds):.1f}")
    return 0


def _parse_target(text: str) -> TargetSpec:
    try:
        rng, dopp, amp = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            "target must be 'rel_range_m,doppler_hz,rel_amp_db'"
        ) from None
    return TargetSpec(rng, dopp, amp)


def cmd_image(args) -> int:
    cfg = get_preset(args.preset)
    pilots = build_pilot_grid(cfg, args.seed)
    frame = generate_frame(cfg, pilots, args.seed + 1)
    rx = apply_channel(modulate(frame, cfg), _scenario(args, (t.as_path() for t in args.target)), cfg)
    if args.correct == "tito-farrow":
        est = estimate_sfo(demodulate(rx, cfg), pilots, cfg, SfoMethod.TITO,
                           eta=args.eta, delta_max=args.delta_max * PPM, epsilon=args.epsilon,
                           window=WindowKind.CHEBYSHEV_100DB)
        rx = farrow_resample(rx, est.delta_hat, cfg)
        print(f"corrected with delta_hat = {est.delta_hat / PPM:.4f} ppm")
    grid = demodulate(rx, cfg)
    if args.correct == "zf":
        grid = zf_phase_correct(grid, args.delta * PPM, cfg)
    img = range_doppler_image(grid, frame, cfg, window=WindowKind(args.window))
    if args.recenter:
        img = recenter_on_reference(img)
    rep = peak_report(img)
    print(f"peak: {rep.range_m:.2f} m, {rep.doppler_hz:.1f} Hz, "
          f"magnitude {rep.magnitude_db:.2f} dB, SINR {rep.sinr_db:.2f} dB")
    if args.out:
        _write_image_csv(img, args.out)
        print(f"wrote {args.out}")
    return 0


def _write_image_csv(img, path: str) -> None:
    mag_db = 20 * np.log10(np.maximum(img.pixels, 1e-300))
    header = "range_m\\doppler_hz," + ",".join(f"{f:.6g}" for f in img.doppler_axis)
    lines = [header]
    for i, r in enumerate(img.range_axis):
        lines.append(f"{r:.6g}," + ",".join(f"{v:.3f}" for v in mag_db[i]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_sweep(args) -> int:
    spec = load_spec(args.config)
    if args.out:
        spec = dataclasses.replace(spec, csv_path=args.out)
    rows = run_experiment(spec)
    if not spec.csv_path and not args.out:
        write_csv(rows, spec.name + ".csv")
        print(f"wrote {spec.name}.csv")
    for row in rows:
        print(f"{row['axis_point']:>28} {row['method']:>6}: "
              f"rmse {row['rmse_ppm']:.4g} ppm, bias {row['bias_ppm']:+.4g} ppm, "
              f"mean pilot symbols {row['mean_mpil_used']:.1f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfolab",
                                     description="pilot-based SFO estimation testbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("limits", help="print ICI/ISI-free SFO limits")
    _add_cfg_arg(p)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("effects", help="closed-form SFO effect magnitudes")
    _add_cfg_arg(p)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_effects)

    p = sub.add_parser("bounds", help="estimator accuracy floors")
    _add_cfg_arg(p)
    p.add_argument("--snr", type=float, default=20.0)
    p.add_argument("--eta", type=int, default=20)
    p.add_argument("--m-pil", type=int, default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("estimate", help="run estimation trials on a synthetic link")
    _add_cfg_arg(p)
    _add_common(p)
    p.add_argument("--method", default="tito", choices=[m.value for m in SfoMethod])
    p.add_argument("--eta", type=int, default=20)
    p.add_argument("--delta-max", type=float, default=1000.0, help="ppm")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=1)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("image", help="emit a range-Doppler image")
    _add_cfg_arg(p)
    _add_common(p)
    p.add_argument("--target", action="append", type=_parse_target, default=[],
                   metavar="RANGE_M,DOPPLER_HZ,AMP_DB")
    p.add_argument("--window", default="rectangular",
                   choices=[w.value for w in WindowKind])
    p.add_argument("--correct", default="none", choices=["none", "tito-farrow", "zf"])
    p.add_argument("--recenter", action="store_true")
    p.add_argument("--eta", type=int, default=20)
    p.add_argument("--delta-max", type=float, default=1000.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--out", default=None, help="CSV path for the image")
    p.set_defaults(func=cmd_image)

    p = sub.add_parser("sweep", help="run a TOML experiment spec")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the CSV output path")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
