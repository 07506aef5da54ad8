import os
import subprocess
import sys

import numpy as np
import pytest

from sfolab import (
    ChannelScenario,
    OfdmConfig,
    PropagationPath,
    SampleStream,
    build_pilot_grid,
    demodulate,
    farrow_resample,
    generate_frame,
    image_peak,
    modulate,
    propagate,
    range_doppler_image,
)
from sfolab.cli import main
from sfolab.harness import (
    ExperimentSpec,
    TargetSpec,
    load_spec,
    phase_with_residual_shift,
    residual_shift_correct,
    run_experiment,
    write_csv,
)

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def tiny_cfg():
    return OfdmConfig(64, 32, 16, 1e6, 1e9, 2, 4)


def tiny_spec(**overrides):
    base = dict(
        name="tiny",
        cfg=tiny_cfg(),
        delta_ppm=(100.0, 500.0),
        snr_db=(20.0,),
        methods=("tito", "full"),
        n_trials=3,
        base_seed=5,
        eta=8,
    )
    base.update(overrides)
    return ExperimentSpec(**base)


class TestExperimentSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            tiny_spec(n_trials=0)
        with pytest.raises(ValueError):
            tiny_spec(delta_ppm=())

    def test_axis_points_cross_axes(self):
        spec = tiny_spec(snr_db=(0.0, 20.0))
        assert len(spec.axis_points()) == 4

    def test_loads_checked_in_config(self):
        spec = load_spec(os.path.join(CONFIG_DIR, "fig11_rmse_vs_delta_desk.toml"))
        assert spec.cfg.n_subcarriers == 512
        assert len(spec.methods) == 3
        assert spec.targets[0].rel_range_m == 5.0


class TestRunExperiment:
    def test_rows_and_sanity(self):
        rows = run_experiment(tiny_spec())
        assert len(rows) == 4  # 2 deltas x 2 methods
        for row in rows:
            assert row["trials"] == 3
            assert np.isfinite(row["rmse_ppm"])
        # in the ISI-free region both delay estimators see identical data
        by_key = {(r["axis_point"], r["method"]): r for r in rows}
        a = by_key[("snr20dB_delta100ppm", "tito")]
        b = by_key[("snr20dB_delta100ppm", "full")]
        assert a["rmse_ppm"] == b["rmse_ppm"]

    def test_deterministic_csv_across_worker_counts(self, tmp_path, monkeypatch):
        spec = tiny_spec(csv_path=str(tmp_path / "a.csv"))
        monkeypatch.setenv("SFO_LAB_THREADS", "1")
        run_experiment(spec)
        blob_serial = (tmp_path / "a.csv").read_bytes()
        monkeypatch.setenv("SFO_LAB_THREADS", "2")
        spec2 = tiny_spec(csv_path=str(tmp_path / "b.csv"))
        run_experiment(spec2)
        assert (tmp_path / "b.csv").read_bytes() == blob_serial

    def test_csv_schema(self, tmp_path):
        path = tmp_path / "out.csv"
        write_csv(run_experiment(tiny_spec()), str(path))
        header = path.read_text().splitlines()[0]
        assert header == (
            "axis_point,method,trials,rmse_ppm,bias_ppm,"
            "mean_mpil_used,mean_sinr_db,mean_evm_db"
        )

    def test_evm_measurement_path(self):
        rows = run_experiment(tiny_spec(measure_evm=True, delta_ppm=(100.0,), n_trials=2))
        assert all(np.isfinite(r["mean_evm_db"]) for r in rows)


class TestResidualShiftBaseline:
    def test_range_fixed_doppler_artifacts_remain(self):
        # integer symbol shifting re-aligns the range axis but leaves a
        # sawtooth slow-time phase (up to half a sample at the band edge)
        # whose harmonics show up as Doppler sidelobes that resampling does
        # not produce
        cfg = OfdmConfig(256, 1024, 64, 1e6, 1e9, 2, 4)
        pilots = build_pilot_grid(cfg, 1)
        frame = generate_frame(cfg, pilots, 2)
        tx = modulate(frame, cfg)
        residual = 60e-6
        scen = ChannelScenario(
            paths=(PropagationPath(0.0, 0.0, 1.0, is_reference=True),),
            delta=residual,
            snr_db=60.0,
        )
        rx = SampleStream(propagate(tx, scen, cfg, frame=frame), cfg.bandwidth)

        shifted = demodulate(residual_shift_correct(rx, residual, cfg), cfg)
        resampled = demodulate(farrow_resample(rx, residual, cfg), cfg)

        # both corrections put the reference back at zero range
        img_shift = range_doppler_image(shifted, frame, cfg)
        img_full = range_doppler_image(resampled, frame, cfg)
        assert image_peak(img_shift)[0] == 0
        assert image_peak(img_full)[0] == 0

        def phase_excursion(grid):
            # detrended slow-time phase on a quarter-band pilot subcarrier
            # (away from the band edge, where cubic interpolation is clean)
            k = pilots.subcarrier_indices.size // 4
            row = pilots.subcarrier_indices[k]
            cfr = grid[row, pilots.symbol_indices] / pilots.values[k]
            phase = np.unwrap(np.angle(cfr))
            trend = np.polyval(np.polyfit(np.arange(phase.size), phase, 1), np.arange(phase.size))
            return np.max(np.abs(phase - trend))

        saw = phase_excursion(shifted)
        smooth = phase_excursion(resampled)
        assert saw > 0.4  # about half a sample of drift at quarter band
        assert saw > 3 * smooth

        # the sawtooth harmonics raise the Doppler sidelobe floor at 0 range
        def doppler_outside_mainlobe_db(img):
            cut = img.pixels[0, :]
            dc = cut.size // 2
            mask = np.abs(np.arange(cut.size) - dc) > img.doppler_lobe_bins
            return 10 * np.log10(np.mean(cut[mask] ** 2) / cut[dc] ** 2)

        assert doppler_outside_mainlobe_db(img_shift) > doppler_outside_mainlobe_db(img_full) + 1.0

    def test_composed_pipeline_runs(self):
        cfg = OfdmConfig(128, 64, 32, 1e6, 1e9, 2, 4)
        pilots = build_pilot_grid(cfg, 1)
        frame = generate_frame(cfg, pilots, 2)
        tx = modulate(frame, cfg)
        scen = ChannelScenario(
            paths=(PropagationPath(0.0, 0.0, 1.0, is_reference=True),),
            delta=50e-6,
            snr_db=30.0,
        )
        rx = SampleStream(propagate(tx, scen, cfg, frame=frame), cfg.bandwidth)
        corrected, diag = phase_with_residual_shift(rx, pilots, cfg, eta=8)
        assert len(corrected) == cfg.frame_len
        assert abs(diag["phase_delta_hat"] - 50e-6) < 5e-6
        assert abs(diag["residual_delta_hat"]) < abs(diag["phase_delta_hat"])


class TestCli:
    def test_limits_table1(self, capsys):
        assert main(["limits", "--preset", "table1"]) == 0
        out = capsys.readouterr().out
        assert "97.66 ppm" in out
        assert "48.84 ppm" in out

    def test_effects_table1(self, capsys):
        assert main(["effects", "--preset", "table1", "--delta", "1"]) == 0
        out = capsys.readouterr().out
        assert "6.287 m" in out
        assert "-250.0 Hz .. 250.0 Hz" in out

    def test_bounds_runs(self, capsys):
        assert main(["bounds", "--preset", "desk", "--snr", "20", "--eta", "20"]) == 0
        assert "SFO std floor" in capsys.readouterr().out

    def test_estimate_runs(self, capsys):
        rc = main(
            ["estimate", "--preset", "desk", "--delta", "150", "--snr", "20",
             "--method", "tito", "--seed", "3", "--trials", "2"]
        )
        assert rc == 0
        out = capsys.readouterr().out
        import re

        value = float(re.search(r"delta_hat=([-\d.]+) ppm", out).group(1))
        assert abs(value - 150.0) < 1.0
        assert "over 2 trial(s)" in out

    def test_image_writes_csv(self, tmp_path, capsys):
        path = tmp_path / "img.csv"
        rc = main(
            ["image", "--preset", "desk", "--delta", "0", "--snr", "20",
             "--target", "5,5000,-30", "--recenter", "--out", str(path)]
        )
        assert rc == 0
        assert path.exists()
        assert "peak:" in capsys.readouterr().out

    def test_sweep_smoke_config(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SFO_LAB_THREADS", "2")
        out = tmp_path / "smoke.csv"
        rc = main(["sweep", "--config", os.path.join(CONFIG_DIR, "desk_smoke.toml"),
                   "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 2 * 2  # header + 2 deltas x 2 methods

    def test_invalid_config_exits_nonzero(self, capsys):
        assert main(["sweep", "--config", "/nonexistent.toml"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "sfolab.cli", "limits", "--preset", "desk"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "ICI-free" in proc.stdout
