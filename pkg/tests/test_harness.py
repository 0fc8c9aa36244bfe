"""Sweep harness and CLI: descriptor parsing, orchestration, artifacts."""

import json

import numpy as np
import pytest

from dpdkit.cli import main
from dpdkit.errors import AlignmentError, ConfigurationError
from dpdkit.fixedpoint import FixedFormat
from dpdkit.harness import (
    DEFAULT_SWEEP,
    ExperimentSpec,
    descriptor_slug,
    emit_psd_overlay,
    parse_descriptor,
    run_sweep,
)
from dpdkit.mempoly import PolyShape, load_poly_model
from dpdkit.metrics import aclr_db_gated, evm_percent, psd_welch
from dpdkit.nn import load_net
from dpdkit.ofdm import OfdmConfig, demodulate_ofdm, generate_ofdm
from dpdkit.pa import load_default_pa
from dpdkit.signals import IqSignal
from dpdkit.training import TrainConfig

SMALL_WAVE = OfdmConfig(n_symbols=1, seed=1)
SMALL_TRAIN = TrainConfig(train_symbols=1, val_symbols=1)
PASSTHROUGH = TrainConfig(
    outer_iterations=0, epochs_per_iteration=(), train_symbols=1, val_symbols=1
)


def small_spec(tmp_path, **overrides) -> ExperimentSpec:
    base = dict(
        waveform=SMALL_WAVE,
        train=SMALL_TRAIN,
        dpd_list=[{"type": "poly", "P": 7, "taps": 1}],
        output_dir=str(tmp_path / "out"),
    )
    base.update(overrides)
    return ExperimentSpec(**base)


def baseline_metrics() -> tuple[float, float]:
    """No-DPD ACLR/EVM on the held-out frame of the small waveform."""
    val_cfg = OfdmConfig(n_symbols=1, seed=2)
    ref, x_val = generate_ofdm(val_cfg)
    y = load_default_pa().apply(x_val)
    return aclr_db_gated(y, val_cfg.dft_size), evm_percent(ref, demodulate_ofdm(y, val_cfg))


class TestParseDescriptor:
    def test_poly_dict(self):
        kind, shape = parse_descriptor({"type": "poly", "P": 7, "taps": 2, "Q": 3, "L": 1})
        assert kind == "poly"
        assert shape == PolyShape(7, 2, 3, 1)

    def test_poly_dict_defaults(self):
        _, shape = parse_descriptor({"type": "poly", "P": 9})
        assert shape == PolyShape(9, 1)

    def test_nn_dict(self):
        assert parse_descriptor({"type": "nn", "K": 2, "N": 8}) == ("nn", (2, 8))

    def test_text_forms(self):
        assert parse_descriptor("poly P=11 M=2")[1] == PolyShape(11, 2)
        assert parse_descriptor("poly P=7 M=2 Q=3 L=1")[1] == PolyShape(7, 2, 3, 1)
        assert parse_descriptor("nn_K1_N14") == ("nn", (1, 14))
        assert parse_descriptor("nn K=2 N=8") == ("nn", (2, 8))

    def test_descriptor_string_round_trips(self):
        for shape in [PolyShape(7, 1), PolyShape(13, 4), PolyShape(5, 2, 5, 2)]:
            assert parse_descriptor(shape.descriptor())[1] == shape

    def test_malformed_rejected(self):
        for bad in [
            {"type": "fir", "taps": 3},
            {"type": "poly", "taps": 1},
            {"type": "nn", "K": 0, "N": 4},
            {"type": "nn", "K": 1},
            "spline order=3",
            42,
        ]:
            with pytest.raises(ConfigurationError):
                parse_descriptor(bad)

    def test_slug_is_path_safe(self):
        assert descriptor_slug("poly P=7 M=1") == "poly_P7_M1"
        assert descriptor_slug("nn_K1_N14") == "nn_K1_N14"
        assert descriptor_slug("poly P=3 M=1 +dc") == "poly_P3_M1_dc"


class TestExperimentSpec:
    def test_defaults_are_valid(self):
        spec = ExperimentSpec()
        assert spec.dpd_list == DEFAULT_SWEEP
        assert spec.fixed_point is None

    def test_empty_dpd_list_rejected(self):
        with pytest.raises(ConfigurationError):
            ExperimentSpec(dpd_list=[])

    def test_bad_descriptor_rejected_up_front(self):
        with pytest.raises(ConfigurationError):
            ExperimentSpec(dpd_list=[{"type": "poly", "P": 6, "taps": 1}])

    def test_negative_seed_rejected(self):
        with pytest.raises(ConfigurationError):
            ExperimentSpec(seed=-1)

    def test_from_json(self, tmp_path):
        spec_file = tmp_path / "exp.json"
        spec_file.write_text(
            json.dumps(
                {
                    "waveform": {"n_symbols": 2, "seed": 5},
                    "train": {"outer_iterations": 1, "epochs_per_iteration": [4]},
                    "dpd_list": [{"type": "nn", "K": 1, "N": 6}],
                    "fixed_point": {"total_bits": 12, "frac_bits": 11},
                    "output_dir": "results",
                    "seed": 3,
                }
            )
        )
        spec = ExperimentSpec.from_json(spec_file)
        assert spec.waveform.n_symbols == 2 and spec.waveform.seed == 5
        assert spec.train.outer_iterations == 1
        assert spec.fixed_point == FixedFormat(total_bits=12, frac_bits=11)
        assert spec.output_dir == str(tmp_path / "results")
        assert spec.seed == 3

    def test_from_json_rejects_unknown_keys(self, tmp_path):
        spec_file = tmp_path / "exp.json"
        spec_file.write_text(json.dumps({"pa_model": "default"}))
        with pytest.raises(ConfigurationError):
            ExperimentSpec.from_json(spec_file)

    def test_from_json_rejects_bad_json(self, tmp_path):
        spec_file = tmp_path / "exp.json"
        spec_file.write_text("{not json")
        with pytest.raises(ConfigurationError):
            ExperimentSpec.from_json(spec_file)


class TestRunSweep:
    def test_passthrough_rows_equal_no_dpd_baseline(self, tmp_path):
        spec = small_spec(
            tmp_path,
            dpd_list=[{"type": "poly", "P": 7, "taps": 1}, {"type": "nn", "K": 1, "N": 6}],
            train=PASSTHROUGH,
        )
        rows = run_sweep(spec)
        aclr0, evm0 = baseline_metrics()
        assert len(rows) == 2
        for row in rows:
            assert row.status == "ok"
            assert row.aclr_db == aclr0
            assert row.evm_pct == evm0
        assert rows[0].n_params_real == 8 and rows[0].n_mults == 27
        assert rows[1].n_params_real == 32 and rows[1].n_mults == 24

    def test_ila_row_beats_passthrough(self, tmp_path):
        rows = run_sweep(small_spec(tmp_path))
        aclr0, evm0 = baseline_metrics()
        assert rows[0].status == "ok"
        assert rows[0].aclr_db < aclr0 - 10
        assert rows[0].evm_pct < evm0

    def test_artifacts_written(self, tmp_path):
        spec = small_spec(tmp_path)
        run_sweep(spec)
        out = tmp_path / "out"
        assert (out / "sweep.csv").exists()
        row_dir = out / "poly_P7_M1"
        model = load_poly_model(str(row_dir / "model.txt"))
        assert model.shape == PolyShape(7, 1)
        log_lines = (row_dir / "trainlog.csv").read_text().splitlines()
        assert log_lines[0] == "iteration,residual"
        assert len(log_lines) == 3  # two fit iterations
        psd_lines = (row_dir / "psd.csv").read_text().splitlines()
        assert psd_lines[0] == "freq_hz,power_db"

    def test_sweep_csv_bytes_reproducible(self, tmp_path):
        spec = small_spec(tmp_path, fixed_point=FixedFormat())
        run_sweep(spec)
        first = (tmp_path / "out" / "sweep.csv").read_bytes()
        run_sweep(spec)
        assert (tmp_path / "out" / "sweep.csv").read_bytes() == first

    def test_fixed_point_adds_matched_rows(self, tmp_path):
        spec = small_spec(tmp_path, fixed_point=FixedFormat())
        rows = run_sweep(spec)
        assert [r.mode for r in rows] == ["float", "fixed"]
        fl, fx = rows
        assert fl.descriptor == fx.descriptor
        assert abs(fl.aclr_db - fx.aclr_db) < 1.5
        # the deployed model is backed off below the Q1.15 ceiling
        model = load_poly_model(str(tmp_path / "out" / "poly_P7_M1" / "model.txt"))
        assert np.abs(model.alpha.real).max() < 1.0

    def test_nn_row_trains_and_persists(self, tmp_path):
        spec = small_spec(
            tmp_path,
            dpd_list=[{"type": "nn", "K": 1, "N": 4}],
            train=TrainConfig(
                outer_iterations=1,
                epochs_per_iteration=(30,),
                train_symbols=1,
                val_symbols=1,
            ),
        )
        rows = run_sweep(spec)
        assert rows[0].status == "ok"
        net = load_net(str(tmp_path / "out" / "nn_K1_N4" / "model.txt"))
        assert net.hidden_layers == 1 and net.width == 4
        log_lines = (tmp_path / "out" / "nn_K1_N4" / "trainlog.csv").read_text().splitlines()
        assert log_lines[0] == "iteration,phase,epoch,train_mse,val_mse"
        assert len(log_lines) == 1 + 60  # 30 amplifier-model epochs + 30 predistorter epochs

    def test_row_failure_is_captured_and_sweep_continues(self, tmp_path):
        spec = small_spec(
            tmp_path,
            dpd_list=[{"type": "poly", "P": 5, "taps": 1}, {"type": "nn", "K": 1, "N": 4}],
            train=TrainConfig(
                outer_iterations=1,
                epochs_per_iteration=(1,),
                learning_rate=1e160,
                train_symbols=1,
                val_symbols=1,
            ),
        )
        with np.errstate(all="ignore"):
            rows = run_sweep(spec)
        assert rows[0].status == "ok"
        assert rows[1].status.startswith("error: DivergenceError")
        text = (tmp_path / "out" / "sweep.csv").read_text()
        assert "error: DivergenceError" in text


class TestEmitPsdOverlay:
    def test_two_signals_share_a_grid(self, tmp_path):
        _, a = generate_ofdm(OfdmConfig(n_symbols=1, seed=5))
        _, b = generate_ofdm(OfdmConfig(n_symbols=1, seed=6))
        path = tmp_path / "overlay.csv"
        emit_psd_overlay([("plain", a), ("shaped", b)], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "freq_hz,plain_db,shaped_db"
        est = psd_welch(a)
        first = lines[1].split(",")
        assert float(first[0]) == est.freqs_hz[0]
        assert float(first[1]) == est.power_db[0]
        assert len(lines) == 1 + len(est.freqs_hz)

    def test_single_signal_degenerates_to_psd_csv(self, tmp_path):
        _, a = generate_ofdm(OfdmConfig(n_symbols=1, seed=5))
        path = tmp_path / "single.csv"
        emit_psd_overlay([("anything", a)], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "freq_hz,power_db"

    def test_rate_mismatch_rejected(self, tmp_path):
        _, a = generate_ofdm(OfdmConfig(n_symbols=1, seed=5))
        b = IqSignal(a.samples, a.sample_rate_hz / 2)
        with pytest.raises(AlignmentError):
            emit_psd_overlay([("a", a), ("b", b)], tmp_path / "x.csv")

    def test_empty_list_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_psd_overlay([], tmp_path / "x.csv")


class TestCli:
    def test_generate_writes_signal(self, tmp_path):
        out = tmp_path / "frame.csv"
        assert main(["generate", "--symbols", "1", "--wave-seed", "7", "--out", str(out)]) == 0
        assert out.exists()

    def test_generate_is_bitwise_reproducible(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["generate", "--symbols", "1", "--wave-seed", "7", "--out", str(a)])
        main(["generate", "--symbols", "1", "--wave-seed", "7", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_sweep_and_report(self, tmp_path):
        out = tmp_path / "run"
        code = main(
            ["sweep", "--dpd", "poly P=7 M=1", "--dpd", "poly P=5 M=1",
             "--wave-seed", "1", "--out", str(out), "--iterations", "0"]
        )
        assert code == 0
        assert (out / "sweep.csv").exists()
        report = tmp_path / "report.csv"
        assert main(["report", "--sweep", str(out), "--out", str(report)]) == 0
        lines = report.read_text().splitlines()
        assert lines[0] == "descriptor,n_params,n_mults,aclr_db,evm_pct"
        assert len(lines) == 3

    def test_train_single_descriptor(self, tmp_path):
        out = tmp_path / "run"
        code = main(
            ["train", "--dpd", "poly P=3 M=1", "--wave-seed", "1", "--out", str(out),
             "--iterations", "1"]
        )
        assert code == 0
        assert (out / "poly_P3_M1" / "model.txt").exists()

    def test_psd_verb(self, tmp_path):
        sig = tmp_path / "frame.csv"
        main(["generate", "--symbols", "1", "--wave-seed", "3", "--out", str(sig)])
        overlay = tmp_path / "psd.csv"
        assert main(["psd", "--out", str(overlay), f"base={sig}", str(sig)]) == 0
        lines = overlay.read_text().splitlines()
        assert lines[0] == "freq_hz,base_db,frame_db"

    def test_missing_spec_file_exits_2(self, tmp_path):
        assert main(["sweep", "--spec", str(tmp_path / "nope.json")]) == 2

    def test_bad_spec_contents_exit_2(self, tmp_path):
        spec = tmp_path / "exp.json"
        spec.write_text(json.dumps({"dpd_list": []}))
        assert main(["sweep", "--spec", str(spec)]) == 2

    def test_failed_row_exits_1(self, tmp_path):
        spec = tmp_path / "exp.json"
        spec.write_text(
            json.dumps(
                {
                    "waveform": {"n_symbols": 1, "seed": 1},
                    "train": {
                        "outer_iterations": 1,
                        "epochs_per_iteration": [1],
                        "learning_rate": 1e160,
                        "train_symbols": 1,
                        "val_symbols": 1,
                    },
                    "dpd_list": [{"type": "nn", "K": 1, "N": 4}],
                    "output_dir": str(tmp_path / "run"),
                }
            )
        )
        with np.errstate(all="ignore"):
            assert main(["sweep", "--spec", str(spec)]) == 1

    def test_flags_override_spec_file(self, tmp_path):
        spec = tmp_path / "exp.json"
        spec.write_text(
            json.dumps(
                {
                    "waveform": {"n_symbols": 1, "seed": 1},
                    "train": {"train_symbols": 1, "val_symbols": 1},
                    "dpd_list": [{"type": "poly", "P": 9, "taps": 1}],
                    "output_dir": str(tmp_path / "run"),
                }
            )
        )
        code = main(["sweep", "--spec", str(spec), "--dpd", "poly P=3 M=1"])
        assert code == 0
        text = (tmp_path / "run" / "sweep.csv").read_text()
        assert "poly P=3 M=1" in text and "P=9" not in text
