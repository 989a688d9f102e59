"""
End-to-end tests for the command-line entry point.
"""

import json

import numpy as np
import pandas as pd
import pytest

from scoretest.artifacts import read_json, write_samples_csv
from scoretest.cli import EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION, main
from scoretest.models import load_model_spec
from scoretest.services.sampler_service import sample_rbm_mixture


def _write_config(path, payload) -> str:
    path.write_text(json.dumps(payload))
    return str(path)


class TestCheck:
    def test_gaussian_passes(self, data_dir, capsys):
        assert main(["check", str(data_dir / "models" / "gaussian_null.json")]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["passed"]
        assert report["probes"] == 20

    def test_quartic_passes(self, data_dir):
        assert main(["check", str(data_dir / "models" / "quartic_null.json")]) == EXIT_OK

    def test_corrupt_model(self, data_dir):
        assert main(["check", str(data_dir / "models" / "rbm_corrupt.json")]) == EXIT_VALIDATION

    def test_missing_file(self, tmp_path):
        assert main(["check", str(tmp_path / "absent.json")]) == EXIT_IO


class TestPerturb:
    def test_mean_perturbation(self, data_dir, tmp_path):
        out = tmp_path / "alt.json"
        code = main([
            "perturb", "--model", str(data_dir / "models" / "gaussian_null.json"),
            "--target", "mean", "--sigma-ptb", "0.01", "--seed", "3", "--out", str(out),
        ])
        assert code == EXIT_OK
        alt = load_model_spec(out)
        assert alt.family == "gaussian"
        assert 0 < np.linalg.norm(alt.params.mean) < 0.1

    def test_wrong_target(self, data_dir, tmp_path):
        code = main([
            "perturb", "--model", str(data_dir / "models" / "gaussian_null.json"),
            "--target", "tau", "--out", str(tmp_path / "alt.json"),
        ])
        assert code == EXIT_VALIDATION


class TestExponent:
    def test_identical_models_are_degenerate(self, data_dir, tmp_path):
        model = str(data_dir / "models" / "gaussian_null.json")
        config = _write_config(tmp_path / "same.json", {
            "null": model, "alternative": model, "exponent_samples": 1000, "output_dir": str(tmp_path / "out"),
        })
        assert main(["exponent", "--config", config]) == EXIT_OK
        report = read_json(tmp_path / "out" / "exponent.json")
        assert report["threshold_range"]["degenerate"]
        assert report["threshold"]["threshold"] == 0.0
        assert report["type1"]["exponent"] == 0.0
        assert report["type2"]["exponent"] == 0.0
        assert not (tmp_path / "out" / "exponent_curve.csv").exists()

    @pytest.mark.slow
    def test_gaussian_closed_form_and_monte_carlo(self, data_dir, tmp_path):
        code = main(["exponent", "--config", str(data_dir / "configs" / "gaussian_exponent.json"), "--out", str(tmp_path)])
        assert code == EXIT_OK
        report = read_json(tmp_path / "exponent.json")
        assert report["closed_form"]["type1"] == pytest.approx(0.125)
        assert report["closed_form"]["published_type1"] == 0.0
        assert report["type1"]["exponent"] == pytest.approx(0.125, abs=0.005)
        assert report["type1"]["m"] == 1_000_000
        assert report["config"]["seed"] == 0
        curve = pd.read_csv(tmp_path / "exponent_curve.csv")
        assert len(curve) == 11
        assert curve["type1_exponent"].is_monotonic_increasing
        assert curve["type2_exponent"].is_monotonic_decreasing

    def test_missing_config(self, tmp_path):
        assert main(["exponent", "--config", str(tmp_path / "absent.json")]) == EXIT_IO

    def test_invalid_config(self, tmp_path):
        config = _write_config(tmp_path / "bad.json", {"null": {"type": "gaussian", "mean": [0.0], "cov": [[1.0]]}})
        assert main(["exponent", "--config", config]) == EXIT_VALIDATION

    def test_train_n_needs_alternative_fit(self, data_dir, tmp_path):
        code = main([
            "exponent", "--config", str(data_dir / "configs" / "gaussian_exponent.json"),
            "--out", str(tmp_path), "--train-n", "10",
        ])
        assert code == EXIT_VALIDATION


class TestSweep:
    SMALL = ["--n-list", "1,2,4", "--trials", "500", "--pool-size", "2000"]

    def test_rerun_is_identical(self, data_dir, tmp_path):
        config = str(data_dir / "configs" / "gaussian_sweep.json")
        assert main(["sweep", "--config", config, "--out", str(tmp_path / "a"), *self.SMALL]) == EXIT_OK
        assert main(["sweep", "--config", config, "--out", str(tmp_path / "b"), *self.SMALL, "--workers", "3"]) == EXIT_OK
        for name in ("sweep.csv", "sweep_lrt.csv"):
            assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()

    def test_outputs(self, data_dir, tmp_path):
        config = str(data_dir / "configs" / "gaussian_sweep.json")
        assert main(["sweep", "--config", config, "--out", str(tmp_path), *self.SMALL]) == EXIT_OK
        frame = pd.read_csv(tmp_path / "sweep.csv")
        assert list(frame["n"]) == [1, 2, 4]
        assert np.allclose(frame["theo_exp1"], -0.125)
        metadata = read_json(tmp_path / "metadata.json")
        assert metadata["threshold"]["threshold"] == 0.0
        assert metadata["pool_sizes"] == {"null": 2000, "alternative": 2000}
        assert set(metadata["exact_alpha"]) == {"1", "2", "4"}

    def test_different_seed_changes_rates(self, data_dir, tmp_path):
        config = str(data_dir / "configs" / "gaussian_sweep.json")
        main(["sweep", "--config", config, "--out", str(tmp_path / "a"), *self.SMALL, "--estimator", "plain"])
        main(["sweep", "--config", config, "--out", str(tmp_path / "b"), *self.SMALL, "--estimator", "plain", "--seed", "1"])
        assert (tmp_path / "a" / "sweep.csv").read_text() != (tmp_path / "b" / "sweep.csv").read_text()


class TestTrainRbm:
    def test_writes_model_and_curve(self, data_dir, small_rbm, tmp_path):
        data = write_samples_csv(tmp_path / "samples.csv", sample_rbm_mixture(small_rbm, 500, seed=0))
        code = main([
            "train-rbm", "--data", str(data), "--init", str(data_dir / "models" / "rbm_small.json"),
            "--epochs", "2", "--out", str(tmp_path / "fit"),
        ])
        assert code == EXIT_OK
        assert load_model_spec(tmp_path / "fit" / "model.json").family == "rbm"
        assert len(pd.read_csv(tmp_path / "fit" / "loss.csv")) == 3
        summary = read_json(tmp_path / "fit" / "train.json")
        assert summary["final_objective"] <= summary["initial_objective"]
        assert summary["rows"] == 500

    def test_divergence_exits_numeric_and_keeps_curve(self, data_dir, small_rbm, tmp_path):
        data = write_samples_csv(tmp_path / "samples.csv", sample_rbm_mixture(small_rbm, 200, seed=1))
        code = main([
            "train-rbm", "--data", str(data), "--init", str(data_dir / "models" / "rbm_small.json"),
            "--epochs", "50", "--learning-rate", "1000", "--out", str(tmp_path / "fit"),
        ])
        assert code == EXIT_NUMERIC
        assert (tmp_path / "fit" / "loss.csv").exists()
        assert not (tmp_path / "fit" / "model.json").exists()


class TestPipeline:
    def test_ingest_train_sweep(self, data_dir, tmp_path):
        splits = tmp_path / "splits"
        code = main([
            "ingest", "--data", str(data_dir / "fixtures" / "kdd_synthetic.csv"),
            "--schema", str(data_dir / "fixtures" / "kdd_synthetic_schema.json"), "--out", str(splits),
        ])
        assert code == EXIT_OK
        summary = read_json(splits / "splits.json")
        assert summary["sizes"] == {"null": 380, "back": 40, "neptune": 60, "unknown": 20}

        code = main([
            "train-rbm", "--data", str(splits / "null.csv"), "--hidden", "2", "--epochs", "5",
            "--learning-rate", "0.01", "--out", str(tmp_path / "null_rbm"),
        ])
        assert code == EXIT_OK

        model = str(tmp_path / "null_rbm" / "model.json")
        config = _write_config(tmp_path / "sweep.json", {
            "null": model,
            "alternative": model,
            "alternative_fit": {
                "train": {"N": 10, "epochs": 20, "batch_size": 10, "learning_rate": 0.01},
                "data_csv": str(splits / "back.csv"),
            },
            "pools": {"null_csv": str(splits / "null.csv"), "alternative_csv": str(splits / "back.csv")},
            "sweep": {"n_list": [1, 2, 4], "trials_per_n": 200, "runs": 1},
            "threshold_policy": "n1-balance",
            "output_dir": str(tmp_path / "sweep"),
        })
        assert main(["sweep", "--config", config]) == EXIT_OK
        metadata = read_json(tmp_path / "sweep" / "metadata.json")
        assert metadata["N"] == 10
        assert metadata["threshold"]["policy"] == "n1-balance"
        assert metadata["pool_sizes"] == {"null": 380, "alternative": 40}
        assert len(pd.read_csv(tmp_path / "sweep" / "sweep.csv")) == 3

    def test_ingest_rejects_malformed_file(self, tmp_path, data_dir):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2\n3,4\n")
        code = main([
            "ingest", "--data", str(bad), "--schema", str(data_dir / "fixtures" / "kdd_small_schema.json"),
            "--out", str(tmp_path / "out"),
        ])
        assert code == EXIT_VALIDATION

    def test_ingest_missing_file_is_an_io_error(self, tmp_path, data_dir):
        code = main([
            "ingest", "--data", str(tmp_path / "absent.csv"),
            "--schema", str(data_dir / "fixtures" / "kdd_small_schema.json"), "--out", str(tmp_path / "out"),
        ])
        assert code == EXIT_IO
