import json

import numpy as np
import pytest

import pathmargin as pm
from pathmargin.cli import main


@pytest.fixture
def base_config(tmp_path):
    doc = {
        "seed": 7,
        "dataset": {"generator": "blobs2d", "params": {"m": 24, "std": 0.3}},
        "network": {"input_dim": 2, "hidden_widths": [4], "slope_neg": 0.1},
        "training": {"learning_rate": 0.05, "momentum": 0.0, "batch_size": None,
                     "max_iters": 4000, "init_std": 0.1},
        "output_dir": str(tmp_path / "out"),
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path, doc


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


class TestTrainKernelNsv:
    def test_train_then_kernel_then_nsv(self, base_config, capsys, tmp_path):
        config, _ = base_config
        code, out = run_cli(capsys, "train", "--config", str(config))
        assert code == 0
        assert out["achieved_zero_training_error"] is True
        weights = out["weights_path"]

        code, out = run_cli(capsys, "kernel", "--config", str(config),
                            "--weights", weights)
        assert code == 0
        gram_rows = open(out["gram_path"]).read().splitlines()
        assert len(gram_rows) == 24
        sidecar = json.loads(open(out["sidecar_path"]).read())
        assert sidecar["m"] == 24

        code, out = run_cli(capsys, "nsv", "--config", str(config),
                            "--weights", weights)
        assert code == 0
        assert out["s"] >= 1
        assert out["s"] == len(out["support_indices"])

    def test_override_flag_changes_training(self, base_config, capsys):
        config, _ = base_config
        code, out = run_cli(capsys, "train", "--config", str(config),
                            "--training.max_iters", "1",
                            "--training.learning_rate", "1e-9")
        assert code == 0
        assert out["achieved_zero_training_error"] is False

    def test_nsv_gated_refusal_exit_code(self, base_config, capsys, tmp_path):
        config, _ = base_config
        code, out = run_cli(capsys, "train", "--config", str(config),
                            "--training.max_iters", "1",
                            "--training.learning_rate", "1e-9")
        weights = out["weights_path"]
        code = main(["nsv", "--config", str(config), "--weights", weights])
        assert code == 3

    def test_validation_error_exit_code(self, tmp_path):
        missing = tmp_path / "missing.json"
        assert main(["train", "--config", str(missing)]) == 2

    def test_nonseparable_exit_code(self, base_config, capsys, tmp_path):
        config, doc = base_config
        code, out = run_cli(capsys, "train", "--config", str(config))
        weights = out["weights_path"]
        # same inputs, duplicated with flipped labels: not separable
        data = pm.generate_dataset("blobs2d", {"m": 24, "std": 0.3},
                                   pm.derive_seed(7, "data"))
        X = np.vstack([data.features, data.features[:4]])
        y = np.concatenate([data.labels, -data.labels[:4]])
        csv = tmp_path / "clash.csv"
        pm.save_dataset_csv(pm.LabeledDataset(X, y), csv)
        # network no longer has zero training error on the clashing rows,
        # so bypass the gate by checking solve directly via exit code 4
        doc2 = dict(doc)
        doc2["dataset"] = {"path": str(csv)}
        config2 = tmp_path / "config2.json"
        config2.write_text(json.dumps(doc2))
        code = main(["nsv", "--config", str(config2), "--weights", weights])
        assert code in (3, 4)  # gate fires first unless labels happen to fit

    def test_wbar_check_success(self, base_config, capsys):
        config, _ = base_config
        code, out = run_cli(capsys, "train", "--config", str(config))
        weights = out["weights_path"]
        assert main(["wbar-check", "--weights", weights]) == 0

    def test_budget_exit_code(self, tmp_path):
        # 2 * 100^3 * 10 paths blows the 1e7 budget without big matrices
        rng = np.random.default_rng(0)
        cfg = pm.NetworkConfig(input_dim=2, hidden_widths=(100, 100, 100, 10),
                               slope_neg=0.1)
        w = pm.NetworkWeights([0.1 * rng.standard_normal(s)
                               for s in cfg.layer_shapes()])
        wpath = tmp_path / "big.json"
        pm.save_weights(wpath, w, cfg)
        assert main(["wbar-check", "--weights", str(wpath)]) == 5


class TestBound:
    def test_bound_json_shape(self, capsys):
        code, out = run_cli(capsys, "bound", "--m", "10000", "--n", "10",
                            "--s", "100", "--delta", "0.05")
        assert code == 0
        assert abs(out["F"] - 0.1589406819062993) < 1e-12
        assert abs(out["F_exact"] - 0.14695304141219918) < 1e-12
        assert out["vacuous"] is False
        assert [row["step"] for row in out["breakdown"]] == [
            "nsv-selection", "embedding-specification", "classifier-specification"]

    def test_bound_validation_exit(self):
        assert main(["bound", "--m", "10", "--n", "1", "--s", "10"]) == 2


class TestSkeletonRecover:
    def test_round_trip_outputs(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        cfg = pm.NetworkConfig(input_dim=2, hidden_widths=(3, 2), slope_neg=0.1)
        w = pm.NetworkWeights([rng.standard_normal(s) for s in cfg.layer_shapes()])
        wpath = tmp_path / "weights.json"
        pm.save_weights(wpath, w, cfg)
        code, out = run_cli(capsys, "skeleton", "recover", "--weights", str(wpath),
                            "--out-dir", str(tmp_path / "skel"))
        assert code == 0
        assert out["n_edges"] == 5
        assert out["max_relative_weight_error"] <= 1e-8
        skel = json.loads((tmp_path / "skel" / "skeleton.json").read_text())
        assert skel["n"] == 5
        assert len(skel["edges"]) == len(skel["signs"]) == 5

    def test_zero_function_reported(self, tmp_path, capsys):
        cfg = pm.NetworkConfig(input_dim=2, hidden_widths=(2, 2), slope_neg=0.1)
        w = pm.NetworkWeights([np.ones((2, 2)), np.zeros((2, 2)), np.ones((1, 2))])
        wpath = tmp_path / "weights.json"
        pm.save_weights(wpath, w, cfg)
        code, out = run_cli(capsys, "skeleton", "recover", "--weights", str(wpath))
        assert code == 0
        assert out["zero_function"] is True


class TestSweepSignaturesBoundaryAgree:
    def test_sweep_cli(self, tmp_path, capsys):
        doc = {
            "seed": 11,
            "dataset": {"generator": "blobs2d", "params": {"m": 20, "std": 0.3}},
            "network": {"input_dim": 2, "hidden_widths": [3], "slope_neg": 0.1},
            "training": {"learning_rate": 0.05, "momentum": 0.0, "batch_size": None,
                         "max_iters": 3000, "init_std": 0.1},
            "sweep": {"axis": "width", "values": [2, 3], "repetitions": 1},
            "output_dir": str(tmp_path / "sw"),
        }
        config = tmp_path / "config.json"
        config.write_text(json.dumps(doc))
        code, out = run_cli(capsys, "sweep", "--config", str(config))
        assert code == 0
        assert out["rows"] == 2
        assert (tmp_path / "sw" / "sweep.csv").exists()

    def test_signatures_cli(self, base_config, capsys):
        config, _ = base_config
        code, out = run_cli(capsys, "train", "--config", str(config))
        weights = out["weights_path"]
        code, out = run_cli(capsys, "signatures", "--config", str(config),
                            "--weights", weights)
        assert code == 0
        assert 1 <= out["unique_signatures"] <= out["m"]

    def test_boundary_and_agree(self, base_config, capsys, tmp_path):
        config, _ = base_config
        code, out = run_cli(capsys, "train", "--config", str(config))
        weights = out["weights_path"]
        grid_a = tmp_path / "a.csv"
        code, _ = run_cli(capsys, "boundary", "--weights", weights,
                          "--bbox", "-2", "2", "-2", "2",
                          "--resolution", "10", "--out", str(grid_a))
        assert code == 0
        code, out = run_cli(capsys, "agree", str(grid_a), str(grid_a))
        assert code == 0
        assert out["agreement"] == 1.0

    def test_margin_boundary_needs_solution(self, base_config, capsys):
        config, _ = base_config
        code, out = run_cli(capsys, "train", "--config", str(config))
        weights = out["weights_path"]
        assert main(["boundary", "--weights", weights, "--bbox", "-1", "1", "-1",
                     "1", "--out", "/tmp/x.csv", "--classifier", "margin"]) == 2

    def test_margin_boundary_full_path(self, base_config, capsys, tmp_path):
        config, _ = base_config
        code, out = run_cli(capsys, "train", "--config", str(config))
        weights = out["weights_path"]
        code, out = run_cli(capsys, "nsv", "--config", str(config),
                            "--weights", weights)
        solution = out["solution_path"]
        grid = tmp_path / "margin.csv"
        code, out = run_cli(capsys, "boundary", "--weights", weights,
                            "--bbox", "-2", "2", "-2", "2", "--resolution", "8",
                            "--out", str(grid), "--classifier", "margin",
                            "--config", str(config), "--solution", solution)
        assert code == 0
        rows = open(grid).read().splitlines()
        assert len(rows) == 8
