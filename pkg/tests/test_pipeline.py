import json

import numpy as np
import pytest

from noiselab import cli
from noiselab.config import ConfigError, ExperimentConfig, load_config, make_config
from noiselab.features import read_dataset
from noiselab.ml import load_model
from noiselab.pipeline import (
    StageError,
    cmd_evaluate,
    cmd_featurize,
    cmd_pipeline,
    cmd_simulate,
    cmd_train,
    corpus_seed,
)

SMALL = dict(
    sessions_per_noise=3000,
    block_count=5,
    block_size=300,
    shuffle_rounds=4,
    render_figures=False,
)


def small(**kw):
    return make_config(**{**SMALL, **kw})


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    report = cmd_pipeline(small(render_figures=True), out)
    return out, report


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert (cfg.sessions_per_noise, cfg.block_count, cfg.block_size, cfg.shuffle_rounds) == (200000, 50, 4000, 100)
        assert cfg.pca_components == 3 and cfg.knn_k == 2 and cfg.split_ratio == 0.7

    def test_gate_defaults(self):
        cfg = make_config(scenario="gate_based")
        assert set(cfg.noise_pair) == {"bit_flip", "depolarizing"}
        assert cfg.p_max == 0.1 and cfg.svm.kernel == "linear"
        b = make_config(scenario="gate_based", protocol="bbm92")
        assert b.pca_variance_threshold == 0.99 and b.pca_components is None

    def test_rejects_zero_sessions_listing_every_problem(self):
        with pytest.raises(ConfigError) as info:
            make_config(sessions_per_noise=0, knn_k=0, bogus=1)
        text = str(info.value)
        for field in ("sessions_per_noise", "knn_k", "bogus"):
            assert field in text

    @pytest.mark.parametrize(
        "bad",
        [
            {"noise_pair": ["bit_flip", "bit_flip"]},
            {"noise_pair": ["bit_flip", "phase_flip"]},
            {"p_max": 1.5},
            {"split_ratio": 1.0},
            {"classifiers": []},
            {"classifiers": ["tree"]},
            {"pca_components": 8},
            {"pca_components": 2, "pca_variance_threshold": 0.9},
            {"svm": {"kernel": "sigmoid"}},
            {"svm": {"C": 0}},
            {"block_count": 100, "block_size": 4000},
            {"hist_range": [1.0, 0.0]},
            {"master_seed": -1},
        ],
    )
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            make_config(**bad)

    def test_unusual_pair_warns(self):
        with pytest.warns(UserWarning):
            make_config(noise_pair=["bit_flip", "depolarizing"])

    def test_hash_changes_with_any_field(self):
        base = small()
        h = base.config_hash()
        assert small().config_hash() == h
        for change in ({"master_seed": 1}, {"knn_k": 3}, {"shuffle_rounds": 5}, {"svm": {"C": 2.0}}, {"bin_count": 12}):
            assert small(**change).config_hash() != h

    def test_save_load(self, tmp_path):
        cfg = small(classifiers=["knn", "svm"], svm={"kernel": "poly"})
        back = load_config(cfg.save(tmp_path / "c.json"))
        assert back == cfg and back.config_hash() == cfg.config_hash()


class TestPipeline:
    def test_artifacts(self, run_dir):
        out, report = run_dir
        for name in (
            "corpus_0.csv", "corpus_0.csv.json", "corpus_1.csv", "dataset.csv", "histogram_tips.csv",
            "split.json", "scree.csv", "model_pca.json", "model_knn.json", "model_gnb.json",
            "model_svm.json", "metrics.json", "run_report.json", "config.json", "pca_points.csv",
            "figures/histogram_tips.png", "figures/scree.png", "figures/decision_svm_test.png",
        ):
            assert (out / name).exists(), name
        assert set(report["metrics"]) == {"knn", "gnb", "svm"}
        assert report["provenance"]["corpus_seeds"] == [corpus_seed(0, 0), corpus_seed(0, 1)]
        assert report["errors"] == {}

    def test_sizes(self, run_dir):
        out, _ = run_dir
        ds = read_dataset(out / "dataset.csv")
        assert ds.X.shape == (2 * 5 * 4, 7)
        split = json.loads((out / "split.json").read_text())
        assert len(split["train"]) == 28 and len(split["test"]) == 12
        grid = np.loadtxt(out / "decision_grid_knn.csv", delimiter=",", skiprows=1)
        assert grid.shape == (40000, 3)

    def test_pca_uses_training_rows_only(self, run_dir):
        out, _ = run_dir
        ds = read_dataset(out / "dataset.csv")
        tr = json.loads((out / "split.json").read_text())["train"]
        pca = load_model(out / "model_pca.json")
        np.testing.assert_allclose(pca.feature_means, ds.X[tr].mean(axis=0), rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(pca.feature_scales, np.maximum(ds.X[tr].std(axis=0), 1e-12), rtol=1e-12)

    def test_evaluate_reproduces_train_accuracy(self, run_dir):
        out, report = run_dir
        train_report = json.loads((out / "train_report.json").read_text())
        for name, m in report["metrics"].items():
            assert m["train_accuracy"] == train_report["classifiers"][name]["train_accuracy"]

    def test_rerun_is_byte_identical(self, run_dir, tmp_path):
        out, _ = run_dir
        cmd_pipeline(small(render_figures=True), tmp_path)
        for name in ("corpus_0.csv", "corpus_1.csv", "dataset.csv", "model_pca.json", "model_knn.json",
                     "model_gnb.json", "model_svm.json", "metrics.json", "decision_grid_svm.csv"):
            assert (tmp_path / name).read_bytes() == (out / name).read_bytes(), name

    def test_single_classifier(self, tmp_path):
        cmd_pipeline(small(classifiers=["knn"]), tmp_path)
        assert sorted(p.name for p in tmp_path.glob("model_*.json")) == ["model_knn.json", "model_pca.json"]

    def test_stages_compose(self, tmp_path, run_dir):
        out, _ = run_dir
        cfg = small()
        a, b = cmd_simulate(cfg, tmp_path)
        cmd_featurize(a, b, cfg, tmp_path)
        cmd_train(tmp_path / "dataset.csv", cfg, tmp_path)
        metrics = cmd_evaluate(tmp_path, tmp_path / "dataset.csv", cfg, tmp_path)
        assert metrics == json.loads((out / "metrics.json").read_text())

    def test_split_before_augment(self, tmp_path):
        cfg = small(split_before_augment=True, sessions_per_noise=4000)
        report = cmd_pipeline(cfg, tmp_path)
        tr = read_dataset(tmp_path / "dataset_train.csv")
        te = read_dataset(tmp_path / "dataset_test.csv")
        assert len(tr.y) == 2 * 3 * 4 and len(te.y) == 2 * 2 * 4
        assert not (tmp_path / "dataset.csv").exists()
        assert set(report["metrics"]) == {"knn", "gnb", "svm"}

    def test_non_convergence_is_recorded(self, tmp_path):
        report = cmd_pipeline(small(classifiers=["svm"], svm={"max_iter": 1, "kernel": "rbf"}), tmp_path)
        assert "svm" in report["errors"]
        assert (tmp_path / "model_svm.json").exists()

    def test_stage_error(self, tmp_path):
        cfg = small()
        with pytest.raises(FileNotFoundError):
            cmd_train(tmp_path / "missing.csv", cfg, tmp_path)
        bad = small()
        bad.noise_pair = ("bit_flip", "nope")
        with pytest.raises(StageError) as info:
            cmd_pipeline(bad, tmp_path)
        assert info.value.stage == "simulate"


class TestCli:
    def write_cfg(self, tmp_path, **kw):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({**SMALL, **kw}))
        return str(path)

    def test_stages(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path)
        out = str(tmp_path / "o")
        for cmd in ("simulate", "featurize", "train", "evaluate"):
            assert cli.main([cmd, "--config", cfg, "--out", out]) == 0
        assert "test_accuracy" in capsys.readouterr().out

    def test_pipeline_with_seed(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path, classifiers=["gnb"])
        assert cli.main(["pipeline", "--config", cfg, "--out", str(tmp_path / "o"), "--seed", "4"]) == 0
        report = json.loads((tmp_path / "o" / "run_report.json").read_text())
        assert report["config"]["master_seed"] == 4

    def test_validation_exit(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path, sessions_per_noise=0)
        assert cli.main(["pipeline", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "sessions_per_noise" in capsys.readouterr().err

    def test_io_exit(self, tmp_path):
        assert cli.main(["train", "--config", self.write_cfg(tmp_path), "--out", str(tmp_path / "o")]) == 4
        assert cli.main(["pipeline", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 4

    def test_exit_code_mapping(self):
        from noiselab.ml import ConvergenceError

        assert cli.exit_code(StageError("train", ConvergenceError("x", None))) == 3
        assert cli.exit_code(StageError("simulate", OSError())) == 4
        assert cli.exit_code(ConfigError(["a"])) == 2
