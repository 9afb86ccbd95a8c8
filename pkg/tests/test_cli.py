"""End-to-end CLI pipelines, manifests, determinism, and exit codes."""

import json
import os

import pytest

from stablebal.cli import main


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def gen_config(tmp_path, out, n=120, p=6):
    return write_config(
        tmp_path,
        "gen.json",
        {
            "gen": {"setting": "S_indep_V", "n": n, "p": p, "r": 0.8,
                    "outcome_mode": "B", "seed": 3},
            "test_rates": [0.2, 0.5, 0.8],
            "out": str(out),
        },
    )


@pytest.fixture
def suite_dir(tmp_path):
    out = tmp_path / "suite"
    assert main(["generate", "--config", gen_config(tmp_path, out)]) == 0
    return out


class TestGenerate:
    def test_writes_suite_and_manifest(self, suite_dir):
        assert (suite_dir / "suite.json").exists()
        assert (suite_dir / "train.csv").exists()
        manifest = json.loads((suite_dir / "manifest.json").read_text())
        assert manifest["command"] == "generate"
        assert manifest["config"]["gen"]["n"] == 120

    def test_rerun_is_bitwise_identical(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["generate", "--config", gen_config(tmp_path, out1)]) == 0
        assert main(["generate", "--config", gen_config(tmp_path, out2)]) == 0
        for name in os.listdir(out1):
            if name == "manifest.json":
                # the manifest embeds the output path, which differs by design
                m1 = json.loads((out1 / name).read_text())
                m2 = json.loads((out2 / name).read_text())
                m1["config"].pop("out"), m2["config"].pop("out")
                assert m1 == m2
                continue
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_invalid_spec_is_config_error_before_writing(self, tmp_path):
        out = tmp_path / "bad"
        cfg = write_config(tmp_path, "bad.json", {"gen": {"p": 3}, "out": str(out)})
        assert main(["generate", "--config", cfg]) == 2
        assert not out.exists()

    def test_missing_out_is_config_error(self, tmp_path):
        cfg = write_config(tmp_path, "noout.json", {"gen": {}})
        assert main(["generate", "--config", cfg]) == 2

    def test_unreadable_config(self, tmp_path):
        assert main(["generate", "--config", str(tmp_path / "absent.json")]) == 2


class TestTrainEvalPipeline:
    def train(self, tmp_path, suite_dir, method, out_name):
        out = tmp_path / out_name
        cfg = write_config(
            tmp_path,
            f"train_{method}.json",
            {
                "suite": str(suite_dir / "suite.json"),
                "method": method,
                "hyper": {"max_outer_iters": 4, "lambda1": 2.0},
                "out": str(out),
            },
        )
        assert main(["train", "--config", cfg]) == 0
        return out

    @pytest.mark.parametrize("method", ["lr", "dlr", "gbr", "dgbr"])
    def test_all_methods_train_and_eval(self, tmp_path, suite_dir, method):
        model_dir = self.train(tmp_path, suite_dir, method, f"model_{method}")
        assert (model_dir / "model.json").exists()
        assert (model_dir / "trace.csv").exists()
        eval_out = tmp_path / f"eval_{method}"
        cfg = write_config(
            tmp_path,
            f"eval_{method}.json",
            {
                "suite": str(suite_dir / "suite.json"),
                "model": str(model_dir / "model.json"),
                "out": str(eval_out),
            },
        )
        assert main(["eval", "--config", cfg]) == 0
        payload = json.loads((eval_out / "sweep.json").read_text())
        assert len(payload["per_env"]) == 3
        assert payload["average_error"] >= 0.0

    def test_unknown_method(self, tmp_path, suite_dir):
        cfg = write_config(
            tmp_path, "badmethod.json",
            {"suite": str(suite_dir / "suite.json"), "method": "svm",
             "out": str(tmp_path / "x")},
        )
        assert main(["train", "--config", cfg]) == 2

    def test_bad_hyper(self, tmp_path, suite_dir):
        cfg = write_config(
            tmp_path, "badhyper.json",
            {"suite": str(suite_dir / "suite.json"),
             "hyper": {"lambda1": -1.0}, "out": str(tmp_path / "x")},
        )
        assert main(["train", "--config", cfg]) == 2

    def test_missing_suite_file_is_data_error(self, tmp_path):
        cfg = write_config(
            tmp_path, "nosuite.json",
            {"suite": str(tmp_path / "absent.json"), "out": str(tmp_path / "x")},
        )
        assert main(["train", "--config", cfg]) == 3

    def test_eval_single_environment_is_data_error(self, tmp_path, suite_dir):
        # build a one-environment suite by rewriting the manifest
        manifest = json.loads((suite_dir / "suite.json").read_text())
        manifest["tests"] = manifest["tests"][:1]
        single = suite_dir / "single.json"
        single.write_text(json.dumps(manifest))
        model_dir = self.train(tmp_path, suite_dir, "lr", "model_single")
        cfg = write_config(
            tmp_path, "eval_single.json",
            {"suite": str(single), "model": str(model_dir / "model.json"),
             "out": str(tmp_path / "eval_single")},
        )
        assert main(["eval", "--config", cfg]) == 3


class TestTune:
    def test_small_grid(self, tmp_path, suite_dir):
        out = tmp_path / "tune"
        cfg = write_config(
            tmp_path, "tune.json",
            {
                "suite": str(suite_dir / "suite.json"),
                "method": "gbr",
                "grid": [
                    {"max_outer_iters": 3, "lambda1": 1.0},
                    {"max_outer_iters": 3, "lambda1": 5.0},
                ],
                "out": str(out),
            },
        )
        assert main(["tune", "--config", cfg]) == 0
        payload = json.loads((out / "tuning.json").read_text())
        assert len(payload["table"]) == 2
        assert payload["best"]["lambda1"] in (1.0, 5.0)

    def test_empty_grid_is_config_error(self, tmp_path, suite_dir):
        cfg = write_config(
            tmp_path, "tune_empty.json",
            {"suite": str(suite_dir / "suite.json"), "grid": [],
             "out": str(tmp_path / "x")},
        )
        assert main(["tune", "--config", cfg]) == 2


class TestTheory:
    def test_grid_and_bound(self, tmp_path):
        out = tmp_path / "theory"
        cfg = write_config(
            tmp_path, "theory.json",
            {
                "expected_alpha_grid": {"n": [10, 100], "p": [2, 3]},
                "bound": {
                    "n": 1000, "p": 20, "layer_sizes": [20, 10, 5],
                    "lambda4": 1.0, "lambda5": 10.0, "lambda7": 1.0,
                    "bias_caps": [1.0, 1.0], "delta": 0.05,
                    "loss_sup": 5.0, "epsilon_l1": 0.01,
                },
                "out": str(out),
            },
        )
        assert main(["theory", "--config", cfg]) == 0
        lines = (out / "expected_alpha.csv").read_text().splitlines()
        assert lines[0] == "n,p,expected_alpha"
        assert len(lines) == 5
        bound = json.loads((out / "bound.json").read_text())
        assert bound["total"] > 0

    def test_empty_theory_config_is_config_error(self, tmp_path):
        cfg = write_config(tmp_path, "t.json", {"out": str(tmp_path / "x")})
        assert main(["theory", "--config", cfg]) == 2


class TestSeedOverride:
    def test_seed_flag_changes_generation(self, tmp_path):
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        cfg = gen_config(tmp_path, out1)
        assert main(["generate", "--config", cfg, "--seed", "99", "--out", str(out2)]) == 0
        assert main(["generate", "--config", cfg]) == 0
        assert (out1 / "train.csv").read_bytes() != (out2 / "train.csv").read_bytes()
