import json

import pytest
import yaml

from histtag.cli import load_run_config, main, validate_config
from histtag.errors import ConfigError
from histtag.serialization import file_sha256
from histtag.toydata import write_toy_dataset


@pytest.fixture(scope="module")
def toy(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy")
    return write_toy_dataset(out, seed=0)


def write_config(path, body) -> str:
    path.write_text(yaml.safe_dump(body), encoding="utf-8")
    return str(path)


class TestConfigValidation:
    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown key"):
            validate_config({"dataa": {}})

    @pytest.mark.parametrize("section,body", [
        ("data", {"trian": "x"}),
        ("smlm", {"pkeep": 0.9}),
        ("tagger", {"hidden": 4}),
        ("eval", {"run": 1}),
        ("vocab", {"file": "x"}),
    ])
    def test_unknown_key_in_section(self, section, body):
        with pytest.raises(ConfigError, match=section):
            validate_config({section: body})

    def test_unknown_lm_field(self):
        with pytest.raises(ConfigError, match="lm.forward"):
            validate_config({"lm": {"forward": {"hidden": 8}}})

    @pytest.mark.parametrize("components", [
        {"kind": "word_table"},                      # not a list
        [{"path": "x"}],                             # missing kind
        [{"kind": "glove", "path": "x"}],            # unknown kind
        [{"kind": "word_table", "dim": 5}],          # key from wrong kind
        [{"kind": "contextual", "forward": "f"}],    # fine keys checked later
    ])
    def test_embeddings_shape(self, components):
        if components == [{"kind": "contextual", "forward": "f"}]:
            validate_config({"embeddings": components})
        else:
            with pytest.raises(ConfigError):
                validate_config({"embeddings": components})

    def test_yaml_errors(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("data: [unclosed", encoding="utf-8")
        with pytest.raises(ConfigError, match="YAML"):
            load_run_config(bad)
        not_map = tmp_path / "list.yaml"
        not_map.write_text("- a\n- b\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="mapping"):
            load_run_config(not_map)
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "missing.yaml")

    def test_empty_file_is_empty_config(self, tmp_path):
        empty = tmp_path / "empty.yaml"
        empty.write_text("", encoding="utf-8")
        assert load_run_config(empty) == {}


class TestVocabCommand:
    def test_union_of_two_datasets(self, toy, tmp_path, capsys):
        out = tmp_path / "vocab.txt"
        rc = main(["vocab", "--plain", str(toy["lm_corpus"]),
                   "--conll", str(toy["train"]), "--output", str(out)])
        assert rc == 0
        assert "2 source(s)" in capsys.readouterr().out
        header = out.read_text(encoding="utf-8").splitlines()[0]
        assert header.startswith("# histtag vocab v1:")

    def test_rerun_byte_identical(self, toy, tmp_path):
        out = tmp_path / "vocab.txt"
        argv = ["vocab", "--conll", str(toy["train"]), "--output", str(out)]
        assert main(argv) == 0
        first = out.read_bytes()
        assert main(argv) == 0
        assert out.read_bytes() == first

    def test_missing_input_is_usage_error(self, tmp_path):
        rc = main(["vocab", "--plain", str(tmp_path / "nope.txt"),
                   "--output", str(tmp_path / "v.txt")])
        assert rc == 2

    def test_no_inputs_is_usage_error(self, tmp_path):
        assert main(["vocab", "--output", str(tmp_path / "v.txt")]) == 2

    def test_config_driven(self, toy, tmp_path):
        out = tmp_path / "v.txt"
        cfg = write_config(tmp_path / "c.yaml", {
            "data": {"train": str(toy["train"]),
                     "lm_corpus": str(toy["lm_corpus"])},
            "vocab": {"path": str(out)},
        })
        assert main(["vocab", "--config", cfg]) == 0
        assert out.exists()


class TestSmlmCommand:
    def test_flags_round_trip(self, toy, tmp_path):
        out = tmp_path / "corrupted.txt"
        stats = tmp_path / "stats.txt"
        rc = main(["smlm", "--input", str(toy["lm_corpus"]),
                   "--vocab", str(toy["lm_corpus"]),
                   "--p-keep", "0.9", "--seed", "7",
                   "--output", str(out), "--stats", str(stats)])
        assert rc == 0
        original = toy["lm_corpus"].read_text(encoding="utf-8").splitlines()
        corrupted = out.read_text(encoding="utf-8").splitlines()
        assert len(original) == len(corrupted)
        assert all(len(a) == len(b) for a, b in zip(original, corrupted))
        assert "corruption report" in stats.read_text(encoding="utf-8")

    def test_deterministic_and_manifest_hashes(self, toy, tmp_path):
        outs = []
        for name in ("a.txt", "b.txt"):
            out = tmp_path / name
            rc = main(["smlm", "--input", str(toy["lm_corpus"]),
                       "--vocab", str(toy["lm_corpus"]), "--seed", "3",
                       "--output", str(out)])
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        manifest = json.loads(
            (tmp_path / "a.txt.manifest.json").read_text(encoding="utf-8"))
        assert manifest["artifacts"]["output"]["sha256"] == \
            file_sha256(tmp_path / "a.txt")
        assert manifest["seeds"] == {"smlm": 3}
        assert "timestamp" not in json.dumps(manifest)

    def test_vocab_file_accepted(self, toy, tmp_path):
        vocab_file = tmp_path / "vocab.txt"
        assert main(["vocab", "--plain", str(toy["lm_corpus"]),
                     "--output", str(vocab_file)]) == 0
        via_file = tmp_path / "via_file.txt"
        via_data = tmp_path / "via_data.txt"
        for vocab_arg, out in ((vocab_file, via_file),
                               (toy["lm_corpus"], via_data)):
            assert main(["smlm", "--input", str(toy["lm_corpus"]),
                         "--vocab", str(vocab_arg), "--seed", "1",
                         "--output", str(out)]) == 0
        assert via_file.read_bytes() == via_data.read_bytes()

    def test_missing_output_is_usage_error(self, toy):
        rc = main(["smlm", "--input", str(toy["lm_corpus"]),
                   "--vocab", str(toy["lm_corpus"])])
        assert rc == 2


LM_SECTION = {
    "seed": 5,
    "forward": {"char_embed_dim": 8, "hidden_size": 8,
                "sequence_length": 30, "epochs": 1, "dropout": 0.0},
    "backward": {"char_embed_dim": 8, "hidden_size": 8,
                 "sequence_length": 30, "epochs": 1, "dropout": 0.0},
}


class TestLmCommands:
    def test_train_both_directions(self, toy, tmp_path, capsys):
        out_dir = tmp_path / "lm"
        cfg = write_config(tmp_path / "c.yaml", {
            "lm": {**LM_SECTION, "corpus": str(toy["lm_corpus"]),
                   "output_dir": str(out_dir)},
        })
        assert main(["lm", "train", "--config", cfg]) == 0
        for name in ("forward.bin", "backward.bin", "forward_log.json",
                     "backward_log.json", "manifest.json"):
            assert (out_dir / name).exists(), name
        log = json.loads((out_dir / "forward_log.json").read_text())
        assert len(log["epochs"]) == 1
        assert log["initial_test_perplexity"] > 0

    def test_epochs_flag_overrides_config(self, toy, tmp_path):
        out_dir = tmp_path / "lm"
        cfg = write_config(tmp_path / "c.yaml", {
            "lm": {**LM_SECTION, "corpus": str(toy["lm_corpus"]),
                   "output_dir": str(out_dir)},
        })
        assert main(["lm", "train", "--config", cfg, "--direction",
                     "forward", "--epochs", "2"]) == 0
        log = json.loads((out_dir / "forward_log.json").read_text())
        assert len(log["epochs"]) == 2
        assert not (out_dir / "backward.bin").exists()

    def test_ppl_plain_and_conll(self, toy, tmp_path, capsys):
        out_dir = tmp_path / "lm"
        cfg = write_config(tmp_path / "c.yaml", {
            "lm": {**LM_SECTION, "corpus": str(toy["lm_corpus"]),
                   "output_dir": str(out_dir)},
        })
        assert main(["lm", "train", "--config", cfg, "--direction",
                     "forward"]) == 0
        capsys.readouterr()
        assert main(["lm", "ppl", "--model", str(out_dir / "forward.bin"),
                     "--input", str(toy["lm_corpus"])]) == 0
        plain = float(capsys.readouterr().out.split()[-1])
        assert plain > 1.0
        report = tmp_path / "ppl.txt"
        assert main(["lm", "ppl", "--model", str(out_dir / "forward.bin"),
                     "--input", str(toy["test"]), "--format", "conll",
                     "--output", str(report)]) == 0
        assert report.read_text(encoding="utf-8").startswith("perplexity ")

    def test_bad_model_file_is_runtime_error(self, toy, tmp_path):
        junk = tmp_path / "junk.bin"
        junk.write_bytes(b"not a model")
        rc = main(["lm", "ppl", "--model", str(junk),
                   "--input", str(toy["lm_corpus"])])
        assert rc == 1

    def test_unknown_config_key_is_usage_error(self, toy, tmp_path):
        cfg = write_config(tmp_path / "c.yaml",
                           {"lm": {"corpuss": str(toy["lm_corpus"])}})
        assert main(["lm", "train", "--config", cfg]) == 2


def ner_config(tmp_path, toy, out_dir, **tagger_overrides):
    tagger = {"lstm_hidden": 8, "learning_rate": 0.5, "mini_batch": 8,
              "max_epochs": 2, "seed": 11, **tagger_overrides}
    return write_config(tmp_path / "ner.yaml", {
        "data": {"train": str(toy["train"]), "dev": str(toy["dev"]),
                 "test": str(toy["test"]), "scheme": "iob2"},
        "embeddings": [{"kind": "char_features",
                        "embed_dim": 6, "hidden": 6}],
        "tagger": tagger,
        "eval": {"runs": 2, "output_dir": str(out_dir)},
    })


class TestNerTrain:
    def test_runs_artifacts_and_summary(self, toy, tmp_path, capsys):
        out_dir = tmp_path / "ner"
        cfg = ner_config(tmp_path, toy, out_dir)
        assert main(["ner", "train", "--config", cfg]) == 0
        for run in ("run0", "run1"):
            for name in ("model.bin", "predictions.conll", "report.txt",
                         "report.json", "training_log.json"):
                assert (out_dir / run / name).exists(), f"{run}/{name}"
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["evaluated_on"] == "test"
        assert len(summary["runs"]) == 2
        assert summary["mean_f1"] == pytest.approx(
            sum(summary["runs"]) / 2)
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["seeds"] == {"base_seed": 11, "runs": [11, 12]}

    def test_derived_seeds_differ_across_runs(self, toy, tmp_path):
        out_dir = tmp_path / "ner"
        cfg = ner_config(tmp_path, toy, out_dir)
        assert main(["ner", "train", "--config", cfg]) == 0
        logs = [json.loads((out_dir / f"run{i}" / "training_log.json")
                           .read_text()) for i in range(2)]
        # different seeds give different loss traces
        assert logs[0]["records"][0]["train_loss"] != \
            logs[1]["records"][0]["train_loss"]

    def test_manifest_reexecution_identical_hashes(self, toy, tmp_path):
        out_dir = tmp_path / "ner"
        cfg = ner_config(tmp_path, toy, out_dir)
        assert main(["ner", "train", "--config", cfg, "--runs", "1"]) == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        recorded = {k: v["sha256"]
                    for k, v in manifest["artifacts"].items()}
        rerun_cfg = write_config(tmp_path / "rerun.yaml", manifest["config"])
        import shutil
        shutil.rmtree(out_dir)
        assert main(["ner", "train", "--config", rerun_cfg]) == 0
        fresh = {k: file_sha256(v["path"])
                 for k, v in manifest["artifacts"].items()}
        assert fresh == recorded

    def test_flag_overrides_reach_training(self, toy, tmp_path):
        out_dir = tmp_path / "ner"
        cfg = ner_config(tmp_path, toy, out_dir)
        assert main(["ner", "train", "--config", cfg, "--runs", "1",
                     "--max-epochs", "1", "--seed", "99"]) == 0
        log = json.loads((out_dir / "run0" / "training_log.json").read_text())
        assert len(log["records"]) == 1
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["seeds"]["base_seed"] == 99

    def test_missing_data_path_is_usage_error(self, toy, tmp_path):
        cfg = write_config(tmp_path / "c.yaml", {
            "data": {"train": str(tmp_path / "absent.conll"),
                     "dev": str(toy["dev"])},
            "eval": {"output_dir": str(tmp_path / "o")},
        })
        assert main(["ner", "train", "--config", cfg]) == 2

    def test_embedding_paths_checked_before_training(self, toy, tmp_path):
        cfg = write_config(tmp_path / "c.yaml", {
            "data": {"train": str(toy["train"]), "dev": str(toy["dev"])},
            "embeddings": [{"kind": "contextual",
                            "forward": str(tmp_path / "no_f.bin"),
                            "backward": str(tmp_path / "no_b.bin")}],
            "eval": {"output_dir": str(tmp_path / "o")},
        })
        assert main(["ner", "train", "--config", cfg]) == 2


@pytest.fixture(scope="module")
def trained(toy, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("trained")
    cfg = ner_config(out_dir, toy, out_dir / "ner",
                     max_epochs=6, learning_rate=1.0)
    assert main(["ner", "train", "--config", cfg, "--runs", "1"]) == 0
    return out_dir / "ner" / "run0" / "model.bin"


class TestPredictAndEval:
    def test_predict_then_eval_matches_report(self, toy, trained, tmp_path,
                                              capsys):
        pred = tmp_path / "pred.conll"
        assert main(["ner", "predict", "--model", str(trained),
                     "--input", str(toy["test"]), "--output",
                     str(pred)]) == 0
        capsys.readouterr()
        report_path = tmp_path / "eval.json"
        assert main(["eval", "--predictions", str(pred),
                     "--output", str(report_path)]) == 0
        assert "micro" in capsys.readouterr().out
        cli_report = json.loads(report_path.read_text(encoding="utf-8"))
        stored = json.loads(
            (trained.parent / "report.json").read_text(encoding="utf-8"))
        assert cli_report["micro"]["f1"] == pytest.approx(stored["micro"]["f1"])

    def test_eval_gold_pred_pair(self, toy, tmp_path, capsys):
        assert main(["eval", "--gold", str(toy["test"]),
                     "--pred", str(toy["test"])]) == 0
        out = capsys.readouterr().out
        assert "micro" in out and "1.0000" in out

    def test_eval_requires_an_input(self):
        assert main(["eval"]) == 2

    def test_eval_rejects_conflicting_inputs(self, toy):
        assert main(["eval", "--predictions", str(toy["test"]),
                     "--gold", str(toy["test"]),
                     "--pred", str(toy["test"])]) == 2

    def test_predict_wrong_model_kind_is_runtime_error(self, toy, tmp_path):
        from histtag.serialization import save_tensors
        path = tmp_path / "wrong.bin"
        save_tensors(path, {"kind": "charlm"}, [])
        rc = main(["ner", "predict", "--model", str(path),
                   "--input", str(toy["test"]),
                   "--output", str(tmp_path / "p.conll")])
        assert rc == 1
