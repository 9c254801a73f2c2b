import json
from pathlib import Path

import pytest

from speakerfp.cli import main
from speakerfp.config import RunConfig, config_from_dict, load_config
from speakerfp.corpus import apply_labels, write_canonical
from speakerfp.errors import ConfigError
from speakerfp.runner import run
from speakerfp.synthetic import exclusive_vocabulary_corpus

from helpers import DATA


@pytest.fixture
def synthetic_canonical(tmp_path):
    corpus, label_map = exclusive_vocabulary_corpus(n_scenes=30, seed=5)
    path = tmp_path / "corpus.jsonl"
    write_canonical(corpus, path)
    return path, label_map


def base_config(corpus_path, out_dir, label_map):
    return config_from_dict(
        {
            "corpus": str(corpus_path),
            "output_dir": str(out_dir),
            "label_map": {"main_speakers": list(label_map.main_speakers)},
            "split": {"mode": "random", "ratios": [0.8, 0.1, 0.1], "seed": 3},
            "max_previous_context": 1,
            "k": 50,
        }
    )


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = base_config("corpus.jsonl", "out", type("L", (), {"main_speakers": ("A", "B")}))
        path = tmp_path / "config.json"
        path.write_text(cfg.to_json())
        assert load_config(path) == cfg

    def test_comments_allowed(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(
            '// run settings\n{\n  "corpus": "c.jsonl",\n  # fingerprint size\n  "k": 12\n}\n'
        )
        assert load_config(path).k == 12

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="fingerprint_size"):
            config_from_dict({"fingerprint_size": 3})

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError, match="folds"):
            config_from_dict({"split": {"folds": 5}})

    def test_bad_feature_mode_rejected(self):
        with pytest.raises(ConfigError, match="feature mode"):
            config_from_dict({"feature_mode": "tfidf"})


class TestRun:
    def test_artifacts_present(self, synthetic_canonical, tmp_path):
        corpus_path, label_map = synthetic_canonical
        out = tmp_path / "run1"
        run(base_config(corpus_path, out, label_map))
        for name in (
            "samples-train.jsonl",
            "samples-test.jsonl",
            "library.json",
            "classifications.jsonl",
            "metrics.json",
            "config.json",
        ):
            assert (out / name).exists(), name

    def test_determinism_byte_identical(self, synthetic_canonical, tmp_path):
        corpus_path, label_map = synthetic_canonical
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run(base_config(corpus_path, out_a, label_map))
        run(base_config(corpus_path, out_b, label_map))
        for name in ("metrics.json", "library.json", "classifications.jsonl"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    def test_classification_record_shape(self, synthetic_canonical, tmp_path):
        corpus_path, label_map = synthetic_canonical
        out = tmp_path / "run"
        run(base_config(corpus_path, out, label_map))
        row = json.loads((out / "classifications.jsonl").read_text().splitlines()[0])
        assert set(row) == {"id", "gold", "pred", "scores", "margin_top2", "generic"}
        assert set(row["generic"]) == {"top_n", "tau", "flag"}
        # classes with no training data cannot have a fingerprint, so scores
        # cover exactly the trained label set
        assert set(row["scores"]) == set(label_map.main_speakers)

    def test_nonempty_output_dir_rejected(self, synthetic_canonical, tmp_path):
        corpus_path, label_map = synthetic_canonical
        out = tmp_path / "busy"
        out.mkdir()
        (out / "junk.txt").write_text("x")
        with pytest.raises(ConfigError, match="not empty"):
            run(base_config(corpus_path, out, label_map))


class TestCliExitCodes:
    def test_unknown_command_is_usage_error(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_no_command_is_usage_error(self):
        assert main([]) == 1

    def test_missing_required_flag_is_usage_error(self):
        assert main(["ingest", "--format", "friends"]) == 1

    def test_missing_activation_file_exits_2_in_features_stage(
        self, synthetic_canonical, tmp_path, capsys
    ):
        corpus_path, label_map = synthetic_canonical
        cfg = base_config(corpus_path, tmp_path / "out", label_map)
        cfg_dict = cfg.to_dict()
        cfg_dict["feature_mode"] = "activations"
        cfg_dict["activation_file"] = str(tmp_path / "missing.ffpa")
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(cfg_dict))
        code = main(["run", "--config", str(cfg_path)])
        captured = capsys.readouterr()
        assert code == 2
        assert "features" in captured.err

    def test_data_error_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{broken\n")
        assert main(["stats", "--in", str(bad)]) == 2

    def test_internal_error_exits_3(self, tmp_path, capsys, monkeypatch):
        import speakerfp.cli as cli_module

        def boom(path):
            raise RuntimeError("wiring snapped")

        monkeypatch.setattr(cli_module, "parse_canonical", boom)
        path = tmp_path / "c.jsonl"
        path.write_text('{"scene_id": "a", "episode": "e", "turns": [{"speaker": "A", "text": "x"}]}\n')
        assert main(["stats", "--in", str(path)]) == 3
        assert "internal error" in capsys.readouterr().err


class TestCliPipeline:
    def test_ingest_assemble_split_stats(self, tmp_path, capsys):
        canonical = tmp_path / "canonical.jsonl"
        assert main(["ingest", "--format", "friends", "--in", str(DATA / "friends_source.json"), "--out", str(canonical)]) == 0
        assert canonical.read_bytes() == (DATA / "friends_expected.jsonl").read_bytes()

        samples = tmp_path / "samples.jsonl"
        assert main(["assemble", "--in", str(canonical), "--out", str(samples), "--context", "2", "--preset", "friends"]) == 0
        rows = [json.loads(line) for line in samples.read_text().splitlines()]
        assert len(rows) == 7
        assert all(row["text"].startswith("[CLS] ") for row in rows)

        split_dir = tmp_path / "splits"
        assert main(
            ["split", "--in", str(canonical), "--out-dir", str(split_dir), "--mode", "random", "--ratios", "0.5,0.25,0.25", "--seed", "1"]
        ) == 0
        assert (split_dir / "train.jsonl").exists()

        capsys.readouterr()  # clear output from the earlier commands
        assert main(["stats", "--in", str(canonical), "--preset", "friends"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["n_scenes"] == 3
        assert report["n_turns"] == 7

    def test_build_classify_eval_hist_generic(self, synthetic_canonical, tmp_path, capsys):
        corpus_path, label_map = synthetic_canonical
        speakers = ",".join(label_map.main_speakers)

        split_dir = tmp_path / "splits"
        assert main(
            ["split", "--in", str(corpus_path), "--out-dir", str(split_dir), "--mode", "random", "--ratios", "0.8,0.0,0.2", "--seed", "2"]
        ) == 0

        train_samples = tmp_path / "train-samples.jsonl"
        test_samples = tmp_path / "test-samples.jsonl"
        for src, dst in (("train", train_samples), ("test", test_samples)):
            assert main(
                ["assemble", "--in", str(split_dir / f"{src}.jsonl"), "--out", str(dst), "--context", "0", "--speakers", speakers]
            ) == 0

        library = tmp_path / "library.json"
        assert main(["build", "--in", str(train_samples), "--out", str(library), "--k", "40"]) == 0
        vocab = library.with_name("vocab.json")
        assert vocab.exists()

        classifications = tmp_path / "classifications.jsonl"
        assert main(
            ["classify", "--in", str(test_samples), "--library", str(library), "--vocab", str(vocab), "--out", str(classifications)]
        ) == 0

        assert main(["eval", "--in", str(classifications), "--out-dir", str(tmp_path / "eval")]) == 0
        metrics = json.loads((tmp_path / "eval" / "metrics.json").read_text())
        assert metrics["accuracy"] > 90.0
        assert (tmp_path / "eval" / "confusion.csv").exists()

        hist = tmp_path / "hist.csv"
        assert main(["hist", "--in", str(classifications), "--samples", str(test_samples), "--out", str(hist)]) == 0
        assert hist.read_text().splitlines()[0] == "length,correct_freq,incorrect_freq"

        generic = tmp_path / "generic.csv"
        assert main(
            ["generic", "--in", str(classifications), "--out", str(generic), "--top-n", "2,3", "--tau-grid", "0:0.02:0.01"]
        ) == 0
        lines = generic.read_text().splitlines()
        assert lines[0] == "tau,top_n,removed,accuracy"
        assert len(lines) == 7  # 2 top_n values x 3 taus + header

    def test_sweep_k_cli(self, synthetic_canonical, tmp_path):
        corpus_path, label_map = synthetic_canonical
        speakers = ",".join(label_map.main_speakers)
        samples = tmp_path / "samples.jsonl"
        assert main(["assemble", "--in", str(corpus_path), "--out", str(samples), "--context", "0", "--speakers", speakers]) == 0
        out = tmp_path / "sweep.csv"
        assert main(["sweep-k", "--train", str(samples), "--test", str(samples), "--ks", "5,20", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "k,accuracy"
        assert len(lines) == 3

    def test_sweep_context_cli(self, synthetic_canonical, tmp_path):
        corpus_path, label_map = synthetic_canonical
        cfg = base_config(corpus_path, tmp_path / "unused", label_map)
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(cfg.to_json())
        out = tmp_path / "ctx.csv"
        assert main(["sweep-context", "--config", str(cfg_path), "--sizes", "0,1", "--out", str(out)]) == 0
        assert out.read_text().splitlines()[0] == "context,macro_f1,weighted_f1,accuracy"

    def test_run_cli_end_to_end(self, synthetic_canonical, tmp_path):
        corpus_path, label_map = synthetic_canonical
        cfg = base_config(corpus_path, tmp_path / "artifacts", label_map)
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(cfg.to_json())
        assert main(["run", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "artifacts" / "metrics.json").exists()
        resolved = json.loads((tmp_path / "artifacts" / "config.json").read_text())
        assert resolved["k"] == 50
