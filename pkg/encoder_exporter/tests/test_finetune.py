import json

import pytest

from encoder_exporter.errors import ExporterError
from encoder_exporter.finetune import (
    TRAINING_MANIFEST,
    Hyperparameters,
    finetune,
    load_checkpoint,
)
from encoder_exporter.samples import read_samples, speaker_tokens_in

SMOKE_HP = Hyperparameters(
    encoder="from-scratch", epochs=3, batch_size=8, learning_rate=1e-3, seed=0, max_length=48
)


class TestFinetuneSmoke:
    def test_loss_decreases_over_training(self, smoke_files, tmp_path):
        train, valid = smoke_files
        logs = finetune(read_samples(train), SMOKE_HP, tmp_path / "ckpt", read_samples(valid))
        assert logs[-1].train_loss < logs[0].train_loss
        assert all(log.valid_accuracy is not None for log in logs)

    def test_manifest_records_training_facts(self, smoke_files, tmp_path):
        train, _ = smoke_files
        samples = read_samples(train)
        finetune(samples, SMOKE_HP, tmp_path / "ckpt")
        manifest = json.loads((tmp_path / "ckpt" / TRAINING_MANIFEST).read_text())
        assert manifest["labels"] == ["Speaker A", "Speaker B", "Speaker C"]
        assert manifest["speaker_tokens"] == speaker_tokens_in(samples)
        assert manifest["context_size"] == 1
        assert manifest["hyperparameters"]["seed"] == 0
        assert len(manifest["epoch_log"]) == SMOKE_HP.epochs

    def test_checkpoint_reloads(self, smoke_files, tmp_path):
        train, _ = smoke_files
        finetune(read_samples(train), SMOKE_HP, tmp_path / "ckpt")
        model, tokenizer, manifest = load_checkpoint(tmp_path / "ckpt")
        assert model.config.num_labels == 3
        assert tokenizer.cls_token == "[CLS]"
        assert manifest["encoder"] == "from-scratch"

    def test_single_class_rejected(self, tmp_path):
        from smoke_corpus import make_sample_rows, write_rows

        rows = [r for r in make_sample_rows(9, seed=5) if r["label"] == "Speaker A"]
        path = write_rows(tmp_path / "one.jsonl", rows)
        with pytest.raises(ExporterError, match="two classes"):
            finetune(read_samples(path), SMOKE_HP, tmp_path / "ckpt")

    def test_not_a_checkpoint_dir(self, tmp_path):
        with pytest.raises(ExporterError, match="not an exporter checkpoint"):
            load_checkpoint(tmp_path)
