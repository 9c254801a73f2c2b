import pytest

from smoke_corpus import make_sample_rows, write_rows


@pytest.fixture
def smoke_files(tmp_path):
    train = write_rows(tmp_path / "train.jsonl", make_sample_rows(50, seed=1))
    valid = write_rows(tmp_path / "valid.jsonl", make_sample_rows(15, seed=2))
    return train, valid


@pytest.fixture(scope="session")
def trained_checkpoint(tmp_path_factory):
    """One shared tiny checkpoint for the export tests."""
    from encoder_exporter.finetune import Hyperparameters, finetune
    from encoder_exporter.samples import read_samples

    base = tmp_path_factory.mktemp("ckpt")
    train = write_rows(base / "train.jsonl", make_sample_rows(50, seed=3))
    checkpoint = base / "checkpoint"
    hp = Hyperparameters(
        encoder="from-scratch", epochs=4, batch_size=8, learning_rate=1e-3, seed=0, max_length=48
    )
    finetune(read_samples(train), hp, checkpoint)
    return checkpoint
