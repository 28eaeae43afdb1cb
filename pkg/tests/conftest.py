import pytest

from bwegan.pipeline import TrainRun, prepare_corpus, train
from bwegan.synth import write_mini_corpus


@pytest.fixture(scope="session")
def raw_corpus(tmp_path_factory):
    """Ten synthetic one-second clips from five speakers."""
    root = tmp_path_factory.mktemp("raw")
    write_mini_corpus(root, n_speakers=5, clips_per_speaker=2, seed=0)
    return root


@pytest.fixture(scope="session")
def manifest(raw_corpus, tmp_path_factory):
    return prepare_corpus(raw_corpus, tmp_path_factory.mktemp("prepared"), (2, 4, 8))


@pytest.fixture(scope="session")
def tiny_checkpoint(manifest, tmp_path_factory):
    run = TrainRun(mode="unified", steps=2, batch_size=1, segment_len=2048, seed=0)
    return train(run, manifest, tmp_path_factory.mktemp("tiny_run"))
