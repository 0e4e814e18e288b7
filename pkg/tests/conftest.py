from pathlib import Path

import pytest

from corpuskit.docmodel import Document, Sentence
from corpuskit.langid import (
    FAST_N_RANGE,
    SLOW_N_RANGE,
    NGramClassifier,
    train_from_dir,
)

DATA_DIR = Path(__file__).parent / "data"
SAMPLES_DIR = DATA_DIR / "langid_samples"


def make_doc(text, doc_id="d1", source="test", sentences=None, **kwargs):
    if sentences is not None:
        sentences = [s if isinstance(s, Sentence) else Sentence(s) for s in sentences]
    return Document(id=doc_id, source=source, text=text, sentences=sentences, **kwargs)


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def samples_dir():
    return SAMPLES_DIR


@pytest.fixture(scope="session")
def ca_text():
    return (SAMPLES_DIR / "ca" / "sample.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def es_text():
    return (SAMPLES_DIR / "es" / "sample.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def fast_classifier():
    return NGramClassifier(train_from_dir(SAMPLES_DIR, FAST_N_RANGE))


@pytest.fixture(scope="session")
def slow_classifier():
    return NGramClassifier(train_from_dir(SAMPLES_DIR, SLOW_N_RANGE))
