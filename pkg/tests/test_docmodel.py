import gzip
import json

import pytest
from hypothesis import given, settings, strategies as st

from corpuskit.docmodel import (
    Document,
    Sentence,
    StageRecord,
    deserialize_document,
    read_corpus,
    serialize_document,
    with_history,
    write_corpus,
)
from corpuskit.errors import InvalidEncoding, MalformedRecord

from conftest import make_doc


def test_minimal_document_serializes_to_one_line():
    raw = serialize_document(Document(id="d1", source="s", text="Hola"))
    assert raw.endswith(b"\n")
    assert raw.count(b"\n") == 1
    rec = json.loads(raw)
    assert rec["id"] == "d1" and rec["source"] == "s" and rec["text"] == "Hola"


def test_newline_in_text_stays_on_one_physical_line():
    raw = serialize_document(Document(id="d1", source="s", text="a\nb"))
    assert raw.count(b"\n") == 1
    assert deserialize_document(raw).text == "a\nb"


def test_three_sentence_document_round_trip():
    doc = Document(
        id="d2",
        source="wiki",
        text="Una. Dues. Tres.",
        url="http://example.cat",
        title="Títol",
        sentences=[Sentence("Una."), Sentence("Dues.", kept=False, reject_reason="x"), Sentence("Tres.")],
        meta={"category": "Política"},
        history=[StageRecord("transforms", "modified", "nfc")],
    )
    assert deserialize_document(serialize_document(doc)) == doc


def test_empty_id_is_malformed():
    with pytest.raises(MalformedRecord):
        deserialize_document(b'{"id":""}')


def test_truncated_line_is_malformed():
    raw = serialize_document(Document(id="d1", source="s", text="Hola"))
    with pytest.raises(MalformedRecord):
        deserialize_document(raw[: len(raw) // 2])


def test_missing_fields_malformed():
    for payload in ('{"id":"a","text":"x"}', '{"source":"s","text":"x"}', '{"id":"a","source":"s"}',
                    '[1,2]', '{"id":"a","source":"s","text":3}'):
        with pytest.raises(MalformedRecord):
            deserialize_document(payload.encode())


def test_invalid_utf8_bytes():
    with pytest.raises(InvalidEncoding):
        deserialize_document(b'{"id":"a","source":"s","text":"\xff\xfe"}')


def test_byte_cap_rejects_oversized_records():
    doc = Document(id="d", source="s", text="x" * 1000)
    with pytest.raises(MalformedRecord):
        deserialize_document(serialize_document(doc), max_bytes=100)


def test_with_history_appends_and_preserves_original():
    doc = Document(id="d", source="s", text="x")
    out = with_history(doc, "filters", "kept")
    assert doc.history == []
    assert [r.stage for r in out.history] == ["filters"]
    with pytest.raises(ValueError):
        with_history(doc, "filters", "exploded")


_sentence_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=30
).map(lambda s: " ".join(s.split())).filter(bool)

_documents = st.builds(
    Document,
    id=st.text(min_size=1, max_size=12),
    source=st.text(min_size=1, max_size=8),
    text=st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=200),
    url=st.none() | st.text(max_size=30),
    title=st.none() | st.text(max_size=30),
    sentences=st.none()
    | st.lists(
        st.builds(
            Sentence,
            text=_sentence_text,
            kept=st.booleans(),
            reject_reason=st.none() | st.sampled_from(["placeholder", "language"]),
        ),
        max_size=5,
    ),
    meta=st.dictionaries(st.text(min_size=1, max_size=6), st.text(max_size=10), max_size=3),
    history=st.lists(
        st.builds(
            StageRecord,
            stage=st.sampled_from(["transforms", "filters"]),
            action=st.sampled_from(["kept", "modified", "dropped"]),
            detail=st.none() | st.text(max_size=10),
        ),
        max_size=3,
    ),
)


@settings(max_examples=200)
@given(_documents)
def test_serialize_deserialize_identity(doc):
    assert deserialize_document(serialize_document(doc)) == doc


def test_corpus_file_round_trip_preserves_order(tmp_path):
    docs = [make_doc(f"text {i}", doc_id=f"d{i}") for i in range(20)]
    path = tmp_path / "corpus.jsonl"
    assert write_corpus(path, docs) == 20
    assert list(read_corpus(path)) == docs


def test_gzip_detected_by_magic_bytes(tmp_path):
    docs = [make_doc("hola", doc_id="a"), make_doc("adeu", doc_id="b")]
    plain = tmp_path / "corpus.dat"  # gz content, misleading suffix
    with gzip.open(plain, "wb") as fh:
        for d in docs:
            fh.write(serialize_document(d))
    assert list(read_corpus(plain)) == docs


def test_gzip_write_by_suffix_and_deterministic(tmp_path):
    docs = [make_doc("hola", doc_id="a")]
    p1, p2 = tmp_path / "a.jsonl.gz", tmp_path / "b.jsonl.gz"
    write_corpus(p1, docs)
    write_corpus(p2, docs)
    assert list(read_corpus(p1)) == docs
    assert p1.read_bytes() == p2.read_bytes()
