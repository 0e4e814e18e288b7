"""Entity-level and token-level F1 for IOB-tagged sequences."""

from __future__ import annotations

import re
from typing import Sequence

from ..errors import InvalidTag, LengthMismatch

_TAG_RE = re.compile(r"O|[BI]-\S+")

Chunk = tuple[int, int, int, str]  # (sequence, start, end-exclusive, type)


def _extract_chunks(sequences: Sequence[Sequence[str]]) -> set[Chunk]:
    """Maximal typed spans from IOB tags.

    ``B-X`` opens a chunk, ``I-X`` extends a chunk of the same type. An
    ``I-X`` with no open chunk of type X starts a new one (the usual lenient
    reading); syntactically malformed tags raise InvalidTag.
    """
    chunks: set[Chunk] = set()
    for si, seq in enumerate(sequences):
        start = None
        ctype = None
        for i, tag in enumerate(seq):
            if not _TAG_RE.fullmatch(tag):
                raise InvalidTag(f"sequence {si}, position {i}: {tag!r}")
            if tag == "O":
                if start is not None:
                    chunks.add((si, start, i, ctype))
                    start = None
                continue
            prefix, _, ttype = tag.partition("-")
            if prefix == "B" or ctype != ttype or start is None:
                if start is not None:
                    chunks.add((si, start, i, ctype))
                start, ctype = i, ttype
        if start is not None:
            chunks.add((si, start, len(seq), ctype))
    return chunks


def _check_aligned(pred: Sequence[Sequence[str]], gold: Sequence[Sequence[str]]) -> None:
    if len(pred) != len(gold):
        raise LengthMismatch(f"{len(pred)} predicted sequences vs {len(gold)} gold")
    for i, (p, g) in enumerate(zip(pred, gold)):
        if len(p) != len(g):
            raise LengthMismatch(f"sequence {i}: {len(p)} predicted tags vs {len(g)} gold")


def entity_f1(pred: Sequence[Sequence[str]], gold: Sequence[Sequence[str]]) -> float:
    """Micro-averaged entity-level F1, in percent.

    An entity counts as correct only when type and exact span both match.
    Swapping pred and gold swaps precision and recall, leaving F1 unchanged.
    """
    _check_aligned(pred, gold)
    pred_chunks = _extract_chunks(pred)
    gold_chunks = _extract_chunks(gold)
    correct = len(pred_chunks & gold_chunks)
    if not pred_chunks or not gold_chunks or not correct:
        return 0.0
    precision = correct / len(pred_chunks)
    recall = correct / len(gold_chunks)
    return 100.0 * 2 * precision * recall / (precision + recall)


def token_f1(pred: Sequence[Sequence[str]], gold: Sequence[Sequence[str]]) -> float:
    """Micro-averaged token-level F1 in percent.

    With aligned, fully-tagged sequences every token is both a prediction
    and a reference, so this equals tagging accuracy; used for tasks where
    tags are per-token labels rather than chunks.
    """
    _check_aligned(pred, gold)
    total = sum(len(seq) for seq in gold)
    if total == 0:
        return 0.0
    correct = sum(
        1 for p_seq, g_seq in zip(pred, gold) for p, g in zip(p_seq, g_seq) if p == g
    )
    return 100.0 * correct / total
