"""NLACP identification.

A binary classifier decides, sentence by sentence, whether a preprocessed
sentence expresses an access control requirement (an NLACP).  Only NLACP
sentences continue down the pipeline; the rest are kept for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .clients import ScoreClient
from .preprocess import SentenceRecord, tokenize

DEFAULT_THRESHOLD = 0.5

_CUES = frozenset(
    {
        "access",
        "allow",
        "allowed",
        "authorised",
        "authorized",
        "can",
        "cannot",
        "can't",
        "deny",
        "denied",
        "forbidden",
        "may",
        "must",
        "permitted",
        "prohibited",
        "restricted",
        "shall",
        "should",
        "view",
        "edit",
        "read",
        "write",
        "delete",
        "update",
    }
)


class CueScoreClient:
    """Offline fallback classifier driven by access-control cue words.

    Scores well away from the decision threshold on both sides so the
    downstream boolean does not depend on tie-breaking.
    """

    def score(self, text: str) -> float:
        tokens = {token.casefold() for token in tokenize(text)}
        return 0.9 if tokens & _CUES else 0.1


@dataclass(frozen=True)
class ClassifiedSentence:
    """A sentence plus its classifier score and thresholded label."""

    record: SentenceRecord
    score: float
    is_nlacp: bool


class NlacpClassifier:
    def __init__(self, client: ScoreClient, threshold: float = DEFAULT_THRESHOLD):
        if not 0.0 <= threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {threshold}")
        self._client = client
        self._threshold = threshold

    @property
    def threshold(self) -> float:
        return self._threshold

    def classify(self, record: SentenceRecord) -> ClassifiedSentence:
        score = float(self._client.score(record.text))
        return ClassifiedSentence(record=record, score=score, is_nlacp=score >= self._threshold)

    def classify_all(self, records: Iterable[SentenceRecord]) -> list[ClassifiedSentence]:
        return [self.classify(record) for record in records]


def partition_nlacps(
    classified: Sequence[ClassifiedSentence],
) -> tuple[list[SentenceRecord], list[SentenceRecord]]:
    """Split classified sentences into (nlacp, other), preserving order."""
    nlacp = [c.record for c in classified if c.is_nlacp]
    other = [c.record for c in classified if not c.is_nlacp]
    return nlacp, other
