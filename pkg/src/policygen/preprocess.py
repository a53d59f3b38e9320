"""Document preprocessing: paragraphs, coreference, sentences, tokens.

High-level policy documents arrive as free text.  Before classification the
text is split into paragraphs, pronouns are rewritten to their antecedents
(so each sentence stands alone), and paragraphs are segmented into sentences
that are then tokenized.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .errors import ClientError, EmptyDocumentError, ResolverUnavailable

_PARAGRAPH_BREAK = re.compile(r"\n\s*\n")
_TOKEN = re.compile(r"[A-Za-z0-9]+(?:['’-][A-Za-z0-9]+)*|[^\sA-Za-z0-9]")
_SENTENCE_END = re.compile(r"[.!?]+[\"'”’)\]]*")
_WORD_BEFORE = re.compile(r"([A-Za-z][A-Za-z.]*)$")

COREF_INSTRUCTION = (
    "Rewrite the paragraph so that every pronoun and every vague coreferent "
    "mention is replaced with the most specific noun phrase it refers to. "
    "Change nothing else, keep the sentence order, and output only the "
    "rewritten paragraph."
)


def _load_abbreviations() -> frozenset[str]:
    path = resources.files("policygen").joinpath("data/abbreviations.txt")
    lines = path.read_text(encoding="utf-8").splitlines()
    return frozenset(line.strip().casefold() for line in lines if line.strip())


ABBREVIATIONS = _load_abbreviations()


def split_paragraphs(text: str) -> list[str]:
    """Split on blank lines; single newlines inside a paragraph are spaces."""
    if not text or not text.strip():
        raise EmptyDocumentError("document contains no text")
    paragraphs = []
    for chunk in _PARAGRAPH_BREAK.split(text):
        flattened = re.sub(r"\s+", " ", chunk).strip()
        if flattened:
            paragraphs.append(flattened)
    if not paragraphs:
        raise EmptyDocumentError("document contains no paragraphs")
    return paragraphs


def _is_boundary(text: str, match: re.Match) -> bool:
    """Decide whether a terminator match really ends a sentence."""
    end = match.end()
    if end >= len(text):
        return True
    tail = text[end:]
    follow = tail.lstrip()
    if not follow:
        return True
    if tail[0] not in (" ", "\t"):
        return False
    first = follow[0]
    if not (first.isupper() or first.isdigit() or first in "\"'“([‘"):
        return False
    if "." in match.group(0):
        before = _WORD_BEFORE.search(text[: match.start()])
        if before:
            word = before.group(1).rstrip(".").casefold()
            if word in ABBREVIATIONS:
                return False
            if len(word) == 1 and word.isalpha():
                return False
        prev = text[match.start() - 1] if match.start() > 0 else ""
        if prev.isdigit() and first.isdigit():
            return False
    return True


def split_sentences(paragraph: str) -> list[str]:
    """Rule-based sentence segmentation aware of common abbreviations."""
    sentences = []
    start = 0
    for match in _SENTENCE_END.finditer(paragraph):
        if _is_boundary(paragraph, match):
            piece = paragraph[start : match.end()].strip()
            if piece:
                sentences.append(piece)
            start = match.end()
    rest = paragraph[start:].strip()
    if rest:
        sentences.append(rest)
    return sentences


def tokenize(sentence: str) -> list[str]:
    """Word and punctuation tokens; hyphens and apostrophes stay in-word."""
    return _TOKEN.findall(sentence)


@dataclass(frozen=True)
class SentenceRecord:
    """One sentence of a preprocessed document."""

    doc_id: str
    paragraph_index: int
    sentence_index: int
    text: str
    tokens: tuple[str, ...]


class IdentityResolver:
    """Coreference resolver that leaves the paragraph unchanged."""

    def resolve(self, paragraph: str) -> str:
        return paragraph


class ChatResolver:
    """Coreference resolver backed by a chat-completion client."""

    def __init__(self, client):
        self._client = client

    def resolve(self, paragraph: str) -> str:
        messages = [
            {"role": "system", "content": COREF_INSTRUCTION},
            {"role": "user", "content": paragraph},
        ]
        try:
            rewritten = self._client.complete(messages)
        except ClientError as exc:
            raise ResolverUnavailable(f"coreference resolver failed: {exc}") from exc
        rewritten = rewritten.strip()
        return rewritten if rewritten else paragraph


def preprocess_document(doc_id: str, text: str, resolver=None) -> list[SentenceRecord]:
    """Run the full preprocessing pass over one document.

    Sentence indices are global across the document so that downstream
    stages can address a sentence as (doc_id, sentence_index).
    """
    resolver = resolver or IdentityResolver()
    records: list[SentenceRecord] = []
    sentence_index = 0
    for paragraph_index, paragraph in enumerate(split_paragraphs(text)):
        resolved = resolver.resolve(paragraph)
        for sentence in split_sentences(resolved):
            records.append(
                SentenceRecord(
                    doc_id=doc_id,
                    paragraph_index=paragraph_index,
                    sentence_index=sentence_index,
                    text=sentence,
                    tokens=tuple(tokenize(sentence)),
                )
            )
            sentence_index += 1
    return records
