"""Preprocessing: paragraphs, sentence segmentation, tokens, coreference."""

from __future__ import annotations

import pytest

from mocks import FailingChatClient, ScriptedChatClient
from policygen.errors import EmptyDocumentError, ResolverUnavailable
from policygen.preprocess import (
    ChatResolver,
    IdentityResolver,
    preprocess_document,
    split_paragraphs,
    split_sentences,
    tokenize,
)


class TestParagraphs:
    def test_blank_line_split(self):
        text = "First paragraph.\n\nSecond paragraph."
        assert split_paragraphs(text) == ["First paragraph.", "Second paragraph."]

    def test_inner_newlines_flattened(self):
        text = "One line\nwrapped onto two.\n\nNext."
        assert split_paragraphs(text)[0] == "One line wrapped onto two."

    def test_multiple_blank_lines(self):
        assert split_paragraphs("A.\n\n\n\nB.") == ["A.", "B."]

    def test_empty_document_rejected(self):
        with pytest.raises(EmptyDocumentError):
            split_paragraphs("   \n\n  ")


class TestSentences:
    def test_simple_split(self):
        assert split_sentences("One rule. Another rule.") == ["One rule.", "Another rule."]

    def test_question_and_exclamation(self):
        assert split_sentences("Is it allowed? It is not! Fine.") == [
            "Is it allowed?",
            "It is not!",
            "Fine.",
        ]

    def test_abbreviation_not_split(self):
        result = split_sentences("Dr. Smith can read records. Nurses cannot.")
        assert result == ["Dr. Smith can read records.", "Nurses cannot."]

    def test_eg_not_split(self):
        result = split_sentences("Staff, e.g. Nurses, can view schedules. Others cannot.")
        assert result == ["Staff, e.g. Nurses, can view schedules.", "Others cannot."]

    def test_decimal_not_split(self):
        result = split_sentences("Retention lasts 2.5 years. Then data is purged.")
        assert result == ["Retention lasts 2.5 years.", "Then data is purged."]

    def test_initial_not_split(self):
        result = split_sentences("J. Smith owns the file. K. Jones does not.")
        assert result == ["J. Smith owns the file.", "K. Jones does not."]

    def test_no_terminal_punctuation(self):
        assert split_sentences("Trailing fragment") == ["Trailing fragment"]

    def test_lowercase_continuation_not_split(self):
        assert split_sentences("See item no. four for details.") == [
            "See item no. four for details."
        ]


class TestTokenize:
    def test_words_and_punctuation(self):
        assert tokenize("Doctors can read records.") == [
            "Doctors",
            "can",
            "read",
            "records",
            ".",
        ]

    def test_hyphen_and_apostrophe_stay_in_word(self):
        assert tokenize("read-only data isn't writable") == [
            "read-only",
            "data",
            "isn't",
            "writable",
        ]


class TestPreprocessDocument:
    def test_indices_are_global(self):
        text = "Staff can read boxes. Clerks can read disks.\n\nGuests can read files."
        records = preprocess_document("doc1", text)
        assert [r.sentence_index for r in records] == [0, 1, 2]
        assert [r.paragraph_index for r in records] == [0, 0, 1]
        assert records[0].doc_id == "doc1"
        assert records[0].tokens[0] == "Staff"

    def test_identity_resolver_is_default(self):
        records = preprocess_document("d", "They can read records.")
        assert records[0].text == "They can read records."

    def test_chat_resolver_rewrites(self):
        client = ScriptedChatClient(["Doctors can read records."])
        resolver = ChatResolver(client)
        records = preprocess_document("d", "They can read records.", resolver)
        assert records[0].text == "Doctors can read records."
        assert client.prompts[0][1]["content"] == "They can read records."

    def test_chat_resolver_blank_reply_keeps_original(self):
        resolver = ChatResolver(ScriptedChatClient(["   "]))
        assert resolver.resolve("Doctors can read.") == "Doctors can read."

    def test_resolver_failure_is_loud(self):
        resolver = ChatResolver(FailingChatClient())
        with pytest.raises(ResolverUnavailable):
            preprocess_document("d", "They can read records.", resolver)

    def test_identity_resolver_class(self):
        assert IdentityResolver().resolve("x y") == "x y"
