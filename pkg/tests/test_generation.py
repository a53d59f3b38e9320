"""Generation: prompts, reply parsing, retry behaviour."""

from __future__ import annotations

import json

import pytest
from hypothesis import given

from conftest import make_policy, make_rule, policies_st
from mocks import FailingChatClient, ScriptedChatClient
from policygen.errors import ClientError, ParseFailure, SchemaError
from policygen.generation import (
    GENERATION_INSTRUCTION,
    PolicyGenerator,
    RETRY_INSTRUCTION,
    build_generation_messages,
    extract_policy_text,
    parse_model_output,
)
from policygen.policy import serialize_policy


class TestPromptShape:
    def test_system_carries_definition_and_instruction(self):
        messages = build_generation_messages("s", {})
        assert messages[0]["role"] == "system"
        assert "Access Control Policy Definition" in messages[0]["content"]
        assert GENERATION_INSTRUCTION in messages[0]["content"]

    def test_user_carries_sentence_and_entities(self):
        bundle = {"subjects": ["doctor"], "actions": ["read"]}
        messages = build_generation_messages("Doctors can read records.", bundle)
        assert messages[1]["role"] == "user"
        assert messages[1]["content"] == (
            "NLACP: Doctors can read records.\n"
            'Available entities: {"subjects": ["doctor"], "actions": ["read"]}'
        )

    def test_empty_bundle_renders_braces(self):
        messages = build_generation_messages("s", {})
        assert messages[1]["content"].endswith("Available entities: {}")


SAMPLE = serialize_policy(make_policy(make_rule()))


class TestExtraction:
    def test_bare_array(self):
        assert extract_policy_text(SAMPLE) == SAMPLE

    def test_array_inside_prose(self):
        reply = f"Sure, here is the policy:\n{SAMPLE}\nLet me know."
        assert extract_policy_text(reply) == SAMPLE

    def test_skips_non_dict_arrays(self):
        reply = f"Steps: [1, 2, 3]\n{SAMPLE}"
        assert extract_policy_text(reply) == SAMPLE

    def test_last_correction_marker_wins(self):
        other = '[{"decision":"deny"}]'
        reply = f"### Corrected: \n{other}\nstill wrong\n### Corrected: \n{SAMPLE}"
        assert extract_policy_text(reply) == SAMPLE

    def test_text_before_marker_ignored(self):
        reply = f"{SAMPLE}\n### Corrected: \n{SAMPLE}"
        assert extract_policy_text(reply) == SAMPLE

    def test_no_array_raises(self):
        with pytest.raises(ParseFailure):
            extract_policy_text("no policy here")

    def test_empty_reply_raises(self):
        with pytest.raises(ParseFailure):
            extract_policy_text("")

    def test_parse_model_output_builds_policy(self):
        policy = parse_model_output(f"text {SAMPLE} text", nlacp="s")
        assert policy.nlacp == "s"
        assert policy.rules[0].subject == "doctor"

    def test_schema_errors_propagate(self):
        with pytest.raises(SchemaError):
            parse_model_output('[{"decision": "allow"}]')

    @given(policies_st)
    def test_round_trip_through_decorated_reply(self, policy):
        reply = f"Reasoning first.\n\n### Corrected: \n\n{serialize_policy(policy)}\n"
        parsed = parse_model_output(reply, nlacp=policy.nlacp)
        assert parsed == policy


class TestGenerator:
    def test_clean_reply(self):
        client = ScriptedChatClient([SAMPLE])
        result = PolicyGenerator(client).generate("s", {})
        assert result.ok and result.policy.rules[0].action == "read"

    def test_retry_recovers(self):
        client = ScriptedChatClient(["I will not answer with JSON.", SAMPLE])
        result = PolicyGenerator(client).generate("s", {})
        assert result.ok
        retry_prompt = client.prompts[1]
        assert retry_prompt[-1]["content"] == RETRY_INSTRUCTION
        assert retry_prompt[-2]["content"] == "I will not answer with JSON."

    def test_retry_budget_exhausted(self):
        client = ScriptedChatClient(["junk", "more junk"])
        result = PolicyGenerator(client).generate("s", {})
        assert not result.ok
        assert result.raw_text == "more junk"
        assert result.error

    def test_zero_budget_fails_immediately(self):
        client = ScriptedChatClient(["junk", SAMPLE])
        result = PolicyGenerator(client, retry_budget=0).generate("s", {})
        assert not result.ok

    def test_client_error_propagates(self):
        with pytest.raises(ClientError):
            PolicyGenerator(FailingChatClient()).generate("s", {})
