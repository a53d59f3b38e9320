"""Policy generation from NLACP sentences.

The generator sends one chat prompt per sentence: a system message that
defines the policy structure, and a user message carrying the sentence plus
the retrieved "Available entities" bundle.  The model's reply is scanned
for the policy array, with one formatting retry before giving up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .clients import ChatClient
from .errors import EmptyPolicyError, ParseFailure, PolicySyntaxError, SchemaError
from .policy import AccessControlPolicy, Provenance, parse_policy

POLICY_DEFINITION = """Access Control Policy Definition:
An access control policy is a Python list of Python dictionaries. Each dictionary represents one access control rule and has exactly six keys: 'decision', 'subject', 'action', 'resource', 'purpose', and 'condition'.
- 'decision' is 'allow' if the rule permits the access and 'deny' if the rule prohibits it.
- 'subject' is the entity that requests or performs the access.
- 'action' is the operation the subject performs on the resource.
- 'resource' is the entity on which the action is performed.
- 'purpose' is the reason for which the access is carried out.
- 'condition' is the constraint that must hold for the rule to apply.
A single sentence can describe more than one rule; output one dictionary per rule."""

GENERATION_INSTRUCTION = (
    "Given a natural language sentence (i.e., NLACP), generate an access "
    "control policy according to the above Access Control Policy Definition. "
    "If a value for any key in any Python dictionary cannot be found in the "
    "NLACP, set the value to 'none'. To identify subject, resource, purpose, "
    "and condition, use the entities provided as a dictionary, 'Available "
    "entities' as an aid. If none of the provided Available entities match "
    "the entities of the NLACP or there are no 'Available entities' "
    "provided, use your judgment to select the most suitable entity within "
    "the NLACP"
)

RETRY_INSTRUCTION = (
    "That answer could not be parsed. Please output only the policy array, "
    "a JSON array of rule dictionaries, with no surrounding text."
)

CORRECTION_MARKER = "### Corrected:"

_PARSE_ERRORS = (ParseFailure, PolicySyntaxError, SchemaError, EmptyPolicyError)


def build_generation_messages(sentence: str, bundle: dict[str, list[str]]) -> list[dict]:
    """Chat messages for one NLACP; an empty bundle renders as {}."""
    system = POLICY_DEFINITION + "\n\n" + GENERATION_INSTRUCTION
    user = f"NLACP: {sentence}\nAvailable entities: {json.dumps(bundle, ensure_ascii=False)}"
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": user},
    ]


def extract_policy_text(text: str) -> str:
    """Locate the serialized policy array inside a model reply.

    When the reply contains a correction marker, only the text after the
    last marker is considered.  The first JSON array whose elements are all
    objects wins; anything else raises ParseFailure.
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseFailure("model reply is empty")
    if CORRECTION_MARKER in text:
        text = text.rsplit(CORRECTION_MARKER, 1)[1]
    decoder = json.JSONDecoder()
    index = text.find("[")
    while index != -1:
        try:
            value, end = decoder.raw_decode(text, index)
        except ValueError:
            index = text.find("[", index + 1)
            continue
        if isinstance(value, list) and value and all(isinstance(item, dict) for item in value):
            return text[index:end]
        index = text.find("[", index + 1)
    raise ParseFailure("no policy array found in model reply")


def parse_model_output(
    text: str,
    *,
    nlacp: str = "",
    provenance: Provenance | None = None,
) -> AccessControlPolicy:
    """Extract and parse the policy array from a model reply."""
    payload = extract_policy_text(text)
    return parse_policy(payload, nlacp=nlacp, provenance=provenance)


@dataclass(frozen=True)
class GenerationResult:
    """What came back from the generator for one sentence."""

    policy: AccessControlPolicy | None
    raw_text: str
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.policy is not None


class PolicyGenerator:
    """Turns one NLACP sentence into a structured policy via a chat model."""

    def __init__(self, client: ChatClient, retry_budget: int = 1):
        if retry_budget < 0:
            raise ValueError("retry_budget must be >= 0")
        self._client = client
        self._retry_budget = retry_budget

    def generate(
        self,
        sentence: str,
        bundle: dict[str, list[str]] | None = None,
        provenance: Provenance | None = None,
    ) -> GenerationResult:
        """One generation attempt plus up to retry_budget formatting retries.

        Parse problems are folded into the result; transport problems
        (ClientError) propagate to the caller.
        """
        messages = build_generation_messages(sentence, bundle or {})
        reply = self._client.complete(messages)
        attempts = 0
        while True:
            try:
                policy = parse_model_output(reply, nlacp=sentence, provenance=provenance)
                return GenerationResult(policy=policy, raw_text=reply)
            except _PARSE_ERRORS as exc:
                if attempts >= self._retry_budget:
                    return GenerationResult(policy=None, raw_text=reply, error=str(exc))
                attempts += 1
                messages = messages + [
                    {"role": "assistant", "content": reply},
                    {"role": "user", "content": RETRY_INSTRUCTION},
                ]
                reply = self._client.complete(messages)
