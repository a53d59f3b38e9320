"""Iterative policy refinement.

When verification flags an error, the pipeline asks the generator to fix it,
re-verifies, and repeats up to a bounded number of rounds.  Policies whose
final verdict is "correct" are applied; everything else lands in the human
review queue with the last error as feedback.  Transport failures make the
outcome "unverified" rather than guessing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

from .clients import ChatClient
from .errors import (
    ClientError,
    EmptyPolicyError,
    ParseFailure,
    PolicySyntaxError,
    SchemaError,
)
from .generation import POLICY_DEFINITION, PolicyGenerator, parse_model_output
from .policy import (
    AccessControlPolicy,
    Provenance,
    ReconstructionTemplate,
    DEFAULT_TEMPLATE,
    serialize_policy,
)
from .verify import DISPLAY_NAMES, VerdictClass, Verifier, verify_policy

DEFAULT_MAX_ROUNDS = 3

REFINEMENT_TEMPLATE = (
    "{definition}\n\n"
    "You generated {policy} for the sentence, {nlacp} based on the mentioned "
    "Access Control Policy Definition. However, the following error is found.\n\n"
    "1. {error}\n\n"
    "Please address the error and output the corrected access control policy "
    "according to the mentioned definition. Think step-by-step to first provide "
    "the reasoning steps/thought process. Then after the \n\n"
    "### Corrected: \n\n"
    "provide the corrected policy without any other text."
)

_PARSE_ERRORS = (ParseFailure, PolicySyntaxError, SchemaError, EmptyPolicyError)


def build_refinement_messages(nlacp: str, policy_text: str, error_name: str) -> list[dict]:
    """Single-user-message prompt asking the model to fix one named error."""
    content = REFINEMENT_TEMPLATE.format(
        definition=POLICY_DEFINITION,
        policy=policy_text,
        nlacp=nlacp,
        error=error_name,
    )
    return [{"role": "user", "content": content}]


class RefinementStatus(str, enum.Enum):
    APPLIED = "applied"
    NEEDS_REVIEW = "needs_review"
    UNVERIFIED = "unverified"


@dataclass(frozen=True)
class RefinementStep:
    """One generation or refinement round and what came of it."""

    round: int
    parsed: bool
    verdict: VerdictClass | None
    raw_text: str


@dataclass(frozen=True)
class RefinementOutcome:
    status: RefinementStatus
    policy: AccessControlPolicy | None
    verdict: VerdictClass | None
    feedback: str | None
    rounds_used: int
    steps: tuple[RefinementStep, ...]


class RefinementLoop:
    """Generate, verify, and refine one NLACP sentence end to end."""

    def __init__(
        self,
        generator: PolicyGenerator,
        verifier: Verifier,
        chat_client: ChatClient,
        max_rounds: int = DEFAULT_MAX_ROUNDS,
        template: ReconstructionTemplate = DEFAULT_TEMPLATE,
        postprocess: Callable[[AccessControlPolicy], AccessControlPolicy] | None = None,
    ):
        if max_rounds < 0:
            raise ValueError("max_rounds must be >= 0")
        self._generator = generator
        self._verifier = verifier
        self._chat = chat_client
        self._max_rounds = max_rounds
        self._template = template
        self._postprocess = postprocess

    def _finish(
        self,
        policy: AccessControlPolicy | None,
        verdict: VerdictClass | None,
        feedback: str | None,
        rounds_used: int,
        steps: list[RefinementStep],
        failed: bool = False,
    ) -> RefinementOutcome:
        if failed:
            status = RefinementStatus.UNVERIFIED
        elif verdict is VerdictClass.CORRECT:
            status = RefinementStatus.APPLIED
        else:
            status = RefinementStatus.NEEDS_REVIEW
        return RefinementOutcome(
            status=status,
            policy=policy,
            verdict=verdict,
            feedback=feedback,
            rounds_used=rounds_used,
            steps=tuple(steps),
        )

    def run(
        self,
        sentence: str,
        bundle: dict[str, list[str]] | None = None,
        provenance: Provenance | None = None,
    ) -> RefinementOutcome:
        steps: list[RefinementStep] = []
        policy: AccessControlPolicy | None = None
        verdict: VerdictClass | None = None
        feedback: str | None = None
        # What the next refinement prompt shows as "the policy you generated":
        # the canonical serialization when parsing succeeded, otherwise the
        # raw model reply.
        shown_policy = ""

        try:
            result = self._generator.generate(sentence, bundle, provenance)
        except ClientError:
            return self._finish(None, None, None, 0, steps, failed=True)

        if result.ok:
            policy = result.policy
            if self._postprocess is not None:
                policy = self._postprocess(policy)
            shown_policy = serialize_policy(policy)
            try:
                verification = verify_policy(self._verifier, policy, self._template)
            except ClientError:
                steps.append(RefinementStep(0, True, None, result.raw_text))
                return self._finish(policy, None, None, 0, steps, failed=True)
            verdict = verification.verdict
            feedback = DISPLAY_NAMES[verdict]
            steps.append(RefinementStep(0, True, verdict, result.raw_text))
            if verdict is VerdictClass.CORRECT:
                return self._finish(policy, verdict, feedback, 0, steps)
        else:
            shown_policy = result.raw_text
            verdict = None
            feedback = DISPLAY_NAMES[VerdictClass.MISSING_ACR]
            steps.append(RefinementStep(0, False, None, result.raw_text))

        for round_number in range(1, self._max_rounds + 1):
            messages = build_refinement_messages(sentence, shown_policy, feedback)
            try:
                reply = self._chat.complete(messages)
            except ClientError:
                return self._finish(policy, verdict, feedback, round_number - 1, steps, failed=True)
            try:
                refined = parse_model_output(reply, nlacp=sentence, provenance=provenance)
            except _PARSE_ERRORS:
                shown_policy = reply
                feedback = DISPLAY_NAMES[VerdictClass.MISSING_ACR]
                steps.append(RefinementStep(round_number, False, None, reply))
                continue
            if self._postprocess is not None:
                refined = self._postprocess(refined)
            policy = refined
            shown_policy = serialize_policy(policy)
            try:
                verification = verify_policy(self._verifier, policy, self._template)
            except ClientError:
                return self._finish(policy, verdict, feedback, round_number, steps, failed=True)
            verdict = verification.verdict
            feedback = DISPLAY_NAMES[verdict]
            steps.append(RefinementStep(round_number, True, verdict, reply))
            if verdict is VerdictClass.CORRECT:
                return self._finish(policy, verdict, feedback, round_number, steps)

        return self._finish(policy, verdict, feedback, self._max_rounds, steps)
