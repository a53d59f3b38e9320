"""Policy verification.

A verifier looks at an NLACP sentence and a natural-language reconstruction
of the generated policy and produces a distribution over twelve verdict
classes: eleven error types plus "correct".  Alongside the model-backed
verifier there is a structural oracle that compares a candidate policy to a
gold policy directly; it anchors every verdict-related test and powers the
training-data generator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol, Sequence

from .clients import VerdictClient
from .errors import LengthMismatch, PairingError
from .policy import (
    AccessControlPolicy,
    AccessControlRule,
    RULE_KEYS,
    ReconstructionTemplate,
    DEFAULT_TEMPLATE,
    reconstruct_nl,
)


class VerdictClass(enum.IntEnum):
    INCORRECT_DECISION = 0
    INCORRECT_SUBJECT = 1
    MISSING_SUBJECT = 2
    INCORRECT_RESOURCE = 3
    MISSING_RESOURCE = 4
    INCORRECT_PURPOSE = 5
    MISSING_PURPOSE = 6
    INCORRECT_CONDITION = 7
    MISSING_CONDITION = 8
    INCORRECT_ACTION = 9
    MISSING_ACR = 10
    CORRECT = 11


NUM_CLASSES = len(VerdictClass)

DISPLAY_NAMES = {
    VerdictClass.INCORRECT_DECISION: "incorrect decision",
    VerdictClass.INCORRECT_SUBJECT: "incorrect subject",
    VerdictClass.MISSING_SUBJECT: "missing subject",
    VerdictClass.INCORRECT_RESOURCE: "incorrect resource",
    VerdictClass.MISSING_RESOURCE: "missing resource",
    VerdictClass.INCORRECT_PURPOSE: "incorrect purpose",
    VerdictClass.MISSING_PURPOSE: "missing purpose",
    VerdictClass.INCORRECT_CONDITION: "incorrect condition",
    VerdictClass.MISSING_CONDITION: "missing condition",
    VerdictClass.INCORRECT_ACTION: "incorrect action",
    VerdictClass.MISSING_ACR: "missing ACR",
    VerdictClass.CORRECT: "correct",
}

# Error checks in the order the oracle applies them: the first one that
# fires is the verdict.  Missing outranks incorrect within each slot, and
# the slot order is subject, resource, purpose, condition.
_SLOT_CHECKS = (
    ("subject", VerdictClass.MISSING_SUBJECT, VerdictClass.INCORRECT_SUBJECT),
    ("resource", VerdictClass.MISSING_RESOURCE, VerdictClass.INCORRECT_RESOURCE),
    ("purpose", VerdictClass.MISSING_PURPOSE, VerdictClass.INCORRECT_PURPOSE),
    ("condition", VerdictClass.MISSING_CONDITION, VerdictClass.INCORRECT_CONDITION),
)

_ACTION_BONUS = 10


def _pair_score(gold: AccessControlRule, cand: AccessControlRule) -> int:
    score = _ACTION_BONUS if gold.action == cand.action else 0
    for key in RULE_KEYS:
        if gold.get(key) == cand.get(key):
            score += 1
    return score


def _best_assignment(scores: list[list[int]]) -> list[int]:
    """Max-total assignment of candidates to gold rules (square matrix).

    Bitmask dynamic programming over candidate subsets; deterministic
    tie-breaking picks the lowest candidate index at each step.
    """
    n = len(scores)
    if n > 16:
        raise LengthMismatch(f"cannot align policies with {n} rules")
    size = 1 << n
    neg = float("-inf")
    best = [neg] * size
    best[0] = 0.0
    choice = [[-1] * size for _ in range(n)]
    for mask in range(size):
        if best[mask] == neg:
            continue
        row = bin(mask).count("1")
        if row == n:
            continue
        for col in range(n):
            bit = 1 << col
            if mask & bit:
                continue
            total = best[mask] + scores[row][col]
            if total > best[mask | bit]:
                best[mask | bit] = total
    # Reconstruct by re-walking the table, preferring the smallest column.
    assignment = [-1] * n
    mask = (1 << n) - 1
    for row in range(n - 1, -1, -1):
        for col in range(n):
            bit = 1 << col
            if not mask & bit:
                continue
            prev = mask ^ bit
            if best[prev] != neg and best[prev] + scores[row][col] == best[mask]:
                assignment[row] = col
                mask = prev
                break
    return assignment


def align_rules(
    gold: AccessControlPolicy, candidate: AccessControlPolicy
) -> list[tuple[AccessControlRule, AccessControlRule]]:
    """Pair each gold rule with its best-matching candidate rule.

    Only defined for equal rule counts; rule-count mismatches are a
    policy-level error, not an alignment problem.
    """
    if len(gold.rules) != len(candidate.rules):
        raise LengthMismatch("rule counts differ; alignment undefined")
    scores = [[_pair_score(g, c) for c in candidate.rules] for g in gold.rules]
    assignment = _best_assignment(scores)
    return [(gold.rules[i], candidate.rules[j]) for i, j in enumerate(assignment)]


def oracle_verify(gold: AccessControlPolicy, candidate: AccessControlPolicy) -> VerdictClass:
    """Deterministic verdict from comparing candidate to gold structurally.

    Any rule-count mismatch is a missing-ACR error.  Otherwise rules are
    aligned and the checks run in a fixed priority order; within one check
    every aligned pair is examined before moving on.
    """
    if len(gold.rules) != len(candidate.rules):
        return VerdictClass.MISSING_ACR
    pairs = align_rules(gold, candidate)
    for g, c in pairs:
        if g.decision != c.decision:
            return VerdictClass.INCORRECT_DECISION
    for g, c in pairs:
        if g.action != c.action:
            return VerdictClass.INCORRECT_ACTION
    for slot, missing, incorrect in _SLOT_CHECKS:
        for g, c in pairs:
            if g.get(slot) is not None and c.get(slot) is None:
                return missing
        for g, c in pairs:
            if g.get(slot) != c.get(slot):
                return incorrect
    return VerdictClass.CORRECT


def one_hot(verdict: VerdictClass) -> list[float]:
    dist = [0.0] * NUM_CLASSES
    dist[int(verdict)] = 1.0
    return dist


def verdict_from_distribution(distribution: Sequence[float]) -> VerdictClass:
    """Argmax over the twelve classes; ties go to the lowest class id."""
    if len(distribution) != NUM_CLASSES:
        raise LengthMismatch(
            f"expected {NUM_CLASSES} class scores, got {len(distribution)}"
        )
    best = 0
    for index in range(1, NUM_CLASSES):
        if distribution[index] > distribution[best]:
            best = index
    return VerdictClass(best)


class Verifier(Protocol):
    def assess(
        self, nlacp: str, policy: AccessControlPolicy, reconstructed: str
    ) -> list[float]: ...


class ClientVerifier:
    """Verifier backed by a (premise, hypothesis) scoring client."""

    def __init__(self, client: VerdictClient):
        self._client = client

    def assess(
        self, nlacp: str, policy: AccessControlPolicy, reconstructed: str
    ) -> list[float]:
        return self._client.distribution(nlacp, reconstructed)


class OracleVerifier:
    """Verifier that consults gold policies instead of a model.

    Useful for offline runs and tests: the verdict is computed structurally
    from the gold policy registered for the sentence.
    """

    def __init__(self, gold: dict[str, AccessControlPolicy] | None = None):
        self._gold = dict(gold or {})

    def register(self, nlacp: str, policy: AccessControlPolicy) -> None:
        self._gold[nlacp] = policy

    def assess(
        self, nlacp: str, policy: AccessControlPolicy, reconstructed: str
    ) -> list[float]:
        if nlacp not in self._gold:
            raise PairingError(f"no gold policy registered for sentence: {nlacp[:80]!r}")
        return one_hot(oracle_verify(self._gold[nlacp], policy))


@dataclass(frozen=True)
class VerificationResult:
    verdict: VerdictClass
    distribution: tuple[float, ...]
    reconstructed: str


def verify_policy(
    verifier: Verifier,
    policy: AccessControlPolicy,
    template: ReconstructionTemplate = DEFAULT_TEMPLATE,
) -> VerificationResult:
    """Reconstruct the policy as text and ask the verifier to judge it."""
    reconstructed = reconstruct_nl(policy, template)
    distribution = verifier.assess(policy.nlacp, policy, reconstructed)
    return VerificationResult(
        verdict=verdict_from_distribution(distribution),
        distribution=tuple(float(x) for x in distribution),
        reconstructed=reconstructed,
    )
