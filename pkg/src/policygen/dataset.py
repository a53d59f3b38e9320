"""Verification training data and gold-corpus handling.

The verifier learns from (NLACP, reconstructed policy text) pairs labelled
with one of the twelve verdict classes.  Correct pairs come straight from
gold policies; error pairs are produced by four seeded manipulations of a
gold policy, each of which induces a known label.  Every manipulated pair
is cross-checked against the structural oracle before it is emitted, so the
emitted label and the oracle's verdict agree by construction.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import PreconditionError, RatioError
from .policy import (
    AccessControlPolicy,
    AccessControlRule,
    ReconstructionTemplate,
    DEFAULT_TEMPLATE,
    reconstruct_nl,
    serialize_policy,
)
from .verify import VerdictClass, oracle_verify

# Components a replacement manipulation may touch.
REPLACEABLE = ("subject", "action", "resource", "purpose", "condition")
# Components a deletion manipulation may touch.  The verdict taxonomy has
# no missing-action class, so actions are never deleted.
DELETABLE = ("subject", "resource", "purpose", "condition")

_INCORRECT_LABEL = {
    "decision": VerdictClass.INCORRECT_DECISION,
    "subject": VerdictClass.INCORRECT_SUBJECT,
    "resource": VerdictClass.INCORRECT_RESOURCE,
    "purpose": VerdictClass.INCORRECT_PURPOSE,
    "condition": VerdictClass.INCORRECT_CONDITION,
    "action": VerdictClass.INCORRECT_ACTION,
}
_MISSING_LABEL = {
    "subject": VerdictClass.MISSING_SUBJECT,
    "resource": VerdictClass.MISSING_RESOURCE,
    "purpose": VerdictClass.MISSING_PURPOSE,
    "condition": VerdictClass.MISSING_CONDITION,
}


class Manipulation(str, enum.Enum):
    DECISION_CHANGE = "decision_change"
    COMPONENT_REPLACE = "component_replace"
    COMPONENT_DELETE = "component_delete"
    ACR_DELETE = "acr_delete"


@dataclass(frozen=True)
class ManipulationOutcome:
    policy: AccessControlPolicy
    label: VerdictClass
    manipulation: Manipulation
    rule_index: int | None
    component: str | None


def _swap_rule(
    policy: AccessControlPolicy, index: int, rule: AccessControlRule
) -> AccessControlPolicy:
    rules = list(policy.rules)
    rules[index] = rule
    return AccessControlPolicy(rules=tuple(rules), nlacp=policy.nlacp, provenance=policy.provenance)


def change_decision(policy: AccessControlPolicy, rng: random.Random) -> ManipulationOutcome:
    """Flip the decision of one rule."""
    index = rng.randrange(len(policy.rules))
    rule = policy.rules[index]
    flipped = rule.with_component("decision", "deny" if rule.decision == "allow" else "allow")
    return ManipulationOutcome(
        policy=_swap_rule(policy, index, flipped),
        label=VerdictClass.INCORRECT_DECISION,
        manipulation=Manipulation.DECISION_CHANGE,
        rule_index=index,
        component="decision",
    )


def _present_components(policy: AccessControlPolicy, allowed: tuple[str, ...]) -> list[tuple[int, str]]:
    slots = []
    for index, rule in enumerate(policy.rules):
        for component in allowed:
            if rule.get(component) is not None:
                slots.append((index, component))
    return slots


def replace_component(
    policy: AccessControlPolicy,
    rng: random.Random,
    vocabulary: dict[str, list[str]],
) -> ManipulationOutcome:
    """Swap one present component value for a foreign vocabulary value.

    The replacement never equals any value that component already takes
    inside the policy, which keeps the induced error unambiguous.
    """
    slots = _present_components(policy, REPLACEABLE)
    rng.shuffle(slots)
    for index, component in slots:
        taken = {rule.get(component) for rule in policy.rules}
        pool = [value for value in vocabulary.get(component, []) if value not in taken]
        if not pool:
            continue
        replacement = rng.choice(pool)
        modified = policy.rules[index].with_component(component, replacement)
        return ManipulationOutcome(
            policy=_swap_rule(policy, index, modified),
            label=_INCORRECT_LABEL[component],
            manipulation=Manipulation.COMPONENT_REPLACE,
            rule_index=index,
            component=component,
        )
    raise PreconditionError("no component of this policy can be replaced with the vocabulary given")


def delete_component(policy: AccessControlPolicy, rng: random.Random) -> ManipulationOutcome:
    """Blank one present component (subject, resource, purpose, or condition)."""
    slots = _present_components(policy, DELETABLE)
    if not slots:
        raise PreconditionError("policy has no deletable component")
    index, component = slots[rng.randrange(len(slots))]
    modified = policy.rules[index].with_component(component, None)
    return ManipulationOutcome(
        policy=_swap_rule(policy, index, modified),
        label=_MISSING_LABEL[component],
        manipulation=Manipulation.COMPONENT_DELETE,
        rule_index=index,
        component=component,
    )


def delete_rule(policy: AccessControlPolicy, rng: random.Random) -> ManipulationOutcome:
    """Drop one whole rule; only sensible for multi-rule policies."""
    if len(policy.rules) < 2:
        raise PreconditionError("rule deletion needs a policy with at least two rules")
    index = rng.randrange(len(policy.rules))
    rules = tuple(rule for i, rule in enumerate(policy.rules) if i != index)
    return ManipulationOutcome(
        policy=AccessControlPolicy(rules=rules, nlacp=policy.nlacp, provenance=policy.provenance),
        label=VerdictClass.MISSING_ACR,
        manipulation=Manipulation.ACR_DELETE,
        rule_index=index,
        component=None,
    )


def eligible_manipulations(
    policy: AccessControlPolicy, vocabulary: dict[str, list[str]]
) -> list[Manipulation]:
    options = [Manipulation.DECISION_CHANGE]
    for index, component in _present_components(policy, REPLACEABLE):
        taken = {rule.get(component) for rule in policy.rules}
        if any(value not in taken for value in vocabulary.get(component, [])):
            options.append(Manipulation.COMPONENT_REPLACE)
            break
    if _present_components(policy, DELETABLE):
        options.append(Manipulation.COMPONENT_DELETE)
    if len(policy.rules) >= 2:
        options.append(Manipulation.ACR_DELETE)
    return options


def manipulate(
    policy: AccessControlPolicy,
    manipulation: Manipulation,
    rng: random.Random,
    vocabulary: dict[str, list[str]] | None = None,
) -> ManipulationOutcome:
    """Apply one manipulation and cross-check the induced label."""
    if manipulation is Manipulation.DECISION_CHANGE:
        outcome = change_decision(policy, rng)
    elif manipulation is Manipulation.COMPONENT_REPLACE:
        outcome = replace_component(policy, rng, vocabulary or {})
    elif manipulation is Manipulation.COMPONENT_DELETE:
        outcome = delete_component(policy, rng)
    elif manipulation is Manipulation.ACR_DELETE:
        outcome = delete_rule(policy, rng)
    else:
        raise ValueError(f"unknown manipulation {manipulation!r}")
    if serialize_policy(outcome.policy) == serialize_policy(policy):
        raise PreconditionError("manipulation produced an unchanged policy")
    observed = oracle_verify(policy, outcome.policy)
    if observed is not outcome.label:
        raise PreconditionError(
            f"manipulation label {outcome.label.name} disagrees with oracle {observed.name}"
        )
    return outcome


def component_vocabulary(policies: list[AccessControlPolicy]) -> dict[str, list[str]]:
    """All values each component takes across a corpus, sorted."""
    values: dict[str, set[str]] = {component: set() for component in REPLACEABLE}
    for policy in policies:
        for rule in policy.rules:
            for component in REPLACEABLE:
                value = rule.get(component)
                if value is not None:
                    values[component].add(value)
    return {component: sorted(texts) for component, texts in values.items()}


@dataclass(frozen=True)
class VerificationExample:
    """One labelled (NLACP, reconstruction) training pair."""

    nlacp: str
    reconstructed: str
    label: VerdictClass
    manipulation: str
    policy_text: str

    def to_row(self) -> dict:
        return {
            "nlacp": self.nlacp,
            "reconstructed": self.reconstructed,
            "label": int(self.label),
            "label_name": self.label.name,
            "manipulation": self.manipulation,
            "policy": self.policy_text,
        }


def build_verification_examples(
    gold: list[AccessControlPolicy],
    seed: int,
    per_policy: int = 4,
    include_correct: bool = True,
    vocabulary: dict[str, list[str]] | None = None,
    template: ReconstructionTemplate = DEFAULT_TEMPLATE,
) -> list[VerificationExample]:
    """Seeded training pairs for the verifier from a gold corpus."""
    rng = random.Random(seed)
    vocabulary = vocabulary if vocabulary is not None else component_vocabulary(gold)
    examples: list[VerificationExample] = []
    for policy in gold:
        if include_correct:
            examples.append(
                VerificationExample(
                    nlacp=policy.nlacp,
                    reconstructed=reconstruct_nl(policy, template),
                    label=VerdictClass.CORRECT,
                    manipulation="none",
                    policy_text=serialize_policy(policy),
                )
            )
        options = eligible_manipulations(policy, vocabulary)
        if not options:
            continue
        for _ in range(per_policy):
            manipulation = options[rng.randrange(len(options))]
            outcome = manipulate(policy, manipulation, rng, vocabulary)
            examples.append(
                VerificationExample(
                    nlacp=policy.nlacp,
                    reconstructed=reconstruct_nl(outcome.policy, template),
                    label=outcome.label,
                    manipulation=outcome.manipulation.value,
                    policy_text=serialize_policy(outcome.policy),
                )
            )
    return examples


# --- gold corpus IO ------------------------------------------------------------


@dataclass(frozen=True)
class GoldExample:
    example_id: str
    nlacp: str
    policy: AccessControlPolicy | None
    label: bool = True
    fold: str = ""


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def write_jsonl(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_gold(path: str | Path) -> list[GoldExample]:
    """Gold corpus rows: {"id", "text", "label", "acrs", "fold"}.

    "nlacp" is accepted as an alias for "text" and "rules" for "acrs";
    "label" defaults to true and "fold" to "" so compact corpora that only
    list annotated sentences still load.  Rows labeled as non-access-control
    sentences are kept (with whatever rules they carry, usually none) so
    classification corpora round-trip; policy-level consumers filter on
    the label.
    """
    examples = []
    for row in read_jsonl(path):
        text = row["text"] if "text" in row else row["nlacp"]
        raw_rules = row["acrs"] if "acrs" in row else row.get("rules", [])
        rules = tuple(AccessControlRule.from_mapping(obj) for obj in raw_rules)
        policy = AccessControlPolicy(rules=rules, nlacp=text) if rules else None
        examples.append(
            GoldExample(
                example_id=str(row["id"]),
                nlacp=text,
                policy=policy,
                label=bool(row.get("label", True)),
                fold=str(row.get("fold", "")),
            )
        )
    return examples


def save_gold(path: str | Path, examples: list[GoldExample]) -> None:
    write_jsonl(
        path,
        [
            {
                "id": example.example_id,
                "text": example.nlacp,
                "label": example.label,
                "acrs": [rule.to_mapping() for rule in example.policy.rules]
                if example.policy is not None
                else [],
                "fold": example.fold,
            }
            for example in examples
        ],
    )


def split_records(
    records: list,
    seed: int,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> tuple[list, list, list]:
    """Seeded train/validation/test split by proportion."""
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise RatioError(f"ratios must be three non-negative numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise RatioError(f"ratios must sum to 1, got {sum(ratios)}")
    shuffled = list(records)
    random.Random(seed).shuffle(shuffled)
    n = len(shuffled)
    train_end = int(round(n * ratios[0]))
    valid_end = min(n, train_end + int(round(n * ratios[1])))
    return shuffled[:train_end], shuffled[train_end:valid_end], shuffled[valid_end:]
