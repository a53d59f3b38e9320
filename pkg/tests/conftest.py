"""Shared builders and strategies for the test suite."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from policygen.policy import AccessControlPolicy, AccessControlRule


def make_rule(
    decision: str = "allow",
    subject: str | None = "doctor",
    action: str | None = "read",
    resource: str | None = "medical records",
    purpose: str | None = None,
    condition: str | None = None,
) -> AccessControlRule:
    return AccessControlRule(
        decision=decision,
        subject=subject,
        action=action,
        resource=resource,
        purpose=purpose,
        condition=condition,
    )


def make_policy(*rules: AccessControlRule, nlacp: str = "the sentence") -> AccessControlPolicy:
    if not rules:
        rules = (make_rule(),)
    return AccessControlPolicy(rules=tuple(rules), nlacp=nlacp)


# --- hypothesis strategies ---------------------------------------------------------

entity_texts = st.from_regex(r"[a-z]{1,8}( [a-z]{1,8}){0,2}", fullmatch=True).filter(
    lambda s: s != "none"
)

optional_entities = st.one_of(st.none(), entity_texts)

rules_st = st.builds(
    AccessControlRule,
    decision=st.sampled_from(["allow", "deny"]),
    subject=optional_entities,
    action=optional_entities,
    resource=optional_entities,
    purpose=optional_entities,
    condition=optional_entities,
)

policies_st = st.builds(
    lambda rules: AccessControlPolicy(rules=tuple(rules), nlacp="the sentence"),
    st.lists(rules_st, min_size=1, max_size=4),
)


# --- seeded bulk generators ---------------------------------------------------------

_SUBJECTS = ["doctor", "nurse", "patient", "admin", "auditor", "clerk", "manager", "agent"]
_ACTIONS = ["read", "write", "update", "delete", "view", "edit", "share", "export"]
_RESOURCES = [
    "medical records",
    "lab results",
    "billing data",
    "audit logs",
    "prescriptions",
    "schedules",
    "case files",
    "reports",
]
_PURPOSES = ["treatment", "billing", "research", "auditing", "scheduling", "training"]
_CONDITIONS = [
    "during business hours",
    "with patient consent",
    "on the local network",
    "after authentication",
    "in an emergency",
]


def random_rule(rng: random.Random, full: bool = False) -> AccessControlRule:
    """A plausible rule; optional slots are present with probability 0.5."""
    return AccessControlRule(
        decision=rng.choice(["allow", "deny"]),
        subject=rng.choice(_SUBJECTS),
        action=rng.choice(_ACTIONS),
        resource=rng.choice(_RESOURCES),
        purpose=rng.choice(_PURPOSES) if full or rng.random() < 0.5 else None,
        condition=rng.choice(_CONDITIONS) if full or rng.random() < 0.5 else None,
    )


def random_policy(
    rng: random.Random, max_rules: int = 3, nlacp: str = "the sentence", full: bool = False
) -> AccessControlPolicy:
    count = rng.randint(1, max_rules)
    return AccessControlPolicy(
        rules=tuple(random_rule(rng, full) for _ in range(count)),
        nlacp=nlacp,
    )
