"""Structured access control policy representation.

A policy is an ordered list of access control rules extracted from one
natural-language access control policy (NLACP) sentence.  Each rule has a
decision (allow/deny) and five entity slots: subject, action, resource,
purpose, condition.  Absent slots are `None` in memory and the literal
string "none" on the wire.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from xml.etree import ElementTree as ET

from .errors import (
    EmptyPolicyError,
    IncompleteRuleError,
    PolicySyntaxError,
    SchemaError,
)

DECISIONS = ("allow", "deny")

# Canonical key order of a serialized rule object.
RULE_KEYS = ("decision", "subject", "action", "resource", "purpose", "condition")

# The five entity slots (everything but the decision).
COMPONENT_KEYS = ("subject", "action", "resource", "purpose", "condition")

NONE_LITERAL = "none"

_WS = re.compile(r"\s+")


def normalize_entity(text: str | None) -> str | None:
    """Case-fold, collapse interior whitespace, strip; map "none" to None."""
    if text is None:
        return None
    cleaned = _WS.sub(" ", text).strip().casefold()
    if cleaned in ("", NONE_LITERAL):
        return None
    return cleaned


@dataclass(frozen=True)
class AccessControlRule:
    """One (decision, subject, action, resource, purpose, condition) tuple."""

    decision: str
    subject: str | None = None
    action: str | None = None
    resource: str | None = None
    purpose: str | None = None
    condition: str | None = None

    def __post_init__(self):
        decision = _WS.sub(" ", self.decision).strip().casefold()
        if decision not in DECISIONS:
            raise SchemaError(f"decision must be one of {DECISIONS}, got {self.decision!r}")
        object.__setattr__(self, "decision", decision)
        for key in COMPONENT_KEYS:
            object.__setattr__(self, key, normalize_entity(getattr(self, key)))

    def get(self, key: str) -> str | None:
        if key not in RULE_KEYS:
            raise KeyError(key)
        return getattr(self, key)

    def with_component(self, key: str, value: str | None) -> "AccessControlRule":
        if key == "decision":
            return replace(self, decision=value or "")
        if key not in COMPONENT_KEYS:
            raise KeyError(key)
        return replace(self, **{key: value})

    def to_mapping(self) -> dict[str, str]:
        """Six-key dict in canonical key order, None rendered as "none"."""
        out: dict[str, str] = {"decision": self.decision}
        for key in COMPONENT_KEYS:
            value = getattr(self, key)
            out[key] = NONE_LITERAL if value is None else value
        return out

    @classmethod
    def from_mapping(cls, obj: dict) -> "AccessControlRule":
        if not isinstance(obj, dict):
            raise SchemaError(f"rule must be an object, got {type(obj).__name__}")
        missing = [k for k in RULE_KEYS if k not in obj]
        if missing:
            raise SchemaError(f"rule object missing keys: {missing}")
        extra = [k for k in obj if k not in RULE_KEYS]
        if extra:
            raise SchemaError(f"rule object has unknown keys: {extra}")
        values: dict[str, str | None] = {}
        for key in RULE_KEYS:
            value = obj[key]
            if value is None:
                value = NONE_LITERAL
            if not isinstance(value, str):
                raise SchemaError(f"value for {key!r} must be a string, got {type(value).__name__}")
            values[key] = value
        if _WS.sub(" ", values["decision"] or "").strip().casefold() not in DECISIONS:
            raise SchemaError(f"bad decision value: {obj['decision']!r}")
        return cls(**values)  # type: ignore[arg-type]


@dataclass(frozen=True)
class Provenance:
    """Where a policy's NLACP came from."""

    doc_id: str
    sentence_index: int


@dataclass(frozen=True)
class AccessControlPolicy:
    """All rules extracted from one NLACP sentence."""

    rules: tuple[AccessControlRule, ...]
    nlacp: str = ""
    provenance: Provenance | None = None

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.rules:
            raise EmptyPolicyError("a policy must contain at least one rule")


def parse_policy(
    text: str,
    *,
    nlacp: str = "",
    provenance: Provenance | None = None,
) -> AccessControlPolicy:
    """Parse a serialized rule array into a normalized policy.

    The serialized form is a JSON array of six-key rule objects; key order
    inside each object does not matter on input.
    """
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise PolicySyntaxError(f"malformed policy text: {exc}") from exc
    if not isinstance(data, list):
        raise PolicySyntaxError("serialized policy must be a JSON array of rule objects")
    if not data:
        raise EmptyPolicyError("serialized policy contains zero rules")
    rules = tuple(AccessControlRule.from_mapping(obj) for obj in data)
    return AccessControlPolicy(rules=rules, nlacp=nlacp, provenance=provenance)


def serialize_policy(policy: AccessControlPolicy) -> str:
    """Canonical serialization: fixed key order, "none" literals, compact JSON."""
    return json.dumps(
        [rule.to_mapping() for rule in policy.rules],
        separators=(",", ":"),
        ensure_ascii=False,
    )


@dataclass(frozen=True)
class ReconstructionTemplate:
    """Templates that turn a rule back into a natural-language clause."""

    allow_form: str = "{subject} can {action} {resource}"
    deny_form: str = "{subject} cannot {action} {resource}"
    purpose_clause: str = " for the purpose of {purpose}"
    condition_clause: str = " if {condition}"
    rule_joiner: str = "; and "

    def render_rule(self, rule: AccessControlRule) -> str:
        form = self.allow_form if rule.decision == "allow" else self.deny_form
        text = form.format(
            subject=rule.subject or NONE_LITERAL,
            action=rule.action or NONE_LITERAL,
            resource=rule.resource or NONE_LITERAL,
        )
        if rule.purpose is not None:
            text += self.purpose_clause.format(purpose=rule.purpose)
        if rule.condition is not None:
            text += self.condition_clause.format(condition=rule.condition)
        return text


DEFAULT_TEMPLATE = ReconstructionTemplate()


def reconstruct_nl(
    policy: AccessControlPolicy,
    template: ReconstructionTemplate = DEFAULT_TEMPLATE,
) -> str:
    """Render one clause per rule, joined by the template's rule joiner."""
    return template.rule_joiner.join(template.render_rule(rule) for rule in policy.rules)


# --- XACML-style export ------------------------------------------------------

_XACML_NS = "urn:oasis:names:tc:xacml:3.0:core:schema:wd-17"
_CATEGORY = {
    "subject": "urn:oasis:names:tc:xacml:1.0:subject-category:access-subject",
    "action": "urn:oasis:names:tc:xacml:3.0:attribute-category:action",
    "resource": "urn:oasis:names:tc:xacml:3.0:attribute-category:resource",
}
_ATTRIBUTE_ID = {
    "subject": "urn:oasis:names:tc:xacml:1.0:subject:subject-id",
    "action": "urn:oasis:names:tc:xacml:1.0:action:action-id",
    "resource": "urn:oasis:names:tc:xacml:1.0:resource:resource-id",
}
_STRING_EQUAL = "urn:oasis:names:tc:xacml:1.0:function:string-equal"
_STRING_TYPE = "http://www.w3.org/2001/XMLSchema#string"
_DENY_OVERRIDES = "urn:oasis:names:tc:xacml:3.0:rule-combining-algorithm:deny-overrides"


def _match_element(slot: str, value: str) -> ET.Element:
    match = ET.Element("Match", MatchId=_STRING_EQUAL)
    attr_value = ET.SubElement(match, "AttributeValue", DataType=_STRING_TYPE)
    attr_value.text = value
    ET.SubElement(
        match,
        "AttributeDesignator",
        Category=_CATEGORY[slot],
        AttributeId=_ATTRIBUTE_ID[slot],
        DataType=_STRING_TYPE,
        MustBePresent="true",
    )
    return match


def export_xacml(policy: AccessControlPolicy, policy_id: str = "generated-policy") -> str:
    """Render the policy as a minimal XACML-3.0-style Policy element.

    Every rule must carry a subject, action, and resource; purpose and
    condition become a Condition element when present.
    """
    root = ET.Element(
        "Policy",
        xmlns=_XACML_NS,
        PolicyId=policy_id,
        RuleCombiningAlgId=_DENY_OVERRIDES,
        Version="1.0",
    )
    description = ET.SubElement(root, "Description")
    description.text = policy.nlacp or ""
    ET.SubElement(root, "Target")
    for index, rule in enumerate(policy.rules):
        for slot in ("subject", "action", "resource"):
            if rule.get(slot) is None:
                raise IncompleteRuleError(
                    f"rule {index} has no {slot}; cannot export an enforceable rule"
                )
        effect = "Permit" if rule.decision == "allow" else "Deny"
        rule_el = ET.SubElement(root, "Rule", RuleId=f"{policy_id}-rule-{index}", Effect=effect)
        target = ET.SubElement(rule_el, "Target")
        anyof = ET.SubElement(target, "AnyOf")
        allof = ET.SubElement(anyof, "AllOf")
        for slot in ("subject", "action", "resource"):
            allof.append(_match_element(slot, rule.get(slot)))  # type: ignore[arg-type]
        contextual = [(k, rule.get(k)) for k in ("purpose", "condition") if rule.get(k)]
        if contextual:
            condition = ET.SubElement(rule_el, "Condition")
            apply_el = ET.SubElement(
                condition, "Apply", FunctionId="urn:oasis:names:tc:xacml:1.0:function:and"
            )
            for slot, value in contextual:
                attr = ET.SubElement(
                    apply_el, "AttributeValue", DataType=_STRING_TYPE, AttributeId=slot
                )
                attr.text = value
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")
