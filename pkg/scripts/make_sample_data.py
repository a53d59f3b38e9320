#!/usr/bin/env python3
"""Regenerate the frozen demonstration fixtures under tests/data.

The fixtures describe one small hospital document run end to end: a two
paragraph document, an entity store, gold policies for its three NLACP
sentences, a scripted chat fixture covering every prompt the pipeline can
issue for it (including every ablation variant), and a golden run record.

Everything here is deterministic, so re-running the script reproduces the
same bytes.  The script also replays all four ablation variants against the
fixture it just wrote and fails loudly if any outcome drifts.
"""

from __future__ import annotations

import json
from pathlib import Path

from policygen.clients import hash_messages
from policygen.config import ClientSpec, RunConfig
from policygen.generation import build_generation_messages
from policygen.pipeline import Pipeline, run_to_json
from policygen.policy import AccessControlPolicy, AccessControlRule, serialize_policy
from policygen.refine import build_refinement_messages
from policygen.retrieval import EntityCatalog, HashedBowEmbedder

DATA_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"

S_READ = "Doctors can read medical records."
S_UPDATE = "Nurses cannot update medical records."
S_DELETE = "Administrators can delete audit logs if a retention period has expired."

DOCUMENT = (
    "The hospital keeps electronic health records. "
    f"{S_READ} {S_UPDATE}\n\n"
    "The system was installed in 2019. "
    f"{S_DELETE}\n"
)

ENTITIES = {
    "subjects": ["doctor", "nurse", "administrator", "patient"],
    "actions": ["read", "update", "delete", "write"],
    "resources": ["medical records", "audit logs", "lab results"],
    "purposes": ["treatment", "research"],
    "conditions": ["a retention period has expired", "with patient consent"],
}


def rule(decision, subject, action, resource, purpose="none", condition="none"):
    return {
        "decision": decision,
        "subject": subject,
        "action": action,
        "resource": resource,
        "purpose": purpose,
        "condition": condition,
    }


READ_GOLD = [rule("allow", "doctor", "read", "medical records")]
READ_INITIAL = [rule("allow", "the doctor", "read", "medical records")]
UPDATE_GOLD = [rule("deny", "nurse", "update", "medical records")]
UPDATE_INITIAL = [rule("allow", "nurse", "update", "medical records")]
DELETE_GOLD = [
    rule(
        "allow",
        "administrator",
        "delete",
        "audit logs",
        condition="a retention period has expired",
    )
]
DELETE_INITIAL = [rule("allow", "administrator", "delete", "audit logs")]

GOLD_ROWS = [
    {
        "id": "g0",
        "text": "The hospital keeps electronic health records.",
        "label": False,
        "acrs": [],
        "fold": "hospital",
    },
    {"id": "g1", "text": S_READ, "label": True, "acrs": READ_GOLD, "fold": "hospital"},
    {"id": "g2", "text": S_UPDATE, "label": True, "acrs": UPDATE_GOLD, "fold": "hospital"},
    {
        "id": "g3",
        "text": "The system was installed in 2019.",
        "label": False,
        "acrs": [],
        "fold": "hospital",
    },
    {"id": "g4", "text": S_DELETE, "label": True, "acrs": DELETE_GOLD, "fold": "hospital"},
]


def to_policy(rules: list[dict], nlacp: str) -> AccessControlPolicy:
    return AccessControlPolicy(
        rules=tuple(AccessControlRule.from_mapping(obj) for obj in rules),
        nlacp=nlacp,
    )


def initial_reply(rules: list[dict]) -> str:
    return "Here is the policy:\n" + json.dumps(rules, ensure_ascii=False)


def refinement_reply(reasoning: str, rules: list[dict]) -> str:
    return f"{reasoning}\n\n### Corrected: \n\n" + json.dumps(rules, ensure_ascii=False)


def build_chat_rows(catalog: EntityCatalog) -> dict[str, str]:
    """Every (prompt hash, reply) pair the demo document can trigger.

    Initial generation prompts come in two flavours per sentence, one with
    the retrieved bundle and one with an empty bundle for retrieval-off
    runs.  Refinement prompts embed the serialized candidate policy, which
    is identical across ablation variants for the update and delete
    sentences; the read sentence only reaches refinement when alignment is
    disabled, so its refinement prompt shows the raw generated subject.
    """
    rows: dict[str, str] = {}

    def add(messages: list[dict], reply: str) -> None:
        rows[hash_messages(messages)] = reply

    for sentence, produced in (
        (S_READ, READ_INITIAL),
        (S_UPDATE, UPDATE_INITIAL),
        (S_DELETE, DELETE_INITIAL),
    ):
        bundle = catalog.retrieve_bundle(sentence, RunConfig().top_k)
        add(build_generation_messages(sentence, bundle), initial_reply(produced))
        add(build_generation_messages(sentence, {}), initial_reply(produced))

    add(
        build_refinement_messages(
            S_UPDATE,
            serialize_policy(to_policy(UPDATE_INITIAL, S_UPDATE)),
            "incorrect decision",
        ),
        refinement_reply(
            "The sentence forbids the update, so the decision must be deny.",
            UPDATE_GOLD,
        ),
    )
    add(
        build_refinement_messages(
            S_DELETE,
            serialize_policy(to_policy(DELETE_INITIAL, S_DELETE)),
            "missing condition",
        ),
        refinement_reply(
            "The rule already reflects the sentence as written.",
            DELETE_INITIAL,
        ),
    )
    add(
        build_refinement_messages(
            S_READ,
            serialize_policy(to_policy(READ_INITIAL, S_READ)),
            "incorrect subject",
        ),
        refinement_reply(
            "The stored vocabulary names the subject doctor, not the doctor.",
            READ_GOLD,
        ),
    )
    return rows


def base_config() -> RunConfig:
    return RunConfig(
        generator=ClientSpec(kind="fixture", target=str(DATA_DIR / "gen_fixture.jsonl")),
        gold_path=str(DATA_DIR / "gold_sample.jsonl"),
        entity_store_path=str(DATA_DIR / "entity_store.json"),
    )


# A second, self-contained golden set: two sentences that each yield a
# two-rule policy, generated correctly on the first try with no entity
# store involved.  The expected canonical serializations are spelled out
# by hand so drift in the serializer shows up as a byte difference.

S_PRESCRIBE = "The doctor can write prescriptions, but the nurse cannot."
S_PROFILE = (
    "Demographic data is stored in user global profiles, and can only be "
    "modified by users (never by site managers)."
)
GOLDEN_DOC = f"{S_PRESCRIBE} {S_PROFILE}\n"

PRESCRIBE_RULES = [
    rule("allow", "doctor", "write", "prescriptions"),
    rule("deny", "nurse", "write", "prescriptions"),
]
PROFILE_RULES = [
    rule("allow", "user", "modify", "demographic data"),
    rule("deny", "site manager", "modify", "demographic data"),
]

PRESCRIBE_CANONICAL = (
    '[{"decision":"allow","subject":"doctor","action":"write",'
    '"resource":"prescriptions","purpose":"none","condition":"none"},'
    '{"decision":"deny","subject":"nurse","action":"write",'
    '"resource":"prescriptions","purpose":"none","condition":"none"}]'
)
PROFILE_CANONICAL = (
    '[{"decision":"allow","subject":"user","action":"modify",'
    '"resource":"demographic data","purpose":"none","condition":"none"},'
    '{"decision":"deny","subject":"site manager","action":"modify",'
    '"resource":"demographic data","purpose":"none","condition":"none"}]'
)


def write_golden_set() -> None:
    (DATA_DIR / "golden_doc.txt").write_text(GOLDEN_DOC, encoding="utf-8")
    gold_rows = [
        {"id": "p0", "text": S_PRESCRIBE, "label": True, "acrs": PRESCRIBE_RULES, "fold": ""},
        {"id": "p1", "text": S_PROFILE, "label": True, "acrs": PROFILE_RULES, "fold": ""},
    ]
    (DATA_DIR / "golden_gold.jsonl").write_text(
        "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in gold_rows),
        encoding="utf-8",
    )
    chat_rows = {}
    for sentence, rules in ((S_PRESCRIBE, PRESCRIBE_RULES), (S_PROFILE, PROFILE_RULES)):
        messages = build_generation_messages(sentence, {})
        chat_rows[hash_messages(messages)] = initial_reply(rules)
    (DATA_DIR / "golden_chat.jsonl").write_text(
        "".join(
            json.dumps({"prompt_hash": key, "response": reply}, ensure_ascii=False) + "\n"
            for key, reply in chat_rows.items()
        ),
        encoding="utf-8",
    )

    config = RunConfig(
        generator=ClientSpec(kind="fixture", target=str(DATA_DIR / "golden_chat.jsonl")),
        gold_path=str(DATA_DIR / "golden_gold.jsonl"),
    )
    record = Pipeline(config).run_document("golden-doc", GOLDEN_DOC)
    if record.counts != {"applied": 2, "needs_review": 0, "unverified": 0, "other": 0}:
        raise SystemExit(f"golden set: unexpected counts {record.counts}")
    produced = [
        serialize_policy(to_policy(outcome.rules, outcome.text))
        for outcome in record.sentences
    ]
    if produced != [PRESCRIBE_CANONICAL, PROFILE_CANONICAL]:
        raise SystemExit("golden set: canonical serialization drifted")
    (DATA_DIR / "golden_record.json").write_text(run_to_json(record), encoding="utf-8")
    print(f"golden set: counts={record.counts}")


def check_variants(config: RunConfig) -> str:
    """Replay all four ablation variants and return the full-run JSON."""
    import dataclasses

    variants = {
        "full": {},
        "no-retrieval": {"retrieval_enabled": False},
        "no-postprocess": {"postprocess_enabled": False},
        "no-refine": {"refinement_enabled": False},
    }
    expected_counts = {
        "full": {"applied": 2, "needs_review": 1, "unverified": 0, "other": 2},
        "no-retrieval": {"applied": 2, "needs_review": 1, "unverified": 0, "other": 2},
        "no-postprocess": {"applied": 2, "needs_review": 1, "unverified": 0, "other": 2},
        "no-refine": {"applied": 1, "needs_review": 2, "unverified": 0, "other": 2},
    }
    expected_rounds = {
        "full": [0, 1, 3],
        "no-retrieval": [0, 1, 3],
        "no-postprocess": [1, 1, 3],
        "no-refine": [0, 0, 0],
    }
    golden = ""
    for name, overrides in variants.items():
        variant = dataclasses.replace(config, **overrides)
        record = Pipeline(variant).run_document("demo-doc", DOCUMENT)
        if record.counts != expected_counts[name]:
            raise SystemExit(f"{name}: unexpected counts {record.counts}")
        rounds = [s.rounds_used for s in record.sentences if s.is_nlacp]
        if rounds != expected_rounds[name]:
            raise SystemExit(f"{name}: unexpected rounds {rounds}")
        if name == "full":
            golden = run_to_json(record)
        print(f"{name}: counts={record.counts} rounds={rounds}")
    return golden


def main() -> int:
    DATA_DIR.mkdir(parents=True, exist_ok=True)

    (DATA_DIR / "demo_doc.txt").write_text(DOCUMENT, encoding="utf-8")
    (DATA_DIR / "entities.json").write_text(
        json.dumps(ENTITIES, indent=2) + "\n", encoding="utf-8"
    )

    config = base_config()
    embedder = HashedBowEmbedder(config.embedding_dim)
    catalog = EntityCatalog(embedder, dim=config.embedding_dim)
    for store_name, texts in ENTITIES.items():
        catalog.ingest(store_name, texts)
    catalog.save(DATA_DIR / "entity_store.json")

    (DATA_DIR / "gold_sample.jsonl").write_text(
        "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in GOLD_ROWS),
        encoding="utf-8",
    )

    rows = build_chat_rows(catalog)
    (DATA_DIR / "gen_fixture.jsonl").write_text(
        "".join(
            json.dumps({"prompt_hash": key, "response": rows[key]}, ensure_ascii=False) + "\n"
            for key in rows
        ),
        encoding="utf-8",
    )

    golden = check_variants(config)
    (DATA_DIR / "golden_run.json").write_text(golden, encoding="utf-8")

    write_golden_set()
    print(f"wrote fixtures to {DATA_DIR}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
