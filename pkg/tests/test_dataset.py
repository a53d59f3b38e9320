"""Seeded manipulations, verifier training data, and gold-corpus IO."""

from __future__ import annotations

import random

import pytest

from conftest import make_policy, make_rule, random_policy
from policygen.dataset import (
    GoldExample,
    Manipulation,
    build_verification_examples,
    change_decision,
    component_vocabulary,
    delete_component,
    delete_rule,
    eligible_manipulations,
    load_gold,
    manipulate,
    read_jsonl,
    replace_component,
    save_gold,
    split_records,
    write_jsonl,
)
from policygen.errors import PreconditionError, RatioError
from policygen.policy import parse_policy, serialize_policy
from policygen.verify import VerdictClass, oracle_verify

FOREIGN_VOCAB = {
    "subject": ["outside subject"],
    "action": ["outside action"],
    "resource": ["outside resource"],
    "purpose": ["outside purpose"],
    "condition": ["outside condition"],
}


class TestSingleManipulations:
    def test_decision_change_flips_exactly_one_rule(self):
        policy = make_policy(make_rule(), make_rule(subject="nurse", action="update"))
        outcome = change_decision(policy, random.Random(0))
        changed = outcome.policy.rules[outcome.rule_index]
        assert changed.decision == "deny"
        assert outcome.label is VerdictClass.INCORRECT_DECISION
        assert oracle_verify(policy, outcome.policy) is outcome.label
        untouched = [i for i in range(2) if i != outcome.rule_index]
        for i in untouched:
            assert outcome.policy.rules[i] == policy.rules[i]

    def test_replace_uses_only_foreign_values(self):
        rng = random.Random(1)
        policy = make_policy(make_rule(purpose="treatment", condition="consent given"))
        for _ in range(20):
            outcome = replace_component(policy, rng, FOREIGN_VOCAB)
            new_value = outcome.policy.rules[0].get(outcome.component)
            assert new_value == FOREIGN_VOCAB[outcome.component][0]
            assert outcome.label is VerdictClass[f"INCORRECT_{outcome.component.upper()}"]
            assert oracle_verify(policy, outcome.policy) is outcome.label

    def test_replace_skips_values_already_taken(self):
        policy = make_policy(
            make_rule(subject="doctor"), make_rule(subject="nurse", action="update")
        )
        vocab = {"subject": ["doctor", "nurse"]}
        with pytest.raises(PreconditionError):
            replace_component(policy, rng=random.Random(2), vocabulary=vocab)

    def test_replace_without_vocabulary_fails(self):
        with pytest.raises(PreconditionError):
            replace_component(make_policy(make_rule()), random.Random(3), {})

    def test_delete_component_blanks_one_slot(self):
        rng = random.Random(4)
        policy = make_policy(make_rule(purpose="treatment", condition="consent given"))
        seen = set()
        for _ in range(40):
            outcome = delete_component(policy, rng)
            seen.add(outcome.component)
            assert outcome.policy.rules[0].get(outcome.component) is None
            assert outcome.label is VerdictClass[f"MISSING_{outcome.component.upper()}"]
            assert oracle_verify(policy, outcome.policy) is outcome.label
        assert seen == {"subject", "resource", "purpose", "condition"}

    def test_delete_component_never_touches_action(self):
        rng = random.Random(5)
        policy = make_policy(make_rule(purpose="treatment"))
        for _ in range(30):
            assert delete_component(policy, rng).component != "action"

    def test_delete_component_requires_a_present_slot(self):
        bare = make_policy(
            make_rule(subject=None, resource=None, purpose=None, condition=None)
        )
        with pytest.raises(PreconditionError):
            delete_component(bare, random.Random(6))

    def test_rule_delete_drops_one_rule(self):
        policy = make_policy(make_rule(), make_rule(subject="nurse", action="update"))
        outcome = delete_rule(policy, random.Random(7))
        assert len(outcome.policy.rules) == 1
        assert outcome.label is VerdictClass.MISSING_ACR
        assert oracle_verify(policy, outcome.policy) is VerdictClass.MISSING_ACR

    def test_rule_delete_needs_two_rules(self):
        with pytest.raises(PreconditionError):
            delete_rule(make_policy(make_rule()), random.Random(8))


class TestManipulateDispatch:
    def test_each_manipulation_is_cross_checked(self):
        rng = random.Random(9)
        policy = make_policy(
            make_rule(purpose="treatment", condition="consent given"),
            make_rule(subject="nurse", action="update"),
        )
        for manipulation in Manipulation:
            outcome = manipulate(policy, manipulation, rng, FOREIGN_VOCAB)
            assert outcome.manipulation is manipulation
            assert oracle_verify(policy, outcome.policy) is outcome.label

    def test_randomized_agreement_with_structural_oracle(self):
        rng = random.Random(10)
        for _ in range(200):
            policy = random_policy(rng, max_rules=3, full=True)
            options = eligible_manipulations(policy, FOREIGN_VOCAB)
            manipulation = options[rng.randrange(len(options))]
            outcome = manipulate(policy, manipulation, rng, FOREIGN_VOCAB)
            assert oracle_verify(policy, outcome.policy) is outcome.label

    def test_eligibility_reflects_policy_shape(self):
        single = make_policy(make_rule(subject=None, purpose=None, condition=None))
        options = eligible_manipulations(single, FOREIGN_VOCAB)
        assert Manipulation.DECISION_CHANGE in options
        assert Manipulation.COMPONENT_REPLACE in options
        assert Manipulation.COMPONENT_DELETE in options
        assert Manipulation.ACR_DELETE not in options

        no_vocab = eligible_manipulations(single, {})
        assert Manipulation.COMPONENT_REPLACE not in no_vocab

        bare = make_policy(
            make_rule(subject=None, resource=None, purpose=None, condition=None)
        )
        assert Manipulation.COMPONENT_DELETE not in eligible_manipulations(bare, {})


class TestVocabulary:
    def test_component_vocabulary_collects_sorted_values(self):
        policies = [
            make_policy(make_rule(subject="nurse", purpose="triage")),
            make_policy(make_rule(subject="doctor", action="update")),
        ]
        vocab = component_vocabulary(policies)
        assert vocab["subject"] == ["doctor", "nurse"]
        assert vocab["action"] == ["read", "update"]
        assert vocab["purpose"] == ["triage"]
        assert vocab["condition"] == []


class TestExampleBuilding:
    def build_gold(self):
        rng = random.Random(11)
        return [
            random_policy(rng, max_rules=2, nlacp=f"sentence {i}", full=True)
            for i in range(6)
        ]

    def test_rows_are_deterministic_for_a_seed(self):
        gold = self.build_gold()
        first = [e.to_row() for e in build_verification_examples(gold, seed=21)]
        second = [e.to_row() for e in build_verification_examples(gold, seed=21)]
        assert first == second

    def test_row_counts_and_correct_rows(self):
        gold = self.build_gold()
        examples = build_verification_examples(gold, seed=22, per_policy=3)
        assert len(examples) == len(gold) * 4
        correct = [e for e in examples if e.label is VerdictClass.CORRECT]
        assert len(correct) == len(gold)
        assert all(e.manipulation == "none" for e in correct)

    def test_correct_rows_can_be_disabled(self):
        gold = self.build_gold()
        examples = build_verification_examples(
            gold, seed=23, per_policy=2, include_correct=False
        )
        assert len(examples) == len(gold) * 2
        assert all(e.label is not VerdictClass.CORRECT for e in examples)

    def test_labels_rederive_from_policy_text(self):
        gold = self.build_gold()
        by_nlacp = {policy.nlacp: policy for policy in gold}
        for example in build_verification_examples(gold, seed=24):
            candidate = parse_policy(example.policy_text, nlacp=example.nlacp)
            observed = oracle_verify(by_nlacp[example.nlacp], candidate)
            assert observed is example.label

    def test_to_row_carries_label_id_and_name(self):
        gold = self.build_gold()[:1]
        row = build_verification_examples(gold, seed=25)[0].to_row()
        assert row["label"] == int(VerdictClass.CORRECT)
        assert row["label_name"] == "CORRECT"
        assert set(row) == {
            "nlacp",
            "reconstructed",
            "label",
            "label_name",
            "manipulation",
            "policy",
        }


class TestGoldIO:
    def test_gold_round_trip(self, tmp_path):
        rng = random.Random(12)
        examples = [
            GoldExample(
                example_id=f"g{i}",
                nlacp=f"sentence {i}",
                policy=random_policy(rng, max_rules=2, nlacp=f"sentence {i}"),
            )
            for i in range(4)
        ]
        path = tmp_path / "gold.jsonl"
        save_gold(path, examples)
        assert load_gold(path) == examples

    def test_jsonl_round_trip_skips_blank_lines(self, tmp_path):
        path = tmp_path / "rows.jsonl"
        write_jsonl(path, [{"a": 1}, {"b": "two"}])
        text = path.read_text(encoding="utf-8")
        path.write_text(text + "\n\n", encoding="utf-8")
        assert read_jsonl(path) == [{"a": 1}, {"b": "two"}]

    def test_full_schema_rows_load_with_label_and_fold(self, tmp_path):
        rows = [
            {
                "id": "a1",
                "text": "Doctors can read charts.",
                "label": True,
                "acrs": [
                    {
                        "decision": "allow",
                        "subject": "doctor",
                        "action": "read",
                        "resource": "charts",
                        "purpose": "none",
                        "condition": "none",
                    }
                ],
                "fold": "hospital",
            },
            {
                "id": "a2",
                "text": "The ward opened in May.",
                "label": False,
                "acrs": [],
                "fold": "hospital",
            },
        ]
        path = tmp_path / "gold.jsonl"
        write_jsonl(path, rows)
        first, second = load_gold(path)
        assert first.label and first.fold == "hospital"
        assert first.policy.rules[0].subject == "doctor"
        assert not second.label
        assert second.policy is None
        assert second.nlacp == "The ward opened in May."

    def test_compact_alias_rows_still_load(self, tmp_path):
        path = tmp_path / "gold.jsonl"
        write_jsonl(
            path,
            [
                {
                    "id": "g0",
                    "nlacp": "Nurses can view charts.",
                    "rules": [
                        {
                            "decision": "allow",
                            "subject": "nurse",
                            "action": "view",
                            "resource": "charts",
                            "purpose": "none",
                            "condition": "none",
                        }
                    ],
                }
            ],
        )
        example = load_gold(path)[0]
        assert example.nlacp == "Nurses can view charts."
        assert example.label is True
        assert example.policy.rules[0].action == "view"


class TestSplits:
    def test_split_sizes_and_partition(self):
        records = list(range(100))
        train, valid, test = split_records(records, seed=13)
        assert (len(train), len(valid), len(test)) == (80, 10, 10)
        assert sorted(train + valid + test) == records

    def test_split_is_seeded(self):
        records = list(range(50))
        assert split_records(records, seed=14) == split_records(records, seed=14)
        assert split_records(records, seed=14) != split_records(records, seed=15)

    def test_degenerate_ratio_puts_everything_in_train(self):
        train, valid, test = split_records(list(range(9)), seed=16, ratios=(1.0, 0.0, 0.0))
        assert len(train) == 9 and not valid and not test

    def test_ratio_validation(self):
        with pytest.raises(RatioError):
            split_records([1], seed=0, ratios=(0.5, 0.4, 0.2))
        with pytest.raises(RatioError):
            split_records([1], seed=0, ratios=(-0.1, 0.6, 0.5))
        with pytest.raises(RatioError):
            split_records([1], seed=0, ratios=(0.5, 0.5))
