"""Command-line entry points, run in-process against fixture files."""

from __future__ import annotations

import json

import pytest

from mocks import FixingGenerator, RecordingChatClient, RouteBySentence, StubbornGenerator
from policygen.classify import CueScoreClient
from policygen.clients import hash_messages
from policygen.cli import main
from policygen.config import ClientBundle, RunConfig
from policygen.generation import RETRY_INSTRUCTION, build_generation_messages
from policygen.pipeline import Pipeline
from policygen.policy import AccessControlPolicy, AccessControlRule
from policygen.preprocess import IdentityResolver
from policygen.retrieval import EntityCatalog, HashedBowEmbedder
from policygen.verify import OracleVerifier

S0 = "Doctors can read medical records."
S1 = "Nurses can update audit logs."
DOC = f"{S0} {S1} The hospital was built in 1990."

GOLD0 = [
    {
        "decision": "allow",
        "subject": "doctor",
        "action": "read",
        "resource": "medical records",
        "purpose": "none",
        "condition": "none",
    }
]
GOLD1 = [
    {
        "decision": "allow",
        "subject": "nurse",
        "action": "update",
        "resource": "audit logs",
        "purpose": "none",
        "condition": "none",
    }
]


def to_policy(rules: list[dict], nlacp: str) -> AccessControlPolicy:
    return AccessControlPolicy(
        rules=tuple(AccessControlRule.from_mapping(rule) for rule in rules),
        nlacp=nlacp,
    )


def write_gold(tmp_path) -> str:
    path = tmp_path / "gold.jsonl"
    rows = [
        {"id": "g0", "nlacp": S0, "rules": GOLD0},
        {"id": "g1", "nlacp": S1, "rules": GOLD1},
    ]
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return str(path)


def write_config(tmp_path, **extra) -> str:
    """Config with a recorded chat fixture and the gold-backed verifier."""
    chat_path = tmp_path / "chat.jsonl"
    body = {
        "generator": {"kind": "fixture", "target": str(chat_path)},
        "gold_path": write_gold(tmp_path),
    }
    body.update(extra)
    config = RunConfig.from_dict(body)
    recorder = RecordingChatClient(
        RouteBySentence(
            {
                S0: FixingGenerator([dict(GOLD0[0], subject="nurse")], GOLD0),
                S1: StubbornGenerator([dict(GOLD1[0], subject="doctor")]),
            }
        )
    )
    bundle = ClientBundle(
        score_client=CueScoreClient(),
        embedder=HashedBowEmbedder(config.embedding_dim),
        chat_client=recorder,
        verifier=OracleVerifier({S0: to_policy(GOLD0, S0), S1: to_policy(GOLD1, S1)}),
        resolver=IdentityResolver(),
    )
    Pipeline(config, bundle).run_document("recording", DOC)
    chat_path.write_text(
        "".join(
            json.dumps({"prompt_hash": k, "response": v}) + "\n"
            for k, v in recorder.rows.items()
        ),
        encoding="utf-8",
    )
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(body), encoding="utf-8")
    return str(config_path)


class TestIngestEntities:
    def test_builds_a_loadable_store(self, tmp_path, capsys):
        entities = tmp_path / "entities.json"
        entities.write_text(
            json.dumps({"subjects": ["doctor", "nurse"], "actions": ["read"]}),
            encoding="utf-8",
        )
        store = tmp_path / "store.json"
        code = main(
            [
                "ingest-entities",
                "--entities",
                str(entities),
                "--store",
                str(store),
                "--dim",
                "32",
            ]
        )
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["added"] == {"subjects": 2, "actions": 1}
        catalog = EntityCatalog.load(store, HashedBowEmbedder(32))
        assert len(catalog) == 3


class TestClassify:
    def test_labels_each_sentence(self, tmp_path):
        config = tmp_path / "config.json"
        verdicts = tmp_path / "verdicts.jsonl"
        verdicts.write_text("", encoding="utf-8")
        config.write_text(
            json.dumps({"verifier": {"kind": "fixture", "target": str(verdicts)}}),
            encoding="utf-8",
        )
        out = tmp_path / "labels.jsonl"
        code = main(
            [
                "classify",
                "--config",
                str(config),
                "--text",
                DOC,
                "--out",
                str(out),
            ]
        )
        assert code == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert [row["is_nlacp"] for row in rows] == [True, True, False]
        assert rows[0]["text"] == S0


class TestGenerate:
    def test_policy_for_one_sentence(self, tmp_path):
        chat = tmp_path / "chat.jsonl"
        messages = build_generation_messages(S0, {})
        reply = json.dumps(GOLD0)
        chat.write_text(
            json.dumps({"prompt_hash": hash_messages(messages), "response": reply})
            + "\n",
            encoding="utf-8",
        )
        config = tmp_path / "config.json"
        config.write_text(
            json.dumps(
                {
                    "generator": {"kind": "fixture", "target": str(chat)},
                    "gold_path": write_gold(tmp_path),
                }
            ),
            encoding="utf-8",
        )
        out = tmp_path / "policy.json"
        code = main(["generate", "--config", str(config), "--text", S0, "--out", str(out)])
        assert code == 0
        body = json.loads(out.read_text())
        assert body["retrieved"] == {}
        assert body["policy"] == GOLD0

    def test_unparseable_reply_exits_nonzero(self, tmp_path):
        chat = tmp_path / "chat.jsonl"
        first = build_generation_messages(S0, {})
        retry = first + [
            {"role": "assistant", "content": "no policy"},
            {"role": "user", "content": RETRY_INSTRUCTION},
        ]
        rows = [
            {"prompt_hash": hash_messages(first), "response": "no policy"},
            {"prompt_hash": hash_messages(retry), "response": "still nothing"},
        ]
        chat.write_text(
            "".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8"
        )
        config = tmp_path / "config.json"
        config.write_text(
            json.dumps(
                {
                    "generator": {"kind": "fixture", "target": str(chat)},
                    "gold_path": write_gold(tmp_path),
                }
            ),
            encoding="utf-8",
        )
        out = tmp_path / "error.json"
        code = main(["generate", "--config", str(config), "--text", S0, "--out", str(out)])
        assert code == 1
        body = json.loads(out.read_text())
        assert body["raw"] == "still nothing"
        assert body["error"]


class TestVerify:
    def test_verdict_for_a_policy_file(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(
            json.dumps({"gold_path": write_gold(tmp_path)}), encoding="utf-8"
        )
        policy = tmp_path / "policy.json"
        policy.write_text(json.dumps(GOLD0), encoding="utf-8")
        out = tmp_path / "verdict.json"
        code = main(
            [
                "verify",
                "--config",
                str(config),
                "--text",
                S0,
                "--policy",
                str(policy),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        body = json.loads(out.read_text())
        assert body["verdict"] == "CORRECT"
        assert body["reconstructed"] == "doctor can read medical records"
        assert body["distribution"][11] == 1.0


class TestRun:
    def test_document_run_with_review_store(self, tmp_path):
        config_path = write_config(tmp_path)
        doc = tmp_path / "doc.txt"
        doc.write_text(DOC, encoding="utf-8")
        out = tmp_path / "run.json"
        review = tmp_path / "review.json"
        code = main(
            [
                "run",
                "--config",
                config_path,
                "--in",
                str(doc),
                "--doc-id",
                "doc-1",
                "--review-store",
                str(review),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        record = json.loads(out.read_text())
        assert record["counts"] == {
            "applied": 1,
            "needs_review": 1,
            "unverified": 0,
            "other": 1,
        }
        stored = json.loads(review.read_text())
        assert len(stored["items"]) == 1
        assert stored["items"][0]["nlacp"] == S1

    def test_ablation_flags_override_the_config(self, tmp_path):
        config_path = write_config(tmp_path)
        out = tmp_path / "run.json"
        code = main(
            [
                "run",
                "--config",
                config_path,
                "--text",
                DOC,
                "--no-refine",
                "--no-retrieval",
                "--no-postprocess",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        record = json.loads(out.read_text())
        assert record["stages"] == {
            "retrieval": False,
            "postprocess": False,
            "refinement": False,
        }
        assert record["counts"]["applied"] == 0
        assert record["counts"]["needs_review"] == 2


class TestEval:
    def test_generation_scores(self, tmp_path, capsys):
        gold = tmp_path / "gold.jsonl"
        gold.write_text(
            json.dumps({"id": "p1", "nlacp": S0, "rules": GOLD0}) + "\n",
            encoding="utf-8",
        )
        pred = tmp_path / "pred.jsonl"
        pred.write_text(
            json.dumps(
                {"id": "p1", "nlacp": S0, "rules": [dict(GOLD0[0], resource="none")]}
            )
            + "\n",
            encoding="utf-8",
        )
        code = main(
            [
                "eval",
                "--kind",
                "generation",
                "--gold",
                str(gold),
                "--pred",
                str(pred),
                "--setting",
                "sar",
            ]
        )
        assert code == 0
        output = capsys.readouterr().out
        assert "components[sar]: precision=1.0000 recall=0.5000 f1=0.6667" in output
        assert "rules: precision=0.0000 recall=0.0000 f1=0.0000" in output

    def test_verifier_scores(self, tmp_path, capsys):
        pred = tmp_path / "verdicts.jsonl"
        rows = [{"true": 11, "pred": 11}, {"true": 0, "pred": 11}]
        pred.write_text(
            "".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8"
        )
        code = main(["eval", "--kind", "verifier", "--pred", str(pred)])
        assert code == 0
        output = capsys.readouterr().out
        assert "accuracy: 0.5000" in output
        assert "INCORRECT_DECISION" in output

    def test_classification_scores(self, tmp_path, capsys):
        pred = tmp_path / "labels.jsonl"
        rows = [
            {"true": True, "pred": True},
            {"true": True, "pred": False},
            {"true": False, "pred": False},
        ]
        pred.write_text(
            "".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8"
        )
        code = main(["eval", "--kind", "classification", "--pred", str(pred)])
        assert code == 0
        output = capsys.readouterr().out
        assert "nlacp: precision=1.0000 recall=0.5000 f1=0.6667" in output

    def test_json_format_reports_the_same_numbers(self, tmp_path, capsys):
        gold = tmp_path / "gold.jsonl"
        gold.write_text(
            json.dumps({"id": "p1", "nlacp": S0, "rules": GOLD0}) + "\n",
            encoding="utf-8",
        )
        pred = tmp_path / "pred.jsonl"
        pred.write_text(
            json.dumps(
                {"id": "p1", "nlacp": S0, "rules": [dict(GOLD0[0], resource="none")]}
            )
            + "\n",
            encoding="utf-8",
        )
        code = main(
            [
                "eval",
                "--kind",
                "generation",
                "--gold",
                str(gold),
                "--pred",
                str(pred),
                "--setting",
                "sar",
                "--format",
                "json",
            ]
        )
        assert code == 0
        body = json.loads(capsys.readouterr().out)
        assert body["setting"] == "sar"
        assert body["components"] == {
            "tp": 1,
            "fp": 0,
            "fn": 1,
            "precision": 1.0,
            "recall": 0.5,
            "f1": pytest.approx(2 / 3),
        }
        assert body["rules"]["f1"] == 0.0

        verdicts = tmp_path / "verdicts.jsonl"
        verdicts.write_text(
            json.dumps({"true": 11, "pred": 11}) + "\n", encoding="utf-8"
        )
        code = main(
            ["eval", "--kind", "verifier", "--pred", str(verdicts), "--format", "json"]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["accuracy"] == 1.0
        assert len(report["per_class"]) == 12
        assert report["macro"]["f1"] == pytest.approx(1 / 12)


class TestDataCommands:
    def test_augment_verification(self, tmp_path, capsys):
        gold = tmp_path / "gold.jsonl"
        rows = [
            {"id": "g0", "nlacp": S0, "rules": GOLD0},
            {"id": "g1", "nlacp": S1, "rules": GOLD1},
        ]
        gold.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
        out = tmp_path / "pairs.jsonl"
        code = main(
            [
                "augment-verification",
                "--gold",
                str(gold),
                "--seed",
                "3",
                "--per-policy",
                "4",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert "wrote 10 examples" in capsys.readouterr().out
        written = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(written) == 10
        assert {"nlacp", "reconstructed", "label", "label_name", "manipulation", "policy"} <= set(
            written[0]
        )

    def test_build_refinement_prompt(self, tmp_path, capsys):
        policy = tmp_path / "policy.json"
        policy.write_text(json.dumps(GOLD0), encoding="utf-8")
        code = main(
            [
                "build-refinement",
                "--text",
                S0,
                "--policy",
                str(policy),
                "--error",
                "missing subject",
            ]
        )
        assert code == 0
        messages = json.loads(capsys.readouterr().out)
        assert messages[0]["role"] == "user"
        assert "1. missing subject" in messages[0]["content"]
        assert json.dumps(GOLD0) in messages[0]["content"]

    def test_split(self, tmp_path, capsys):
        rows = tmp_path / "rows.jsonl"
        rows.write_text(
            "".join(json.dumps({"i": i}) + "\n" for i in range(10)), encoding="utf-8"
        )
        out_dir = tmp_path / "splits"
        code = main(
            ["split", "--in", str(rows), "--seed", "1", "--out-dir", str(out_dir)]
        )
        assert code == 0
        assert "split 10 rows into 8/1/1" in capsys.readouterr().out
        train = (out_dir / "train.jsonl").read_text().splitlines()
        valid = (out_dir / "valid.jsonl").read_text().splitlines()
        test = (out_dir / "test.jsonl").read_text().splitlines()
        assert (len(train), len(valid), len(test)) == (8, 1, 1)
        recovered = sorted(json.loads(line)["i"] for line in train + valid + test)
        assert recovered == list(range(10))
