"""End-to-end document runs.

One run takes a document, preprocesses it, classifies sentences, and pushes
every NLACP through retrieval, generation, post-processing, verification,
and refinement.  The result is a plain-dict run record whose JSON form is
byte-stable for a fixed (document, config, seed) triple: run ids hash the
document id and seed, and no timestamps or environment details are recorded.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .classify import NlacpClassifier
from .config import ClientBundle, RunConfig, build_clients
from .generation import PolicyGenerator
from .policy import Provenance
from .preprocess import preprocess_document
from .refine import RefinementLoop, RefinementOutcome, RefinementStatus
from .retrieval import EntityCatalog, align_policy
from .verify import VerdictClass


def make_run_id(doc_id: str, seed: int) -> str:
    digest = hashlib.sha256(f"{doc_id}\x00{seed}".encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass
class SentenceOutcome:
    sentence_index: int
    paragraph_index: int
    text: str
    score: float
    is_nlacp: bool
    status: str | None = None
    rules: list[dict] | None = None
    verdict: str | None = None
    feedback: str | None = None
    rounds_used: int = 0
    retrieved: dict[str, list[str]] | None = None

    def to_dict(self) -> dict:
        return {
            "sentence_index": self.sentence_index,
            "paragraph_index": self.paragraph_index,
            "text": self.text,
            "score": self.score,
            "is_nlacp": self.is_nlacp,
            "status": self.status,
            "rules": self.rules,
            "verdict": self.verdict,
            "feedback": self.feedback,
            "rounds_used": self.rounds_used,
            "retrieved": self.retrieved,
        }


@dataclass
class RunRecord:
    run_id: str
    doc_id: str
    seed: int
    stages: dict[str, bool]
    sentences: list[SentenceOutcome] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        tally = {"applied": 0, "needs_review": 0, "unverified": 0, "other": 0}
        for outcome in self.sentences:
            if not outcome.is_nlacp:
                tally["other"] += 1
            else:
                tally[outcome.status] += 1
        return tally

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "doc_id": self.doc_id,
            "seed": self.seed,
            "stages": self.stages,
            "counts": self.counts,
            "sentences": [outcome.to_dict() for outcome in self.sentences],
        }


def run_to_json(record: RunRecord) -> str:
    """Canonical JSON for golden comparisons: sorted keys, trailing newline."""
    return json.dumps(record.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def load_catalog(config: RunConfig, embedder) -> EntityCatalog:
    path = config.entity_store_path
    if path and Path(path).exists():
        return EntityCatalog.load(path, embedder)
    return EntityCatalog(embedder, dim=config.embedding_dim)


class Pipeline:
    """Wires the stages together for repeated document runs."""

    def __init__(self, config: RunConfig, clients: ClientBundle | None = None):
        self.config = config
        self.clients = clients or build_clients(config)
        self.catalog = load_catalog(config, self.clients.embedder)
        self.classifier = NlacpClassifier(self.clients.score_client, config.threshold)
        self.generator = PolicyGenerator(self.clients.chat_client)
        postprocess = None
        if config.postprocess_enabled and len(self.catalog) > 0:
            postprocess = lambda policy: align_policy(policy, self.catalog)
        rounds = config.max_refinement_rounds if config.refinement_enabled else 0
        self.loop = RefinementLoop(
            generator=self.generator,
            verifier=self.clients.verifier,
            chat_client=self.clients.chat_client,
            max_rounds=rounds,
            postprocess=postprocess,
        )

    def run_document(self, doc_id: str, text: str) -> RunRecord:
        record = RunRecord(
            run_id=make_run_id(doc_id, self.config.seed),
            doc_id=doc_id,
            seed=self.config.seed,
            stages={
                "retrieval": self.config.retrieval_enabled,
                "postprocess": self.config.postprocess_enabled,
                "refinement": self.config.refinement_enabled,
            },
        )
        sentences = preprocess_document(doc_id, text, self.clients.resolver)
        for sentence in sentences:
            classified = self.classifier.classify(sentence)
            outcome = SentenceOutcome(
                sentence_index=sentence.sentence_index,
                paragraph_index=sentence.paragraph_index,
                text=sentence.text,
                score=classified.score,
                is_nlacp=classified.is_nlacp,
            )
            if classified.is_nlacp:
                bundle: dict[str, list[str]] = {}
                if self.config.retrieval_enabled and len(self.catalog) > 0:
                    bundle = self.catalog.retrieve_bundle(sentence.text, self.config.top_k)
                provenance = Provenance(doc_id=doc_id, sentence_index=sentence.sentence_index)
                result = self.loop.run(sentence.text, bundle, provenance)
                outcome.status = result.status.value
                outcome.rounds_used = result.rounds_used
                outcome.retrieved = bundle or None
                if result.policy is not None:
                    outcome.rules = [rule.to_mapping() for rule in result.policy.rules]
                if result.verdict is not None:
                    outcome.verdict = result.verdict.name
                outcome.feedback = result.feedback
            record.sentences.append(outcome)
        return record


def review_candidates(record: RunRecord) -> list[SentenceOutcome]:
    """Sentences a human needs to look at after a run."""
    return [
        outcome
        for outcome in record.sentences
        if outcome.is_nlacp and outcome.status == RefinementStatus.NEEDS_REVIEW.value
    ]


def applied_policies(record: RunRecord) -> list[dict]:
    """The rules the run applied, one entry per applied sentence."""
    return [
        {
            "sentence_index": outcome.sentence_index,
            "text": outcome.text,
            "rules": outcome.rules,
        }
        for outcome in record.sentences
        if outcome.is_nlacp and outcome.status == RefinementStatus.APPLIED.value
    ]
