"""Human review queue.

Policies that never reached a "correct" verdict wait here for a person.
Items live in one JSON file that is rewritten atomically; every item
carries a revision counter, and writers must present the revision they
read, so concurrent edits fail loudly instead of clobbering each other.

An item can be accepted only after a re-verification of its current rules
came back correct, or with an explicit audited override that records who
decided and why.
"""

from __future__ import annotations

import enum
import json
import os
import tempfile
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import (
    EmptyPolicyError,
    IllegalTransition,
    NotFound,
    RevisionConflict,
)
from .policy import (
    AccessControlPolicy,
    AccessControlRule,
    ReconstructionTemplate,
    DEFAULT_TEMPLATE,
)
from .verify import DISPLAY_NAMES, VerdictClass, Verifier, verify_policy


class ReviewStatus(str, enum.Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


@dataclass
class ReviewItem:
    item_id: str
    run_id: str
    doc_id: str
    sentence_index: int
    nlacp: str
    rules: list[dict]
    feedback: str | None = None
    verdict: str | None = None
    status: str = ReviewStatus.PENDING.value
    revision: int = 0
    decided_by: str | None = None
    note: str | None = None
    overridden: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "ReviewItem":
        return cls(**obj)

    def policy(self) -> AccessControlPolicy:
        if not self.rules:
            raise EmptyPolicyError("review item has no rules to verify")
        return AccessControlPolicy(
            rules=tuple(AccessControlRule.from_mapping(obj) for obj in self.rules),
            nlacp=self.nlacp,
        )


class ReviewStore:
    """File-backed collection of review items."""

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._items: dict[str, ReviewItem] = {}
        if self._path.exists():
            payload = json.loads(self._path.read_text(encoding="utf-8"))
            for obj in payload.get("items", []):
                item = ReviewItem.from_dict(obj)
                self._items[item.item_id] = item

    def _flush(self) -> None:
        payload = {
            "items": [self._items[key].to_dict() for key in sorted(self._items)]
        }
        self._path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(
            dir=self._path.parent, prefix=self._path.name, suffix=".tmp"
        )
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                json.dump(payload, handle, indent=2, ensure_ascii=False)
                handle.write("\n")
            os.replace(tmp_path, self._path)
        except BaseException:
            if os.path.exists(tmp_path):
                os.unlink(tmp_path)
            raise

    def _require(self, item_id: str) -> ReviewItem:
        if item_id not in self._items:
            raise NotFound(f"no review item {item_id!r}")
        return self._items[item_id]

    @staticmethod
    def _check_revision(item: ReviewItem, revision: int) -> None:
        if revision != item.revision:
            raise RevisionConflict(
                f"item {item.item_id} is at revision {item.revision}, caller sent {revision}"
            )

    def get(self, item_id: str) -> ReviewItem:
        return self._require(item_id)

    def list_items(self, status: str | None = None) -> list[ReviewItem]:
        items = [self._items[key] for key in sorted(self._items)]
        if status is not None:
            items = [item for item in items if item.status == status]
        return items

    def upsert(self, item: ReviewItem) -> ReviewItem:
        """Insert a queue item, or refresh a still-pending one in place.

        Decided items are left alone so re-running a document cannot undo a
        human decision.
        """
        existing = self._items.get(item.item_id)
        if existing is not None:
            if existing.status != ReviewStatus.PENDING.value:
                return existing
            item.revision = existing.revision + 1
        self._items[item.item_id] = item
        self._flush()
        return item

    def reverify(
        self,
        item_id: str,
        revision: int,
        verifier: Verifier,
        rules: list[dict] | None = None,
        template: ReconstructionTemplate = DEFAULT_TEMPLATE,
    ) -> ReviewItem:
        """Optionally replace the rules, then run the verifier again."""
        item = self._require(item_id)
        self._check_revision(item, revision)
        if item.status != ReviewStatus.PENDING.value:
            raise IllegalTransition(f"cannot edit a {item.status} item")
        if rules is not None:
            parsed = [AccessControlRule.from_mapping(obj) for obj in rules]
            if not parsed:
                raise EmptyPolicyError("edited rules must contain at least one rule")
            item.rules = [rule.to_mapping() for rule in parsed]
        result = verify_policy(verifier, item.policy(), template)
        item.verdict = result.verdict.name
        item.feedback = DISPLAY_NAMES[result.verdict]
        item.revision += 1
        self._flush()
        return item

    def decide(
        self,
        item_id: str,
        revision: int,
        decision: str,
        decided_by: str = "",
        override: bool = False,
        note: str = "",
    ) -> ReviewItem:
        """Accept or reject a pending item.

        Accepting requires the latest verdict to be correct, unless the
        caller overrides with a note; overrides are recorded on the item.
        """
        item = self._require(item_id)
        self._check_revision(item, revision)
        if item.status != ReviewStatus.PENDING.value:
            raise IllegalTransition(f"item is already {item.status}")
        if decision not in (ReviewStatus.ACCEPTED.value, ReviewStatus.REJECTED.value):
            raise IllegalTransition(f"unknown decision {decision!r}")
        if decision == ReviewStatus.ACCEPTED.value:
            if item.verdict != VerdictClass.CORRECT.name:
                if not override:
                    raise IllegalTransition(
                        "cannot accept without a correct re-verification; "
                        "use an audited override"
                    )
                if not note.strip():
                    raise IllegalTransition("an override must carry a note")
                item.overridden = True
        item.status = decision
        item.decided_by = decided_by or None
        item.note = note or None
        item.revision += 1
        self._flush()
        return item


def queue_from_run(record, store: ReviewStore) -> list[ReviewItem]:
    """Push a run's needs-review sentences into the store."""
    from .pipeline import review_candidates

    queued = []
    for outcome in review_candidates(record):
        item = ReviewItem(
            item_id=f"{record.run_id}-{outcome.sentence_index}",
            run_id=record.run_id,
            doc_id=record.doc_id,
            sentence_index=outcome.sentence_index,
            nlacp=outcome.text,
            rules=list(outcome.rules or []),
            feedback=outcome.feedback,
            verdict=outcome.verdict,
        )
        queued.append(store.upsert(item))
    return queued
