"""Evaluation metrics.

Generation quality is scored at two granularities.  Component scoring
aligns rules on their action and counts slot-level true positives; rule
scoring requires exact six-key matches.  Verifier quality is a twelve-class
classification report: per-class one-vs-rest scores, macro and weighted
averages, and exact-match accuracy.

Two settings control which slots component scoring looks at.  SAR scores
subject and resource (for corpora that only annotate those), DSARCP adds
decision, purpose, and condition.  The action itself is the alignment key
and is never scored.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyInputError, LengthMismatch
from .policy import AccessControlPolicy, AccessControlRule, RULE_KEYS
from .verify import NUM_CLASSES, VerdictClass


class EvalSetting(str, enum.Enum):
    SAR = "sar"
    DSARCP = "dsarcp"


SCORED_SLOTS = {
    EvalSetting.SAR: ("subject", "resource"),
    EvalSetting.DSARCP: ("decision", "subject", "resource", "purpose", "condition"),
}


@dataclass(frozen=True)
class PRF:
    true_positives: int
    false_positives: int
    false_negatives: int

    @property
    def precision(self) -> float:
        denom = self.true_positives + self.false_positives
        return self.true_positives / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.true_positives + self.false_negatives
        return self.true_positives / denom if denom else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def _max_matching_total(scores: list[list[int]]) -> int:
    """Maximum total over partial matchings of a non-negative score matrix."""
    rows = len(scores)
    cols = len(scores[0]) if rows else 0
    if rows == 0 or cols == 0:
        return 0
    if cols > rows:
        scores = [[scores[r][c] for r in range(rows)] for c in range(cols)]
        rows, cols = cols, rows
    if cols > 16:
        raise LengthMismatch(f"cannot match groups of {cols} rules")
    size = 1 << cols
    dp = [-1] * size
    dp[0] = 0
    for row in range(rows):
        nxt = dp[:]
        for mask in range(size):
            if dp[mask] < 0:
                continue
            for col in range(cols):
                bit = 1 << col
                if mask & bit:
                    continue
                value = dp[mask] + scores[row][col]
                if value > nxt[mask | bit]:
                    nxt[mask | bit] = value
        dp = nxt
    return max(dp)


def _slot_count(rules: Sequence[AccessControlRule], slots: tuple[str, ...]) -> int:
    total = 0
    for rule in rules:
        for slot in slots:
            if rule.get(slot) is not None:
                total += 1
    return total


def _tp_score(gold: AccessControlRule, pred: AccessControlRule, slots: tuple[str, ...]) -> int:
    tp = 0
    for slot in slots:
        value = gold.get(slot)
        if value is not None and value == pred.get(slot):
            tp += 1
    return tp


def _pair_tp(
    gold: AccessControlPolicy, pred: AccessControlPolicy, slots: tuple[str, ...]
) -> int:
    gold_groups: dict[str | None, list[AccessControlRule]] = {}
    for rule in gold.rules:
        gold_groups.setdefault(rule.action, []).append(rule)
    pred_groups: dict[str | None, list[AccessControlRule]] = {}
    for rule in pred.rules:
        pred_groups.setdefault(rule.action, []).append(rule)
    total = 0
    for action, gold_rules in gold_groups.items():
        pred_rules = pred_groups.get(action)
        if not pred_rules:
            continue
        matrix = [[_tp_score(g, p, slots) for p in pred_rules] for g in gold_rules]
        total += _max_matching_total(matrix)
    return total


PolicyPair = tuple[AccessControlPolicy, AccessControlPolicy | None]


def component_prf(pairs: Sequence[PolicyPair], setting: EvalSetting) -> PRF:
    """Slot-level scores over a dataset of (gold, predicted) policies.

    Rules are aligned only where actions are equal; within one action the
    alignment maximizes the slot-level true positives.  A missing
    prediction counts as a policy with no rules.
    """
    slots = SCORED_SLOTS[setting]
    tp = 0
    gold_total = 0
    pred_total = 0
    for gold, pred in pairs:
        gold_total += _slot_count(gold.rules, slots)
        if pred is None:
            continue
        pred_total += _slot_count(pred.rules, slots)
        tp += _pair_tp(gold, pred, slots)
    return PRF(tp, pred_total - tp, gold_total - tp)


def classification_prf(y_true: Sequence[bool], y_pred: Sequence[bool]) -> PRF:
    """Binary sentence-identification scores with NLACP as the positive class."""
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"label counts differ: {len(y_true)} vs {len(y_pred)}")
    tp = sum(1 for t, p in zip(y_true, y_pred) if t and p)
    fp = sum(1 for t, p in zip(y_true, y_pred) if not t and p)
    fn = sum(1 for t, p in zip(y_true, y_pred) if t and not p)
    return PRF(tp, fp, fn)


def _rule_key(rule: AccessControlRule) -> tuple:
    return tuple(rule.get(key) for key in RULE_KEYS)


def rule_prf(pairs: Sequence[PolicyPair]) -> PRF:
    """Whole-rule scores: a true positive is an exact six-key match.

    Matching is multiset intersection per policy pair.
    """
    tp = 0
    fp = 0
    fn = 0
    for gold, pred in pairs:
        gold_counts: dict[tuple, int] = {}
        for rule in gold.rules:
            key = _rule_key(rule)
            gold_counts[key] = gold_counts.get(key, 0) + 1
        pred_rules = pred.rules if pred is not None else ()
        pair_tp = 0
        for rule in pred_rules:
            key = _rule_key(rule)
            if gold_counts.get(key, 0) > 0:
                gold_counts[key] -= 1
                pair_tp += 1
        tp += pair_tp
        fp += len(pred_rules) - pair_tp
        fn += len(gold.rules) - pair_tp
    return PRF(tp, fp, fn)


# --- verifier report -------------------------------------------------------------


@dataclass(frozen=True)
class ClassReport:
    label: VerdictClass
    support: int
    prf: PRF


@dataclass(frozen=True)
class VerifierReport:
    per_class: tuple[ClassReport, ...]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float


def verifier_metrics(
    y_true: Sequence[VerdictClass | int], y_pred: Sequence[VerdictClass | int]
) -> VerifierReport:
    """Twelve-class report; macro averages include zero-support classes."""
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"label counts differ: {len(y_true)} vs {len(y_pred)}")
    if not y_true:
        raise EmptyInputError("cannot score an empty label set")
    true_ids = [int(label) for label in y_true]
    pred_ids = [int(label) for label in y_pred]
    for value in true_ids + pred_ids:
        if not 0 <= value < NUM_CLASSES:
            raise LengthMismatch(f"label {value} outside the {NUM_CLASSES}-class range")
    reports = []
    for class_id in range(NUM_CLASSES):
        tp = sum(1 for t, p in zip(true_ids, pred_ids) if t == class_id and p == class_id)
        fp = sum(1 for t, p in zip(true_ids, pred_ids) if t != class_id and p == class_id)
        fn = sum(1 for t, p in zip(true_ids, pred_ids) if t == class_id and p != class_id)
        support = sum(1 for t in true_ids if t == class_id)
        reports.append(ClassReport(VerdictClass(class_id), support, PRF(tp, fp, fn)))
    total = len(true_ids)
    correct = sum(1 for t, p in zip(true_ids, pred_ids) if t == p)
    macro_p = sum(r.prf.precision for r in reports) / NUM_CLASSES
    macro_r = sum(r.prf.recall for r in reports) / NUM_CLASSES
    macro_f = sum(r.prf.f1 for r in reports) / NUM_CLASSES
    weighted_p = sum(r.prf.precision * r.support for r in reports) / total
    weighted_r = sum(r.prf.recall * r.support for r in reports) / total
    weighted_f = sum(r.prf.f1 * r.support for r in reports) / total
    return VerifierReport(
        per_class=tuple(reports),
        accuracy=correct / total,
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f,
        weighted_precision=weighted_p,
        weighted_recall=weighted_r,
        weighted_f1=weighted_f,
    )


def format_prf(name: str, prf: PRF) -> str:
    return (
        f"{name}: precision={prf.precision:.4f} recall={prf.recall:.4f} "
        f"f1={prf.f1:.4f} (tp={prf.true_positives} fp={prf.false_positives} "
        f"fn={prf.false_negatives})"
    )


def prf_to_dict(prf: PRF) -> dict:
    return {
        "tp": prf.true_positives,
        "fp": prf.false_positives,
        "fn": prf.false_negatives,
        "precision": prf.precision,
        "recall": prf.recall,
        "f1": prf.f1,
    }


def verifier_report_to_dict(report: VerifierReport) -> dict:
    return {
        "per_class": [
            {"label": row.label.name, "support": row.support, **prf_to_dict(row.prf)}
            for row in report.per_class
        ],
        "accuracy": report.accuracy,
        "macro": {
            "precision": report.macro_precision,
            "recall": report.macro_recall,
            "f1": report.macro_f1,
        },
        "weighted": {
            "precision": report.weighted_precision,
            "recall": report.weighted_recall,
            "f1": report.weighted_f1,
        },
    }


def format_verifier_report(report: VerifierReport) -> str:
    lines = [f"{'class':<20} {'support':>7} {'precision':>9} {'recall':>7} {'f1':>7}"]
    for row in report.per_class:
        lines.append(
            f"{row.label.name:<20} {row.support:>7} "
            f"{row.prf.precision:>9.4f} {row.prf.recall:>7.4f} {row.prf.f1:>7.4f}"
        )
    lines.append(
        f"{'macro':<20} {'':>7} {report.macro_precision:>9.4f} "
        f"{report.macro_recall:>7.4f} {report.macro_f1:>7.4f}"
    )
    lines.append(
        f"{'weighted':<20} {'':>7} {report.weighted_precision:>9.4f} "
        f"{report.weighted_recall:>7.4f} {report.weighted_f1:>7.4f}"
    )
    lines.append(f"accuracy: {report.accuracy:.4f}")
    return "\n".join(lines)
