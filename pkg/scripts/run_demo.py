#!/usr/bin/env python3
"""Run the bundled demo document through the pipeline, offline.

Uses the frozen fixtures under tests/data: a scripted chat fixture stands in
for the generator, the verifier judges against the bundled gold policies,
and the entity store provides retrieval and alignment vocabulary.  Prints
one line per sentence, then a comparison of the ablation variants, then the
review queue left behind by the full run.
"""

from __future__ import annotations

import argparse
import dataclasses
import tempfile
from pathlib import Path

from policygen.config import ClientSpec, RunConfig
from policygen.pipeline import Pipeline
from policygen.review import ReviewStore, queue_from_run

VARIANTS = {
    "full": {},
    "no-retrieval": {"retrieval_enabled": False},
    "no-postprocess": {"postprocess_enabled": False},
    "no-refine": {"refinement_enabled": False},
}


def demo_config(data_dir: Path) -> RunConfig:
    return RunConfig(
        generator=ClientSpec(kind="fixture", target=str(data_dir / "gen_fixture.jsonl")),
        gold_path=str(data_dir / "gold_sample.jsonl"),
        entity_store_path=str(data_dir / "entity_store.json"),
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--data-dir",
        default=str(Path(__file__).resolve().parent.parent / "tests" / "data"),
        help="directory holding the frozen fixtures",
    )
    args = parser.parse_args()
    data_dir = Path(args.data_dir)
    document = (data_dir / "demo_doc.txt").read_text(encoding="utf-8")
    config = demo_config(data_dir)

    record = Pipeline(config).run_document("demo-doc", document)
    print(f"run {record.run_id} over {len(record.sentences)} sentences\n")
    for outcome in record.sentences:
        if not outcome.is_nlacp:
            print(f"  [{outcome.sentence_index}] skipped (score {outcome.score:.1f}): {outcome.text}")
            continue
        print(
            f"  [{outcome.sentence_index}] {outcome.status} after "
            f"{outcome.rounds_used} refinement round(s): {outcome.text}"
        )
        for rule in outcome.rules or []:
            print(f"        {rule}")
        if outcome.status != "applied":
            print(f"        feedback: {outcome.feedback}")

    print("\nablation variants:")
    for name, overrides in VARIANTS.items():
        variant = dataclasses.replace(config, **overrides)
        counts = Pipeline(variant).run_document("demo-doc", document).counts
        print(
            f"  {name:<15} applied={counts['applied']} "
            f"needs_review={counts['needs_review']} unverified={counts['unverified']}"
        )

    with tempfile.TemporaryDirectory() as scratch:
        store = ReviewStore(Path(scratch) / "review.json")
        queued = queue_from_run(record, store)
        print(f"\nreview queue ({len(queued)} item(s)):")
        for item in store.list_items():
            print(f"  {item.item_id}: {item.feedback} -- {item.nlacp}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
