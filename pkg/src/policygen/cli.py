"""Command-line interface.

One subcommand per pipeline capability: build entity stores, classify
sentences, generate and verify single policies, run whole documents,
evaluate predictions, build verifier training data, render refinement
prompts, split corpora, and serve the HTTP API.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .classify import NlacpClassifier
from .config import RunConfig, build_clients
from .dataset import (
    build_verification_examples,
    load_gold,
    read_jsonl,
    split_records,
    write_jsonl,
)
from .generation import PolicyGenerator
from .metrics import (
    EvalSetting,
    classification_prf,
    component_prf,
    format_prf,
    format_verifier_report,
    prf_to_dict,
    rule_prf,
    verifier_metrics,
    verifier_report_to_dict,
)
from .pipeline import Pipeline, run_to_json
from .policy import AccessControlPolicy, AccessControlRule, parse_policy, serialize_policy
from .preprocess import preprocess_document
from .refine import build_refinement_messages
from .retrieval import EntityCatalog, HashedBowEmbedder, DEFAULT_DIM
from .review import ReviewStore, queue_from_run
from .verify import verify_policy


def _load_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "no_retrieval", False):
        overrides["retrieval_enabled"] = False
    if getattr(args, "no_postprocess", False):
        overrides["postprocess_enabled"] = False
    if getattr(args, "no_refine", False):
        overrides["refinement_enabled"] = False
    return dataclasses.replace(config, **overrides) if overrides else config


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _read_document(args) -> str:
    if args.text is not None:
        return args.text
    return Path(getattr(args, "infile")).read_text(encoding="utf-8")


def cmd_ingest_entities(args) -> int:
    payload = json.loads(Path(args.entities).read_text(encoding="utf-8"))
    catalog = EntityCatalog(HashedBowEmbedder(args.dim), dim=args.dim)
    added = {}
    for store_name, texts in payload.items():
        added[store_name] = catalog.ingest(store_name, texts)
    catalog.save(args.store)
    _emit(args, json.dumps({"store": args.store, "added": added}, indent=2))
    return 0


def cmd_classify(args) -> int:
    config = _load_config(args)
    clients = build_clients(config)
    classifier = NlacpClassifier(clients.score_client, config.threshold)
    records = preprocess_document(args.doc_id, _read_document(args), clients.resolver)
    lines = []
    for classified in classifier.classify_all(records):
        lines.append(
            json.dumps(
                {
                    "sentence_index": classified.record.sentence_index,
                    "text": classified.record.text,
                    "score": classified.score,
                    "is_nlacp": classified.is_nlacp,
                },
                ensure_ascii=False,
            )
        )
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_generate(args) -> int:
    config = _load_config(args)
    pipeline = Pipeline(config)
    bundle = {}
    if config.retrieval_enabled and len(pipeline.catalog) > 0:
        bundle = pipeline.catalog.retrieve_bundle(args.text, config.top_k)
    result = pipeline.generator.generate(args.text, bundle)
    if not result.ok:
        _emit(args, json.dumps({"error": result.error, "raw": result.raw_text}, indent=2))
        return 1
    policy = result.policy
    if config.postprocess_enabled and len(pipeline.catalog) > 0:
        from .retrieval import align_policy

        policy = align_policy(policy, pipeline.catalog)
    _emit(
        args,
        json.dumps(
            {"retrieved": bundle, "policy": json.loads(serialize_policy(policy))},
            indent=2,
            ensure_ascii=False,
        ),
    )
    return 0


def cmd_verify(args) -> int:
    config = _load_config(args)
    clients = build_clients(config)
    policy_text = Path(args.policy).read_text(encoding="utf-8")
    policy = parse_policy(policy_text, nlacp=args.text)
    result = verify_policy(clients.verifier, policy)
    _emit(
        args,
        json.dumps(
            {
                "verdict": result.verdict.name,
                "reconstructed": result.reconstructed,
                "distribution": list(result.distribution),
            },
            indent=2,
            ensure_ascii=False,
        ),
    )
    return 0


def cmd_run(args) -> int:
    config = _load_config(args)
    pipeline = Pipeline(config)
    record = pipeline.run_document(args.doc_id, _read_document(args))
    if args.review_store:
        store = ReviewStore(args.review_store)
        queue_from_run(record, store)
    _emit(args, run_to_json(record))
    return 0


def _policies_by_id(path: str) -> dict[str, AccessControlPolicy]:
    policies = {}
    for row in read_jsonl(path):
        if not row.get("label", True):
            continue
        raw_rules = row["acrs"] if "acrs" in row else row["rules"]
        text = row["text"] if "text" in row else row.get("nlacp", "")
        rules = tuple(AccessControlRule.from_mapping(obj) for obj in raw_rules)
        policies[str(row["id"])] = AccessControlPolicy(rules=rules, nlacp=text)
    return policies


def cmd_eval(args) -> int:
    as_json = args.format == "json"
    if args.kind == "generation":
        gold = _policies_by_id(args.gold)
        pred = _policies_by_id(args.pred)
        pairs = [(gold[key], pred.get(key)) for key in sorted(gold)]
        setting = EvalSetting(args.setting)
        components = component_prf(pairs, setting)
        rules = rule_prf(pairs)
        if as_json:
            body = {
                "setting": setting.value,
                "components": prf_to_dict(components),
                "rules": prf_to_dict(rules),
            }
            _emit(args, json.dumps(body, indent=2) + "\n")
        else:
            lines = [
                format_prf(f"components[{setting.value}]", components),
                format_prf("rules", rules),
            ]
            _emit(args, "\n".join(lines) + "\n")
        return 0
    if args.kind == "classification":
        rows = read_jsonl(args.pred)
        prf = classification_prf(
            [bool(row["true"]) for row in rows], [bool(row["pred"]) for row in rows]
        )
        if as_json:
            _emit(args, json.dumps({"nlacp": prf_to_dict(prf)}, indent=2) + "\n")
        else:
            _emit(args, format_prf("nlacp", prf) + "\n")
        return 0
    rows = read_jsonl(args.pred)
    report = verifier_metrics(
        [int(row["true"]) for row in rows], [int(row["pred"]) for row in rows]
    )
    if as_json:
        _emit(args, json.dumps(verifier_report_to_dict(report), indent=2) + "\n")
    else:
        _emit(args, format_verifier_report(report) + "\n")
    return 0


def cmd_augment_verification(args) -> int:
    gold = [
        example.policy
        for example in load_gold(args.gold)
        if example.label and example.policy is not None
    ]
    examples = build_verification_examples(gold, seed=args.seed, per_policy=args.per_policy)
    write_jsonl(args.out, [example.to_row() for example in examples])
    sys.stdout.write(f"wrote {len(examples)} examples to {args.out}\n")
    return 0


def cmd_build_refinement(args) -> int:
    policy_text = Path(args.policy).read_text(encoding="utf-8").strip()
    messages = build_refinement_messages(args.text, policy_text, args.error)
    _emit(args, json.dumps(messages, indent=2, ensure_ascii=False))
    return 0


def cmd_split(args) -> int:
    rows = read_jsonl(args.infile)
    train, valid, test = split_records(rows, seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(out_dir / "train.jsonl", train)
    write_jsonl(out_dir / "valid.jsonl", valid)
    write_jsonl(out_dir / "test.jsonl", test)
    sys.stdout.write(
        f"split {len(rows)} rows into {len(train)}/{len(valid)}/{len(test)}\n"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_config(args)
    app = create_app(config, args.review_store, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a run config JSON file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--no-retrieval", action="store_true", help="skip entity retrieval")
    parser.add_argument("--no-postprocess", action="store_true", help="skip entity alignment")
    parser.add_argument("--no-refine", action="store_true", help="skip refinement rounds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="policygen",
        description="Generate structured access control policies from natural language.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-entities", help="build an entity store from entity lists")
    p.add_argument("--entities", required=True, help="JSON file of {store: [entity, ...]}")
    p.add_argument("--store", required=True, help="where to write the entity store")
    p.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p.add_argument("--out", help="write the summary here instead of stdout")
    p.set_defaults(func=cmd_ingest_entities)

    p = sub.add_parser("classify", help="label each sentence of a document")
    _add_common(p)
    p.add_argument("--in", dest="infile", help="document file to read")
    p.add_argument("--text", help="inline document text")
    p.add_argument("--doc-id", default="doc", help="document id for the records")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("generate", help="generate a policy for one sentence")
    _add_common(p)
    p.add_argument("--text", required=True, help="the NLACP sentence")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="verify a policy file against its sentence")
    _add_common(p)
    p.add_argument("--text", required=True, help="the NLACP sentence")
    p.add_argument("--policy", required=True, help="policy JSON file to check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="run a whole document through the pipeline")
    _add_common(p)
    p.add_argument("--in", dest="infile", help="document file to read")
    p.add_argument("--text", help="inline document text")
    p.add_argument("--doc-id", default="doc", help="document id for the run")
    p.add_argument("--review-store", help="also queue review items into this store file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score predictions against gold data")
    p.add_argument(
        "--kind",
        choices=("generation", "classification", "verifier"),
        default="generation",
    )
    p.add_argument("--gold", help="gold policies JSONL (generation only)")
    p.add_argument("--pred", required=True, help="predictions JSONL")
    p.add_argument("--setting", choices=("sar", "dsarcp"), default="dsarcp")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", help="write the tables here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "augment-verification", help="build labelled verifier training pairs"
    )
    p.add_argument("--gold", required=True, help="gold policies JSONL")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-policy", type=int, default=4)
    p.add_argument("--out", required=True, help="output JSONL")
    p.set_defaults(func=cmd_augment_verification)

    p = sub.add_parser("build-refinement", help="render a refinement prompt")
    p.add_argument("--text", required=True, help="the NLACP sentence")
    p.add_argument("--policy", required=True, help="policy JSON file the model produced")
    p.add_argument("--error", required=True, help="error name to fix, e.g. 'missing subject'")
    p.add_argument("--out", help="write the prompt here instead of stdout")
    p.set_defaults(func=cmd_build_refinement)

    p = sub.add_parser("split", help="seeded 80/10/10 split of a JSONL corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("serve", help="serve the HTTP API")
    _add_common(p)
    p.add_argument("--review-store", default="review_store.json")
    p.add_argument("--ui-dir", default=None, help="static review console directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
