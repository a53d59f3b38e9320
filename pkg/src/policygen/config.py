"""Run configuration.

A RunConfig names the five model roles (classifier, embedder, generator,
verifier, coreference resolver), the pipeline knobs, and the ablation
switches.  Configs load from JSON so runs are reproducible from a single
file plus a seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .classify import CueScoreClient, DEFAULT_THRESHOLD
from .clients import (
    FixtureChatClient,
    FixtureScoreClient,
    FixtureVerdictClient,
    RemoteChatClient,
    RemoteEmbeddingClient,
    RemoteScoreClient,
    RemoteVerdictClient,
)
from .dataset import load_gold
from .preprocess import ChatResolver, IdentityResolver
from .refine import DEFAULT_MAX_ROUNDS
from .retrieval import DEFAULT_DIM, DEFAULT_TOP_K, HashedBowEmbedder
from .verify import ClientVerifier, OracleVerifier


@dataclass(frozen=True)
class ClientSpec:
    """Where one model role comes from.

    kind "remote" talks to target as a base URL, "fixture" replays the
    JSONL file at target, "builtin" uses the in-process fallback, and
    "oracle" (verifier only) judges against the gold corpus.
    """

    kind: str
    target: str = ""
    model: str = "default"

    @classmethod
    def from_dict(cls, obj: dict) -> "ClientSpec":
        return cls(
            kind=obj["kind"],
            target=obj.get("target", ""),
            model=obj.get("model", "default"),
        )


@dataclass(frozen=True)
class RunConfig:
    classifier: ClientSpec = field(default_factory=lambda: ClientSpec(kind="builtin"))
    embedder: ClientSpec = field(default_factory=lambda: ClientSpec(kind="builtin"))
    generator: ClientSpec = field(default_factory=lambda: ClientSpec(kind="remote"))
    verifier: ClientSpec = field(default_factory=lambda: ClientSpec(kind="oracle"))
    resolver: ClientSpec = field(default_factory=lambda: ClientSpec(kind="identity"))
    threshold: float = DEFAULT_THRESHOLD
    top_k: int = DEFAULT_TOP_K
    max_refinement_rounds: int = DEFAULT_MAX_ROUNDS
    embedding_dim: int = DEFAULT_DIM
    entity_store_path: str = ""
    gold_path: str = ""
    seed: int = 0
    retrieval_enabled: bool = True
    postprocess_enabled: bool = True
    refinement_enabled: bool = True

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.top_k <= 0:
            raise ValueError(f"top_k must be positive, got {self.top_k}")
        if self.max_refinement_rounds < 0:
            raise ValueError("max_refinement_rounds must be >= 0")
        if self.embedding_dim <= 0:
            raise ValueError("embedding_dim must be positive")

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        kwargs = dict(obj)
        for role in ("classifier", "embedder", "generator", "verifier", "resolver"):
            if role in kwargs and isinstance(kwargs[role], dict):
                kwargs[role] = ClientSpec.from_dict(kwargs[role])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ClientBundle:
    """Instantiated clients for one run."""

    score_client: object
    embedder: object
    chat_client: object
    verifier: object
    resolver: object


def _build_score_client(spec: ClientSpec):
    if spec.kind == "builtin":
        return CueScoreClient()
    if spec.kind == "remote":
        return RemoteScoreClient(spec.target)
    if spec.kind == "fixture":
        return FixtureScoreClient.from_path(spec.target)
    raise ValueError(f"unknown classifier kind {spec.kind!r}")


def _build_embedder(spec: ClientSpec, dim: int):
    if spec.kind == "builtin":
        return HashedBowEmbedder(dim)
    if spec.kind == "remote":
        return RemoteEmbeddingClient(spec.target)
    raise ValueError(f"unknown embedder kind {spec.kind!r}")


def _build_chat_client(spec: ClientSpec):
    if spec.kind == "remote":
        return RemoteChatClient(spec.target, model=spec.model)
    if spec.kind == "fixture":
        return FixtureChatClient.from_path(spec.target)
    raise ValueError(f"unknown generator kind {spec.kind!r}")


def _build_verifier(spec: ClientSpec, gold_path: str):
    if spec.kind == "oracle":
        if not gold_path:
            raise ValueError("oracle verifier needs gold_path")
        mapping = {
            ex.nlacp: ex.policy
            for ex in load_gold(gold_path)
            if ex.label and ex.policy is not None
        }
        return OracleVerifier(mapping)
    if spec.kind == "remote":
        return ClientVerifier(RemoteVerdictClient(spec.target))
    if spec.kind == "fixture":
        return ClientVerifier(FixtureVerdictClient.from_path(spec.target))
    raise ValueError(f"unknown verifier kind {spec.kind!r}")


def _build_resolver(spec: ClientSpec):
    if spec.kind == "identity":
        return IdentityResolver()
    if spec.kind == "remote":
        return ChatResolver(RemoteChatClient(spec.target, model=spec.model))
    if spec.kind == "fixture":
        return ChatResolver(FixtureChatClient.from_path(spec.target))
    raise ValueError(f"unknown resolver kind {spec.kind!r}")


def build_clients(config: RunConfig) -> ClientBundle:
    return ClientBundle(
        score_client=_build_score_client(config.classifier),
        embedder=_build_embedder(config.embedder, config.embedding_dim),
        chat_client=_build_chat_client(config.generator),
        verifier=_build_verifier(config.verifier, config.gold_path),
        resolver=_build_resolver(config.resolver),
    )
