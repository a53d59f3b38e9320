"""Dense entity retrieval.

Five typed vector stores (subjects, actions, resources, purposes,
conditions) hold the entity vocabulary of previously written policies.
At generation time the NLACP sentence is embedded and the top-k nearest
entities per store are handed to the generator as an aid; after generation
each extracted component is aligned to its nearest stored entity.

All vector arithmetic is plain Python with left-to-right accumulation so
that results are bit-reproducible across platforms.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .clients import EmbeddingClient
from .errors import DimensionMismatch, EmptyInputError, ZeroNorm
from .policy import AccessControlPolicy, AccessControlRule, COMPONENT_KEYS, normalize_entity

STORE_NAMES = ("subjects", "actions", "resources", "purposes", "conditions")

COMPONENT_TO_STORE = {
    "subject": "subjects",
    "action": "actions",
    "resource": "resources",
    "purpose": "purposes",
    "condition": "conditions",
}

DEFAULT_TOP_K = 5
DEFAULT_DIM = 256

_WS = re.compile(r"\s+")


def dot(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise DimensionMismatch(f"vector lengths differ: {len(a)} vs {len(b)}")
    total = 0.0
    for x, y in zip(a, b):
        total += x * y
    return total


def norm(a: Sequence[float]) -> float:
    return math.sqrt(dot(a, a))


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    norm_a = norm(a)
    norm_b = norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroNorm("cosine similarity is undefined for a zero vector")
    return dot(a, b) / (norm_a * norm_b)


class HashedBowEmbedder:
    """Deterministic bag-of-words embedder with hashed buckets.

    Tokens are case-folded whitespace words; each token increments the
    bucket indexed by its sha256 digest, and the count vector is then
    L2-normalized.  No model weights, no network, same output everywhere.
    """

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim

    def _bucket(self, token: str) -> int:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dim

    def embed_one(self, text: str) -> list[float]:
        counts = [0.0] * self.dim
        for token in _WS.sub(" ", text).strip().casefold().split(" "):
            if token:
                counts[self._bucket(token)] += 1.0
        total = norm(counts)
        if total == 0.0:
            return counts
        return [value / total for value in counts]

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        if not texts:
            raise EmptyInputError("cannot embed an empty batch")
        return [self.embed_one(text) for text in texts]


@dataclass(frozen=True)
class StoredEntity:
    text: str
    vector: tuple[float, ...]


class VectorStore:
    """Exact nearest-neighbour store for one component type.

    Queries do a full scan and sort by (similarity descending, entity text
    ascending), so results are total-ordered and reproducible.
    """

    def __init__(self, name: str, dim: int):
        self.name = name
        self.dim = dim
        self._entities: dict[str, StoredEntity] = {}

    def __len__(self) -> int:
        return len(self._entities)

    def __contains__(self, text: str) -> bool:
        key = normalize_entity(text)
        return key is not None and key in self._entities

    @property
    def entities(self) -> list[StoredEntity]:
        return list(self._entities.values())

    def add(self, text: str, vector: Sequence[float]) -> bool:
        """Store one entity; returns False when it was already present."""
        if len(vector) != self.dim:
            raise DimensionMismatch(
                f"store {self.name!r} holds {self.dim}-d vectors, got {len(vector)}"
            )
        key = normalize_entity(text)
        if key is None:
            raise EmptyInputError("cannot store an empty entity")
        if key in self._entities:
            return False
        self._entities[key] = StoredEntity(text=key, vector=tuple(float(x) for x in vector))
        return True

    def query(self, vector: Sequence[float], k: int) -> list[tuple[str, float]]:
        """Top-k entities by cosine similarity; empty store yields []."""
        if k <= 0:
            return []
        scored = [
            (entity.text, cosine_similarity(vector, entity.vector))
            for entity in self._entities.values()
        ]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored[:k]


class EntityCatalog:
    """The five typed stores plus the embedder that feeds them."""

    def __init__(self, embedder: EmbeddingClient, dim: int = DEFAULT_DIM):
        self.embedder = embedder
        self.dim = dim
        self.stores = {name: VectorStore(name, dim) for name in STORE_NAMES}

    def __len__(self) -> int:
        return sum(len(store) for store in self.stores.values())

    def store_for(self, component: str) -> VectorStore:
        if component not in COMPONENT_TO_STORE:
            raise KeyError(f"unknown component {component!r}")
        return self.stores[COMPONENT_TO_STORE[component]]

    def ingest(self, store_name: str, texts: Iterable[str]) -> int:
        """Embed and store entities; returns how many were new."""
        if store_name not in self.stores:
            raise KeyError(f"unknown store {store_name!r}")
        cleaned: list[str] = []
        seen: set[str] = set()
        for text in texts:
            key = normalize_entity(text)
            if key is not None and key not in seen:
                seen.add(key)
                cleaned.append(key)
        if not cleaned:
            return 0
        vectors = self.embedder.embed(cleaned)
        store = self.stores[store_name]
        added = 0
        for text, vector in zip(cleaned, vectors):
            if store.add(text, vector):
                added += 1
        return added

    def retrieve_bundle(self, sentence: str, k: int = DEFAULT_TOP_K) -> dict[str, list[str]]:
        """Top-k entity texts per store for one NLACP sentence.

        Stores with no entities are omitted, so a fresh catalog yields {}.
        """
        vector = self.embedder.embed([sentence])[0]
        bundle: dict[str, list[str]] = {}
        for name in STORE_NAMES:
            store = self.stores[name]
            if len(store) == 0:
                continue
            try:
                hits = store.query(vector, k)
            except ZeroNorm:
                continue
            if hits:
                bundle[name] = [text for text, _ in hits]
        return bundle

    def nearest(self, component: str, query: str) -> str | None:
        """Nearest stored entity for one component value, if any."""
        store = self.store_for(component)
        if len(store) == 0:
            return None
        vector = self.embedder.embed([query])[0]
        try:
            hits = store.query(vector, 1)
        except ZeroNorm:
            return None
        return hits[0][0] if hits else None

    def save(self, path: str | Path) -> None:
        payload = {
            "dim": self.dim,
            "stores": {
                name: [
                    {"text": entity.text, "vector": list(entity.vector)}
                    for entity in sorted(store.entities, key=lambda e: e.text)
                ]
                for name, store in self.stores.items()
            },
        }
        Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, embedder: EmbeddingClient) -> "EntityCatalog":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        catalog = cls(embedder, dim=int(payload["dim"]))
        for name, rows in payload.get("stores", {}).items():
            store = catalog.stores[name]
            for row in rows:
                store.add(row["text"], row["vector"])
        return catalog


def align_rule(rule: AccessControlRule, catalog: EntityCatalog) -> AccessControlRule:
    """Replace every non-empty component with its nearest stored entity."""
    aligned = rule
    for component in COMPONENT_KEYS:
        value = rule.get(component)
        if value is None:
            continue
        nearest = catalog.nearest(component, value)
        if nearest is not None:
            aligned = aligned.with_component(component, nearest)
    return aligned


def align_policy(policy: AccessControlPolicy, catalog: EntityCatalog) -> AccessControlPolicy:
    """Post-process a generated policy against the entity catalog."""
    return AccessControlPolicy(
        rules=tuple(align_rule(rule, catalog) for rule in policy.rules),
        nlacp=policy.nlacp,
        provenance=policy.provenance,
    )
