"""Model-serving clients.

Four model roles sit behind narrow protocols so the pipeline never cares
where an answer comes from:

* score clients    POST {"text"}                 -> {"score": float}
* embedding clients POST {"input": [...]}        -> {"embeddings": [[...]]}
* chat clients     POST chat-completions payload -> choice message content
* verdict clients  POST {"premise","hypothesis"} -> {"distribution": [12]}

Each role also has a fixture implementation that replays recorded responses
from a JSONL file, which keeps tests and demos fully offline.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Protocol, Sequence

import httpx

from .errors import ClientError


class ScoreClient(Protocol):
    def score(self, text: str) -> float: ...


class EmbeddingClient(Protocol):
    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


class ChatClient(Protocol):
    def complete(self, messages: list[dict]) -> str: ...


class VerdictClient(Protocol):
    def distribution(self, premise: str, hypothesis: str) -> list[float]: ...


def _post_json(url: str, payload: dict, timeout: float) -> dict:
    try:
        response = httpx.post(url, json=payload, timeout=timeout)
        response.raise_for_status()
        return response.json()
    except httpx.HTTPStatusError as exc:
        raise ClientError(
            f"{url} returned {exc.response.status_code}: {exc.response.text[:200]}"
        ) from exc
    except httpx.HTTPError as exc:
        raise ClientError(f"request to {url} failed: {exc}") from exc
    except ValueError as exc:
        raise ClientError(f"{url} returned a non-JSON body") from exc


class RemoteScoreClient:
    """Binary classifier served over HTTP."""

    def __init__(self, base_url: str, path: str = "/classify", timeout: float = 30.0):
        self._url = base_url.rstrip("/") + path
        self._timeout = timeout

    def score(self, text: str) -> float:
        body = _post_json(self._url, {"text": text}, self._timeout)
        if "score" not in body:
            raise ClientError(f"{self._url} response missing 'score'")
        return float(body["score"])


class RemoteEmbeddingClient:
    """Sentence embedder served over HTTP."""

    def __init__(self, base_url: str, path: str = "/embed", timeout: float = 60.0):
        self._url = base_url.rstrip("/") + path
        self._timeout = timeout

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        body = _post_json(self._url, {"input": list(texts)}, self._timeout)
        embeddings = body.get("embeddings")
        if not isinstance(embeddings, list) or len(embeddings) != len(texts):
            raise ClientError(f"{self._url} returned a malformed embedding batch")
        return [[float(x) for x in row] for row in embeddings]


class RemoteChatClient:
    """Chat-completions-compatible text generator."""

    def __init__(
        self,
        base_url: str,
        model: str = "default",
        temperature: float = 0.0,
        max_tokens: int = 1024,
        path: str = "/v1/chat/completions",
        timeout: float = 120.0,
    ):
        self._url = base_url.rstrip("/") + path
        self._model = model
        self._temperature = temperature
        self._max_tokens = max_tokens
        self._timeout = timeout

    def complete(self, messages: list[dict]) -> str:
        payload = {
            "model": self._model,
            "messages": messages,
            "temperature": self._temperature,
            "max_tokens": self._max_tokens,
        }
        body = _post_json(self._url, payload, self._timeout)
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ClientError(f"{self._url} returned a malformed completion") from exc


class RemoteVerdictClient:
    """Verification model that scores (premise, hypothesis) pairs."""

    def __init__(self, base_url: str, path: str = "/verify", timeout: float = 60.0):
        self._url = base_url.rstrip("/") + path
        self._timeout = timeout

    def distribution(self, premise: str, hypothesis: str) -> list[float]:
        body = _post_json(self._url, {"premise": premise, "hypothesis": hypothesis}, self._timeout)
        dist = body.get("distribution")
        if not isinstance(dist, list) or not dist:
            raise ClientError(f"{self._url} returned a malformed distribution")
        return [float(x) for x in dist]


# --- fixture clients ----------------------------------------------------------


def hash_messages(messages: list[dict]) -> str:
    """Stable key for a chat prompt: sha256 over canonical JSON."""
    canonical = json.dumps(messages, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def hash_pair(premise: str, hypothesis: str) -> str:
    """Stable key for a verification pair."""
    canonical = json.dumps([premise, hypothesis], separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


class FixtureScoreClient:
    """Replays classifier scores recorded as {"text", "score"} rows."""

    def __init__(self, scores: dict[str, float]):
        self._scores = dict(scores)

    @classmethod
    def from_path(cls, path: str | Path) -> "FixtureScoreClient":
        return cls({row["text"]: float(row["score"]) for row in _read_jsonl(path)})

    def score(self, text: str) -> float:
        if text not in self._scores:
            raise ClientError(f"no recorded score for text: {text[:80]!r}")
        return self._scores[text]


class FixtureChatClient:
    """Replays completions recorded as {"prompt_hash", "response"} rows."""

    def __init__(self, responses: dict[str, str]):
        self._responses = dict(responses)

    @classmethod
    def from_path(cls, path: str | Path) -> "FixtureChatClient":
        return cls({row["prompt_hash"]: row["response"] for row in _read_jsonl(path)})

    def complete(self, messages: list[dict]) -> str:
        key = hash_messages(messages)
        if key not in self._responses:
            raise ClientError(f"no recorded completion for prompt hash {key}")
        return self._responses[key]


class FixtureVerdictClient:
    """Replays distributions recorded as {"pair_hash", "distribution"} rows."""

    def __init__(self, distributions: dict[str, list[float]]):
        self._distributions = {k: [float(x) for x in v] for k, v in distributions.items()}

    @classmethod
    def from_path(cls, path: str | Path) -> "FixtureVerdictClient":
        return cls({row["pair_hash"]: row["distribution"] for row in _read_jsonl(path)})

    def distribution(self, premise: str, hypothesis: str) -> list[float]:
        key = hash_pair(premise, hypothesis)
        if key not in self._distributions:
            raise ClientError(f"no recorded distribution for pair hash {key}")
        return self._distributions[key]
