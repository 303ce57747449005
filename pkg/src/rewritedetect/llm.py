"""Rewrite acquisition: prompts, backends, post-processing, batch driver.

The HTTP backend speaks the common chat-completion JSON protocol (POST
``<base_url>/v1/chat/completions``) so one implementation covers both
commercial APIs and local inference servers.  Mock backends ship in-tree
because tests need full control over the similarity distribution a
"model" produces; all mocks are pure functions of their seed and input.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import requests

from .textdist import similarity

DEFAULT_INSTRUCTION = "Refine this for me please"
DEFAULT_CREDENTIAL_ENV = "DETECTOR_API_KEY"
DEFAULT_TIMEOUT = 120.0
DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_BACKOFF = 1.0

# Leading assistant boilerplate; each pattern anchors at the start of the
# completion, and the preamble extends to the first colon or newline.
DEFAULT_PREAMBLE_PATTERNS = (
    r"sure,?\s+here(?:'s|\s+is)\b",
    r"here(?:'s|\s+is)\b",
    r"certainly\b",
    r"of\s+course\b",
)


class RewriteError(Exception):
    """Base class for rewrite-acquisition failures."""


class TransportError(RewriteError):
    """Connection-level or retryable server failure (timeouts, 5xx, 429)."""


class MalformedResponseError(RewriteError):
    """Unusable response; carries the raw payload for debugging."""

    def __init__(self, message: str, payload: Any = None):
        super().__init__(message)
        self.payload = payload


class EmptyCompletionError(RewriteError):
    """The backend returned nothing usable after post-processing."""


@dataclass(frozen=True)
class RewritePrompt:
    instruction: str
    id: str | None = None

    def __post_init__(self):
        if not self.instruction:
            raise ValueError("prompt instruction must be non-empty")


DEFAULT_PROMPT = RewritePrompt(DEFAULT_INSTRUCTION, id="default")


@dataclass(frozen=True)
class RewriteRequest:
    prompt: RewritePrompt
    text: str
    model_name: str = "mock"
    temperature: float = 0.0
    max_output_chars: int = 100_000
    sample_id: str | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("rewrite input must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_chars <= 0:
            raise ValueError("max_output_chars must be positive")


@dataclass(frozen=True)
class RewriteRecord:
    """One (original, rewritten, similarity) feature row."""

    sample_id: str
    original: str
    rewritten: str
    similarity: float
    model_name: str
    prompt_id: str | None

    def to_json(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "original": self.original,
            "rewritten": self.rewritten,
            "similarity": self.similarity,
            "model_name": self.model_name,
            "prompt_id": self.prompt_id,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RewriteRecord":
        return cls(
            sample_id=d["sample_id"],
            original=d["original"],
            rewritten=d["rewritten"],
            similarity=float(d["similarity"]),
            model_name=d["model_name"],
            prompt_id=d.get("prompt_id"),
        )


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------

class RewriteBackend:
    """Interface: ``complete(request) -> str`` returning the raw completion."""

    model_name = "mock"

    def complete(self, request: RewriteRequest) -> str:
        raise NotImplementedError


class IdentityBackend(RewriteBackend):
    """Returns the input unchanged (similarity exactly 1.0)."""

    model_name = "mock-identity"

    def complete(self, request: RewriteRequest) -> str:
        return request.text


class ShuffleBackend(RewriteBackend):
    """Seeded word-order permutation; same word multiset, changed order.

    The per-call stream is derived from (seed, input digest), so results
    do not depend on call order or thread interleaving.
    """

    model_name = "mock-shuffle"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def complete(self, request: RewriteRequest) -> str:
        words = request.text.split()
        if len(set(words)) < 2:
            return request.text
        digest = hashlib.sha256(request.text.encode("utf-8")).hexdigest()
        rng = random.Random(f"{self.seed}:{digest}")
        shuffled = words[:]
        rng.shuffle(shuffled)
        if shuffled == words:
            for i in range(len(words) - 1):
                if words[i] != words[i + 1]:
                    shuffled[i], shuffled[i + 1] = shuffled[i + 1], shuffled[i]
                    break
        return " ".join(shuffled)


class TruncateBackend(RewriteBackend):
    """Returns the first ``k`` characters of the input."""

    model_name = "mock-truncate"

    def __init__(self, k: int):
        if k <= 0:
            raise ValueError("k must be positive")
        self.k = k

    def complete(self, request: RewriteRequest) -> str:
        return request.text[: self.k]


class ScriptedBackend(RewriteBackend):
    """Maps sample ids to fixed outputs; unknown ids are an error."""

    model_name = "mock-scripted"

    def __init__(self, outputs: dict[str, str]):
        self.outputs = dict(outputs)

    def complete(self, request: RewriteRequest) -> str:
        if request.sample_id not in self.outputs:
            raise MalformedResponseError(
                f"no scripted output for sample {request.sample_id!r}",
                payload=request.sample_id,
            )
        return self.outputs[request.sample_id]


class HTTPBackend(RewriteBackend):
    """Chat-completion client for any endpoint speaking the common protocol.

    The request body carries a single user message: the prompt instruction,
    a blank line, then the input text.  The bearer credential is read from
    ``credential_env`` at call time; unset means no Authorization header.
    """

    def __init__(
        self,
        base_url: str,
        model_name: str = "gpt-3.5-turbo",
        credential_env: str = DEFAULT_CREDENTIAL_ENV,
        timeout: float = DEFAULT_TIMEOUT,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model_name = model_name
        self.credential_env = credential_env
        self.timeout = timeout
        self.session = session or requests.Session()

    @property
    def endpoint(self) -> str:
        return f"{self.base_url}/v1/chat/completions"

    def complete(self, request: RewriteRequest) -> str:
        headers = {"Content-Type": "application/json"}
        credential = os.environ.get(self.credential_env, "")
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        body = {
            "model": request.model_name,
            "messages": [
                {"role": "user", "content": f"{request.prompt.instruction}\n\n{request.text}"}
            ],
            "temperature": request.temperature,
        }
        try:
            resp = self.session.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise TransportError(f"cannot reach {self.endpoint}: {exc}") from exc
        if resp.status_code >= 500 or resp.status_code == 429:
            raise TransportError(f"{self.endpoint} answered {resp.status_code}")
        if resp.status_code != 200:
            raise MalformedResponseError(
                f"{self.endpoint} answered {resp.status_code}", payload=resp.text
            )
        try:
            payload = resp.json()
            content = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(
                f"unexpected completion payload from {self.endpoint}: {exc}",
                payload=resp.text,
            ) from exc
        if not isinstance(content, str):
            raise MalformedResponseError("completion content is not text", payload=resp.text)
        return content


# ---------------------------------------------------------------------------
# post-processing and the single-rewrite driver
# ---------------------------------------------------------------------------

def _compile_patterns(patterns: Sequence[str] | None) -> list[re.Pattern]:
    pats = DEFAULT_PREAMBLE_PATTERNS if patterns is None else tuple(patterns)
    return [re.compile(r"\s*(?:" + p + ")", re.IGNORECASE) for p in pats]


def strip_preamble(completion: str, patterns: Sequence[str] | None = None) -> str:
    """Drop a leading assistant preamble ("Sure, here is ...:" and kin).

    A preamble is a configured pattern at the start of the completion; it
    extends to the first colon or newline, which is removed along with any
    following whitespace.  Applied to a fixpoint, so the operation is
    idempotent.  Text without a matching pattern (or without a colon or
    newline boundary) is returned unchanged.
    """
    compiled = _compile_patterns(patterns)
    text = completion
    while True:
        if not any(p.match(text) for p in compiled):
            return text
        colon = text.find(":")
        newline = text.find("\n")
        cuts = [c for c in (colon, newline) if c != -1]
        if not cuts:
            return text
        text = text[min(cuts) + 1 :].lstrip()


def rewrite(
    request: RewriteRequest,
    backend: RewriteBackend,
    *,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    backoff: float = DEFAULT_BACKOFF,
    preamble_patterns: Sequence[str] | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Fetch one rewrite and post-process it.

    Transport failures are retried up to ``max_attempts`` total tries with
    exponential backoff; malformed responses and empty completions are
    surfaced immediately.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    attempt = 0
    while True:
        attempt += 1
        try:
            completion = backend.complete(request)
            break
        except TransportError:
            if attempt >= max_attempts:
                raise
            sleep(backoff * 2 ** (attempt - 1))
    cleaned = strip_preamble(completion, preamble_patterns)
    if len(cleaned) > request.max_output_chars:
        cleaned = cleaned[: request.max_output_chars]
    if not cleaned.strip():
        raise EmptyCompletionError(
            f"backend returned an empty completion for sample {request.sample_id!r}"
        )
    return cleaned


# ---------------------------------------------------------------------------
# batch driver
# ---------------------------------------------------------------------------

PromptPolicy = Callable[[Any], RewritePrompt]


@dataclass(frozen=True)
class BatchFailure:
    sample_id: str
    error: str
    kind: str


@dataclass
class BatchResult:
    records: list[RewriteRecord]
    failures: list[BatchFailure] = field(default_factory=list)


def _failure_kind(exc: RewriteError) -> str:
    if isinstance(exc, TransportError):
        return "transport"
    if isinstance(exc, EmptyCompletionError):
        return "empty"
    if isinstance(exc, MalformedResponseError):
        return "malformed"
    return "error"


def batch_rewrite(
    samples: Sequence[Any],
    prompt_policy: RewritePrompt | PromptPolicy,
    backend: RewriteBackend,
    parallelism: int = 1,
    *,
    model_name: str | None = None,
    temperature: float = 0.0,
    max_output_chars: int = 100_000,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    backoff: float = DEFAULT_BACKOFF,
    preamble_patterns: Sequence[str] | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> BatchResult:
    """Rewrite many samples, preserving input order in the output.

    ``samples`` need ``.id`` and ``.text`` attributes.  ``prompt_policy``
    is either a fixed prompt or a callable mapping a sample to its prompt.
    Up to ``parallelism`` requests run concurrently; results are merged by
    input index, so deterministic backends give identical output at any
    parallelism.  Per-sample failures are collected, not raised.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if isinstance(prompt_policy, RewritePrompt):
        fixed = prompt_policy
        policy: PromptPolicy = lambda sample: fixed
    else:
        policy = prompt_policy
    name = model_name if model_name is not None else backend.model_name

    def one(sample: Any) -> RewriteRecord | BatchFailure:
        prompt = policy(sample)
        try:
            request = RewriteRequest(
                prompt=prompt,
                text=sample.text,
                model_name=name,
                temperature=temperature,
                max_output_chars=max_output_chars,
                sample_id=sample.id,
            )
            rewritten = rewrite(
                request,
                backend,
                max_attempts=max_attempts,
                backoff=backoff,
                preamble_patterns=preamble_patterns,
                sleep=sleep,
            )
        except (RewriteError, ValueError) as exc:
            kind = _failure_kind(exc) if isinstance(exc, RewriteError) else "invalid"
            return BatchFailure(sample_id=sample.id, error=str(exc), kind=kind)
        return RewriteRecord(
            sample_id=sample.id,
            original=sample.text,
            rewritten=rewritten,
            similarity=similarity(sample.text, rewritten),
            model_name=name,
            prompt_id=prompt.id,
        )

    if parallelism == 1:
        outcomes = [one(s) for s in samples]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(one, samples))

    result = BatchResult(records=[])
    for outcome in outcomes:
        if isinstance(outcome, BatchFailure):
            result.failures.append(outcome)
        else:
            result.records.append(outcome)
    return result


# ---------------------------------------------------------------------------
# JSONL persistence
# ---------------------------------------------------------------------------

def write_records(path: str | Path, records: Iterable[RewriteRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def read_records(path: str | Path) -> list[RewriteRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(RewriteRecord.from_json(json.loads(line)))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: bad rewrite record: {exc}") from exc
    return records
