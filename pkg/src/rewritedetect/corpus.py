"""Corpus construction and hygiene: samples, cleaning, prompts, splits.

Human/AI text samples are domain-tagged JSONL rows.  Cleaning enforces
the human-data date cutoff (the public release of conversational LLMs)
and strips assistant preambles from AI rows.  Splitting is stratified by
(domain, label) and linkage-aware: a human paragraph and its generated
counterparts share a ``link_id`` and always land on the same side.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

from .llm import RewritePrompt, strip_preamble

LABELS = ("human", "ai")

CUTOFF_DATE = date(2022, 11, 30)

DEFAULT_MIN_PARAGRAPH_WORDS = 10

# The shipped domain tags; free-form user tags are allowed alongside.
KNOWN_DOMAINS = frozenset(
    {
        "AcademicResearch",
        "ArtCulture",
        "Business",
        "Code",
        "EducationalMaterial",
        "Entertainment",
        "Environmental",
        "Finance",
        "FoodCuisine",
        "GovernmentPublic",
        "LegalDocument",
        "LiteratureCreativeWriting",
        "MedicalText",
        "NewsArticle",
        "OnlineContent",
        "PersonalCommunication",
        "ProductReview",
        "Religious",
        "Sports",
        "TechnicalWriting",
        "TravelTourism",
    }
)


@dataclass(frozen=True)
class TextSample:
    id: str
    text: str
    label: str  # "human" | "ai"
    domain: str
    generator: str  # model name, or "human"
    prompt_id: str | None = None
    created_at: str | None = None  # ISO date
    link_id: str | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if not self.text:
            raise ValueError(f"sample {self.id!r} has empty text")
        if self.label == "human":
            if self.generator != "human":
                raise ValueError(f"human sample {self.id!r} must have generator 'human'")
            if self.prompt_id is not None:
                raise ValueError(f"human sample {self.id!r} cannot carry a prompt_id")
        else:
            if not self.generator or self.generator == "human":
                raise ValueError(f"ai sample {self.id!r} must name a generator model")

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "text": self.text,
            "label": self.label,
            "domain": self.domain,
            "generator": self.generator,
        }
        for key in ("prompt_id", "created_at", "link_id"):
            value = getattr(self, key)
            if value is not None:
                d[key] = value
        return d

    @classmethod
    def from_json(cls, d: dict) -> "TextSample":
        return cls(
            id=d["id"],
            text=d["text"],
            label=d["label"],
            domain=d["domain"],
            generator=d["generator"],
            prompt_id=d.get("prompt_id"),
            created_at=d.get("created_at"),
            link_id=d.get("link_id"),
        )


def write_samples(path: str | Path, samples: Iterable[TextSample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def read_samples(path: str | Path) -> list[TextSample]:
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                samples.append(TextSample.from_json(json.loads(line)))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: bad text sample: {exc}") from exc
    return samples


# ---------------------------------------------------------------------------
# paragraph splitting and cleaning
# ---------------------------------------------------------------------------

def split_paragraphs(raw: str, min_words: int = DEFAULT_MIN_PARAGRAPH_WORDS) -> list[str]:
    """Split on blank-line runs, trim, and drop fragments below ``min_words``."""
    normalized = raw.replace("\r\n", "\n").replace("\r", "\n")
    pieces = re.split(r"\n[ \t]*\n+", normalized)
    out = []
    for piece in pieces:
        piece = piece.strip()
        if piece and len(piece.split()) >= min_words:
            out.append(piece)
    return out


def normalize_whitespace(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n").strip()


@dataclass(frozen=True)
class CleanResult:
    sample: TextSample | None
    reason: str | None = None  # set on rejection
    warning: str | None = None

    @property
    def accepted(self) -> bool:
        return self.sample is not None


def clean_sample(
    sample: TextSample,
    cutoff: date = CUTOFF_DATE,
    preamble_patterns: Sequence[str] | None = None,
) -> CleanResult:
    """Apply the corpus hygiene rules to one sample.

    Human rows dated after the cutoff are rejected ("post-cutoff");
    undated human rows pass with a warning.  AI rows get assistant
    preambles stripped.  All rows get whitespace normalized (trim,
    CR/LF collapsed to LF).  Rejection is a value, not an error.
    """
    warning = None
    if sample.label == "human":
        if sample.created_at is None:
            warning = "missing-created-at"
        else:
            try:
                created = date.fromisoformat(sample.created_at)
            except ValueError:
                return CleanResult(None, reason="invalid-date")
            if created > cutoff:
                return CleanResult(None, reason="post-cutoff")
        text = sample.text
    else:
        text = strip_preamble(sample.text, preamble_patterns)
    text = normalize_whitespace(text)
    if not text:
        return CleanResult(None, reason="empty-after-cleaning")
    return CleanResult(replace(sample, text=text), warning=warning)


# ---------------------------------------------------------------------------
# prompt pool
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PromptPool:
    prompts: tuple[RewritePrompt, ...]
    seed: int = 0

    def __post_init__(self):
        if not self.prompts:
            raise ValueError("prompt pool must be non-empty")
        ids = [p.id for p in self.prompts]
        if len(set(ids)) != len(ids):
            raise ValueError("prompt ids must be unique")

    @classmethod
    def from_file(cls, path: str | Path, seed: int = 0) -> "PromptPool":
        """Plain-text pool: one prompt per line, line number = prompt id."""
        prompts = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if line:
                    prompts.append(RewritePrompt(line, id=str(lineno)))
        return cls(prompts=tuple(prompts), seed=seed)


def sample_prompt(pool: PromptPool, sample_id: str) -> RewritePrompt:
    """Uniform draw from the pool, deterministic in (pool.seed, sample_id)."""
    rng = random.Random(f"{pool.seed}:{sample_id}")
    return pool.prompts[rng.randrange(len(pool.prompts))]


# ---------------------------------------------------------------------------
# stratified, linkage-aware splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


@dataclass
class SplitResult:
    train: list[TextSample]
    test: list[TextSample]


def split(samples: Sequence[TextSample], spec: SplitSpec) -> SplitResult:
    """Deterministic stratified split; linked samples stay together.

    Unlinked samples are stratified by (domain, label).  Samples sharing a
    ``link_id`` form one unit assigned as a whole (their stratum is the
    domain plus the unit's label signature), so near-duplicates never
    straddle the split.  Each stratum sends round(fraction * n) of its
    units to train.  Output preserves input order on both sides.
    """
    if not samples:
        raise ValueError("cannot split an empty sample list")
    units: dict[str, list[int]] = {}
    order: list[str] = []
    for idx, sample in enumerate(samples):
        key = f"link:{sample.link_id}" if sample.link_id is not None else f"solo:{idx}"
        if key not in units:
            units[key] = []
            order.append(key)
        units[key].append(idx)

    strata: dict[tuple, list[str]] = {}
    for key in order:
        members = units[key]
        domain = samples[members[0]].domain
        signature = tuple(sorted(samples[i].label for i in members))
        strata.setdefault((domain, signature), []).append(key)

    train_idx: set[int] = set()
    for (domain, signature), keys in sorted(strata.items()):
        rng = random.Random(f"{spec.seed}:{domain}:{','.join(signature)}")
        shuffled = keys[:]
        rng.shuffle(shuffled)
        n_train = int(spec.train_fraction * len(keys) + 0.5)
        for key in shuffled[:n_train]:
            train_idx.update(units[key])

    train = [s for i, s in enumerate(samples) if i in train_idx]
    test = [s for i, s in enumerate(samples) if i not in train_idx]
    return SplitResult(train=train, test=test)


# ---------------------------------------------------------------------------
# corpus building from raw documents
# ---------------------------------------------------------------------------

@dataclass
class BuildResult:
    samples: list[TextSample]
    rejected: list[dict] = field(default_factory=list)
    warnings: list[dict] = field(default_factory=list)
    unknown_domains: list[str] = field(default_factory=list)


def build_corpus(
    docs: Iterable[dict],
    *,
    min_words: int = DEFAULT_MIN_PARAGRAPH_WORDS,
    cutoff: date = CUTOFF_DATE,
    pool: PromptPool | None = None,
) -> BuildResult:
    """Turn raw documents into cleaned, paragraph-level samples.

    Each doc dict needs ``text``, ``label``, ``domain`` and ``generator``
    (plus optional ``id``, ``created_at``, ``link_id``).  Paragraphs are
    split out, cleaned, and given deterministic ids ``<doc>-p<k>``.  With
    a prompt pool, AI rows are stamped with their sampled prompt id (the
    recipe for generating counterparts with live models).
    """
    result = BuildResult(samples=[])
    seen_domains: set[str] = set()
    for doc_index, doc in enumerate(docs):
        doc_id = str(doc.get("id") or f"doc{doc_index:05d}")
        domain = doc["domain"]
        if domain not in KNOWN_DOMAINS and domain not in seen_domains:
            seen_domains.add(domain)
            result.unknown_domains.append(domain)
        for k, paragraph in enumerate(split_paragraphs(doc["text"], min_words)):
            sample_id = f"{doc_id}-p{k:03d}"
            try:
                sample = TextSample(
                    id=sample_id,
                    text=paragraph,
                    label=doc["label"],
                    domain=domain,
                    generator=doc["generator"],
                    created_at=doc.get("created_at"),
                    link_id=doc.get("link_id"),
                )
            except (ValueError, KeyError) as exc:
                result.rejected.append({"id": sample_id, "reason": str(exc)})
                continue
            cleaned = clean_sample(sample, cutoff=cutoff)
            if not cleaned.accepted:
                result.rejected.append({"id": sample_id, "reason": cleaned.reason})
                continue
            sample = cleaned.sample
            if cleaned.warning:
                result.warnings.append({"id": sample_id, "warning": cleaned.warning})
            if pool is not None and sample.label == "ai":
                sample = replace(sample, prompt_id=sample_prompt(pool, sample.id).id)
            result.samples.append(sample)
    return result
