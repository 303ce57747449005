"""Adversarial perturbations used for robustness evaluation.

Two attacks: *decoherence* (seeded adjacent-word transposition inside
long sentences, targeting statistical detectors) and the *rewrite attack*
(an LLM paraphrases the text so a later rewrite produces many edits,
targeting rewrite-based detectors).  Attacks apply to AI-labeled test
rows only; human rows pass through untouched.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, replace
from typing import Sequence

from .corpus import TextSample
from .llm import (
    DEFAULT_BACKOFF,
    DEFAULT_MAX_ATTEMPTS,
    RewriteBackend,
    RewritePrompt,
    RewriteRequest,
    rewrite,
)

# Fixed paraphrase instruction for the rewrite attack.
ATTACK_PROMPT = RewritePrompt(
    "Help me rephrase it, so that another GPT rewriting will cause a lot of modifications",
    id="rewrite-attack",
)

_TERMINATORS = ".!?"
_LONG_SENTENCE_WORDS = 20


def split_sentences(text: str) -> list[str]:
    """Segment into chunks whose concatenation is the input, byte for byte.

    A sentence ends right after '.', '!' or '?' when followed by
    whitespace or end of text; following whitespace belongs to the next
    chunk.  No abbreviation handling: determinism over linguistics.
    """
    chunks = []
    start = 0
    for i, ch in enumerate(text):
        if ch in _TERMINATORS and (i + 1 == len(text) or text[i + 1].isspace()):
            chunks.append(text[start : i + 1])
            start = i + 1
    if start < len(text):
        chunks.append(text[start:])
    return chunks


def _transpose_sentence(sentence: str, rng: random.Random) -> str:
    # split keeping whitespace runs so the layout survives the swap
    parts = re.split(r"(\s+)", sentence)
    word_slots = [i for i, p in enumerate(parts) if p and not p.isspace()]
    if len(word_slots) <= _LONG_SENTENCE_WORDS:
        return sentence
    k = rng.randrange(len(word_slots) - 1)
    a, b = word_slots[k], word_slots[k + 1]
    parts[a], parts[b] = parts[b], parts[a]
    return "".join(parts)


def decoherence(text: str, seed: int) -> str:
    """Swap one seeded adjacent word pair in every sentence over 20 words.

    Words are maximal non-whitespace runs, punctuation attached.  Each
    sentence draws from its own stream (seed mixed with the sentence
    index), so output is reproducible sentence by sentence.  Sentences of
    20 or fewer words, and all whitespace, come through unchanged.
    """
    out = []
    for index, sentence in enumerate(split_sentences(text)):
        rng = random.Random(f"{seed}:{index}")
        out.append(_transpose_sentence(sentence, rng))
    return "".join(out)


def rewrite_attack(
    text: str,
    backend: RewriteBackend,
    *,
    prompt: RewritePrompt = ATTACK_PROMPT,
    model_name: str | None = None,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    backoff: float = DEFAULT_BACKOFF,
    sample_id: str | None = None,
) -> str:
    """Paraphrase ``text`` with the fixed attack prompt via ``backend``."""
    request = RewriteRequest(
        prompt=prompt,
        text=text,
        model_name=model_name if model_name is not None else backend.model_name,
        sample_id=sample_id,
    )
    return rewrite(request, backend, max_attempts=max_attempts, backoff=backoff)


@dataclass(frozen=True)
class AttackSpec:
    kind: str  # "decoherence" | "rewrite"
    seed: int | None = None
    backend: RewriteBackend | None = None
    prompt: RewritePrompt = ATTACK_PROMPT

    def __post_init__(self):
        if self.kind not in ("decoherence", "rewrite"):
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.kind == "decoherence" and self.seed is None:
            raise ValueError("decoherence attack requires a seed")
        if self.kind == "rewrite" and self.backend is None:
            raise ValueError("rewrite attack requires a backend")


def attack_samples(samples: Sequence[TextSample], spec: AttackSpec) -> list[TextSample]:
    """Perturb the text of AI-labeled rows; human rows are returned as-is."""
    out = []
    for sample in samples:
        if sample.label != "ai":
            out.append(sample)
            continue
        if spec.kind == "decoherence":
            attacked = decoherence(sample.text, spec.seed)
        else:
            attacked = rewrite_attack(
                sample.text, spec.backend, prompt=spec.prompt, sample_id=sample.id
            )
        out.append(replace(sample, text=attacked))
    return out
