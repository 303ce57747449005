"""Threshold-gated, sign-flipped training signal for an external trainer.

The gate masks examples that already sit on the correct side of the
threshold ``t``: a human example contributes only while its loss is still
below ``t`` (pushing it up), an AI example only while its loss is still
above ``t`` (pushing it down).  Contributions carry the flipped sign for
human examples, so minimizing the aggregate drives the two classes apart.
Once a loss set is fully separated the aggregate is exactly zero.

Everything here is pure; the file-exchange entry point exists so a
fine-tuning process living elsewhere can consume gate decisions as JSONL.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .detector import LabeledScore, train_classifier

LABELS = ("human", "ai")


@dataclass(frozen=True)
class LossExample:
    sample_id: str
    loss: float  # mean per-token cross-entropy, nats
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if not (isinstance(self.loss, (int, float)) and math.isfinite(self.loss)):
            raise ValueError(f"loss must be finite, got {self.loss!r}")
        if self.loss < 0:
            raise ValueError(f"loss must be >= 0, got {self.loss!r}")


@dataclass(frozen=True)
class GateDecision:
    sample_id: str
    included: bool
    signed_contribution: float

    def to_json(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "included": self.included,
            "signed_contribution": self.signed_contribution,
        }


@dataclass
class GateResult:
    decisions: list[GateDecision]
    aggregate: float


def gate(examples: Sequence[LossExample], threshold: float) -> GateResult:
    """Apply the masking rule at ``threshold`` to every example.

    Inclusion is strict: a loss exactly equal to the threshold is masked
    for both classes.  Included AI examples contribute ``+loss``, included
    human examples ``-loss``; masked examples contribute zero.
    """
    if not math.isfinite(threshold):
        raise ValueError("threshold must be finite")
    decisions = []
    aggregate = 0.0
    for ex in examples:
        if ex.label == "human":
            included = ex.loss < threshold
            contribution = -ex.loss if included else 0.0
        else:
            included = ex.loss > threshold
            contribution = ex.loss if included else 0.0
        decisions.append(GateDecision(ex.sample_id, included, contribution))
        aggregate += contribution
    return GateResult(decisions=decisions, aggregate=aggregate)


def derive_threshold(examples: Sequence[LossExample], **train_kwargs) -> float:
    """Threshold from a logistic regression over pre-fine-tune loss values."""
    data = [LabeledScore(ex.loss, 1 if ex.label == "ai" else 0) for ex in examples]
    return train_classifier(data, **train_kwargs).threshold


class GateFileError(Exception):
    """A gate input line could not be used; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _parse_line(line: str, lineno: int) -> LossExample:
    try:
        d = json.loads(line)
    except ValueError as exc:
        raise GateFileError(lineno, f"invalid JSON: {exc}") from exc
    try:
        return LossExample(
            sample_id=d["sample_id"], loss=float(d["loss"]), label=d["label"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise GateFileError(lineno, str(exc)) from exc


def iter_loss_examples(path: str | Path) -> Iterable[tuple[int, LossExample]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            yield lineno, _parse_line(line, lineno)


def read_loss_examples(path: str | Path) -> list[LossExample]:
    return [ex for _, ex in iter_loss_examples(path)]


def gate_file_exchange(in_path: str | Path, out_path: str | Path, threshold: float) -> dict:
    """Stream LossExample JSONL through the gate into GateDecision JSONL.

    One output line per input line, same order.  Bad input aborts with the
    offending line number and leaves no partial output file.  Returns
    inclusion/mask counts per class plus the aggregate.
    """
    if not math.isfinite(threshold):
        raise ValueError("threshold must be finite")
    counts = {"included_ai": 0, "masked_ai": 0, "included_human": 0, "masked_human": 0}
    aggregate = 0.0
    out_path = Path(out_path)
    tmp_path = out_path.with_name(out_path.name + ".tmp")
    try:
        with open(tmp_path, "w", encoding="utf-8") as out:
            for _, ex in iter_loss_examples(in_path):
                decision = gate([ex], threshold).decisions[0]
                aggregate += decision.signed_contribution
                key = ("included_" if decision.included else "masked_") + ex.label
                counts[key] += 1
                out.write(json.dumps(decision.to_json(), sort_keys=True) + "\n")
    except GateFileError:
        tmp_path.unlink(missing_ok=True)
        raise
    os.replace(tmp_path, out_path)
    return {**counts, "aggregate": aggregate}
