"""Single-threshold classifier over rewrite scores, plus exact AUROC.

Training is full-batch gradient descent on the two-parameter logistic
loss.  Scores are mean-centered internally before the descent and the
intercept is mapped back afterwards; this keeps the parameterization
well-scaled and makes symmetric score sets resolve to their exact
midpoint threshold.  With separable data the unpenalized optimum does not
exist, so training additionally stops once training accuracy is 1.0 and
the mean loss drops below ``loss_floor``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ._kernels import logistic_gd

HUMAN = 0
AI = 1


class LabeledScore(NamedTuple):
    score: float
    label: int  # 0 = human, 1 = ai


class Classification(NamedTuple):
    verdict: str  # "ai" or "human"
    probability: float


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@dataclass(frozen=True)
class ThresholdClassifier:
    """1-D logistic model; ``threshold`` is the score with probability 0.5."""

    weight: float
    intercept: float
    threshold: float
    positive_label: str = "ai"
    feature_names: tuple[str, ...] = ("similarity",)

    def probability(self, score: float) -> float:
        return sigmoid(self.weight * score + self.intercept)

    def verdict(self, score: float) -> str:
        # exact 0.5 ties break toward the positive class
        return "ai" if self.probability(score) >= 0.5 else "human"

    def to_json(self) -> dict:
        d = asdict(self)
        d["feature_names"] = list(self.feature_names)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ThresholdClassifier":
        return cls(
            weight=float(d["weight"]),
            intercept=float(d["intercept"]),
            threshold=float(d["threshold"]),
            positive_label=d.get("positive_label", "ai"),
            feature_names=tuple(d.get("feature_names", ("similarity",))),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ThresholdClassifier":
        return cls.from_json(json.loads(Path(path).read_text()))


def _as_arrays(data: Sequence[LabeledScore]) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray([d.score for d in data], dtype=np.float64)
    labels = np.asarray([d.label for d in data], dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise ValueError("labels must be 0 (human) or 1 (ai)")
    if not (np.any(labels == 0.0) and np.any(labels == 1.0)):
        raise ValueError("training data must contain both labels")
    return scores, labels


def train_classifier(
    data: Sequence[LabeledScore],
    *,
    learning_rate: float = 0.1,
    max_iters: int = 10_000,
    tol: float = 1e-12,
    loss_floor: float = 1e-4,
) -> ThresholdClassifier:
    """Fit the 1-D logistic regression by full-batch gradient descent.

    Deterministic: fixed zero initialization, fixed learning rate, fixed
    iteration schedule.  Raises ValueError on single-class or non-finite
    input, and on score sets with zero variance (no signal to fit).
    """
    scores, labels = _as_arrays(data)
    center = float(scores.mean())
    centered = scores - center
    if not np.any(centered):
        raise ValueError("scores are all identical; cannot fit a threshold")
    w, b, _ = logistic_gd(centered, labels, learning_rate, int(max_iters), tol, loss_floor)
    if w == 0.0:
        raise ValueError("training did not move the weight; check inputs")
    intercept = b - w * center
    return ThresholdClassifier(weight=w, intercept=intercept, threshold=-intercept / w)


def mean_logistic_loss(data: Sequence[LabeledScore], weight: float, intercept: float) -> float:
    scores, labels = _as_arrays(data)
    z = weight * scores + intercept
    return float(np.mean(np.logaddexp(0.0, z) - labels * z))


def training_accuracy(data: Sequence[LabeledScore], model: ThresholdClassifier) -> float:
    scores, labels = _as_arrays(data)
    pred = (model.weight * scores + model.intercept) >= 0.0
    return float(np.mean(pred == (labels == 1.0)))


def classify(score: float, model: ThresholdClassifier) -> Classification:
    """Score a single example; ties at probability 0.5 go to "ai"."""
    if not math.isfinite(score):
        raise ValueError("score must be finite")
    p = model.probability(score)
    return Classification("ai" if p >= 0.5 else "human", p)


def tied_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned their average rank."""
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    boundaries = np.flatnonzero(np.diff(sorted_vals) != 0) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [values.shape[0]]))
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(values.shape[0], dtype=np.float64)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def auroc(data: Iterable[LabeledScore]) -> float:
    """Exact AUROC via the rank formulation (ties get half credit).

    Equals the fraction of (ai, human) pairs where the ai score is higher,
    counting ties as one half.  Higher score means more AI-like.
    """
    items = list(data)
    scores, labels = _as_arrays(items)
    ranks = tied_ranks(scores)
    n_ai = int(np.sum(labels == 1.0))
    n_human = scores.shape[0] - n_ai
    rank_sum = float(np.sum(ranks[labels == 1.0]))
    return (rank_sum - n_ai * (n_ai + 1) / 2.0) / (n_ai * n_human)
