from __future__ import annotations

import json
import math
import random

import numpy as np
import pytest
from scipy import optimize

from oracles import auroc_brute
from rewritedetect.detector import (
    Classification,
    LabeledScore,
    ThresholdClassifier,
    auroc,
    classify,
    mean_logistic_loss,
    sigmoid,
    train_classifier,
    training_accuracy,
)


def labeled(ai: list[float], human: list[float]) -> list[LabeledScore]:
    return [LabeledScore(s, 1) for s in ai] + [LabeledScore(s, 0) for s in human]


def threshold_oracle(data: list[LabeledScore], ridge: float = 1e-9) -> float:
    """Direct numerical minimization of the (w-ridged) logistic loss.

    The tiny penalty on the slope keeps the minimizer finite for separable
    data without moving the probability-0.5 crossing of symmetric sets.
    """
    s = np.array([d.score for d in data])
    y = np.array([d.label for d in data], dtype=float)

    def f(theta):
        w, b = theta
        z = w * s + b
        return float(np.mean(np.logaddexp(0.0, z) - y * z)) + ridge * w * w

    res = optimize.minimize(
        f, x0=[0.0, 0.0], method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 20000},
    )
    w, b = res.x
    return -b / w


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def test_train_separable_fixture():
    data = labeled(ai=[0.9, 0.95], human=[0.1, 0.2])
    model = train_classifier(data)
    assert training_accuracy(data, model) == 1.0
    assert 0.2 < model.threshold < 0.9
    assert model.weight > 0  # higher similarity means AI


def test_threshold_is_minus_intercept_over_weight():
    model = ThresholdClassifier(weight=2.0, intercept=-3.0, threshold=1.5)
    assert model.threshold == -model.intercept / model.weight == 1.5
    assert abs(model.probability(model.threshold) - 0.5) < 1e-9


def test_trained_threshold_sits_at_probability_half():
    model = train_classifier(labeled(ai=[0.7, 0.9], human=[0.1, 0.3]))
    assert abs(sigmoid(model.weight * model.threshold + model.intercept) - 0.5) < 1e-9


def test_symmetric_fixture_threshold_is_midpoint():
    data = labeled(ai=[0.6, 0.8], human=[0.2, 0.4])
    model = train_classifier(data)
    assert abs(model.threshold - 0.5) < 1e-6
    assert abs(threshold_oracle(data) - 0.5) < 1e-6


def test_separable_training_reaches_full_accuracy_at_spec_settings():
    rng = random.Random(0)
    ai = [0.75 + 0.2 * rng.random() for _ in range(30)]
    human = [0.05 + 0.5 * rng.random() for _ in range(30)]
    data = labeled(ai=ai, human=human)
    model = train_classifier(data, learning_rate=0.1, max_iters=10_000)
    assert training_accuracy(data, model) == 1.0


def test_training_loss_near_optimum_for_nonseparable_data():
    # overlapping classes: the MLE exists; GD should essentially reach it
    data = labeled(ai=[0.3, 0.6, 0.9, 0.5], human=[0.2, 0.5, 0.7, 0.4])
    model = train_classifier(data, max_iters=200_000, tol=1e-13)
    ours = mean_logistic_loss(data, model.weight, model.intercept)

    def f(theta):
        return mean_logistic_loss(data, theta[0], theta[1])

    res = optimize.minimize(f, x0=[0.0, 0.0], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-16})
    assert ours <= res.fun + 1e-9


def test_train_rejects_single_class():
    with pytest.raises(ValueError):
        train_classifier([LabeledScore(0.5, 1), LabeledScore(0.7, 1)])


def test_train_rejects_nonfinite_scores():
    with pytest.raises(ValueError):
        train_classifier(labeled(ai=[float("nan")], human=[0.2]))
    with pytest.raises(ValueError):
        train_classifier(labeled(ai=[float("inf")], human=[0.2]))


def test_train_rejects_constant_scores():
    with pytest.raises(ValueError):
        train_classifier(labeled(ai=[0.5, 0.5], human=[0.5]))


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def test_classify_tie_breaks_to_ai():
    model = ThresholdClassifier(weight=10.0, intercept=-5.0, threshold=0.5)
    verdict, probability = classify(0.5, model)
    assert probability == 0.5
    assert verdict == "ai"


def test_classify_probability_value():
    model = ThresholdClassifier(weight=10.0, intercept=-5.0, threshold=0.5)
    result = classify(1.0, model)
    assert result == Classification("ai", pytest.approx(1 / (1 + math.exp(-5)), abs=1e-12))
    assert result.probability == pytest.approx(0.9933, abs=5e-5)


def test_identity_mock_score_is_ai_under_separable_model():
    model = train_classifier(labeled(ai=[0.9, 0.95], human=[0.1, 0.2]))
    assert classify(1.0, model).verdict == "ai"


def test_classify_verdict_invariant_under_positive_rescaling():
    model = ThresholdClassifier(weight=4.0, intercept=-2.0, threshold=0.5)
    scaled = ThresholdClassifier(weight=12.0, intercept=-6.0, threshold=0.5)
    for score in [0.0, 0.25, 0.5, 0.75, 1.0]:
        assert classify(score, model).verdict == classify(score, scaled).verdict
    assert classify(0.4, model).probability != classify(0.4, scaled).probability


def test_verdict_equals_threshold_rule_for_positive_weight():
    model = train_classifier(labeled(ai=[0.8, 0.9], human=[0.1, 0.3]))
    assert model.weight > 0
    rng = random.Random(1)
    for _ in range(500):
        score = rng.uniform(-0.5, 1.5)
        assert (classify(score, model).verdict == "ai") == (score >= model.threshold)


def test_classify_rejects_nonfinite_score():
    model = ThresholdClassifier(weight=1.0, intercept=0.0, threshold=0.0)
    with pytest.raises(ValueError):
        classify(float("nan"), model)


# ---------------------------------------------------------------------------
# auroc
# ---------------------------------------------------------------------------

def test_auroc_perfect_separation():
    assert auroc(labeled(ai=[0.9, 0.8], human=[0.1, 0.2])) == 1.0


def test_auroc_all_ties():
    assert auroc(labeled(ai=[0.5, 0.5], human=[0.5, 0.5])) == 0.5


def test_auroc_mixed_fixture():
    data = labeled(ai=[0.8, 0.3], human=[0.5, 0.1])
    expected = auroc_brute([0.8, 0.3, 0.5, 0.1], [1, 1, 0, 0])
    assert expected == 0.75
    assert auroc(data) == expected


def test_auroc_matches_brute_force_with_ties():
    rng = random.Random(9)
    for _ in range(200):
        n = rng.randint(2, 60)
        scores = [rng.choice([0.1, 0.2, 0.3, 0.5, 0.5, 0.9, rng.random()]) for _ in range(n)]
        labels = [rng.randint(0, 1) for _ in range(n)]
        if len(set(labels)) < 2:
            labels[0] = 0
            labels[1] = 1
        data = [LabeledScore(s, y) for s, y in zip(scores, labels)]
        assert auroc(data) == auroc_brute(scores, labels)


def test_auroc_invariant_under_monotone_transform():
    rng = random.Random(5)
    scores = [rng.random() for _ in range(50)]
    labels = [rng.randint(0, 1) for _ in range(50)]
    labels[0], labels[1] = 0, 1
    base = auroc([LabeledScore(s, y) for s, y in zip(scores, labels)])
    for transform in (lambda x: 3 * x + 1, lambda x: x**3, math.exp):
        assert auroc(
            [LabeledScore(transform(s), y) for s, y in zip(scores, labels)]
        ) == pytest.approx(base, abs=1e-12)


def test_auroc_label_flip():
    rng = random.Random(6)
    scores = [rng.choice([0.2, 0.4, 0.4, 0.8]) for _ in range(40)]
    labels = [rng.randint(0, 1) for _ in range(40)]
    labels[0], labels[1] = 0, 1
    data = [LabeledScore(s, y) for s, y in zip(scores, labels)]
    flipped = [LabeledScore(s, 1 - y) for s, y in zip(scores, labels)]
    assert auroc(flipped) == pytest.approx(1.0 - auroc(data), abs=1e-12)


def test_auroc_rejects_single_class():
    with pytest.raises(ValueError):
        auroc([LabeledScore(0.1, 1), LabeledScore(0.2, 1)])


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def test_model_json_roundtrip(tmp_path):
    model = train_classifier(labeled(ai=[0.8, 0.9], human=[0.1, 0.2]))
    path = tmp_path / "model.json"
    model.save(path)
    loaded = ThresholdClassifier.load(path)
    assert loaded == model
    payload = json.loads(path.read_text())
    assert set(payload) == {"weight", "intercept", "threshold", "positive_label", "feature_names"}
    assert payload["positive_label"] == "ai"
