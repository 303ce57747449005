from __future__ import annotations

import json
import random

import pytest

from rewritedetect.gate import (
    GateFileError,
    LossExample,
    derive_threshold,
    gate,
    gate_file_exchange,
    read_loss_examples,
)

FIXTURE = [
    LossExample("h-low", 1.5, "human"),
    LossExample("a-low", 1.5, "ai"),
    LossExample("h-high", 2.5, "human"),
    LossExample("a-high", 2.5, "ai"),
]


def random_examples(rng: random.Random, n: int) -> list[LossExample]:
    return [
        LossExample(f"x{i}", rng.uniform(0.0, 5.0), rng.choice(["human", "ai"]))
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# gate
# ---------------------------------------------------------------------------

def test_gate_human_below_threshold_included_with_flipped_sign():
    result = gate([LossExample("h", 1.5, "human")], threshold=2.0)
    decision = result.decisions[0]
    assert decision.included
    assert decision.signed_contribution == -1.5


def test_gate_ai_below_threshold_masked():
    result = gate([LossExample("a", 1.5, "ai")], threshold=2.0)
    decision = result.decisions[0]
    assert not decision.included
    assert decision.signed_contribution == 0.0


def test_gate_boundary_is_masked_for_both_classes():
    result = gate(
        [LossExample("h", 2.0, "human"), LossExample("a", 2.0, "ai")], threshold=2.0
    )
    assert all(not d.included for d in result.decisions)
    assert result.aggregate == 0.0


def test_gate_fixture_decisions_and_aggregate():
    result = gate(FIXTURE, threshold=2.0)
    assert [(d.included, d.signed_contribution) for d in result.decisions] == [
        (True, -1.5),
        (False, 0.0),
        (False, 0.0),
        (True, 2.5),
    ]
    assert result.aggregate == pytest.approx(1.0)


def test_gate_rejects_nonfinite_threshold():
    with pytest.raises(ValueError):
        gate(FIXTURE, threshold=float("nan"))


def test_loss_example_validation():
    with pytest.raises(ValueError):
        LossExample("x", float("nan"), "ai")
    with pytest.raises(ValueError):
        LossExample("x", -0.5, "ai")
    with pytest.raises(ValueError):
        LossExample("x", 1.0, "robot")


def test_gate_aggregate_formula_exact():
    rng = random.Random(4)
    for _ in range(50):
        examples = random_examples(rng, rng.randint(1, 40))
        t = rng.uniform(0.0, 5.0)
        result = gate(examples, t)
        expected = sum(e.loss for e in examples if e.label == "ai" and e.loss > t) - sum(
            e.loss for e in examples if e.label == "human" and e.loss < t
        )
        assert result.aggregate == pytest.approx(expected, abs=1e-12)


def test_gate_monotone_in_threshold():
    rng = random.Random(8)
    for _ in range(100):
        examples = random_examples(rng, rng.randint(1, 30))
        t_low, t_high = sorted([rng.uniform(0, 5), rng.uniform(0, 5)])
        low = gate(examples, t_low)
        high = gate(examples, t_high)
        included_low = {d.sample_id for d, e in zip(low.decisions, examples) if d.included}
        included_high = {d.sample_id for d, e in zip(high.decisions, examples) if d.included}
        humans = {e.sample_id for e in examples if e.label == "human"}
        ais = {e.sample_id for e in examples if e.label == "ai"}
        # raising t can only add human inclusions and remove AI inclusions
        assert included_low & humans <= included_high & humans
        assert included_high & ais <= included_low & ais


def test_gate_idempotent_on_included_subset():
    rng = random.Random(12)
    examples = random_examples(rng, 50)
    t = 2.5
    first = gate(examples, t)
    included = [e for e, d in zip(examples, first.decisions) if d.included]
    second = gate(included, t)
    assert all(d.included for d in second.decisions)
    assert second.aggregate == pytest.approx(first.aggregate)


def test_gate_vanishes_on_perfectly_separated_set():
    # desired end state: every AI loss below t, every human loss above it
    examples = [
        LossExample("a1", 0.5, "ai"),
        LossExample("a2", 1.0, "ai"),
        LossExample("h1", 3.0, "human"),
        LossExample("h2", 4.0, "human"),
    ]
    result = gate(examples, threshold=2.0)
    assert result.aggregate == 0.0
    assert not any(d.included for d in result.decisions)


# ---------------------------------------------------------------------------
# derive_threshold
# ---------------------------------------------------------------------------

def test_derive_threshold_lands_between_classes():
    examples = [
        LossExample("a1", 3.0, "ai"),
        LossExample("a2", 3.5, "ai"),
        LossExample("h1", 1.0, "human"),
        LossExample("h2", 1.2, "human"),
    ]
    t = derive_threshold(examples)
    assert 1.2 < t < 3.0


def test_derive_threshold_symmetric_fixture():
    examples = [
        LossExample("a1", 2.5, "ai"),
        LossExample("a2", 3.5, "ai"),
        LossExample("h1", 0.5, "human"),
        LossExample("h2", 1.5, "human"),
    ]
    assert derive_threshold(examples) == pytest.approx(2.0, abs=1e-6)


def test_derive_threshold_single_class_errors():
    with pytest.raises(ValueError):
        derive_threshold([LossExample("a", 1.0, "ai")])


# ---------------------------------------------------------------------------
# file exchange
# ---------------------------------------------------------------------------

def write_losses(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def test_file_exchange_fixture(tmp_path):
    in_path = tmp_path / "losses.jsonl"
    out_path = tmp_path / "decisions.jsonl"
    write_losses(
        in_path,
        [
            {"sample_id": "h-low", "loss": 1.5, "label": "human"},
            {"sample_id": "a-low", "loss": 1.5, "label": "ai"},
            {"sample_id": "h-high", "loss": 2.5, "label": "human"},
            {"sample_id": "a-high", "loss": 2.5, "label": "ai"},
        ],
    )
    summary = gate_file_exchange(in_path, out_path, threshold=2.0)
    assert summary == {
        "included_ai": 1,
        "masked_ai": 1,
        "included_human": 1,
        "masked_human": 1,
        "aggregate": pytest.approx(1.0),
    }
    lines = [json.loads(line) for line in out_path.read_text().strip().split("\n")]
    assert [l["sample_id"] for l in lines] == ["h-low", "a-low", "h-high", "a-high"]
    assert lines[0] == {"sample_id": "h-low", "included": True, "signed_contribution": -1.5}
    assert lines[1] == {"sample_id": "a-low", "included": False, "signed_contribution": 0.0}


def test_file_exchange_empty_input(tmp_path):
    in_path = tmp_path / "losses.jsonl"
    in_path.write_text("")
    out_path = tmp_path / "decisions.jsonl"
    summary = gate_file_exchange(in_path, out_path, threshold=1.0)
    assert out_path.read_text() == ""
    assert summary == {
        "included_ai": 0,
        "masked_ai": 0,
        "included_human": 0,
        "masked_human": 0,
        "aggregate": 0.0,
    }


def test_file_exchange_nan_loss_names_line(tmp_path):
    in_path = tmp_path / "losses.jsonl"
    write_losses(
        in_path,
        [
            {"sample_id": "a", "loss": 1.0, "label": "ai"},
            {"sample_id": "b", "loss": 2.0, "label": "human"},
            {"sample_id": "c", "loss": float("nan"), "label": "ai"},
            {"sample_id": "d", "loss": 3.0, "label": "ai"},
        ],
    )
    out_path = tmp_path / "decisions.jsonl"
    with pytest.raises(GateFileError) as err:
        gate_file_exchange(in_path, out_path, threshold=2.0)
    assert err.value.line == 3
    assert "line 3" in str(err.value)
    assert not out_path.exists()  # no partial output


def test_file_exchange_malformed_json_names_line(tmp_path):
    in_path = tmp_path / "losses.jsonl"
    in_path.write_text('{"sample_id": "a", "loss": 1.0, "label": "ai"}\nnot json{\n')
    out_path = tmp_path / "decisions.jsonl"
    with pytest.raises(GateFileError) as err:
        gate_file_exchange(in_path, out_path, threshold=2.0)
    assert err.value.line == 2


def test_read_loss_examples(tmp_path):
    in_path = tmp_path / "losses.jsonl"
    write_losses(in_path, [{"sample_id": "a", "loss": 1.0, "label": "ai"}])
    assert read_loss_examples(in_path) == [LossExample("a", 1.0, "ai")]
