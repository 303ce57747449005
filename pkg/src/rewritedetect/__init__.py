"""Rewrite-based AI-generated-text detection toolkit.

Texts are scored by how much a language model changes them when asked to
rewrite: generated text tends to come back nearly untouched, human text
gets edited heavily.  The package covers the whole pipeline: edit
distance and diffs, rewrite acquisition, a single-threshold classifier,
the calibration-gated training signal for an external fine-tuning
process, adversarial perturbations, corpus hygiene, and evaluation.
"""

from .runmeta import __version__
from .textdist import Span, apply_diff, diff, edit_count, levenshtein, render_diff, similarity
from .llm import (
    DEFAULT_PROMPT,
    HTTPBackend,
    IdentityBackend,
    RewritePrompt,
    RewriteRecord,
    RewriteRequest,
    ScriptedBackend,
    ShuffleBackend,
    TruncateBackend,
    batch_rewrite,
    rewrite,
    strip_preamble,
)
from .detector import (
    Classification,
    LabeledScore,
    ThresholdClassifier,
    auroc,
    classify,
    train_classifier,
)
from .gate import GateDecision, LossExample, derive_threshold, gate, gate_file_exchange
from .attacks import ATTACK_PROMPT, AttackSpec, attack_samples, decoherence, rewrite_attack
from .corpus import (
    PromptPool,
    SplitSpec,
    TextSample,
    build_corpus,
    clean_sample,
    sample_prompt,
    split,
    split_paragraphs,
)
from .evaluator import EvalReport, compare, domain_thresholds, evaluate, export_histograms

__all__ = [
    "__version__",
    "ATTACK_PROMPT",
    "AttackSpec",
    "Classification",
    "DEFAULT_PROMPT",
    "EvalReport",
    "GateDecision",
    "HTTPBackend",
    "IdentityBackend",
    "LabeledScore",
    "LossExample",
    "PromptPool",
    "RewritePrompt",
    "RewriteRecord",
    "RewriteRequest",
    "ScriptedBackend",
    "ShuffleBackend",
    "Span",
    "SplitSpec",
    "TextSample",
    "ThresholdClassifier",
    "TruncateBackend",
    "apply_diff",
    "attack_samples",
    "auroc",
    "batch_rewrite",
    "build_corpus",
    "classify",
    "clean_sample",
    "compare",
    "decoherence",
    "derive_threshold",
    "diff",
    "domain_thresholds",
    "edit_count",
    "evaluate",
    "export_histograms",
    "gate",
    "gate_file_exchange",
    "levenshtein",
    "render_diff",
    "rewrite",
    "rewrite_attack",
    "sample_prompt",
    "similarity",
    "split",
    "split_paragraphs",
    "strip_preamble",
    "train_classifier",
]
