"""One command-line entry point for the full detection pipeline.

Every subcommand is reproducible: all seeds are explicit (or defaulted
and echoed), mock backends are pure, and each command writes a
``<out>.run.json`` sidecar with the resolved config, its hash, and the
seeds that were in effect.  Config precedence: flags > ``--config`` JSON
file > built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date
from pathlib import Path

from . import attacks, corpus, detector, evaluator, gate, llm, textdist
from .runmeta import write_sidecar

_BACKEND_DEFAULTS = {
    "backend": "mock:identity",
    "backend_seed": 0,
    "truncate_chars": 100,
    "scripted_file": None,
    "base_url": None,
    "model": "gpt-3.5-turbo",
    "credential_env": llm.DEFAULT_CREDENTIAL_ENV,
    "timeout": llm.DEFAULT_TIMEOUT,
    "temperature": 0.0,
    "max_attempts": llm.DEFAULT_MAX_ATTEMPTS,
    "backoff": llm.DEFAULT_BACKOFF,
}

_PROMPT_DEFAULTS = {
    "prompt": None,
    "prompt_pool": None,
    "pool_seed": 0,
}


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", help="mock:identity|mock:shuffle|mock:truncate|mock:scripted|http")
    p.add_argument("--backend-seed", type=int, dest="backend_seed", help="seed for mock:shuffle")
    p.add_argument("--truncate-chars", type=int, dest="truncate_chars", help="k for mock:truncate")
    p.add_argument("--scripted-file", dest="scripted_file",
                   help="JSON file {sample_id: output} for mock:scripted")
    p.add_argument("--base-url", dest="base_url", help="HTTP backend base URL")
    p.add_argument("--model", help="model name sent to the HTTP backend")
    p.add_argument("--credential-env", dest="credential_env",
                   help="env var holding the API credential")
    p.add_argument("--timeout", type=float, help="HTTP timeout in seconds")
    p.add_argument("--temperature", type=float, help="sampling temperature (default 0)")
    p.add_argument("--max-attempts", type=int, dest="max_attempts",
                   help="total tries per request")
    p.add_argument("--backoff", type=float, help="base retry backoff in seconds")


def _add_prompt_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--prompt", help="fixed rewrite instruction")
    p.add_argument("--prompt-pool", dest="prompt_pool",
                   help="prompt pool file (one prompt per line)")
    p.add_argument("--pool-seed", type=int, dest="pool_seed", help="prompt-pool sampling seed")


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge flags over config-file values over defaults."""
    resolved = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        file_config = json.loads(Path(config_path).read_text())
        unknown = set(file_config) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        resolved.update(file_config)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _make_backend(cfg: dict) -> llm.RewriteBackend:
    spec = cfg["backend"]
    if spec == "http":
        if not cfg["base_url"]:
            raise ValueError("http backend requires --base-url")
        return llm.HTTPBackend(
            base_url=cfg["base_url"],
            model_name=cfg["model"],
            credential_env=cfg["credential_env"],
            timeout=cfg["timeout"],
        )
    if spec == "mock:identity":
        return llm.IdentityBackend()
    if spec == "mock:shuffle":
        return llm.ShuffleBackend(seed=cfg["backend_seed"])
    if spec == "mock:truncate":
        return llm.TruncateBackend(cfg["truncate_chars"])
    if spec == "mock:scripted":
        if not cfg["scripted_file"]:
            raise ValueError("mock:scripted requires --scripted-file")
        outputs = json.loads(Path(cfg["scripted_file"]).read_text())
        return llm.ScriptedBackend(outputs)
    raise ValueError(f"unknown backend {spec!r}")


def _make_prompt_policy(cfg: dict):
    if cfg.get("prompt_pool"):
        pool = corpus.PromptPool.from_file(cfg["prompt_pool"], seed=cfg["pool_seed"])
        return lambda sample: corpus.sample_prompt(pool, sample.id)
    if cfg.get("prompt"):
        return llm.RewritePrompt(cfg["prompt"], id="cli")
    return llm.DEFAULT_PROMPT


def _seeds_of(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k.endswith("seed") or k.endswith("_seed")}


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_rewrite(args: argparse.Namespace) -> int:
    defaults = {
        **_BACKEND_DEFAULTS,
        **_PROMPT_DEFAULTS,
        "in_path": None,
        "out_path": None,
        "parallelism": 1,
        "strict": False,
    }
    cfg = _resolve(args, defaults)
    samples = corpus.read_samples(cfg["in_path"])
    backend = _make_backend(cfg)
    result = llm.batch_rewrite(
        samples,
        _make_prompt_policy(cfg),
        backend,
        parallelism=cfg["parallelism"],
        temperature=cfg["temperature"],
        max_attempts=cfg["max_attempts"],
        backoff=cfg["backoff"],
    )
    llm.write_records(cfg["out_path"], result.records)
    write_sidecar(cfg["out_path"], "rewrite", cfg, _seeds_of(cfg))
    if result.failures:
        failures_path = Path(str(cfg["out_path"]) + ".failures.jsonl")
        with open(failures_path, "w", encoding="utf-8") as fh:
            for failure in result.failures:
                fh.write(json.dumps(failure.__dict__, sort_keys=True) + "\n")
        print(
            f"{len(result.failures)} of {len(samples)} samples failed; "
            f"first: {result.failures[0].error}",
            file=sys.stderr,
        )
        if cfg["strict"] or not result.records:
            return 1
    print(json.dumps({"records": len(result.records), "failures": len(result.failures)}))
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    defaults = {
        **_BACKEND_DEFAULTS,
        "model_file": None,
        "text": None,
        "in_path": None,
        "prompt": None,
        "diff": False,
        "color": True,
    }
    cfg = _resolve(args, defaults)
    model = detector.ThresholdClassifier.load(cfg["model_file"])
    if cfg["text"] is not None:
        text = cfg["text"]
    elif cfg["in_path"]:
        text = Path(cfg["in_path"]).read_text(encoding="utf-8")
    else:
        raise ValueError("detect needs --text or --in")
    prompt = llm.RewritePrompt(cfg["prompt"], id="cli") if cfg["prompt"] else llm.DEFAULT_PROMPT
    backend = _make_backend(cfg)
    request = llm.RewriteRequest(
        prompt=prompt,
        text=text,
        model_name=cfg["model"] if cfg["backend"] == "http" else backend.model_name,
        temperature=cfg["temperature"],
        sample_id="detect",
    )
    rewritten = llm.rewrite(
        request, backend, max_attempts=cfg["max_attempts"], backoff=cfg["backoff"]
    )
    score = textdist.similarity(text, rewritten)
    verdict, probability = detector.classify(score, model)
    print(json.dumps(
        {"verdict": verdict, "probability": probability, "similarity": score},
        sort_keys=True,
    ))
    if cfg["diff"]:
        print(textdist.render_diff(textdist.diff(text, rewritten), color=cfg["color"]))
    return 0


def _read_labeled_scores(path: str) -> list[detector.LabeledScore]:
    data = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            row = json.loads(line)
            label = row["label"]
            if label in ("human", "ai"):
                label = 1 if label == "ai" else 0
            data.append(detector.LabeledScore(float(row["score"]), int(label)))
    return data


def _labeled_from_records(records_path: str, samples_path: str) -> list[detector.LabeledScore]:
    records = llm.read_records(records_path)
    samples = {s.id: s for s in corpus.read_samples(samples_path)}
    data = []
    for record in records:
        sample = samples.get(record.sample_id)
        if sample is None:
            raise ValueError(f"record {record.sample_id!r} has no matching sample")
        data.append(detector.LabeledScore(record.similarity, 1 if sample.label == "ai" else 0))
    return data


def _cmd_train(args: argparse.Namespace) -> int:
    defaults = {
        "records": None,
        "samples": None,
        "scores": None,
        "out_path": None,
        "learning_rate": 0.1,
        "max_iters": 10_000,
        "tol": 1e-12,
    }
    cfg = _resolve(args, defaults)
    if cfg["scores"]:
        data = _read_labeled_scores(cfg["scores"])
    elif cfg["records"] and cfg["samples"]:
        data = _labeled_from_records(cfg["records"], cfg["samples"])
    else:
        raise ValueError("train needs --scores, or --records with --samples")
    model = detector.train_classifier(
        data,
        learning_rate=cfg["learning_rate"],
        max_iters=int(cfg["max_iters"]),
        tol=cfg["tol"],
    )
    model.save(cfg["out_path"])
    write_sidecar(cfg["out_path"], "train", cfg, _seeds_of(cfg))
    print(json.dumps(
        {"weight": model.weight, "intercept": model.intercept, "threshold": model.threshold},
        sort_keys=True,
    ))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    defaults = {
        "records": None,
        "samples": None,
        "model_file": None,
        "report_json": None,
        "report_csv": None,
        "histograms_csv": None,
        "bins": 10,
        "detector_id": None,
        "corpus_id": None,
        "attack_kind": None,
    }
    cfg = _resolve(args, defaults)
    records = llm.read_records(cfg["records"])
    samples = corpus.read_samples(cfg["samples"])
    rows = evaluator.rows_from_samples(records, samples)
    model = (
        detector.ThresholdClassifier.load(cfg["model_file"]) if cfg["model_file"] else None
    )
    report = evaluator.evaluate(
        rows,
        model,
        detector_id=cfg["detector_id"],
        corpus_id=cfg["corpus_id"],
        attack_kind=cfg["attack_kind"],
    )
    spread = evaluator.domain_thresholds(rows)
    report.metadata["threshold_spread"] = {
        "std": spread.std,
        "per_domain": {e.domain: e.threshold for e in spread.entries},
    }
    report.save(cfg["report_json"])
    write_sidecar(cfg["report_json"], "eval", cfg, _seeds_of(cfg))
    if cfg["report_csv"]:
        report.write_csv(cfg["report_csv"])
    if cfg["histograms_csv"]:
        evaluator.write_histograms_csv(
            cfg["histograms_csv"], evaluator.export_histograms(rows, bins=int(cfg["bins"]))
        )
    print(json.dumps({"average": report.average, "std": report.std,
                      "domains": len(report.rows)}, sort_keys=True))
    return 0


def _cmd_attack(args: argparse.Namespace) -> int:
    defaults = {
        **_BACKEND_DEFAULTS,
        "kind": None,
        "seed": 0,
        "in_path": None,
        "out_path": None,
        "attack_prompt": None,
    }
    cfg = _resolve(args, defaults)
    samples = corpus.read_samples(cfg["in_path"])
    if cfg["kind"] == "decoherence":
        spec = attacks.AttackSpec(kind="decoherence", seed=cfg["seed"])
    elif cfg["kind"] == "rewrite":
        prompt = (
            llm.RewritePrompt(cfg["attack_prompt"], id="attack-cli")
            if cfg["attack_prompt"]
            else attacks.ATTACK_PROMPT
        )
        spec = attacks.AttackSpec(kind="rewrite", backend=_make_backend(cfg), prompt=prompt)
    else:
        raise ValueError("attack --kind must be decoherence or rewrite")
    attacked = attacks.attack_samples(samples, spec)
    corpus.write_samples(cfg["out_path"], attacked)
    write_sidecar(cfg["out_path"], "attack", cfg, {**_seeds_of(cfg), "seed": cfg["seed"]})
    print(json.dumps({"samples": len(attacked), "kind": cfg["kind"]}, sort_keys=True))
    return 0


def _cmd_gate(args: argparse.Namespace) -> int:
    defaults = {
        "in_path": None,
        "out_path": None,
        "threshold": None,
        "derive_threshold": False,
        "learning_rate": 0.1,
        "max_iters": 10_000,
        "tol": 1e-12,
    }
    cfg = _resolve(args, defaults)
    if cfg["derive_threshold"]:
        examples = gate.read_loss_examples(cfg["in_path"])
        threshold = gate.derive_threshold(
            examples,
            learning_rate=cfg["learning_rate"],
            max_iters=int(cfg["max_iters"]),
            tol=cfg["tol"],
        )
    elif cfg["threshold"] is not None:
        threshold = float(cfg["threshold"])
    else:
        raise ValueError("gate needs --threshold or --derive-threshold")
    summary = gate.gate_file_exchange(cfg["in_path"], cfg["out_path"], threshold)
    write_sidecar(cfg["out_path"], "gate", {**cfg, "threshold": threshold}, _seeds_of(cfg))
    print(json.dumps({**summary, "threshold": threshold}, sort_keys=True))
    return 0


def _cmd_build_corpus(args: argparse.Namespace) -> int:
    defaults = {
        "in_path": None,
        "out_path": None,
        "min_words": corpus.DEFAULT_MIN_PARAGRAPH_WORDS,
        "cutoff": corpus.CUTOFF_DATE.isoformat(),
        "prompt_pool": None,
        "pool_seed": 0,
    }
    cfg = _resolve(args, defaults)
    docs = []
    with open(cfg["in_path"], "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                docs.append(json.loads(line))
    pool = (
        corpus.PromptPool.from_file(cfg["prompt_pool"], seed=cfg["pool_seed"])
        if cfg["prompt_pool"]
        else None
    )
    result = corpus.build_corpus(
        docs,
        min_words=int(cfg["min_words"]),
        cutoff=date.fromisoformat(cfg["cutoff"]),
        pool=pool,
    )
    corpus.write_samples(cfg["out_path"], result.samples)
    write_sidecar(cfg["out_path"], "build-corpus", cfg, _seeds_of(cfg))
    if result.unknown_domains:
        print(f"note: domains outside the shipped list: {result.unknown_domains}",
              file=sys.stderr)
    print(json.dumps(
        {
            "samples": len(result.samples),
            "rejected": len(result.rejected),
            "warnings": len(result.warnings),
        },
        sort_keys=True,
    ))
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    defaults = {
        "in_path": None,
        "train_out": None,
        "test_out": None,
        "fraction": 0.7,
        "seed": 0,
    }
    cfg = _resolve(args, defaults)
    samples = corpus.read_samples(cfg["in_path"])
    result = corpus.split(
        samples, corpus.SplitSpec(train_fraction=cfg["fraction"], seed=cfg["seed"])
    )
    corpus.write_samples(cfg["train_out"], result.train)
    corpus.write_samples(cfg["test_out"], result.test)
    write_sidecar(cfg["train_out"], "split", cfg, {"seed": cfg["seed"]})
    print(json.dumps({"train": len(result.train), "test": len(result.test)}, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rewritedetect",
        description="Rewrite-based AI-generated-text detection pipelines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file (flags override it)")

    p = sub.add_parser("rewrite", help="rewrite samples and emit feature records")
    common(p)
    p.add_argument("--in", dest="in_path", required=True, help="TextSample JSONL")
    p.add_argument("--out", dest="out_path", required=True, help="RewriteRecord JSONL")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--strict", action=argparse.BooleanOptionalAction,
                   help="exit nonzero if any sample fails")
    _add_backend_flags(p)
    _add_prompt_flags(p)
    p.set_defaults(func=_cmd_rewrite)

    p = sub.add_parser("detect", help="classify one text")
    common(p)
    p.add_argument("--model-file", dest="model_file", required=True)
    p.add_argument("--text")
    p.add_argument("--in", dest="in_path", help="plain text file")
    p.add_argument("--diff", action=argparse.BooleanOptionalAction,
                   help="render the character diff")
    p.add_argument("--color", action=argparse.BooleanOptionalAction,
                   help="ANSI colors in the diff (default on)")
    _add_backend_flags(p)
    p.add_argument("--prompt", help="override the detection prompt")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("train", help="fit the threshold classifier")
    common(p)
    p.add_argument("--records", help="RewriteRecord JSONL")
    p.add_argument("--samples", help="TextSample JSONL with the labels")
    p.add_argument("--scores", help="LabeledScore JSONL {score, label}")
    p.add_argument("--out", dest="out_path", required=True, help="model JSON")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="per-domain AUROC report")
    common(p)
    p.add_argument("--records", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--model-file", dest="model_file")
    p.add_argument("--report-json", dest="report_json", required=True)
    p.add_argument("--report-csv", dest="report_csv")
    p.add_argument("--histograms-csv", dest="histograms_csv")
    p.add_argument("--bins", type=int)
    p.add_argument("--detector-id", dest="detector_id")
    p.add_argument("--corpus-id", dest="corpus_id")
    p.add_argument("--attack-kind", dest="attack_kind")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("attack", help="perturb AI rows of a sample file")
    common(p)
    p.add_argument("--kind", required=True, choices=["decoherence", "rewrite"])
    p.add_argument("--seed", type=int)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", dest="out_path", required=True)
    p.add_argument("--attack-prompt", dest="attack_prompt")
    _add_backend_flags(p)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("gate", help="calibration-gate a loss file")
    common(p)
    p.add_argument("--in", dest="in_path", required=True, help="LossExample JSONL")
    p.add_argument("--out", dest="out_path", required=True, help="GateDecision JSONL")
    p.add_argument("--threshold", type=float)
    p.add_argument("--derive-threshold", dest="derive_threshold",
                   action=argparse.BooleanOptionalAction,
                   help="derive the threshold from the input losses")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=_cmd_gate)

    p = sub.add_parser("build-corpus", help="split, clean and id raw documents")
    common(p)
    p.add_argument("--in", dest="in_path", required=True, help="raw document JSONL")
    p.add_argument("--out", dest="out_path", required=True, help="TextSample JSONL")
    p.add_argument("--min-words", type=int, dest="min_words")
    p.add_argument("--cutoff", help="human-data cutoff date (ISO)")
    _add_prompt_flags(p)
    p.set_defaults(func=_cmd_build_corpus)

    p = sub.add_parser("split", help="stratified train/test split")
    common(p)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--train-out", dest="train_out", required=True)
    p.add_argument("--test-out", dest="test_out", required=True)
    p.add_argument("--fraction", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_split)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (llm.RewriteError, gate.GateFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
