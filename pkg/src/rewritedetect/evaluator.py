"""Experiment harness: per-domain AUROC reports, comparisons, histograms.

A report has one row per domain plus AVERAGE and STD rows computed across
domains (each domain weighted once; STD is the sample standard deviation,
n-1).  Domains where the test slice has a single label are excluded from
rows and surfaced as warnings instead.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .detector import LabeledScore, ThresholdClassifier, auroc
from .llm import RewriteRecord
from .corpus import TextSample
from .runmeta import timestamp as _default_timestamp

EvalRow = tuple[RewriteRecord, str, str]  # (record, label, domain)


@dataclass(frozen=True)
class ReportRow:
    domain: str
    auroc: float
    n_human: int
    n_ai: int


@dataclass
class EvalReport:
    rows: list[ReportRow]
    average: float
    std: float
    metadata: dict
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "rows": [
                {"domain": r.domain, "auroc": r.auroc, "n_human": r.n_human, "n_ai": r.n_ai}
                for r in self.rows
            ],
            "average": self.average,
            "std": self.std,
            "metadata": self.metadata,
            "warnings": self.warnings,
        }

    @classmethod
    def from_json(cls, d: dict) -> "EvalReport":
        return cls(
            rows=[
                ReportRow(r["domain"], float(r["auroc"]), int(r["n_human"]), int(r["n_ai"]))
                for r in d["rows"]
            ],
            average=float(d["average"]),
            std=float(d["std"]),
            metadata=d.get("metadata", {}),
            warnings=list(d.get("warnings", [])),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        return cls.from_json(json.loads(Path(path).read_text()))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["domain", "auroc", "n_human", "n_ai"])
            for r in self.rows:
                writer.writerow([r.domain, f"{r.auroc:.6f}", r.n_human, r.n_ai])
            writer.writerow(["AVERAGE", f"{self.average:.6f}", "", ""])
            writer.writerow(["STD", f"{self.std:.6f}", "", ""])


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def evaluate(
    rows: Iterable[EvalRow],
    model: ThresholdClassifier | None = None,
    *,
    detector_id: str | None = None,
    corpus_id: str | None = None,
    attack_kind: str | None = None,
    when: str | None = None,
) -> EvalReport:
    """Per-domain AUROC over (record, label, domain) rows.

    Deterministic and order-invariant: domains are reported sorted by
    name.  ``model`` is not needed for AUROC (which is threshold-free) and
    only feeds the report metadata.
    """
    by_domain: dict[str, list[LabeledScore]] = {}
    for record, label, domain in rows:
        if label not in ("human", "ai"):
            raise ValueError(f"bad label {label!r} for sample {record.sample_id!r}")
        by_domain.setdefault(domain, []).append(
            LabeledScore(record.similarity, 1 if label == "ai" else 0)
        )
    report_rows = []
    warnings = []
    for domain in sorted(by_domain):
        scores = by_domain[domain]
        n_ai = sum(1 for s in scores if s.label == 1)
        n_human = len(scores) - n_ai
        if n_ai == 0 or n_human == 0:
            warnings.append(f"domain {domain!r} has a single label; excluded from rows")
            continue
        report_rows.append(ReportRow(domain, auroc(scores), n_human, n_ai))
    if not report_rows:
        raise ValueError("no domain with both labels; nothing to evaluate")
    average, std = _mean_std([r.auroc for r in report_rows])
    metadata = {
        "detector_id": detector_id,
        "corpus_id": corpus_id,
        "attack_kind": attack_kind,
        "timestamp": when if when is not None else _default_timestamp(),
    }
    if model is not None:
        metadata["model"] = {"weight": model.weight, "threshold": model.threshold}
    return EvalReport(rows=report_rows, average=average, std=std,
                      metadata=metadata, warnings=warnings)


def rows_from_samples(
    records: Sequence[RewriteRecord], samples: Sequence[TextSample]
) -> list[EvalRow]:
    """Join rewrite records with their samples' label and domain by id."""
    by_id = {s.id: s for s in samples}
    rows = []
    for record in records:
        sample = by_id.get(record.sample_id)
        if sample is None:
            raise ValueError(f"record {record.sample_id!r} has no matching sample")
        rows.append((record, sample.label, sample.domain))
    return rows


# ---------------------------------------------------------------------------
# report comparison
# ---------------------------------------------------------------------------

@dataclass
class ComparisonTable:
    domains: list[str]
    names: list[str]
    cells: dict[str, list[float | None]]  # domain -> one auroc per report
    deltas: dict[str, list[float | None]]  # domain -> delta vs baseline
    average_delta: list[float | None]

    def render(self) -> str:
        width = max([len(d) for d in self.domains] + [len("AVERAGE"), 6])
        header = "domain".ljust(width) + "".join(f"  {n:>18}" for n in self.names)
        lines = [header]
        for domain in self.domains:
            cells = self.cells[domain]
            deltas = self.deltas[domain]
            line = domain.ljust(width)
            for value, delta in zip(cells, deltas):
                if value is None:
                    line += f"  {'absent':>18}"
                elif delta is None:
                    line += f"  {value:8.4f} {'(n/a)':>9}"
                else:
                    line += f"  {value:8.4f} ({delta:+7.4f})"
            lines.append(line)
        avg = "AVERAGE".ljust(width)
        for delta in self.average_delta:
            avg += f"  {'':8s} ({delta:+7.4f})" if delta is not None else f"  {'absent':>18}"
        lines.append(avg)
        return "\n".join(lines)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            header = ["domain"]
            for name in self.names:
                header += [name, f"{name}_delta"]
            writer.writerow(header)
            for domain in self.domains:
                row = [domain]
                for value, delta in zip(self.cells[domain], self.deltas[domain]):
                    row += ["" if value is None else f"{value:.6f}",
                            "" if delta is None else f"{delta:.6f}"]
                writer.writerow(row)


def compare(reports: Sequence[EvalReport], baseline: int = 0) -> ComparisonTable:
    """Align reports over the union of domains with deltas vs a baseline."""
    if len(reports) < 2:
        raise ValueError("compare needs at least two reports")
    names = [
        str(r.metadata.get("detector_id") or r.metadata.get("attack_kind") or f"report{i}")
        for i, r in enumerate(reports)
    ]
    domains = sorted({row.domain for r in reports for row in r.rows})
    lookup = [{row.domain: row.auroc for row in r.rows} for r in reports]
    cells: dict[str, list[float | None]] = {}
    deltas: dict[str, list[float | None]] = {}
    for domain in domains:
        cells[domain] = [table.get(domain) for table in lookup]
        base = lookup[baseline].get(domain)
        deltas[domain] = [
            None if (v is None or base is None) else v - base for v in cells[domain]
        ]
    average_delta = [r.average - reports[baseline].average for r in reports]
    return ComparisonTable(domains=domains, names=names, cells=cells,
                           deltas=deltas, average_delta=average_delta)


# ---------------------------------------------------------------------------
# histogram export (similarity distributions per domain and class)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HistogramExport:
    domain: str
    cls: str  # "human" | "ai"
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]


def export_histograms(rows: Iterable[EvalRow], bins: int = 10) -> list[HistogramExport]:
    """Histogram similarity scores per (domain, class) over shared [0, 1] edges."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    edges = np.linspace(0.0, 1.0, bins + 1)
    by_key: dict[tuple[str, str], list[float]] = {}
    for record, label, domain in rows:
        by_key.setdefault((domain, label), []).append(record.similarity)
    exports = []
    for (domain, label) in sorted(by_key):
        counts, _ = np.histogram(by_key[(domain, label)], bins=edges)
        exports.append(
            HistogramExport(domain, label, tuple(edges.tolist()), tuple(int(c) for c in counts))
        )
    return exports


def write_histograms_csv(path: str | Path, exports: Sequence[HistogramExport]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain", "class", "bin_lo", "bin_hi", "count"])
        for export in exports:
            edges = export.bin_edges
            for i, count in enumerate(export.counts):
                writer.writerow(
                    [export.domain, export.cls, f"{edges[i]:.6f}", f"{edges[i + 1]:.6f}", count]
                )


# ---------------------------------------------------------------------------
# per-domain optimal thresholds (single-threshold separability diagnostic)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainThreshold:
    domain: str
    threshold: float
    youden_j: float


@dataclass
class ThresholdSpread:
    entries: list[DomainThreshold]
    std: float


def domain_thresholds(rows: Iterable[EvalRow]) -> ThresholdSpread:
    """Per-domain Youden-J-optimal thresholds and their spread across domains.

    The rule is score >= threshold predicts AI; among maximizers the
    smallest candidate threshold wins, making the diagnostic deterministic.
    A shrinking spread means one shared threshold works across domains.
    """
    by_domain: dict[str, list[LabeledScore]] = {}
    for record, label, domain in rows:
        by_domain.setdefault(domain, []).append(
            LabeledScore(record.similarity, 1 if label == "ai" else 0)
        )
    entries = []
    for domain in sorted(by_domain):
        scores = by_domain[domain]
        n_ai = sum(1 for s in scores if s.label == 1)
        n_human = len(scores) - n_ai
        if n_ai == 0 or n_human == 0:
            continue
        best_j = -math.inf
        best_thr = math.nan
        for candidate in sorted({s.score for s in scores}):
            tpr = sum(1 for s in scores if s.label == 1 and s.score >= candidate) / n_ai
            fpr = sum(1 for s in scores if s.label == 0 and s.score >= candidate) / n_human
            j = tpr - fpr
            if j > best_j:
                best_j = j
                best_thr = candidate
        entries.append(DomainThreshold(domain, best_thr, best_j))
    thresholds = [e.threshold for e in entries]
    std = float(np.std(thresholds, ddof=1)) if len(thresholds) > 1 else 0.0
    return ThresholdSpread(entries=entries, std=std)
