"""Metrics (weighted/macro F1, accuracy, Pearson), delta reports, and artifact emission.

Per-class F1 is 2*tp / (2*tp + fp + fn), contributing 0 when the denominator is
zero; weighted F1 averages per-class F1 with gold-support weights. Failed
records are excluded from metrics but surface in the failure count.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import UndefinedCorrelationError, ValidationError


def _get(record: Any, name: str):
    if isinstance(record, dict):
        return record.get(name)
    return getattr(record, name, None)


def _is_scored(record: Any) -> bool:
    return _get(record, "status") in (None, "ok") and _get(record, "predicted_label") is not None


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray  # gold rows x predicted columns

    def __post_init__(self):
        k = len(self.labels)
        if self.counts.shape != (k, k):
            raise ValidationError(f"confusion matrix shape {self.counts.shape} != ({k}, {k})")
        if np.any(self.counts < 0):
            raise ValidationError("confusion matrix counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_pairs(
        cls, golds: Sequence[str], preds: Sequence[str], labels: Sequence[str] | None = None
    ) -> "ConfusionMatrix":
        if len(golds) != len(preds):
            raise ValidationError("gold/prediction length mismatch")
        if labels is None:
            labels = sorted(set(golds) | set(preds))
        index = {lab: i for i, lab in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for g, p in zip(golds, preds):
            counts[index[g], index[p]] += 1
        return cls(tuple(labels), counts)


@dataclass(frozen=True)
class MetricReport:
    weighted_f1: float
    macro_f1: float
    accuracy: float
    per_class: dict[str, dict[str, float]]  # label -> precision/recall/f1/support
    failure_count: int = 0

    @property
    def support(self) -> int:
        return int(sum(c["support"] for c in self.per_class.values()))

    def to_json_obj(self) -> dict:
        return {
            "weighted_f1": self.weighted_f1,
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "per_class": self.per_class,
            "failure_count": self.failure_count,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MetricReport":
        return cls(
            weighted_f1=obj["weighted_f1"],
            macro_f1=obj["macro_f1"],
            accuracy=obj["accuracy"],
            per_class={k: dict(v) for k, v in obj["per_class"].items()},
            failure_count=obj["failure_count"],
        )


def metrics_from_matrix(matrix: ConfusionMatrix, failures: int = 0) -> MetricReport:
    tp = np.diag(matrix.counts).astype(np.float64)
    gold = matrix.counts.sum(axis=1).astype(np.float64)
    pred = matrix.counts.sum(axis=0).astype(np.float64)
    fp = pred - tp
    fn = gold - tp
    per_class: dict[str, dict[str, float]] = {}
    f1s = np.zeros(len(matrix.labels))
    for i, label in enumerate(matrix.labels):
        precision = tp[i] / pred[i] if pred[i] > 0 else 0.0
        recall = tp[i] / gold[i] if gold[i] > 0 else 0.0
        denom = 2 * tp[i] + fp[i] + fn[i]
        f1 = (2 * tp[i] / denom) if denom > 0 else 0.0
        f1s[i] = f1
        per_class[label] = {
            "precision": float(precision),
            "recall": float(recall),
            "f1": float(f1),
            "support": float(gold[i]),
        }
    total = gold.sum()
    weighted = float((f1s * gold).sum() / total) if total > 0 else 0.0
    macro = float(f1s.mean()) if len(f1s) else 0.0
    acc = float(tp.sum() / total) if total > 0 else 0.0
    return MetricReport(weighted, macro, acc, per_class, failures)


def metrics_from_pairs(
    golds: Sequence[str],
    preds: Sequence[str],
    labels: Sequence[str] | None = None,
    failures: int = 0,
) -> MetricReport:
    return metrics_from_matrix(ConfusionMatrix.from_pairs(golds, preds, labels), failures)


def compute_report(records: Sequence[Any], labels: Sequence[str] | None = None) -> MetricReport:
    """MetricReport over scored records; failed records count toward failure_count."""
    scored = [r for r in records if _is_scored(r)]
    failures = len(records) - len(scored)
    if not scored:
        raise ValidationError("no scored records to evaluate")
    golds = [_get(r, "gold_label") for r in scored]
    preds = [_get(r, "predicted_label") for r in scored]
    return metrics_from_pairs(golds, preds, labels, failures)


def weighted_f1(records: Sequence[Any]) -> float:
    return compute_report(records).weighted_f1


def macro_f1(records: Sequence[Any]) -> float:
    return compute_report(records).macro_f1


def accuracy(records: Sequence[Any]) -> float:
    return compute_report(records).accuracy


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson r; undefined (error) when either series has zero variance."""
    if len(xs) != len(ys):
        raise ValidationError(f"series lengths differ: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValidationError("pearson needs at least two points")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(np.dot(dx, dx))
    vy = float(np.dot(dy, dy))
    if vx == 0.0 or vy == 0.0:
        raise UndefinedCorrelationError("zero variance makes the correlation undefined")
    return float(np.dot(dx, dy) / math.sqrt(vx * vy))


@dataclass(frozen=True)
class DeltaRow:
    language: str
    baseline_f1: float
    treatment_f1: float
    delta: float


@dataclass(frozen=True)
class DeltaReport:
    rows: tuple[DeltaRow, ...]
    n_improved: int
    n_degraded: int
    frac_improved: float
    mean_abs_delta_improved: float
    mean_abs_delta_degraded: float

    def to_json_obj(self) -> dict:
        return {
            "rows": [
                {
                    "language": r.language,
                    "baseline_f1": r.baseline_f1,
                    "treatment_f1": r.treatment_f1,
                    "delta": r.delta,
                }
                for r in self.rows
            ],
            "summary": {
                "n_improved": self.n_improved,
                "n_degraded": self.n_degraded,
                "frac_improved": self.frac_improved,
                "mean_abs_delta_improved": self.mean_abs_delta_improved,
                "mean_abs_delta_degraded": self.mean_abs_delta_degraded,
            },
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DeltaReport":
        rows = tuple(
            DeltaRow(r["language"], r["baseline_f1"], r["treatment_f1"], r["delta"])
            for r in obj["rows"]
        )
        s = obj["summary"]
        return cls(
            rows,
            s["n_improved"],
            s["n_degraded"],
            s["frac_improved"],
            s["mean_abs_delta_improved"],
            s["mean_abs_delta_degraded"],
        )


def _group_by_language(records: Sequence[Any]) -> dict[str, list[Any]]:
    groups: dict[str, list[Any]] = {}
    for r in records:
        groups.setdefault(_get(r, "language") or "und", []).append(r)
    return groups


def delta_report(baseline: Sequence[Any], treatment: Sequence[Any]) -> DeltaReport:
    """Per-language delta of weighted F1 (treatment - baseline) plus summary stats."""
    base_ids = {_get(r, "query_id") for r in baseline}
    treat_ids = {_get(r, "query_id") for r in treatment}
    if base_ids != treat_ids:
        missing = sorted(x for x in base_ids.symmetric_difference(treat_ids) if x is not None)
        raise ValidationError(f"query sets differ; symmetric difference: {missing}")
    base_groups = _group_by_language(baseline)
    treat_groups = _group_by_language(treatment)
    rows = []
    for lang in sorted(base_groups):
        b = compute_report(base_groups[lang]).weighted_f1
        t = compute_report(treat_groups[lang]).weighted_f1
        rows.append(DeltaRow(lang, b, t, t - b))
    improved = [r.delta for r in rows if r.delta > 0]
    degraded = [r.delta for r in rows if r.delta < 0]
    n = len(rows)
    return DeltaReport(
        rows=tuple(rows),
        n_improved=len(improved),
        n_degraded=len(degraded),
        frac_improved=len(improved) / n if n else 0.0,
        mean_abs_delta_improved=float(np.mean(np.abs(improved))) if improved else 0.0,
        mean_abs_delta_degraded=float(np.mean(np.abs(degraded))) if degraded else 0.0,
    )


@dataclass(frozen=True)
class EvalReport:
    """Per-language metric rows plus the overall aggregate."""

    per_language: dict[str, MetricReport]
    overall: MetricReport

    def to_json_obj(self) -> dict:
        return {
            "per_language": {k: v.to_json_obj() for k, v in sorted(self.per_language.items())},
            "overall": self.overall.to_json_obj(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EvalReport":
        return cls(
            per_language={
                k: MetricReport.from_json_obj(v) for k, v in obj["per_language"].items()
            },
            overall=MetricReport.from_json_obj(obj["overall"]),
        )


def eval_report(records: Sequence[Any], labels: Sequence[str] | None = None) -> EvalReport:
    per_language = {
        lang: compute_report(group, labels)
        for lang, group in _group_by_language(records).items()
    }
    return EvalReport(per_language=per_language, overall=compute_report(records, labels))


_METRIC_COLUMNS = ("weighted_f1", "macro_f1", "accuracy")


def _eval_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["language", *_METRIC_COLUMNS, "support", "failures"])
    for lang in sorted(report.per_language):
        m = report.per_language[lang]
        writer.writerow([lang, m.weighted_f1, m.macro_f1, m.accuracy, m.support, m.failure_count])
    return buf.getvalue()


def _eval_tsv(report: EvalReport) -> str:
    lines = ["language\tvalue\tseries"]
    for lang in sorted(report.per_language):
        m = report.per_language[lang]
        for col in _METRIC_COLUMNS:
            lines.append(f"{lang}\t{getattr(m, col)}\t{col}")
    return "\n".join(lines) + "\n"


def _delta_csv(report: DeltaReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["language", "baseline_f1", "treatment_f1", "delta"])
    for r in report.rows:
        writer.writerow([r.language, r.baseline_f1, r.treatment_f1, r.delta])
    return buf.getvalue()


def _delta_tsv(report: DeltaReport) -> str:
    lines = ["language\tvalue\tseries"]
    for r in report.rows:
        lines.append(f"{r.language}\t{r.delta}\tdelta")
    return "\n".join(lines) + "\n"


def emit(
    report: EvalReport | DeltaReport,
    out_dir: str | Path,
    formats: Sequence[str] = ("csv", "json", "tsv"),
    name: str = "report",
) -> list[Path]:
    """Write the report as CSV, JSON, and/or plot-data TSV; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        path = out / f"{name}.{fmt}"
        if fmt == "json":
            path.write_text(
                json.dumps(report.to_json_obj(), indent=2, ensure_ascii=False) + "\n",
                encoding="utf-8",
            )
        elif fmt == "csv":
            body = _eval_csv(report) if isinstance(report, EvalReport) else _delta_csv(report)
            path.write_text(body, encoding="utf-8")
        elif fmt == "tsv":
            body = _eval_tsv(report) if isinstance(report, EvalReport) else _delta_tsv(report)
            path.write_text(body, encoding="utf-8")
        else:
            raise ValidationError(f"unknown report format {fmt!r}")
        written.append(path)
    return written
