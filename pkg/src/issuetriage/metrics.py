"""One-vs-rest confusion counts, precision/recall/F1, and report rendering.

Zero-division convention: any 0/0 score is defined as 0. Averages are
unweighted (macro) means — over the three labels within a repository, and
over repositories for the overall rows. Full precision is kept internally;
rounding to four decimals (round-half-to-even) happens only at rendering.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

from .classify import Prediction
from .corpus import LABELS, Label


@dataclass(frozen=True)
class LabelCounts:
    """One-vs-rest confusion counts for a single label."""

    label: Label
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class LabelScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    """Per-label counts and scores for one repository plus the macro average."""

    repository: str
    counts: Mapping[Label, LabelCounts]
    scores: Mapping[Label, LabelScores]
    average: LabelScores


@dataclass(frozen=True)
class OverallReport:
    """Cross-repository macro averages, per label and grand."""

    scores: Mapping[Label, LabelScores]
    average: LabelScores


def confusion(predictions: Sequence[Prediction]) -> dict[Label, LabelCounts]:
    """Count one-vs-rest TP/FP/FN/TN per label.

    A prediction that failed to parse (``predicted is None``) never matches
    any label, so it counts as FN for its expected label and TN elsewhere.
    """
    if not predictions:
        raise ValueError("cannot build a confusion matrix from zero predictions")
    counts = {}
    for label in LABELS:
        tp = fp = fn = tn = 0
        for pred in predictions:
            if pred.expected is label:
                if pred.predicted is label:
                    tp += 1
                else:
                    fn += 1
            elif pred.predicted is label:
                fp += 1
            else:
                tn += 1
        counts[label] = LabelCounts(label=label, tp=tp, fp=fp, fn=fn, tn=tn)
    return counts


def scores(counts: LabelCounts) -> LabelScores:
    """Precision, recall and F1 from counts; 0/0 is defined as 0."""
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return LabelScores(precision=precision, recall=recall, f1=f1)


def _mean_scores(items: Sequence[LabelScores]) -> LabelScores:
    n = len(items)
    return LabelScores(
        precision=sum(s.precision for s in items) / n,
        recall=sum(s.recall for s in items) / n,
        f1=sum(s.f1 for s in items) / n,
    )


def report_from_counts(repository: str, counts: Mapping[Label, LabelCounts]) -> EvalReport:
    label_scores = {label: scores(counts[label]) for label in LABELS}
    return EvalReport(
        repository=repository,
        counts=dict(counts),
        scores=label_scores,
        average=_mean_scores([label_scores[label] for label in LABELS]),
    )


def repo_report(predictions: Sequence[Prediction], repository: str) -> EvalReport:
    """Scores per label plus the unweighted macro average for one repository."""
    return report_from_counts(repository, confusion(predictions))


def overall_report(reports: Sequence[EvalReport]) -> OverallReport:
    """Unweighted mean of each label's scores across repositories, plus grand mean."""
    if not reports:
        raise ValueError("overall report needs at least one repository report")
    label_scores = {
        label: _mean_scores([rep.scores[label] for rep in reports]) for label in LABELS
    }
    return OverallReport(
        scores=label_scores,
        average=_mean_scores([label_scores[label] for label in LABELS]),
    )


@dataclass(frozen=True)
class RenderedTables:
    metrics_text: str
    metrics_csv: str
    confusion_text: str
    confusion_csv: str


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def render_tables(reports: Sequence[EvalReport]) -> RenderedTables:
    """Render the metric and confusion tables as aligned text and CSV.

    Output is deterministic: repositories keep their input order, labels the
    canonical order, and values are printed with four decimals
    (round-half-to-even).
    """
    overall = overall_report(reports)

    metric_rows = [("repository", "label", "precision", "recall", "f1")]
    for rep in reports:
        for label in LABELS:
            s = rep.scores[label]
            metric_rows.append((rep.repository, label.value, _fmt(s.precision), _fmt(s.recall), _fmt(s.f1)))
        a = rep.average
        metric_rows.append((rep.repository, "average", _fmt(a.precision), _fmt(a.recall), _fmt(a.f1)))
    for label in LABELS:
        s = overall.scores[label]
        metric_rows.append(("overall", label.value, _fmt(s.precision), _fmt(s.recall), _fmt(s.f1)))
    a = overall.average
    metric_rows.append(("overall", "average", _fmt(a.precision), _fmt(a.recall), _fmt(a.f1)))

    confusion_rows = [("repository", "label", "tp", "fp", "fn", "tn")]
    for rep in reports:
        for label in LABELS:
            c = rep.counts[label]
            confusion_rows.append((rep.repository, label.value, str(c.tp), str(c.fp), str(c.fn), str(c.tn)))

    return RenderedTables(
        metrics_text=_align(metric_rows),
        metrics_csv=_to_csv(metric_rows),
        confusion_text=_align(confusion_rows),
        confusion_csv=_to_csv(confusion_rows),
    )


def _align(rows: Sequence[tuple[str, ...]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def _to_csv(rows: Sequence[tuple[str, ...]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()
