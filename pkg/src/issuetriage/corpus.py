"""Ingestion of labeled issue-report CSVs and per-repository train/test splits."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


class Label(enum.Enum):
    """Closed three-way issue category."""

    BUG = "bug"
    FEATURE = "feature"
    QUESTION = "question"


#: Canonical (ascending) label order, used for deterministic iteration and tie-breaks.
LABELS = (Label.BUG, Label.FEATURE, Label.QUESTION)

_LABEL_BY_VALUE = {label.value: label for label in LABELS}


class CorpusError(ValueError):
    """Raised for unreadable or invalid issue-report data."""


def parse_strict_label(text: str) -> Label:
    """Parse a dataset label cell; accepts the canonical names modulo case/whitespace."""
    try:
        return _LABEL_BY_VALUE[text.strip().lower()]
    except KeyError:
        raise CorpusError(f"unknown label {text!r}") from None


@dataclass(frozen=True)
class IssueRecord:
    """One labeled issue report, fields exactly as read from the source file."""

    repository: str
    label: Label
    title: str
    body: str


@dataclass
class RepoSplit:
    """Train/test records of a single repository, in source-file order."""

    repository: str
    train: list[IssueRecord] = field(default_factory=list)
    test: list[IssueRecord] = field(default_factory=list)


DEFAULT_COLUMNS = ("repository", "label", "title", "body")


def load_csv(path: str | Path, columns: Sequence[str] = DEFAULT_COLUMNS) -> list[IssueRecord]:
    """Read labeled issue reports from a CSV file with a header row.

    ``columns`` names the repository, label, title and body columns, in that
    role order. Field values are preserved byte-for-byte (no cleaning here);
    missing title/body cells become empty strings. Quoted fields may contain
    newlines, so error messages report the CSV *record* number, counting the
    header as row 1.
    """
    path = Path(path)
    if len(columns) != 4:
        raise ValueError("columns must name exactly (repository, label, title, body)")
    if not path.is_file():
        raise CorpusError(f"no such file: {path}")
    repo_col, label_col, title_col, body_col = columns

    records: list[IssueRecord] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CorpusError(f"{path}: empty file, expected a header row")
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise CorpusError(f"{path}: missing required column(s): {', '.join(missing)}")
        for row_num, row in enumerate(reader, start=2):
            repository = row.get(repo_col) or ""
            if not repository:
                raise CorpusError(f"{path}: empty repository at row {row_num}")
            raw_label = row.get(label_col) or ""
            try:
                label = parse_strict_label(raw_label)
            except CorpusError:
                raise CorpusError(f"{path}: unknown label {raw_label!r} at row {row_num}") from None
            records.append(
                IssueRecord(
                    repository=repository,
                    label=label,
                    title=row.get(title_col) or "",
                    body=row.get(body_col) or "",
                )
            )
    return records


def segment_by_repo(
    records: Sequence[IssueRecord],
    role: str,
    prior: Sequence[RepoSplit] | None = None,
) -> list[RepoSplit]:
    """Partition records by repository, populating the ``role`` side of each split.

    ``role`` is ``"train"`` or ``"test"``. Passing ``prior`` merges into
    existing splits without mutating them; repositories first seen here are
    appended in input order, and record order is preserved throughout.
    """
    if role not in ("train", "test"):
        raise ValueError(f"role must be 'train' or 'test', got {role!r}")
    ordered = [RepoSplit(s.repository, list(s.train), list(s.test)) for s in (prior or [])]
    by_repo = {s.repository: s for s in ordered}
    for rec in records:
        split = by_repo.get(rec.repository)
        if split is None:
            split = RepoSplit(rec.repository)
            by_repo[rec.repository] = split
            ordered.append(split)
        (split.train if role == "train" else split.test).append(rec)
    return ordered


def composition(records: Sequence[IssueRecord]) -> dict[tuple[str, Label], int]:
    """Count records per (repository, label) pair, useful for sanity-printing."""
    counts: dict[tuple[str, Label], int] = {}
    for rec in records:
        key = (rec.repository, rec.label)
        counts[key] = counts.get(key, 0) + 1
    return counts
