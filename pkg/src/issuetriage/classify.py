"""Per-repository classification: routing, response parsing, and the offline baseline.

The fine-tuned engine sends one single-token, temperature-0 chat completion
per test issue through the gateway; the baseline engine is a multinomial
naive Bayes over whitespace tokens, trained on the split's own training side,
touching no network. Either way there is exactly one Prediction per test
issue, in input order, and a response that cannot be parsed into a label is
recorded as a miss rather than raised.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import LABELS, Label, RepoSplit
from .gateway import AuthError, CompletionRequest, Gateway, GatewayError
from .promptgen import build_user_message
from .textclean import CleanedIssue, CleaningConfig, clean_issue

ENGINE_FINETUNED = "finetuned"
ENGINE_BASELINE = "baseline"

_LABEL_BY_VALUE = {label.value: label for label in LABELS}


def parse_label(raw: str) -> Label | None:
    """Parse a model response into a label, or None if it does not match.

    Normalization is limited to trimming whitespace, lowercasing, and
    stripping surrounding quotes/periods; anything short of an exact match
    after that (e.g. "bugs") is a parse failure.
    """
    text = raw.strip().lower().strip("\"'.").strip()
    return _LABEL_BY_VALUE.get(text)


@dataclass(frozen=True)
class Prediction:
    """Outcome of classifying one test issue."""

    issue_index: int
    expected: Label
    predicted: Label | None
    raw_response: str
    engine: str


@dataclass
class RegistryEntry:
    cleaning_method: str
    epochs: int | str = "auto"
    model_id: str | None = None


@dataclass
class ModelRegistry:
    """Maps each repository under evaluation to its model and settings."""

    entries: dict[str, RegistryEntry]

    def require(self, repository: str) -> RegistryEntry:
        try:
            return self.entries[repository]
        except KeyError:
            raise LookupError(f"no registry entry for repository {repository!r}") from None


def load_registry(path: str | Path) -> ModelRegistry:
    """Read a registry file (one section per repository, key=value pairs)."""
    parser = configparser.ConfigParser(interpolation=None)
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        parser.read_file(fh)
    entries = {}
    for repo in parser.sections():
        section = parser[repo]
        epochs_raw = section.get("epochs", "auto")
        epochs: int | str = "auto" if epochs_raw == "auto" else int(epochs_raw)
        entries[repo] = RegistryEntry(
            cleaning_method=section.get("cleaning_method", "method1"),
            epochs=epochs,
            model_id=section.get("model_id") or None,
        )
    return ModelRegistry(entries=entries)


def save_registry(registry: ModelRegistry, path: str | Path) -> None:
    parser = configparser.ConfigParser(interpolation=None)
    for repo, entry in registry.entries.items():
        parser[repo] = {
            "cleaning_method": entry.cleaning_method,
            "epochs": str(entry.epochs),
        }
        if entry.model_id:
            parser[repo]["model_id"] = entry.model_id
    with Path(path).open("w", encoding="utf-8") as fh:
        parser.write(fh)


class BaselineError(ValueError):
    """Raised when the baseline cannot be trained on the given corpus."""


def _tokens(issue: CleanedIssue) -> list[str]:
    return issue.text.split()


@dataclass(frozen=True)
class BaselineModel:
    """Multinomial naive Bayes with Laplace smoothing over whitespace tokens.

    ``log_likelihood[label][token]`` holds log P(token | label) for every
    vocabulary token; an unseen token falls back to the same smoothed formula
    with a zero count (``log_unseen``), so no token ever has zero likelihood.
    """

    alpha: float
    labels: tuple[Label, ...]
    vocabulary: tuple[str, ...]
    log_priors: dict[Label, float]
    log_likelihood: dict[Label, dict[str, float]]
    log_unseen: dict[Label, float]

    def score(self, tokens: Sequence[str]) -> dict[Label, float]:
        posteriors = {}
        for label in self.labels:
            likelihoods = self.log_likelihood[label]
            unseen = self.log_unseen[label]
            total = self.log_priors[label]
            for token in tokens:
                total += likelihoods.get(token, unseen)
            posteriors[label] = total
        return posteriors

    def to_json(self) -> str:
        return json.dumps(
            {
                "alpha": self.alpha,
                "labels": [label.value for label in self.labels],
                "vocabulary": list(self.vocabulary),
                "log_priors": {label.value: self.log_priors[label] for label in self.labels},
                "log_likelihood": {
                    label.value: {tok: self.log_likelihood[label][tok] for tok in self.vocabulary}
                    for label in self.labels
                },
                "log_unseen": {label.value: self.log_unseen[label] for label in self.labels},
            },
            sort_keys=True,
        )


def train_baseline(
    train: Sequence[CleanedIssue],
    alpha: float = 1.0,
    labels: Sequence[Label] | None = None,
) -> BaselineModel:
    """Fit the naive Bayes baseline.

    ``labels`` fixes the label set (every one must then appear in the
    training data); by default the set observed in the corpus is used.
    Priors are label frequencies; token likelihoods are Laplace-smoothed
    with ``alpha``.
    """
    if alpha <= 0:
        raise BaselineError("alpha must be > 0")
    if not train:
        raise BaselineError("baseline needs at least one training issue")
    doc_counts: dict[Label, int] = {}
    token_counts: dict[Label, dict[str, int]] = {}
    vocabulary: set[str] = set()
    for issue in train:
        doc_counts[issue.label] = doc_counts.get(issue.label, 0) + 1
        per_label = token_counts.setdefault(issue.label, {})
        for token in _tokens(issue):
            vocabulary.add(token)
            per_label[token] = per_label.get(token, 0) + 1

    ordered_labels = tuple(labels) if labels is not None else tuple(
        label for label in LABELS if label in doc_counts
    )
    for label in ordered_labels:
        if doc_counts.get(label, 0) == 0:
            raise BaselineError(f"label {label.value!r} has no training issues (undefined prior)")

    vocab = tuple(sorted(vocabulary))
    total_docs = sum(doc_counts[label] for label in ordered_labels)
    log_priors = {}
    log_likelihood = {}
    log_unseen = {}
    for label in ordered_labels:
        log_priors[label] = math.log(doc_counts[label] / total_docs)
        counts = token_counts.get(label, {})
        denom = sum(counts.values()) + alpha * len(vocab)
        log_likelihood[label] = {tok: math.log((counts.get(tok, 0) + alpha) / denom) for tok in vocab}
        log_unseen[label] = math.log(alpha / denom) if denom else math.log(1.0)
    return BaselineModel(
        alpha=alpha,
        labels=ordered_labels,
        vocabulary=vocab,
        log_priors=log_priors,
        log_likelihood=log_likelihood,
        log_unseen=log_unseen,
    )


def predict_baseline(model: BaselineModel, issue: CleanedIssue) -> Label:
    """Argmax of log-posterior; ties break to the lexicographically first label."""
    posteriors = model.score(_tokens(issue))
    best_label = None
    best_score = -math.inf
    for label in sorted(model.labels, key=lambda l: l.value):
        if posteriors[label] > best_score:
            best_label, best_score = label, posteriors[label]
    assert best_label is not None
    return best_label


def classify_repo(
    split: RepoSplit,
    registry: ModelRegistry,
    gateway: Gateway | None,
    engine: str = ENGINE_FINETUNED,
    *,
    pattern_blocklist: tuple[str, ...] = (),
    max_token_len: int = 20,
    alpha: float = 1.0,
) -> list[Prediction]:
    """Classify every test issue of one repository, in input order.

    Test (and, for the baseline, training) issues are cleaned here with the
    registry entry's cleaning method, so inference always matches training.
    Gateway failures on individual issues degrade to parse-failed predictions;
    auth failures abort the run.
    """
    entry = registry.require(split.repository)
    cfg = CleaningConfig(
        method=entry.cleaning_method,
        pattern_blocklist=pattern_blocklist,
        max_token_len=max_token_len,
    )
    test_issues = [clean_issue(rec, cfg) for rec in split.test]

    if engine == ENGINE_BASELINE:
        train_issues = [clean_issue(rec, cfg) for rec in split.train]
        model = train_baseline(train_issues, alpha=alpha, labels=LABELS)
        return [
            Prediction(
                issue_index=i,
                expected=issue.label,
                predicted=(predicted := predict_baseline(model, issue)),
                raw_response=predicted.value,
                engine=ENGINE_BASELINE,
            )
            for i, issue in enumerate(test_issues)
        ]

    if engine != ENGINE_FINETUNED:
        raise ValueError(f"unknown engine {engine!r}")
    if gateway is None:
        raise ValueError("finetuned engine requires a gateway")
    if not entry.model_id:
        raise LookupError(f"repository {split.repository!r} has no fine-tuned model id yet")

    def call_one(issue: CleanedIssue) -> str | GatewayError:
        request = CompletionRequest.classification(entry.model_id, build_user_message(issue))
        try:
            return gateway.complete(request)
        except GatewayError as exc:
            if exc.fatal:
                raise
            return exc

    workers = max(1, gateway.config.max_parallel_requests)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        responses = list(pool.map(call_one, test_issues))

    predictions = []
    for i, (issue, response) in enumerate(zip(test_issues, responses)):
        if isinstance(response, GatewayError):
            predictions.append(
                Prediction(i, issue.label, None, f"gateway error: {response}", ENGINE_FINETUNED)
            )
        else:
            predictions.append(
                Prediction(i, issue.label, parse_label(response), response, ENGINE_FINETUNED)
            )
    return predictions


PREDICTION_COLUMNS = ("issue_index", "expected", "predicted", "raw_response", "engine")


def write_predictions_csv(predictions: Sequence[Prediction], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_COLUMNS)
        for p in predictions:
            writer.writerow(
                (
                    p.issue_index,
                    p.expected.value,
                    p.predicted.value if p.predicted else "",
                    p.raw_response,
                    p.engine,
                )
            )


def read_predictions_csv(path: str | Path) -> list[Prediction]:
    predictions = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            predictions.append(
                Prediction(
                    issue_index=int(row["issue_index"]),
                    expected=_LABEL_BY_VALUE[row["expected"]],
                    predicted=_LABEL_BY_VALUE.get(row["predicted"]) if row["predicted"] else None,
                    raw_response=row["raw_response"],
                    engine=row["engine"],
                )
            )
    return predictions
