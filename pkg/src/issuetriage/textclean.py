"""Noise removal for issue text: two deterministic cleaning methods.

Method 1 applies, in this fixed order: (1) delete double quotation marks,
(2) delete configured blocklist patterns, (3) lowercase, (4) remove emoji,
(5) remove URLs, (6) remove HTML tags, (7) replace every character that is
not a letter, digit or whitespace with a space, (8) collapse whitespace runs
to single spaces and trim, (9) drop whitespace-delimited tokens longer than
``max_token_len`` characters.

Method 2 keeps the presence of removed spans by substituting placeholder
tokens instead of deleting: Markdown images become <IMAGE>, Markdown links
``[text](target)`` become ``text <URL>``, bare URLs become <URL>, HTML tags
become <HTML_TAG>, @-mentions become <USER>. It also strips Markdown
structure (code fences with their info strings, inline backticks, ATX heading
markers, blockquote markers, list bullets). Substitutions run before the
lowercase step: placeholders are carried through steps 3-9 as lowercase
alphanumeric sentinel tokens and restored at the end, so they survive the
lowercase and punctuation passes verbatim. Pre-existing literal placeholder
tokens in the input are protected the same way, which makes re-cleaning a
cleaned string a no-op.

Removal semantics: double quotes are deleted outright; every other removed
span is replaced by a single space so unrelated tokens never merge. Both
methods are idempotent under the built-in rules; a custom blocklist pattern
can break idempotence if its removal splices a new match together.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import IssueRecord, Label

METHOD1 = "method1"
METHOD2 = "method2"
METHODS = (METHOD1, METHOD2)

PLACEHOLDER_URL = "<URL>"
PLACEHOLDER_HTML_TAG = "<HTML_TAG>"
PLACEHOLDER_USER = "<USER>"
PLACEHOLDER_IMAGE = "<IMAGE>"
PLACEHOLDERS = (PLACEHOLDER_URL, PLACEHOLDER_HTML_TAG, PLACEHOLDER_USER, PLACEHOLDER_IMAGE)

# Sentinels stand in for placeholders across the lowercase/punctuation steps,
# so they must be lowercase alphanumeric and are exempt from the token-length
# rule. Any occurrence already present in raw input is scrubbed first.
_SENTINELS = {
    PLACEHOLDER_URL: "00plhurlplh00",
    PLACEHOLDER_HTML_TAG: "00plhhtmltagplh00",
    PLACEHOLDER_USER: "00plhuserplh00",
    PLACEHOLDER_IMAGE: "00plhimageplh00",
}
_SENTINEL_SET = frozenset(_SENTINELS.values())
_SENTINEL_RE = re.compile(r"00plh(?:url|htmltag|user|image)plh00")

# Emoji are defined as a fixed code-point-range table: the pictographic
# blocks plus variation selectors and the zero-width joiner.
_EMOJI_RANGES = (
    (0x1F300, 0x1F5FF),  # Miscellaneous Symbols and Pictographs
    (0x1F600, 0x1F64F),  # Emoticons
    (0x1F680, 0x1F6FF),  # Transport and Map Symbols
    (0x1F900, 0x1F9FF),  # Supplemental Symbols and Pictographs
    (0x2700, 0x27BF),    # Dingbats
    (0xFE00, 0xFE0F),    # Variation Selectors
    (0x200D, 0x200D),    # Zero Width Joiner
)
_EMOJI_RE = re.compile("[" + "".join(f"{chr(lo)}-{chr(hi)}" for lo, hi in _EMOJI_RANGES) + "]")

# Scheme-anchored URLs only; bare www. domains are left alone.
_URL_RE = re.compile(r"https?://\S+", re.IGNORECASE)
_HTML_TAG_RE = re.compile(r"</?[A-Za-z][^<>]*>")
_MD_IMAGE_RE = re.compile(r"!\[[^\]]*\]\([^)]*\)")
_MD_LINK_RE = re.compile(r"\[([^\]]*)\]\(([^)]*)\)")
# Forge-style mention: @ not preceded by a word char (keeps emails intact),
# then 1-39 alphanumeric-or-hyphen characters ending at a word boundary.
_MENTION_RE = re.compile(r"(?<![\w@])@([A-Za-z0-9-]{1,39})\b")

_MD_FENCE_RE = re.compile(r"^[ \t]*```[^\n]*$", re.MULTILINE)
_MD_HEADING_RE = re.compile(r"^[ \t]*#{1,6}[ \t]+", re.MULTILINE)
_MD_QUOTE_RE = re.compile(r"^[ \t]*(?:>[ \t]?)+", re.MULTILINE)
_MD_BULLET_RE = re.compile(r"^[ \t]*[-*+][ \t]+", re.MULTILINE)

_WS_RUN_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class CleaningConfig:
    """Which cleaning method to run and its two knobs.

    ``pattern_blocklist`` entries are removed in list order right after the
    double-quote step; each entry is a literal string unless prefixed with
    ``re:``, in which case the remainder is a regular expression.
    """

    method: str = METHOD1
    pattern_blocklist: tuple[str, ...] = ()
    max_token_len: int = 20

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown cleaning method {self.method!r}")
        if self.max_token_len < 1:
            raise ValueError("max_token_len must be >= 1")


@dataclass(frozen=True)
class CleanedIssue:
    """An issue record after cleaning, method recorded for traceability."""

    repository: str
    label: Label
    title_clean: str
    body_clean: str
    method: str

    @property
    def text(self) -> str:
        return f"{self.title_clean} {self.body_clean}".strip()


def load_blocklist(path: str | Path) -> tuple[str, ...]:
    """Read blocklist patterns, one per line, in file order; blank lines skipped."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return tuple(line for line in lines if line.strip())


def _apply_blocklist(text: str, patterns: Iterable[str]) -> str:
    for pattern in patterns:
        if pattern.startswith("re:"):
            text = re.sub(pattern[3:], " ", text)
        else:
            text = text.replace(pattern, " ")
    return text


def _keep_letters_digits_ws(text: str) -> str:
    return "".join(c if (c.isalpha() or c.isdigit() or c.isspace()) else " " for c in text)


def _collapse_ws(text: str) -> str:
    return _WS_RUN_RE.sub(" ", text).strip()


def _drop_long_tokens(text: str, max_len: int, exempt: frozenset[str] = frozenset()) -> str:
    return " ".join(t for t in text.split(" ") if t in exempt or len(t) <= max_len)


def _strip_markdown(text: str) -> str:
    text = _MD_FENCE_RE.sub(" ", text)
    text = text.replace("`", " ")
    text = _MD_HEADING_RE.sub("", text)
    text = _MD_QUOTE_RE.sub("", text)
    text = _MD_BULLET_RE.sub("", text)
    return text


def clean_method1(text: str, cfg: CleaningConfig | None = None) -> str:
    """Clean ``text`` with method 1 (outright noise removal). Total function."""
    cfg = cfg or CleaningConfig(method=METHOD1)
    s = text.replace('"', "")
    s = _apply_blocklist(s, cfg.pattern_blocklist)
    s = s.lower()
    s = _EMOJI_RE.sub(" ", s)
    s = _URL_RE.sub(" ", s)
    s = _HTML_TAG_RE.sub(" ", s)
    s = _keep_letters_digits_ws(s)
    s = _collapse_ws(s)
    return _drop_long_tokens(s, cfg.max_token_len)


def clean_method2(text: str, cfg: CleaningConfig | None = None) -> str:
    """Clean ``text`` with method 2 (placeholder substitution + Markdown strip)."""
    cfg = cfg or CleaningConfig(method=METHOD2)
    s = _SENTINEL_RE.sub(" ", text)
    for placeholder, sentinel in _SENTINELS.items():
        s = s.replace(placeholder, f" {sentinel} ")
    s = s.replace('"', "")
    s = _apply_blocklist(s, cfg.pattern_blocklist)
    s = _MD_IMAGE_RE.sub(f" {_SENTINELS[PLACEHOLDER_IMAGE]} ", s)
    s = _MD_LINK_RE.sub(lambda m: f" {m.group(1)} {_SENTINELS[PLACEHOLDER_URL]} ", s)
    s = _URL_RE.sub(f" {_SENTINELS[PLACEHOLDER_URL]} ", s)
    s = _HTML_TAG_RE.sub(f" {_SENTINELS[PLACEHOLDER_HTML_TAG]} ", s)
    s = _MENTION_RE.sub(f" {_SENTINELS[PLACEHOLDER_USER]} ", s)
    s = _strip_markdown(s)
    s = s.lower()
    s = _EMOJI_RE.sub(" ", s)
    s = _keep_letters_digits_ws(s)
    s = _collapse_ws(s)
    s = _drop_long_tokens(s, cfg.max_token_len, exempt=_SENTINEL_SET)
    for placeholder, sentinel in _SENTINELS.items():
        s = s.replace(sentinel, placeholder)
    return s


def clean_text(text: str, cfg: CleaningConfig) -> str:
    """Dispatch on ``cfg.method``."""
    if cfg.method == METHOD1:
        return clean_method1(text, cfg)
    return clean_method2(text, cfg)


def clean_issue(record: IssueRecord, cfg: CleaningConfig) -> CleanedIssue:
    """Clean title and body independently; repository and label pass through."""
    return CleanedIssue(
        repository=record.repository,
        label=record.label,
        title_clean=clean_text(record.title, cfg),
        body_clean=clean_text(record.body, cfg),
        method=cfg.method,
    )
