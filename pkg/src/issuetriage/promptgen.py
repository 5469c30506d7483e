"""Chat-format training examples and JSON-lines serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import Label
from .textclean import CleanedIssue

#: The classification prompt, byte-identical across training and inference.
PROMPT = (
    "Classify, IN ONLY 1 WORD, the following GitHub issue as 'feature', "
    "'bug', or 'question' based on its title and body:"
)

ROLES = ("system", "user", "assistant")

_LABEL_VALUES = frozenset(label.value for label in Label)


class JsonlSchemaError(ValueError):
    """A JSON-lines record that does not satisfy the chat-example schema."""


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown chat role {self.role!r}")
        if not self.content:
            raise ValueError("chat message content must be non-empty")


@dataclass(frozen=True)
class ChatExample:
    """One training conversation: optional system, one user, one final assistant."""

    messages: tuple[ChatMessage, ...]

    def validate(self) -> None:
        roles = [m.role for m in self.messages]
        if roles.count("user") != 1:
            raise JsonlSchemaError("example must contain exactly one user message")
        if roles.count("assistant") != 1 or roles[-1] != "assistant":
            raise JsonlSchemaError("example must end with exactly one assistant message")
        if len(roles) == 3 and roles[0] != "system":
            raise JsonlSchemaError("only a leading system message is allowed")
        if len(roles) > 3:
            raise JsonlSchemaError("example has too many messages")
        if self.messages[-1].content not in _LABEL_VALUES:
            raise JsonlSchemaError(
                f"assistant content must be a canonical label, got {self.messages[-1].content!r}"
            )


def build_user_message(issue: CleanedIssue) -> ChatMessage:
    """The classification request for one cleaned issue.

    Layout is fixed for determinism: the prompt, then "Title: ..." and
    "Body: ..." on their own lines. Cleaned text contains no newlines, so the
    result is always exactly three lines.
    """
    content = f"{PROMPT}\nTitle: {issue.title_clean}\nBody: {issue.body_clean}"
    return ChatMessage(role="user", content=content)


def build_training_example(issue: CleanedIssue, system_prompt: str | None = None) -> ChatExample:
    """Pair the user message with the ground-truth label as the assistant reply."""
    messages = [build_user_message(issue), ChatMessage(role="assistant", content=issue.label.value)]
    if system_prompt:
        messages.insert(0, ChatMessage(role="system", content=system_prompt))
    return ChatExample(messages=tuple(messages))


def example_to_dict(example: ChatExample) -> dict:
    # Field order (role before content) is fixed so files are byte-reproducible.
    return {"messages": [{"role": m.role, "content": m.content} for m in example.messages]}


def parse_chat_example(obj: object) -> ChatExample:
    """Parse one decoded JSON object into a validated ChatExample."""
    if not isinstance(obj, dict) or not isinstance(obj.get("messages"), list):
        raise JsonlSchemaError("expected an object with a 'messages' array")
    messages = []
    for item in obj["messages"]:
        if not isinstance(item, dict):
            raise JsonlSchemaError("each message must be an object")
        role, content = item.get("role"), item.get("content")
        if not isinstance(role, str) or not isinstance(content, str):
            raise JsonlSchemaError("each message needs string 'role' and 'content'")
        try:
            messages.append(ChatMessage(role=role, content=content))
        except ValueError as exc:
            raise JsonlSchemaError(str(exc)) from None
    example = ChatExample(messages=tuple(messages))
    example.validate()
    return example


def write_jsonl(examples: Sequence[ChatExample], path: str | Path) -> int:
    """Serialize examples one JSON object per line; returns the line count.

    Serialization is deterministic (fixed field order, no ASCII escaping of
    non-ASCII text), so equal inputs produce byte-identical files.
    """
    if not examples:
        raise ValueError("refusing to write an empty training file")
    for example in examples:
        example.validate()
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for example in examples:
            fh.write(json.dumps(example_to_dict(example), ensure_ascii=False))
            fh.write("\n")
    return len(examples)


def parse_jsonl(data: str) -> list[ChatExample]:
    """Parse serialized training data; errors carry the 1-based line number."""
    examples = []
    for line_num, line in enumerate(data.split("\n"), start=1):
        if line == "":
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise JsonlSchemaError(f"line {line_num}: invalid JSON ({exc.msg})") from None
        try:
            examples.append(parse_chat_example(obj))
        except JsonlSchemaError as exc:
            raise JsonlSchemaError(f"line {line_num}: {exc}") from None
    return examples


def read_jsonl(path: str | Path) -> list[ChatExample]:
    return parse_jsonl(Path(path).read_text(encoding="utf-8"))


def validate_training_file(path: str | Path) -> int:
    """Check every line against the chat-example schema; returns the example count."""
    count = len(read_jsonl(path))
    if count == 0:
        raise JsonlSchemaError(f"{path}: training file has no examples")
    return count


def repo_slug(repository: str) -> str:
    return repository.replace("/", "_")


def training_file_path(repository: str, directory: str | Path) -> Path:
    """Per-repository training file, named ``<owner>_<name>_train.jsonl``."""
    return Path(directory) / f"{repo_slug(repository)}_train.jsonl"
