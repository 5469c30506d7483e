"""HTTP client for OpenAI-compatible services: file upload, fine-tune jobs, completions.

Retries are idempotent-safe: uploads are retried only on transport errors
(no response seen), job creation is never auto-retried (a lost response could
mean the job already exists), and completions/polls are read-only and retried
freely on transport errors, 429 and 5xx with exponential backoff plus jitter,
honoring Retry-After. The API key is read from the environment at request
time and is never stored, logged or echoed in errors.
"""

from __future__ import annotations

import os
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .promptgen import ChatMessage, validate_training_file

TERMINAL_STATUSES = ("succeeded", "failed", "cancelled")
_STATUS_ALIASES = {"validating_files": "queued"}
_KNOWN_STATUSES = ("queued", "running") + TERMINAL_STATUSES


class GatewayError(RuntimeError):
    """An HTTP interaction that failed after any applicable retries."""


class AuthError(GatewayError):
    """Authentication/authorization rejected; retrying cannot help."""


@dataclass
class GatewayConfig:
    """Connection settings; the key itself lives only in the environment."""

    base_url: str
    api_key_env: str = "OPENAI_API_KEY"
    request_timeout: float = 60.0
    max_retries: int = 3
    poll_interval: float = 1800.0
    max_parallel_requests: int = 4
    retry_base_delay: float = 0.5

    def __post_init__(self) -> None:
        if not self.base_url.startswith(("http://", "https://")):
            raise ValueError(f"base_url must be absolute, got {self.base_url!r}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.poll_interval <= 0:
            raise ValueError("poll_interval must be > 0")
        if self.max_parallel_requests < 1:
            raise ValueError("max_parallel_requests must be >= 1")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be > 0")

    def api_key(self) -> str:
        return os.environ.get(self.api_key_env, "")


@dataclass(frozen=True)
class FineTuneJob:
    """Lifecycle record of one fine-tune job."""

    job_id: str
    base_model: str
    training_file_id: str
    epochs: int | str
    status: str
    fine_tuned_model_id: str | None = None

    def __post_init__(self) -> None:
        if isinstance(self.epochs, int) and self.epochs < 1:
            raise ValueError("explicit epochs must be >= 1")
        if (self.status == "succeeded") != (self.fine_tuned_model_id is not None):
            raise ValueError("fine_tuned_model_id must be present exactly when status is succeeded")

    @property
    def terminal(self) -> bool:
        return self.status in TERMINAL_STATUSES


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    max_tokens: int
    temperature: float

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")

    @classmethod
    def classification(cls, model_id: str, message: ChatMessage) -> "CompletionRequest":
        """Single-token, deterministic request used for every classification call."""
        return cls(model_id=model_id, messages=(message,), max_tokens=1, temperature=0.0)


@dataclass
class Gateway:
    """Thin synchronous client over one OpenAI-compatible base URL.

    A pre-configured ``httpx.Client`` (e.g. an in-process test client) may be
    injected; otherwise one is created from the config. Safe to share across
    threads; completion calls may run concurrently.
    """

    config: GatewayConfig
    client: httpx.Client | None = None
    sleep: Callable[[float], None] = time.sleep
    rng: random.Random = field(default_factory=random.Random)

    def __post_init__(self) -> None:
        if self.client is None:
            self.client = httpx.Client(
                base_url=self.config.base_url, timeout=self.config.request_timeout
            )

    # -- low-level ---------------------------------------------------------

    def _headers(self) -> dict[str, str]:
        key = self.config.api_key()
        return {"Authorization": f"Bearer {key}"} if key else {}

    def _check(self, response: httpx.Response) -> dict:
        if response.status_code in (401, 403):
            raise AuthError(f"authentication failed (HTTP {response.status_code})")
        if response.status_code >= 400:
            raise GatewayError(f"HTTP {response.status_code}: {response.text}")
        return response.json()

    def _backoff(self, attempt: int, retry_after: str | None) -> None:
        if retry_after is not None:
            try:
                delay = float(retry_after)
            except ValueError:
                delay = self.config.retry_base_delay * (2**attempt)
        else:
            base = self.config.retry_base_delay * (2**attempt)
            delay = base + self.rng.uniform(0, base / 2)
        self.sleep(delay)

    def _request_with_retries(self, method: str, url: str, *, retry_statuses=(429,), **kwargs) -> dict:
        """Issue a request, retrying transport errors, 5xx and ``retry_statuses``."""
        attempts = self.config.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            try:
                response = self.client.request(method, url, headers=self._headers(), **kwargs)
            except httpx.TransportError as exc:
                last_error = exc
                if attempt + 1 < attempts:
                    self._backoff(attempt, None)
                continue
            if response.status_code in retry_statuses or response.status_code >= 500:
                last_error = GatewayError(f"HTTP {response.status_code}: {response.text}")
                if attempt + 1 < attempts:
                    self._backoff(attempt, response.headers.get("Retry-After"))
                continue
            return self._check(response)
        raise GatewayError(f"{method} {url} failed after {attempts} attempt(s): {last_error}")

    # -- operations --------------------------------------------------------

    def upload_training_file(self, path: str | Path) -> str:
        """Validate the JSONL file locally, then upload it; returns the file id.

        Schema violations are reported with their line number before any
        network traffic. Only transport errors are retried (never a response
        the server may have acted on).
        """
        path = Path(path)
        validate_training_file(path)
        content = path.read_bytes()
        attempts = self.config.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            try:
                response = self.client.post(
                    "/v1/files",
                    headers=self._headers(),
                    data={"purpose": "fine-tune"},
                    files={"file": (path.name, content, "application/jsonl")},
                )
            except httpx.TransportError as exc:
                last_error = exc
                if attempt + 1 < attempts:
                    self._backoff(attempt, None)
                continue
            return self._check(response)["id"]
        raise GatewayError(f"upload of {path.name} failed after {attempts} attempt(s): {last_error}")

    def create_finetune(
        self, file_id: str, base_model: str = "gpt-3.5-turbo", epochs: int | str = "auto"
    ) -> FineTuneJob:
        """Start a fine-tune job; ``epochs="auto"`` omits the override entirely."""
        body: dict = {"training_file": file_id, "model": base_model}
        if epochs != "auto":
            body["hyperparameters"] = {"n_epochs": int(epochs)}
        try:
            response = self.client.post("/v1/fine_tuning/jobs", headers=self._headers(), json=body)
        except httpx.TransportError as exc:
            raise GatewayError(f"fine-tune creation failed: {exc}") from exc
        return self._parse_job(self._check(response))

    def retrieve_finetune(self, job_id: str) -> FineTuneJob:
        return self._parse_job(
            self._request_with_retries("GET", f"/v1/fine_tuning/jobs/{job_id}")
        )

    def poll_until_done(self, job: FineTuneJob, on_poll: Callable[[FineTuneJob], None] | None = None) -> FineTuneJob:
        """Re-fetch the job every poll_interval until it reaches a terminal state.

        An already-terminal job is returned immediately without sleeping.
        Failed/cancelled jobs are returned, not raised.
        """
        while not job.terminal:
            self.sleep(self.config.poll_interval)
            job = self.retrieve_finetune(job.job_id)
            if on_poll is not None:
                on_poll(job)
        return job

    def complete(self, request: CompletionRequest) -> str:
        """Run a chat completion and return the first choice's content, untrimmed."""
        body = {
            "model": request.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        payload = self._request_with_retries("POST", "/v1/chat/completions", json=body)
        choices = payload.get("choices") or []
        if not choices:
            raise GatewayError("completion response contained no choices")
        return choices[0]["message"]["content"]

    def _parse_job(self, payload: dict) -> FineTuneJob:
        raw_status = payload.get("status", "")
        status = _STATUS_ALIASES.get(raw_status, raw_status)
        if status not in _KNOWN_STATUSES:
            status = "running"
        hyper = payload.get("hyperparameters") or {}
        epochs = hyper.get("n_epochs", "auto")
        if not isinstance(epochs, int):
            epochs = "auto"
        return FineTuneJob(
            job_id=payload["id"],
            base_model=payload.get("model", ""),
            training_file_id=payload.get("training_file", ""),
            epochs=epochs,
            status=status,
            fine_tuned_model_id=payload.get("fine_tuned_model") if status == "succeeded" else None,
        )
