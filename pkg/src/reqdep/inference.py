"""LLM provider abstraction, per-pair classification, and structured-output
parsing with bounded retry.

Providers expose a single ``complete(prompt, ctx)`` call.  The stub providers
make the whole pipeline deterministic for tests and dry runs; the remote
provider speaks the common chat-completions wire shape.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

import httpx

from .core import DependencyLabel, RequirementPair, canonical_label
from .errors import (
    ConfidenceOutOfRange,
    InvalidConfig,
    ParseFailure,
    ProviderUnavailable,
    UnknownLabel,
)
from .prompt import PromptContext, render_prompt

API_KEY_ENV = "REQDEP_LLM_API_KEY"

UNPARSED_CONFIDENCE = -1.0


@dataclass(frozen=True)
class ModelConfig:
    provider_kind: str = "stub"  # "remote-chat" or "stub"
    model_id: str = "stub-llm"
    temperature: float = 0.0
    max_retries: int = 1
    request_timeout: float = 60.0
    max_parallel: int = 4
    endpoint: Optional[str] = None

    def __post_init__(self) -> None:
        if self.provider_kind not in ("remote-chat", "stub"):
            raise InvalidConfig(f"unknown provider kind {self.provider_kind!r}")
        if self.provider_kind == "remote-chat" and not self.endpoint:
            raise InvalidConfig("remote-chat provider requires an endpoint")
        if self.max_retries < 0:
            raise InvalidConfig("max_retries must be >= 0")
        if self.max_parallel < 1:
            raise InvalidConfig("max_parallel must be >= 1")


@dataclass(frozen=True)
class Prediction:
    pair_id: str
    label: DependencyLabel
    rationale: str
    confidence: float
    model_id: str
    config_hash: str
    raw_response: str = ""
    attempt_count: int = 1


class LlmProvider(Protocol):
    def complete(self, prompt: str, ctx: PromptContext) -> str: ...


class CallableStubProvider:
    """Wraps any (prompt, ctx) -> str function as a provider."""

    def __init__(self, fn: Callable[[str, PromptContext], str]):
        self._fn = fn

    def complete(self, prompt: str, ctx: PromptContext) -> str:
        return self._fn(prompt, ctx)


class EchoTopExampleProvider:
    """Deterministic stub answering with the label of the single top-scoring
    retrieved example across all dependency types.

    Useful for end-to-end wiring checks: on fixtures where every test pair
    has a near-duplicate pool pair, the answer is the nearest example's label.
    """

    def complete(self, prompt: str, ctx: PromptContext) -> str:
        best: Optional[tuple[float, DependencyLabel]] = None
        for label, entries in ctx.examples.items():
            for annotated, score in entries:
                if best is None or score > best[0]:
                    best = (score, annotated.label)
        label = best[1] if best is not None else DependencyLabel.NO_DEPENDENCY
        return (
            f"Dependency_Status: {label.value}\n"
            "Rationale: Closest retrieved example shares this label.\n"
            "Confidence Score: 4\n"
        )


class FixedResponseProvider:
    """Returns canned responses in sequence; repeats the last one."""

    def __init__(self, responses: Sequence[str]):
        self._responses = list(responses)
        self._calls = 0
        self._lock = threading.Lock()

    def complete(self, prompt: str, ctx: PromptContext) -> str:
        with self._lock:
            index = min(self._calls, len(self._responses) - 1)
            self._calls += 1
        return self._responses[index]


class RemoteChatProvider:
    """Chat-completions client (OpenAI-style wire shape) with retry/backoff."""

    def __init__(self, config: ModelConfig, audit_path: Optional[Path] = None):
        self.config = config
        self.audit_path = audit_path
        self._audit_lock = threading.Lock()

    def complete(self, prompt: str, ctx: PromptContext) -> str:
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.config.model_id,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        last_error: Exception | None = None
        for attempt in range(3):
            try:
                response = httpx.post(
                    self.config.endpoint,
                    json=payload,
                    headers=headers,
                    timeout=self.config.request_timeout,
                )
                response.raise_for_status()
                body = response.json()
                text = body["choices"][0]["message"]["content"]
                self._audit(payload, body)
                return text
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_error = exc
                time.sleep(min(2.0**attempt, 10.0))
        raise ProviderUnavailable(f"chat endpoint failed: {last_error}")

    def _audit(self, request: dict, response: dict) -> None:
        if self.audit_path is None:
            return
        with self._audit_lock, open(self.audit_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"request": request, "response": response}) + "\n")


_FIELD_PATTERN = re.compile(
    r"^(dependency[ _]?status|rationale|confidence[ _]?score)\s*:\s*(.*)$",
    re.IGNORECASE,
)


def _strip_markers(line: str) -> str:
    return line.strip().strip("*#").strip()


def parse_response(text: str) -> tuple[DependencyLabel, str, float]:
    """Extract (label, rationale, confidence) from a model response.

    Scans lines for the three required field labels, ignoring surrounding
    noise, markdown markers, and any preamble.  The rationale continues until
    the next recognized field.  Raises :class:`ParseFailure` when a field is
    missing and :class:`ConfidenceOutOfRange` when the score leaves [0, 5].
    """
    label: Optional[DependencyLabel] = None
    confidence: Optional[float] = None
    rationale_lines: Optional[list[str]] = None
    collecting_rationale = False

    for raw_line in text.splitlines():
        line = _strip_markers(raw_line)
        match = _FIELD_PATTERN.match(line)
        if match is None:
            if collecting_rationale and rationale_lines is not None:
                rationale_lines.append(raw_line.rstrip())
            continue
        field_name = match.group(1).lower().replace(" ", "_")
        value = match.group(2).strip()
        collecting_rationale = False
        if field_name.startswith("dependency"):
            if label is None:
                try:
                    label = canonical_label(value)
                except UnknownLabel as exc:
                    raise ParseFailure(str(exc)) from None
        elif field_name == "rationale":
            if rationale_lines is None:
                rationale_lines = [value]
                collecting_rationale = True
        else:  # confidence score
            if confidence is None:
                cleaned = value.strip().strip("*").split("/")[0].strip()
                try:
                    confidence = float(cleaned)
                except ValueError:
                    raise ParseFailure(f"bad confidence {value!r}") from None

    missing = [
        name
        for name, found in [
            ("Dependency_Status", label is not None),
            ("Rationale", rationale_lines is not None),
            ("Confidence Score", confidence is not None),
        ]
        if not found
    ]
    if missing:
        raise ParseFailure(f"missing fields: {', '.join(missing)}")
    assert label is not None and rationale_lines is not None and confidence is not None
    if not 0.0 <= confidence <= 5.0:
        raise ConfidenceOutOfRange(f"confidence {confidence} outside [0, 5]")
    rationale = "\n".join(rationale_lines).strip()
    return label, rationale, confidence


def format_response(label: DependencyLabel, rationale: str, confidence: float) -> str:
    """Render the canonical three-line output shape (parse_response inverse)."""
    value = int(confidence) if float(confidence).is_integer() else confidence
    return (
        f"Dependency_Status: {label.value}\n"
        f"Rationale: {rationale}\n"
        f"Confidence Score: {value}"
    )


def classify_pair(
    pair: RequirementPair,
    ctx: PromptContext,
    model_config: ModelConfig,
    provider: LlmProvider,
    config_hash: str = "",
) -> Prediction:
    """Render the prompt, query the provider, and parse the answer.

    Parse failures are retried with the identical prompt up to
    ``max_retries`` times; after that the prediction is recorded as Unparsed
    with the raw response preserved.  Network exhaustion raises
    :class:`ProviderUnavailable` instead.
    """
    prompt = render_prompt(ctx)
    raw = ""
    attempts = 0
    for _ in range(model_config.max_retries + 1):
        attempts += 1
        raw = provider.complete(prompt, ctx)
        try:
            label, rationale, confidence = parse_response(raw)
        except ParseFailure:
            continue
        return Prediction(
            pair_id=pair.pair_id,
            label=label,
            rationale=rationale,
            confidence=confidence,
            model_id=model_config.model_id,
            config_hash=config_hash,
            raw_response=raw,
            attempt_count=attempts,
        )
    return Prediction(
        pair_id=pair.pair_id,
        label=DependencyLabel.UNPARSED,
        rationale="",
        confidence=UNPARSED_CONFIDENCE,
        model_id=model_config.model_id,
        config_hash=config_hash,
        raw_response=raw,
        attempt_count=attempts,
    )


def classify_many(
    jobs: Sequence[tuple[RequirementPair, PromptContext]],
    model_config: ModelConfig,
    provider: LlmProvider,
    config_hash: str = "",
) -> list[Prediction]:
    """Classify pairs with bounded parallelism; results sorted by pair_id."""
    if model_config.max_parallel == 1 or len(jobs) <= 1:
        predictions = [
            classify_pair(pair, ctx, model_config, provider, config_hash)
            for pair, ctx in jobs
        ]
    else:
        with ThreadPoolExecutor(max_workers=model_config.max_parallel) as pool:
            predictions = list(
                pool.map(
                    lambda job: classify_pair(
                        job[0], job[1], model_config, provider, config_hash
                    ),
                    jobs,
                )
            )
    return sorted(predictions, key=lambda p: p.pair_id)
