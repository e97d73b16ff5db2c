"""Batch driver for A/B and annotation experiments against chat-completion
endpoints, with resumable append-only logging and bounded concurrency.

Wire contract: HTTP POST of JSON
``{model, temperature, max_tokens, messages: [{role, content: [
{"type": "text", "text": ...} | {"type": "audio", "path": ...} ]}]}``
answered by JSON ``{"text": ...}``. Audio is referenced as 16-bit PCM WAV
file paths.
"""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Callable, Iterable, Mapping, Sequence

import requests

from .promptkit import PromptSpec, parse_response, resolve_choice
from .semdim import AnnotationRecord, SemanticDimension

MAX_ATTEMPTS = 3
BACKOFF_START_S = 1.0


class EndpointError(RuntimeError):
    """The endpoint failed all retry attempts for one request."""


class AudioMissing(FileNotFoundError):
    """A prompt references an audio file that does not exist."""


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    auth_token_env_name: str | None = None
    temperature: float = 0.0
    max_tokens: int = 1024
    request_timeout: float = 60.0


@dataclass(frozen=True)
class ResponseRecord:
    prompt_id: str
    word_id: str
    dimension_id: str
    input_type: str
    feature_order: str
    raw_text: str
    resolved_label: str
    latency_ms: float
    attempt_count: int
    model: str = ""
    error: str | None = None

    def to_json_dict(self) -> dict:
        d = {
            "prompt_id": self.prompt_id,
            "word_id": self.word_id,
            "dimension_id": self.dimension_id,
            "input_type": self.input_type,
            "feature_order": self.feature_order,
            "raw_text": self.raw_text,
            "resolved_label": self.resolved_label,
            "latency_ms": self.latency_ms,
            "attempt_count": self.attempt_count,
            "model": self.model,
        }
        if self.error is not None:
            d["error"] = self.error
        return d


Transport = Callable[[dict, EndpointConfig], str]


def request_body(prompt: PromptSpec, cfg: EndpointConfig) -> dict:
    content = []
    for part in prompt.rendered_parts:
        if part.kind == "text":
            content.append({"type": "text", "text": part.text})
        else:
            content.append({"type": "audio", "path": part.audio})
    return {
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
        "messages": [{"role": "user", "content": content}],
    }


def http_transport(body: dict, cfg: EndpointConfig) -> str:
    headers = {}
    if cfg.auth_token_env_name:
        token = os.environ.get(cfg.auth_token_env_name, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
    try:
        resp = requests.post(cfg.base_url, json=body, timeout=cfg.request_timeout, headers=headers)
    except requests.RequestException as e:
        raise EndpointError(f"request failed: {e}") from e
    if resp.status_code != 200:
        raise EndpointError(f"endpoint returned HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        payload = resp.json()
    except ValueError as e:
        raise EndpointError(f"endpoint returned non-JSON body: {e}") from e
    if "text" not in payload:
        raise EndpointError("endpoint response lacks 'text' field")
    return payload["text"]


def check_audio_files(prompts: Sequence[PromptSpec]) -> None:
    for p in prompts:
        for part in p.rendered_parts:
            if part.kind == "audio" and not Path(part.audio).is_file():
                raise AudioMissing(f"prompt {p.prompt_id}: audio file not found: {part.audio}")


def _request_with_retries(
    prompt: PromptSpec,
    cfg: EndpointConfig,
    transport: Transport,
    sleeper: Callable[[float], None],
    clock: Callable[[], float],
) -> tuple[str, float, int, str | None]:
    """(raw_text, latency_ms, attempts, error) after at most MAX_ATTEMPTS."""
    body = request_body(prompt, cfg)
    start = clock()
    error: str | None = None
    for attempt in range(1, MAX_ATTEMPTS + 1):
        try:
            text = transport(body, cfg)
            return text, (clock() - start) * 1000.0, attempt, None
        except EndpointError as e:
            error = str(e)
            if attempt < MAX_ATTEMPTS:
                sleeper(BACKOFF_START_S * (2 ** (attempt - 1)))
    return "", (clock() - start) * 1000.0, MAX_ATTEMPTS, error


def read_response_log(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows


def run_batch(
    prompts: Sequence[PromptSpec],
    cfg: EndpointConfig,
    resume_log: str | Path,
    registry: Mapping[str, SemanticDimension],
    max_in_flight: int = 4,
    transport: Transport | None = None,
    sleeper: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.perf_counter,
) -> list[ResponseRecord]:
    """One record per prompt; prompt_ids already in the log are not re-sent.

    Requests run on a bounded thread pool, but the log is written by this
    thread alone, in input order, so records and ids never depend on
    completion timing. Endpoint failures exhaust retries, are recorded with
    an error note, and the batch continues.
    """
    transport = transport or http_transport
    check_audio_files(prompts)
    logged = {row["prompt_id"]: row for row in read_response_log(resume_log)}
    seen_ids = set()
    for p in prompts:
        if p.prompt_id in seen_ids:
            raise ValueError(f"duplicate prompt_id in batch: {p.prompt_id}")
        seen_ids.add(p.prompt_id)

    to_run = [p for p in prompts if p.prompt_id not in logged]
    records: dict[str, ResponseRecord] = {}
    for pid, row in logged.items():
        records[pid] = ResponseRecord(
            prompt_id=row["prompt_id"],
            word_id=row["word_id"],
            dimension_id=row["dimension_id"],
            input_type=row["input_type"],
            feature_order=row["feature_order"],
            raw_text=row["raw_text"],
            resolved_label=row["resolved_label"],
            latency_ms=row["latency_ms"],
            attempt_count=row["attempt_count"],
            model=row.get("model", cfg.model_name),
            error=row.get("error"),
        )

    if to_run:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool, open(
            resume_log, "a", encoding="utf-8"
        ) as log_stream:
            futures = [
                pool.submit(_request_with_retries, p, cfg, transport, sleeper, clock)
                for p in to_run
            ]
            for prompt, future in zip(to_run, futures):
                raw_text, latency_ms, attempts, error = future.result()
                dim = registry[prompt.dimension_id]
                if error is None:
                    parsed = parse_response(raw_text, prompt.n_options)
                    label = resolve_choice(parsed, dim, prompt.feature_order)
                else:
                    label = "invalid"
                record = ResponseRecord(
                    prompt_id=prompt.prompt_id,
                    word_id=prompt.word_ref,
                    dimension_id=prompt.dimension_id,
                    input_type=prompt.input_type,
                    feature_order=prompt.feature_order,
                    raw_text=raw_text,
                    resolved_label=label,
                    latency_ms=latency_ms,
                    attempt_count=attempts,
                    model=cfg.model_name,
                    error=error,
                )
                records[prompt.prompt_id] = record
                log_stream.write(json.dumps(record.to_json_dict(), ensure_ascii=False) + "\n")

    return [records[p.prompt_id] for p in prompts]


def run_annotation(
    prompts: Sequence[PromptSpec],
    cfgs: Sequence[EndpointConfig],
    resume_log: str | Path,
    registry: Mapping[str, SemanticDimension],
    max_in_flight: int = 4,
    transport: Transport | None = None,
    sleeper: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.perf_counter,
) -> list[AnnotationRecord]:
    """One AnnotationRecord per (prompt, endpoint); annotator_id is the
    model name. Resume skips completed (prompt_id, annotator_id) pairs."""
    if not cfgs:
        raise ValueError("need at least one endpoint config")
    transport = transport or http_transport
    check_audio_files(prompts)
    logged_rows = read_response_log(resume_log)
    logged = {(row["prompt_id"], row["annotator_id"]): row for row in logged_rows}

    jobs = [
        (prompt, cfg)
        for prompt in prompts
        for cfg in cfgs
        if (prompt.prompt_id, cfg.model_name) not in logged
    ]
    results: dict[tuple[str, str], AnnotationRecord] = {}
    for (pid, annotator), row in logged.items():
        results[(pid, annotator)] = AnnotationRecord(
            word_id=row["word_id"],
            dimension_id=row["dimension_id"],
            annotator_id=annotator,
            label=row["label"],
        )

    if jobs:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool, open(
            resume_log, "a", encoding="utf-8"
        ) as log_stream:
            futures = [
                pool.submit(_request_with_retries, prompt, cfg, transport, sleeper, clock)
                for prompt, cfg in jobs
            ]
            for (prompt, cfg), future in zip(jobs, futures):
                raw_text, latency_ms, attempts, error = future.result()
                dim = registry[prompt.dimension_id]
                if error is None:
                    parsed = parse_response(raw_text, prompt.n_options)
                    label = resolve_choice(parsed, dim, prompt.feature_order)
                else:
                    label = "invalid"
                record = AnnotationRecord(
                    word_id=prompt.word_ref,
                    dimension_id=prompt.dimension_id,
                    annotator_id=cfg.model_name,
                    label=label,
                )
                results[(prompt.prompt_id, cfg.model_name)] = record
                log_stream.write(
                    json.dumps(
                        {
                            "prompt_id": prompt.prompt_id,
                            "word_id": record.word_id,
                            "dimension_id": record.dimension_id,
                            "annotator_id": record.annotator_id,
                            "label": record.label,
                            "raw_text": raw_text,
                            "latency_ms": latency_ms,
                            "attempt_count": attempts,
                            **({"error": error} if error else {}),
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )

    out = []
    for prompt in prompts:
        for cfg in cfgs:
            out.append(results[(prompt.prompt_id, cfg.model_name)])
    return out


def read_response_records(stream: Iterable[str]) -> list[ResponseRecord]:
    records = []
    for line in stream:
        if not line.strip():
            continue
        row = json.loads(line)
        records.append(
            ResponseRecord(
                prompt_id=row["prompt_id"],
                word_id=row["word_id"],
                dimension_id=row["dimension_id"],
                input_type=row["input_type"],
                feature_order=row["feature_order"],
                raw_text=row["raw_text"],
                resolved_label=row["resolved_label"],
                latency_ms=row["latency_ms"],
                attempt_count=row["attempt_count"],
                model=row.get("model", ""),
                error=row.get("error"),
            )
        )
    return records
