"""Batch attention capture over prompt files.

For each two-option prompt this tokenizes the rendered parts, runs the model,
locates the word span and both option-feature spans, restricts the attention
tensor to those positions, and writes one attention-dump file. The word span
is cross-checked against the lexicon so a dump can never silently disagree
with the word it claims to describe.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from capture_runner.afd import write_afd
from capture_runner.model import TinyAttentionModel, load_model
from capture_runner.promptio import PromptRow, WordRow

WORD_MARKER = "\n\n[WORD]\n"
OPTIONS_MARKER = "\n[OPTIONS]\n"
AUDIO_TOKEN_TEMPLATE = "<a{}>"


class CaptureError(ValueError):
    """A prompt could not be captured."""


class TokenizationDivergence(CaptureError):
    """The rendered prompt disagrees with the lexicon or dimension registry."""


class AudioMissing(CaptureError):
    """A prompt references an audio file that does not exist."""


class UnsupportedInputType(CaptureError):
    """Capture only handles `ipa` and `audio` prompts."""


@dataclass(frozen=True)
class CaptureConfig:
    out_dir: Path
    model_id: str = "tiny-attn-v1"
    frame_period_ms: float = 40.0
    attention_kind: str = "post-softmax"


@dataclass
class TokenStream:
    """Tokens for one prompt plus the text-position bookkeeping for spans."""
    strings: list[str] = field(default_factory=list)
    vectors: list[np.ndarray] = field(default_factory=list)
    text: str = ""
    text_token_index: list[int] = field(default_factory=list)
    audio_token_range: tuple[int, int] | None = None


def tokens_from_parts(
    parts,
    model: TinyAttentionModel,
    frame_period_ms: float,
    audio_key: str = "audio",
    audio_root: Path | None = None,
) -> TokenStream:
    """One token per text character; audio parts become one token per frame.

    `text` holds the concatenation of the text parts only, and
    `text_token_index[i]` is the global token index of character `text[i]`,
    so spans found in the text map straight onto token positions.
    """
    stream = TokenStream()
    for part in parts:
        if part.get("type") == "text":
            for ch in part["text"]:
                stream.text += ch
                stream.text_token_index.append(len(stream.strings))
                stream.strings.append(ch)
                stream.vectors.append(model.char_vector(ch))
        elif part.get("type") == "audio":
            if stream.audio_token_range is not None:
                raise CaptureError("prompt has more than one audio part")
            rel = part.get(audio_key)
            if not rel:
                raise AudioMissing(f"audio part lacks a {audio_key!r} path")
            path = Path(rel)
            if audio_root is not None and not path.is_absolute():
                path = audio_root / path
            if not path.is_file():
                raise AudioMissing(f"audio file not found: {path}")
            start = len(stream.strings)
            for i, vec in enumerate(model.audio_frame_vectors(path, frame_period_ms)):
                stream.strings.append(AUDIO_TOKEN_TEMPLATE.format(i))
                stream.vectors.append(vec)
            stream.audio_token_range = (start, len(stream.strings))
        else:
            raise CaptureError(f"unknown part type {part.get('type')!r}")
    if not stream.strings:
        raise CaptureError("prompt has no tokens")
    return stream


def _text_span_tokens(stream: TokenStream, start: int, end: int) -> list[int]:
    return [stream.text_token_index[i] for i in range(start, end)]


def _find_word_span(stream: TokenStream) -> tuple[int, int]:
    pos = stream.text.find(WORD_MARKER)
    if pos < 0:
        raise TokenizationDivergence("prompt text lacks a word section")
    start = pos + len(WORD_MARKER)
    end = stream.text.find("\n", start)
    if end < 0:
        raise TokenizationDivergence("word line is not newline-terminated")
    return start, end


def _find_option_span(stream: TokenStream, slot: int) -> tuple[int, int]:
    options_pos = stream.text.find(OPTIONS_MARKER)
    if options_pos < 0:
        raise TokenizationDivergence("prompt text lacks an options section")
    marker = f"\n{slot}: "
    pos = stream.text.find(marker, options_pos)
    if pos < 0:
        raise TokenizationDivergence(f"prompt text lacks option line {slot}")
    start = pos + len(marker)
    end = stream.text.find("\n", start)
    if end < 0:
        raise TokenizationDivergence(f"option line {slot} is not newline-terminated")
    return start, end


def capture_prompt(
    row: PromptRow,
    cfg: CaptureConfig,
    model: TinyAttentionModel,
    words: dict[str, WordRow],
    dims: dict[str, tuple[str, str]],
    gold: dict[tuple[str, str], str] | None = None,
    audio_root: Path | None = None,
) -> Path:
    """Capture one prompt and return the path of the written dump."""
    if row.input_type not in ("ipa", "audio"):
        raise UnsupportedInputType(
            f"input_type {row.input_type!r} is not capturable; use ipa or audio"
        )
    if row.n_options != 2:
        raise CaptureError("capture handles two-option prompts only")
    word = words.get(row.word_ref)
    if word is None:
        raise CaptureError(f"prompt references unknown word {row.word_ref!r}")
    dim = dims.get(row.dimension_id)
    if dim is None:
        raise CaptureError(f"prompt references unknown dimension {row.dimension_id!r}")
    slot_features = dim if row.feature_order == "normal" else (dim[1], dim[0])

    stream = tokens_from_parts(
        row.parts, model, cfg.frame_period_ms, audio_key="audio", audio_root=audio_root
    )

    if row.input_type == "ipa":
        start, end = _find_word_span(stream)
        rendered = stream.text[start:end]
        expected = " ".join(word.symbols)
        if rendered != expected:
            raise TokenizationDivergence(
                f"rendered word {rendered!r} differs from lexicon form {expected!r}"
            )
        word_tokens = _text_span_tokens(stream, start, end)
    else:
        if stream.audio_token_range is None:
            raise TokenizationDivergence("audio prompt has no audio part")
        word_tokens = list(range(*stream.audio_token_range))

    feature_tokens = []
    for slot in (1, 2):
        start, end = _find_option_span(stream, slot)
        rendered = stream.text[start:end]
        if rendered != slot_features[slot - 1]:
            raise TokenizationDivergence(
                f"option {slot} text {rendered!r} differs from registry feature "
                f"{slot_features[slot - 1]!r}"
            )
        feature_tokens.append(_text_span_tokens(stream, start, end))

    attn, _ = model.forward(np.stack(stream.vectors))
    chosen = model.choose_by_attention(attn, feature_tokens)
    resolved_label = slot_features[chosen]

    selected = sorted(word_tokens) + sorted(feature_tokens[0]) + sorted(feature_tokens[1])
    local = {g: i for i, g in enumerate(selected)}
    manifest = {
        "word_id": row.word_ref,
        "group": word.group,
        "input_type": row.input_type,
        "dimension_id": row.dimension_id,
        "feature_order": row.feature_order,
        "gold_feature": (gold or {}).get((row.word_ref, row.dimension_id), "unknown"),
        "resolved_label": resolved_label,
        "token_strings": [stream.strings[g] for g in selected],
        "input_token_indices": [local[g] for g in sorted(word_tokens)],
        "feature1_token_indices": [local[g] for g in sorted(feature_tokens[0])],
        "feature2_token_indices": [local[g] for g in sorted(feature_tokens[1])],
        "n_layers": model.n_layers,
        "n_heads": model.n_heads,
        "n_sel": len(selected),
        "attention_kind": cfg.attention_kind,
    }
    if row.input_type == "audio":
        manifest["frame_period_ms"] = cfg.frame_period_ms

    restricted = attn[np.ix_(
        range(model.n_layers), range(model.n_heads), selected, selected
    )]
    safe_id = row.prompt_id.replace("|", "__").replace("/", "_")
    path = Path(cfg.out_dir) / f"{safe_id}.afd"
    write_afd(path, manifest, restricted)
    return path


@dataclass
class BatchResult:
    written: list[tuple[str, Path]] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)


def run_capture_batch(
    prompts: list[PromptRow],
    cfg: CaptureConfig,
    words: dict[str, WordRow],
    dims: dict[str, tuple[str, str]],
    gold: dict[tuple[str, str], str] | None = None,
    audio_root: Path | None = None,
) -> BatchResult:
    """Capture every prompt; per-prompt failures are recorded, not fatal."""
    model = load_model(cfg.model_id)
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    result = BatchResult()
    for row in prompts:
        try:
            path = capture_prompt(row, cfg, model, words, dims, gold, audio_root)
        except CaptureError as e:
            result.errors.append((row.prompt_id, str(e)))
        else:
            result.written.append((row.prompt_id, path))
    return result
