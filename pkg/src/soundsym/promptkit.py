"""Prompt construction for annotation and A/B tests, feature-order
reversal, and strict response parsing."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .phonology import DATA_DIR
from .semdim import INVALID, NEITHER, SemanticDimension

AB_INPUT_TYPES = ("original", "ipa", "audio", "ipa_plus_audio")
FEATURE_ORDERS = ("normal", "reversed")
AUDIO_PLACEHOLDER = "{AUDIO}"


class MissingForm(ValueError):
    """The entry lacks the form (orthography, IPA, audio) the input type needs."""


class MissingMeaning(ValueError):
    """The entry has no meaning text for an annotation prompt."""


@dataclass(frozen=True)
class LexiconEntry:
    """One word with its forms and metadata."""

    id: str
    group: str
    language: str | None = None
    orthography: str | None = None
    ipa: str | None = None
    symbols: tuple[str, ...] = ()
    romanized: str | None = None
    audio: str | None = None
    meaning: str | None = None

    @classmethod
    def from_json(cls, row: Mapping) -> "LexiconEntry":
        return cls(
            id=row["id"],
            group=row.get("group", "constructed"),
            language=row.get("language"),
            orthography=row.get("orthography"),
            ipa=row.get("ipa"),
            symbols=tuple(row.get("symbols", ())),
            romanized=row.get("romanized"),
            audio=row.get("audio"),
            meaning=row.get("meaning"),
        )


@dataclass(frozen=True)
class PromptPart:
    kind: str  # "text" | "audio"
    text: str = ""
    audio: str = ""


@dataclass(frozen=True)
class PromptSpec:
    prompt_id: str
    word_ref: str
    input_type: str
    dimension_id: str
    feature_order: str
    n_options: int
    rendered_parts: tuple[PromptPart, ...]

    def flatten(self, audio_marker: str = "<AUDIO>") -> str:
        """Single-string rendering with a visible stand-in for audio parts."""
        return "".join(p.text if p.kind == "text" else audio_marker for p in self.rendered_parts)


@dataclass(frozen=True)
class ParsedResponse:
    choice: int | str  # 1 | 2 | 3 | "invalid"
    raw_text: str


def load_template(name: str, template_dir: str | Path | None = None) -> str:
    if template_dir is not None:
        return (Path(template_dir) / f"{name}.txt").read_text(encoding="utf-8")
    return (DATA_DIR / "templates" / f"{name}.txt").read_text(encoding="utf-8")


def _substitute(template: str, values: Mapping[str, str]) -> str:
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


def _split_audio_parts(text: str, audio_ref: str) -> tuple[PromptPart, ...]:
    """Split rendered text on the audio placeholder into text/audio parts."""
    pieces = text.split(AUDIO_PLACEHOLDER)
    if len(pieces) == 1:
        return (PromptPart(kind="text", text=text),)
    if len(pieces) != 2:
        raise ValueError("template must contain at most one audio placeholder")
    parts: list[PromptPart] = []
    if pieces[0]:
        parts.append(PromptPart(kind="text", text=pieces[0]))
    parts.append(PromptPart(kind="audio", audio=audio_ref))
    if pieces[1]:
        parts.append(PromptPart(kind="text", text=pieces[1]))
    return tuple(parts)


def word_form(entry: LexiconEntry, input_type: str) -> str:
    """The text that fills the [WORD] slot for the given input type."""
    if input_type == "original":
        if not entry.orthography:
            raise MissingForm(f"entry {entry.id!r} has no orthography")
        return entry.orthography
    if input_type in ("ipa", "ipa_plus_audio"):
        if entry.symbols:
            return " ".join(entry.symbols)
        if entry.ipa:
            return entry.ipa
        raise MissingForm(f"entry {entry.id!r} has no IPA form")
    if input_type == "audio":
        return ""
    raise ValueError(f"unknown input type {input_type!r}")


def ordered_features(dim: SemanticDimension, order: str) -> tuple[str, str]:
    """(option-1 feature, option-2 feature) under the given presentation order."""
    if order == "normal":
        return (dim.feature_a, dim.feature_b)
    if order == "reversed":
        return (dim.feature_b, dim.feature_a)
    raise ValueError(f"unknown feature order {order!r}")


def build_ab_prompt(
    entry: LexiconEntry,
    dim: SemanticDimension,
    input_type: str,
    order: str = "normal",
    template_dir: str | Path | None = None,
) -> PromptSpec:
    """Instantiate the A/B template for ``input_type``, option order per
    ``order`` (reversed swaps which feature is option 1 vs 2)."""
    if input_type not in AB_INPUT_TYPES:
        raise ValueError(f"unknown input type {input_type!r}")
    needs_audio = input_type in ("audio", "ipa_plus_audio")
    if needs_audio and not entry.audio:
        raise MissingForm(f"entry {entry.id!r} has no audio reference")
    feature1, feature2 = ordered_features(dim, order)
    template = load_template(f"ab_{input_type}", template_dir)
    text = _substitute(
        template,
        {"word": word_form(entry, input_type), "feature1": feature1, "feature2": feature2},
    )
    parts = _split_audio_parts(text, entry.audio or "")
    return PromptSpec(
        prompt_id=f"{entry.id}|{dim.id}|{input_type}|{order}",
        word_ref=entry.id,
        input_type=input_type,
        dimension_id=dim.id,
        feature_order=order,
        n_options=2,
        rendered_parts=parts,
    )


def build_annotation_prompt(
    entry: LexiconEntry,
    dim: SemanticDimension,
    language: str,
    template_dir: str | Path | None = None,
) -> PromptSpec:
    """Instantiate the 3-option annotation template (features + Neither)."""
    if not entry.meaning:
        raise MissingMeaning(f"entry {entry.id!r} has no meaning text")
    if not entry.orthography:
        raise MissingForm(f"entry {entry.id!r} has no orthography")
    template = load_template("annotation", template_dir)
    text = _substitute(
        template,
        {
            "language": language,
            "word": entry.orthography,
            "meaning": entry.meaning,
            "feature1": dim.feature_a,
            "feature2": dim.feature_b,
        },
    )
    return PromptSpec(
        prompt_id=f"{entry.id}|{dim.id}|annotation|{language}",
        word_ref=entry.id,
        input_type="annotation",
        dimension_id=dim.id,
        feature_order="normal",
        n_options=3,
        rendered_parts=(PromptPart(kind="text", text=text),),
    )


_LONE_INT = re.compile(r"^\d+$")


def parse_response(raw: str, n_options: int) -> ParsedResponse:
    """Accept a lone in-range integer (surrounding whitespace ignored);
    anything else is invalid, never guessed."""
    stripped = raw.strip()
    if _LONE_INT.match(stripped):
        choice = int(stripped)
        if 1 <= choice <= n_options:
            return ParsedResponse(choice=choice, raw_text=raw)
    return ParsedResponse(choice=INVALID, raw_text=raw)


def resolve_choice(resp: ParsedResponse, dim: SemanticDimension, order: str) -> str:
    """Map a numeric choice back to a canonical feature label, un-swapping
    reversed presentation order. Choice 3 means "neither"."""
    if resp.choice == INVALID:
        return INVALID
    if resp.choice == 3:
        return NEITHER
    feature1, feature2 = ordered_features(dim, order)
    return feature1 if resp.choice == 1 else feature2


def write_prompts_jsonl(prompts: Sequence[PromptSpec], stream: IO[str]) -> None:
    for p in prompts:
        row = {
            "prompt_id": p.prompt_id,
            "word_ref": p.word_ref,
            "input_type": p.input_type,
            "dimension_id": p.dimension_id,
            "feature_order": p.feature_order,
            "n_options": p.n_options,
            "parts": [
                {"type": part.kind, "text": part.text} if part.kind == "text"
                else {"type": part.kind, "audio": part.audio}
                for part in p.rendered_parts
            ],
        }
        stream.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_prompts_jsonl(stream: Iterable[str]) -> list[PromptSpec]:
    prompts = []
    for line in stream:
        if not line.strip():
            continue
        row = json.loads(line)
        parts = tuple(
            PromptPart(kind=part["type"], text=part.get("text", ""), audio=part.get("audio", ""))
            for part in row["parts"]
        )
        prompts.append(
            PromptSpec(
                prompt_id=row["prompt_id"],
                word_ref=row["word_ref"],
                input_type=row["input_type"],
                dimension_id=row["dimension_id"],
                feature_order=row["feature_order"],
                n_options=row["n_options"],
                rendered_parts=parts,
            )
        )
    return prompts


def read_lexicon_jsonl(stream: Iterable[str]) -> list[LexiconEntry]:
    entries = []
    for line in stream:
        if not line.strip():
            continue
        entries.append(LexiconEntry.from_json(json.loads(line)))
    return entries
