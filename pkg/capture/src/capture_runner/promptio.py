"""Readers for the evaluation file formats the capture runner consumes:
prompt JSONL, lexicon JSONL, gold-label JSONL, and the dimension registry TSV."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable


@dataclass(frozen=True)
class PromptRow:
    prompt_id: str
    word_ref: str
    input_type: str
    dimension_id: str
    feature_order: str
    n_options: int
    parts: tuple[dict, ...]


@dataclass(frozen=True)
class WordRow:
    word_id: str
    ipa: str
    symbols: tuple[str, ...]
    group: str
    romanized: str = ""
    audio: str | None = None


def read_prompts(stream: Iterable[str]) -> list[PromptRow]:
    rows = []
    for line in stream:
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        rows.append(PromptRow(
            prompt_id=d["prompt_id"],
            word_ref=d["word_ref"],
            input_type=d["input_type"],
            dimension_id=d["dimension_id"],
            feature_order=d["feature_order"],
            n_options=int(d["n_options"]),
            parts=tuple(d["parts"]),
        ))
    return rows


def read_words(stream: Iterable[str]) -> dict[str, WordRow]:
    words = {}
    for line in stream:
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        words[d["id"]] = WordRow(
            word_id=d["id"],
            ipa=d.get("ipa", ""),
            symbols=tuple(d.get("symbols", ())),
            group=d.get("group", "constructed"),
            romanized=d.get("romanized", ""),
            audio=d.get("audio"),
        )
    return words


def read_gold(stream: Iterable[str]) -> dict[tuple[str, str], str]:
    gold = {}
    for line in stream:
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        gold[(d["word_id"], d["dimension_id"])] = d["feature"]
    return gold


def read_dimensions(stream: Iterable[str]) -> dict[str, tuple[str, str]]:
    """Dimension registry rows: id, positive-pole feature, negative-pole feature."""
    dims = {}
    for line in stream:
        line = line.rstrip("\n")
        if not line or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ValueError(f"bad dimension row {line!r}")
        dims[fields[0]] = (fields[1], fields[2])
    return dims


def read_lines(path: str | Path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()
