"""Shared fixtures: a tiny workspace of prompt, lexicon, gold, and registry
files. Prompt files are produced by the evaluation package's own writer so
the capture runner is exercised against the real file interface."""
from __future__ import annotations

import json
import math
import struct
import wave
from pathlib import Path

import pytest

from soundsym import promptkit
from soundsym.semdim import load_dimensions

from capture_runner.model import load_model

WORD_SYMBOLS = {
    "cw0000": ("l", "i", "l", "i"),
    "cw0001": ("m", "ɑ", "m", "ow"),
    "cw0002": ("k", "i", "t", "ej"),
    "cw0003": ("s", "ej", "p", "ɑ"),
    "cw0004": ("g", "ow", "d", "i"),
}


@pytest.fixture(scope="session")
def model():
    return load_model("tiny-attn-v1")


@pytest.fixture(scope="session")
def registry():
    return load_dimensions()


def entry_for(word_id: str, audio: str | None = None) -> promptkit.LexiconEntry:
    symbols = WORD_SYMBOLS[word_id]
    return promptkit.LexiconEntry(
        id=word_id, group="constructed", ipa="".join(symbols), symbols=symbols,
        romanized="", audio=audio,
    )


def write_prompts(path: Path, specs) -> None:
    with open(path, "w", encoding="utf-8") as f:
        promptkit.write_prompts_jsonl(specs, f)


def write_sine_wav(path: Path, seconds: float = 0.2, rate: int = 16000,
                   freq: float = 440.0) -> None:
    # 16-bit PCM mono sine wave.
    n = int(rate * seconds)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(b"".join(
            struct.pack("<h", int(20000 * math.sin(2 * math.pi * freq * t / rate)))
            for t in range(n)
        ))


@pytest.fixture
def workspace(tmp_path: Path, registry):
    """words.jsonl, gold.jsonl, dimensions.tsv, and an audio file."""
    words_path = tmp_path / "words.jsonl"
    with open(words_path, "w", encoding="utf-8") as f:
        for word_id, symbols in WORD_SYMBOLS.items():
            f.write(json.dumps({
                "id": word_id, "ipa": "".join(symbols), "symbols": list(symbols),
                "romanized": "", "group": "constructed",
            }, ensure_ascii=False) + "\n")

    gold_path = tmp_path / "gold.jsonl"
    gold_path.write_text(json.dumps({
        "word_id": "cw0000", "dimension_id": "sharp-round", "feature": "sharp",
    }) + "\n", encoding="utf-8")

    dims_path = tmp_path / "dimensions.tsv"
    with open(dims_path, "w", encoding="utf-8") as f:
        f.write("# dimension_id, feature_a, feature_b\n")
        for dim in registry.values():
            f.write(f"{dim.id}\t{dim.feature_a}\t{dim.feature_b}\n")

    wav_path = tmp_path / "cw0000.wav"
    write_sine_wav(wav_path)
    return tmp_path
