"""Systematic CVCV pseudo-word generation and dictionary exclusion filtering."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

from .phonology import (
    NormalizationRules,
    PhonemeInventory,
    RomanizationRules,
    normalize_ipa,
    romanize,
)

log = logging.getLogger(__name__)


class EmptyCategory(ValueError):
    """The inventory lacks consonants or vowels."""


@dataclass(frozen=True)
class PseudoWord:
    """A CVCV candidate. ``ipa_string`` is the joined, separator-free form."""

    id: str
    symbols: tuple[str, str, str, str]
    ipa_string: str
    romanized: str


@dataclass
class ExclusionIndex:
    """Normalized dictionary pronunciations mapped to a source tag."""

    pronunciations: dict[str, str] = field(default_factory=dict)
    malformed_lines: int = 0

    def add(self, normalized_ipa: str, source_tag: str) -> None:
        self.pronunciations.setdefault(normalized_ipa, source_tag)

    def __contains__(self, ipa_string: str) -> bool:
        return ipa_string in self.pronunciations

    def __len__(self) -> int:
        return len(self.pronunciations)


def generate_candidates(
    inv: PhonemeInventory,
    rom_rules: RomanizationRules | None = None,
) -> list[PseudoWord]:
    """Enumerate every C1 V1 C2 V2 combination in inventory file order.

    IDs are positional in this full enumeration, so they stay stable no
    matter what later filtering removes.
    """
    consonants = inv.consonants()
    vowels = inv.vowels()
    if not consonants:
        raise EmptyCategory("inventory has no consonant symbols")
    if not vowels:
        raise EmptyCategory("inventory has no vowel symbols")
    width = max(4, len(str(len(consonants) ** 2 * len(vowels) ** 2 - 1)))
    out: list[PseudoWord] = []
    i = 0
    for c1 in consonants:
        for v1 in vowels:
            for c2 in consonants:
                for v2 in vowels:
                    symbols = (c1, v1, c2, v2)
                    out.append(
                        PseudoWord(
                            id=f"cw{i:0{width}d}",
                            symbols=symbols,
                            ipa_string="".join(symbols),
                            romanized=romanize(symbols, rom_rules) if rom_rules else "",
                        )
                    )
                    i += 1
    return out


def build_exclusion_index(
    entries: Iterable[tuple[str, str]] | Iterable[str],
    rules: NormalizationRules,
) -> ExclusionIndex:
    """Normalize raw pronunciations and index them for exact-match lookup.

    ``entries`` are raw IPA strings or (raw IPA, source_tag) pairs. Empty
    pronunciations count as malformed instead of failing the build.
    """
    idx = ExclusionIndex()
    for entry in entries:
        if isinstance(entry, str):
            raw, tag = entry, ""
        else:
            raw, tag = entry
        normalized = normalize_ipa(raw, rules).replace(" ", "")
        if not normalized:
            idx.malformed_lines += 1
            continue
        idx.add(normalized, tag)
    return idx


def parse_dict_file(path: str | Path, source_tag: str | None = None) -> tuple[list[tuple[str, str]], int]:
    """Read ``orthography<TAB>/ipa/`` lines, returning (ipa, tag) pairs.

    Returns the entries plus a malformed-line count; slashes around the
    pronunciation are optional.
    """
    path = Path(path)
    tag = source_tag if source_tag is not None else path.name
    entries: list[tuple[str, str]] = []
    malformed = 0
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            malformed += 1
            continue
        _, _, ipa = line.partition("\t")
        ipa = ipa.strip().strip("/")
        if not ipa:
            malformed += 1
            continue
        entries.append((ipa, tag))
    return entries, malformed


def filter_candidates(
    cands: Sequence[PseudoWord],
    idx: ExclusionIndex,
) -> tuple[list[PseudoWord], list[tuple[PseudoWord, str]]]:
    """Split candidates into (kept, removed) by exact normalized-IPA lookup."""
    kept: list[PseudoWord] = []
    removed: list[tuple[PseudoWord, str]] = []
    for word in cands:
        if word.ipa_string in idx:
            removed.append((word, idx.pronunciations[word.ipa_string]))
        else:
            kept.append(word)
    return kept, removed


def apply_manual_removals(
    kept: Sequence[PseudoWord],
    removal_list: Iterable[str],
) -> list[PseudoWord]:
    """Drop words whose ipa_string appears in the removal list, keeping order.

    Listed words that are not present are logged as warnings, not errors.
    """
    removals = set(removal_list)
    present = {w.ipa_string for w in kept}
    for missing in sorted(removals - present):
        log.warning("removal-list word not present: %s", missing)
    return [w for w in kept if w.ipa_string not in removals]


def write_words_jsonl(words: Sequence[PseudoWord], stream: IO[str]) -> None:
    """Serialize words one JSON object per line, fixed key order."""
    for w in words:
        row = {
            "id": w.id,
            "ipa": w.ipa_string,
            "symbols": list(w.symbols),
            "romanized": w.romanized,
            "group": "constructed",
        }
        stream.write(json.dumps(row, ensure_ascii=False) + "\n")
