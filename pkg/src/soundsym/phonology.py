"""IPA phoneme inventories, tokenization, normalization, and romanization.

All operations are pure functions over immutable rule tables loaded from
tab-separated data files, so they are safe for concurrent use.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib.resources import files
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

DATA_DIR = files("soundsym") / "data"

CONSONANT_CATEGORIES = frozenset(
    {"sonorant", "voiced_fricative", "voiceless_fricative", "voiceless_stop", "voiced_stop"}
)
VOWEL_CATEGORIES = frozenset({"front_vowel", "back_vowel"})
CATEGORY_NAMES = CONSONANT_CATEGORIES | VOWEL_CATEGORIES | frozenset({"other"})


class UnknownSymbol(ValueError):
    """No inventory symbol matches the input at ``position``."""

    def __init__(self, position: int, snippet: str):
        self.position = position
        self.snippet = snippet
        super().__init__(f"no inventory symbol matches at position {position}: {snippet!r}")


class UnmappedSyllable(KeyError):
    """A consonant-vowel pair has no romanization rule."""


class MalformedRuleFile(ValueError):
    """A rule file line does not follow the key<TAB>value layout."""


@dataclass(frozen=True)
class PhonemeInventory:
    """Ordered IPA symbol set with a category for every symbol."""

    symbols: tuple[str, ...]
    category_of: Mapping[str, str]

    def __post_init__(self) -> None:
        seen = set()
        for sym in self.symbols:
            if not sym:
                raise ValueError("inventory symbols must be non-empty")
            if sym in seen:
                raise ValueError(f"duplicate inventory symbol: {sym!r}")
            seen.add(sym)
            cat = self.category_of.get(sym)
            if cat not in CATEGORY_NAMES:
                raise ValueError(f"symbol {sym!r} has invalid category {cat!r}")

    def consonants(self) -> tuple[str, ...]:
        return tuple(s for s in self.symbols if self.category_of[s] in CONSONANT_CATEGORIES)

    def vowels(self) -> tuple[str, ...]:
        return tuple(s for s in self.symbols if self.category_of[s] in VOWEL_CATEGORIES)


@dataclass(frozen=True)
class NormalizationRules:
    """String rewrites applied before tokenization.

    Application order is notation, then allophones, then mark stripping;
    the composed mapping must be idempotent (checked at load time against
    every rule's right-hand side).
    """

    notation_map: tuple[tuple[str, str], ...]
    allophone_map: tuple[tuple[str, str], ...]
    strip_marks: tuple[str, ...]


@dataclass(frozen=True)
class RomanizationRules:
    """Letter maps for rendering CV syllables as TTS-friendly orthography."""

    consonant_map: Mapping[str, str]
    vowel_map: Mapping[str, str]
    syllable_overrides: Mapping[str, str]
    no_hyphen_when_final: frozenset[str]

    def syllable_text(self, consonant: str, vowel: str) -> str:
        key = consonant + vowel
        if key in self.syllable_overrides:
            return self.syllable_overrides[key]
        try:
            return self.consonant_map[consonant] + self.vowel_map[vowel]
        except KeyError:
            raise UnmappedSyllable(f"no romanization for syllable /{consonant}{vowel}/") from None


def iter_rule_lines(path: str | Path) -> Iterator[tuple[str, str]]:
    """Yield (key, value) pairs from a tab-separated rule file.

    Blank lines and lines starting with '#' are skipped. A line without a
    tab yields an empty value, which deletion rules rely on (editors often
    trim trailing tabs).
    """
    source = Path(path) if isinstance(path, str) else path
    text = source.read_text(encoding="utf-8")
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, _, value = line.partition("\t")
        yield key, value.strip()


def load_inventory(path: str | Path) -> PhonemeInventory:
    symbols: list[str] = []
    category_of: dict[str, str] = {}
    for key, value in iter_rule_lines(path):
        symbols.append(key)
        category_of[key] = value
    return PhonemeInventory(symbols=tuple(symbols), category_of=category_of)


def default_constructed_inventory() -> PhonemeInventory:
    return load_inventory(DATA_DIR / "inventory_constructed.tsv")


def default_natural_inventory() -> PhonemeInventory:
    return load_inventory(DATA_DIR / "inventory_natural.tsv")


def load_normalization_rules(path: str | Path | None = None) -> NormalizationRules:
    if path is None:
        path = DATA_DIR / "normalization.tsv"
    notation: list[tuple[str, str]] = []
    allophone: list[tuple[str, str]] = []
    strips: list[str] = []
    for key, value in iter_rule_lines(path):
        kind, _, subject = key.partition(":")
        if not subject:
            raise MalformedRuleFile(f"normalization key must be kind:symbol, got {key!r}")
        if kind == "notation":
            notation.append((subject, value))
        elif kind == "allophone":
            allophone.append((subject, value))
        elif kind == "strip":
            strips.append(subject)
        else:
            raise MalformedRuleFile(f"unknown normalization rule kind {kind!r}")
    rules = NormalizationRules(
        notation_map=tuple(notation),
        allophone_map=tuple(allophone),
        strip_marks=tuple(strips),
    )
    for _, replacement in rules.notation_map + rules.allophone_map:
        if normalize_ipa(replacement, rules) != replacement:
            raise MalformedRuleFile(f"rules are not idempotent: {replacement!r} is rewritten again")
    return rules


def load_romanization_rules(path: str | Path | None = None) -> RomanizationRules:
    if path is None:
        path = DATA_DIR / "romanization.tsv"
    consonant: dict[str, str] = {}
    vowel: dict[str, str] = {}
    overrides: dict[str, str] = {}
    final_attach: set[str] = set()
    for key, value in iter_rule_lines(path):
        kind, _, subject = key.partition(":")
        if kind == "consonant":
            consonant[subject] = value
        elif kind == "vowel":
            vowel[subject] = value
        elif kind == "syllable":
            overrides[subject] = value
        elif kind == "no_hyphen_when_final":
            final_attach.add(subject)
        else:
            raise MalformedRuleFile(f"unknown romanization rule kind {kind!r}")
    return RomanizationRules(
        consonant_map=consonant,
        vowel_map=vowel,
        syllable_overrides=overrides,
        no_hyphen_when_final=frozenset(final_attach),
    )


def normalize_ipa(raw: str, rules: NormalizationRules) -> str:
    """Strip markers, rewrite notation variants, and collapse allophones.

    Marks are stripped first because a mark inside a digraph (e.g. a
    stress mark between the two characters of a diphthong) would otherwise
    hide a notation match and break idempotence. Unknown characters pass
    through untouched; tokenization reports them.
    """
    out = raw
    for mark in rules.strip_marks:
        out = out.replace(mark, "")
    for src, dst in rules.notation_map:
        out = out.replace(src, dst)
    for src, dst in rules.allophone_map:
        out = out.replace(src, dst)
    return out


def tokenize_ipa(
    raw: str,
    inv: PhonemeInventory,
    on_unknown: str = "error",
) -> list[str]:
    """Split an IPA string into inventory symbols by greedy longest match.

    Whitespace is an authoritative symbol boundary: no symbol may span it.
    With ``on_unknown="accept"`` an unmatched character becomes its own
    single-character token (categorized "other" downstream) instead of
    raising UnknownSymbol.
    """
    if on_unknown not in ("error", "accept"):
        raise ValueError(f"on_unknown must be 'error' or 'accept', got {on_unknown!r}")
    if not raw.strip():
        raise ValueError("IPA input is empty")
    symbol_set = set(inv.symbols)
    max_len = max(len(s) for s in inv.symbols)
    tokens: list[str] = []
    for chunk_match in re.finditer(r"\S+", raw):
        chunk = chunk_match.group()
        base = chunk_match.start()
        i = 0
        while i < len(chunk):
            for length in range(min(max_len, len(chunk) - i), 0, -1):
                cand = chunk[i : i + length]
                if cand in symbol_set:
                    tokens.append(cand)
                    i += length
                    break
            else:
                if on_unknown == "accept":
                    tokens.append(chunk[i])
                    i += 1
                else:
                    pos = base + i
                    raise UnknownSymbol(pos, raw[pos : pos + 3])
    return tokens


def category_of_token(token: str, inv: PhonemeInventory) -> str:
    """Category for a token, falling back to "other" for accepted unknowns."""
    return inv.category_of.get(token, "other")


def romanize(word: Sequence[str], rules: RomanizationRules) -> str:
    """Render a CV-alternating IPA symbol sequence as hyphenated orthography.

    Syllables are joined with hyphens; a final syllable listed in the
    no-hyphen set attaches directly to the previous syllable.
    """
    if not word or len(word) % 2 != 0:
        raise UnmappedSyllable(f"word is not a CV sequence: {list(word)!r}")
    syllables = [(word[i], word[i + 1]) for i in range(0, len(word), 2)]
    parts = [rules.syllable_text(c, v) for c, v in syllables]
    last_key = syllables[-1][0] + syllables[-1][1]
    if len(parts) > 1 and last_key in rules.no_hyphen_when_final:
        return "-".join(parts[:-1]) + parts[-1]
    return "-".join(parts)
