"""Semantic-dimension registry, coefficient scoring of constructed words,
neutral-band thresholding, and unanimous-agreement merging of annotations."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .phonology import DATA_DIR, PhonemeInventory, iter_rule_lines
from .wordgen import PseudoWord

NEUTRAL = "neutral"
NEITHER = "neither"
INVALID = "invalid"


class MissingCoefficient(KeyError):
    def __init__(self, category: str, dimension_id: str):
        self.category = category
        self.dimension_id = dimension_id
        super().__init__(f"no coefficient for category {category!r} on dimension {dimension_id!r}")


class DegenerateDistribution(UserWarning):
    """All scores on a dimension are identical, so the neutral band is empty."""


@dataclass(frozen=True)
class SemanticDimension:
    id: str
    feature_a: str
    feature_b: str

    def __post_init__(self) -> None:
        if self.feature_a == self.feature_b:
            raise ValueError(f"dimension {self.id!r} has identical features")

    def features(self) -> tuple[str, str]:
        return (self.feature_a, self.feature_b)


@dataclass(frozen=True)
class DimensionScore:
    word_id: str
    dimension_id: str
    score: float
    label: str | None = None


@dataclass(frozen=True)
class AnnotationRecord:
    word_id: str
    dimension_id: str
    annotator_id: str
    label: str


@dataclass(frozen=True)
class GoldLabel:
    word_id: str
    dimension_id: str
    feature: str


@dataclass
class CoefficientTable:
    """(phoneme category, dimension id) -> deviation-from-mean coefficient."""

    coeff: dict[tuple[str, str], float] = field(default_factory=dict)

    def dimensions(self) -> list[str]:
        return sorted({dim for _, dim in self.coeff})

    def lookup(self, category: str, dimension_id: str) -> float:
        try:
            return self.coeff[(category, dimension_id)]
        except KeyError:
            raise MissingCoefficient(category, dimension_id) from None

    def validate_coverage(self, categories: Iterable[str], dimension_ids: Iterable[str]) -> None:
        for dim in dimension_ids:
            for cat in categories:
                if (cat, dim) not in self.coeff:
                    raise MissingCoefficient(cat, dim)


def load_dimensions(path: str | Path | None = None) -> dict[str, SemanticDimension]:
    """Load the dimension registry, keyed by id, preserving file order."""
    if path is None:
        path = DATA_DIR / "dimensions.tsv"
    registry: dict[str, SemanticDimension] = {}
    for key, value in iter_rule_lines(path):
        feature_a, _, feature_b = value.partition("\t")
        if not feature_a or not feature_b:
            raise ValueError(f"dimension line needs id<TAB>feature_a<TAB>feature_b, got {key!r}")
        if key in registry:
            raise ValueError(f"duplicate dimension id {key!r}")
        registry[key] = SemanticDimension(id=key, feature_a=feature_a, feature_b=feature_b)
    return registry


def load_coefficients(path: str | Path) -> CoefficientTable:
    table = CoefficientTable()
    with open(path, encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            key = (row["category"], row["dimension_id"])
            if key in table.coeff:
                raise ValueError(f"duplicate coefficient row for {key}")
            table.coeff[key] = float(row["coefficient"])
    return table


def score_word(word: PseudoWord, table: CoefficientTable, dim: SemanticDimension,
               inv: PhonemeInventory) -> float:
    """Mean of the four per-phoneme category coefficients for ``dim``."""
    total = 0.0
    for sym in word.symbols:
        category = inv.category_of.get(sym, "other")
        total += table.lookup(category, dim.id)
    return total / len(word.symbols)


def _population_sigma(values: Sequence[float]) -> float:
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def threshold_labels(
    scores: Sequence[DimensionScore],
    registry: Mapping[str, SemanticDimension],
    k: float = 1.0,
    sigma_scope: str = "per-dimension",
) -> list[DimensionScore]:
    """Label each score feature_a / feature_b / neutral by a k-sigma band.

    Sigma is the population standard deviation over the provided scores,
    per dimension by default or pooled across dimensions with
    ``sigma_scope="pooled"``. A zero-sigma dimension labels everything
    neutral and emits a DegenerateDistribution warning. Zero scores never
    count as positive, so they label feature_b whenever they escape the
    neutral band (only possible at k=0).
    """
    if sigma_scope not in ("per-dimension", "pooled"):
        raise ValueError(f"sigma_scope must be 'per-dimension' or 'pooled', got {sigma_scope!r}")
    by_dim: dict[str, list[DimensionScore]] = {}
    for s in scores:
        if s.dimension_id not in registry:
            raise KeyError(f"unknown dimension id {s.dimension_id!r}")
        by_dim.setdefault(s.dimension_id, []).append(s)

    pooled_sigma = _population_sigma([s.score for s in scores]) if scores else 0.0
    labeled: list[DimensionScore] = []
    for dim_id, dim_scores in by_dim.items():
        sigma = pooled_sigma if sigma_scope == "pooled" else _population_sigma(
            [s.score for s in dim_scores]
        )
        if sigma == 0.0 and k > 0:
            warnings.warn(
                f"dimension {dim_id!r}: identical scores, labeling all rows neutral",
                DegenerateDistribution,
            )
            labeled.extend(replace(s, label=NEUTRAL) for s in dim_scores)
            continue
        dim = registry[dim_id]
        for s in dim_scores:
            if abs(s.score) < k * sigma:
                label = NEUTRAL
            elif s.score > 0:
                label = dim.feature_a
            else:
                label = dim.feature_b
            labeled.append(replace(s, label=label))
    return labeled


def gold_from_labeled(labeled: Iterable[DimensionScore]) -> list[GoldLabel]:
    """Drop neutral rows and convert the rest to gold labels."""
    return [
        GoldLabel(word_id=s.word_id, dimension_id=s.dimension_id, feature=s.label)
        for s in labeled
        if s.label is not None and s.label != NEUTRAL
    ]


@dataclass
class MergeResult:
    gold: list[GoldLabel]
    n_cells: int = 0
    n_unanimous: int = 0
    n_dropped_missing: int = 0
    n_dropped_disagreement: int = 0
    n_dropped_neither: int = 0


def merge_unanimous(
    records: Sequence[AnnotationRecord],
    annotators: Iterable[str],
) -> MergeResult:
    """Keep a (word, dimension) cell only when every annotator labeled it,
    all labels agree, and the agreed label is not "neither".

    Invalid labels count as missing. Output preserves first-seen cell order.
    """
    required = set(annotators)
    if not required:
        raise ValueError("annotator set is empty")
    cells: dict[tuple[str, str], dict[str, str]] = {}
    order: list[tuple[str, str]] = []
    for rec in records:
        key = (rec.word_id, rec.dimension_id)
        if key not in cells:
            cells[key] = {}
            order.append(key)
        if rec.annotator_id in required and rec.label != INVALID:
            cells[key][rec.annotator_id] = rec.label

    result = MergeResult(gold=[], n_cells=len(order))
    for key in order:
        votes = cells[key]
        if set(votes) != required:
            result.n_dropped_missing += 1
            continue
        labels = set(votes.values())
        if len(labels) > 1:
            result.n_dropped_disagreement += 1
            continue
        label = labels.pop()
        if label == NEITHER:
            result.n_dropped_neither += 1
            continue
        result.n_unanimous += 1
        result.gold.append(GoldLabel(word_id=key[0], dimension_id=key[1], feature=label))
    return result


@dataclass(frozen=True)
class FilterReport:
    before: int
    after: int

    @property
    def filtered_fraction(self) -> float:
        if self.before == 0:
            return 0.0
        return 1.0 - self.after / self.before

    @property
    def filtered_percent(self) -> float:
        return round(100.0 * self.filtered_fraction, 1)


def filter_stats(before: int, after: int) -> FilterReport:
    if before < 0 or after < 0 or after > before:
        raise ValueError(f"invalid filter counts: before={before}, after={after}")
    return FilterReport(before=before, after=after)


def load_label_counts(path: str | Path | None = None) -> list[dict[str, int | str]]:
    """Per-dimension gold-label counts fixture (natural and constructed)."""
    if path is None:
        path = DATA_DIR / "dimension_label_counts.csv"
    source = Path(path) if isinstance(path, str) else path
    rows: list[dict[str, int | str]] = []
    for row in csv.DictReader(source.read_text(encoding="utf-8").splitlines()):
        rows.append(
            {
                "dimension_id": row["dimension_id"],
                "natural_feature_a": int(row["natural_feature_a"]),
                "natural_feature_b": int(row["natural_feature_b"]),
                "constructed_feature_a": int(row["constructed_feature_a"]),
                "constructed_feature_b": int(row["constructed_feature_b"]),
            }
        )
    return rows


def write_gold_jsonl(gold: Sequence[GoldLabel], stream: IO[str]) -> None:
    for g in gold:
        stream.write(
            json.dumps(
                {"word_id": g.word_id, "dimension_id": g.dimension_id, "feature": g.feature},
                ensure_ascii=False,
            )
            + "\n"
        )


def read_gold_jsonl(stream: Iterable[str]) -> list[GoldLabel]:
    gold = []
    for line in stream:
        if not line.strip():
            continue
        row = json.loads(line)
        gold.append(GoldLabel(row["word_id"], row["dimension_id"], row["feature"]))
    return gold


def read_annotations_jsonl(stream: Iterable[str]) -> list[AnnotationRecord]:
    records = []
    for line in stream:
        if not line.strip():
            continue
        row = json.loads(line)
        records.append(
            AnnotationRecord(row["word_id"], row["dimension_id"], row["annotator_id"], row["label"])
        )
    return records
