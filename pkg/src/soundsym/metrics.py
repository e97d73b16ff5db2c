"""Accuracy, per-dimension macro-F1, aggregation schemes, rank/linear
correlation, and audio-advantage scores."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .phonology import DATA_DIR
from .semdim import INVALID, SemanticDimension

NATURAL_LANGUAGES = ("English", "French", "Japanese", "Korean")
EVAL_INPUT_TYPES = ("original", "ipa", "audio")


class EmptyAfterExclusion(ValueError):
    """Every prediction was invalid, leaving nothing to score."""


class DegenerateVariance(ValueError):
    """Correlation is undefined: fewer than two shared points or zero variance."""


@dataclass(frozen=True)
class MacroF1Result:
    accuracy: float
    macro_f1: float
    n: int
    n_invalid: int
    zero_denominator_features: tuple[str, ...] = ()


@dataclass(frozen=True)
class EvalCell:
    model: str
    group: str  # "natural" | "constructed"
    language: str | None
    input_type: str
    dimension_id: str
    accuracy: float
    macro_f1: float
    n: int
    n_invalid: int

    def key(self) -> str:
        lang = self.language or "-"
        return f"{self.model}/{self.group}/{lang}/{self.input_type}/{self.dimension_id}"


@dataclass(frozen=True)
class Summary:
    key: tuple[tuple[str, str], ...]
    mean_macro_f1: float
    mean_accuracy: float
    constituents: tuple[str, ...]
    missing: tuple[str, ...] = ()


@dataclass
class MetricTable:
    cells: list[EvalCell]
    summaries: list[Summary] = field(default_factory=list)


def macro_f1(
    gold: Sequence[str],
    pred: Sequence[str],
    dim: SemanticDimension,
) -> MacroF1Result:
    """Score predictions against gold for one dimension.

    Invalid predictions are excluded from accuracy and from TP/FP/FN but
    counted in n_invalid. Per-feature F1 = 2TP/(2TP+FP+FN), defined as 0
    when the denominator is 0 (those features are flagged).
    """
    if len(gold) != len(pred):
        raise ValueError(f"gold/pred length mismatch: {len(gold)} vs {len(pred)}")
    if not gold:
        raise ValueError("empty gold sequence")
    features = dim.features()
    for g in gold:
        if g not in features:
            raise ValueError(f"gold label {g!r} not a feature of dimension {dim.id!r}")
    pairs = [(g, p) for g, p in zip(gold, pred) if p != INVALID]
    n_invalid = len(gold) - len(pairs)
    if not pairs:
        raise EmptyAfterExclusion(f"dimension {dim.id!r}: all {len(gold)} predictions invalid")
    for _, p in pairs:
        if p not in features:
            raise ValueError(f"prediction {p!r} not a feature of dimension {dim.id!r}")

    correct = sum(1 for g, p in pairs if g == p)
    f1s: list[float] = []
    zero_denoms: list[str] = []
    for feature in features:
        tp = sum(1 for g, p in pairs if g == feature and p == feature)
        fp = sum(1 for g, p in pairs if g != feature and p == feature)
        fn = sum(1 for g, p in pairs if g == feature and p != feature)
        denom = 2 * tp + fp + fn
        if denom == 0:
            zero_denoms.append(feature)
            f1s.append(0.0)
        else:
            f1s.append(2 * tp / denom)
    return MacroF1Result(
        accuracy=correct / len(pairs),
        macro_f1=sum(f1s) / len(f1s),
        n=len(pairs),
        n_invalid=n_invalid,
        zero_denominator_features=tuple(zero_denoms),
    )


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _dimension_mean(cells: Sequence[EvalCell]) -> tuple[float, float]:
    """Unweighted mean (macro_f1, accuracy) over per-dimension cells."""
    return _mean([c.macro_f1 for c in cells]), _mean([c.accuracy for c in cells])


def aggregate(
    cells: Sequence[EvalCell],
    scheme: str,
    languages: Sequence[str] = NATURAL_LANGUAGES,
    input_types: Sequence[str] = EVAL_INPUT_TYPES,
) -> MetricTable:
    """Average cells according to a named scheme, keeping a trace.

    natural-group: per model, dimension-mean each (language, input_type),
    then the unweighted mean over languages x input_types.
    constructed-group: per model, dimension-mean each input_type, then the
    mean over input types. per-input-type: per (model, group, input_type),
    dimension means (natural additionally averaged over languages).
    Missing combinations are reported on the summary, never silently
    skipped.
    """
    table = MetricTable(cells=list(cells))
    models = sorted({c.model for c in cells})

    def bucket(model: str, group: str, language: str | None, input_type: str) -> list[EvalCell]:
        return [
            c
            for c in cells
            if c.model == model
            and c.group == group
            and c.language == language
            and c.input_type == input_type
        ]

    if scheme == "natural-group":
        for model in models:
            stage: list[tuple[float, float]] = []
            constituents: list[str] = []
            missing: list[str] = []
            for language in languages:
                for input_type in input_types:
                    sub = bucket(model, "natural", language, input_type)
                    if not sub:
                        missing.append(f"{model}/natural/{language}/{input_type}")
                        continue
                    stage.append(_dimension_mean(sub))
                    constituents.extend(c.key() for c in sub)
            if stage:
                table.summaries.append(
                    Summary(
                        key=(("model", model), ("group", "natural")),
                        mean_macro_f1=_mean([s[0] for s in stage]),
                        mean_accuracy=_mean([s[1] for s in stage]),
                        constituents=tuple(constituents),
                        missing=tuple(missing),
                    )
                )
    elif scheme == "constructed-group":
        for model in models:
            stage = []
            constituents = []
            missing = []
            for input_type in input_types:
                sub = bucket(model, "constructed", None, input_type)
                if not sub:
                    missing.append(f"{model}/constructed/-/{input_type}")
                    continue
                stage.append(_dimension_mean(sub))
                constituents.extend(c.key() for c in sub)
            if stage:
                table.summaries.append(
                    Summary(
                        key=(("model", model), ("group", "constructed")),
                        mean_macro_f1=_mean([s[0] for s in stage]),
                        mean_accuracy=_mean([s[1] for s in stage]),
                        constituents=tuple(constituents),
                        missing=tuple(missing),
                    )
                )
    elif scheme == "per-input-type":
        groups = sorted({c.group for c in cells})
        for model in models:
            for group in groups:
                for input_type in input_types:
                    stage = []
                    constituents = []
                    missing = []
                    langs: Sequence[str | None] = languages if group == "natural" else (None,)
                    for language in langs:
                        sub = bucket(model, group, language, input_type)
                        if not sub:
                            missing.append(f"{model}/{group}/{language or '-'}/{input_type}")
                            continue
                        stage.append(_dimension_mean(sub))
                        constituents.extend(c.key() for c in sub)
                    if stage:
                        table.summaries.append(
                            Summary(
                                key=(
                                    ("model", model),
                                    ("group", group),
                                    ("input_type", input_type),
                                ),
                                mean_macro_f1=_mean([s[0] for s in stage]),
                                mean_accuracy=_mean([s[1] for s in stage]),
                                constituents=tuple(constituents),
                                missing=tuple(missing),
                            )
                        )
    else:
        raise ValueError(f"unknown aggregation scheme {scheme!r}")
    return table


def pearson(h: Mapping[str, float], m: Mapping[str, float]) -> float:
    """Centered product-moment correlation over the shared keys."""
    shared = sorted(set(h) & set(m))
    if len(shared) < 2:
        raise DegenerateVariance(f"need at least 2 shared dimensions, have {len(shared)}")
    xs = [float(h[k]) for k in shared]
    ys = [float(m[k]) for k in shared]
    mx = _mean(xs)
    my = _mean(ys)
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    if vx == 0.0 or vy == 0.0:
        raise DegenerateVariance("zero variance on one side")
    return cov / math.sqrt(vx * vy)


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties sharing the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(h: Mapping[str, float], m: Mapping[str, float]) -> float:
    """Pearson correlation of average-tie ranks over the shared keys."""
    shared = sorted(set(h) & set(m))
    if len(shared) < 2:
        raise DegenerateVariance(f"need at least 2 shared dimensions, have {len(shared)}")
    h_ranks = average_ranks([float(h[k]) for k in shared])
    m_ranks = average_ranks([float(m[k]) for k in shared])
    return pearson(
        {k: r for k, r in zip(shared, h_ranks)},
        {k: r for k, r in zip(shared, m_ranks)},
    )


@dataclass
class AdvantageResult:
    values: dict[tuple[str, str], float] = field(default_factory=dict)
    skipped: list[tuple[str, str]] = field(default_factory=list)


def advantage(cells: Sequence[EvalCell]) -> AdvantageResult:
    """Audio minus original macro-F1 per (group, dimension).

    Each side is first averaged within model (over languages for natural
    cells), then across models, then differenced. Pairs missing either
    input type are skipped and reported.
    """
    def model_mean(group: str, input_type: str, dim: str) -> float | None:
        per_model: list[float] = []
        for model in sorted({c.model for c in cells}):
            sub = [
                c
                for c in cells
                if c.model == model
                and c.group == group
                and c.input_type == input_type
                and c.dimension_id == dim
            ]
            if sub:
                per_model.append(_mean([c.macro_f1 for c in sub]))
        if not per_model:
            return None
        return _mean(per_model)

    result = AdvantageResult()
    pairs = sorted({(c.group, c.dimension_id) for c in cells})
    for group, dim in pairs:
        s_audio = model_mean(group, "audio", dim)
        s_orig = model_mean(group, "original", dim)
        if s_audio is None or s_orig is None:
            result.skipped.append((group, dim))
            continue
        result.values[(group, dim)] = s_audio - s_orig
    return result


def column_means(rows: Sequence[Mapping[str, float]], columns: Sequence[str]) -> dict[str, float]:
    """Unweighted per-column means over a sequence of numeric rows."""
    if not rows:
        raise ValueError("no rows to average")
    return {col: _mean([float(r[col]) for r in rows]) for col in columns}


LAYER_TABLE_COLUMNS = ("natural_ipa", "natural_audio", "constructed_ipa", "constructed_audio")


def load_layer_table(path: str | Path | None = None) -> list[dict[str, float]]:
    """Measured per-layer mean attention fractions, shipped as a fixture."""
    if path is None:
        path = DATA_DIR / "layerwise_attention_fractions.csv"
    source = Path(path) if isinstance(path, str) else path
    rows: list[dict[str, float]] = []
    for row in csv.DictReader(source.read_text(encoding="utf-8").splitlines()):
        parsed: dict[str, float] = {"layer": int(row["layer"])}
        for col in LAYER_TABLE_COLUMNS:
            parsed[col] = float(row[col])
        rows.append(parsed)
    return rows


CELL_CSV_COLUMNS = (
    "model",
    "group",
    "language",
    "input_type",
    "dimension",
    "accuracy",
    "macro_f1",
    "n",
    "n_invalid",
)


def write_cells_csv(cells: Sequence[EvalCell], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CELL_CSV_COLUMNS)
    for c in cells:
        writer.writerow(
            [
                c.model,
                c.group,
                c.language or "",
                c.input_type,
                c.dimension_id,
                f"{c.accuracy:.10g}",
                f"{c.macro_f1:.10g}",
                c.n,
                c.n_invalid,
            ]
        )


def read_cells_csv(stream: Iterable[str]) -> list[EvalCell]:
    cells = []
    for row in csv.DictReader(stream):
        cells.append(
            EvalCell(
                model=row["model"],
                group=row["group"],
                language=row["language"] or None,
                input_type=row["input_type"],
                dimension_id=row["dimension"],
                accuracy=float(row["accuracy"]),
                macro_f1=float(row["macro_f1"]),
                n=int(row["n"]),
                n_invalid=int(row["n_invalid"]),
            )
        )
    return cells
