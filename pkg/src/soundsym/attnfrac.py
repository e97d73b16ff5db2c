"""Phoneme-feature attention fractions: span alignment, per-layer
normalized fraction scores, order combining, aggregation, and report export."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .dumps import AttentionDump, Manifest
from .semdim import SemanticDimension

MODES = ("head_sum", "head_mean")
COMBINE_POLICIES = ("both-required", "available")


class AlignmentMismatch(ValueError):
    """Input tokens cannot be segmented into the word's IPA symbols."""


class LengthMismatch(ValueError):
    """Frame labels and audio input tokens differ in count."""


@dataclass(frozen=True)
class PhonemeSpan:
    symbol: str
    token_indices: tuple[int, ...]


@dataclass(frozen=True)
class LayerSpanFraction:
    layer: int
    symbol: str
    fraction1: float  # attention share of the option-1 feature's queries
    fraction2: float


@dataclass
class FractionResult:
    entries: list[LayerSpanFraction] = field(default_factory=list)
    zero_attention: list[tuple[int, str]] = field(default_factory=list)
    skipped_reason: str | None = None


@dataclass(frozen=True)
class FractionSample:
    """One word's fraction for a canonical feature at (symbol, layer)."""

    word_id: str
    dimension_id: str
    symbol: str
    layer: int
    feature: str
    fraction: float
    is_gold: bool
    order: str = "combined"  # "normal" | "reversed" | "combined"


@dataclass
class FractionTable:
    """Mean fraction and sample count per (symbol, feature, layer)."""

    entries: dict[tuple[str, str, int], tuple[float, int]] = field(default_factory=dict)


def align_text_spans(
    manifest: Manifest,
    expected_symbols: Sequence[str] | None = None,
) -> list[PhonemeSpan]:
    """Map each whitespace-separated IPA symbol to its contiguous token run.

    The concatenated input-token strings must reconstruct the spaced IPA
    word; a token that straddles a symbol boundary, or a symbol sequence
    that disagrees with ``expected_symbols``, raises AlignmentMismatch.
    """
    if manifest.input_type != "ipa":
        raise ValueError(f"align_text_spans needs input_type 'ipa', got {manifest.input_type!r}")
    tokens = [manifest.token_strings[i] for i in manifest.input_token_indices]
    full = "".join(tokens)
    # chunk id per character of `full`; None for whitespace
    chunk_of_char: list[int | None] = []
    chunk_texts: list[str] = []
    in_chunk = False
    for ch in full:
        if ch.isspace():
            chunk_of_char.append(None)
            in_chunk = False
        else:
            if not in_chunk:
                chunk_texts.append("")
                in_chunk = True
            chunk_texts[-1] += ch
            chunk_of_char.append(len(chunk_texts) - 1)
    if not chunk_texts:
        raise AlignmentMismatch("input tokens contain no symbols")
    if expected_symbols is not None and list(expected_symbols) != chunk_texts:
        raise AlignmentMismatch(
            f"token text {chunk_texts!r} does not match expected symbols {list(expected_symbols)!r}"
        )

    token_positions_per_chunk: dict[int, list[int]] = {i: [] for i in range(len(chunk_texts))}
    pending_space_tokens: list[int] = []
    offset = 0
    for pos, token in enumerate(tokens):
        chunks_here = {
            c for c in chunk_of_char[offset : offset + len(token)] if c is not None
        }
        offset += len(token)
        if len(chunks_here) > 1:
            raise AlignmentMismatch(f"token {token!r} spans a symbol boundary")
        if not chunks_here:
            pending_space_tokens.append(pos)
            continue
        chunk = chunks_here.pop()
        for p in pending_space_tokens:
            token_positions_per_chunk[chunk].append(p)
        pending_space_tokens = []
        token_positions_per_chunk[chunk].append(pos)
    for p in pending_space_tokens:  # trailing whitespace tokens
        token_positions_per_chunk[len(chunk_texts) - 1].append(p)

    spans: list[PhonemeSpan] = []
    for chunk, text in enumerate(chunk_texts):
        positions = sorted(token_positions_per_chunk[chunk])
        if positions != list(range(positions[0], positions[-1] + 1)):
            raise AlignmentMismatch(f"symbol {text!r} maps to non-contiguous tokens")
        spans.append(
            PhonemeSpan(
                symbol=text,
                token_indices=tuple(manifest.input_token_indices[p] for p in positions),
            )
        )
    return spans


def align_audio_spans(
    manifest: Manifest,
    frame_labels: Sequence[str | None],
) -> list[PhonemeSpan]:
    """Merge consecutive identical frame labels into spans; drop null frames."""
    if manifest.input_type != "audio":
        raise ValueError(f"align_audio_spans needs input_type 'audio', got {manifest.input_type!r}")
    if len(frame_labels) != len(manifest.input_token_indices):
        raise LengthMismatch(
            f"{len(frame_labels)} frame labels vs {len(manifest.input_token_indices)} audio tokens"
        )
    spans: list[PhonemeSpan] = []
    run_label: str | None = None
    run: list[int] = []
    for idx, label in zip(manifest.input_token_indices, frame_labels):
        if label is None or label != run_label:
            if run_label is not None and run:
                spans.append(PhonemeSpan(symbol=run_label, token_indices=tuple(run)))
            run_label = label
            run = []
        if label is not None:
            run.append(idx)
    if run_label is not None and run:
        spans.append(PhonemeSpan(symbol=run_label, token_indices=tuple(run)))
    return spans


def fraction_scores(
    dump: AttentionDump,
    spans: Sequence[PhonemeSpan],
    mode: str = "head_sum",
) -> FractionResult:
    """Per-layer, per-span normalized attention fractions.

    head_sum sums attention over heads, feature-query tokens, and span key
    tokens before normalizing; head_mean normalizes per head and averages
    the per-head fractions (heads with zero paired attention are excluded).
    Dumps whose resolved label differs from the gold feature are skipped,
    not scored. Spans where both features' attention sums to zero are
    skipped and counted.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    result = FractionResult()
    man = dump.manifest
    if man.resolved_label != man.gold_feature:
        result.skipped_reason = "incorrect_response"
        return result
    f1 = list(man.feature1_token_indices)
    f2 = list(man.feature2_token_indices)
    input_set = set(man.input_token_indices)
    tensor = np.asarray(dump.tensor, dtype=np.float64)
    for span in spans:
        if not set(span.token_indices) <= input_set:
            raise ValueError(f"span {span.symbol!r} indices outside the input token set")
    heads = range(man.n_heads)
    for layer in range(man.n_layers):
        t = tensor[layer]
        for span in spans:
            keys = list(span.token_indices)
            if mode == "head_sum":
                s1 = float(t[np.ix_(heads, f1, keys)].sum())
                s2 = float(t[np.ix_(heads, f2, keys)].sum())
                if s1 + s2 == 0.0:
                    result.zero_attention.append((layer, span.symbol))
                    continue
                frac1 = s1 / (s1 + s2)
            else:
                per_head: list[float] = []
                for h in heads:
                    s1h = float(t[h][np.ix_(f1, keys)].sum())
                    s2h = float(t[h][np.ix_(f2, keys)].sum())
                    if s1h + s2h > 0.0:
                        per_head.append(s1h / (s1h + s2h))
                if not per_head:
                    result.zero_attention.append((layer, span.symbol))
                    continue
                frac1 = sum(per_head) / len(per_head)
            result.entries.append(
                LayerSpanFraction(layer=layer, symbol=span.symbol, fraction1=frac1, fraction2=1.0 - frac1)
            )
    return result


def samples_from_dump(
    dump: AttentionDump,
    spans: Sequence[PhonemeSpan],
    registry: Mapping[str, SemanticDimension],
    mode: str = "head_sum",
) -> tuple[list[FractionSample], FractionResult]:
    """Score a dump and map option-slot fractions onto canonical features.

    Under reversed presentation the option-1 slot holds feature_b, so the
    slot fractions are relabeled before anything downstream sees them.
    """
    man = dump.manifest
    dim = registry[man.dimension_id]
    if man.feature_order == "normal":
        slot1_feature, slot2_feature = dim.feature_a, dim.feature_b
    else:
        slot1_feature, slot2_feature = dim.feature_b, dim.feature_a
    result = fraction_scores(dump, spans, mode=mode)
    samples: list[FractionSample] = []
    for entry in result.entries:
        for feature, fraction in (
            (slot1_feature, entry.fraction1),
            (slot2_feature, entry.fraction2),
        ):
            samples.append(
                FractionSample(
                    word_id=man.word_id,
                    dimension_id=man.dimension_id,
                    symbol=entry.symbol,
                    layer=entry.layer,
                    feature=feature,
                    fraction=fraction,
                    is_gold=feature == man.gold_feature,
                    order=man.feature_order,
                )
            )
    return samples, result


def combine_orders(
    normal: float | None,
    reversed_: float | None,
    policy: str = "both-required",
) -> float | None:
    """Mean of the two feature-order runs; policy governs single-run pairs."""
    if policy not in COMBINE_POLICIES:
        raise ValueError(f"policy must be one of {COMBINE_POLICIES}, got {policy!r}")
    if normal is not None and reversed_ is not None:
        return (normal + reversed_) / 2.0
    if policy == "available":
        return normal if normal is not None else reversed_
    return None


def combine_order_samples(
    samples: Iterable[FractionSample],
    policy: str = "both-required",
) -> tuple[list[FractionSample], int]:
    """Pair samples across feature orders by (word, dim, symbol, layer,
    feature) and combine them; returns the merged samples and the number
    of keys dropped by the both-required policy.

    Each key may carry at most one sample per order (one dump per order
    per word and dimension).
    """
    by_key: dict[tuple, dict[str, FractionSample]] = {}
    for s in samples:
        key = (s.word_id, s.dimension_id, s.symbol, s.layer, s.feature)
        per_order = by_key.setdefault(key, {})
        if s.order in per_order:
            raise ValueError(f"duplicate {s.order!r}-order sample for {key}")
        per_order[s.order] = s
    merged: list[FractionSample] = []
    dropped = 0
    for key in sorted(by_key):
        per_order = by_key[key]
        normal = per_order.get("normal")
        rev = per_order.get("reversed")
        combined = combine_orders(
            normal.fraction if normal else None,
            rev.fraction if rev else None,
            policy=policy,
        )
        if combined is None:
            dropped += 1
            continue
        any_sample = normal or rev
        merged.append(
            FractionSample(
                word_id=key[0],
                dimension_id=key[1],
                symbol=key[2],
                layer=key[3],
                feature=key[4],
                fraction=combined,
                is_gold=any_sample.is_gold,
                order="combined",
            )
        )
    return merged, dropped


def aggregate_fractions(samples: Iterable[FractionSample]) -> FractionTable:
    """Unweighted mean over words per (symbol, feature, layer)."""
    sums: dict[tuple[str, str, int], tuple[float, int]] = {}
    for s in samples:
        key = (s.symbol, s.feature, s.layer)
        total, count = sums.get(key, (0.0, 0))
        sums[key] = (total + s.fraction, count + 1)
    table = FractionTable()
    for key in sorted(sums):
        total, count = sums[key]
        table.entries[key] = (total / count, count)
    return table


def layer_curve(samples: Iterable[FractionSample]) -> list[tuple[int, float, int]]:
    """Per-layer mean of the gold feature's fraction across words, symbols,
    and dimensions: the layer-curve summary."""
    sums: dict[int, tuple[float, int]] = {}
    for s in samples:
        if not s.is_gold:
            continue
        total, count = sums.get(s.layer, (0.0, 0))
        sums[s.layer] = (total + s.fraction, count + 1)
    return [(layer, sums[layer][0] / sums[layer][1], sums[layer][1]) for layer in sorted(sums)]


def write_fraction_table_csv(table: FractionTable, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["symbol", "feature", "layer", "mean_fraction", "n_samples"])
    for (symbol, feature, layer), (mean, count) in table.entries.items():
        writer.writerow([symbol, feature, layer, f"{mean:.10g}", count])


def read_fraction_table_csv(stream: Iterable[str]) -> FractionTable:
    table = FractionTable()
    for row in csv.DictReader(stream):
        key = (row["symbol"], row["feature"], int(row["layer"]))
        table.entries[key] = (float(row["mean_fraction"]), int(row["n_samples"]))
    return table


def heatmap_rows(table: FractionTable) -> list[tuple[str, str, float, int]]:
    """Layer-averaged mean fraction per (symbol, feature)."""
    grouped: dict[tuple[str, str], list[float]] = {}
    for (symbol, feature, _layer), (mean, _count) in table.entries.items():
        grouped.setdefault((symbol, feature), []).append(mean)
    return [
        (symbol, feature, sum(means) / len(means), len(means))
        for (symbol, feature), means in sorted(grouped.items())
    ]


def export_reports(
    table: FractionTable,
    out_dir: str | Path,
    curve: Sequence[tuple[int, float, int]] | None = None,
    svg: bool = False,
) -> list[Path]:
    """Write heatmap CSV, layer-curve CSV, and an optional SVG rendering."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    heatmap_path = out / "heatmap.csv"
    with open(heatmap_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["symbol", "feature", "mean_fraction", "n_layers"])
        for symbol, feature, mean, n_layers in heatmap_rows(table):
            writer.writerow([symbol, feature, f"{mean:.10g}", n_layers])
    written.append(heatmap_path)

    curve_path = out / "layer_curve.csv"
    with open(curve_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["layer", "mean_fraction", "n_samples"])
        for layer, mean, count in curve or ():
            writer.writerow([layer, f"{mean:.10g}", count])
    written.append(curve_path)

    if svg:
        svg_path = out / "layer_curve.svg"
        svg_path.write_text(render_curve_svg(curve or ()), encoding="utf-8")
        written.append(svg_path)
    return written


def render_curve_svg(curve: Sequence[tuple[int, float, int]]) -> str:
    """Minimal deterministic line chart of the per-layer mean fractions."""
    width, height, pad = 640, 360, 48
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if curve:
        xs = [layer for layer, _, _ in curve]
        ys = [mean for _, mean, _ in curve]
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys + [0.5]), max(ys + [0.5])
        if y_hi == y_lo:
            y_hi = y_lo + 1e-6
        x_span = (x_hi - x_lo) or 1

        def sx(x: float) -> float:
            return pad + (x - x_lo) / x_span * (width - 2 * pad)

        def sy(y: float) -> float:
            return height - pad - (y - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

        baseline = sy(0.5)
        lines.append(
            f'<line x1="{pad}" y1="{baseline:.2f}" x2="{width - pad}" y2="{baseline:.2f}" '
            f'stroke="#999999" stroke-dasharray="4 3"/>'
        )
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        lines.append(f'<polyline points="{points}" fill="none" stroke="#1f6fb2" stroke-width="2"/>')
        for x, y in zip(xs, ys):
            lines.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="#1f6fb2"/>')
        lines.append(
            f'<text x="{pad}" y="{height - pad + 28}" font-family="monospace" font-size="12">'
            f"layer {x_lo}..{x_hi}, mean gold-feature attention fraction</text>"
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
