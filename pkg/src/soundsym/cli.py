"""Command-line pipeline: every stage is a subcommand with file-based,
reproducible I/O. Exit code 0 on success; 2 on validation failure with a
machine-readable JSON error on stderr."""
from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import click

from . import attnfrac, dumps, metrics, phonology, promptkit, runner, semdim, textgrid, wordgen

VALIDATION_ERRORS = (ValueError, KeyError, OSError, json.JSONDecodeError)


def _fail(exc: BaseException) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(payload, ensure_ascii=False), err=True)
    sys.exit(2)


def _emit(report: dict) -> None:
    click.echo(json.dumps(report, ensure_ascii=False, sort_keys=True))


class Pipeline(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except VALIDATION_ERRORS as exc:
            _fail(exc)


@click.group(cls=Pipeline)
@click.option("--seed", type=int, default=42, show_default=True, help="Seed for any sampling.")
@click.option("--log-level", default="WARNING", show_default=True)
@click.option(
    "--workdir",
    type=click.Path(file_okay=False),
    default=".",
    show_default=True,
    help="Base directory for relative paths.",
)
@click.pass_context
def main(ctx: click.Context, seed: int, log_level: str, workdir: str) -> None:
    import logging

    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.WARNING))
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["workdir"] = Path(workdir)


def _p(ctx: click.Context, path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    return p if p.is_absolute() else ctx.obj["workdir"] / p


def _load_registry(ctx: click.Context, path: str | None) -> dict[str, semdim.SemanticDimension]:
    return semdim.load_dimensions(_p(ctx, path))


def _read_lines(path: Path) -> list[str]:
    return path.read_text(encoding="utf-8").splitlines()


@main.command("gen-words")
@click.option("--inventory", "inventory_path", type=str, default=None)
@click.option("--dict", "dict_paths", type=str, multiple=True)
@click.option("--removals", "removals_path", type=str, default=None)
@click.option("--normalization", "normalization_path", type=str, default=None)
@click.option("--romanization", "romanization_path", type=str, default=None)
@click.option("--out", "out_path", type=str, required=True)
@click.pass_context
def gen_words(ctx, inventory_path, dict_paths, removals_path, normalization_path,
              romanization_path, out_path):
    """Generate CVCV candidates, filter against dictionaries, apply removals."""
    inv = (
        phonology.load_inventory(_p(ctx, inventory_path))
        if inventory_path
        else phonology.default_constructed_inventory()
    )
    norm_rules = phonology.load_normalization_rules(_p(ctx, normalization_path))
    rom_rules = phonology.load_romanization_rules(_p(ctx, romanization_path))
    candidates = wordgen.generate_candidates(inv, rom_rules)

    entries: list[tuple[str, str]] = []
    malformed = 0
    for dict_path in dict_paths:
        file_entries, file_malformed = wordgen.parse_dict_file(_p(ctx, dict_path))
        entries.extend(file_entries)
        malformed += file_malformed
    index = wordgen.build_exclusion_index(entries, norm_rules)
    kept, removed = wordgen.filter_candidates(candidates, index)

    removed_manual = 0
    if removals_path:
        removal_list = [
            line.strip()
            for line in _read_lines(_p(ctx, removals_path))
            if line.strip() and not line.lstrip().startswith("#")
        ]
        before = len(kept)
        kept = wordgen.apply_manual_removals(kept, removal_list)
        removed_manual = before - len(kept)

    out = _p(ctx, out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        wordgen.write_words_jsonl(kept, f)
    _emit(
        {
            "candidates": len(candidates),
            "dictionary_entries": len(index),
            "malformed_dict_lines": malformed,
            "excluded": len(removed),
            "removed_manual": removed_manual,
            "final": len(kept),
            "out": str(out),
        }
    )


@main.command("score-dims")
@click.option("--coeffs", "coeffs_path", type=str, required=True)
@click.option("--words", "words_path", type=str, required=True)
@click.option("--dimensions", "dimensions_path", type=str, default=None)
@click.option("--inventory", "inventory_path", type=str, default=None)
@click.option("--k", type=float, default=1.0, show_default=True)
@click.option(
    "--sigma-scope",
    type=click.Choice(["per-dimension", "pooled"]),
    default="per-dimension",
    show_default=True,
)
@click.option("--out", "out_path", type=str, required=True)
@click.option("--scores-out", "scores_out_path", type=str, default=None)
@click.pass_context
def score_dims(ctx, coeffs_path, words_path, dimensions_path, inventory_path, k,
               sigma_scope, out_path, scores_out_path):
    """Score constructed words per dimension and emit non-neutral gold labels."""
    registry = _load_registry(ctx, dimensions_path)
    inv = (
        phonology.load_inventory(_p(ctx, inventory_path))
        if inventory_path
        else phonology.default_constructed_inventory()
    )
    table = semdim.load_coefficients(_p(ctx, coeffs_path))
    dims = [d for d in table.dimensions() if d in registry]
    if not dims:
        raise ValueError("coefficient table covers no known dimensions")
    categories = sorted({inv.category_of[s] for s in inv.symbols})
    table.validate_coverage(categories, dims)

    words = []
    for line in _read_lines(_p(ctx, words_path)):
        if not line.strip():
            continue
        row = json.loads(line)
        words.append(
            wordgen.PseudoWord(
                id=row["id"],
                symbols=tuple(row["symbols"]),
                ipa_string=row["ipa"],
                romanized=row.get("romanized", ""),
            )
        )

    scores = [
        semdim.DimensionScore(
            word_id=w.id,
            dimension_id=dim_id,
            score=semdim.score_word(w, table, registry[dim_id], inv),
        )
        for dim_id in dims
        for w in words
    ]
    labeled = semdim.threshold_labels(scores, registry, k=k, sigma_scope=sigma_scope)
    gold = semdim.gold_from_labeled(labeled)

    out = _p(ctx, out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        semdim.write_gold_jsonl(gold, f)
    if scores_out_path:
        import csv as _csv

        with open(_p(ctx, scores_out_path), "w", encoding="utf-8", newline="") as f:
            writer = _csv.writer(f, lineterminator="\n")
            writer.writerow(["word_id", "dimension_id", "score", "label"])
            for s in labeled:
                writer.writerow([s.word_id, s.dimension_id, f"{s.score:.10g}", s.label])

    per_dim: dict[str, dict[str, int]] = {}
    for s in labeled:
        per_dim.setdefault(s.dimension_id, {})
        per_dim[s.dimension_id][s.label] = per_dim[s.dimension_id].get(s.label, 0) + 1
    _emit(
        {
            "words": len(words),
            "dimensions": len(dims),
            "scored": len(scores),
            "gold": len(gold),
            "neutral": sum(1 for s in labeled if s.label == semdim.NEUTRAL),
            "per_dimension": per_dim,
            "out": str(out),
        }
    )


@main.command("merge-annotations")
@click.option("--input", "input_paths", type=str, multiple=True, required=True)
@click.option(
    "--strategy", type=click.Choice(["unanimous"]), default="unanimous", show_default=True
)
@click.option("--annotators", "annotators_csv", type=str, default=None,
              help="Comma-separated annotator ids; default: all ids seen in the inputs.")
@click.option("--out", "out_path", type=str, required=True)
@click.pass_context
def merge_annotations(ctx, input_paths, strategy, annotators_csv, out_path):
    """Merge per-model annotations into unanimous gold labels."""
    records: list[semdim.AnnotationRecord] = []
    for path in input_paths:
        records.extend(semdim.read_annotations_jsonl(_read_lines(_p(ctx, path))))
    if annotators_csv:
        annotators = {a.strip() for a in annotators_csv.split(",") if a.strip()}
    else:
        annotators = {r.annotator_id for r in records}
    result = semdim.merge_unanimous(records, annotators)
    stats = semdim.filter_stats(before=result.n_cells, after=len(result.gold))

    out = _p(ctx, out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        semdim.write_gold_jsonl(result.gold, f)
    _emit(
        {
            "records": len(records),
            "annotators": sorted(annotators),
            "cells": result.n_cells,
            "unanimous": result.n_unanimous,
            "dropped_missing": result.n_dropped_missing,
            "dropped_disagreement": result.n_dropped_disagreement,
            "dropped_neither": result.n_dropped_neither,
            "gold": len(result.gold),
            "filtered_percent": stats.filtered_percent,
            "out": str(out),
        }
    )


@main.command("build-prompts")
@click.option("--words", "words_path", type=str, required=True)
@click.option("--dimensions", "dimensions_path", type=str, default=None)
@click.option("--mode", type=click.Choice(["ab", "annotation"]), default="ab", show_default=True)
@click.option(
    "--input-type",
    "input_types",
    type=click.Choice(list(promptkit.AB_INPUT_TYPES)),
    multiple=True,
    default=("ipa",),
    show_default=True,
)
@click.option("--orders", default="normal,reversed", show_default=True)
@click.option("--dims", "dims_csv", type=str, default=None,
              help="Comma-separated dimension ids; default: every registry dimension.")
@click.option("--gold", "gold_path", type=str, default=None,
              help="Restrict to (word, dimension) pairs present in this gold JSONL.")
@click.option("--language", type=str, default=None, help="Language tag for annotation prompts.")
@click.option("--audio-dir", "audio_dir", type=str, default=None,
              help="Derive missing audio references as <dir>/<word_id>.wav.")
@click.option("--template-dir", "template_dir", type=str, default=None)
@click.option("--sample", "sample_n", type=int, default=None,
              help="Randomly sample this many prompts (seeded).")
@click.option("--out", "out_path", type=str, required=True)
@click.pass_context
def build_prompts(ctx, words_path, dimensions_path, mode, input_types, orders, dims_csv,
                  gold_path, language, audio_dir, template_dir, sample_n, out_path):
    """Render prompt JSONL for the runner."""
    registry = _load_registry(ctx, dimensions_path)
    entries = promptkit.read_lexicon_jsonl(_read_lines(_p(ctx, words_path)))
    if audio_dir:
        base = _p(ctx, audio_dir)
        entries = [
            e if e.audio else promptkit.LexiconEntry(
                id=e.id, group=e.group, language=e.language, orthography=e.orthography,
                ipa=e.ipa, symbols=e.symbols, romanized=e.romanized,
                audio=str(base / f"{e.id}.wav"), meaning=e.meaning,
            )
            for e in entries
        ]

    if dims_csv:
        dim_ids = [d.strip() for d in dims_csv.split(",") if d.strip()]
        for d in dim_ids:
            if d not in registry:
                raise KeyError(f"unknown dimension id {d!r}")
    else:
        dim_ids = list(registry)

    allowed_pairs = None
    if gold_path:
        gold = semdim.read_gold_jsonl(_read_lines(_p(ctx, gold_path)))
        allowed_pairs = {(g.word_id, g.dimension_id) for g in gold}

    order_list = [o.strip() for o in orders.split(",") if o.strip()]
    for o in order_list:
        if o not in promptkit.FEATURE_ORDERS:
            raise ValueError(f"unknown feature order {o!r}")

    tdir = _p(ctx, template_dir)
    prompts: list[promptkit.PromptSpec] = []
    if mode == "annotation":
        if not language:
            raise ValueError("--language is required for annotation prompts")
        for entry in entries:
            for dim_id in dim_ids:
                if allowed_pairs is not None and (entry.id, dim_id) not in allowed_pairs:
                    continue
                prompts.append(
                    promptkit.build_annotation_prompt(entry, registry[dim_id], language, tdir)
                )
    else:
        for entry in entries:
            for dim_id in dim_ids:
                if allowed_pairs is not None and (entry.id, dim_id) not in allowed_pairs:
                    continue
                for input_type in input_types:
                    for order in order_list:
                        prompts.append(
                            promptkit.build_ab_prompt(
                                entry, registry[dim_id], input_type, order, tdir
                            )
                        )

    if sample_n is not None and sample_n < len(prompts):
        rng = random.Random(ctx.obj["seed"])
        prompts = rng.sample(prompts, sample_n)
        prompts.sort(key=lambda p: p.prompt_id)

    out = _p(ctx, out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        promptkit.write_prompts_jsonl(prompts, f)
    _emit({"prompts": len(prompts), "out": str(out)})


@main.command("run-eval")
@click.option("--prompts", "prompts_path", type=str, required=True)
@click.option("--endpoint", "endpoint_url", type=str, required=True)
@click.option("--model", "model_names", type=str, multiple=True, required=True)
@click.option("--mode", type=click.Choice(["ab", "annotation"]), default="ab", show_default=True)
@click.option("--log", "log_path", type=str, required=True)
@click.option("--dimensions", "dimensions_path", type=str, default=None)
@click.option("--max-in-flight", type=int, default=4, show_default=True)
@click.option("--temperature", type=float, default=0.0, show_default=True)
@click.option("--max-tokens", type=int, default=1024, show_default=True)
@click.option("--timeout", type=float, default=60.0, show_default=True)
@click.option("--auth-env", type=str, default=None,
              help="Environment variable name holding the bearer token.")
@click.pass_context
def run_eval(ctx, prompts_path, endpoint_url, model_names, mode, log_path, dimensions_path,
             max_in_flight, temperature, max_tokens, timeout, auth_env):
    """Send prompts to an endpoint, resolving and logging responses."""
    registry = _load_registry(ctx, dimensions_path)
    prompts = promptkit.read_prompts_jsonl(_read_lines(_p(ctx, prompts_path)))
    log_file = _p(ctx, log_path)
    log_file.parent.mkdir(parents=True, exist_ok=True)
    cfgs = [
        runner.EndpointConfig(
            base_url=endpoint_url,
            model_name=name,
            auth_token_env_name=auth_env,
            temperature=temperature,
            max_tokens=max_tokens,
            request_timeout=timeout,
        )
        for name in model_names
    ]
    if mode == "ab":
        if len(cfgs) != 1:
            raise ValueError("ab mode takes exactly one --model")
        records = runner.run_batch(
            prompts, cfgs[0], log_file, registry, max_in_flight=max_in_flight
        )
        _emit(
            {
                "prompts": len(prompts),
                "records": len(records),
                "errors": sum(1 for r in records if r.error),
                "log": str(log_file),
            }
        )
    else:
        records = runner.run_annotation(
            prompts, cfgs, log_file, registry, max_in_flight=max_in_flight
        )
        _emit(
            {
                "prompts": len(prompts),
                "records": len(records),
                "invalid": sum(1 for r in records if r.label == semdim.INVALID),
                "log": str(log_file),
            }
        )


@main.command("metrics")
@click.option("--log", "log_path", type=str, required=True)
@click.option("--gold", "gold_path", type=str, required=True)
@click.option("--words", "words_path", type=str, default=None,
              help="Lexicon JSONL giving each word's group and language.")
@click.option("--dimensions", "dimensions_path", type=str, default=None)
@click.option("--out", "out_path", type=str, required=True)
@click.option("--summary-out", "summary_out_path", type=str, default=None)
@click.option(
    "--scheme",
    type=click.Choice(["natural-group", "constructed-group", "per-input-type"]),
    default=None,
)
@click.pass_context
def metrics_cmd(ctx, log_path, gold_path, words_path, dimensions_path, out_path,
                summary_out_path, scheme):
    """Per-(model, group, language, input type, dimension) accuracy and macro-F1."""
    registry = _load_registry(ctx, dimensions_path)
    records = runner.read_response_records(_read_lines(_p(ctx, log_path)))
    gold = semdim.read_gold_jsonl(_read_lines(_p(ctx, gold_path)))
    gold_by_key = {(g.word_id, g.dimension_id): g.feature for g in gold}

    word_info: dict[str, tuple[str, str | None]] = {}
    if words_path:
        for entry in promptkit.read_lexicon_jsonl(_read_lines(_p(ctx, words_path))):
            word_info[entry.id] = (entry.group, entry.language)

    buckets: dict[tuple, list[tuple[str, str]]] = {}
    skipped_no_gold = 0
    for rec in records:
        key = (rec.word_id, rec.dimension_id)
        if key not in gold_by_key:
            skipped_no_gold += 1
            continue
        group, language = word_info.get(rec.word_id, ("constructed", None))
        bucket_key = (rec.model, group, language, rec.input_type, rec.dimension_id)
        buckets.setdefault(bucket_key, []).append((gold_by_key[key], rec.resolved_label))

    cells: list[metrics.EvalCell] = []
    cells_all_invalid = 0
    for bucket_key in sorted(buckets, key=lambda k: tuple(str(x) for x in k)):
        model, group, language, input_type, dim_id = bucket_key
        pairs = buckets[bucket_key]
        try:
            result = metrics.macro_f1(
                [g for g, _ in pairs], [p for _, p in pairs], registry[dim_id]
            )
        except metrics.EmptyAfterExclusion:
            cells_all_invalid += 1
            continue
        cells.append(
            metrics.EvalCell(
                model=model,
                group=group,
                language=language,
                input_type=input_type,
                dimension_id=dim_id,
                accuracy=result.accuracy,
                macro_f1=result.macro_f1,
                n=result.n,
                n_invalid=result.n_invalid,
            )
        )

    out = _p(ctx, out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as f:
        metrics.write_cells_csv(cells, f)

    report = {
        "records": len(records),
        "cells": len(cells),
        "skipped_no_gold": skipped_no_gold,
        "cells_all_invalid": cells_all_invalid,
        "out": str(out),
    }
    if summary_out_path:
        if not scheme:
            raise ValueError("--summary-out requires --scheme")
        table = metrics.aggregate(cells, scheme)
        import csv as _csv

        with open(_p(ctx, summary_out_path), "w", encoding="utf-8", newline="") as f:
            writer = _csv.writer(f, lineterminator="\n")
            writer.writerow(
                ["model", "group", "input_type", "mean_macro_f1", "mean_accuracy",
                 "n_constituent_cells", "n_missing"]
            )
            for s in table.summaries:
                kv = dict(s.key)
                writer.writerow(
                    [
                        kv.get("model", ""),
                        kv.get("group", ""),
                        kv.get("input_type", ""),
                        f"{s.mean_macro_f1:.10g}",
                        f"{s.mean_accuracy:.10g}",
                        len(s.constituents),
                        len(s.missing),
                    ]
                )
        report["summaries"] = len(table.summaries)
        report["summary_out"] = str(_p(ctx, summary_out_path))
    _emit(report)


@main.command("correlate")
@click.option("--human", "human_path", type=str, required=True)
@click.option("--model", "model_path", type=str, required=True)
@click.option(
    "--method", type=click.Choice(["pearson", "spearman"]), default="pearson", show_default=True
)
@click.pass_context
def correlate(ctx, human_path, model_path, method):
    """Correlate two per-dimension score tables (CSV: dimension,score)."""
    import csv as _csv

    def load(path: Path) -> dict[str, float]:
        out: dict[str, float] = {}
        with open(path, encoding="utf-8", newline="") as f:
            for row in _csv.DictReader(f):
                out[row["dimension"]] = float(row["score"])
        return out

    h = load(_p(ctx, human_path))
    m = load(_p(ctx, model_path))
    fn = metrics.pearson if method == "pearson" else metrics.spearman
    value = fn(h, m)
    _emit({"method": method, "value": value, "n_dimensions": len(set(h) & set(m))})


@main.command("advantage")
@click.option("--cells", "cells_path", type=str, required=True)
@click.option("--out", "out_path", type=str, required=True)
@click.pass_context
def advantage_cmd(ctx, cells_path, out_path):
    """Audio-minus-original macro-F1 advantage per (group, dimension)."""
    with open(_p(ctx, cells_path), encoding="utf-8", newline="") as f:
        cells = metrics.read_cells_csv(f)
    result = metrics.advantage(cells)
    import csv as _csv

    out = _p(ctx, out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as f:
        writer = _csv.writer(f, lineterminator="\n")
        writer.writerow(["group", "dimension", "advantage"])
        for (group, dim), value in sorted(result.values.items()):
            writer.writerow([group, dim, f"{value:.10g}"])
    _emit(
        {
            "pairs": len(result.values),
            "skipped": [list(pair) for pair in result.skipped],
            "out": str(out),
        }
    )


@main.command("attn-fraction")
@click.option("--dumps", "dumps_dir", type=str, required=True)
@click.option("--textgrids", "textgrid_dir", type=str, default=None)
@click.option("--tier", default="phones", show_default=True)
@click.option("--words", "words_path", type=str, default=None,
              help="Words JSONL used to check IPA token alignment.")
@click.option("--dimensions", "dimensions_path", type=str, default=None)
@click.option(
    "--mode", type=click.Choice(list(attnfrac.MODES)), default="head_sum", show_default=True
)
@click.option(
    "--combine",
    "combine_policy",
    type=click.Choice(list(attnfrac.COMBINE_POLICIES)),
    default="both-required",
    show_default=True,
)
@click.option("--out-dir", "out_dir", type=str, required=True)
@click.pass_context
def attn_fraction(ctx, dumps_dir, textgrid_dir, tier, words_path, dimensions_path, mode,
                  combine_policy, out_dir):
    """Compute phoneme-feature attention fractions from .afd dumps."""
    registry = _load_registry(ctx, dimensions_path)
    dump_dir = _p(ctx, dumps_dir)
    paths = sorted(dump_dir.glob("*.afd"))
    if not paths:
        raise ValueError(f"no .afd files in {dump_dir}")

    expected_symbols: dict[str, list[str]] = {}
    if words_path:
        for line in _read_lines(_p(ctx, words_path)):
            if line.strip():
                row = json.loads(line)
                expected_symbols[row["id"]] = list(row.get("symbols", []))

    samples: list[attnfrac.FractionSample] = []
    skipped_incorrect = 0
    zero_attention = 0
    for path in paths:
        dump = dumps.read_dump(path)
        man = dump.manifest
        if man.input_type == "ipa":
            spans = attnfrac.align_text_spans(man, expected_symbols.get(man.word_id))
        else:
            if not textgrid_dir:
                raise ValueError("audio dumps require --textgrids")
            tg_path = _p(ctx, textgrid_dir) / f"{man.word_id}.TextGrid"
            doc = textgrid.parse_textgrid(tg_path.read_bytes())
            labels = textgrid.frames_from_textgrid(
                doc, frame_period_ms=man.frame_period_ms or 40.0, tier_name=tier
            )
            spans = attnfrac.align_audio_spans(man, labels)
        dump_samples, result = attnfrac.samples_from_dump(dump, spans, registry, mode=mode)
        if result.skipped_reason:
            skipped_incorrect += 1
        zero_attention += len(result.zero_attention)
        samples.extend(dump_samples)

    merged, dropped_pairs = attnfrac.combine_order_samples(samples, policy=combine_policy)
    table = attnfrac.aggregate_fractions(merged)
    curve = attnfrac.layer_curve(merged)

    out = _p(ctx, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "fraction_table.csv", "w", encoding="utf-8", newline="") as f:
        attnfrac.write_fraction_table_csv(table, f)
    attnfrac.export_reports(table, out, curve=curve, svg=False)
    _emit(
        {
            "dumps": len(paths),
            "skipped_incorrect": skipped_incorrect,
            "zero_attention_spans": zero_attention,
            "dropped_order_pairs": dropped_pairs,
            "samples": len(merged),
            "out_dir": str(out),
        }
    )


@main.command("report")
@click.option("--fractions", "fractions_path", type=str, required=True)
@click.option("--curve", "curve_path", type=str, default=None)
@click.option("--out-dir", "out_dir", type=str, required=True)
@click.option("--svg/--no-svg", default=True, show_default=True)
@click.pass_context
def report_cmd(ctx, fractions_path, curve_path, out_dir, svg):
    """Render heatmap and layer-curve reports from a fraction table."""
    import csv as _csv

    with open(_p(ctx, fractions_path), encoding="utf-8", newline="") as f:
        table = attnfrac.read_fraction_table_csv(f)
    curve = None
    if curve_path:
        curve = []
        with open(_p(ctx, curve_path), encoding="utf-8", newline="") as f:
            for row in _csv.DictReader(f):
                curve.append((int(row["layer"]), float(row["mean_fraction"]), int(row["n_samples"])))
    written = attnfrac.export_reports(table, _p(ctx, out_dir), curve=curve, svg=svg)
    _emit({"written": [str(p) for p in written]})


if __name__ == "__main__":
    main()
