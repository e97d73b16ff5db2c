"""Tests for scoring, aggregation, correlation, and advantage metrics."""
import math
import random
from io import StringIO

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import soundsym.metrics as mt
import soundsym.semdim as sd

DIM = sd.SemanticDimension(id="sharp-round", feature_a="sharp", feature_b="round")


def naive_macro_f1(gold, pred, features):
    """Precision/recall-form oracle; invalid predictions excluded."""
    kept = [(g, p) for g, p in zip(gold, pred) if p != sd.INVALID]
    acc = sum(g == p for g, p in kept) / len(kept)
    f1s = []
    for f in features:
        tp = sum(1 for g, p in kept if g == f and p == f)
        fp = sum(1 for g, p in kept if p == f and g != f)
        fn = sum(1 for g, p in kept if g == f and p != f)
        if tp == 0:
            f1s.append(0.0)
        else:
            precision = tp / (tp + fp)
            recall = tp / (tp + fn)
            f1s.append(2 * precision * recall / (precision + recall))
    return acc, sum(f1s) / len(f1s)


class TestMacroF1:
    def test_hand_example(self):
        gold = ["sharp", "sharp", "sharp", "round"]
        pred = ["sharp", "sharp", "round", "round"]
        r = mt.macro_f1(gold, pred, DIM)
        assert r.accuracy == pytest.approx(0.75)
        # F1(sharp) = 4/5, F1(round) = 2/3.
        assert r.macro_f1 == pytest.approx((0.8 + 2 / 3) / 2)
        assert r.n == 4
        assert r.n_invalid == 0
        assert r.zero_denominator_features == ()

    def test_invalid_excluded_but_counted(self):
        gold = ["sharp", "sharp", "round", "round"]
        pred = ["sharp", sd.INVALID, "round", sd.INVALID]
        r = mt.macro_f1(gold, pred, DIM)
        assert r.accuracy == 1.0
        assert r.macro_f1 == 1.0
        assert r.n == 2
        assert r.n_invalid == 2

    def test_zero_denominator_feature_scores_zero_and_is_flagged(self):
        r = mt.macro_f1(["sharp", "sharp"], ["sharp", "sharp"], DIM)
        assert r.zero_denominator_features == ("round",)
        assert r.macro_f1 == pytest.approx(0.5)
        assert r.accuracy == 1.0

    def test_all_invalid_raises(self):
        with pytest.raises(mt.EmptyAfterExclusion):
            mt.macro_f1(["sharp"], [sd.INVALID], DIM)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            mt.macro_f1(["sharp"], [], DIM)

    def test_empty_gold(self):
        with pytest.raises(ValueError, match="empty"):
            mt.macro_f1([], [], DIM)

    def test_foreign_gold_label_rejected(self):
        with pytest.raises(ValueError, match="gold label"):
            mt.macro_f1(["big"], ["sharp"], DIM)

    def test_foreign_prediction_rejected(self):
        with pytest.raises(ValueError, match="prediction"):
            mt.macro_f1(["sharp"], ["big"], DIM)

    def test_against_precision_recall_oracle(self):
        rng = random.Random(7)
        labels = ["sharp", "round"]
        for _ in range(200):
            n = rng.randint(1, 40)
            gold = [rng.choice(labels) for _ in range(n)]
            pred = [
                rng.choice(labels + [sd.INVALID]) if rng.random() < 0.3 else rng.choice(labels)
                for _ in range(n)
            ]
            if all(p == sd.INVALID for p in pred):
                continue
            r = mt.macro_f1(gold, pred, DIM)
            acc, f1 = naive_macro_f1(gold, pred, DIM.features())
            assert r.accuracy == pytest.approx(acc, abs=1e-12)
            assert r.macro_f1 == pytest.approx(f1, abs=1e-12)

    @given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=30))
    def test_feature_swap_keeps_macro(self, flags):
        to_label = {True: "sharp", False: "round"}
        swap = {"sharp": "round", "round": "sharp"}
        gold = [to_label[g] for g, _ in flags]
        pred = [to_label[p] for _, p in flags]
        base = mt.macro_f1(gold, pred, DIM)
        mirrored = mt.macro_f1([swap[g] for g in gold], [swap[p] for p in pred], DIM)
        assert mirrored.macro_f1 == pytest.approx(base.macro_f1, abs=1e-12)
        assert mirrored.accuracy == pytest.approx(base.accuracy, abs=1e-12)


def cell(model="m1", group="natural", language="English", input_type="original",
         dim="good-bad", f1=0.5, acc=0.5):
    return mt.EvalCell(
        model=model, group=group, language=language, input_type=input_type,
        dimension_id=dim, accuracy=acc, macro_f1=f1, n=10, n_invalid=0,
    )


class TestAggregate:
    def test_natural_group_two_stage_mean(self):
        cells = [
            cell(language="English", input_type="original", dim="d1", f1=0.2, acc=0.1),
            cell(language="English", input_type="original", dim="d2", f1=0.4, acc=0.3),
            cell(language="English", input_type="ipa", dim="d1", f1=0.5, acc=0.5),
            cell(language="French", input_type="original", dim="d1", f1=0.7, acc=0.7),
            cell(language="French", input_type="ipa", dim="d1", f1=0.9, acc=0.9),
        ]
        table = mt.aggregate(
            cells, "natural-group",
            languages=("English", "French"), input_types=("original", "ipa"),
        )
        assert len(table.summaries) == 1
        s = table.summaries[0]
        assert s.mean_macro_f1 == pytest.approx((0.3 + 0.5 + 0.7 + 0.9) / 4)
        assert s.mean_accuracy == pytest.approx((0.2 + 0.5 + 0.7 + 0.9) / 4)
        assert s.missing == ()
        assert len(s.constituents) == 5

    def test_stage_means_are_unweighted(self):
        # Three dimensions in one bucket, one in the other: the buckets
        # still weigh equally, so the answer is 0.5, not the flat 0.25.
        cells = [
            cell(input_type="original", dim=d, f1=0.0, acc=0.0) for d in ("d1", "d2", "d3")
        ] + [cell(input_type="ipa", dim="d1", f1=1.0, acc=1.0)]
        table = mt.aggregate(
            cells, "natural-group", languages=("English",), input_types=("original", "ipa")
        )
        assert table.summaries[0].mean_macro_f1 == pytest.approx(0.5)

    def test_missing_buckets_reported(self):
        cells = [cell(language="English", input_type="original", f1=0.4, acc=0.4)]
        table = mt.aggregate(
            cells, "natural-group",
            languages=("English", "French"), input_types=("original",),
        )
        s = table.summaries[0]
        assert s.mean_macro_f1 == pytest.approx(0.4)
        assert s.missing == ("m1/natural/French/original",)

    def test_constructed_group_ignores_language(self):
        cells = [
            cell(group="constructed", language=None, input_type="original", dim="d1", f1=0.2),
            cell(group="constructed", language=None, input_type="ipa", dim="d1", f1=0.4),
            cell(group="constructed", language=None, input_type="audio", dim="d1", f1=0.9),
        ]
        table = mt.aggregate(cells, "constructed-group")
        s = table.summaries[0]
        assert s.key == (("model", "m1"), ("group", "constructed"))
        assert s.mean_macro_f1 == pytest.approx(0.5)

    def test_per_input_type_averages_languages(self):
        cells = [
            cell(language="English", input_type="audio", dim="d1", f1=0.2),
            cell(language="French", input_type="audio", dim="d1", f1=0.6),
        ]
        table = mt.aggregate(
            cells, "per-input-type", languages=("English", "French"), input_types=("audio",)
        )
        s = table.summaries[0]
        assert s.key == (("model", "m1"), ("group", "natural"), ("input_type", "audio"))
        assert s.mean_macro_f1 == pytest.approx(0.4)

    def test_per_model_summaries(self):
        cells = [cell(model="m1", f1=0.2), cell(model="m2", f1=0.8)]
        table = mt.aggregate(
            cells, "natural-group", languages=("English",), input_types=("original",)
        )
        means = {s.key[0][1]: s.mean_macro_f1 for s in table.summaries}
        assert means == {"m1": pytest.approx(0.2), "m2": pytest.approx(0.8)}

    def test_unknown_scheme(self):
        with pytest.raises(ValueError, match="scheme"):
            mt.aggregate([], "grand-mean")


class TestPearson:
    def test_hand_example(self):
        r = mt.pearson({"a": 1, "b": 2, "c": 3}, {"a": 2, "b": 4, "c": 5})
        assert r == pytest.approx(0.9819805061, abs=1e-9)

    def test_perfect_and_anti(self):
        h = {"a": 1.0, "b": 2.0, "c": 3.0}
        assert mt.pearson(h, {"a": 10.0, "b": 20.0, "c": 30.0}) == pytest.approx(1.0)
        assert mt.pearson(h, {"a": 3.0, "b": 2.0, "c": 1.0}) == pytest.approx(-1.0)

    def test_matches_numpy(self):
        rng = random.Random(11)
        for _ in range(50):
            n = rng.randint(3, 20)
            xs = [rng.uniform(-5, 5) for _ in range(n)]
            ys = [rng.uniform(-5, 5) for _ in range(n)]
            keys = [f"k{i}" for i in range(n)]
            expected = float(np.corrcoef(xs, ys)[0, 1])
            got = mt.pearson(dict(zip(keys, xs)), dict(zip(keys, ys)))
            assert got == pytest.approx(expected, abs=1e-10)

    def test_only_shared_keys_used(self):
        h = {"a": 1.0, "b": 2.0, "c": 3.0, "extra": 99.0}
        m = {"a": 2.0, "b": 4.0, "c": 5.0, "other": -99.0}
        assert mt.pearson(h, m) == mt.pearson(
            {k: h[k] for k in "abc"}, {k: m[k] for k in "abc"}
        )

    def test_affine_invariance(self):
        rng = random.Random(3)
        xs = {f"k{i}": rng.uniform(-1, 1) for i in range(8)}
        ys = {f"k{i}": rng.uniform(-1, 1) for i in range(8)}
        base = mt.pearson(xs, ys)
        shifted = {k: 3.0 * v + 7.0 for k, v in xs.items()}
        assert mt.pearson(shifted, ys) == pytest.approx(base, abs=1e-12)
        negated = {k: -2.0 * v for k, v in xs.items()}
        assert mt.pearson(negated, ys) == pytest.approx(-base, abs=1e-12)

    def test_degenerate_cases(self):
        with pytest.raises(mt.DegenerateVariance):
            mt.pearson({"a": 1.0}, {"a": 1.0})
        with pytest.raises(mt.DegenerateVariance):
            mt.pearson({"a": 1.0, "b": 1.0}, {"a": 1.0, "b": 2.0})
        with pytest.raises(mt.DegenerateVariance):
            mt.pearson({"a": 1.0, "b": 2.0}, {"c": 1.0, "d": 2.0})


def oracle_ranks(values):
    """count-based average ranks: less + (equal + 1) / 2."""
    return [
        sum(1 for v in values if v < x) + (sum(1 for v in values if v == x) + 1) / 2
        for x in values
    ]


class TestRanks:
    def test_tie_block(self):
        assert mt.average_ranks([10.0, 20.0, 20.0, 30.0]) == [1.0, 2.5, 2.5, 4.0]

    def test_all_equal(self):
        assert mt.average_ranks([7.0, 7.0, 7.0]) == [2.0, 2.0, 2.0]

    def test_empty(self):
        assert mt.average_ranks([]) == []

    @given(st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=25))
    def test_matches_count_oracle(self, values):
        floats = [float(v) for v in values]
        assert mt.average_ranks(floats) == oracle_ranks(floats)


class TestSpearman:
    def test_monotone_nonlinear_is_one(self):
        h = {"a": 1.0, "b": 2.0, "c": 3.0, "d": 4.0}
        m = {"a": 1.0, "b": 8.0, "c": 27.0, "d": 64.0}
        assert mt.spearman(h, m) == pytest.approx(1.0)

    def test_tie_case_hand_value(self):
        # m ranks are (1.5, 1.5, 3); correlation against (1, 2, 3) is
        # sqrt(3)/2.
        h = {"a": 1.0, "b": 2.0, "c": 3.0}
        m = {"a": 5.0, "b": 5.0, "c": 6.0}
        assert mt.spearman(h, m) == pytest.approx(math.sqrt(3) / 2, abs=1e-12)

    def test_monotone_transform_invariance(self):
        rng = random.Random(5)
        xs = {f"k{i}": rng.uniform(-2, 2) for i in range(10)}
        ys = {f"k{i}": rng.uniform(-2, 2) for i in range(10)}
        base = mt.spearman(xs, ys)
        cubed = {k: v ** 3 for k, v in xs.items()}
        assert mt.spearman(cubed, ys) == base

    def test_bounds(self):
        rng = random.Random(13)
        for _ in range(100):
            n = rng.randint(2, 12)
            h = {f"k{i}": rng.choice([0.0, 0.25, 0.5, 1.0]) for i in range(n)}
            m = {f"k{i}": rng.choice([0.0, 0.25, 0.5, 1.0]) for i in range(n)}
            try:
                r_s = mt.spearman(h, m)
                r_p = mt.pearson(h, m)
            except mt.DegenerateVariance:
                continue
            assert -1.0 - 1e-12 <= r_s <= 1.0 + 1e-12
            assert -1.0 - 1e-12 <= r_p <= 1.0 + 1e-12


class TestAdvantage:
    def test_model_mean_before_difference(self):
        # Flat averaging over cells would give 0.6 - 0.5333...; averaging
        # within model first makes both sides 0.55.
        cells = [
            cell(model="A", language="English", input_type="audio", dim="d1", f1=0.6),
            cell(model="A", language="French", input_type="audio", dim="d1", f1=0.8),
            cell(model="A", language="English", input_type="original", dim="d1", f1=0.5),
            cell(model="A", language="French", input_type="original", dim="d1", f1=0.5),
            cell(model="B", language="English", input_type="audio", dim="d1", f1=0.4),
            cell(model="B", language="English", input_type="original", dim="d1", f1=0.6),
        ]
        result = mt.advantage(cells)
        assert result.values[("natural", "d1")] == pytest.approx(0.0, abs=1e-12)
        assert result.skipped == []

    def test_positive_advantage(self):
        cells = [
            cell(group="constructed", language=None, input_type="audio", dim="d1", f1=0.9),
            cell(group="constructed", language=None, input_type="original", dim="d1", f1=0.6),
        ]
        result = mt.advantage(cells)
        assert result.values[("constructed", "d1")] == pytest.approx(0.3)

    def test_missing_side_skipped(self):
        cells = [cell(input_type="audio", dim="d1", f1=0.9)]
        result = mt.advantage(cells)
        assert result.values == {}
        assert result.skipped == [("natural", "d1")]


class TestLayerTable:
    def test_fixture_shape(self):
        rows = mt.load_layer_table()
        assert len(rows) == 28
        assert [r["layer"] for r in rows] == list(range(1, 29))
        for r in rows:
            for col in mt.LAYER_TABLE_COLUMNS:
                assert 0.0 <= r[col] <= 1.0

    def test_column_means_trivial(self):
        rows = [{"a": 1.0, "b": 0.0}, {"a": 3.0, "b": 1.0}]
        assert mt.column_means(rows, ("a", "b")) == {"a": 2.0, "b": 0.5}

    def test_column_means_empty(self):
        with pytest.raises(ValueError, match="no rows"):
            mt.column_means([], ("a",))


class TestCellsCsv:
    def test_round_trip(self):
        cells = [
            cell(f1=0.75, acc=0.5),
            cell(group="constructed", language=None, input_type="audio", dim="d2", f1=0.25, acc=1.0),
        ]
        buf = StringIO()
        mt.write_cells_csv(cells, buf)
        assert mt.read_cells_csv(StringIO(buf.getvalue())) == cells

    def test_header_and_blank_language(self):
        buf = StringIO()
        mt.write_cells_csv([cell(group="constructed", language=None)], buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "model,group,language,input_type,dimension,accuracy,macro_f1,n,n_invalid"
        assert lines[1] == "m1,constructed,,original,good-bad,0.5,0.5,10,0"
