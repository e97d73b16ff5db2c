"""Byte-exact prompt rendering, option-order reversal, response parsing."""
from io import StringIO

import pytest
from hypothesis import given
from hypothesis import strategies as st

import soundsym.promptkit as pk
import soundsym.semdim as sd

WHIZZ = pk.LexiconEntry(
    id="en0001",
    group="natural",
    language="English",
    orthography="whizz",
    ipa="wɪz",
    symbols=("w", "ɪ", "z"),
    audio="audio/en0001.wav",
    meaning="to move quickly with a whirring sound",
)

FAST_SLOW = sd.SemanticDimension(id="fast-slow", feature_a="fast", feature_b="slow")


def ab_expected(first_line: str, word_line: str, f1: str, f2: str) -> str:
    return (
        f"{first_line}\n"
        "\n"
        "[WORD]\n"
        f"{word_line}\n"
        "\n"
        "[SEMANTIC DIMENSION]\n"
        f"{f1} vs. {f2}\n"
        "\n"
        "[OPTIONS]\n"
        f"1: {f1}\n"
        f"2: {f2}\n"
        "Answer with the number only. (1-2)"
    )


ORIGINAL_LEAD = (
    "Given a [WORD], which semantic feature best describes the word based on auditory impression?"
)
IPA_LEAD = (
    "Given an IPA [WORD], which semantic feature best describes the word based on auditory impression?"
)
AUDIO_LEAD = (
    "Given a spoken [WORD], which semantic feature best describes the word based on auditory impression?"
)
IPA_AUDIO_LEAD = (
    "Given an IPA [WORD] with its pronunciation audio, which semantic feature best describes"
    " the word based on auditory impression?"
)


class TestAbRendering:
    @pytest.mark.parametrize(
        "order,f1,f2", [("normal", "fast", "slow"), ("reversed", "slow", "fast")]
    )
    def test_original(self, order, f1, f2):
        spec = pk.build_ab_prompt(WHIZZ, FAST_SLOW, "original", order)
        assert spec.flatten() == ab_expected(ORIGINAL_LEAD, "whizz", f1, f2)

    @pytest.mark.parametrize(
        "order,f1,f2", [("normal", "fast", "slow"), ("reversed", "slow", "fast")]
    )
    def test_ipa(self, order, f1, f2):
        spec = pk.build_ab_prompt(WHIZZ, FAST_SLOW, "ipa", order)
        assert spec.flatten() == ab_expected(IPA_LEAD, "w ɪ z", f1, f2)

    @pytest.mark.parametrize(
        "order,f1,f2", [("normal", "fast", "slow"), ("reversed", "slow", "fast")]
    )
    def test_audio(self, order, f1, f2):
        spec = pk.build_ab_prompt(WHIZZ, FAST_SLOW, "audio", order)
        assert spec.flatten() == ab_expected(AUDIO_LEAD, "<AUDIO>", f1, f2)

    @pytest.mark.parametrize(
        "order,f1,f2", [("normal", "fast", "slow"), ("reversed", "slow", "fast")]
    )
    def test_ipa_plus_audio(self, order, f1, f2):
        spec = pk.build_ab_prompt(WHIZZ, FAST_SLOW, "ipa_plus_audio", order)
        assert spec.flatten() == ab_expected(IPA_AUDIO_LEAD, "w ɪ z (AUDIO: <AUDIO>)", f1, f2)

    def test_audio_part_structure(self):
        spec = pk.build_ab_prompt(WHIZZ, FAST_SLOW, "audio")
        kinds = [p.kind for p in spec.rendered_parts]
        assert kinds == ["text", "audio", "text"]
        assert spec.rendered_parts[1].audio == "audio/en0001.wav"

    def test_text_only_part_structure(self):
        spec = pk.build_ab_prompt(WHIZZ, FAST_SLOW, "original")
        assert [p.kind for p in spec.rendered_parts] == ["text"]

    def test_prompt_id_and_options(self):
        spec = pk.build_ab_prompt(WHIZZ, FAST_SLOW, "ipa", "reversed")
        assert spec.prompt_id == "en0001|fast-slow|ipa|reversed"
        assert spec.n_options == 2
        assert spec.feature_order == "reversed"

    def test_no_trailing_newline(self):
        spec = pk.build_ab_prompt(WHIZZ, FAST_SLOW, "original")
        assert not spec.flatten().endswith("\n")


class TestAnnotationRendering:
    def test_byte_exact(self):
        spec = pk.build_annotation_prompt(WHIZZ, FAST_SLOW, "English")
        assert spec.flatten() == (
            "You are a professional linguistic annotator.\n"
            "Please read a English mimetic word and its meaning, and decide which"
            " semantic feature best describes the word's meaning.\n"
            "\n"
            "[WORD]\n"
            "whizz\n"
            "\n"
            "[MEANING]\n"
            "to move quickly with a whirring sound\n"
            "\n"
            "[SEMANTIC DIMENSION]\n"
            "fast vs. slow\n"
            "\n"
            "[OPTIONS]\n"
            "1: fast\n"
            "2: slow\n"
            "3: Neither\n"
            "Answer with the number only. (1-3)"
        )

    def test_three_options_and_id(self):
        spec = pk.build_annotation_prompt(WHIZZ, FAST_SLOW, "English")
        assert spec.n_options == 3
        assert spec.prompt_id == "en0001|fast-slow|annotation|English"

    def test_missing_meaning(self):
        entry = pk.LexiconEntry(id="x", group="natural", orthography="x")
        with pytest.raises(pk.MissingMeaning):
            pk.build_annotation_prompt(entry, FAST_SLOW, "English")

    def test_missing_orthography(self):
        entry = pk.LexiconEntry(id="x", group="natural", meaning="m")
        with pytest.raises(pk.MissingForm):
            pk.build_annotation_prompt(entry, FAST_SLOW, "English")


class TestWordForm:
    def test_symbols_win_over_raw_ipa(self):
        assert pk.word_form(WHIZZ, "ipa") == "w ɪ z"

    def test_raw_ipa_fallback(self):
        entry = pk.LexiconEntry(id="x", group="natural", ipa="wɪz")
        assert pk.word_form(entry, "ipa") == "wɪz"

    def test_audio_slot_is_empty_text(self):
        assert pk.word_form(WHIZZ, "audio") == ""

    def test_missing_forms(self):
        bare = pk.LexiconEntry(id="x", group="natural")
        with pytest.raises(pk.MissingForm):
            pk.word_form(bare, "original")
        with pytest.raises(pk.MissingForm):
            pk.word_form(bare, "ipa")

    def test_unknown_input_type(self):
        with pytest.raises(ValueError, match="input type"):
            pk.word_form(WHIZZ, "video")


class TestBuildErrors:
    def test_audio_types_require_audio_ref(self):
        entry = pk.LexiconEntry(id="x", group="natural", symbols=("w",))
        for itype in ("audio", "ipa_plus_audio"):
            with pytest.raises(pk.MissingForm, match="audio"):
                pk.build_ab_prompt(entry, FAST_SLOW, itype)

    def test_unknown_input_type(self):
        with pytest.raises(ValueError, match="input type"):
            pk.build_ab_prompt(WHIZZ, FAST_SLOW, "video")

    def test_unknown_order(self):
        with pytest.raises(ValueError, match="order"):
            pk.build_ab_prompt(WHIZZ, FAST_SLOW, "ipa", "shuffled")

    def test_two_audio_placeholders_rejected(self, tmp_path):
        (tmp_path / "ab_audio.txt").write_text("{AUDIO} then {AUDIO}", encoding="utf-8")
        with pytest.raises(ValueError, match="at most one"):
            pk.build_ab_prompt(WHIZZ, FAST_SLOW, "audio", template_dir=tmp_path)


class TestParseResponse:
    @pytest.mark.parametrize("raw,expected", [
        ("2", 2),
        ("1", 1),
        (" 2 ", 2),
        ("2\n", 2),
        ("2.", sd.INVALID),
        ("option 2", sd.INVALID),
        ("I choose 1", sd.INVALID),
        ("0", sd.INVALID),
        ("3", sd.INVALID),
        ("12", sd.INVALID),
        ("", sd.INVALID),
        ("-1", sd.INVALID),
        ("1 2", sd.INVALID),
    ])
    def test_two_option_cases(self, raw, expected):
        assert pk.parse_response(raw, 2).choice == expected

    def test_three_option_accepts_three(self):
        assert pk.parse_response("3", 3).choice == 3
        assert pk.parse_response("4", 3).choice == sd.INVALID

    def test_raw_text_preserved(self):
        resp = pk.parse_response(" 2 ", 2)
        assert resp.raw_text == " 2 "


class TestResolveChoice:
    def test_normal_order(self):
        assert pk.resolve_choice(pk.ParsedResponse(1, "1"), FAST_SLOW, "normal") == "fast"
        assert pk.resolve_choice(pk.ParsedResponse(2, "2"), FAST_SLOW, "normal") == "slow"

    def test_reversed_order_unswaps(self):
        assert pk.resolve_choice(pk.ParsedResponse(1, "1"), FAST_SLOW, "reversed") == "slow"
        assert pk.resolve_choice(pk.ParsedResponse(2, "2"), FAST_SLOW, "reversed") == "fast"

    def test_choice_three_is_neither(self):
        assert pk.resolve_choice(pk.ParsedResponse(3, "3"), FAST_SLOW, "normal") == sd.NEITHER

    def test_invalid_passes_through(self):
        assert pk.resolve_choice(pk.ParsedResponse(sd.INVALID, "?"), FAST_SLOW, "normal") == sd.INVALID

    @given(choice=st.sampled_from([1, 2]), order=st.sampled_from(["normal", "reversed"]))
    def test_option_number_round_trips_to_presented_feature(self, choice, order):
        resp = pk.parse_response(str(choice), 2)
        feature = pk.resolve_choice(resp, FAST_SLOW, order)
        assert feature == pk.ordered_features(FAST_SLOW, order)[choice - 1]

    @given(choice=st.sampled_from([1, 2]))
    def test_reversal_mirrors_choice(self, choice):
        normal = pk.resolve_choice(pk.ParsedResponse(choice, ""), FAST_SLOW, "normal")
        mirrored = pk.resolve_choice(pk.ParsedResponse(3 - choice, ""), FAST_SLOW, "reversed")
        assert normal == mirrored


class TestJsonl:
    def test_prompts_round_trip(self):
        specs = [
            pk.build_ab_prompt(WHIZZ, FAST_SLOW, itype, order)
            for itype in pk.AB_INPUT_TYPES
            for order in pk.FEATURE_ORDERS
        ]
        buf = StringIO()
        pk.write_prompts_jsonl(specs, buf)
        assert pk.read_prompts_jsonl(StringIO(buf.getvalue())) == specs

    def test_lexicon_reader_defaults(self):
        line = '{"id": "cw0000", "ipa": "lili", "symbols": ["l", "i", "l", "i"], "romanized": "lee-lee", "group": "constructed"}\n'
        entries = pk.read_lexicon_jsonl(StringIO(line))
        assert entries == [
            pk.LexiconEntry(
                id="cw0000",
                group="constructed",
                ipa="lili",
                symbols=("l", "i", "l", "i"),
                romanized="lee-lee",
            )
        ]
