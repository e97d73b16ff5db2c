"""Tests for the binary attention-dump format and its validator."""
import json
import struct

import numpy as np
import pytest

import soundsym.dumps as dp


def manifest_dict(**over):
    base = dict(
        word_id="cw0001",
        group="constructed",
        input_type="ipa",
        dimension_id="sharp-round",
        feature_order="normal",
        gold_feature="sharp",
        resolved_label="sharp",
        token_strings=["l", "i", "sharp", "round"],
        input_token_indices=[0, 1],
        feature1_token_indices=[2],
        feature2_token_indices=[3],
        n_layers=2,
        n_heads=2,
        n_sel=4,
        attention_kind="post_softmax",
    )
    base.update(over)
    return base


def tensor_for(d, fill=None):
    shape = (d["n_layers"], d["n_heads"], d["n_sel"], d["n_sel"])
    if fill is not None:
        return np.full(shape, fill, dtype="<f4")
    rng = np.random.default_rng(0)
    return rng.random(shape, dtype=np.float32)


def write_raw(tmp_path, d, payload, name="raw.afd"):
    blob = json.dumps(d, sort_keys=True).encode("utf-8")
    p = tmp_path / name
    p.write_bytes(dp.MAGIC + struct.pack("<I", len(blob)) + blob + payload)
    return p


@pytest.fixture()
def valid_file(tmp_path):
    d = manifest_dict()
    path = tmp_path / "ok.afd"
    dp.write_dump(path, dp.manifest_from_dict(d), tensor_for(d))
    return path


class TestRoundTrip:
    def test_write_read(self, tmp_path):
        d = manifest_dict()
        tensor = tensor_for(d)
        path = tmp_path / "x.afd"
        manifest = dp.manifest_from_dict(d)
        dp.write_dump(path, manifest, tensor)
        dump = dp.read_dump(path)
        assert dump.manifest == manifest
        assert dump.tensor.dtype == np.dtype("<f4")
        assert np.array_equal(dump.tensor, tensor)

    def test_layout(self, valid_file):
        data = valid_file.read_bytes()
        assert data[:4] == b"AFD1"
        manifest_len = struct.unpack("<I", data[4:8])[0]
        parsed = json.loads(data[8:8 + manifest_len].decode("utf-8"))
        assert parsed["word_id"] == "cw0001"
        assert len(data) == 8 + manifest_len + 2 * 2 * 4 * 4 * 4

    def test_validate_accepts(self, valid_file):
        assert dp.validate_file(valid_file) == []

    def test_audio_manifest_keeps_frame_period(self, tmp_path):
        d = manifest_dict(input_type="audio", frame_period_ms=40.0)
        path = tmp_path / "a.afd"
        dp.write_dump(path, dp.manifest_from_dict(d), tensor_for(d))
        assert dp.read_dump(path).manifest.frame_period_ms == 40.0


class TestManifestValidation:
    def test_valid_is_clean(self):
        assert dp.validate_manifest_dict(manifest_dict()) == []

    @pytest.mark.parametrize("key", list(dp._REQUIRED_KEYS))
    def test_each_required_key(self, key):
        d = manifest_dict()
        del d[key]
        problems = dp.validate_manifest_dict(d)
        assert any(key in p for p in problems)

    def test_audio_requires_frame_period(self):
        problems = dp.validate_manifest_dict(manifest_dict(input_type="audio"))
        assert any("frame_period_ms" in p for p in problems)

    def test_ipa_does_not_require_frame_period(self):
        assert dp.validate_manifest_dict(manifest_dict(input_type="ipa")) == []

    def test_bad_enums(self):
        assert dp.validate_manifest_dict(manifest_dict(input_type="video"))
        assert dp.validate_manifest_dict(manifest_dict(group="synthetic"))
        assert dp.validate_manifest_dict(manifest_dict(feature_order="shuffled"))
        assert dp.validate_manifest_dict(manifest_dict(attention_kind=""))

    def test_overlapping_index_sets(self):
        problems = dp.validate_manifest_dict(manifest_dict(feature2_token_indices=[2]))
        assert any("overlap" in p for p in problems)

    def test_non_covering_index_sets(self):
        problems = dp.validate_manifest_dict(manifest_dict(n_sel=5, token_strings=list("abcde")))
        assert any("cover" in p for p in problems)

    def test_unsorted_indices(self):
        problems = dp.validate_manifest_dict(manifest_dict(input_token_indices=[1, 0]))
        assert any("sorted" in p for p in problems)

    def test_empty_index_set(self):
        problems = dp.validate_manifest_dict(
            manifest_dict(input_token_indices=[], token_strings=["s", "r"], n_sel=2,
                          feature1_token_indices=[0], feature2_token_indices=[1])
        )
        assert any("empty" in p for p in problems)

    def test_out_of_range_index(self):
        problems = dp.validate_manifest_dict(manifest_dict(feature2_token_indices=[9]))
        assert any("out of range" in p for p in problems)

    def test_token_strings_length(self):
        problems = dp.validate_manifest_dict(manifest_dict(token_strings=["a"]))
        assert any("token_strings" in p for p in problems)

    def test_manifest_from_dict_raises_with_problems(self):
        d = manifest_dict()
        del d["gold_feature"]
        with pytest.raises(dp.FormatError) as err:
            dp.manifest_from_dict(d)
        assert any("gold_feature" in p for p in err.value.problems)


class TestWriteGuards:
    def test_wrong_shape_rejected(self, tmp_path):
        d = manifest_dict()
        bad = np.zeros((2, 2, 4, 3), dtype="<f4")
        with pytest.raises(dp.FormatError, match="shape"):
            dp.write_dump(tmp_path / "x.afd", dp.manifest_from_dict(d), bad)

    def test_negative_values_rejected(self, tmp_path):
        d = manifest_dict()
        with pytest.raises(dp.FormatError, match="finite"):
            dp.write_dump(tmp_path / "x.afd", dp.manifest_from_dict(d), tensor_for(d, fill=-1.0))

    def test_nan_rejected(self, tmp_path):
        d = manifest_dict()
        with pytest.raises(dp.FormatError, match="finite"):
            dp.write_dump(tmp_path / "x.afd", dp.manifest_from_dict(d), tensor_for(d, fill=np.nan))


class TestFileValidation:
    def test_bad_magic(self, tmp_path, valid_file):
        data = bytearray(valid_file.read_bytes())
        data[0] = ord("X")
        p = tmp_path / "bad.afd"
        p.write_bytes(bytes(data))
        problems = dp.validate_file(p)
        assert any("magic" in p2 for p2 in problems)

    def test_too_short(self, tmp_path):
        p = tmp_path / "tiny.afd"
        p.write_bytes(b"AFD")
        assert dp.validate_file(p) == ["file shorter than magic + manifest length"]

    def test_truncated_tensor(self, tmp_path, valid_file):
        data = valid_file.read_bytes()
        p = tmp_path / "trunc.afd"
        p.write_bytes(data[:-4])
        problems = dp.validate_file(p)
        assert any("payload" in p2 for p2 in problems)

    def test_manifest_length_beyond_file(self, tmp_path):
        p = tmp_path / "short.afd"
        p.write_bytes(dp.MAGIC + struct.pack("<I", 10_000) + b"{}")
        assert dp.validate_file(p) == ["declared manifest length exceeds file size"]

    def test_bad_manifest_json(self, tmp_path):
        blob = b"{not json"
        p = tmp_path / "jsonless.afd"
        p.write_bytes(dp.MAGIC + struct.pack("<I", len(blob)) + blob)
        problems = dp.validate_file(p)
        assert any("JSON" in p2 for p2 in problems)

    def test_missing_attention_kind(self, tmp_path):
        d = manifest_dict()
        del d["attention_kind"]
        p = write_raw(tmp_path, d, tensor_for(manifest_dict()).tobytes())
        problems = dp.validate_file(p)
        assert any("attention_kind" in p2 for p2 in problems)

    def test_audio_without_frame_period(self, tmp_path):
        d = manifest_dict(input_type="audio")
        p = write_raw(tmp_path, d, tensor_for(d).tobytes())
        problems = dp.validate_file(p)
        assert any("frame_period_ms" in p2 for p2 in problems)

    def test_negative_payload_value(self, tmp_path):
        d = manifest_dict()
        arr = tensor_for(d)
        arr[0, 0, 0, 0] = -0.5
        p = write_raw(tmp_path, d, arr.tobytes())
        assert dp.validate_file(p) == ["tensor contains negative values"]

    def test_nan_payload_value(self, tmp_path):
        d = manifest_dict()
        arr = tensor_for(d)
        arr[1, 1, 2, 2] = np.nan
        p = write_raw(tmp_path, d, arr.tobytes())
        assert dp.validate_file(p) == ["tensor contains non-finite values"]

    def test_unreadable_path(self, tmp_path):
        problems = dp.validate_file(tmp_path / "nope.afd")
        assert len(problems) == 1
        assert problems[0].startswith("unreadable")

    def test_read_dump_refuses_invalid(self, tmp_path):
        p = tmp_path / "bad.afd"
        p.write_bytes(b"XXXX" + struct.pack("<I", 0))
        with pytest.raises(dp.FormatError):
            dp.read_dump(p)
