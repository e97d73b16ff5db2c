"""Binary attention-dump files: magic `AFD1`, a little-endian u32 manifest
length, a UTF-8 JSON manifest, then the float32 row-major tensor
[n_layers][n_heads][n_sel][n_sel] restricted to the selected token indices."""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"AFD1"
INPUT_TYPES = ("ipa", "audio")
GROUPS = ("natural", "constructed")
FEATURE_ORDERS = ("normal", "reversed")


class FormatError(ValueError):
    """The dump file or manifest violates the format contract."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Manifest:
    word_id: str
    group: str
    input_type: str
    dimension_id: str
    feature_order: str
    gold_feature: str
    resolved_label: str
    token_strings: tuple[str, ...]
    input_token_indices: tuple[int, ...]
    feature1_token_indices: tuple[int, ...]
    feature2_token_indices: tuple[int, ...]
    n_layers: int
    n_heads: int
    n_sel: int
    attention_kind: str
    frame_period_ms: float | None = None

    def to_json_dict(self) -> dict:
        d = {
            "word_id": self.word_id,
            "group": self.group,
            "input_type": self.input_type,
            "dimension_id": self.dimension_id,
            "feature_order": self.feature_order,
            "gold_feature": self.gold_feature,
            "resolved_label": self.resolved_label,
            "token_strings": list(self.token_strings),
            "input_token_indices": list(self.input_token_indices),
            "feature1_token_indices": list(self.feature1_token_indices),
            "feature2_token_indices": list(self.feature2_token_indices),
            "n_layers": self.n_layers,
            "n_heads": self.n_heads,
            "n_sel": self.n_sel,
            "attention_kind": self.attention_kind,
        }
        if self.frame_period_ms is not None:
            d["frame_period_ms"] = self.frame_period_ms
        return d


@dataclass(frozen=True)
class AttentionDump:
    manifest: Manifest
    tensor: np.ndarray  # float32 [n_layers, n_heads, n_sel, n_sel]


_REQUIRED_KEYS = (
    "word_id",
    "group",
    "input_type",
    "dimension_id",
    "feature_order",
    "gold_feature",
    "resolved_label",
    "token_strings",
    "input_token_indices",
    "feature1_token_indices",
    "feature2_token_indices",
    "n_layers",
    "n_heads",
    "n_sel",
    "attention_kind",
)


def validate_manifest_dict(d: dict) -> list[str]:
    """Structural problems with a manifest dict; empty list means valid."""
    problems: list[str] = []
    for key in _REQUIRED_KEYS:
        if key not in d:
            problems.append(f"manifest missing key {key!r}")
    if problems:
        return problems
    if d["input_type"] not in INPUT_TYPES:
        problems.append(f"input_type must be one of {INPUT_TYPES}, got {d['input_type']!r}")
    if d["group"] not in GROUPS:
        problems.append(f"group must be one of {GROUPS}, got {d['group']!r}")
    if d["feature_order"] not in FEATURE_ORDERS:
        problems.append(f"feature_order must be one of {FEATURE_ORDERS}")
    if not isinstance(d["attention_kind"], str) or not d["attention_kind"]:
        problems.append("attention_kind must be a non-empty string")
    if d["input_type"] == "audio" and "frame_period_ms" not in d:
        problems.append("audio dumps must declare frame_period_ms")

    try:
        n_layers, n_heads, n_sel = int(d["n_layers"]), int(d["n_heads"]), int(d["n_sel"])
    except (TypeError, ValueError):
        return problems + ["n_layers/n_heads/n_sel must be integers"]
    if min(n_layers, n_heads, n_sel) < 1:
        problems.append("n_layers, n_heads, n_sel must all be >= 1")
    if len(d["token_strings"]) != n_sel:
        problems.append(f"token_strings length {len(d['token_strings'])} != n_sel {n_sel}")

    index_sets = {}
    for key in ("input_token_indices", "feature1_token_indices", "feature2_token_indices"):
        idx = list(d[key])
        index_sets[key] = idx
        if any(not isinstance(i, int) for i in idx):
            problems.append(f"{key} must contain integers")
            continue
        if idx != sorted(idx) or len(set(idx)) != len(idx):
            problems.append(f"{key} must be strictly sorted without duplicates")
        if idx and (idx[0] < 0 or idx[-1] >= n_sel):
            problems.append(f"{key} out of range [0, {n_sel})")
        if not idx:
            problems.append(f"{key} is empty")
    all_indices = sum((index_sets[k] for k in index_sets), [])
    if len(set(all_indices)) != len(all_indices):
        problems.append("token index sets overlap")
    elif len(all_indices) != n_sel:
        problems.append(
            f"index sets cover {len(all_indices)} positions but n_sel is {n_sel}"
        )
    return problems


def manifest_from_dict(d: dict) -> Manifest:
    problems = validate_manifest_dict(d)
    if problems:
        raise FormatError(problems)
    return Manifest(
        word_id=d["word_id"],
        group=d["group"],
        input_type=d["input_type"],
        dimension_id=d["dimension_id"],
        feature_order=d["feature_order"],
        gold_feature=d["gold_feature"],
        resolved_label=d["resolved_label"],
        token_strings=tuple(d["token_strings"]),
        input_token_indices=tuple(d["input_token_indices"]),
        feature1_token_indices=tuple(d["feature1_token_indices"]),
        feature2_token_indices=tuple(d["feature2_token_indices"]),
        n_layers=int(d["n_layers"]),
        n_heads=int(d["n_heads"]),
        n_sel=int(d["n_sel"]),
        attention_kind=d["attention_kind"],
        frame_period_ms=float(d["frame_period_ms"]) if "frame_period_ms" in d else None,
    )


def write_dump(path: str | Path, manifest: Manifest, tensor: np.ndarray) -> None:
    problems = validate_manifest_dict(manifest.to_json_dict())
    expected_shape = (manifest.n_layers, manifest.n_heads, manifest.n_sel, manifest.n_sel)
    arr = np.asarray(tensor, dtype="<f4")
    if arr.shape != expected_shape:
        problems.append(f"tensor shape {arr.shape} != {expected_shape}")
    elif not np.all(np.isfinite(arr)) or np.any(arr < 0):
        problems.append("tensor values must be finite and >= 0")
    if problems:
        raise FormatError(problems)
    blob = json.dumps(manifest.to_json_dict(), ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(arr.tobytes(order="C"))


def read_dump(path: str | Path) -> AttentionDump:
    problems = validate_file(path)
    if problems:
        raise FormatError(problems)
    data = Path(path).read_bytes()
    manifest_len = struct.unpack("<I", data[4:8])[0]
    manifest = manifest_from_dict(json.loads(data[8 : 8 + manifest_len].decode("utf-8")))
    tensor = np.frombuffer(data[8 + manifest_len :], dtype="<f4").reshape(
        manifest.n_layers, manifest.n_heads, manifest.n_sel, manifest.n_sel
    )
    return AttentionDump(manifest=manifest, tensor=tensor)


def validate_file(path: str | Path) -> list[str]:
    """All format problems with a dump file; empty list means it validates."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        return [f"unreadable: {e}"]
    if len(data) < 8:
        return ["file shorter than magic + manifest length"]
    if data[:4] != MAGIC:
        return [f"bad magic {data[:4]!r}, expected {MAGIC!r}"]
    manifest_len = struct.unpack("<I", data[4:8])[0]
    if len(data) < 8 + manifest_len:
        return ["declared manifest length exceeds file size"]
    try:
        d = json.loads(data[8 : 8 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        return [f"manifest is not valid UTF-8 JSON: {e}"]
    problems = validate_manifest_dict(d)
    if problems:
        return problems
    n_layers, n_heads, n_sel = int(d["n_layers"]), int(d["n_heads"]), int(d["n_sel"])
    expected = n_layers * n_heads * n_sel * n_sel * 4
    actual = len(data) - 8 - manifest_len
    if actual != expected:
        return [f"tensor payload is {actual} bytes, expected {expected}"]
    tensor = np.frombuffer(data[8 + manifest_len :], dtype="<f4")
    if not np.all(np.isfinite(tensor)):
        problems.append("tensor contains non-finite values")
    if np.any(tensor < 0):
        problems.append("tensor contains negative values")
    return problems
