"""Attention-dump file writer.

Layout: magic `AFD1`, little-endian u32 manifest length, UTF-8 JSON manifest
with sorted keys, then the float32 little-endian row-major attention tensor
shaped [n_layers][n_heads][n_sel][n_sel].
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"AFD1"


def write_afd(path: str | Path, manifest: dict, tensor: np.ndarray) -> None:
    """Write one dump atomically (temp file in place, then rename)."""
    path = Path(path)
    shape = (
        int(manifest["n_layers"]),
        int(manifest["n_heads"]),
        int(manifest["n_sel"]),
        int(manifest["n_sel"]),
    )
    arr = np.ascontiguousarray(tensor, dtype="<f4")
    if arr.shape != shape:
        raise ValueError(f"tensor shape {arr.shape} does not match manifest {shape}")
    blob = json.dumps(manifest, ensure_ascii=False, sort_keys=True).encode("utf-8")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(arr.tobytes(order="C"))
    os.replace(tmp, path)
