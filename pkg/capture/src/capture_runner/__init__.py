"""Attention-capture runner: a small deterministic attention-exposing model,
an attention-dump writer, a batch capture operation over prompt files, and an
HTTP shim speaking the evaluation wire contract."""
from capture_runner.afd import write_afd
from capture_runner.capture import (
    AudioMissing,
    CaptureConfig,
    CaptureError,
    TokenizationDivergence,
    UnsupportedInputType,
    capture_prompt,
    run_capture_batch,
)
from capture_runner.model import ModelLoadError, TinyAttentionModel, load_model

__all__ = [
    "AudioMissing",
    "CaptureConfig",
    "CaptureError",
    "ModelLoadError",
    "TinyAttentionModel",
    "TokenizationDivergence",
    "UnsupportedInputType",
    "capture_prompt",
    "load_model",
    "run_capture_batch",
    "write_afd",
]
