"""A tiny deterministic attention-exposing model.

Character-level tokenizer (one character, one token), seeded random
embeddings and projection weights, multi-head causal softmax attention.
Small enough to run anywhere, deterministic for a given identifier, and it
exposes the full per-layer per-head attention tensor. Answers are decoded by
scoring a fixed set of allowed option strings, so a response is always one
of the offered integers.
"""
from __future__ import annotations

import math
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MODEL_FAMILY = "tiny-attn-v1"
N_AUDIO_FEATURES = 8


class ModelLoadError(ValueError):
    """The model identifier does not name a loadable model."""


def load_model(identifier: str) -> "TinyAttentionModel":
    """Load `tiny-attn-v1` or a seeded variant `tiny-attn-v1:<seed>`."""
    if identifier == MODEL_FAMILY:
        return TinyAttentionModel(seed=0)
    prefix = MODEL_FAMILY + ":"
    if identifier.startswith(prefix):
        try:
            seed = int(identifier[len(prefix):])
        except ValueError:
            raise ModelLoadError(f"bad seed in model identifier {identifier!r}")
        return TinyAttentionModel(seed=seed)
    raise ModelLoadError(f"unknown model {identifier!r}; expected {MODEL_FAMILY}[:<seed>]")


def _positional_encoding(length: int, dim: int) -> np.ndarray:
    # Standard sinusoidal positions.
    pos = np.arange(length, dtype=np.float64)[:, None]
    idx = np.arange(dim // 2, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * idx / dim)
    enc = np.zeros((length, dim), dtype=np.float64)
    enc[:, 0::2] = np.sin(angle)
    enc[:, 1::2] = np.cos(angle)
    return enc


@dataclass
class TinyAttentionModel:
    seed: int = 0
    n_layers: int = 2
    n_heads: int = 2
    d_model: int = 16
    _char_cache: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.d_model % self.n_heads:
            raise ModelLoadError("d_model must be divisible by n_heads")
        self.d_head = self.d_model // self.n_heads
        scale = 1.0 / math.sqrt(self.d_model)
        self.w_q = np.empty((self.n_layers, self.n_heads, self.d_model, self.d_head))
        self.w_k = np.empty_like(self.w_q)
        self.w_v = np.empty_like(self.w_q)
        self.w_o = np.empty((self.n_layers, self.n_heads * self.d_head, self.d_model))
        for layer in range(self.n_layers):
            for head in range(self.n_heads):
                for slot, w in enumerate((self.w_q, self.w_k, self.w_v)):
                    rng = np.random.default_rng([self.seed, 3, layer, head, slot])
                    w[layer, head] = rng.standard_normal((self.d_model, self.d_head)) * scale
            rng = np.random.default_rng([self.seed, 4, layer])
            self.w_o[layer] = rng.standard_normal(self.w_o.shape[1:]) * scale
        rng = np.random.default_rng([self.seed, 2])
        self.w_audio = rng.standard_normal((N_AUDIO_FEATURES, self.d_model)) / math.sqrt(
            N_AUDIO_FEATURES
        )

    # --- tokenization ---

    def char_vector(self, ch: str) -> np.ndarray:
        """Embedding for one character; seeded per codepoint and cached."""
        vec = self._char_cache.get(ch)
        if vec is None:
            rng = np.random.default_rng([self.seed, 1, ord(ch)])
            vec = rng.standard_normal(self.d_model) / math.sqrt(self.d_model)
            self._char_cache[ch] = vec
        return vec

    def audio_frame_vectors(self, path: str | Path, frame_period_ms: float) -> list[np.ndarray]:
        """Fixed-period frames of a PCM WAV file, as embedding vectors.

        Eight summary features per frame (the last frame is zero-padded),
        projected into the embedding space.
        """
        samples, rate = _read_wav(path)
        frame_len = max(1, int(round(rate * frame_period_ms / 1000.0)))
        n_frames = max(1, math.ceil(len(samples) / frame_len))
        vectors = []
        for i in range(n_frames):
            frame = samples[i * frame_len:(i + 1) * frame_len]
            if len(frame) < frame_len:
                frame = np.pad(frame, (0, frame_len - len(frame)))
            vectors.append(_frame_features(frame) @ self.w_audio)
        return vectors

    # --- forward pass ---

    def forward(self, vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Run the stack over a [seq, d_model] matrix.

        Returns (attention [n_layers, n_heads, seq, seq], hidden [seq, d_model]).
        Attention rows are causal softmax distributions: nonnegative, each row
        sums to 1, and positions cannot attend forward.
        """
        x = np.asarray(vectors, dtype=np.float64)
        seq = x.shape[0]
        x = x + _positional_encoding(seq, self.d_model)
        attn = np.zeros((self.n_layers, self.n_heads, seq, seq), dtype=np.float64)
        mask = np.triu(np.full((seq, seq), -np.inf), k=1)
        for layer in range(self.n_layers):
            head_outs = []
            for head in range(self.n_heads):
                q = x @ self.w_q[layer, head]
                k = x @ self.w_k[layer, head]
                v = x @ self.w_v[layer, head]
                scores = q @ k.T / math.sqrt(self.d_head) + mask
                scores -= scores.max(axis=1, keepdims=True)
                weights = np.exp(scores)
                weights /= weights.sum(axis=1, keepdims=True)
                attn[layer, head] = weights
                head_outs.append(weights @ v)
            x = x + np.concatenate(head_outs, axis=1) @ self.w_o[layer]
            x = (x - x.mean(axis=1, keepdims=True)) / (x.std(axis=1, keepdims=True) + 1e-6)
        return attn, x

    def choose_by_attention(
        self, attn: np.ndarray, option_token_spans: list[list[int]]
    ) -> int:
        """Index of the winning option span.

        Each option is scored by the attention the final position pays to
        that option's tokens, averaged over layers, heads, and span length;
        ties go to the earlier option. The result is always a valid index
        into `option_token_spans`, so a decoded answer is always one of the
        offered options.
        """
        if not option_token_spans or any(not s for s in option_token_spans):
            raise ValueError("every option needs a non-empty token span")
        last_row = attn.mean(axis=(0, 1))[-1]
        scores = [float(last_row[list(span)].mean()) for span in option_token_spans]
        return int(np.argmax(scores))

    def answer_index(self, vectors: np.ndarray,
                     option_token_spans: list[list[int]]) -> int:
        """Forward pass plus constrained choice; returns the option index."""
        attn, _ = self.forward(vectors)
        return self.choose_by_attention(attn, option_token_spans)


def _read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Mono float64 samples in [-1, 1] plus the sample rate."""
    with wave.open(str(path), "rb") as wav:
        n_channels = wav.getnchannels()
        sampwidth = wav.getsampwidth()
        rate = wav.getframerate()
        raw = wav.readframes(wav.getnframes())
    if sampwidth == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif sampwidth == 1:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    else:
        raise ValueError(f"unsupported WAV sample width {sampwidth}")
    if n_channels > 1:
        data = data.reshape(-1, n_channels).mean(axis=1)
    return data, rate


def _frame_features(frame: np.ndarray) -> np.ndarray:
    """Eight summary features of one audio frame."""
    crossings = np.mean(np.abs(np.diff(np.signbit(frame).astype(np.float64))))
    peak_pos = float(np.argmax(np.abs(frame))) / max(1, len(frame) - 1)
    return np.array([
        frame.mean(),
        frame.std(),
        frame.min(),
        frame.max(),
        math.sqrt(float(np.mean(frame ** 2))),
        crossings,
        float(np.mean(np.abs(frame))),
        peak_pos,
    ])
