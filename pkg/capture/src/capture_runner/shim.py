"""Plain-evaluation HTTP shim.

Speaks the evaluation wire contract: POST a JSON body with `model`,
`temperature`, `max_tokens`, and `messages` (one user message whose content
is a list of `{"type": "text", "text": ...}` and `{"type": "audio",
"path": ...}` parts); the response is `{"text": "<option number>"}`.
Answers are decoded under the constraint of the integer options offered in
the prompt, so every reply parses as a lone integer.
"""
from __future__ import annotations

import json
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from capture_runner.capture import AudioMissing, CaptureError, tokens_from_parts
from capture_runner.model import TinyAttentionModel

_OPTION_LINE = re.compile(r"^(\d+): (.*)$", re.MULTILINE)


def answer_request(body: dict, model: TinyAttentionModel,
                   frame_period_ms: float = 40.0,
                   audio_root: Path | None = None) -> str:
    """Answer one wire-contract request body with an option number."""
    messages = body.get("messages")
    if not isinstance(messages, list) or not messages:
        raise ValueError("body must carry a non-empty messages list")
    parts = messages[0].get("content")
    if not isinstance(parts, list) or not parts:
        raise ValueError("message content must be a non-empty part list")
    stream = tokens_from_parts(
        parts, model, frame_period_ms, audio_key="path", audio_root=audio_root
    )
    numbers = []
    spans = []
    for m in _OPTION_LINE.finditer(stream.text):
        numbers.append(m.group(1))
        spans.append([stream.text_token_index[i] for i in range(m.start(2), m.end(2))])
    if not numbers:
        raise ValueError("prompt text offers no numbered options")
    chosen = model.answer_index(np.stack(stream.vectors), spans)
    return numbers[chosen]


def make_server(model: TinyAttentionModel, host: str = "127.0.0.1", port: int = 0,
                frame_period_ms: float = 40.0,
                audio_root: Path | None = None) -> ThreadingHTTPServer:
    """A ready-to-serve ThreadingHTTPServer bound to (host, port)."""

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw.decode("utf-8"))
                text = answer_request(body, model, frame_period_ms, audio_root)
            except (ValueError, KeyError, CaptureError, AudioMissing,
                    UnicodeDecodeError) as e:
                self._reply(400, {"error": str(e)})
                return
            self._reply(200, {"text": text})

        def _reply(self, status: int, payload: dict) -> None:
            blob = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)

        def log_message(self, fmt, *args):
            pass

    server = ThreadingHTTPServer((host, port), Handler)
    server.daemon_threads = True
    return server
