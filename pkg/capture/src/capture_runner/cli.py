"""Command-line interface for the capture runner."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from capture_runner import capture as cap
from capture_runner import promptio, shim
from capture_runner.model import ModelLoadError, load_model


@click.group()
def main() -> None:
    """Attention capture over prompt files, plus a wire-contract shim server."""


@main.command("capture-batch")
@click.option("--prompts", "prompts_path", required=True, type=str,
              help="Prompt JSONL file.")
@click.option("--words", "words_path", required=True, type=str,
              help="Lexicon JSONL file.")
@click.option("--dimensions", "dims_path", required=True, type=str,
              help="Dimension registry TSV.")
@click.option("--gold", "gold_path", default=None, type=str,
              help="Optional gold-label JSONL; absent pairs dump as 'unknown'.")
@click.option("--out-dir", "out_dir", required=True, type=str)
@click.option("--model", "model_id", default="tiny-attn-v1", show_default=True)
@click.option("--frame-period-ms", default=40.0, show_default=True, type=float)
@click.option("--attention-kind", default="post-softmax", show_default=True)
@click.option("--audio-root", default=None, type=str,
              help="Base directory for relative audio paths.")
def capture_batch(prompts_path, words_path, dims_path, gold_path, out_dir,
                  model_id, frame_period_ms, attention_kind, audio_root) -> None:
    """Capture every prompt in a file into attention-dump files."""
    try:
        prompts = promptio.read_prompts(promptio.read_lines(prompts_path))
        words = promptio.read_words(promptio.read_lines(words_path))
        dims = promptio.read_dimensions(promptio.read_lines(dims_path))
        gold = (promptio.read_gold(promptio.read_lines(gold_path))
                if gold_path else None)
        cfg = cap.CaptureConfig(
            out_dir=Path(out_dir), model_id=model_id,
            frame_period_ms=frame_period_ms, attention_kind=attention_kind,
        )
        result = cap.run_capture_batch(
            prompts, cfg, words, dims, gold,
            audio_root=Path(audio_root) if audio_root else None,
        )
    except (ModelLoadError, OSError, ValueError, KeyError) as e:
        click.echo(json.dumps({"error": str(e)}), err=True)
        sys.exit(2)
    click.echo(json.dumps({
        "dumps": len(result.written),
        "errors": [{"prompt_id": pid, "error": msg} for pid, msg in result.errors],
    }, ensure_ascii=False))


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True, type=int)
@click.option("--model", "model_id", default="tiny-attn-v1", show_default=True)
@click.option("--frame-period-ms", default=40.0, show_default=True, type=float)
@click.option("--audio-root", default=None, type=str)
def serve(host, port, model_id, frame_period_ms, audio_root) -> None:
    """Serve the evaluation wire contract until interrupted."""
    try:
        model = load_model(model_id)
    except ModelLoadError as e:
        click.echo(json.dumps({"error": str(e)}), err=True)
        sys.exit(2)
    server = shim.make_server(
        model, host=host, port=port, frame_period_ms=frame_period_ms,
        audio_root=Path(audio_root) if audio_root else None,
    )
    click.echo(json.dumps({"serving": f"http://{host}:{server.server_address[1]}"}))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
