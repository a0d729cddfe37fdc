"""bridge: serve a causal LM over the line-JSON protocol, or export traces."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .export import export_prompt, read_prompts
from .protocol import BridgeServer, ProtocolError, load_backend
from .server import serve_stdio, serve_tcp
from .traceio import write_trace


@click.group()
def cli():
    """Model bridge: per-token NLL/entropy, checkpointed sessions, hidden
    states, trace export."""


@cli.command("serve")
@click.option("--model", "model_ref", default="tiny", show_default=True,
              help="tiny[:seed=N,dim=D] or hf:<name_or_path>")
@click.option("--stdio", "use_stdio", is_flag=True, help="Serve on stdin/stdout.")
@click.option("--tcp", "tcp_port", type=int, default=None, help="Serve on this TCP port.")
@click.option("--host", default="127.0.0.1", show_default=True)
def serve_cmd(model_ref, use_stdio, tcp_port, host):
    """Answer begin/next/snapshot/restore/hidden requests."""
    if use_stdio == (tcp_port is not None):
        raise click.UsageError("choose exactly one of --stdio or --tcp <port>")
    backend = load_backend(model_ref)
    server = BridgeServer(backend)
    if use_stdio:
        serve_stdio(server)
    else:
        serve_tcp(server, host, tcp_port)


@cli.command("export")
@click.option("--model", "model_ref", default="tiny", show_default=True)
@click.option("--prompts", "prompts_path", type=click.Path(exists=True, path_type=Path),
              required=True, help="JSONL: {id, prompt, max_tokens?} per line.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--max-tokens", default=64, show_default=True, type=int)
@click.option("--temperature", default=0.7, show_default=True, type=float)
@click.option("--top-p", default=0.95, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
def export_cmd(model_ref, prompts_path, out_dir, max_tokens, temperature, top_p, seed):
    """Record traces plus hidden-state sidecars for each prompt."""
    backend = load_backend(model_ref)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, prompt in enumerate(read_prompts(prompts_path)):
        steps, blocks = export_prompt(
            backend,
            prompt["prompt"],
            max_tokens=int(prompt.get("max_tokens", max_tokens)),
            temperature=temperature,
            top_p=top_p,
            seed=seed + i,
        )
        path = out_dir / f"{prompt['id']}.trace.jsonl"
        write_trace(path, steps, blocks, backend.model_id)
        click.echo(f"wrote {path} ({len(steps)} steps, {len(blocks)} hidden blocks)")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except ProtocolError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
