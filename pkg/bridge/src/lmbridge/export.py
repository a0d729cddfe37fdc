"""Offline trace export: run the model over prompts and record traces plus
hidden-state sidecars in the consumer's wire formats."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .boundary import boundary_fired
from .protocol import _Session


def export_prompt(
    backend,
    prompt: str,
    max_tokens: int,
    temperature: float,
    top_p: float,
    seed: int,
) -> tuple[list[dict], list[np.ndarray]]:
    session = _Session(backend, prompt, temperature, top_p, seed)
    steps: list[dict] = []
    blocks: list[np.ndarray] = []
    text = ""
    for step_idx in range(max_tokens):
        resp = session.next_token()
        if resp.get("eos"):
            break
        token = resp["token"]
        text += token
        fired = boundary_fired(text, len(token))
        record = {
            "step": step_idx,
            "token_text": token,
            "token_id": resp["token_id"],
            "nll": resp["nll"],
            "entropy": resp["entropy"],
            "token_class": None,  # lexical classification is the consumer's job
            "is_boundary": fired,
            "attempt": 1,
            "hidden_ref": None,
        }
        if fired:
            hidden = session.hidden()
            rows, cols = hidden["hidden_shape"]
            import base64

            matrix = np.frombuffer(
                base64.b64decode(hidden["hidden_b64"]), dtype="<f4"
            ).reshape(rows, cols)
            record["hidden_ref"] = len(blocks)
            blocks.append(matrix)
        steps.append(record)
    return steps, blocks


def read_prompts(path: Path) -> list[dict]:
    prompts = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if "id" not in obj or "prompt" not in obj:
            raise ValueError(f"{path}:{lineno}: prompt lines need id and prompt fields")
        prompts.append(obj)
    return prompts
