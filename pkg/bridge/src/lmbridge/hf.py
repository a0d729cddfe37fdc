"""Hugging Face causal-LM backend (optional; requires the [hf] extra).

Wraps any AutoModelForCausalLM behind the same interface the tiny model
implements: step the hidden recurrence token by token, expose final-layer
hidden states, score with full-vocabulary softmax. Determinism of restored
generation depends on deterministic kernels; run on CPU for the conformance
guarantees.

Note the deliberately stateless recurrence contract: `step` receives and
returns an opaque state (here the growing token prefix), and logits/hidden
states are recomputed from the prefix. That trades restore latency for
model-agnosticism, matching the checkpointing contract.
"""

from __future__ import annotations

import numpy as np


class HFBackend:
    def __init__(self, model_ref: str):
        try:
            import torch
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise RuntimeError(
                "the hf backend needs the [hf] extra (torch + transformers)"
            ) from exc
        self._torch = torch
        torch.manual_seed(0)
        self.tokenizer = AutoTokenizer.from_pretrained(model_ref)
        self.model = AutoModelForCausalLM.from_pretrained(model_ref)
        self.model.eval()
        self.model_id = f"hf:{model_ref}"
        self.dim = int(self.model.config.hidden_size)
        self.eos_id = int(self.tokenizer.eos_token_id or 0)

    # The session drives a (state, token) recurrence; for transformers the
    # state is the token prefix and every step re-runs the model. Hidden rows
    # and logits come from the final layer.

    def tokenize(self, text: str) -> list[int]:
        return list(self.tokenizer.encode(text, add_special_tokens=False))

    def detokenize(self, token_id: int) -> str:
        return self.tokenizer.decode([token_id])

    def initial_state(self):
        return []

    def step(self, state, token_id: int):
        return list(state) + [int(token_id)]

    def logits(self, state) -> np.ndarray:
        torch = self._torch
        ids = state if state else [self.eos_id]
        with torch.no_grad():
            out = self.model(torch.tensor([ids]))
        return out.logits[0, -1].float().numpy()

    def hidden_rows(self, state) -> np.ndarray:
        torch = self._torch
        if not state:
            return np.zeros((0, self.dim), dtype=np.float64)
        with torch.no_grad():
            out = self.model(torch.tensor([state]), output_hidden_states=True)
        return out.hidden_states[-1][0].float().numpy()
