"""Self-contained tiny recurrent language model.

A fixed-weight (seeded, untrained) RNN over a small Verilog-flavoured word
vocabulary. It exists so the bridge protocol, checkpointing, and trace export
are fully exercisable offline and deterministically on CPU; swap in the HF
backend for a real model.

Probabilities: logits are temperature-scaled then softmaxed; NLL and entropy
are reported over that full distribution (nats). Top-p truncation applies to
sampling only.
"""

from __future__ import annotations

import numpy as np

VOCAB: tuple[str, ...] = (
    "<eos>",
    "<unk>",
    "\n", " ",
    "module", "endmodule", "assign", "wire", "reg", "input", "output",
    "always", "begin", "end", "if", "else", "case", "endcase", "default",
    "posedge", "negedge", "parameter",
    ";", ",", "(", ")", "[", "]", "{", "}", "@", ":", "?",
    "=", "<=", "==", "&", "|", "^", "~", "+", "-", "*",
    "a", "b", "c", "d", "y", "q", "s", "w", "x", "z",
    "clk", "rst", "sel", "en", "sum", "carry", "count", "state", "mux",
    "0", "1", "2", "3", "1'b0", "1'b1", "2'b00", "2'b01", "4'b0000",
)

EOS_ID = 0
UNK_ID = 1


class TinyLM:
    """model ref syntax: "tiny" or "tiny:seed=<n>,dim=<d>"."""

    def __init__(self, seed: int = 0, dim: int = 16):
        self.model_id = f"tiny:seed={seed},dim={dim}"
        self.dim = dim
        self.vocab = VOCAB
        self.eos_id = EOS_ID
        rng = np.random.default_rng(seed)
        v = len(VOCAB)
        self.embed = rng.normal(0.0, 0.6, size=(v, dim))
        self.w_rec = rng.normal(0.0, 0.4, size=(dim, dim))
        self.bias = rng.normal(0.0, 0.2, size=dim)
        # Keep the untrained logit landscape flat enough that sampling stays
        # diverse (no fixed-point repetition), with a bias toward statement
        # delimiters so boundaries occur at realistic rates.
        self.logit_scale = 0.3
        self.logit_bias = np.zeros(v)
        for tok, bump in ((";", 2.0), ("\n", 1.0), (" ", 1.2), ("end", 1.0), ("<eos>", 0.3)):
            self.logit_bias[VOCAB.index(tok)] += bump
        self._by_length = sorted(range(v), key=lambda i: -len(VOCAB[i]))

    @classmethod
    def from_ref(cls, ref: str) -> "TinyLM":
        kwargs = {"seed": 0, "dim": 16}
        _, _, args = ref.partition(":")
        for part in filter(None, args.split(",")):
            key, _, value = part.partition("=")
            if key == "seed":
                kwargs["seed"] = int(value)
            elif key == "dim":
                kwargs["dim"] = int(value)
            else:
                raise ValueError(f"unknown tiny model option {key!r}")
        return cls(**kwargs)

    # ---- tokenizer ----

    def tokenize(self, text: str) -> list[int]:
        ids = []
        i = 0
        while i < len(text):
            for tid in self._by_length:
                tok = VOCAB[tid]
                if tid in (EOS_ID, UNK_ID) or not tok:
                    continue
                if text.startswith(tok, i):
                    ids.append(tid)
                    i += len(tok)
                    break
            else:
                ids.append(UNK_ID)
                i += 1
        return ids

    def detokenize(self, token_id: int) -> str:
        if token_id == UNK_ID:
            return "?"
        return VOCAB[token_id]

    # ---- recurrence ----
    # State is (current hidden vector, list of per-position hidden rows);
    # step mutates and returns it. Checkpointing stores token prefixes and
    # replays, so states are never shared.

    def initial_state(self):
        return [np.tanh(self.bias), []]

    def step(self, state, token_id: int):
        h, rows = state
        h = np.tanh(self.embed[token_id] + self.w_rec @ h)
        rows.append(h)
        return [h, rows]

    def logits(self, state) -> np.ndarray:
        h, _ = state
        return self.logit_scale * (h @ self.embed.T) + self.logit_bias

    def hidden_rows(self, state) -> np.ndarray:
        _, rows = state
        if not rows:
            return np.zeros((0, self.dim))
        return np.vstack(rows)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def sample_top_p(probs: np.ndarray, top_p: float, rng: np.random.Generator) -> int:
    order = np.argsort(probs)[::-1]
    sorted_probs = probs[order]
    keep = int(np.searchsorted(np.cumsum(sorted_probs), top_p) + 1)
    keep = min(keep, len(probs))
    kept = order[:keep]
    renorm = probs[kept] / probs[kept].sum()
    return int(rng.choice(kept, p=renorm))


def distribution_stats(probs: np.ndarray, chosen: int) -> tuple[float, float]:
    """(nll of the chosen token, entropy) over the full distribution, nats."""
    p = max(float(probs[chosen]), 1e-12)
    entropy = float(-(probs * np.log(np.maximum(probs, 1e-12))).sum())
    return -np.log(p), max(entropy, 0.0)
