"""Session management and request dispatch for the bridge wire protocol.

Requests (one JSON object per line):
  {op:"begin", session, prompt, temperature?, top_p?, seed?}
  {op:"next", session}
  {op:"snapshot", session}
  {op:"restore", session, checkpoint_id, seed?}
  {op:"hidden", session}
Responses always carry ok; errors are {ok:false, error} and never kill the
loop. next responses: {ok, token, token_id, nll, entropy, eos};
snapshot: {ok, checkpoint_id}; hidden: {ok, hidden_shape:[L,D], hidden_b64}
with float32 little-endian row-major payload. Checkpoints store the token
prefix plus sampler state; restore recomputes model state by replay.
"""

from __future__ import annotations

import base64
import json

import numpy as np

from .tinylm import TinyLM, distribution_stats, sample_top_p, softmax


class ProtocolError(Exception):
    pass


class _Session:
    def __init__(self, backend, prompt: str, temperature: float, top_p: float, seed: int):
        self.backend = backend
        self.temperature = max(float(temperature), 1e-4)
        self.top_p = min(max(float(top_p), 1e-4), 1.0)
        self.rng = np.random.default_rng(seed)
        self.prompt_ids = backend.tokenize(prompt)
        self.generated_ids: list[int] = []
        self.checkpoints: dict[str, tuple[tuple[int, ...], dict]] = {}
        self._ckpt_counter = 0
        self._recompute()

    def _recompute(self):
        state = self.backend.initial_state()
        for tid in self.prompt_ids + self.generated_ids:
            state = self.backend.step(state, tid)
        self.state = state

    @property
    def prompt_len(self) -> int:
        return len(self.prompt_ids)

    def next_token(self) -> dict:
        logits = self.backend.logits(self.state)
        probs = softmax(logits / self.temperature)
        chosen = sample_top_p(probs, self.top_p, self.rng)
        if chosen == self.backend.eos_id:
            return {"ok": True, "eos": True, "token": None, "token_id": chosen}
        nll, entropy = distribution_stats(probs, chosen)
        self.generated_ids.append(chosen)
        self.state = self.backend.step(self.state, chosen)
        return {
            "ok": True,
            "eos": False,
            "token": self.backend.detokenize(chosen),
            "token_id": chosen,
            "nll": nll,
            "entropy": entropy,
        }

    def snapshot(self) -> str:
        self._ckpt_counter += 1
        cid = f"ckpt{self._ckpt_counter}"
        self.checkpoints[cid] = (tuple(self.generated_ids), self.rng.bit_generator.state)
        return cid

    def restore(self, checkpoint_id: str, seed: int | None):
        if checkpoint_id not in self.checkpoints:
            raise ProtocolError(f"unknown checkpoint {checkpoint_id!r}")
        prefix, rng_state = self.checkpoints[checkpoint_id]
        self.generated_ids = list(prefix)
        if seed is not None:
            self.rng = np.random.default_rng(int(seed))
        else:
            self.rng = np.random.default_rng()
            self.rng.bit_generator.state = rng_state
        self._recompute()

    def hidden(self) -> dict:
        matrix = np.asarray(self.backend.hidden_rows(self.state), dtype="<f4")
        payload = base64.b64encode(np.ascontiguousarray(matrix).tobytes()).decode()
        return {
            "ok": True,
            "hidden_shape": [int(matrix.shape[0]), int(matrix.shape[1])],
            "hidden_b64": payload,
        }


def load_backend(model_ref: str):
    if model_ref == "tiny" or model_ref.startswith("tiny:"):
        return TinyLM.from_ref(model_ref)
    if model_ref.startswith("hf:"):
        from .hf import HFBackend

        return HFBackend(model_ref[3:])
    raise ProtocolError(f"unknown model ref {model_ref!r}; use tiny[:opts] or hf:<name>")


class BridgeServer:
    """One request at a time; sessions keyed by client-chosen ids."""

    def __init__(self, backend):
        self.backend = backend
        self.sessions: dict[str, _Session] = {}

    def handle_line(self, line: str) -> dict:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            return {"ok": False, "error": f"invalid JSON: {exc}"}
        if not isinstance(request, dict):
            return {"ok": False, "error": "request must be a JSON object"}
        try:
            return self._dispatch(request)
        except ProtocolError as exc:
            return {"ok": False, "error": str(exc)}
        except MemoryError:
            return {"ok": False, "error": "out of memory while serving request"}
        except Exception as exc:  # surface, never drop the connection
            return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}

    def _require_session(self, request: dict) -> _Session:
        sid = request.get("session")
        if not isinstance(sid, str):
            raise ProtocolError("missing session id")
        if sid not in self.sessions:
            raise ProtocolError(f"unknown session {sid!r}")
        return self.sessions[sid]

    def _dispatch(self, request: dict) -> dict:
        op = request.get("op")
        if op == "begin":
            sid = request.get("session")
            if not isinstance(sid, str) or not sid:
                raise ProtocolError("begin needs a session id")
            session = _Session(
                self.backend,
                prompt=str(request.get("prompt", "")),
                temperature=request.get("temperature", 0.7),
                top_p=request.get("top_p", 0.95),
                seed=int(request.get("seed", 0)),
            )
            self.sessions[sid] = session
            return {
                "ok": True,
                "session": sid,
                "prompt_len": session.prompt_len,
                "model_id": self.backend.model_id,
                "hidden_dim": self.backend.dim,
            }
        if op == "next":
            return self._require_session(request).next_token()
        if op == "snapshot":
            cid = self._require_session(request).snapshot()
            return {"ok": True, "checkpoint_id": cid}
        if op == "restore":
            session = self._require_session(request)
            cid = request.get("checkpoint_id")
            if not isinstance(cid, str):
                raise ProtocolError("restore needs checkpoint_id")
            session.restore(cid, request.get("seed"))
            return {"ok": True}
        if op == "hidden":
            return self._require_session(request).hidden()
        raise ProtocolError(f"unknown op {op!r}")
