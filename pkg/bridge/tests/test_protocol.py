"""Protocol conformance, driven through a real `bridge serve --stdio`
subprocess by a scripted client. Every response is validated against the
documented schema."""

import json
import socket
import subprocess
import sys
import time

import pytest
from jsonschema import validate

OK_BASE = {"type": "object", "properties": {"ok": {"const": True}}, "required": ["ok"]}

SCHEMAS = {
    "begin": {
        "type": "object",
        "properties": {
            "ok": {"const": True},
            "session": {"type": "string"},
            "prompt_len": {"type": "integer", "minimum": 0},
            "model_id": {"type": "string"},
            "hidden_dim": {"type": "integer", "minimum": 1},
        },
        "required": ["ok", "session", "prompt_len"],
    },
    "next": {
        "type": "object",
        "properties": {
            "ok": {"const": True},
            "eos": {"type": "boolean"},
            "token": {"type": ["string", "null"]},
            "token_id": {"type": "integer"},
            "nll": {"type": "number", "minimum": 0},
            "entropy": {"type": "number", "minimum": 0},
        },
        "required": ["ok", "eos"],
    },
    "snapshot": {
        "type": "object",
        "properties": {"ok": {"const": True}, "checkpoint_id": {"type": "string"}},
        "required": ["ok", "checkpoint_id"],
    },
    "restore": OK_BASE,
    "hidden": {
        "type": "object",
        "properties": {
            "ok": {"const": True},
            "hidden_shape": {
                "type": "array",
                "items": {"type": "integer", "minimum": 0},
                "minItems": 2,
                "maxItems": 2,
            },
            "hidden_b64": {"type": "string"},
        },
        "required": ["ok", "hidden_shape", "hidden_b64"],
    },
    "error": {
        "type": "object",
        "properties": {"ok": {"const": False}, "error": {"type": "string"}},
        "required": ["ok", "error"],
    },
}


class StdioClient:
    def __init__(self, model="tiny:seed=3"):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "lmbridge.cli", "serve", "--model", model, "--stdio"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def call(self, validate_as=None, **request):
        self.proc.stdin.write(json.dumps(request) + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        assert line, "bridge closed the stream"
        response = json.loads(line)
        if validate_as is not None:
            validate(response, SCHEMAS[validate_as])
        return response

    def close(self):
        self.proc.stdin.close()
        self.proc.wait(timeout=10)


@pytest.fixture()
def client():
    c = StdioClient()
    yield c
    c.close()


def drain_tokens(client, session, n):
    out = []
    for _ in range(n):
        r = client.call(validate_as="next", op="next", session=session)
        if r["eos"]:
            break
        out.append((r["token"], r["token_id"]))
    return out


class TestConformance:
    def test_begin_next_hidden_shape(self, client):
        r = client.call(validate_as="begin", op="begin", session="s",
                        prompt="module mux(", seed=7, temperature=0.7, top_p=0.95)
        prompt_len = r["prompt_len"]
        toks = drain_tokens(client, "s", 5)
        assert len(toks) == 5
        h = client.call(validate_as="hidden", op="hidden", session="s")
        assert h["hidden_shape"] == [prompt_len + 5, r["hidden_dim"]]
        import base64

        raw = base64.b64decode(h["hidden_b64"])
        assert len(raw) == 4 * h["hidden_shape"][0] * h["hidden_shape"][1]

    def test_snapshot_restore_determinism(self, client):
        client.call(validate_as="begin", op="begin", session="s", prompt="assign ", seed=1)
        drain_tokens(client, "s", 3)
        cid = client.call(validate_as="snapshot", op="snapshot", session="s")["checkpoint_id"]
        first = drain_tokens(client, "s", 3)
        client.call(validate_as="restore", op="restore", session="s", checkpoint_id=cid)
        second = drain_tokens(client, "s", 3)
        assert first == second

    def test_restore_with_seed_is_reproducible(self, client):
        client.call(op="begin", session="s", prompt="wire ", seed=2)
        cid = client.call(op="snapshot", session="s")["checkpoint_id"]
        client.call(op="restore", session="s", checkpoint_id=cid, seed=42)
        a = drain_tokens(client, "s", 4)
        client.call(op="restore", session="s", checkpoint_id=cid, seed=42)
        b = drain_tokens(client, "s", 4)
        assert a == b

    def test_nll_entropy_bounds(self, client):
        import math

        client.call(op="begin", session="s", prompt="", seed=3)
        from lmbridge.tinylm import VOCAB

        for _ in range(10):
            r = client.call(validate_as="next", op="next", session="s")
            if r["eos"]:
                break
            assert r["nll"] >= 0.0
            assert 0.0 <= r["entropy"] <= math.log(len(VOCAB)) + 1e-9

    def test_errors_are_schema_valid(self, client):
        r = client.call(validate_as="error", op="next", session="ghost")
        assert "unknown session" in r["error"]
        r = client.call(validate_as="error", op="frobnicate", session="x")
        assert "unknown op" in r["error"]
        client.call(op="begin", session="s", prompt="")
        r = client.call(validate_as="error", op="restore", session="s", checkpoint_id="none")
        assert "checkpoint" in r["error"]

    def test_malformed_json_survives(self, client):
        client.proc.stdin.write("{this is not json\n")
        client.proc.stdin.flush()
        response = json.loads(client.proc.stdout.readline())
        validate(response, SCHEMAS["error"])
        # the loop is still alive
        r = client.call(validate_as="begin", op="begin", session="s2", prompt="x")
        assert r["ok"]

    def test_identical_begins_identical_streams(self):
        a, b = StdioClient(), StdioClient()
        try:
            for c in (a, b):
                c.call(op="begin", session="s", prompt="always @(", seed=11)
            ta = drain_tokens(a, "s", 8)
            tb = drain_tokens(b, "s", 8)
            assert ta == tb
        finally:
            a.close()
            b.close()


class TestTcpTransport:
    def test_tcp_roundtrip(self):
        port = 45731
        proc = subprocess.Popen(
            [sys.executable, "-m", "lmbridge.cli", "serve", "--model", "tiny",
             "--tcp", str(port)],
            stderr=subprocess.PIPE,
            text=True,
        )
        try:
            deadline = time.time() + 10
            sock = None
            while time.time() < deadline:
                try:
                    sock = socket.create_connection(("127.0.0.1", port), timeout=1)
                    break
                except OSError:
                    time.sleep(0.1)
            assert sock is not None, "server never came up"
            f = sock.makefile("rw")
            f.write(json.dumps({"op": "begin", "session": "t", "prompt": "x", "seed": 0}) + "\n")
            f.flush()
            response = json.loads(f.readline())
            validate(response, SCHEMAS["begin"])
            sock.close()
        finally:
            proc.terminate()
            proc.wait(timeout=10)
