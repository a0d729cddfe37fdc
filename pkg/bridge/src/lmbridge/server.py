"""Transports: stdio line loop and a single-client TCP server."""

from __future__ import annotations

import json
import socketserver
import sys

from .protocol import BridgeServer


def serve_stdio(server: BridgeServer, stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        response = server.handle_line(line)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()


def serve_tcp(server: BridgeServer, host: str, port: int):
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="replace")
                if not line.strip():
                    continue
                response = server.handle_line(line)
                self.wfile.write((json.dumps(response) + "\n").encode())
                self.wfile.flush()

    with socketserver.TCPServer((host, port), Handler) as srv:
        srv.allow_reuse_address = True
        announced = srv.server_address
        print(f"bridge listening on {announced[0]}:{announced[1]}", file=sys.stderr, flush=True)
        srv.serve_forever()
