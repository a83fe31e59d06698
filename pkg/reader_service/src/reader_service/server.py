"""HTTP surface for the reader.

Endpoints:
    GET  /healthz  -> 200 {"status": "ok"}
    POST /answer   -> {"input": str} to {"answer", "model", "latency_ms"}
    POST /answers  -> {"inputs": [str, ...]} to {"answers": [item, ...]}
                      where a failed item is {"error": str}; order preserved

400 on malformed payloads, 401 when a configured auth token is missing or
wrong, 503 when no model is loaded. Requests are handled concurrently;
model inference is serialized behind a lock.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .models import make_model

TOKEN_ENV = "READER_SERVICE_TOKEN"


class ReaderHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, model, auth_token: str | None = None):
        super().__init__(address, _Handler)
        self.model = model
        self.auth_token = auth_token
        self.inference_lock = threading.Lock()


class _Handler(BaseHTTPRequestHandler):
    server: ReaderHTTPServer

    def log_message(self, format, *args):  # keep test output quiet
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _authorized(self) -> bool:
        token = self.server.auth_token
        if not token:
            return True
        return self.headers.get("Authorization") == f"Bearer {token}"

    def _read_json(self) -> dict | None:
        try:
            length = int(self.headers.get("Content-Length", 0))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (TypeError, ValueError):
            return None
        return body if isinstance(body, dict) else None

    def _answer_one(self, text: str) -> dict:
        started = time.perf_counter()
        with self.server.inference_lock:
            answer = self.server.model.generate(text)
        return {
            "answer": " ".join(str(answer).splitlines()) or "",
            "model": self.server.model.name,
            "latency_ms": (time.perf_counter() - started) * 1000.0,
        }

    def do_GET(self):
        if self.path == "/healthz":
            self._send(200, {"status": "ok"})
        else:
            self._send(404, {"error": f"no such endpoint: {self.path}"})

    def do_POST(self):
        if not self._authorized():
            self._send(401, {"error": "missing or invalid bearer token"})
            return
        if self.path == "/answer":
            self._post_answer()
        elif self.path == "/answers":
            self._post_answers()
        else:
            self._send(404, {"error": f"no such endpoint: {self.path}"})

    def _post_answer(self):
        body = self._read_json()
        if body is None or not isinstance(body.get("input"), str) or not body["input"].strip():
            self._send(400, {"error": "expected JSON body with a non-empty 'input' string"})
            return
        if self.server.model is None:
            self._send(503, {"error": "model not loaded"})
            return
        self._send(200, self._answer_one(body["input"]))

    def _post_answers(self):
        body = self._read_json()
        inputs = body.get("inputs") if body else None
        if not isinstance(inputs, list) or not all(isinstance(x, str) for x in inputs):
            self._send(400, {"error": "expected JSON body with an 'inputs' list of strings"})
            return
        if self.server.model is None:
            self._send(503, {"error": "model not loaded"})
            return
        items = []
        for text in inputs:
            if not text.strip():
                items.append({"error": "empty input"})
                continue
            try:
                items.append(self._answer_one(text))
            except Exception as exc:  # item failure must not sink the batch
                items.append({"error": str(exc)})
        self._send(200, {"answers": items})


def serve(host: str, port: int, model_kind: str, max_tokens: int = 50,
          auth_token: str | None = None) -> ReaderHTTPServer:
    """Bind and return the server (caller runs serve_forever)."""
    try:
        model = make_model(model_kind, max_tokens=max_tokens)
    except Exception as exc:
        print(f"model load failed ({exc}); serving 503s", file=sys.stderr)
        model = None
    server = ReaderHTTPServer((host, port), model, auth_token=auth_token)
    return server


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Reader HTTP service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080, help="0 picks a free port")
    parser.add_argument("--model", default="stub", help="stub, echo, or hf:<path>")
    parser.add_argument("--max-tokens", type=int, default=50,
                        help="generation budget for seq2seq models")
    parser.add_argument("--auth-token", default=os.environ.get(TOKEN_ENV),
                        help=f"shared bearer token (default: ${TOKEN_ENV})")
    args = parser.parse_args(argv)

    server = serve(args.host, args.port, args.model, args.max_tokens, args.auth_token)
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
