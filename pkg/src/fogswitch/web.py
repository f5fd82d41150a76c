"""Small helpers shared by the back-end and proxy HTTP services."""
from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import BindFailure

log = logging.getLogger(__name__)

MAX_BODY = 256 * 1024 * 1024
POLL_S = 0.05  # shutdown latency


def dumps(obj) -> bytes:
    return json.dumps(obj, separators=(",", ":")).encode("utf-8")


class JsonHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "fogswitch"

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            raise ValueError("request body too large")
        return self.rfile.read(length)

    def send_body(self, status: int, body: bytes, headers=None, content_type="application/json"):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for k, v in (headers or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(body)

    def send_json(self, status: int, obj, headers=None):
        self.send_body(status, dumps(obj), headers)

    def send_error_code(self, status: int, code: str, **extra):
        self.send_json(status, {"error": code, **extra})


class Service:
    """A ThreadingHTTPServer running on a background thread."""

    def __init__(self, server: ThreadingHTTPServer):
        self.server = server
        self.thread = None

    @classmethod
    def bind(cls, handler_cls, host: str, port: int, **attrs) -> "Service":
        try:
            server = ThreadingHTTPServer((host, port), handler_cls)
        except OSError as e:
            raise BindFailure(f"cannot bind {host}:{port}: {e}") from e
        server.daemon_threads = True
        for k, v in attrs.items():
            setattr(server, k, v)
        return cls(server)

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    @property
    def url(self) -> str:
        host = self.server.server_address[0]
        return f"http://{host}:{self.port}"

    def start(self) -> "Service":
        self.thread = threading.Thread(target=self.server.serve_forever, args=(POLL_S,),
                                       name=f"http-{self.port}", daemon=True)
        self.thread.start()
        return self

    def serve_forever(self):
        self.server.serve_forever(POLL_S)

    def stop(self):
        self.server.shutdown()
        self.server.server_close()
        if self.thread is not None:
            self.thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
