"""Standalone fixture server speaking the CSV poll protocol.

Stands in for a production data service during tests and demos: it answers
GET ?sensors=a,b&window=N with canned (or generated) samples in the same
CSV format the poller consumes.
"""

from __future__ import annotations

import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Iterable
from urllib.parse import parse_qs, urlparse

from .http_poll import serialize_csv_rows
from .types import SensorSample

SampleProvider = Callable[[list[str], int], Iterable[SensorSample]]


class FixtureDataServer:
    """Tiny HTTP server with a pluggable sample provider."""

    def __init__(self, provider: SampleProvider | None = None,
                 samples: Iterable[SensorSample] = (), host: str = "127.0.0.1"):
        canned = list(samples)

        def canned_provider(sensors: list[str], window_s: int) -> list[SensorSample]:
            now_ms = time.time_ns() // 1_000_000
            floor = now_ms - window_s * 1000
            return [s for s in canned
                    if s.sensor_id in sensors and s.timestamp >= floor]

        self.provider = provider or canned_provider
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):  # noqa: N802 - http.server API
                query = parse_qs(urlparse(self.path).query)
                sensors = [s for s in query.get("sensors", [""])[0].split(",") if s]
                try:
                    window_s = int(query.get("window", ["600"])[0])
                except ValueError:
                    self.send_error(400, "bad window")
                    return
                body = serialize_csv_rows(outer.provider(sensors, window_s)).encode()
                self.send_response(200)
                self.send_header("Content-Type", "text/csv")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):  # quiet test output
                pass

        self._server = ThreadingHTTPServer((host, 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/getdata"

    def start(self) -> "FixtureDataServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "FixtureDataServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
