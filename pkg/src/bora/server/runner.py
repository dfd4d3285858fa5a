"""Run the service in-process (tests, bench) or in the foreground (CLI)."""

from __future__ import annotations

import threading
import time

import uvicorn

from .app import create_app
from .config import ServerConfig


class ServerHandle:
    """uvicorn on a background thread; port 0 picks a free port."""

    def __init__(self, config: ServerConfig, log_level: str = "warning"):
        self.config = config
        self._app = create_app(config)
        self._uv_config = uvicorn.Config(self._app, host=config.host, port=config.port,
                                         log_level=log_level, lifespan="on")
        self._server = uvicorn.Server(self._uv_config)
        self._thread: threading.Thread | None = None

    @property
    def app(self):
        return self._app

    @property
    def port(self) -> int:
        for server in self._server.servers:
            for sock in server.sockets:
                return sock.getsockname()[1]
        raise RuntimeError("server has no bound socket yet")

    @property
    def base_url(self) -> str:
        return f"http://{self.config.host}:{self.port}"

    @property
    def ws_url(self) -> str:
        return f"ws://{self.config.host}:{self.port}"

    def start(self, ready_timeout_s: float = 15.0) -> "ServerHandle":
        self._thread = threading.Thread(target=self._server.run, daemon=True,
                                        name="bora-server")
        self._thread.start()
        deadline = time.monotonic() + ready_timeout_s
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server failed to start in time")
            if not self._thread.is_alive():
                raise RuntimeError("server thread exited during startup")
            time.sleep(0.01)
        return self

    def stop(self, timeout_s: float = 10.0) -> None:
        self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=timeout_s)
            self._thread = None

    def __enter__(self) -> "ServerHandle":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def serve_forever(config: ServerConfig, port: int | None = None) -> None:
    """Foreground server for the CLI; handles SIGINT/SIGTERM itself."""
    if port is not None:
        from dataclasses import replace
        config = replace(config, port=port)
    uvicorn.run(create_app(config), host=config.host, port=config.port,
                log_level="info", lifespan="on")
