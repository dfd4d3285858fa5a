"""Protocol parser registry.

Parsers are plugged in by name so an experiment can swap its upstream
protocol without touching the ingestion core. A parser is any object the
source runner knows how to drive; the registry only resolves names.
"""

from __future__ import annotations

import threading
from typing import Any

from ..errors import DuplicateProtocolError, UnknownProtocolError


class RegistrationHandle:
    """Returned by register(); allows the registration to be withdrawn."""

    def __init__(self, registry: "ParserRegistry", name: str):
        self._registry = registry
        self.protocol_name = name

    def unregister(self) -> None:
        self._registry._remove(self.protocol_name)


class ParserRegistry:
    def __init__(self):
        self._parsers: dict[str, Any] = {}
        self._lock = threading.Lock()

    def register(self, protocol_name: str, parser: Any) -> RegistrationHandle:
        with self._lock:
            if protocol_name in self._parsers:
                raise DuplicateProtocolError(protocol_name)
            self._parsers[protocol_name] = parser
        return RegistrationHandle(self, protocol_name)

    def resolve(self, protocol_name: str) -> Any:
        with self._lock:
            try:
                return self._parsers[protocol_name]
            except KeyError:
                raise UnknownProtocolError(protocol_name) from None

    def _remove(self, protocol_name: str) -> None:
        with self._lock:
            self._parsers.pop(protocol_name, None)

    def protocols(self) -> list[str]:
        with self._lock:
            return sorted(self._parsers)


_default = ParserRegistry()


def default_registry() -> ParserRegistry:
    """Process-wide registry preloaded with the built-in protocols."""
    if not _default.protocols():
        from . import http_poll, push, simulate
        _default.register("http_poll", http_poll.poll_http_source)
        _default.register("push_channel", push.ingest_push_message)
        _default.register("simulated", simulate.run_simulated_source)
    return _default


def register_parser(protocol_name: str, parser: Any) -> RegistrationHandle:
    return default_registry().register(protocol_name, parser)
