"""HTTP/WebSocket service: endpoints, sessions, config, in-process runner."""

from .app import AppState, create_app
from .config import DeviceConfig, ServerConfig, load_server_config
from .runner import ServerHandle, serve_forever
from .sessions import SessionManager, bound_sensors, spec_message

__all__ = [
    "AppState",
    "create_app",
    "DeviceConfig",
    "ServerConfig",
    "load_server_config",
    "ServerHandle",
    "serve_forever",
    "SessionManager",
    "bound_sensors",
    "spec_message",
]
