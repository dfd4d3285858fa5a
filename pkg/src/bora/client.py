"""Thin HTTP client for the control API.

Anything that can issue HTTP requests (a notebook, a shell script, this
module) can drive a running server; this client is the reference for the
wire shapes and keeps the CLI a thin veneer.
"""

from __future__ import annotations

import base64
import json

import httpx

TOKEN_HEADER = "X-Bora-Token"


class ControlClient:
    def __init__(self, base_url: str, token: str, timeout_s: float = 10.0):
        self._client = httpx.Client(base_url=base_url,
                                    headers={TOKEN_HEADER: token},
                                    timeout=timeout_s)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ControlClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- control patches -------------------------------------------------

    def _patch(self, op: str, target: str | None = None, payload=None) -> dict:
        response = self._client.post("/api/control",
                                     json={"op": op, "target": target, "payload": payload})
        response.raise_for_status()
        return response.json()

    def set_poll_interval(self, interval_ms: int) -> dict:
        return self._patch("set_poll_interval", payload=interval_ms)

    def bind_sensors(self, widget_id: str, sensors: list[str]) -> dict:
        return self._patch("bind_sensors", target=widget_id, payload=list(sensors))

    def attach_image(self, widget_id: str, media_type: str, data: bytes) -> dict:
        return self._patch("attach_image", target=widget_id,
                           payload={"media_type": media_type,
                                    "data_b64": base64.b64encode(data).decode()})

    def attach_video(self, widget_id: str, stream_url: str, transport: str = "push") -> dict:
        return self._patch("attach_video", target=widget_id,
                           payload={"stream_url": stream_url, "transport": transport})

    def move_widget(self, widget_id: str, x: int | None = None, y: int | None = None,
                    width: int | None = None, height: int | None = None) -> dict:
        payload = {k: v for k, v in
                   (("x", x), ("y", y), ("width", width), ("height", height))
                   if v is not None}
        return self._patch("move_widget", target=widget_id, payload=payload)

    # -- devices and recordings ---------------------------------------------

    def set_device(self, param_id: str, value: float) -> dict:
        response = self._client.post(f"/api/device/{param_id}", json={"value": value})
        response.raise_for_status()
        return response.json()

    def mark_recording(self, stream_id: str, from_ts: int, to_ts: int) -> dict:
        response = self._client.post("/api/recordings",
                                     json={"stream_id": stream_id,
                                           "from_ts": from_ts, "to_ts": to_ts})
        response.raise_for_status()
        return response.json()

    # -- reads ---------------------------------------------------------------

    def get_spec(self) -> dict:
        response = self._client.get("/api/spec")
        response.raise_for_status()
        return json.loads(response.text)

    def get_data(self, sensors: list[str], window_s: int = 600) -> str:
        response = self._client.get("/api/data",
                                    params={"sensors": ",".join(sensors),
                                            "window": window_s})
        response.raise_for_status()
        return response.text

    def get_recordings(self) -> list[dict]:
        response = self._client.get("/api/recordings")
        response.raise_for_status()
        return response.json()
