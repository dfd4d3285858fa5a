"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

import base64
import binascii
from typing import Any

from pydantic import BaseModel, Field

from ..config import ControlPatch
from ..errors import IllegalPatchError


class PatchRequest(BaseModel):
    """Wire form of a ControlPatch.

    attach_image carries its bytes base64-encoded:
        {"op": "attach_image", "target": "w1",
         "payload": {"media_type": "image/png", "data_b64": "..."}}
    """

    op: str
    target: str | None = None
    payload: Any = None

    def to_patch(self) -> ControlPatch:
        payload = self.payload
        if self.op == "attach_image":
            if not isinstance(payload, dict):
                raise IllegalPatchError("attach_image payload must be an object")
            try:
                data = base64.b64decode(payload.get("data_b64", ""), validate=True)
            except (binascii.Error, ValueError):
                raise IllegalPatchError("attach_image data_b64 is not valid base64") from None
            payload = (str(payload.get("media_type", "")), data)
        return ControlPatch(op=self.op, target=self.target, payload=payload)


class RevisionResponse(BaseModel):
    revision: int


class DeviceSetRequest(BaseModel):
    value: float


class DeviceAck(BaseModel):
    param_id: str
    value: float
    ts: int


class RecordingRequest(BaseModel):
    stream_id: str
    from_ts: int
    to_ts: int


class RecordingMarkResponse(BaseModel):
    mark_id: int
    stream_id: str
    from_ts: int
    to_ts: int
    created_ts: int
    status: str
    path: str | None = None
    frame_count: int = 0


class OfferMessage(BaseModel):
    type: str = Field(pattern="^offer$")
    stream_id: str


class AnswerMessage(BaseModel):
    type: str = "answer"
    session_id: str
    data_channel_url: str
