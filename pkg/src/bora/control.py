"""Runtime control plane: spec mutations, device set-points, recording marks.

All spec-affecting patches funnel through one mutation lock, giving a
total order of revisions; every accepted patch swaps the shared spec and
notifies registered listeners (the server broadcasts those to displays).
Device writes echo into the sample cache so bound widgets reflect the new
value on the next poll cycle.
"""

from __future__ import annotations

import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .cache import SampleCache
from .config import ControlPatch, DashboardSpec, apply_settings_patch
from .errors import (
    EmptyRangeError,
    IllegalPatchError,
    UnknownDeviceError,
    UnknownStreamError,
    ValueOutOfRangeError,
)
from .ingest.types import SensorSample
from .stream.source import StreamWorker

MAX_ATTACHMENT_BYTES = 8 * 1024 * 1024


def _wall_ms() -> int:
    return time.time_ns() // 1_000_000


@dataclass(frozen=True, slots=True)
class DeviceParam:
    param_id: str
    minimum: float
    maximum: float
    value: float
    last_set_ts: int = 0
    setter: str | None = None


class DeviceRegistry:
    """Thread-safe last-write-wins store of controllable device parameters."""

    def __init__(self, clock_ms: Callable[[], int] = _wall_ms):
        self._params: dict[str, DeviceParam] = {}
        self._lock = threading.Lock()
        self._clock_ms = clock_ms

    def add(self, param_id: str, minimum: float, maximum: float, initial: float) -> None:
        with self._lock:
            self._params[param_id] = DeviceParam(param_id, minimum, maximum, initial)

    def get(self, param_id: str) -> DeviceParam:
        with self._lock:
            try:
                return self._params[param_id]
            except KeyError:
                raise UnknownDeviceError(param_id) from None

    def set(self, param_id: str, value: float, setter: str | None = None) -> DeviceParam:
        with self._lock:
            try:
                current = self._params[param_id]
            except KeyError:
                raise UnknownDeviceError(param_id) from None
            if not (current.minimum <= value <= current.maximum):
                raise ValueOutOfRangeError(
                    f"{param_id}={value} outside [{current.minimum}, {current.maximum}]")
            updated = DeviceParam(param_id, current.minimum, current.maximum,
                                  float(value), self._clock_ms(), setter)
            self._params[param_id] = updated
            return updated

    def param_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._params)


RECORDING_STATUSES = ("pending", "captured", "expired")


@dataclass(slots=True)
class RecordingMark:
    mark_id: int
    stream_id: str
    from_ts: int
    to_ts: int
    created_ts: int
    status: str = "pending"
    path: str | None = None
    frame_count: int = 0


class ControlPlane:
    def __init__(self, spec: DashboardSpec, cache: SampleCache,
                 devices: DeviceRegistry | None = None,
                 streams: dict[str, StreamWorker] | None = None,
                 recordings_dir: str | Path = "recordings",
                 clock_ms: Callable[[], int] = _wall_ms):
        self._spec = spec
        self.cache = cache
        self.devices = devices or DeviceRegistry(clock_ms)
        self.streams = streams if streams is not None else {}
        self.recordings_dir = Path(recordings_dir)
        self._clock_ms = clock_ms
        self._mutate = threading.Lock()
        self._listeners: list[Callable[[DashboardSpec], None]] = []
        self._attachments: dict[str, tuple[str, bytes]] = {}
        self._marks: list[RecordingMark] = []
        self._mark_ids = iter(range(1, 1 << 62))

    # -- spec ---------------------------------------------------------------

    @property
    def spec(self) -> DashboardSpec:
        return self._spec

    def on_spec_change(self, listener: Callable[[DashboardSpec], None]) -> None:
        self._listeners.append(listener)

    def submit_patch(self, patch: ControlPatch, auth: str | None = None) -> dict:
        """Apply one patch; returns {"revision": n} or the op-specific ack."""
        if patch.op == "set_device_param":
            payload = patch.payload or {}
            ack = self.set_device_parameter(
                str(payload.get("param_id", "")), float(payload.get("value", 0.0)), auth)
            return {"param_id": ack.param_id, "value": ack.value, "ts": ack.last_set_ts}
        if patch.op == "mark_recording":
            payload = patch.payload or {}
            mark = self.mark_recording(str(payload.get("stream_id", "")),
                                       int(payload.get("from_ts", 0)),
                                       int(payload.get("to_ts", 0)))
            return mark_to_obj(mark)

        with self._mutate:
            if patch.op == "attach_image":
                self._check_attachment(patch)
            new_spec = apply_settings_patch(self._spec, patch)
            if patch.op == "attach_image":
                media_type, data = patch.payload
                self._attachments[patch.target] = (media_type, bytes(data))
            self._spec = new_spec
        for listener in self._listeners:
            listener(new_spec)
        return {"revision": new_spec.revision}

    def _check_attachment(self, patch: ControlPatch) -> None:
        payload = patch.payload
        if (isinstance(payload, tuple) and len(payload) == 2
                and isinstance(payload[1], (bytes, bytearray))
                and len(payload[1]) > MAX_ATTACHMENT_BYTES):
            raise IllegalPatchError(
                f"attachment of {len(payload[1])} bytes exceeds {MAX_ATTACHMENT_BYTES}")

    def get_attachment(self, widget_id: str) -> tuple[str, bytes] | None:
        return self._attachments.get(widget_id)

    # -- devices ---------------------------------------------------------------

    def set_device_parameter(self, param_id: str, value: float,
                             auth: str | None = None) -> DeviceParam:
        ack = self.devices.set(param_id, value, setter=auth)
        # Echo into the cache so displays see the new value next tick.
        self.cache.put_sample(SensorSample(param_id, ack.last_set_ts or self._clock_ms(),
                                           ack.value))
        return ack

    # -- recordings ---------------------------------------------------------

    def mark_recording(self, stream_id: str, from_ts: int, to_ts: int) -> RecordingMark:
        if from_ts >= to_ts:
            raise EmptyRangeError(f"from_ts {from_ts} must precede to_ts {to_ts}")
        worker = self.streams.get(stream_id)
        if worker is None:
            raise UnknownStreamError(stream_id)
        mark = RecordingMark(mark_id=next(self._mark_ids), stream_id=stream_id,
                             from_ts=from_ts, to_ts=to_ts, created_ts=self._clock_ms())
        self._evaluate_mark(mark, worker)
        self._marks.append(mark)
        return mark

    def _evaluate_mark(self, mark: RecordingMark, worker: StreamWorker) -> None:
        retained = worker.retained_range_ms()
        if retained is None:
            return  # nothing produced yet; stays pending
        oldest_ms, newest_ms = retained
        if mark.to_ts <= oldest_ms:
            mark.status = "expired"
            return
        frames = worker.frames_between(mark.from_ts, mark.to_ts)
        if not frames:
            if mark.from_ts <= newest_ms:
                # Overlaps the past but no frame fell inside; unrecoverable.
                mark.status = "expired"
            return  # range is ahead of the stream; stays pending
        self.recordings_dir.mkdir(parents=True, exist_ok=True)
        path = self.recordings_dir / f"{mark.stream_id}_{mark.from_ts}_{mark.to_ts}.bfs"
        with path.open("wb") as fh:
            fh.write(struct.pack(">I", len(frames)))
            for _encoded, raw in frames:
                fh.write(raw)
        mark.status = "captured"
        mark.path = str(path)
        mark.frame_count = len(frames)

    def recordings(self) -> list[RecordingMark]:
        """Marks with pending entries lazily re-evaluated against retention."""
        for mark in self._marks:
            if mark.status == "pending":
                worker = self.streams.get(mark.stream_id)
                if worker is not None:
                    self._evaluate_mark(mark, worker)
        return list(self._marks)


def mark_to_obj(mark: RecordingMark) -> dict:
    return {
        "mark_id": mark.mark_id,
        "stream_id": mark.stream_id,
        "from_ts": mark.from_ts,
        "to_ts": mark.to_ts,
        "created_ts": mark.created_ts,
        "status": mark.status,
        "path": mark.path,
        "frame_count": mark.frame_count,
    }
