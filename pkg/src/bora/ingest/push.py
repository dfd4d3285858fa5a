"""Push-channel wire format.

One message = b"PUSH1" magic, record count (u16 BE), then per record:
id length (u8), id bytes (utf-8), timestamp_ms (u64 BE), value (f64 BE).
"""

from __future__ import annotations

import logging
import math
import struct
from typing import Iterable

from ..errors import FormatError
from .types import SensorSample, SourceConfig

log = logging.getLogger(__name__)

MAGIC = b"PUSH1"


def encode_push_message(samples: Iterable[SensorSample]) -> bytes:
    samples = list(samples)
    if len(samples) > 0xFFFF:
        raise ValueError("push message carries at most 65535 records")
    out = bytearray(MAGIC)
    out += struct.pack(">H", len(samples))
    for s in samples:
        ident = s.sensor_id.encode("utf-8")
        if len(ident) > 0xFF:
            raise ValueError(f"sensor id too long: {s.sensor_id!r}")
        out += struct.pack(">B", len(ident))
        out += ident
        out += struct.pack(">Qd", s.timestamp, s.value)
    return bytes(out)


def ingest_push_message(raw: bytes, channel_cfg: SourceConfig | None = None) -> list[SensorSample]:
    """Decode one push message into normalized samples.

    When the channel config lists sensors, records for other sensors are
    dropped with a warning (same partial-data rule as polling).
    """
    if len(raw) < len(MAGIC) + 2:
        raise FormatError("truncated push message header")
    if raw[: len(MAGIC)] != MAGIC:
        raise FormatError(f"bad magic {raw[:len(MAGIC)]!r}")
    (count,) = struct.unpack_from(">H", raw, len(MAGIC))
    offset = len(MAGIC) + 2
    samples = []
    for index in range(count):
        if offset + 1 > len(raw):
            raise FormatError(f"truncated record {index}")
        id_len = raw[offset]
        offset += 1
        if id_len == 0:
            raise FormatError(f"record {index}: empty sensor id")
        if offset + id_len + 16 > len(raw):
            raise FormatError(f"truncated record {index}")
        try:
            sensor_id = raw[offset:offset + id_len].decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"record {index}: sensor id is not utf-8") from None
        offset += id_len
        timestamp, value = struct.unpack_from(">Qd", raw, offset)
        offset += 16
        if not math.isfinite(value):
            raise FormatError(f"record {index}: non-finite value")
        if timestamp <= 0:
            raise FormatError(f"record {index}: non-positive timestamp")
        samples.append(SensorSample(sensor_id, timestamp, value))
    if offset != len(raw):
        raise FormatError(f"{len(raw) - offset} trailing bytes after last record")

    if channel_cfg is not None and channel_cfg.sensors:
        allowed = set(channel_cfg.sensors)
        kept = [s for s in samples if s.sensor_id in allowed]
        if len(kept) != len(samples):
            dropped = {s.sensor_id for s in samples if s.sensor_id not in allowed}
            log.warning("channel %s: dropped records for unconfigured sensors %s",
                        channel_cfg.name, ",".join(sorted(dropped)))
        samples = kept
    samples.sort(key=lambda s: (s.sensor_id, s.timestamp))
    return samples
