"""Sample and source-configuration types shared by every protocol parser."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import FormatError

PROTOCOLS = ("http_poll", "push_channel", "simulated")
WAVEFORMS = ("sine", "ramp", "random_walk")


@dataclass(frozen=True, slots=True, order=True)
class SensorSample:
    sensor_id: str
    timestamp: int  # UTC milliseconds since epoch
    value: float

    def __post_init__(self):
        if not self.sensor_id:
            raise FormatError("empty sensor id")
        if not isinstance(self.timestamp, int) or self.timestamp <= 0:
            raise FormatError(f"non-positive timestamp {self.timestamp!r}")
        if not math.isfinite(self.value):
            raise FormatError(f"non-finite value {self.value!r} for {self.sensor_id}")


@dataclass(frozen=True, slots=True)
class SimProfile:
    """Deterministic waveform: same seed + same sample times => same values."""

    waveform: str = "sine"
    period_ms: int = 10_000
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"unknown waveform {self.waveform!r}")
        if self.period_ms <= 0:
            raise ValueError("period_ms must be > 0")


@dataclass(frozen=True, slots=True)
class SourceConfig:
    name: str
    protocol: str
    endpoint: str | None = None
    sensors: tuple[str, ...] = field(default_factory=tuple)
    poll_interval_ms: int | None = None
    sim: SimProfile | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.protocol == "http_poll" and not self.endpoint:
            raise ValueError(f"source {self.name}: http_poll requires an endpoint")
        if self.protocol == "simulated" and self.sim is None:
            raise ValueError(f"source {self.name}: simulated requires a sim profile")
        object.__setattr__(self, "sensors", tuple(self.sensors))
