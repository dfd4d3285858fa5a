"""Pluggable protocol ingestion: normalize diverse sources into SensorSamples."""

from .types import SensorSample, SimProfile, SourceConfig
from .registry import ParserRegistry, RegistrationHandle, default_registry, register_parser
from .http_poll import parse_csv_rows, poll_http_source, serialize_csv_rows
from .push import encode_push_message, ingest_push_message
from .simulate import SimulatedSource, run_simulated_source, waveform_value

__all__ = [
    "SensorSample",
    "SimProfile",
    "SourceConfig",
    "ParserRegistry",
    "RegistrationHandle",
    "default_registry",
    "register_parser",
    "parse_csv_rows",
    "poll_http_source",
    "serialize_csv_rows",
    "encode_push_message",
    "ingest_push_message",
    "SimulatedSource",
    "run_simulated_source",
    "waveform_value",
]
