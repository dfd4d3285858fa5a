"""Video pipeline: pattern source, frame codec, segments, transports, probes."""

from .pattern import Frame, PatternParams, centroid, disc_center, generate_test_frame
from .codec import EncodedFrame, HEADER_LEN, decode_frame, encode_frame, parse_header
from .segments import (
    Playlist,
    Segment,
    build_segment,
    parse_manifest,
    playlist_add,
    render_manifest,
    split_blob,
)
from .ring import FrameRing, RingReader
from .source import SignalBroker, StreamConfig, StreamWorker
from .probes import (
    LatencyReport,
    ProbeRun,
    measure_startup_delay,
    measure_transmission_latency,
    run_probe,
)

__all__ = [
    "Frame",
    "PatternParams",
    "centroid",
    "disc_center",
    "generate_test_frame",
    "EncodedFrame",
    "HEADER_LEN",
    "decode_frame",
    "encode_frame",
    "parse_header",
    "Playlist",
    "Segment",
    "build_segment",
    "parse_manifest",
    "playlist_add",
    "render_manifest",
    "split_blob",
    "FrameRing",
    "RingReader",
    "SignalBroker",
    "StreamConfig",
    "StreamWorker",
    "LatencyReport",
    "ProbeRun",
    "measure_startup_delay",
    "measure_transmission_latency",
    "run_probe",
]
