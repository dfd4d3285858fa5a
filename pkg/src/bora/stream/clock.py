"""Process-wide stream clock: UTC-anchored at import, monotonic afterwards.

Sources stamp frames and probes stamp decodes with the same clock, so
in-process latency math is skew-free by construction.
"""

import time

_BASE_WALL_US = time.time_ns() // 1_000
_BASE_MONO_NS = time.monotonic_ns()


def now_us() -> int:
    return _BASE_WALL_US + (time.monotonic_ns() - _BASE_MONO_NS) // 1_000


def now_ms() -> int:
    return now_us() // 1_000
