"""Protocol parsers: registry, CSV polling, push wire format, simulation."""

import math
import threading
import time

import pytest
from hypothesis import given, strategies as st

from bora.errors import (
    DuplicateProtocolError,
    FormatError,
    TransportError,
    UnknownProtocolError,
)
from bora.ingest import (
    ParserRegistry,
    SensorSample,
    SimProfile,
    SimulatedSource,
    SourceConfig,
    encode_push_message,
    ingest_push_message,
    parse_csv_rows,
    poll_http_source,
    run_simulated_source,
    serialize_csv_rows,
)
from bora.ingest.fixture import FixtureDataServer


class TestRegistry:
    def test_register_then_resolve(self):
        reg = ParserRegistry()
        parser = object()
        reg.register("http_poll", parser)
        assert reg.resolve("http_poll") is parser

    def test_duplicate_registration(self):
        reg = ParserRegistry()
        reg.register("http_poll", object())
        with pytest.raises(DuplicateProtocolError):
            reg.register("http_poll", object())

    def test_unknown_protocol(self):
        reg = ParserRegistry()
        with pytest.raises(UnknownProtocolError):
            reg.resolve("epics")

    def test_unregister_frees_the_name(self):
        reg = ParserRegistry()
        handle = reg.register("custom", object())
        handle.unregister()
        reg.register("custom", object())  # no DuplicateProtocolError


class TestCsv:
    def test_parse_preserves_row_order(self):
        # Sorting by (sensor, timestamp) is the poller's normalization step.
        text = "b,200,2.0\na,300,3.5\na,100,1.0\n"
        samples = parse_csv_rows(text)
        assert [(s.sensor_id, s.timestamp) for s in samples] == [
            ("b", 200), ("a", 300), ("a", 100)]

    def test_bad_value_reports_row(self):
        with pytest.raises(FormatError, match="row 1"):
            parse_csv_rows("abc,notanumber\n")

    def test_bad_row_number_is_precise(self):
        with pytest.raises(FormatError, match="row 2"):
            parse_csv_rows("a,100,1.0\na,100,oops\n")

    def test_nan_and_inf_rejected(self):
        for bad in ("nan", "inf", "-inf"):
            with pytest.raises(FormatError):
                parse_csv_rows(f"a,100,{bad}\n")

    def test_roundtrip_preserves_value_bits(self):
        samples = [SensorSample("a", 1, 0.1 + 0.2), SensorSample("b", 2, -1e-300)]
        assert parse_csv_rows(serialize_csv_rows(samples)) == samples

    @given(st.text(alphabet="abc,0123456789.\n-", max_size=60))
    def test_fuzz_never_yields_invalid_samples(self, text):
        try:
            samples = parse_csv_rows(text)
        except FormatError:
            return
        for s in samples:
            assert math.isfinite(s.value)
            assert s.timestamp > 0


class TestPoll:
    def test_poll_fixture_server(self):
        now = time.time_ns() // 1_000_000
        canned = [
            SensorSample("s.temp1", now - 2000, 1.5),
            SensorSample("s.temp2", now - 1000, 2.5),
            SensorSample("s.temp1", now - 500, 1.6),
        ]
        with FixtureDataServer(samples=canned) as server:
            cfg = SourceConfig(name="fx", protocol="http_poll", endpoint=server.url,
                               sensors=("s.temp1", "s.temp2"))
            samples = poll_http_source(cfg, window_s=600)
        assert len(samples) == 3
        assert samples == sorted(samples, key=lambda s: (s.sensor_id, s.timestamp))

    def test_window_filters_old_samples(self):
        now = time.time_ns() // 1_000_000
        canned = [SensorSample("s1", now - 3_600_000, 1.0),
                  SensorSample("s1", now - 1000, 2.0)]
        with FixtureDataServer(samples=canned) as server:
            cfg = SourceConfig(name="fx", protocol="http_poll", endpoint=server.url,
                               sensors=("s1",))
            samples = poll_http_source(cfg, window_s=60)
        assert [s.value for s in samples] == [2.0]

    def test_empty_sensor_list_issues_no_request(self):
        cfg = SourceConfig(name="fx", protocol="http_poll",
                           endpoint="http://127.0.0.1:1/never", sensors=())
        with pytest.raises(ValueError, match="no sensors"):
            poll_http_source(cfg, window_s=600)

    def test_missing_sensor_warns_but_succeeds(self, caplog):
        now = time.time_ns() // 1_000_000
        with FixtureDataServer(samples=[SensorSample("s1", now, 1.0)]) as server:
            cfg = SourceConfig(name="fx", protocol="http_poll", endpoint=server.url,
                               sensors=("s1", "s.gone"))
            with caplog.at_level("WARNING"):
                samples = poll_http_source(cfg, window_s=600)
        assert len(samples) == 1
        assert any("s.gone" in r.message for r in caplog.records)

    def test_unreachable_endpoint_is_transport_error(self):
        cfg = SourceConfig(name="fx", protocol="http_poll",
                           endpoint="http://127.0.0.1:1/nope", sensors=("s1",))
        with pytest.raises(TransportError):
            poll_http_source(cfg, window_s=10, timeout_s=0.5)


def _samples(*rows):
    return [SensorSample(*row) for row in rows]


class TestPush:
    def test_single_record_roundtrip(self):
        message = encode_push_message(_samples(("s1", 1_700_000_000_000, 1.5)))
        samples = ingest_push_message(message)
        assert samples == _samples(("s1", 1_700_000_000_000, 1.5))

    def test_zero_record_message(self):
        assert ingest_push_message(encode_push_message([])) == []

    def test_truncated_message(self):
        message = encode_push_message(_samples(("s1", 100, 1.5)))
        with pytest.raises(FormatError):
            ingest_push_message(message[:-1])

    def test_bad_magic(self):
        with pytest.raises(FormatError, match="magic"):
            ingest_push_message(b"NOPE!" + b"\x00\x00")

    def test_trailing_bytes_rejected(self):
        message = encode_push_message(_samples(("s1", 100, 1.5)))
        with pytest.raises(FormatError, match="trailing"):
            ingest_push_message(message + b"\x00")

    def test_channel_filter_drops_unknown_sensors(self, caplog):
        cfg = SourceConfig(name="ch", protocol="push_channel", endpoint="ch0",
                           sensors=("s1",))
        message = encode_push_message(_samples(("s1", 100, 1.0), ("s2", 100, 2.0)))
        with caplog.at_level("WARNING"):
            samples = ingest_push_message(message, cfg)
        assert [s.sensor_id for s in samples] == ["s1"]

    @given(st.lists(st.tuples(
        st.text(alphabet="abcxyz.", min_size=1, max_size=10),
        st.integers(1, 2**48),
        st.floats(allow_nan=False, allow_infinity=False, width=64),
    ), max_size=20))
    def test_roundtrip_property(self, rows):
        samples = [SensorSample(*row) for row in rows]
        decoded = ingest_push_message(encode_push_message(samples))
        assert decoded == sorted(samples, key=lambda s: (s.sensor_id, s.timestamp))

    @given(st.binary(max_size=80))
    def test_fuzz_no_invalid_sample_escapes(self, raw):
        try:
            samples = ingest_push_message(raw)
        except FormatError:
            return
        for s in samples:
            assert math.isfinite(s.value) and s.timestamp > 0


class TestSimulated:
    def test_sine_phase_zero(self):
        profile = SimProfile(waveform="sine", period_ms=1000, amplitude=1.0, seed=7)
        src = SimulatedSource(profile, ["s1"], tick_ms=100, sink=lambda s: None)
        first = src.ticks(1)
        assert first[0].value == 0.0  # sin(0)

    def test_same_seed_same_stream(self):
        profile = SimProfile(waveform="random_walk", period_ms=1000, amplitude=0.5, seed=42)
        a = SimulatedSource(profile, ["s1", "s2"], 50, lambda s: None).ticks(20)
        b = SimulatedSource(profile, ["s1", "s2"], 50, lambda s: None).ticks(20)
        assert [s.value for s in a] == [s.value for s in b]

    def test_different_seed_differs(self):
        base = dict(waveform="random_walk", period_ms=1000, amplitude=0.5)
        a = SimulatedSource(SimProfile(seed=1, **base), ["s1"], 50, lambda s: None).ticks(10)
        b = SimulatedSource(SimProfile(seed=2, **base), ["s1"], 50, lambda s: None).ticks(10)
        assert [s.value for s in a] != [s.value for s in b]

    def test_stop_halts_deliveries(self):
        received = []
        lock = threading.Lock()

        def sink(sample):
            with lock:
                received.append(sample)

        profile = SimProfile(waveform="sine", period_ms=1000)
        source = run_simulated_source(profile, ["s1"], tick_ms=20, sink=sink)
        time.sleep(0.12)
        source.stop()
        with lock:
            count_at_stop = len(received)
        assert count_at_stop > 0
        time.sleep(0.06)  # two ticks
        with lock:
            assert len(received) == count_at_stop

    def test_tick_floor(self):
        with pytest.raises(ValueError):
            SimulatedSource(SimProfile(), ["s1"], tick_ms=5, sink=lambda s: None)

    def test_one_sample_per_sensor_per_tick(self):
        profile = SimProfile(waveform="ramp", period_ms=400)
        samples = SimulatedSource(profile, ["a", "b", "c"], 100, lambda s: None).ticks(4)
        assert len(samples) == 12
