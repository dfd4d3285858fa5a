"""Dashboard spec parsing, validation, patching, serialization, export."""

import json

import pytest
from hypothesis import given, strategies as st

from bora.config import (
    ControlPatch,
    DashboardSpec,
    SensorBinding,
    StreamBinding,
    WidgetSpec,
    apply_settings_patch,
    export_frontend_bundle,
    parse_dashboard_spec,
    serialize_dashboard_spec,
    spec_to_obj,
    validate_dashboard,
)
from bora.errors import (
    IllegalPatchError,
    SpecSyntaxError,
    UnknownWidgetError,
    ValidationError,
)

MINIMAL = json.dumps({
    "name": "demo",
    "widgets": [{"id": "w1", "kind": "label", "x": 0, "y": 0,
                 "width": 100, "height": 20, "label": "hello"}],
})

CONTAINERS = json.dumps({
    "name": "jupyter-demo",
    "poll_interval_ms": 2000,
    "widgets": [
        {"id": "container_1", "kind": "timeseries", "x": 10, "y": 10,
         "width": 300, "height": 120,
         "binding": {"sensors": ["s.temp1", "s.temp2"]}},
        {"id": "container_2", "kind": "image", "x": 10, "y": 150,
         "width": 300, "height": 200},
        {"id": "container_3", "kind": "video", "x": 330, "y": 10,
         "width": 320, "height": 240,
         "binding": {"stream_url": "/stream/cam0", "transport": "push"}},
    ],
})


class TestParse:
    def test_minimal_label_widget(self):
        spec = parse_dashboard_spec(MINIMAL)
        assert len(spec.widgets) == 1
        assert spec.revision == 0
        assert spec.widgets[0].kind == "label"
        assert spec.poll_interval_ms == 2000  # default

    def test_two_sensor_binding(self):
        spec = parse_dashboard_spec(CONTAINERS)
        assert spec.poll_interval_ms == 2000
        w = spec.widget("container_1")
        assert isinstance(w.binding, SensorBinding)
        assert w.binding.sensor_ids == ("s.temp1", "s.temp2")

    def test_duplicate_widget_id(self):
        doc = json.dumps({"name": "d", "widgets": [
            {"id": "w1", "kind": "label", "x": 0, "y": 0, "width": 10, "height": 10},
            {"id": "w1", "kind": "label", "x": 5, "y": 5, "width": 10, "height": 10},
        ]})
        with pytest.raises(ValidationError, match="duplicate widget id: w1"):
            parse_dashboard_spec(doc)

    def test_malformed_json_reports_position(self):
        with pytest.raises(SpecSyntaxError) as err:
            parse_dashboard_spec('{"name": "x", }')
        assert err.value.line == 1
        assert err.value.column is not None

    def test_parse_accepts_implies_validate_empty(self):
        for doc in (MINIMAL, CONTAINERS):
            assert validate_dashboard(parse_dashboard_spec(doc)) == []

    def test_interval_below_floor_rejected(self):
        doc = json.dumps({"name": "d", "poll_interval_ms": 50, "widgets": []})
        with pytest.raises(ValidationError, match="below floor"):
            parse_dashboard_spec(doc)

    def test_bool_is_not_an_integer(self):
        doc = json.dumps({"name": "d", "widgets": [
            {"id": "w", "kind": "label", "x": True, "y": 0, "width": 1, "height": 1}]})
        with pytest.raises(ValidationError):
            parse_dashboard_spec(doc)


def _widget(kind, binding, wid="w"):
    return WidgetSpec(id=wid, kind=kind, x=0, y=0, width=10, height=10, binding=binding)


class TestValidate:
    def test_valid_spec_no_violations(self):
        assert validate_dashboard(parse_dashboard_spec(CONTAINERS)) == []

    def test_zero_width(self):
        spec = DashboardSpec(name="d", widgets=(
            WidgetSpec(id="w1", kind="label", x=0, y=0, width=0, height=10),))
        violations = validate_dashboard(spec)
        assert violations == ["nonpositive width on widget w1"]

    # Every (kind, binding) cell of the compatibility matrix. Legal cells
    # produce no violations; each illegal cell must be reported.
    SENSOR = SensorBinding(("s1",))
    STREAM = StreamBinding("/stream/cam0", "push")

    @pytest.mark.parametrize("kind,binding,legal", [
        ("value", SENSOR, True), ("value", STREAM, False), ("value", None, False),
        ("timeseries", SENSOR, True), ("timeseries", STREAM, False), ("timeseries", None, True),
        ("input", SENSOR, True), ("input", STREAM, False), ("input", None, False),
        ("image", SENSOR, False), ("image", STREAM, False), ("image", None, True),
        ("video", SENSOR, False), ("video", STREAM, True), ("video", None, False),
        ("label", SENSOR, False), ("label", STREAM, False), ("label", None, True),
    ])
    def test_kind_binding_matrix(self, kind, binding, legal):
        spec = DashboardSpec(name="d", widgets=(_widget(kind, binding),))
        violations = validate_dashboard(spec)
        assert (violations == []) == legal, violations

    def test_all_violations_reported_not_only_first(self):
        spec = DashboardSpec(name="d", widgets=(
            WidgetSpec(id="a", kind="input", x=0, y=0, width=0, height=10),
            WidgetSpec(id="b", kind="video", x=0, y=0, width=10, height=10),
        ), poll_interval_ms=10)
        violations = validate_dashboard(spec)
        assert len(violations) == 4  # width, missing sensor binding, missing stream, interval


class TestPatch:
    def test_set_poll_interval(self):
        spec = parse_dashboard_spec(MINIMAL)
        spec = DashboardSpec(name=spec.name, widgets=spec.widgets, poll_interval_ms=5000)
        out = apply_settings_patch(spec, ControlPatch(op="set_poll_interval", payload=2000))
        assert out.poll_interval_ms == 2000
        assert out.revision == spec.revision + 1
        assert spec.poll_interval_ms == 5000  # original untouched

    def test_bind_then_attach_video_two_revisions(self):
        spec = parse_dashboard_spec(CONTAINERS)
        spec2 = apply_settings_patch(spec, ControlPatch(
            op="bind_sensors", target="container_1", payload=["s.a", "s.b", "s.c"]))
        spec3 = apply_settings_patch(spec2, ControlPatch(
            op="attach_video", target="container_3",
            payload={"stream_url": "/stream/cam1", "transport": "direct"}))
        assert spec3.revision == spec.revision + 2
        assert spec3.widget("container_1").binding.sensor_ids == ("s.a", "s.b", "s.c")
        assert spec3.widget("container_3").binding.stream_url == "/stream/cam1"

    def test_unknown_widget_leaves_spec_unchanged(self):
        spec = parse_dashboard_spec(CONTAINERS)
        with pytest.raises(UnknownWidgetError, match="nope"):
            apply_settings_patch(spec, ControlPatch(op="bind_sensors", target="nope",
                                                    payload=["s1"]))
        assert spec == parse_dashboard_spec(CONTAINERS)

    def test_bind_sensors_to_video_widget_is_illegal(self):
        spec = parse_dashboard_spec(CONTAINERS)
        with pytest.raises(IllegalPatchError):
            apply_settings_patch(spec, ControlPatch(op="bind_sensors", target="container_3",
                                                    payload=["s1"]))

    def test_attach_empty_image_is_illegal(self):
        spec = parse_dashboard_spec(CONTAINERS)
        with pytest.raises(IllegalPatchError):
            apply_settings_patch(spec, ControlPatch(op="attach_image", target="container_2",
                                                    payload=("image/png", b"")))

    def test_attach_image_bumps_revision_only(self):
        spec = parse_dashboard_spec(CONTAINERS)
        out = apply_settings_patch(spec, ControlPatch(op="attach_image", target="container_2",
                                                      payload=("image/png", b"\x89PNG")))
        assert out.revision == spec.revision + 1
        assert out.widgets == spec.widgets

    def test_move_widget(self):
        spec = parse_dashboard_spec(CONTAINERS)
        out = apply_settings_patch(spec, ControlPatch(op="move_widget", target="container_2",
                                                      payload={"x": 300, "y": 50}))
        assert (out.widget("container_2").x, out.widget("container_2").y) == (300, 50)

    def test_interval_below_floor_fails_validation(self):
        spec = parse_dashboard_spec(MINIMAL)
        with pytest.raises(ValidationError):
            apply_settings_patch(spec, ControlPatch(op="set_poll_interval", payload=10))

    def test_device_op_is_not_a_settings_patch(self):
        spec = parse_dashboard_spec(MINIMAL)
        with pytest.raises(IllegalPatchError):
            apply_settings_patch(spec, ControlPatch(op="set_device_param",
                                                    payload={"param_id": "p", "value": 1.0}))


# -- round-trip ----------------------------------------------------------------

def _widget_strategy():
    sensor_binding = st.lists(
        st.text(alphabet="abcdefgh.", min_size=1, max_size=8), min_size=1, max_size=4,
        unique=True).map(lambda ids: SensorBinding(tuple(ids)))
    stream_binding = st.tuples(
        st.text(alphabet="abc/:", min_size=1, max_size=12),
        st.sampled_from(["segmented", "push", "direct"])
    ).map(lambda t: StreamBinding(*t))

    def build(wid, kind, x, y, w, h, sb, vb, label, fmt):
        binding = None
        if kind in ("value", "input"):
            binding = sb
        elif kind == "timeseries":
            binding = sb if w % 2 else None
        elif kind == "video":
            binding = vb
        return WidgetSpec(id=wid, kind=kind, x=x, y=y, width=w, height=h,
                          binding=binding, label=label, format=fmt)

    return st.builds(
        build,
        wid=st.uuids().map(str),
        kind=st.sampled_from(["value", "timeseries", "input", "image", "video", "label"]),
        x=st.integers(0, 4000), y=st.integers(0, 4000),
        w=st.integers(1, 2000), h=st.integers(1, 2000),
        sb=sensor_binding, vb=stream_binding,
        label=st.none() | st.text(max_size=20),
        fmt=st.none() | st.sampled_from(["%.2f", "%d V", "%.1f degC"]),
    )


@st.composite
def _spec_strategy(draw):
    widgets = draw(st.lists(_widget_strategy(), max_size=6,
                            unique_by=lambda w: w.id))
    return DashboardSpec(
        name=draw(st.text(max_size=16)),
        widgets=tuple(widgets),
        background_image=draw(st.none() | st.just("bg.png")),
        poll_interval_ms=draw(st.integers(100, 60_000)),
        revision=draw(st.integers(0, 1000)),
    )


@given(_spec_strategy())
def test_parse_serialize_roundtrip(spec):
    assert validate_dashboard(spec) == []
    assert parse_dashboard_spec(serialize_dashboard_spec(spec)) == spec


@given(_spec_strategy())
def test_serialization_is_canonical(spec):
    text = serialize_dashboard_spec(spec)
    assert text == serialize_dashboard_spec(parse_dashboard_spec(text))
    obj = json.loads(text)
    assert list(obj) == sorted(obj)


def test_spec_to_obj_omits_absent_fields():
    spec = parse_dashboard_spec(MINIMAL)
    obj = spec_to_obj(spec)
    assert "background_image" not in obj
    assert "binding" not in obj["widgets"][0]


# -- export ---------------------------------------------------------------------

class TestExport:
    def test_export_with_background(self, tmp_path):
        bg = tmp_path / "bg.png"
        bg.write_bytes(b"\x89PNG fake")
        spec = DashboardSpec(name="d", background_image="bg.png")
        manifest = export_frontend_bundle(spec, tmp_path / "out", asset_dir=tmp_path)
        assert len(manifest) == 2
        assert {e["path"] for e in manifest} == {"dashboard.json", "bg.png"}

    def test_export_without_background(self, tmp_path):
        manifest = export_frontend_bundle(DashboardSpec(name="d"), tmp_path / "out")
        assert len(manifest) == 1
        assert manifest[0]["path"] == "dashboard.json"

    def test_reexport_is_deterministic(self, tmp_path):
        bg = tmp_path / "bg.png"
        bg.write_bytes(b"\x89PNG fake")
        spec = parse_dashboard_spec(CONTAINERS)
        spec = DashboardSpec(name=spec.name, widgets=spec.widgets,
                             background_image="bg.png",
                             poll_interval_ms=spec.poll_interval_ms)
        first = export_frontend_bundle(spec, tmp_path / "a", asset_dir=tmp_path)
        second = export_frontend_bundle(spec, tmp_path / "b", asset_dir=tmp_path)
        assert first == second

    def test_export_missing_background_raises_oserror(self, tmp_path):
        spec = DashboardSpec(name="d", background_image="missing.png")
        with pytest.raises(OSError):
            export_frontend_bundle(spec, tmp_path / "out", asset_dir=tmp_path)
