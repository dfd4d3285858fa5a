"""Dashboard specification: domain types, parsing, validation, runtime patches.

A dashboard is one page: a background image plus absolutely positioned
widgets, each bound to sensors or a video stream. Specs are immutable
values; every accepted mutation produces a new spec with revision + 1.
The reference encoding is canonical JSON (sorted keys, no insignificant
whitespace), so re-serializing an unchanged spec is byte-stable.
"""

from __future__ import annotations

import hashlib
import json
import math
import shutil
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from .errors import (
    IllegalPatchError,
    SpecSyntaxError,
    UnknownWidgetError,
    ValidationError,
)

WIDGET_KINDS = ("value", "timeseries", "input", "image", "video", "label")
STREAM_TRANSPORTS = ("segmented", "push", "direct")

# Floor on the poll interval: the runtime mutation API would otherwise let a
# client configure a self-DoS.
MIN_POLL_INTERVAL_MS = 100
DEFAULT_POLL_INTERVAL_MS = 2000

PATCH_OPS = (
    "set_poll_interval",
    "bind_sensors",
    "attach_image",
    "attach_video",
    "move_widget",
    "set_device_param",
    "mark_recording",
)
# Ops that mutate the dashboard spec itself (and therefore bump revision).
SPEC_AFFECTING_OPS = frozenset(
    {"set_poll_interval", "bind_sensors", "attach_image", "attach_video", "move_widget"}
)

# Widget kinds that may carry a sensor binding / a stream binding.
SENSOR_BOUND_KINDS = frozenset({"value", "timeseries", "input"})
STREAM_BOUND_KINDS = frozenset({"video"})


@dataclass(frozen=True, slots=True)
class SensorBinding:
    sensor_ids: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class StreamBinding:
    stream_url: str
    transport: str = "push"


@dataclass(frozen=True, slots=True)
class WidgetSpec:
    id: str
    kind: str
    x: int
    y: int
    width: int
    height: int
    binding: SensorBinding | StreamBinding | None = None
    label: str | None = None
    format: str | None = None


@dataclass(frozen=True, slots=True)
class DashboardSpec:
    name: str
    widgets: tuple[WidgetSpec, ...] = ()
    background_image: str | None = None
    poll_interval_ms: int = DEFAULT_POLL_INTERVAL_MS
    revision: int = 0

    def widget(self, widget_id: str) -> WidgetSpec:
        for w in self.widgets:
            if w.id == widget_id:
                return w
        raise UnknownWidgetError(widget_id)

    def has_widget(self, widget_id: str) -> bool:
        return any(w.id == widget_id for w in self.widgets)


@dataclass(frozen=True, slots=True)
class ControlPatch:
    """One runtime mutation: spec edits, device set-points, recording marks.

    ``payload`` is op-specific:
      set_poll_interval -> int milliseconds
      bind_sensors      -> list of sensor ids
      attach_image      -> (media_type, bytes)
      attach_video      -> StreamBinding
      move_widget       -> {"x": int, "y": int[, "width", "height"]}
      set_device_param  -> {"param_id": str, "value": float}
      mark_recording    -> {"stream_id": str, "from_ts": int, "to_ts": int}
    """

    op: str
    target: str | None = None
    payload: Any = None

    @property
    def affects_spec(self) -> bool:
        return self.op in SPEC_AFFECTING_OPS


# -- parsing ------------------------------------------------------------------

def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def _as_int(value: Any, what: str) -> int:
    # bool is an int subclass; reject it explicitly.
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{what} must be an integer, got {value!r}")
    return value


def _parse_binding(raw: Any, widget_id: str) -> SensorBinding | StreamBinding:
    if not isinstance(raw, dict):
        raise ValidationError(f"widget {widget_id}: binding must be an object")
    if "sensors" in raw:
        sensors = raw["sensors"]
        _require(isinstance(sensors, list) and all(isinstance(s, str) for s in sensors),
                 f"widget {widget_id}: sensors must be a list of strings")
        return SensorBinding(tuple(sensors))
    if "stream_url" in raw:
        url = raw["stream_url"]
        _require(isinstance(url, str), f"widget {widget_id}: stream_url must be a string")
        transport = raw.get("transport", "push")
        _require(isinstance(transport, str),
                 f"widget {widget_id}: transport must be a string")
        return StreamBinding(url, transport)
    raise ValidationError(
        f"widget {widget_id}: binding needs either 'sensors' or 'stream_url'")


def _parse_widget(raw: Any, index: int) -> WidgetSpec:
    if not isinstance(raw, dict):
        raise ValidationError(f"widgets[{index}] must be an object")
    wid = raw.get("id")
    _require(isinstance(wid, str) and wid != "", f"widgets[{index}]: id must be a nonempty string")
    kind = raw.get("kind")
    _require(isinstance(kind, str), f"widget {wid}: kind must be a string")
    geometry = {}
    for field in ("x", "y", "width", "height"):
        _require(field in raw, f"widget {wid}: missing {field}")
        geometry[field] = _as_int(raw[field], f"widget {wid}: {field}")
    binding = _parse_binding(raw["binding"], wid) if raw.get("binding") is not None else None
    label = raw.get("label")
    _require(label is None or isinstance(label, str), f"widget {wid}: label must be a string")
    fmt = raw.get("format")
    _require(fmt is None or isinstance(fmt, str), f"widget {wid}: format must be a string")
    return WidgetSpec(id=wid, kind=kind, binding=binding, label=label, format=fmt, **geometry)


def parse_dashboard_spec(text: str) -> DashboardSpec:
    """Parse and validate a dashboard document.

    Raises SpecSyntaxError for malformed JSON (with line/column) and
    ValidationError naming the offending widget for invariant violations.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(raw, dict):
        raise ValidationError("top-level document must be an object")
    name = raw.get("name")
    _require(isinstance(name, str), "name must be a string")
    background = raw.get("background_image")
    _require(background is None or isinstance(background, str),
             "background_image must be a string")
    interval = raw.get("poll_interval_ms", DEFAULT_POLL_INTERVAL_MS)
    interval = _as_int(interval, "poll_interval_ms")
    widgets_raw = raw.get("widgets", [])
    _require(isinstance(widgets_raw, list), "widgets must be a list")
    widgets = tuple(_parse_widget(w, i) for i, w in enumerate(widgets_raw))
    revision = _as_int(raw.get("revision", 0), "revision")
    spec = DashboardSpec(
        name=name,
        widgets=widgets,
        background_image=background,
        poll_interval_ms=interval,
        revision=revision,
    )
    violations = validate_dashboard(spec)
    if violations:
        raise ValidationError(violations)
    return spec


# -- validation ---------------------------------------------------------------

def _validate_widget(w: WidgetSpec) -> list[str]:
    out = []
    if not w.id:
        out.append("widget has empty id")
        return out
    if w.kind not in WIDGET_KINDS:
        out.append(f"unknown kind {w.kind!r} on widget {w.id}")
        return out
    for field, value in (("x", w.x), ("y", w.y)):
        if not isinstance(value, int) or isinstance(value, bool) or value < 0 or not math.isfinite(value):
            out.append(f"negative or non-integer {field} on widget {w.id}")
    for field, value in (("width", w.width), ("height", w.height)):
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            out.append(f"nonpositive {field} on widget {w.id}")

    b = w.binding
    if isinstance(b, SensorBinding):
        if not b.sensor_ids:
            out.append(f"empty sensor binding on widget {w.id}")
        if len(set(b.sensor_ids)) != len(b.sensor_ids):
            out.append(f"duplicate sensor ids in binding on widget {w.id}")
        if any(not s for s in b.sensor_ids):
            out.append(f"empty sensor id in binding on widget {w.id}")
        if w.kind not in SENSOR_BOUND_KINDS:
            out.append(f"{w.kind} widget {w.id} cannot take a sensor binding")
    elif isinstance(b, StreamBinding):
        if not b.stream_url:
            out.append(f"empty stream_url on widget {w.id}")
        if b.transport not in STREAM_TRANSPORTS:
            out.append(f"unknown transport {b.transport!r} on widget {w.id}")
        if w.kind not in STREAM_BOUND_KINDS:
            out.append(f"{w.kind} widget {w.id} cannot take a stream binding")
    else:
        if w.kind in ("input", "value"):
            out.append(f"{w.kind} widget {w.id} requires a sensor binding")
        if w.kind == "video":
            out.append(f"video widget {w.id} requires a stream binding")
    return out


def validate_dashboard(spec: DashboardSpec) -> list[str]:
    """Return every invariant violation, not only the first. Empty = valid."""
    violations: list[str] = []
    seen: set[str] = set()
    for w in spec.widgets:
        if w.id in seen:
            violations.append(f"duplicate widget id: {w.id}")
        seen.add(w.id)
        violations.extend(_validate_widget(w))
    if spec.poll_interval_ms < MIN_POLL_INTERVAL_MS:
        violations.append(
            f"poll_interval_ms {spec.poll_interval_ms} below floor {MIN_POLL_INTERVAL_MS}")
    if spec.revision < 0:
        violations.append(f"negative revision {spec.revision}")
    return violations


# -- runtime patches ----------------------------------------------------------

def _patched_widget(spec: DashboardSpec, widget_id: Any) -> WidgetSpec:
    if not isinstance(widget_id, str) or not widget_id:
        raise IllegalPatchError("patch target must be a widget id")
    if not spec.has_widget(widget_id):
        raise UnknownWidgetError(widget_id)
    return spec.widget(widget_id)


def _replace_widget(spec: DashboardSpec, widget: WidgetSpec) -> DashboardSpec:
    widgets = tuple(widget if w.id == widget.id else w for w in spec.widgets)
    return replace(spec, widgets=widgets)


def apply_settings_patch(spec: DashboardSpec, patch: ControlPatch) -> DashboardSpec:
    """Apply one spec-affecting patch, returning a new spec with revision + 1.

    The input spec is never mutated. Raises UnknownWidgetError when the
    target does not exist, IllegalPatchError for op/kind mismatches, and
    ValidationError when the patched spec would violate an invariant.
    """
    if patch.op not in PATCH_OPS:
        raise IllegalPatchError(f"unknown op {patch.op!r}")
    if not patch.affects_spec:
        raise IllegalPatchError(f"op {patch.op!r} does not modify the dashboard spec")

    if patch.op == "set_poll_interval":
        interval = patch.payload
        if isinstance(interval, bool) or not isinstance(interval, int):
            raise IllegalPatchError("set_poll_interval payload must be an integer")
        out = replace(spec, poll_interval_ms=interval)

    elif patch.op == "bind_sensors":
        w = _patched_widget(spec, patch.target)
        sensors = patch.payload
        if not isinstance(sensors, (list, tuple)) or not all(isinstance(s, str) for s in sensors):
            raise IllegalPatchError("bind_sensors payload must be a list of sensor ids")
        if w.kind not in SENSOR_BOUND_KINDS:
            raise IllegalPatchError(f"cannot bind sensors to a {w.kind} widget")
        out = _replace_widget(spec, replace(w, binding=SensorBinding(tuple(sensors))))

    elif patch.op == "attach_video":
        w = _patched_widget(spec, patch.target)
        binding = patch.payload
        if isinstance(binding, dict):
            binding = StreamBinding(
                str(binding.get("stream_url", "")), str(binding.get("transport", "push")))
        if not isinstance(binding, StreamBinding):
            raise IllegalPatchError("attach_video payload must be a stream binding")
        if w.kind not in STREAM_BOUND_KINDS:
            raise IllegalPatchError(f"cannot attach video to a {w.kind} widget")
        out = _replace_widget(spec, replace(w, binding=binding))

    elif patch.op == "attach_image":
        w = _patched_widget(spec, patch.target)
        payload = patch.payload
        if not (isinstance(payload, tuple) and len(payload) == 2):
            raise IllegalPatchError("attach_image payload must be (media_type, bytes)")
        media_type, data = payload
        if not isinstance(media_type, str) or not media_type.startswith("image/"):
            raise IllegalPatchError(f"attach_image media type {media_type!r} is not an image type")
        if not isinstance(data, (bytes, bytearray)) or len(data) == 0:
            raise IllegalPatchError("attach_image payload is empty")
        if w.kind != "image":
            raise IllegalPatchError(f"cannot attach an image to a {w.kind} widget")
        # The bytes live in the control plane's attachment store; the spec
        # only records the mutation through its revision bump.
        out = spec

    elif patch.op == "move_widget":
        w = _patched_widget(spec, patch.target)
        payload = patch.payload
        if not isinstance(payload, dict):
            raise IllegalPatchError("move_widget payload must be an object")
        fields = {}
        for key in ("x", "y", "width", "height"):
            if key in payload:
                value = payload[key]
                if isinstance(value, bool) or not isinstance(value, int):
                    raise IllegalPatchError(f"move_widget {key} must be an integer")
                fields[key] = value
        if not fields:
            raise IllegalPatchError("move_widget payload names no coordinates")
        out = _replace_widget(spec, replace(w, **fields))

    else:  # pragma: no cover - PATCH_OPS is exhaustive above
        raise IllegalPatchError(patch.op)

    out = replace(out, revision=spec.revision + 1)
    violations = validate_dashboard(out)
    if violations:
        raise ValidationError(violations)
    return out


# -- serialization ------------------------------------------------------------

def _binding_to_obj(b: SensorBinding | StreamBinding | None) -> dict | None:
    if isinstance(b, SensorBinding):
        return {"sensors": list(b.sensor_ids)}
    if isinstance(b, StreamBinding):
        return {"stream_url": b.stream_url, "transport": b.transport}
    return None


def spec_to_obj(spec: DashboardSpec) -> dict:
    """Plain-dict form of a spec (what the canonical JSON encodes)."""
    widgets = []
    for w in spec.widgets:
        obj: dict[str, Any] = {
            "id": w.id, "kind": w.kind,
            "x": w.x, "y": w.y, "width": w.width, "height": w.height,
        }
        binding = _binding_to_obj(w.binding)
        if binding is not None:
            obj["binding"] = binding
        if w.label is not None:
            obj["label"] = w.label
        if w.format is not None:
            obj["format"] = w.format
        widgets.append(obj)
    out: dict[str, Any] = {
        "name": spec.name,
        "poll_interval_ms": spec.poll_interval_ms,
        "revision": spec.revision,
        "widgets": widgets,
    }
    if spec.background_image is not None:
        out["background_image"] = spec.background_image
    return out


def serialize_dashboard_spec(spec: DashboardSpec) -> str:
    """Canonical encoding: sorted keys, no insignificant whitespace."""
    return json.dumps(spec_to_obj(spec), sort_keys=True, separators=(",", ":"))


def export_frontend_bundle(spec: DashboardSpec, out_dir: str | Path,
                           asset_dir: str | Path | None = None) -> list[dict]:
    """Write the front-end-consumable bundle; returns a manifest of files.

    The bundle is the canonical spec document plus a copy of the background
    image (when configured, resolved against ``asset_dir``). The manifest
    lists every written file with its sha256, so re-exporting an unchanged
    spec yields identical hashes.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_spec = spec
    manifest: list[dict] = []

    if spec.background_image is not None:
        src = Path(asset_dir or ".") / spec.background_image
        target = out / Path(spec.background_image).name
        shutil.copyfile(src, target)
        export_spec = replace(spec, background_image=target.name)
        manifest.append(_manifest_entry(target, out))

    spec_path = out / "dashboard.json"
    spec_path.write_text(serialize_dashboard_spec(export_spec))
    manifest.append(_manifest_entry(spec_path, out))
    manifest.sort(key=lambda e: e["path"])
    return manifest


def _manifest_entry(path: Path, root: Path) -> dict:
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    return {"path": str(path.relative_to(root)), "sha256": digest}
