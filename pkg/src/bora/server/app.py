"""HTTP/WebSocket service binding ingestion, cache, control, and streams."""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Response, WebSocket
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from starlette.websockets import WebSocketDisconnect

from ..cache import SampleCache
from ..config import serialize_dashboard_spec
from ..control import ControlPlane, DeviceRegistry, mark_to_obj
from ..errors import (
    BoraError,
    EmptyRangeError,
    FormatError,
    IllegalPatchError,
    SegmentGoneError,
    UnknownDeviceError,
    UnknownSegmentError,
    UnknownStreamError,
    UnknownWidgetError,
    ValidationError,
    ValueOutOfRangeError,
)
from ..ingest.http_poll import HttpPoller, serialize_csv_rows
from ..ingest.push import ingest_push_message
from ..ingest.simulate import SimulatedSource
from ..stream.source import SignalBroker, StreamWorker
from .config import ServerConfig
from .models import (
    DeviceAck,
    DeviceSetRequest,
    PatchRequest,
    RecordingMarkResponse,
    RecordingRequest,
)
from .sessions import SessionManager, run_ticker, spec_message

log = logging.getLogger(__name__)

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>bora</title></head>
<body><h1>bora server</h1>
<p>No frontend bundle is configured. The API lives under <code>/api</code>;
see <code>GET /api/spec</code> for the active dashboard.</p>
</body></html>
"""


def _http_error(exc: BoraError) -> HTTPException:
    status = 400
    if isinstance(exc, (UnknownWidgetError, UnknownDeviceError, UnknownStreamError,
                        UnknownSegmentError)):
        status = 404
    elif isinstance(exc, SegmentGoneError):
        status = 410
    elif isinstance(exc, (ValidationError, IllegalPatchError, ValueOutOfRangeError,
                          EmptyRangeError, FormatError)):
        status = 422
    return HTTPException(status_code=status,
                         detail={"error": type(exc).__name__, "message": str(exc)})


def create_app(config: ServerConfig) -> FastAPI:
    state = AppState(config)

    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        await state.start()
        try:
            yield
        finally:
            await state.shutdown()

    app = FastAPI(title="bora", lifespan=lifespan)
    app.state.bora = state

    def require_token(x_bora_token: str | None = Header(default=None)) -> None:
        if x_bora_token != config.effective_token():
            raise HTTPException(status_code=401, detail={"error": "Unauthorized",
                                                         "message": "bad or missing token"})

    # -- frontend ------------------------------------------------------------

    static_dir = Path(config.static_dir) if config.static_dir else None
    if static_dir is not None and static_dir.is_dir():
        app.mount("/app", StaticFiles(directory=str(static_dir), html=True), name="app")

        @app.get("/", response_class=HTMLResponse)
        def index() -> HTMLResponse:
            return HTMLResponse((static_dir / "index.html").read_text())
    else:
        @app.get("/", response_class=HTMLResponse)
        def index() -> HTMLResponse:
            return HTMLResponse(_FALLBACK_PAGE)

    # -- spec and data ---------------------------------------------------------

    @app.get("/api/spec")
    def get_spec() -> Response:
        return Response(content=serialize_dashboard_spec(state.control.spec),
                        media_type="application/json")

    @app.get("/api/data", response_class=PlainTextResponse)
    def get_data(sensors: str = "", window: int = 600) -> PlainTextResponse:
        if window <= 0:
            raise HTTPException(status_code=400,
                                detail={"error": "BadRequest",
                                        "message": "window must be > 0"})
        requested = [s for s in sensors.split(",") if s]
        rows = []
        for sensor_id in requested:
            rows.extend(state.cache.recent(sensor_id, window * 1000))
        rows.sort(key=lambda s: (s.sensor_id, s.timestamp))
        return PlainTextResponse(serialize_csv_rows(rows), media_type="text/csv")

    # -- control -----------------------------------------------------------

    @app.post("/api/control", dependencies=[Depends(require_token)])
    def post_control(request: PatchRequest) -> dict:
        try:
            return state.control.submit_patch(request.to_patch())
        except BoraError as exc:
            raise _http_error(exc) from exc

    @app.post("/api/device/{param_id}", dependencies=[Depends(require_token)])
    def post_device(param_id: str, request: DeviceSetRequest) -> DeviceAck:
        try:
            ack = state.control.set_device_parameter(param_id, request.value)
        except BoraError as exc:
            raise _http_error(exc) from exc
        return DeviceAck(param_id=ack.param_id, value=ack.value, ts=ack.last_set_ts)

    @app.post("/api/recordings", dependencies=[Depends(require_token)])
    def post_recording(request: RecordingRequest) -> RecordingMarkResponse:
        try:
            mark = state.control.mark_recording(request.stream_id, request.from_ts,
                                                request.to_ts)
        except BoraError as exc:
            raise _http_error(exc) from exc
        return RecordingMarkResponse(**mark_to_obj(mark))

    @app.get("/api/recordings")
    def get_recordings() -> list[RecordingMarkResponse]:
        return [RecordingMarkResponse(**mark_to_obj(m)) for m in state.control.recordings()]

    @app.get("/api/widget/{widget_id}/attachment")
    def get_attachment(widget_id: str) -> Response:
        attachment = state.control.get_attachment(widget_id)
        if attachment is None:
            raise HTTPException(status_code=404, detail={"error": "NoAttachment",
                                                         "message": widget_id})
        media_type, data = attachment
        return Response(content=data, media_type=media_type)

    # -- push-channel ingestion ----------------------------------------------

    @app.post("/api/push/{channel}")
    async def post_push(channel: str, request_body: bytes = Depends(_raw_body)) -> dict:
        cfg = state.push_channels.get(channel)
        if cfg is None:
            raise HTTPException(status_code=404, detail={"error": "UnknownChannel",
                                                         "message": channel})
        try:
            samples = ingest_push_message(request_body, cfg)
        except FormatError as exc:
            raise _http_error(exc) from exc
        for sample in samples:
            state.cache.put_sample(sample)
        return {"accepted": len(samples)}

    # -- segmented transport ----------------------------------------------------

    @app.get("/stream/{stream_id}/playlist", response_class=PlainTextResponse)
    def get_playlist(stream_id: str) -> PlainTextResponse:
        worker = state.worker(stream_id)
        return PlainTextResponse(worker.manifest(), media_type="text/plain")

    @app.get("/stream/{stream_id}/segment/{index}")
    def get_segment(stream_id: str, index: int) -> Response:
        worker = state.worker(stream_id)
        try:
            blob = worker.segment_blob(index)
        except BoraError as exc:
            raise _http_error(exc) from exc
        return Response(content=blob, media_type="application/octet-stream")

    # -- websockets -------------------------------------------------------------

    @app.websocket("/ws/display")
    async def ws_display(ws: WebSocket) -> None:
        await ws.accept()
        session = state.sessions.register()
        state.display_sockets[session.id] = ws
        try:
            first = spec_message(state.control.spec)
            session.last_sent_revision = first["revision"]
            await ws.send_json(first)
            writer = asyncio.create_task(_session_writer(ws, session))
            reader = asyncio.create_task(_drain_incoming(ws))
            done, pending = await asyncio.wait({writer, reader},
                                               return_when=asyncio.FIRST_COMPLETED)
            for task in pending:
                task.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await task
        except WebSocketDisconnect:
            pass
        finally:
            state.sessions.unregister(session)
            state.display_sockets.pop(session.id, None)

    async def _session_writer(ws: WebSocket, session) -> None:
        while True:
            message = await session.queue.get()
            if message.get("type") == "spec":
                session.last_sent_revision = message["revision"]
            elif message.get("type") == "data":
                # Never let a client render data against a stale binding.
                if message["revision"] < session.last_sent_revision:
                    continue
            try:
                await ws.send_json(message)
            except Exception:
                return

    async def _drain_incoming(ws: WebSocket) -> None:
        with contextlib.suppress(WebSocketDisconnect, RuntimeError):
            while True:
                await ws.receive_text()

    @app.websocket("/ws/stream/{stream_id}")
    async def ws_stream_push(ws: WebSocket, stream_id: str) -> None:
        worker = state.streams.get(stream_id)
        if worker is None:
            await ws.accept()
            await ws.close(code=4404, reason=f"unknown stream {stream_id}")
            return
        await ws.accept()
        try:
            # Per-client transcoding starts at connect; the priming window is
            # the start-up cost, its newest frame the first delivery.
            first = await worker.prime_push_client()
            reader = worker.push_reader()
            if first is not None:
                await ws.send_bytes(first)
            while True:
                item = await reader.next()
                if item is None:
                    break
                await ws.send_bytes(await worker.transcode(item[0]))
        except (WebSocketDisconnect, RuntimeError):
            pass  # channel closed: client removed

    @app.websocket("/ws/signal")
    async def ws_signal(ws: WebSocket) -> None:
        await ws.accept()
        try:
            while True:
                text = await ws.receive_text()
                try:
                    message = json.loads(text)
                except json.JSONDecodeError:
                    await ws.send_json({"type": "error", "message": "not json"})
                    continue
                if message.get("type") != "offer":
                    await ws.send_json({"type": "error", "message": "expected offer"})
                    continue
                stream_id = str(message.get("stream_id", ""))
                if stream_id not in state.streams:
                    await ws.send_json({"type": "error",
                                        "message": f"unknown stream {stream_id}"})
                    continue
                session = state.broker.offer(stream_id)
                await ws.send_json({"type": "answer", "session_id": session.session_id,
                                    "data_channel_url": f"/ws/direct/{session.session_id}"})
        except (WebSocketDisconnect, RuntimeError):
            pass

    @app.websocket("/ws/direct/{session_id}")
    async def ws_direct(ws: WebSocket, session_id: str) -> None:
        await ws.accept()
        try:
            session = state.broker.claim(session_id)
        except BoraError:
            await ws.close(code=4404, reason="unknown session")
            return
        worker = state.streams[session.stream_id]
        reader = worker.direct_reader()
        try:
            while True:
                item = await reader.next()
                if item is None:
                    break
                await ws.send_bytes(item[1])  # source bytes, no re-encode
        except (WebSocketDisconnect, RuntimeError):
            pass

    return app


async def _raw_body(request) -> bytes:  # tiny dependency, typed loosely on purpose
    return await request.body()


class AppState:
    """Everything the endpoints share; started/stopped by the app lifespan."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self.cache = SampleCache(capacity=config.cache_capacity)
        devices = DeviceRegistry()
        for device in config.devices:
            devices.add(device.param_id, device.minimum, device.maximum, device.initial)
        self.streams: dict[str, StreamWorker] = {
            s.id: StreamWorker(s) for s in config.streams}
        self.control = ControlPlane(config.dashboard, self.cache, devices,
                                    self.streams, config.recordings_dir)
        self.sessions = SessionManager(self.cache)
        self.control.on_spec_change(self.sessions.broadcast_spec)
        self.broker = SignalBroker()
        self.display_sockets: dict[int, WebSocket] = {}
        self.push_channels = {
            src.endpoint or src.name: src
            for src in config.sources if src.protocol == "push_channel"}
        self._pollers: list[HttpPoller] = []
        self._sim_sources: list[SimulatedSource] = []
        self._stop = asyncio.Event()
        self._ticker: asyncio.Task | None = None

    def worker(self, stream_id: str) -> StreamWorker:
        worker = self.streams.get(stream_id)
        if worker is None:
            raise HTTPException(status_code=404, detail={"error": "UnknownStream",
                                                         "message": stream_id})
        return worker

    async def start(self) -> None:
        self._stop = asyncio.Event()
        for worker in self.streams.values():
            worker.start()
        for source in self.config.sources:
            if source.protocol == "http_poll":
                poller = HttpPoller(
                    source, self.cache.put_sample,
                    interval_ms=source.poll_interval_ms
                    or (lambda: self.control.spec.poll_interval_ms))
                poller.start()
                self._pollers.append(poller)
            elif source.protocol == "simulated":
                sim = SimulatedSource(source.sim, source.sensors,
                                      source.poll_interval_ms or 1000,
                                      self.cache.put_sample)
                sim.start()
                self._sim_sources.append(sim)
        self._ticker = asyncio.get_running_loop().create_task(
            run_ticker(self.sessions, lambda: self.control.spec, self._stop))

    async def shutdown(self) -> None:
        """Stop sources, close every session with a close frame, drain <= 2 s."""
        self._stop.set()
        for sim in self._sim_sources:
            sim.stop()
        for poller in self._pollers:
            await poller.stop()
        if self._ticker is not None:
            with contextlib.suppress(asyncio.TimeoutError):
                await asyncio.wait_for(self._ticker, timeout=2.0)
        for ws in list(self.display_sockets.values()):
            with contextlib.suppress(Exception):
                await asyncio.wait_for(ws.close(code=1001), timeout=2.0)
        self.display_sockets.clear()
        for worker in self.streams.values():
            await worker.stop()
