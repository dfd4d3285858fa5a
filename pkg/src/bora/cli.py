"""Command line: serve the monitoring system, benchmark transports, run a
simulated upstream, and drive a running server's control API."""

from __future__ import annotations

import json
import os
import sys
import time

import click

from .bench import BenchConfig, render_report, run_benchmark
from .client import ControlClient
from .errors import ValidationError
from .ingest.fixture import FixtureDataServer
from .ingest.simulate import SimulatedSource, waveform_value
from .ingest.types import SensorSample, SimProfile
from .server.config import DEFAULT_TOKEN, load_server_config
from .server.runner import serve_forever


@click.group()
def main() -> None:
    """bora: browser-fronted experiment monitoring."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Server config JSON.")
@click.option("--port", type=int, default=None, help="Override the configured port.")
def serve(config_path: str, port: int | None) -> None:
    """Run the monitoring server in the foreground."""
    try:
        config = load_server_config(config_path)
    except ValidationError as exc:
        click.echo(f"invalid dashboard spec: {exc}", err=True)
        sys.exit(2)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"cannot load config: {exc}", err=True)
        sys.exit(2)
    serve_forever(config, port=port)


@main.command()
@click.option("--transport", "transports", multiple=True,
              type=click.Choice(["segmented", "push", "direct"]),
              help="Transport(s) to benchmark; default all three.")
@click.option("--runs", default=10, show_default=True, help="Measurement runs per transport.")
@click.option("--fps", default=30, show_default=True)
@click.option("--duration", default=20.0, show_default=True,
              help="Per-transport phase budget, seconds.")
@click.option("--width", default=640, show_default=True)
@click.option("--height", default=480, show_default=True)
@click.option("--encode-delay-ms", default=0.0, show_default=True,
              help="Per-frame transcode cost paid by the push transport.")
@click.option("--format", "fmt", default="text-table",
              type=click.Choice(["text-table", "csv"]), show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Also write the report here.")
def bench(transports: tuple[str, ...], runs: int, fps: int, duration: float,
          width: int, height: int, encode_delay_ms: float, fmt: str,
          out: str | None) -> None:
    """Benchmark start-up delay and transmission latency per transport."""
    cfg = BenchConfig(fps=fps, width=width, height=height, duration_s=duration,
                      runs=runs, encode_delay_ms=encode_delay_ms,
                      transports=transports or ("segmented", "push", "direct"))
    result = run_benchmark(cfg)
    report = render_report(result, fmt)
    click.echo(report, nl=False)
    if out:
        with open(out, "w") as fh:
            fh.write(report)
    if result.failures:
        sys.exit(1)


@main.command()
@click.option("--profile", default="sine", show_default=True,
              type=click.Choice(["sine", "ramp", "random_walk"]))
@click.option("--sensors", default=8, show_default=True, help="Number of simulated sensors.")
@click.option("--tick-ms", default=1000, show_default=True)
@click.option("--period-ms", default=10000, show_default=True)
@click.option("--amplitude", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--port", default=None, type=int,
              help="Serve the samples over HTTP (CSV poll format) instead of stdout.")
def simulate(profile: str, sensors: int, tick_ms: int, period_ms: int,
             amplitude: float, seed: int, port: int | None) -> None:
    """Generate deterministic sensor data for demos and upstream tests."""
    sim = SimProfile(waveform=profile, period_ms=period_ms, amplitude=amplitude, seed=seed)
    names = [f"sim.s{i}" for i in range(sensors)]
    if port is None:
        def emit(sample: SensorSample) -> None:
            click.echo(f"{sample.sensor_id},{sample.timestamp},{sample.value!r}")
        source = SimulatedSource(sim, names, tick_ms, emit)
        source.start()
        try:
            while True:
                time.sleep(1)
        except KeyboardInterrupt:
            source.stop()
        return

    if profile == "random_walk":
        raise click.UsageError("--port mode computes windows statelessly; "
                               "use sine or ramp")

    # HTTP mode: answer CSV polls with freshly computed waveform windows.
    def provider(requested: list[str], window_s: int) -> list[SensorSample]:
        now_ms = time.time_ns() // 1_000_000
        out = []
        for sensor_id in requested:
            if sensor_id not in names:
                continue
            for k in range(max(1, (window_s * 1000) // tick_ms)):
                t = now_ms - k * tick_ms
                out.append(SensorSample(sensor_id, t, waveform_value(sim, sensor_id, t)))
        return out

    server = FixtureDataServer(provider=provider)
    click.echo(f"serving CSV polls on {server.url}")
    server.start()
    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        server.stop()


@main.group()
@click.option("--url", default="http://127.0.0.1:8000", show_default=True,
              envvar="BORA_URL", help="Server base URL.")
@click.option("--token", default=None, envvar="BORA_TOKEN",
              help="Control token (defaults to the dev token).")
@click.pass_context
def ctl(ctx: click.Context, url: str, token: str | None) -> None:
    """Drive a running server's control API (the thin script client)."""
    ctx.obj = ControlClient(url, token or os.environ.get("BORA_TOKEN", DEFAULT_TOKEN))


@ctl.command("set-interval")
@click.argument("interval_ms", type=int)
@click.pass_obj
def ctl_set_interval(client: ControlClient, interval_ms: int) -> None:
    click.echo(json.dumps(client.set_poll_interval(interval_ms)))


@ctl.command("bind-sensors")
@click.argument("widget_id")
@click.argument("sensors", nargs=-1, required=True)
@click.pass_obj
def ctl_bind_sensors(client: ControlClient, widget_id: str, sensors: tuple[str, ...]) -> None:
    click.echo(json.dumps(client.bind_sensors(widget_id, list(sensors))))


@ctl.command("attach-image")
@click.argument("widget_id")
@click.argument("path", type=click.Path(exists=True))
@click.option("--media-type", default="image/png", show_default=True)
@click.pass_obj
def ctl_attach_image(client: ControlClient, widget_id: str, path: str, media_type: str) -> None:
    with open(path, "rb") as fh:
        data = fh.read()
    click.echo(json.dumps(client.attach_image(widget_id, media_type, data)))


@ctl.command("attach-video")
@click.argument("widget_id")
@click.argument("stream_url")
@click.option("--transport", default="push", show_default=True,
              type=click.Choice(["segmented", "push", "direct"]))
@click.pass_obj
def ctl_attach_video(client: ControlClient, widget_id: str, stream_url: str,
                     transport: str) -> None:
    click.echo(json.dumps(client.attach_video(widget_id, stream_url, transport)))


@ctl.command("move")
@click.argument("widget_id")
@click.option("--x", type=int, default=None)
@click.option("--y", type=int, default=None)
@click.option("--width", type=int, default=None)
@click.option("--height", type=int, default=None)
@click.pass_obj
def ctl_move(client: ControlClient, widget_id: str, x, y, width, height) -> None:
    click.echo(json.dumps(client.move_widget(widget_id, x=x, y=y, width=width, height=height)))


@ctl.command("set-device")
@click.argument("param_id")
@click.argument("value", type=float)
@click.pass_obj
def ctl_set_device(client: ControlClient, param_id: str, value: float) -> None:
    click.echo(json.dumps(client.set_device(param_id, value)))


@ctl.command("record")
@click.argument("stream_id")
@click.argument("from_ts", type=int)
@click.argument("to_ts", type=int)
@click.pass_obj
def ctl_record(client: ControlClient, stream_id: str, from_ts: int, to_ts: int) -> None:
    click.echo(json.dumps(client.mark_recording(stream_id, from_ts, to_ts)))


@ctl.command("spec")
@click.pass_obj
def ctl_spec(client: ControlClient) -> None:
    click.echo(json.dumps(client.get_spec(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
