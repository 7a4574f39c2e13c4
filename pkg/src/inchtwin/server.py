"""Wireless link emulation: command/telemetry server over two transports.

A single simulation owner task steps the twin (paced against wall clock
by the realtime factor) and consumes one ordered command queue.  Clients
connect over a plain TCP socket (newline-delimited JSON) or a WebSocket
at ``/ws`` carrying identical text payloads; every decoded command line
earns exactly one ack/err with the matching cmd_id.  Telemetry fans out
to all subscribers at the configured rate with a drop-oldest policy per
slow consumer; command responses are never dropped.

The WebSocket port also serves the static teleop console (GET /) when a
built frontend is available.
"""

from __future__ import annotations

import asyncio
import contextlib
import http
import json
import logging
import os
from dataclasses import dataclass, replace

from websockets.asyncio.server import serve as ws_serve

from . import firmware as fw
from .engine import Simulation, snapshot_telemetry
from .harness import CalibratedParams, Scenario, build_sim_config
from .protocol import (
    Ack,
    Command,
    Err,
    MAX_LINE_BYTES,
    decode_command,
    encode_response,
    encode_telemetry,
)

log = logging.getLogger("inchtwin.server")

TELEMETRY_QUEUE_LIMIT = 64


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8090            # WebSocket; plain socket on port + 1
    telemetry_rate_hz: float = 30.0
    realtime_factor: float = 1.0  # <= 0: run unpaced
    static_dir: str | None = None


class _Session:
    """One connected client on either transport."""

    _next_id = 0

    def __init__(self):
        _Session._next_id += 1
        self.id = _Session._next_id
        self.outbox: asyncio.Queue[bytes] = asyncio.Queue()
        self.telemetry: asyncio.Queue[bytes] = asyncio.Queue(
            maxsize=TELEMETRY_QUEUE_LIMIT
        )
        self.last_cmd_id = 0
        self.closed = False

    def push_telemetry(self, frame: bytes) -> None:
        while True:
            try:
                self.telemetry.put_nowait(frame)
                return
            except asyncio.QueueFull:
                try:
                    self.telemetry.get_nowait()  # drop oldest
                except asyncio.QueueEmpty:
                    pass


class TwinServer:
    """Live digital twin behind the wire protocol."""

    def __init__(
        self,
        scenario: Scenario | None = None,
        params: CalibratedParams | None = None,
        config: ServerConfig | None = None,
    ):
        self.config = config or ServerConfig()
        self.params = params or CalibratedParams()
        self.scenario = scenario or Scenario(
            name="live", duration_s=1.0, gait=fw.GaitConfig()
        )
        self.sessions: dict[int, _Session] = {}
        self.commands: asyncio.Queue[tuple[_Session, Command]] = asyncio.Queue()
        self.sim = self._build_sim(self.scenario)
        self.sim.firmware = replace(self.sim.firmware, mode=fw.Mode.IDLE)
        self._tasks: list[asyncio.Task] = []
        self._started = asyncio.Event()

    # ------------------------------------------------------------------

    def _build_sim(self, scenario: Scenario) -> Simulation:
        cfg = build_sim_config(scenario, self.params)
        cfg = replace(cfg, duration=1.0, start_mode="idle")
        return Simulation(cfg)

    def _apply_env(self, cmd: Command) -> None:
        """Rebuild the environment live; pose carries over, body resets."""
        sc = self.scenario
        if cmd.surface is not None:
            sc = replace(sc, surface=cmd.surface)
        if cmd.slope_deg is not None:
            sc = replace(sc, slope_deg=cmd.slope_deg)
        if cmd.payload_g is not None:
            sc = replace(sc, payload_g=cmd.payload_g)
        if cmd.medium is not None:
            sc = replace(sc, medium=cmd.medium)
        old = self.sim
        sim = self._build_sim(sc)
        sim.pose = old.pose
        sim.firmware = old.firmware
        self.scenario = sc
        self.sim = sim

    def _handle_command(self, cmd: Command) -> Ack | Err:
        needs_env = cmd.type == "set_env" and any(
            v is not None
            for v in (cmd.surface, cmd.slope_deg, cmd.payload_g, cmd.medium)
        )
        state, resp = fw.handle_command(self.sim.firmware, cmd)
        if isinstance(resp, Err):
            return resp
        if needs_env:
            try:
                self.sim.firmware = state
                self._apply_env(cmd)
            except Exception as exc:
                log.warning("set_env rejected: %s", exc)
                return Err(cmd_id=cmd.cmd_id, code="bad_param")
            return resp
        self.sim.firmware = state
        if cmd.type == "reset":
            self.sim = self._build_sim(self.scenario)
            self.sim.firmware = state
        return resp

    # ------------------------------------------------------------------

    async def _sim_loop(self) -> None:
        cfg = self.config
        sim_dt = self.sim.config.dt
        chunk = max(1, round(1.0 / (cfg.telemetry_rate_hz * sim_dt)))
        loop = asyncio.get_running_loop()
        wall_start = loop.time()
        sim_elapsed = 0.0
        while True:
            # Serialized command handling between chunks.
            while True:
                try:
                    session, cmd = self.commands.get_nowait()
                except asyncio.QueueEmpty:
                    break
                resp = self._handle_command(cmd)
                if not session.closed:
                    await session.outbox.put(encode_response(resp))
            try:
                self.sim.advance(chunk)
            except Exception as exc:
                log.error("sim diverged: %s; resetting body", exc)
                self.sim = self._build_sim(self.scenario)
            sim_elapsed += chunk * sim_dt
            frame = encode_telemetry(snapshot_telemetry(self.sim.snapshot()))
            for session in list(self.sessions.values()):
                session.push_telemetry(frame)
            if cfg.realtime_factor > 0:
                target = wall_start + sim_elapsed / cfg.realtime_factor
                delay = target - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    wall_start = loop.time() - sim_elapsed / cfg.realtime_factor
            else:
                await asyncio.sleep(0)

    # ------------------------------------------------------------------

    def _ingest_line(self, session: _Session, raw: bytes) -> Err | None:
        """Decode one line; queue valid commands, return immediate errors.

        Blank lines and non-JSON noise are dropped silently; anything
        that looks like an attempted frame earns exactly one response.
        """
        stripped = raw.strip()
        if not stripped:
            return None
        result = decode_command(raw)
        if isinstance(result, Err):
            if not (stripped.startswith(b"{") or len(raw) > MAX_LINE_BYTES):
                return None  # line noise, drop silently
            return result
        if result.cmd_id <= session.last_cmd_id:
            return Err(cmd_id=result.cmd_id, code="bad_param")
        session.last_cmd_id = result.cmd_id
        self.commands.put_nowait((session, result))
        return None

    async def _writer(self, session: _Session, send) -> None:
        while True:
            getters = [
                asyncio.ensure_future(session.outbox.get()),
                asyncio.ensure_future(session.telemetry.get()),
            ]
            done, pending = await asyncio.wait(
                getters, return_when=asyncio.FIRST_COMPLETED
            )
            for task in pending:
                task.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await task
            for task in done:
                await send(task.result())

    async def _run_session(self, session: _Session, reader_iter, send) -> None:
        self.sessions[session.id] = session
        writer = asyncio.create_task(self._writer(session, send))
        try:
            async for raw in reader_iter:
                err = self._ingest_line(session, raw)
                if err is not None:
                    await session.outbox.put(encode_response(err))
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            session.closed = True
            self.sessions.pop(session.id, None)
            writer.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await writer

    # --- plain TCP transport -------------------------------------------

    async def _tcp_client(self, reader: asyncio.StreamReader, writer) -> None:
        session = _Session()

        async def lines():
            while True:
                try:
                    line = await reader.readline()
                except (ConnectionError, ValueError):
                    return
                if not line:
                    return
                yield line

        async def send(data: bytes) -> None:
            writer.write(data)
            await writer.drain()

        try:
            await self._run_session(session, lines(), send)
        finally:
            with contextlib.suppress(Exception):
                writer.close()
                await writer.wait_closed()

    # --- WebSocket transport -------------------------------------------

    async def _ws_client(self, websocket) -> None:
        if websocket.request.path != "/ws":
            await websocket.close(code=1008, reason="unknown path")
            return
        session = _Session()

        async def messages():
            try:
                async for msg in websocket:
                    if isinstance(msg, str):
                        msg = msg.encode("utf-8")
                    yield msg
            except Exception:
                return

        async def send(data: bytes) -> None:
            await websocket.send(data.decode("utf-8"))

        try:
            await self._run_session(session, messages(), send)
        except Exception:
            pass

    def _process_request(self, connection, request):
        """Serve the static console for non-WebSocket HTTP requests."""
        if request.path == "/ws":
            return None
        static = self.config.static_dir
        path = request.path if request.path != "/" else "/index.html"
        if static:
            full = os.path.realpath(os.path.join(static, path.lstrip("/")))
            if full.startswith(os.path.realpath(static)) and os.path.isfile(full):
                ctype = {
                    ".html": "text/html",
                    ".js": "text/javascript",
                    ".css": "text/css",
                    ".map": "application/json",
                }.get(os.path.splitext(full)[1], "application/octet-stream")
                with open(full, "rb") as fh:
                    body = fh.read()
                return _static_response(connection, body, ctype)
        return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")

    # ------------------------------------------------------------------

    async def serve(self) -> None:
        """Run both transports and the sim loop until cancelled."""
        cfg = self.config
        tcp_server = await asyncio.start_server(
            self._tcp_client, cfg.host, cfg.port + 1
        )
        async with ws_serve(
            self._ws_client,
            cfg.host,
            cfg.port,
            process_request=self._process_request,
        ):
            sim_task = asyncio.create_task(self._sim_loop())
            self._started.set()
            try:
                await asyncio.Future()
            finally:
                sim_task.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await sim_task
                tcp_server.close()
                # Open sessions die with the event loop; waiting on them
                # here would block shutdown while clients linger.


def _static_response(connection, body: bytes, ctype: str):
    response = connection.respond(http.HTTPStatus.OK, "")
    response.body = body
    response.headers["Content-Type"] = ctype
    response.headers["Content-Length"] = str(len(body))
    return response


def serve_session(
    scenario: Scenario | None = None,
    params: CalibratedParams | None = None,
    config: ServerConfig | None = None,
) -> None:
    """Blocking entry point for the CLI."""
    server = TwinServer(scenario=scenario, params=params, config=config)
    asyncio.run(server.serve())
