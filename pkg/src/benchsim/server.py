"""Live session service: world snapshots out, teleoperation in.

Wire protocol: JSON text frames over a WebSocket at path /session, each
framed as {"type": <string>, "payload": <object>, "tick": <int>}. The server
emits "snapshot" (and "error"/acks); clients send "teleop", "reset",
"pause", "resume", "set_rate", "subscribe".

The simulation advances in a single asyncio task; connections only enqueue
state changes (latest teleop, pause flag, rate), so every mutation is
applied at a deterministic point in the tick loop. At most one teleop is
applied per sim step — the latest received — and the applied command is
held until replaced, like a held key. Exactly one connection (the first to
send a teleop) holds teleop authority; everyone else observes.

Snapshots are delivered per subscriber with latest-wins semantics: each
connection has a one-slot mailbox drained by its own sender task, so a
consumer that falls behind skips straight to the freshest state instead of
back-pressuring the simulation, other viewers, or its own close handshake.
The authoritative event stream is the episode record, not the wire.

Episodes are recorded in the same EpisodeRecord form headless runs produce,
so human-driven sessions flow through the identical scoring path.
"""

from __future__ import annotations

import asyncio
import dataclasses
import itertools
import json
import logging
import math

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .envs.socialnav import SocialNavEnv, SocialNavScenario
from .records import (EpisodeRecord, EpisodeRecorder, entity_rows, event_row,
                      write_records)

DEFAULT_SNAPSHOT_HZ = 20.0
PAUSE_POLL_S = 0.01     # loop latency while paused
SESSION_PATH = "/session"

log = logging.getLogger("benchsim.server")

_SESSION_IDS = itertools.count(1)


def envelope(msg_type: str, payload: dict, tick: int) -> str:
    return json.dumps({"type": msg_type, "payload": payload, "tick": tick},
                      sort_keys=True)


class _Mailbox:
    """One-slot latest-wins buffer between the sim task and a sender task."""

    __slots__ = ("text", "ready")

    def __init__(self):
        self.text: str | None = None
        self.ready = asyncio.Event()

    def put(self, text: str) -> None:
        self.text = text  # replacing an undelivered frame drops it
        self.ready.set()

    async def take(self) -> str | None:
        await self.ready.wait()
        self.ready.clear()
        text, self.text = self.text, None
        return text


class SessionServer:
    """One scenario, one live episode at a time, any number of viewers."""

    def __init__(self, scenario: SocialNavScenario | None = None,
                 seed: int = 0, host: str = "127.0.0.1", port: int = 8765,
                 pace: float = 1.0, snapshot_hz: float = DEFAULT_SNAPSHOT_HZ):
        if snapshot_hz <= 0:
            raise ValueError("snapshot_hz must be positive")
        self.scenario = scenario or SocialNavScenario()
        self.seed = seed
        self.host = host
        self.port = port
        self.pace = pace  # sim-seconds per wall-second; 0 = unpaced
        self.session_id = f"session-{next(_SESSION_IDS)}"
        self.records: list[EpisodeRecord] = []

        self.env = SocialNavEnv(self.scenario)
        self.tick = 0              # session-global, strictly increasing
        self.paused = False
        self._snapshot_hz = snapshot_hz
        self._pending_teleop: tuple[float, float] | None = None
        self._held_cmd = (0.0, 0.0)
        self._writer = None        # connection holding teleop authority
        self._subscribers: dict = {}  # conn -> (_Mailbox, sender task)
        self._events_since_last: list = []
        self._recorder: EpisodeRecorder | None = None
        self._step_index = 0
        self._episode_over = False
        self._reset_request: tuple[bool, int | None] = (False, None)
        self._server = None
        self._loop_task = None

    # ------------------------------------------------------------ lifecycle

    async def start(self) -> None:
        """Bind and begin serving; raises OSError when the port is taken."""
        self._server = await ws_serve(self._handle, self.host, self.port)
        if self.port == 0:
            self.port = self._server.sockets[0].getsockname()[1]
        self._begin_episode(self.seed)
        self._loop_task = asyncio.ensure_future(self._run_loop())
        log.info("%s listening on ws://%s:%d%s", self.session_id, self.host,
                 self.port, SESSION_PATH)

    async def stop(self) -> None:
        if self._loop_task is not None:
            self._loop_task.cancel()
            try:
                await self._loop_task
            except asyncio.CancelledError:
                pass
        for _, sender in list(self._subscribers.values()):
            sender.cancel()
        self._subscribers.clear()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    @property
    def url(self) -> str:
        return f"ws://{self.host}:{self.port}{SESSION_PATH}"

    # ------------------------------------------------------------- episodes

    def _begin_episode(self, seed: int | None) -> None:
        use_seed = self.seed if seed is None else seed
        self.seed = use_seed
        self.env.reset(seed=use_seed)
        self._recorder = EpisodeRecorder(
            "socialnav", use_seed, dataclasses.asdict(self.scenario),
            n_agents=1, session_id=self.session_id)
        self._recorder.on_snapshot(self.env.world)
        self._step_index = 0
        self._episode_over = False
        self._pending_teleop = None
        self._held_cmd = (0.0, 0.0)
        self._events_since_last = []

    def _finish_episode(self) -> None:
        s = self.env.episode_summary()
        status = "succeeded" if s.success else "failed"
        self._recorder.on_snapshot(self.env.world, status=status)
        record = self._recorder.finish(
            success=s.success, steps=self._step_index, t_actual=s.t_actual,
            t_min=s.t_min, t_max=s.t_max, collisions=s.collisions,
            f1=s.f1, f2=s.f2)
        self.records.append(record)
        self._episode_over = True
        log.info("%s episode done: %s in %.1fs", self.session_id, status,
                 s.t_actual)

    # ------------------------------------------------------------- sim loop

    def _status(self) -> str:
        # Same strings as the recorded snapshots, so clients can treat the
        # live stream and a replayed JSONL file interchangeably.
        if not self.env.terminated:
            return "running"
        return "succeeded" if self.env.success else "failed"

    def _snapshot_payload(self, events: list | None = None) -> dict:
        return {"session_id": self.session_id, "tick": self.tick,
                "sim_time": self.env.world.clock,
                "entities": entity_rows(self.env.world),
                "events_since_last": [] if events is None else events,
                "episode_status": self._status()}

    def _broadcast_snapshot(self) -> None:
        payload = self._snapshot_payload(self._events_since_last)
        text = envelope("snapshot", payload, self.tick)
        self._events_since_last = []
        for box, _ in self._subscribers.values():  # no await: can't block sim
            box.put(text)

    async def _pump(self, conn, box: _Mailbox) -> None:
        """Drain one subscriber's mailbox; ends with its connection."""
        try:
            while True:
                text = await box.take()
                if text is not None:
                    await conn.send(text)
        except ConnectionClosed:
            pass

    def _ticks_per_snapshot(self) -> int:
        sim_hz = 1.0 / self.env.world.dt
        return max(1, round(sim_hz / self._snapshot_hz))

    async def _run_loop(self) -> None:
        try:
            await self._tick_forever()
        except asyncio.CancelledError:
            raise
        except Exception:
            log.exception("session loop crashed")
            raise

    async def _tick_forever(self) -> None:
        loop = asyncio.get_running_loop()
        next_deadline = loop.time()
        while True:
            do_reset, reset_seed = self._reset_request
            if do_reset:
                self._reset_request = (False, None)
                self._begin_episode(reset_seed)
                self.tick += 1  # a reset consumes a tick: no repeats on wire
                self._broadcast_snapshot()
                next_deadline = loop.time()
                continue
            if self.paused or self._episode_over or not self._subscribers:
                await asyncio.sleep(PAUSE_POLL_S)
                next_deadline = loop.time()
                continue

            if self._pending_teleop is not None:
                self._held_cmd = self._pending_teleop
                self._pending_teleop = None
            _, events = self.env.step(self._held_cmd)
            self.tick += 1
            self._step_index += 1
            self._recorder.on_step(self._step_index - 1,
                                   command=list(self._held_cmd))
            self._recorder.on_events(self._step_index - 1, events)
            self._events_since_last.extend(
                event_row(self._step_index - 1, e).__dict__ for e in events)

            terminal = self.env.terminated
            if terminal:
                self._finish_episode()
            if terminal or self._step_index % self._ticks_per_snapshot() == 0:
                self._broadcast_snapshot()

            if self.pace > 0:
                next_deadline += self.env.world.dt / self.pace
                delay = next_deadline - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_deadline = loop.time()  # fell behind; don't burst
            else:
                await asyncio.sleep(0)

    # ------------------------------------------------------- message intake

    async def _handle(self, conn) -> None:
        path = conn.request.path
        if path.rstrip("/") != SESSION_PATH:
            await conn.close(code=1008, reason=f"unknown path {path}")
            return
        try:
            async for raw in conn:
                await self._dispatch(conn, raw)
        except ConnectionClosed:
            pass
        finally:
            entry = self._subscribers.pop(conn, None)
            if entry is not None:
                entry[1].cancel()
            if self._writer is conn:
                self._writer = None  # authority released on disconnect

    async def _error(self, conn, message: str) -> None:
        await conn.send(envelope("error", {"message": message}, self.tick))

    async def _dispatch(self, conn, raw) -> None:
        try:
            msg = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError):
            await self._error(conn, "message is not valid JSON")
            return
        if not isinstance(msg, dict) or "type" not in msg:
            await self._error(conn, "message must be an object with 'type'")
            return
        msg_type = msg["type"]
        if not isinstance(msg_type, str) or not msg_type.isidentifier():
            await self._error(conn, f"unknown message type {msg_type!r}")
            return
        payload = msg.get("payload")
        payload = payload if isinstance(payload, dict) else {}
        handler = getattr(self, f"_on_{msg_type}", None)
        if handler is None:
            await self._error(conn, f"unknown message type {msg_type!r}")
            return
        await handler(conn, payload)

    async def _on_subscribe(self, conn, payload) -> None:
        channel = payload.get("channel", "snapshots")
        if channel != "snapshots":
            await self._error(conn, f"unknown channel {channel!r}")
            return
        fresh = conn not in self._subscribers
        await conn.send(envelope("subscribed",
                                 {"session_id": self.session_id,
                                  "snapshot_hz": self._snapshot_hz},
                                 self.tick))
        if fresh:  # re-subscribing must not repeat a tick on this stream
            box = _Mailbox()
            sender = asyncio.ensure_future(self._pump(conn, box))
            self._subscribers[conn] = (box, sender)
            box.put(envelope("snapshot", self._snapshot_payload(), self.tick))

    async def _on_teleop(self, conn, payload) -> None:
        if self._writer is None:
            self._writer = conn
        if self._writer is not conn:
            await self._error(conn, "another connection holds teleop "
                                    "authority")
            return
        v, omega = payload.get("v"), payload.get("omega")
        if not isinstance(v, (int, float)) or \
                not isinstance(omega, (int, float)) or \
                isinstance(v, bool) or isinstance(omega, bool) or \
                not (math.isfinite(v) and math.isfinite(omega)):
            await self._error(conn, "teleop payload needs numeric "
                                    "'v' and 'omega'")
            return
        if self._episode_over:
            await self._error(conn, "episode over; send reset")
            return
        sc = self.scenario
        clamped = (min(max(float(v), 0.0), sc.v_max),
                   min(max(float(omega), -sc.omega_max), sc.omega_max))
        self._pending_teleop = clamped  # latest wins within a sim step

    async def _on_reset(self, conn, payload) -> None:
        seed = payload.get("seed")
        if seed is not None and (not isinstance(seed, int)
                                 or isinstance(seed, bool)):
            await self._error(conn, "reset seed must be an integer")
            return
        self._reset_request = (True, seed)
        await conn.send(envelope("reset_queued", {"seed": seed}, self.tick))

    async def _on_pause(self, conn, payload) -> None:
        self.paused = True
        await conn.send(envelope("paused",
                                 {"sim_time": self.env.world.clock},
                                 self.tick))

    async def _on_resume(self, conn, payload) -> None:
        self.paused = False
        await conn.send(envelope("resumed",
                                 {"sim_time": self.env.world.clock},
                                 self.tick))

    async def _on_set_rate(self, conn, payload) -> None:
        hz = payload.get("hz")
        if not isinstance(hz, (int, float)) or isinstance(hz, bool) \
                or not math.isfinite(hz) or hz <= 0:
            await self._error(conn, "set_rate payload needs positive 'hz'")
            return
        self._snapshot_hz = float(hz)
        await conn.send(envelope("rate_set", {"hz": float(hz)}, self.tick))


def record_session(server: SessionServer) -> EpisodeRecord:
    """Latest completed episode of the session, headless-identical format."""
    if not server.records:
        raise ValueError("session has not completed an episode yet")
    return server.records[-1]


def serve_session(cfg, port: int = 8765, record_path=None,
                  pace: float = 1.0) -> None:
    """Blocking entry point used by the CLI; Ctrl-C stops the server."""
    from .config import ConfigError

    if cfg.task != "socialnav":
        raise ConfigError("serve drives the socialnav task; "
                          f"got {cfg.task!r}")

    async def _main():
        server = SessionServer(cfg.params, seed=cfg.seed, port=port,
                               pace=pace)
        await server.start()
        print(f"serving {server.url}")
        try:
            await asyncio.Future()  # run until cancelled
        finally:
            await server.stop()
            if record_path and server.records:
                write_records(record_path, server.records)
                print(record_path)

    asyncio.run(_main())
