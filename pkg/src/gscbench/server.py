"""Live teleop bridge: WebSocket sessions driving the shared experiment loop.

One sequential simulation loop per session.  Network handlers never touch the
world; they only append to the session's input mailbox or swap pending config,
and the loop picks both up at tick boundaries.  A tick body contains no await,
so config swaps are atomic with respect to simulation steps.

Operator inputs may carry an explicit ``step`` stamp.  Stamped inputs are
applied exactly at that tick, which makes a recorded input stream replay
bit-identically; unstamped inputs are applied at the tick they arrive.
"""

from __future__ import annotations

import asyncio
import json
import math
import pathlib
import secrets
from dataclasses import replace

import jsonschema
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .control import CONTROLLER_KINDS, Command
from .errors import CodedError
from .scenarios import build_scenario, scenario_ids
from .simulate import Runner, controller_config
from .world import Trace, compute_metrics

PROTOCOL_VERSION = 1
SNAPSHOT_QUEUE_CAP = 8
PARK_SECONDS = 60.0
DEFAULT_TICK_HZ = 10.0

_NUM = {"type": "number"}
_STR = {"type": "string"}

# client -> server message schemas; anything else is rejected with an error
CLIENT_SCHEMAS = {
    "hello": {
        "type": "object",
        "required": ["type", "protocol_version"],
        "properties": {
            "type": {"const": "hello"},
            "protocol_version": {"const": PROTOCOL_VERSION},
            "session": _STR,
        },
        "additionalProperties": False,
    },
    "start": {
        "type": "object",
        "required": ["type", "session", "scenario", "controller"],
        "properties": {
            "type": {"const": "start"},
            "session": _STR,
            "scenario": _STR,
            "controller": {"enum": list(CONTROLLER_KINDS)},
            "seed": {"type": "integer"},
            "tick_hz": {"type": "number", "exclusiveMinimum": 0, "maximum": 1000},
            "mode": {"enum": ["realtime", "lockstep"]},
            "paused": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "operator_input": {
        "type": "object",
        "required": ["type", "session", "vx", "vy"],
        "properties": {
            "type": {"const": "operator_input"},
            "session": _STR,
            "vx": _NUM,
            "vy": _NUM,
            "step": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "config_update": {
        "type": "object",
        "required": ["type", "session"],
        "properties": {
            "type": {"const": "config_update"},
            "session": _STR,
            "channel": {
                "type": "object",
                "properties": {"drop": _NUM, "lag": {"type": "integer"}, "noise": _NUM},
                "additionalProperties": False,
            },
            "controller": _STR,
            "paused": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "reset": {
        "type": "object",
        "required": ["type", "session"],
        "properties": {"type": {"const": "reset"}, "session": _STR},
        "additionalProperties": False,
    },
}


def validate_client_message(msg) -> str:
    """Returns the message type; raises CodedError on any schema violation."""
    if not isinstance(msg, dict) or "type" not in msg:
        raise CodedError("bad-message", "missing type")
    mtype = msg["type"]
    schema = CLIENT_SCHEMAS.get(mtype)
    if schema is None:
        raise CodedError("unknown-type", repr(mtype))
    try:
        jsonschema.validate(msg, schema)
    except jsonschema.ValidationError as e:
        raise CodedError("bad-message", e.message) from e
    return mtype


class Session:
    """State of one live simulation session."""

    def __init__(self, sid: str):
        self.sid = sid
        self.spec = None          # unreseeded ScenarioSpec
        self.controller_kind = None
        self.seed = 0
        self.runner: Runner | None = None
        self.mailbox: list = []   # (stamp or None, Command); handlers append only
        self.queue: asyncio.Queue | None = None
        self.mode = "realtime"
        self.tick_hz = DEFAULT_TICK_HZ
        self.paused = False
        self.loop_task: asyncio.Task | None = None
        self.park_task: asyncio.Task | None = None

    def envelope(self, mtype: str, **payload) -> dict:
        return {"type": mtype, "protocol_version": PROTOCOL_VERSION,
                "session": self.sid, **payload}

    # -- lifecycle ---------------------------------------------------------

    def start_run(self, scenario: str, controller: str, seed: int,
                  tick_hz: float, mode: str, paused: bool):
        if scenario not in scenario_ids():
            raise CodedError("unknown-scenario", repr(scenario))
        self.spec = build_scenario(scenario)
        self.controller_kind = controller
        self.seed = int(seed)
        self.tick_hz = float(tick_hz)
        self.mode = mode
        self.paused = paused
        self._fresh_runner()

    def _fresh_runner(self):
        self.runner = Runner(self.spec, controller_config(self.spec, self.controller_kind),
                             self.seed)
        self.mailbox.clear()

    def reset_run(self):
        if self.spec is None:
            raise CodedError("no-run", "reset before start")
        self._fresh_runner()

    def apply_config(self, msg: dict):
        """Swap channel and/or controller config; all-or-nothing."""
        if self.runner is None:
            raise CodedError("no-run", "config_update before start")
        new_channel = self.runner.spec.channel
        ch = msg.get("channel")
        if ch is not None:
            kw = {}
            if "drop" in ch:
                kw["drop_probability"] = float(ch["drop"])
            if "lag" in ch:
                kw["lag_steps"] = int(ch["lag"])
            if "noise" in ch:
                kw["noise_std"] = float(ch["noise"])
            try:
                new_channel = replace(new_channel, **kw)
            except CodedError as e:
                raise CodedError("out-of-range", str(e)) from e
        kind = msg.get("controller")
        if kind is not None and kind not in CONTROLLER_KINDS:
            raise CodedError("out-of-range", f"controller {kind!r}")
        self.runner.spec = replace(self.runner.spec, channel=new_channel)
        if kind is not None:
            self.controller_kind = kind
            self.runner.controller = controller_config(self.spec, kind)
        if "paused" in msg:
            self.paused = bool(msg["paused"])

    # -- per-tick helpers (called only from the session loop) --------------

    def drain_mailbox(self, step: int):
        raw, keep = None, []
        for stamp, cmd in self.mailbox:
            if stamp is None or stamp <= step:
                raw = cmd  # latest applicable input wins
            else:
                keep.append((stamp, cmd))
        self.mailbox[:] = keep
        return raw

    def snapshot(self, rec) -> dict:
        recs = self.runner.records
        path = 0.0
        for a, b in zip(recs, recs[1:]):
            path += math.hypot(b.robot_position[0] - a.robot_position[0],
                               b.robot_position[1] - a.robot_position[1])
        min_clear = min(r.clearance for r in recs)
        return self.envelope(
            "state_snapshot",
            step=rec.step,
            robot=list(rec.robot_position),
            obstacles=[[oid, list(p), vis] for oid, p, vis in rec.obstacle_positions],
            goal=list(self.spec.world.goal),
            u_h_raw=None if rec.u_h_raw is None else list(rec.u_h_raw),
            u_h_delivered=None if rec.u_h_delivered is None else list(rec.u_h_delivered),
            u_r=list(rec.u_r),
            u_s=list(rec.u_s),
            controller=rec.controller,
            overrode=rec.overrode,
            operator_mode=rec.operator_mode,
            autonomy_mode=rec.autonomy_mode,
            mode_summary=rec.mode_summary,
            metrics={
                "path_length": path,
                "min_clearance": None if math.isinf(min_clear) else min_clear,
                "collision": min_clear < 0,
            },
        )

    async def emit(self, msg: dict, force: bool = False):
        if self.queue is None:
            return
        if force or self.mode == "lockstep":
            await self.queue.put(msg)
        else:
            try:
                self.queue.put_nowait(msg)
            except asyncio.QueueFull:
                pass  # never block the tick on a slow client


async def session_loop(session: Session):
    runner = session.runner
    period = 1.0 / session.tick_hz
    while runner.terminated is None:
        if session.paused:
            await asyncio.sleep(period)
            continue
        rec = runner.live_step(session.drain_mailbox(runner.world.time_step))
        await session.emit(session.snapshot(rec))
        await asyncio.sleep(period if session.mode == "realtime" else 0)
    metrics = compute_metrics(Trace(runner.records, runner.terminated, runner.dt),
                              session.spec)
    await session.emit(session.envelope(
        "run_ended", reason=runner.terminated, metrics=metrics.to_json()),
        force=True)


def create_app() -> FastAPI:
    app = FastAPI(title="gscbench teleop")
    app.state.sessions = {}

    # serve the built browser client when it is present (repo checkouts)
    ui_dir = pathlib.Path(__file__).resolve().parents[2] / "frontend"
    if (ui_dir / "index.html").exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.get("/scenarios")
    def scenarios():
        return {"protocol_version": PROTOCOL_VERSION,
                "scenarios": list(scenario_ids())}

    @app.websocket("/session")
    async def ws_session(ws: WebSocket):
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=SNAPSHOT_QUEUE_CAP)
        session: Session | None = None

        async def sender():
            while True:
                await ws.send_text(json.dumps(await queue.get(), sort_keys=True))

        async def send_error(code, reason, sid=""):
            await ws.send_text(json.dumps(
                {"type": "error", "protocol_version": PROTOCOL_VERSION,
                 "session": sid, "code": code, "reason": reason}, sort_keys=True))

        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError:
                    await send_error("bad-json", "not valid JSON")
                    continue
                try:
                    mtype = validate_client_message(msg)
                except CodedError as e:
                    await send_error(e.code, str(e),
                                     session.sid if session else "")
                    continue

                if mtype == "hello":
                    sid = msg.get("session") or secrets.token_hex(8)
                    session = app.state.sessions.setdefault(sid, Session(sid))
                    if session.park_task is not None:
                        session.park_task.cancel()
                        session.park_task = None
                    session.queue = queue
                    await session.emit(session.envelope("hello"))
                    await session.emit(session.envelope(
                        "scenario_list", scenarios=list(scenario_ids())))
                    continue
                if session is None:
                    await send_error("no-session", "hello first")
                    continue
                if msg.get("session") != session.sid:
                    await send_error("bad-session", "unknown session id", session.sid)
                    continue

                try:
                    if mtype == "start":
                        if session.loop_task is not None:
                            session.loop_task.cancel()
                        session.start_run(
                            msg["scenario"], msg["controller"], msg.get("seed", 0),
                            msg.get("tick_hz", DEFAULT_TICK_HZ),
                            msg.get("mode", "realtime"), msg.get("paused", False))
                        await session.emit(session.envelope(
                            "start", scenario=msg["scenario"],
                            controller=msg["controller"], seed=session.seed))
                        session.loop_task = asyncio.create_task(session_loop(session))
                    elif mtype == "operator_input":
                        session.mailbox.append(
                            (msg.get("step"), Command(float(msg["vx"]), float(msg["vy"]))))
                    elif mtype == "config_update":
                        session.apply_config(msg)
                        await session.emit(session.envelope(
                            "config_update", applied=True))
                    elif mtype == "reset":
                        if session.loop_task is not None:
                            session.loop_task.cancel()
                        session.reset_run()
                        await session.emit(session.envelope("reset"))
                        session.loop_task = asyncio.create_task(session_loop(session))
                except CodedError as e:
                    await send_error(e.code, str(e), session.sid)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            if session is not None:
                session.queue = None

                async def park(s=session):
                    await asyncio.sleep(PARK_SECONDS)
                    if s.loop_task is not None:
                        s.loop_task.cancel()
                    app.state.sessions.pop(s.sid, None)

                session.park_task = asyncio.create_task(park())

    return app


def serve(host: str = "127.0.0.1", port: int = 8787):
    """Blocking entry point used by `gscbench serve`."""
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port)
