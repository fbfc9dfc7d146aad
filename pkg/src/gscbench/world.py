"""Deterministic planar world: kinematics, obstacles, collision, metrics.

The robot is a speed-clamped single integrator.  Obstacles follow open-loop
velocity scripts, so their motion never depends on the controller under test.
Occluded obstacles are present-but-invisible until their reveal step: they do
not enter the controllers' models, but they still collide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .control import Command


@dataclass(frozen=True)
class Obstacle:
    oid: str
    position: tuple  # (x, y)
    radius: float
    velocity: tuple = (0.0, 0.0)
    reveal_step: int = 0
    # Velocity schedule: list of (from_step, (vx, vy)); the entry with the
    # largest from_step <= t applies.  Empty -> constant `velocity`.
    script: tuple = ()

    def velocity_at(self, step: int) -> np.ndarray:
        v = self.velocity
        for from_step, vel in self.script:
            if step >= from_step:
                v = vel
        return np.asarray(v, dtype=float)

    def visible_at(self, step: int) -> bool:
        return step >= self.reveal_step

    def to_json(self) -> dict:
        return {
            "oid": self.oid,
            "position": list(self.position),
            "radius": self.radius,
            "velocity": list(self.velocity),
            "reveal_step": self.reveal_step,
            "script": [[s, list(v)] for s, v in self.script],
        }

    @staticmethod
    def from_json(d: dict) -> "Obstacle":
        return Obstacle(
            d["oid"], tuple(d["position"]), d["radius"], tuple(d.get("velocity", (0.0, 0.0))),
            d.get("reveal_step", 0),
            tuple((s, tuple(v)) for s, v in d.get("script", [])),
        )


@dataclass(frozen=True)
class WorldState:
    time_step: int
    robot_position: tuple
    robot_radius: float
    obstacles: tuple  # of Obstacle
    goal: tuple
    bounds: tuple = (-10.0, -10.0, 10.0, 10.0)  # xmin, ymin, xmax, ymax
    regions: tuple = ()  # of (name, (xmin, ymin, xmax, ymax))

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "regions", tuple(self.regions))

    def robot(self) -> np.ndarray:
        return np.asarray(self.robot_position, dtype=float)

    def visible_obstacles(self):
        return [o for o in self.obstacles if o.visible_at(self.time_step)]

    def to_json(self) -> dict:
        return {
            "time_step": self.time_step,
            "robot_position": list(self.robot_position),
            "robot_radius": self.robot_radius,
            "obstacles": [o.to_json() for o in self.obstacles],
            "goal": list(self.goal),
            "bounds": list(self.bounds),
            "regions": [[n, list(r)] for n, r in self.regions],
        }

    @staticmethod
    def from_json(d: dict) -> "WorldState":
        return WorldState(
            d["time_step"], tuple(d["robot_position"]), d["robot_radius"],
            tuple(Obstacle.from_json(o) for o in d["obstacles"]), tuple(d["goal"]),
            tuple(d.get("bounds", (-10, -10, 10, 10))),
            tuple((n, tuple(r)) for n, r in d.get("regions", [])),
        )


def step_world(world: WorldState, u_s: Command, dt: float, v_max: float = 2.0) -> WorldState:
    """Advance one tick: robot integrates the clamped command, obstacles their scripts."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    cmd = u_s.clamped(v_max)
    new_robot = world.robot() + cmd.as_array() * dt
    new_obstacles = []
    for o in world.obstacles:
        vel = o.velocity_at(world.time_step)
        pos = np.asarray(o.position, dtype=float) + vel * dt
        new_obstacles.append(replace(o, position=tuple(pos)))
    return replace(
        world,
        time_step=world.time_step + 1,
        robot_position=tuple(new_robot),
        obstacles=tuple(new_obstacles),
    )


def collision_check(world: WorldState) -> float:
    """Min clearance over ALL obstacles (occlusion hides, it does not remove)."""
    if not world.obstacles:
        return math.inf
    r = world.robot()
    clear = math.inf
    for o in world.obstacles:
        d = float(np.linalg.norm(r - np.asarray(o.position, dtype=float)))
        clear = min(clear, d - world.robot_radius - o.radius)
    return clear


def in_region(pos, rect) -> bool:
    x, y = float(pos[0]), float(pos[1])
    return rect[0] <= x <= rect[2] and rect[1] <= y <= rect[3]


@dataclass
class StepRecord:
    step: int
    robot_position: tuple
    obstacle_positions: tuple  # ((oid, (x, y), visible), ...)
    u_h_raw: tuple | None  # operator command issued this step, if any
    u_h_delivered: tuple | None  # operator command delivered this step, if any
    u_r: tuple
    u_s: tuple
    controller: str
    overrode: bool
    clearance: float  # min clearance at this step (inf -> no obstacles)
    operator_mode: str = ""
    autonomy_mode: str = ""
    # Downsampled mode means for rendering: {"operator": [[label, weight, [[x,y],..]], ...], ...}
    mode_summary: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "robot_position": [round(v, 9) for v in self.robot_position],
            "obstacle_positions": [
                [oid, [round(p[0], 9), round(p[1], 9)], vis]
                for oid, p, vis in self.obstacle_positions
            ],
            "u_h_raw": None if self.u_h_raw is None else [round(v, 9) for v in self.u_h_raw],
            "u_h_delivered": None if self.u_h_delivered is None
            else [round(v, 9) for v in self.u_h_delivered],
            "u_r": [round(v, 9) for v in self.u_r],
            "u_s": [round(v, 9) for v in self.u_s],
            "controller": self.controller,
            "overrode": self.overrode,
            "clearance": None if math.isinf(self.clearance) else round(self.clearance, 9),
            "operator_mode": self.operator_mode,
            "autonomy_mode": self.autonomy_mode,
            "mode_summary": self.mode_summary,
        }


@dataclass
class Trace:
    records: list  # of StepRecord
    terminated: str = "max-steps"  # "goal" | "collision" | "max-steps"
    dt: float = 0.1

    def to_jsonl(self) -> str:
        import json

        lines = [json.dumps({"terminated": self.terminated, "dt": self.dt}, sort_keys=True)]
        lines += [json.dumps(r.to_json(), sort_keys=True) for r in self.records]
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_jsonl(text: str) -> "Trace":
        import json

        lines = [ln for ln in text.strip().split("\n") if ln]
        head = json.loads(lines[0])
        records = []
        for ln in lines[1:]:
            d = json.loads(ln)
            records.append(StepRecord(
                step=d["step"],
                robot_position=tuple(d["robot_position"]),
                obstacle_positions=tuple(
                    (oid, tuple(p), vis) for oid, p, vis in d["obstacle_positions"]
                ),
                u_h_raw=None if d["u_h_raw"] is None else tuple(d["u_h_raw"]),
                u_h_delivered=None if d["u_h_delivered"] is None
                else tuple(d["u_h_delivered"]),
                u_r=tuple(d["u_r"]),
                u_s=tuple(d["u_s"]),
                controller=d["controller"],
                overrode=d["overrode"],
                clearance=math.inf if d["clearance"] is None else d["clearance"],
                operator_mode=d.get("operator_mode", ""),
                autonomy_mode=d.get("autonomy_mode", ""),
                mode_summary=d.get("mode_summary", {}),
            ))
        return Trace(records, head["terminated"], head["dt"])


@dataclass
class Metrics:
    min_clearance: float
    collision: bool
    path_length: float
    steps_to_goal: int | None
    agreement_rms: float
    region_hits: dict
    max_accel: float

    def to_json(self) -> dict:
        return {
            "min_clearance": None if math.isinf(self.min_clearance) else self.min_clearance,
            "collision": self.collision,
            "path_length": self.path_length,
            "steps_to_goal": self.steps_to_goal,
            "agreement_rms": self.agreement_rms,
            "region_hits": self.region_hits,
            "max_accel": self.max_accel,
        }


def intent_path(start, waypoints, speed: float, dt: float, n_steps: int) -> np.ndarray:
    """Ground-truth operator intent: a point tracking the waypoints at fixed speed."""
    pos = np.asarray(start, dtype=float).copy()
    out = [pos.copy()]
    wps = [np.asarray(w, dtype=float) for w in waypoints]
    wi = 0
    for _ in range(n_steps):
        while wi < len(wps) and np.linalg.norm(wps[wi] - pos) < speed * dt:
            wi += 1
        if wi < len(wps):
            d = wps[wi] - pos
            pos = pos + d / np.linalg.norm(d) * speed * dt
        out.append(pos.copy())
    return np.array(out)


def compute_metrics(trace: Trace, spec) -> Metrics:
    """Safety / efficiency / agreement scores for one rollout."""
    if not trace.records:
        raise ValueError("empty trace")
    dt = trace.dt
    pos = np.array([r.robot_position for r in trace.records])
    clear = np.array([r.clearance for r in trace.records])
    min_clear = float(clear.min()) if clear.size else math.inf
    collision = bool(min_clear < 0)
    path_length = float(np.linalg.norm(np.diff(pos, axis=0), axis=1).sum())

    goal = np.asarray(spec.world.goal, dtype=float)
    steps_to_goal = None
    for r in trace.records:
        if np.linalg.norm(np.asarray(r.robot_position) - goal) <= spec.goal_radius:
            steps_to_goal = r.step
            break

    intent = intent_path(spec.world.robot_position, spec.operator_script.waypoints,
                         spec.operator_speed, dt, len(trace.records) - 1)
    agreement_rms = float(np.sqrt(((pos - intent) ** 2).sum(axis=1).mean()))

    region_hits = {}
    for name, rect in spec.world.regions:
        region_hits[name] = bool(any(in_region(p, rect) for p in pos))

    # the terminal record carries a placeholder zero command; keep it out of
    # the acceleration estimate
    us = np.array([r.u_s for r in trace.records[:-1]])
    if len(us) > 1:
        max_accel = float((np.linalg.norm(np.diff(us, axis=0), axis=1) / dt).max())
    else:
        max_accel = 0.0
    return Metrics(min_clear, collision, path_length, steps_to_goal,
                   agreement_rms, region_hits, max_accel)
