"""Declarative scenario catalog.

Each scenario fixes a world, a scripted operator, route hypothesis sets for
the operator and the autonomy, and a channel configuration.  Geometry values
are invented to reproduce each situation's topology and then frozen; golden
serializations pin them so benchmark numbers stay comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelConfig
from .control import Command
from .errors import CodedError
from .gp import KernelParams
from .joint import InteractionParams
from .world import Obstacle, WorldState

SCHEMA_VERSION = "scenario-schema-v1"


@dataclass(frozen=True)
class Route:
    """One route hypothesis: a polyline from the scene start toward a goal.

    A ``hold`` route has no waypoints; its goal is wherever the agent
    currently is (a stay-in-place mode).
    """

    label: str
    prior_weight: float
    waypoints: tuple = ()  # polyline including the start point
    speed: float = 2.0
    hold: bool = False

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(tuple(w) for w in self.waypoints))
        if not self.hold and len(self.waypoints) < 2:
            raise CodedError("bad-route", f"route {self.label!r} needs >= 2 waypoints")

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "prior_weight": self.prior_weight,
            "waypoints": [list(w) for w in self.waypoints],
            "speed": self.speed,
            "hold": self.hold,
        }

    @staticmethod
    def from_json(d: dict) -> "Route":
        return Route(d["label"], d["prior_weight"], tuple(tuple(w) for w in d["waypoints"]),
                     d.get("speed", 2.0), d.get("hold", False))


OFF_ROUTE_DIST = 1.0  # meters; beyond this, aim at the next vertex instead


def route_progress(polyline, pos):
    """Nearest projection of ``pos`` onto the polyline.

    Returns (arc position of the projection, distance to it, cumulative arc
    lengths of the vertices)."""
    pts = [np.asarray(p, dtype=float) for p in polyline]
    pos = np.asarray(pos, dtype=float)
    if len(pts) == 1:
        return 0.0, float(np.linalg.norm(pos - pts[0])), np.array([0.0])
    segs = [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    arc0 = np.concatenate([[0.0], np.cumsum([np.linalg.norm(b - a) for a, b in segs])])
    best = (np.inf, 0.0)  # (distance, arc position); ties -> later arc
    for i, (a, b) in enumerate(segs):
        ab = b - a
        L2 = float(ab @ ab)
        t = 0.0 if L2 == 0 else float(np.clip((pos - a) @ ab / L2, 0.0, 1.0))
        proj = a + t * ab
        d = float(np.linalg.norm(pos - proj))
        arc = arc0[i] + t * np.sqrt(L2)
        if d < best[0] - 1e-9 or (abs(d - best[0]) <= 1e-9 and arc > best[1]):
            best = (d, arc)
    return best[1], best[0], arc0


def point_at_arc(polyline, arc0, target_arc: float) -> np.ndarray:
    pts = [np.asarray(p, dtype=float) for p in polyline]
    if len(pts) == 1:
        return pts[0]
    target_arc = min(max(target_arc, 0.0), arc0[-1])
    i = int(np.searchsorted(arc0, target_arc, side="right")) - 1
    i = min(max(i, 0), len(pts) - 2)
    seg_len = arc0[i + 1] - arc0[i]
    t = 0.0 if seg_len == 0 else (target_arc - arc0[i]) / seg_len
    return pts[i] + t * (pts[i + 1] - pts[i])


def route_target(polyline, pos, lookahead: float):
    """Tracking target on a route polyline.

    On the route: pure pursuit (the point ``lookahead`` meters past the
    nearest projection), which keeps commands continuous.  Far off the route:
    the next un-passed vertex, so a displaced follower still heads forward
    rather than sideways at its projection.  Returns (target, arc advance to
    the route end).
    """
    arc, dist, arc0 = route_progress(polyline, pos)
    remaining = float(arc0[-1] - arc)
    if dist > OFF_ROUTE_DIST:
        pts = [np.asarray(p, dtype=float) for p in polyline]
        for i in range(1, len(pts)):
            if arc0[i] > arc + 1e-9:
                return pts[i], float(arc0[-1] - arc0[i - 1])
        return pts[-1], 0.0
    return point_at_arc(polyline, arc0, arc + lookahead), remaining


OPERATOR_RULES = ("head-to-waypoint", "silent-after", "startle-at", "merge-cue-at")


@dataclass(frozen=True)
class OperatorScript:
    """Ground-truth operator: a fixed intended route plus an input rule."""

    intent_mode: str
    waypoints: tuple  # intended polyline including start
    rule: str = "head-to-waypoint"
    rule_step: int = 0
    rule_command: tuple = (0.0, 0.0)
    rule_duration: int = 0

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(tuple(w) for w in self.waypoints))
        if self.rule not in OPERATOR_RULES:
            raise CodedError("bad-operator-rule", f"{self.rule!r}; valid: {OPERATOR_RULES}")

    def to_json(self) -> dict:
        return {
            "intent_mode": self.intent_mode,
            "waypoints": [list(w) for w in self.waypoints],
            "rule": self.rule,
            "rule_step": self.rule_step,
            "rule_command": list(self.rule_command),
            "rule_duration": self.rule_duration,
        }

    @staticmethod
    def from_json(d: dict) -> "OperatorScript":
        return OperatorScript(d["intent_mode"], tuple(tuple(w) for w in d["waypoints"]),
                              d.get("rule", "head-to-waypoint"), d.get("rule_step", 0),
                              tuple(d.get("rule_command", (0.0, 0.0))), d.get("rule_duration", 0))


def scripted_operator_input(script: OperatorScript, world: WorldState, step: int,
                            speed: float, lookahead: float = 1.5):
    """Operator command at ``step`` (None when the operator is silent)."""
    if script.rule == "silent-after" and step > script.rule_step:
        return None
    if script.rule == "merge-cue-at" and step < script.rule_step:
        return None
    if script.rule == "startle-at" and script.rule_step <= step < script.rule_step + script.rule_duration:
        return Command(*script.rule_command)
    target, _ = route_target(script.waypoints, world.robot(), lookahead)
    d = target - world.robot()
    dist = float(np.linalg.norm(d))
    if dist < 1e-9:
        return Command.zero()
    return Command.from_array(d / dist * speed)


@dataclass(frozen=True)
class ScenarioSpec:
    sid: str
    world: WorldState
    operator_script: OperatorScript
    operator_routes: tuple
    autonomy_routes: tuple
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    kernel: KernelParams = field(default_factory=lambda: KernelParams(1.5, 4.0, 0.01))
    interaction: InteractionParams = field(default_factory=InteractionParams)
    gains: tuple = (0.5, 0.5)
    safeguard_margin: float = 0.5
    staleness_tau: float = 1.0
    max_steps: int = 600
    goal_radius: float = 0.3
    dt: float = 0.1
    horizon_steps: int = 40
    v_max: float = 2.0
    operator_speed: float = 2.0
    lookahead: float = 1.5
    obs_window: int = 6
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "operator_routes", tuple(self.operator_routes))
        object.__setattr__(self, "autonomy_routes", tuple(self.autonomy_routes))
        for routes, who in ((self.operator_routes, "operator"), (self.autonomy_routes, "autonomy")):
            if not routes:
                raise CodedError("bad-scenario", f"{who} needs at least one route")
            total = sum(r.prior_weight for r in routes)
            if abs(total - 1.0) > 1e-9:
                raise CodedError("bad-scenario", f"{who} priors sum to {total}, not 1")

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "sid": self.sid,
            "world": self.world.to_json(),
            "operator_script": self.operator_script.to_json(),
            "operator_routes": [r.to_json() for r in self.operator_routes],
            "autonomy_routes": [r.to_json() for r in self.autonomy_routes],
            "channel": self.channel.to_json(),
            "kernel": self.kernel.to_json(),
            "interaction": self.interaction.to_json(),
            "gains": list(self.gains),
            "safeguard_margin": self.safeguard_margin,
            "staleness_tau": self.staleness_tau,
            "max_steps": self.max_steps,
            "goal_radius": self.goal_radius,
            "dt": self.dt,
            "horizon_steps": self.horizon_steps,
            "v_max": self.v_max,
            "operator_speed": self.operator_speed,
            "lookahead": self.lookahead,
            "obs_window": self.obs_window,
            "notes": self.notes,
        }

    @staticmethod
    def from_json(d: dict) -> "ScenarioSpec":
        validate_scenario(d)
        return ScenarioSpec(
            sid=d["sid"],
            world=WorldState.from_json(d["world"]),
            operator_script=OperatorScript.from_json(d["operator_script"]),
            operator_routes=tuple(Route.from_json(r) for r in d["operator_routes"]),
            autonomy_routes=tuple(Route.from_json(r) for r in d["autonomy_routes"]),
            channel=ChannelConfig.from_json(d["channel"]),
            kernel=KernelParams.from_json(d["kernel"]),
            interaction=InteractionParams.from_json(d["interaction"]),
            gains=tuple(d["gains"]),
            safeguard_margin=d["safeguard_margin"],
            staleness_tau=d["staleness_tau"],
            max_steps=d["max_steps"],
            goal_radius=d["goal_radius"],
            dt=d["dt"],
            horizon_steps=d["horizon_steps"],
            v_max=d["v_max"],
            operator_speed=d["operator_speed"],
            lookahead=d["lookahead"],
            obs_window=d["obs_window"],
            notes=d.get("notes", ""),
        )


SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": SCHEMA_VERSION,
    "type": "object",
    "required": [
        "schema", "sid", "world", "operator_script", "operator_routes", "autonomy_routes",
        "channel", "kernel", "interaction", "gains", "safeguard_margin", "staleness_tau",
        "max_steps", "goal_radius", "dt", "horizon_steps", "v_max", "operator_speed",
        "lookahead", "obs_window",
    ],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "sid": {"type": "string", "minLength": 1},
        "world": {
            "type": "object",
            "required": ["time_step", "robot_position", "robot_radius", "obstacles", "goal"],
            "properties": {
                "time_step": {"type": "integer", "minimum": 0},
                "robot_position": {"$ref": "#/$defs/vec2"},
                "robot_radius": {"type": "number", "exclusiveMinimum": 0},
                "goal": {"$ref": "#/$defs/vec2"},
                "obstacles": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["oid", "position", "radius"],
                        "properties": {
                            "oid": {"type": "string"},
                            "position": {"$ref": "#/$defs/vec2"},
                            "radius": {"type": "number", "exclusiveMinimum": 0},
                            "velocity": {"$ref": "#/$defs/vec2"},
                            "reveal_step": {"type": "integer", "minimum": 0},
                        },
                    },
                },
                "regions": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "prefixItems": [{"type": "string"}, {"$ref": "#/$defs/rect"}],
                    },
                },
            },
        },
        "operator_script": {
            "type": "object",
            "required": ["intent_mode", "waypoints", "rule"],
            "properties": {"rule": {"enum": list(OPERATOR_RULES)}},
        },
        "operator_routes": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/route"}},
        "autonomy_routes": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/route"}},
        "channel": {
            "type": "object",
            "required": ["drop_probability", "lag_steps", "noise_std", "seed"],
            "properties": {
                "drop_probability": {"type": "number", "minimum": 0, "maximum": 1},
                "lag_steps": {"type": "integer", "minimum": 0},
                "noise_std": {"type": "number", "minimum": 0},
            },
        },
        "kernel": {
            "type": "object",
            "required": ["length_scale", "signal_variance", "noise_variance"],
            "properties": {
                "length_scale": {"type": "number", "exclusiveMinimum": 0},
                "signal_variance": {"type": "number", "exclusiveMinimum": 0},
                "noise_variance": {"type": "number", "minimum": 0},
            },
        },
        "interaction": {
            "type": "object",
            "required": ["safety_strength", "safety_scale", "agreement_scale"],
            "properties": {
                "safety_strength": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "safety_scale": {"type": "number", "exclusiveMinimum": 0},
                "agreement_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "gains": {"type": "array", "prefixItems": [{"type": "number"}, {"type": "number"}]},
        "safeguard_margin": {"type": "number", "minimum": 0},
        "staleness_tau": {"type": "number", "exclusiveMinimum": 0},
        "max_steps": {"type": "integer", "minimum": 1},
        "goal_radius": {"type": "number", "exclusiveMinimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "horizon_steps": {"type": "integer", "minimum": 2},
        "v_max": {"type": "number", "exclusiveMinimum": 0},
        "operator_speed": {"type": "number", "exclusiveMinimum": 0},
        "lookahead": {"type": "number", "exclusiveMinimum": 0},
        "obs_window": {"type": "integer", "minimum": 1},
    },
    "$defs": {
        "vec2": {
            "type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"},
        },
        "rect": {
            "type": "array", "minItems": 4, "maxItems": 4, "items": {"type": "number"},
        },
        "route": {
            "type": "object",
            "required": ["label", "prior_weight"],
            "properties": {
                "label": {"type": "string"},
                "prior_weight": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "waypoints": {"type": "array", "items": {"$ref": "#/$defs/vec2"}},
                "hold": {"type": "boolean"},
            },
        },
    },
}


def validate_scenario(d: dict):
    """Validate a scenario JSON document against scenario-schema-v1."""
    import jsonschema

    try:
        jsonschema.validate(d, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as e:
        raise CodedError("bad-scenario", e.message) from e


# ---------------------------------------------------------------------------
# Catalog builders.  All coordinates in meters, steps at dt = 0.1 s.
# ---------------------------------------------------------------------------


def _multimodal_corridor() -> ScenarioSpec:
    """Two routes around a central obstacle band; operator committed to the left
    one, autonomy mildly preferring the right.  A 50/50 blend drives straight
    into the band."""
    start = (0.0, 0.0)
    goal = (0.0, 9.0)
    band = [
        Obstacle(f"band{3 * j + i}", (-1.0 + 1.0 * i, 3.2 + 1.0 * j), 0.6)
        for j in range(3) for i in range(3)
    ]
    left = ((0.0, 0.0), (-3.0, 4.2), (0.0, 9.0))
    right = ((0.0, 0.0), (3.0, 4.2), (0.0, 9.0))
    return ScenarioSpec(
        sid="multimodal-corridor",
        world=WorldState(0, start, 0.3, tuple(band), goal, bounds=(-5, -1, 5, 10)),
        operator_script=OperatorScript("left", left),
        operator_routes=(Route("left", 0.5, left), Route("right", 0.5, right)),
        autonomy_routes=(Route("left", 0.4, left), Route("right", 0.6, right)),
        channel=ChannelConfig(),
        interaction=InteractionParams(0.9, 0.45, 1.0, True, True),
        max_steps=300,
        notes="central band forces the 0.5/0.5 blend of left and right routes into a collision",
    )


def _lossy_surveillance() -> ScenarioSpec:
    """Operator wants to overfly a surveillance area off the direct path;
    70% of inputs are dropped.  The autonomy's preferred route is the direct
    right-hand one."""
    start = (0.0, 0.0)
    goal = (0.0, 10.0)
    surveil = ((0.0, 0.0), (-3.0, 4.5), (0.0, 10.0))
    direct = ((0.0, 0.0), (1.8, 5.0), (0.0, 10.0))
    return ScenarioSpec(
        sid="lossy-surveillance",
        world=WorldState(0, start, 0.3, (), goal, bounds=(-5, -1, 5, 11),
                         regions=(("surveillance", (-4.2, 3.4, -2.2, 5.6)),)),
        operator_script=OperatorScript("surveil", surveil),
        operator_routes=(Route("surveil", 0.5, surveil), Route("direct", 0.5, direct)),
        autonomy_routes=(Route("surveil", 0.2, surveil), Route("direct", 0.8, direct)),
        channel=ChannelConfig(drop_probability=0.7),
        max_steps=300,
        notes="drop rate chosen so the blended controller misses the area on nearly all seeds",
    )


def _laggy_occlusion() -> ScenarioSpec:
    """The operator saw the middle passage closing and steered right at t-1;
    that input arrives 1 s late, then communications drop.  The closing
    obstacles stay occluded until the reveal step."""
    start = (0.0, 0.0)
    goal = (0.0, 10.0)
    posts = (
        Obstacle("post_l", (-1.2, 6.5), 0.4),
        Obstacle("post_r", (1.2, 6.5), 0.4),
    )
    # the closers converge on the centerline and park just short of the goal,
    # keeping the middle passage shut for the remainder of the run
    closers = (
        Obstacle("close_l", (-1.0, 9.3), 0.4, velocity=(0.13, -0.22), reveal_step=25,
                 script=((50, (0.0, 0.0)),)),
        Obstacle("close_r", (1.0, 9.3), 0.4, velocity=(-0.13, -0.22), reveal_step=25,
                 script=((50, (0.0, 0.0)),)),
    )
    middle = ((0.0, 0.0), (0.0, 5.0), (0.0, 10.0))
    # a densely sampled arc: route following stays low-jerk along it
    right = tuple((3.0 * float(np.sin(np.pi * y / 10.0)), y) for y in np.arange(0.0, 10.1, 1.25))
    return ScenarioSpec(
        sid="laggy-occlusion",
        world=WorldState(0, start, 0.3, posts + closers, goal, bounds=(-5, -1, 5, 11)),
        operator_script=OperatorScript("right", right, rule="silent-after", rule_step=8),
        operator_routes=(Route("middle", 0.25, middle), Route("right", 0.75, right)),
        autonomy_routes=(Route("middle", 0.75, middle), Route("right", 0.25, right)),
        channel=ChannelConfig(lag_steps=20),
        interaction=InteractionParams(0.9, 0.5, 1.0, True, True),
        max_steps=300,
        notes="reveal forces the blended controller's evasive snap; the joint controller is already right",
    )


def _distracted_operator() -> ScenarioSpec:
    """The operator does not see the obstacle dead ahead and commands straight
    through it; the autonomy's routes go around."""
    start = (0.0, 0.0)
    goal = (0.0, 8.0)
    rock = (Obstacle("rock", (0.0, 4.0), 1.0),)
    straight = ((0.0, 0.0), (0.0, 8.0))
    left = ((0.0, 0.0), (-2.3, 4.0), (0.0, 8.0))
    right = ((0.0, 0.0), (2.3, 4.0), (0.0, 8.0))
    return ScenarioSpec(
        sid="distracted-operator",
        world=WorldState(0, start, 0.3, rock, goal, bounds=(-5, -1, 5, 9)),
        operator_script=OperatorScript("straight", straight),
        operator_routes=(Route("straight", 1.0, straight),),
        autonomy_routes=(Route("left", 0.5, left), Route("right", 0.5, right)),
        channel=ChannelConfig(),
        safeguard_margin=0.3,
        max_steps=300,
        notes="plain blending drags the detour back into the rock; the safeguard falls back to the detour",
    )


def _elevator_crowd() -> ScenarioSpec:
    """A crowd blocks the hallway to the service elevator; at the scripted step
    it parts, leaving a gap wide enough to drive but narrower than the
    collision safeguard demands."""
    start = (0.0, 0.0)
    goal = (0.0, 9.0)
    disperse = 45
    crowd = []
    for i, x in enumerate((-2.25, -1.35, -0.45, 0.45, 1.35, 2.25)):
        vx = 0.8 if x >= 0 else -0.8
        crowd.append(Obstacle(f"ped_a{i}", (x, 4.4), 0.45,
                              script=((disperse, (vx, 0.0)), (disperse + 25, (0.0, 0.0)))))
    for i, x in enumerate((-1.8, -0.9, 0.0, 0.9, 1.8)):
        vx = 0.8 if x >= 0 else -0.8
        crowd.append(Obstacle(f"ped_b{i}", (x, 5.2), 0.45,
                              script=((disperse, (vx, 0.0)), (disperse + 25, (0.0, 0.0)))))
    walls = [Obstacle(f"wall_l{i}", (-4.5, 1.0 + i), 0.5) for i in range(8)]
    walls += [Obstacle(f"wall_r{i}", (4.5, 1.0 + i), 0.5) for i in range(8)]
    straight = ((0.0, 0.0), (0.0, 9.0))
    return ScenarioSpec(
        sid="elevator-crowd",
        world=WorldState(0, start, 0.3, tuple(crowd + walls), goal, bounds=(-5, -1, 5, 10),
                         regions=(("crowd", (-3.0, 3.8, 3.0, 5.8)),)),
        operator_script=OperatorScript("through", straight),
        operator_routes=(Route("through", 0.7, straight), Route("hold", 0.3, hold=True)),
        autonomy_routes=(Route("through", 0.5, straight), Route("hold", 0.5, hold=True)),
        channel=ChannelConfig(),
        interaction=InteractionParams(0.995, 0.7, 3.5, True, True),
        safeguard_margin=1.5,
        max_steps=400,
        notes="post-dispersal gap clears by ~1.25 m, below the 1.5 m safeguard margin",
    )


def _startled_driver() -> ScenarioSpec:
    """Safe cruise toward an intersection; the startled operator jerks the
    wheel toward the oncoming lane for one second."""
    start = (0.0, 0.0)
    goal = (0.0, 10.0)
    oncoming = (
        Obstacle("car0", (-2.0, 9.0), 0.5, velocity=(0.0, -1.5)),
        Obstacle("car1", (-2.0, 4.0), 0.5, velocity=(0.0, -1.5)),
    )
    ahead = ((0.0, 0.0), (0.0, 10.0))
    across = ((0.0, 0.0), (-3.0, 5.0))
    return ScenarioSpec(
        sid="startled-driver",
        world=WorldState(0, start, 0.3, oncoming, goal, bounds=(-5, -1, 5, 11),
                         regions=(("oncoming-lane", (-4.0, 0.0, -0.7, 10.0)),)),
        operator_script=OperatorScript("ahead", ahead, rule="startle-at", rule_step=40,
                                       rule_command=(-2.0, 0.0), rule_duration=10),
        operator_routes=(Route("ahead", 0.6, ahead), Route("across", 0.4, across)),
        autonomy_routes=(Route("ahead", 1.0, ahead),),
        channel=ChannelConfig(),
        max_steps=300,
        notes="the autonomy has no mode crossing the centerline, so the jerk cannot drag it over",
    )


def _traffic_merge() -> ScenarioSpec:
    """Merge into a stream of traffic.  The stream is too tight to enter except
    for one larger gap; the operator signals when to take it."""
    start = (0.0, 0.0)
    goal = (2.0, 6.0)
    speed = 1.2
    # one 4.8 m gap in an otherwise 2 m-headway stream; the tail is long enough
    # that the lane never empties within max_steps
    ys = [6.0 - 2.0 * i for i in range(5)] + [-6.8 - 2.0 * i for i in range(21)]
    cars = [Obstacle(f"car{i}", (2.0, y), 0.5, velocity=(0.0, speed)) for i, y in enumerate(ys)]
    # the merge route rides the lane at near-traffic speed and extends well
    # past the goal so its nominal plan never parks in front of the stream
    merge = ((0.0, 0.0), (0.0, 0.8), (2.0, 2.6), (2.0, 16.0))
    return ScenarioSpec(
        sid="traffic-merge",
        world=WorldState(0, start, 0.3, tuple(cars), goal, bounds=(-2, -48, 5, 12),
                         regions=(("merge-lane", (1.2, -1.0, 2.8, 11.0)),)),
        operator_script=OperatorScript("merge", merge, rule="merge-cue-at", rule_step=30),
        operator_routes=(Route("merge", 0.4, merge, speed=1.3), Route("hold", 0.6, hold=True)),
        autonomy_routes=(Route("merge", 0.3, merge, speed=1.3), Route("hold", 0.7, hold=True)),
        channel=ChannelConfig(),
        interaction=InteractionParams(0.995, 0.7, 3.5, True, True),
        safeguard_margin=1.8,
        max_steps=400,
        notes="the stream's regular 2 m headways are undrivable; one 4.8 m gap is",
    )


def _two_mode_autopilot() -> ScenarioSpec:
    """Two nearly equivalent autonomy routes, the right slightly safer; the
    operator clearly wants the left one."""
    start = (0.0, 0.0)
    goal = (0.0, 9.0)
    band = (Obstacle("mid0", (0.0, 4.4), 0.6), Obstacle("mid1", (0.0, 5.4), 0.6))
    left = ((0.0, 0.0), (-1.8, 4.9), (0.0, 9.0))
    right = ((0.0, 0.0), (1.8, 4.9), (0.0, 9.0))
    return ScenarioSpec(
        sid="two-mode-autopilot",
        world=WorldState(0, start, 0.3, band, goal, bounds=(-5, -1, 5, 10)),
        operator_script=OperatorScript("left", left),
        operator_routes=(Route("left", 0.5, left), Route("right", 0.5, right)),
        autonomy_routes=(Route("left", 0.45, left), Route("right", 0.55, right)),
        channel=ChannelConfig(),
        max_steps=300,
        notes="the joint controller blends over the slightly suboptimal left route the operator wants",
    )


_CATALOG = {
    "multimodal-corridor": _multimodal_corridor,
    "lossy-surveillance": _lossy_surveillance,
    "laggy-occlusion": _laggy_occlusion,
    "distracted-operator": _distracted_operator,
    "elevator-crowd": _elevator_crowd,
    "startled-driver": _startled_driver,
    "traffic-merge": _traffic_merge,
    "two-mode-autopilot": _two_mode_autopilot,
}


def scenario_ids():
    return tuple(_CATALOG)


def build_scenario(sid: str) -> ScenarioSpec:
    """Return the fixed, versioned spec for a catalog id."""
    if sid not in _CATALOG:
        raise CodedError("unknown-scenario", f"{sid!r}; valid ids: {', '.join(_CATALOG)}")
    spec = _CATALOG[sid]()
    assert spec.sid == sid
    return spec


def load_scenario(path) -> ScenarioSpec:
    """Load and validate a user-authored scenario file."""
    import json

    with open(path) as f:
        d = json.load(f)
    return ScenarioSpec.from_json(d)


def reseed_channel(spec: ScenarioSpec, run_seed: int) -> ScenarioSpec:
    """Fold the run seed into the channel seed so channel noise varies per run."""
    mixed = (spec.channel.seed * 1000003 + run_seed) & 0x7FFFFFFF
    return replace(spec, channel=replace(spec.channel, seed=mixed))
