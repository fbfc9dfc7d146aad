"""The experiment loop: scripted operator -> channel -> models -> controller -> world.

Every controller kind consumes the same per-step model rebuild, so the
benchmarks and the live teleop session share one code path.  A run is fully
deterministic given (spec, controller, seed): the seed only feeds the channel
and the sampling-based inference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import TimedInput, staleness_noise_scale, staleness_weight, transmit
from .control import (
    BlendGains,
    Command,
    ControllerConfig,
    linear_blend,
    safeguarded_blend,
    switching_control,
    csc_step,
)
from .gp import (
    ModeHypothesis,
    MultimodalTrajectoryDistribution,
    ObservationSet,
    TrajectorySample,
    build_mixture,
    fit_gp_posterior,
    mode_weights,
    most_likely_mode,
)
from .joint import InteractionParams, JointModel, agreement_coupling, safety_coupling
from .scenarios import (
    ScenarioSpec,
    Route,
    point_at_arc,
    reseed_channel,
    route_progress,
    route_target,
    scripted_operator_input,
)
from .world import Metrics, StepRecord, Trace, WorldState, collision_check, compute_metrics, step_world

# Operator inputs are interpreted as short-horizon pointers: a command held
# for POINTER_LEAD seconds from where the robot was when it was issued.
POINTER_LEAD = 0.95
GOAL_LOOKAHEAD = 3.0  # meters along the route polyline for hypothesis goals
ENGAGE_WINDOW = 0.25  # seconds: switching control counts the human as engaged
SWITCH_ENGAGED_AGE = ENGAGE_WINDOW


@dataclass
class ModelSet:
    """Per-step rebuilt beliefs over all agents."""

    operator: MultimodalTrajectoryDistribution
    autonomy: MultimodalTrajectoryDistribution
    env_dists: list
    env_means: np.ndarray  # (m, T, 2); empty -> (0, T, 2)
    env_radii: np.ndarray  # (m,)
    grid: np.ndarray


def _route_goal(route: Route, robot: np.ndarray, t_now: float):
    """Current goal point and arrival time for a route hypothesis."""
    if route.hold:
        return tuple(robot), t_now + 1.0
    target, _ = route_target(route.waypoints, robot, GOAL_LOOKAHEAD)
    dist = float(np.linalg.norm(target - robot))
    return tuple(target), t_now + max(dist / route.speed, 0.5)


def _hypotheses(routes, robot: np.ndarray, t_now: float):
    hyps, times = [], []
    for r in routes:
        goal, gt = _route_goal(r, robot, t_now)
        hyps.append(ModeHypothesis(goal, r.prior_weight, r.label))
        times.append(gt)
    return hyps, np.array(times)


# Arc distances (meters past the current route progress) of the pseudo
# observations that anchor each mode's posterior mean to its polyline.
PSEUDO_ARCS = (2.0, 4.0, 6.5)


def _route_pseudo_obs(route: Route, robot: np.ndarray, t_now: float):
    """Pseudo observations pinning a route mode's GP mean to the polyline."""
    if route.hold:
        return [(t_now + 1.0, np.asarray(robot, dtype=float), 1.0),
                (t_now + 3.0, np.asarray(robot, dtype=float), 1.0)]
    arc, _, arc0 = route_progress(route.waypoints, robot)
    out, last_t = [], t_now + POINTER_LEAD + 0.2
    for a in PSEUDO_ARCS:
        eff = min(a, max(float(arc0[-1]) - arc, 0.0))
        t = max(t_now + eff / route.speed, last_t + 0.2)
        out.append((t, point_at_arc(route.waypoints, arc0, arc + eff), 1.0))
        last_t = t
    return out


def _nominal_path(route: Route, robot, t_now: float, grid: np.ndarray) -> np.ndarray:
    """The route's own plan: along-polyline motion at route speed from the
    robot's current arc progress.  Deliberately ignores how far the robot has
    been dragged off the polyline."""
    if route.hold:
        return np.tile(np.asarray(robot, dtype=float), (len(grid), 1))
    arc, _, arc0 = route_progress(route.waypoints, robot)
    return np.array([
        point_at_arc(route.waypoints, arc0, arc + route.speed * (t - t_now)) for t in grid
    ])


def _route_mixture(obs: ObservationSet, routes, robot, t_now, kernel, grid,
                   goal_times, weights=None, goal_noise_scale=1.0, weight_obs=None):
    """Mixture whose mode means follow the route polylines.

    Weights come from the usual goal-hypothesis evidence (or are given);
    posteriors are fit on the data plus per-route pseudo observations so the
    extrapolated means bend along each polyline instead of running straight.
    ``weight_obs`` evaluates the evidence on a different observation set than
    the one the posteriors condition on."""
    hyps = tuple(ModeHypothesis(tuple(_route_goal(r, robot, t_now)[0]), r.prior_weight, r.label)
                 for r in routes)
    if weights is None:
        weights, _ = mode_weights(weight_obs if weight_obs is not None else obs,
                                  hyps, kernel, goal_times=goal_times,
                                  goal_noise_scale=goal_noise_scale)
    posteriors = []
    for r in routes:
        samples = list(zip(obs.times, obs.positions, obs.noise_scales))
        samples += _route_pseudo_obs(r, robot, t_now)
        conditioned = ObservationSet.from_samples(obs.agent_id, samples)
        posteriors.append(fit_gp_posterior(conditioned, kernel, grid))
    return MultimodalTrajectoryDistribution(weights, posteriors, hyps)


class Runner:
    """Mutable run state; drives one scenario rollout step by step."""

    def __init__(self, spec: ScenarioSpec, controller: ControllerConfig, seed: int):
        self.spec = reseed_channel(spec, seed)
        self.controller = controller
        self.seed = seed
        self.world = spec.world
        self.dt = spec.dt
        self.T = spec.horizon_steps
        self.robot_hist: list = []  # (time, position)
        self.pointer_obs: list = []  # (time, position, noise_scale)
        self.pending: list = []  # (delivered_step, issued_step, noisy Command)
        self.last_delivered = None  # (issued_step, Command)
        self.obstacle_hist: dict = {}  # oid -> list of (time, position)
        self.records: list = []
        self.terminated = None

    # -- observation bookkeeping ------------------------------------------

    def _observe(self):
        t_now = self.world.time_step * self.dt
        self.robot_hist.append((t_now, self.world.robot().copy()))
        for o in self.world.obstacles:
            if o.visible_at(self.world.time_step):
                self.obstacle_hist.setdefault(o.oid, []).append(
                    (t_now, np.asarray(o.position, dtype=float))
                )

    def _deliver(self, raw: Command | None):
        """Push this step's raw input through the channel; collect deliveries."""
        step = self.world.time_step
        delivered_now = None
        if raw is not None:
            res = transmit(TimedInput(step, raw), self.spec.channel)
            if res is not None:
                self.pending.append((res[0], step, res[2]))
        still = []
        for dstep, istep, cmd in self.pending:
            if dstep <= step:
                delivered_now = cmd
                self.last_delivered = (istep, cmd)
                age = (dstep - istep) * self.dt
                scale = staleness_noise_scale(age, self.spec.staleness_tau)
                t_issue = istep * self.dt
                base = self._robot_at(istep)
                pos = base + cmd.as_array() * POINTER_LEAD
                self.pointer_obs.append((t_issue + POINTER_LEAD, pos, scale))
            else:
                still.append((dstep, istep, cmd))
        self.pending = still
        return delivered_now

    def _robot_at(self, step: int) -> np.ndarray:
        i = min(max(step, 0), len(self.robot_hist) - 1)
        return self.robot_hist[i][1]

    # -- model construction ------------------------------------------------

    @staticmethod
    def _dedup(entries):
        entries = sorted(entries, key=lambda e: e[0])
        out = [entries[0]]
        for e in entries[1:]:
            if e[0] > out[-1][0] + 1e-9:
                out.append(e)
        return out

    def _operator_obs(self, t_now: float) -> ObservationSet:
        """Pointer observations plus a robot-state anchor (pins the mean)."""
        entries = list(self.pointer_obs[-self.spec.obs_window:])
        entries.append((t_now, self.world.robot(), 1.0))
        return ObservationSet.from_samples("operator", self._dedup(entries))

    def _operator_weight_obs(self, t_now: float) -> ObservationSet:
        """Pointers only: intent evidence must not include the robot's own
        (autonomy-steered) position, or the inference chases the robot."""
        entries = list(self.pointer_obs[-self.spec.obs_window:])
        if not entries:
            return self._operator_obs(t_now)
        return ObservationSet.from_samples("operator", self._dedup(entries))

    def _autonomy_obs(self, t_now: float) -> ObservationSet:
        hist = self.robot_hist[-self.spec.obs_window:]
        return ObservationSet.from_samples("autonomy", [(t, p, 1.0) for t, p in hist])

    def build_models(self) -> ModelSet:
        spec = self.spec
        t_now = self.world.time_step * self.dt
        grid = t_now + self.dt * np.arange(self.T)
        robot = self.world.robot()

        # environment: one unimodal GP per visible obstacle
        env_dists, env_means, env_radii = [], [], []
        for o in self.world.visible_obstacles():
            if not o.script and tuple(o.velocity) == (0.0, 0.0):
                from .gp import GPosterior

                mean = np.tile(np.asarray(o.position, dtype=float), (self.T, 1))
                post = GPosterior(grid, mean, np.zeros((self.T, 2)))
                dist = MultimodalTrajectoryDistribution(
                    [1.0], [post], (ModeHypothesis(tuple(o.position), 1.0, o.oid),)
                )
            else:
                hist = self.obstacle_hist.get(o.oid, [])[-spec.obs_window:]
                if not hist:
                    hist = [(t_now, np.asarray(o.position, dtype=float))]
                obs = ObservationSet.from_samples(o.oid, [(t, p, 1.0) for t, p in hist])
                hyp = ModeHypothesis(tuple(hist[-1][1]), 1.0, o.oid)
                post = fit_gp_posterior(obs, spec.kernel, grid)
                dist = MultimodalTrajectoryDistribution([1.0], [post], (hyp,))
            env_dists.append(dist)
            env_means.append(dist.posteriors[0].mean)
            env_radii.append(o.radius)
        env_means = np.stack(env_means) if env_means else np.zeros((0, self.T, 2))
        env_radii = np.asarray(env_radii, dtype=float)

        # operator mixture: pointer observations + goal hypotheses
        _, op_times = _hypotheses(spec.operator_routes, robot, t_now)
        op_obs = self._operator_obs(t_now)
        operator = _route_mixture(op_obs, spec.operator_routes, robot, t_now,
                                  spec.kernel, grid, goal_times=op_times,
                                  weight_obs=self._operator_weight_obs(t_now))

        # autonomy mixture: the robot's own plan; weights are route priors
        # reweighted by predicted safety against the environment means
        _, aut_times = _hypotheses(spec.autonomy_routes, robot, t_now)
        aut_obs = self._autonomy_obs(t_now)
        priors = np.array([r.prior_weight for r in spec.autonomy_routes])
        autonomy = _route_mixture(aut_obs, spec.autonomy_routes, robot, t_now,
                                  spec.kernel, grid, goal_times=aut_times,
                                  weights=priors / priors.sum())
        if spec.interaction.safety_enabled and len(env_radii):
            env_samples = [TrajectorySample(m, self.dt) for m in env_means]
            # judged on each route's nominal plan, not the dragged-robot mean:
            # the autonomy keeps backing its plan while the plan itself is safe
            logs = np.array([
                safety_coupling(TrajectorySample(_nominal_path(r, robot, t_now, grid), self.dt),
                                env_samples,
                                spec.interaction.safety_strength, spec.interaction.safety_scale)
                for r in spec.autonomy_routes
            ])
            w = priors * np.exp(logs - logs.max())
            if w.sum() > 0:
                autonomy = MultimodalTrajectoryDistribution(
                    w / w.sum(), autonomy.posteriors, autonomy.hypotheses)
        return ModelSet(operator, autonomy, env_dists, env_means, env_radii, grid)

    # -- controller dispatch ----------------------------------------------

    def _adjusted_gains(self) -> BlendGains:
        kh, kr = self.spec.gains
        if self.last_delivered is None:
            return BlendGains(0.0, 1.0)
        age = (self.world.time_step - self.last_delivered[0]) * self.dt
        w = staleness_weight(age, self.spec.staleness_tau)
        khw = kh * w
        return BlendGains(khw / (khw + kr), kr / (khw + kr))

    def _u_h(self) -> Command:
        if self.last_delivered is None:
            return Command.zero()
        return self.last_delivered[1].clamped(self.spec.v_max)

    # Commands read the mean's direction over a short lead rather than one
    # tick: the GP mean is anchored at the robot, so its first-step velocity
    # is smoothed toward the (possibly slow) incoming trend.
    COMMAND_LEAD = 5  # ticks

    @classmethod
    def _track(cls, mean: np.ndarray, dt: float, v_max: float) -> Command:
        k = min(cls.COMMAND_LEAD, len(mean) - 1)
        return Command.from_array((mean[k] - mean[0]) / (k * dt)).clamped(v_max)

    def _select_mode_pair(self, models: ModelSet):
        """Exhaustive MAP over the (operator mode, autonomy mode) support.

        This is map_joint in the zero-variance limit: each mode contributes its
        posterior mean path, so the argmax over mode pairs is exact and free of
        sampling jitter (the executed command must be smooth).
        """
        p = self.spec.interaction
        op, aut = models.operator, models.autonomy
        env_samples = [TrajectorySample(m, self.dt) for m in models.env_means]
        best = None
        for j, aj in enumerate(aut.posteriors):
            rob = TrajectorySample(aj.mean, self.dt)
            safety = safety_coupling(rob, env_samples, p.safety_strength, p.safety_scale) \
                if (p.safety_enabled and env_samples) else 0.0
            for i, oi in enumerate(op.posteriors):
                score = float(np.log(max(op.weights[i], 1e-300))
                              + np.log(max(aut.weights[j], 1e-300))) + safety
                if p.agreement_enabled:
                    score += agreement_coupling(rob, TrajectorySample(oi.mean, self.dt),
                                                p.agreement_scale)
                if best is None or score > best[0] + 1e-12:
                    best = (score, i, j)
        return best[1], best[2]

    def step(self):
        """Advance one tick; returns the StepRecord written for this step."""
        spec, world = self.spec, self.world
        self._observe()
        raw = scripted_operator_input(spec.operator_script, world, world.time_step,
                                      spec.operator_speed, spec.lookahead)
        delivered = self._deliver(raw)
        return self.step_with_input(raw, delivered)

    def step_with_input(self, raw: Command | None, delivered: Command | None):
        """Shared tail of a tick, also used by the live teleop session."""
        spec, world = self.spec, self.world
        models = self.build_models()
        kind = self.controller.kind
        gains = self._adjusted_gains()
        u_h = self._u_h()
        _, aut_best = most_likely_mode(models.autonomy)
        u_r = self._track(aut_best.mean, self.dt, spec.v_max)
        overrode = False
        op_label = aut_label = ""
        if kind == "linear-blend":
            u_s = linear_blend(u_h, u_r, gains, spec.v_max)
        elif kind == "switching":
            engaged = (self.last_delivered is not None and
                       (world.time_step - self.last_delivered[0]) * self.dt <= SWITCH_ENGAGED_AGE)
            u_s = switching_control(u_h, u_r, engaged, spec.v_max)
        elif kind == "safeguarded-blend":
            u_s, overrode = safeguarded_blend(
                u_h, u_r, gains, world.robot(), models.env_means, models.env_radii,
                world.robot_radius, self.controller.safeguard_margin, self.dt,
                self.T - 1, spec.v_max)
        elif kind == "csc-most-likely":
            u_s = csc_step(models.operator, models.autonomy, gains, self.dt, spec.v_max)
        elif kind == "gsc":
            i, j = self._select_mode_pair(models)
            u_s = self._track(models.autonomy.posteriors[j].mean, self.dt, spec.v_max)
            op_label = models.operator.hypotheses[i].label
            aut_label = models.autonomy.hypotheses[j].label
        else:  # pragma: no cover - ControllerConfig validates kinds
            raise AssertionError(kind)

        record = StepRecord(
            step=world.time_step,
            robot_position=tuple(world.robot_position),
            obstacle_positions=tuple(
                (o.oid, tuple(o.position), o.visible_at(world.time_step))
                for o in world.obstacles
            ),
            u_h_raw=None if raw is None else (raw.vx, raw.vy),
            u_h_delivered=None if delivered is None else (delivered.vx, delivered.vy),
            u_r=(u_r.vx, u_r.vy),
            u_s=(u_s.vx, u_s.vy),
            controller=kind,
            overrode=overrode,
            clearance=collision_check(world),
            operator_mode=op_label,
            autonomy_mode=aut_label,
            mode_summary=_mode_summary(models),
        )
        self.records.append(record)
        self.world = step_world(world, u_s, self.dt, spec.v_max)
        # terminal checks on the post-step world
        clear = collision_check(self.world)
        at_goal = float(np.linalg.norm(self.world.robot() - np.asarray(spec.world.goal))) \
            <= spec.goal_radius
        if clear < 0 or at_goal or self.world.time_step >= spec.max_steps:
            self.records.append(StepRecord(
                step=self.world.time_step,
                robot_position=tuple(self.world.robot_position),
                obstacle_positions=tuple(
                    (o.oid, tuple(o.position), o.visible_at(self.world.time_step))
                    for o in self.world.obstacles
                ),
                u_h_raw=None, u_h_delivered=None,
                u_r=(0.0, 0.0), u_s=(0.0, 0.0),
                controller=kind, overrode=False, clearance=clear,
            ))
            self.terminated = "collision" if clear < 0 else ("goal" if at_goal else "max-steps")
        return record

    def live_step(self, raw: Command | None):
        """One tick driven by an external operator (the teleop session)."""
        self._observe()
        delivered = self._deliver(raw)
        return self.step_with_input(raw, delivered)

    def run(self) -> Trace:
        while self.terminated is None:
            self.step()
        return Trace(self.records, self.terminated, self.dt)


def _mode_summary(models: ModelSet) -> dict:
    def pack(dist):
        out = []
        for w, post, hyp in zip(dist.weights, dist.posteriors, dist.hypotheses):
            pts = [[round(float(x), 3), round(float(y), 3)] for x, y in post.mean[::5]]
            out.append([hyp.label, round(float(w), 4), pts])
        return out

    return {"operator": pack(models.operator), "autonomy": pack(models.autonomy)}


def joint_model_from(models: ModelSet, params: InteractionParams) -> JointModel:
    """Expose the per-step beliefs as a JointModel (for sampling-based inference)."""
    return JointModel(models.operator, models.autonomy, tuple(models.env_dists), params)


def run_scenario(spec: ScenarioSpec, controller: ControllerConfig, seed: int = 0):
    """Execute one scenario rollout; returns (Trace, Metrics)."""
    runner = Runner(spec, controller, seed)
    trace = runner.run()
    return trace, compute_metrics(trace, spec)


def controller_config(spec: ScenarioSpec, kind: str, n_samples: int = 500) -> ControllerConfig:
    """Controller configuration for a scenario (gains/margins from the spec)."""
    return ControllerConfig(
        kind=kind,
        gains=BlendGains(*spec.gains),
        safeguard_margin=spec.safeguard_margin,
        staleness_tau=spec.staleness_tau,
        n_samples=n_samples,
        v_max=spec.v_max,
    )
