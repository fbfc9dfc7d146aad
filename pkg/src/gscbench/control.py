"""Shared-control laws.

The classical family (linear blending, switching, safeguarded blending,
most-likely-mode blending) arbitrates between one operator command and one
autonomy command.  The generalized controller takes the autonomy component of
the most likely joint hypothesis instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CodedError
from .gp import MultimodalTrajectoryDistribution, most_likely_mode
from .joint import JointHypothesis, JointModel, map_joint

CONTROLLER_KINDS = ("linear-blend", "switching", "safeguarded-blend", "csc-most-likely", "gsc")

DEFAULT_V_MAX = 2.0  # m/s


@dataclass(frozen=True)
class Command:
    """Planar velocity command, speed-clamped."""

    vx: float
    vy: float

    def __post_init__(self):
        if not (np.isfinite(self.vx) and np.isfinite(self.vy)):
            raise CodedError("bad-command", "non-finite velocity")

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy], dtype=float)

    def speed(self) -> float:
        return float(np.hypot(self.vx, self.vy))

    def clamped(self, v_max: float = DEFAULT_V_MAX) -> "Command":
        s = self.speed()
        if s <= v_max or s == 0.0:
            return self
        k = v_max / s
        return Command(self.vx * k, self.vy * k)

    @staticmethod
    def zero() -> "Command":
        return Command(0.0, 0.0)

    @staticmethod
    def from_array(a) -> "Command":
        a = np.asarray(a, dtype=float)
        return Command(float(a[0]), float(a[1]))


@dataclass(frozen=True)
class BlendGains:
    """Operator / autonomy weighting factors."""

    k_h: float
    k_r: float
    convex: bool = True  # when True, k_h + k_r must equal 1

    def __post_init__(self):
        if self.k_h < 0 or self.k_r < 0:
            raise CodedError("bad-gains", "gains must be non-negative")
        if self.convex and abs(self.k_h + self.k_r - 1.0) > 1e-9:
            raise CodedError("bad-gains", "convex gains must sum to 1")


@dataclass(frozen=True)
class ControllerConfig:
    kind: str
    gains: BlendGains = field(default_factory=lambda: BlendGains(0.5, 0.5))
    safeguard_margin: float = 0.5  # meters
    staleness_tau: float = 1.0  # seconds
    n_samples: int = 500
    v_max: float = DEFAULT_V_MAX

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise CodedError("unknown-controller", f"{self.kind!r}; valid: {CONTROLLER_KINDS}")
        if self.safeguard_margin < 0:
            raise CodedError("bad-margin", "safeguard margin must be >= 0")


def linear_blend(u_h: Command, u_r: Command, gains: BlendGains,
                 v_max: float = DEFAULT_V_MAX) -> Command:
    """K_h * u_h + K_r * u_r, speed-clamped."""
    v = gains.k_h * u_h.as_array() + gains.k_r * u_r.as_array()
    return Command.from_array(v).clamped(v_max)


def switching_control(u_h: Command, u_r: Command, human_engaged: bool,
                      v_max: float = DEFAULT_V_MAX) -> Command:
    """Full authority handoff; identical to endpoint linear blending."""
    gains = BlendGains(1.0, 0.0) if human_engaged else BlendGains(0.0, 1.0)
    return linear_blend(u_h, u_r, gains, v_max)


def rollout_clearance(start: np.ndarray, command: Command, obstacle_means, obstacle_radii,
                      robot_radius: float, dt: float, steps: int) -> float:
    """Min clearance of a constant-command rollout against predicted obstacle means.

    obstacle_means: (m, T, 2) predicted positions (T >= steps); empty -> +inf.
    """
    means = np.asarray(obstacle_means, dtype=float)
    if means.size == 0:
        return float("inf")
    radii = np.asarray(obstacle_radii, dtype=float)
    t = np.arange(1, steps + 1)[:, None] * dt
    path = np.asarray(start, dtype=float)[None, :] + t * command.as_array()[None, :]  # (steps, 2)
    d = np.linalg.norm(means[:, 1:steps + 1, :] - path[None], axis=-1)  # (m, steps)
    clear = d - radii[:, None] - robot_radius
    return float(clear.min())


def safeguarded_blend(u_h: Command, u_r: Command, gains: BlendGains, start, obstacle_means,
                      obstacle_radii, robot_radius: float, margin: float, dt: float,
                      steps: int, v_max: float = DEFAULT_V_MAX):
    """Linear blend with a collision override.

    The blended candidate is rolled forward as a constant command against the
    predicted obstacle means.  If its clearance dips below the margin, fall
    back to the autonomy command (checked the same way); if that is also
    unsafe, stop.  Returns (command, overrode).
    """
    candidate = linear_blend(u_h, u_r, gains, v_max)
    start = np.asarray(start, dtype=float)
    if rollout_clearance(start, candidate, obstacle_means, obstacle_radii,
                         robot_radius, dt, steps) >= margin:
        return candidate, False
    u_r_c = u_r.clamped(v_max)
    if rollout_clearance(start, u_r_c, obstacle_means, obstacle_radii,
                         robot_radius, dt, steps) >= margin:
        return u_r_c, True
    return Command.zero(), True


def _step1_velocity(mean: np.ndarray, dt: float, v_max: float) -> Command:
    """First-step displacement of a horizon-grid mean path, as a clamped command."""
    v = (mean[1] - mean[0]) / dt
    return Command.from_array(v).clamped(v_max)


def csc_step(operator_dist: MultimodalTrajectoryDistribution,
             autonomy_dist: MultimodalTrajectoryDistribution,
             gains: BlendGains, dt: float, v_max: float = DEFAULT_V_MAX) -> Command:
    """Blend the most likely operator future with the most likely autonomy future."""
    _, op_post = most_likely_mode(operator_dist)
    _, aut_post = most_likely_mode(autonomy_dist)
    u_h = _step1_velocity(op_post.mean, dt, v_max)
    u_r = _step1_velocity(aut_post.mean, dt, v_max)
    return linear_blend(u_h, u_r, gains, v_max)


def gsc_step(model: JointModel, n_samples: int = 500, seed: int = 0,
             v_max: float = DEFAULT_V_MAX):
    """Generalized shared control: next command of the MAP joint hypothesis.

    Returns (command, selected hypothesis) so callers can log/render the
    selected operator and autonomy futures.
    """
    hyp = map_joint(model, n_samples=n_samples, seed=seed)
    dt = hyp.autonomy_traj.dt
    cmd = _step1_velocity(hyp.autonomy_traj.positions, dt, v_max)
    return cmd, hyp
