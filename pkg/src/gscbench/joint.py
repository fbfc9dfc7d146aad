"""Joint distribution over operator, autonomy, and environment trajectories.

The joint density factorizes into per-agent mixtures times two interaction
couplings: a repulsive safety factor between the robot and each obstacle, and
an attractive agreement factor between the robot and the operator.  Inference
is sample-and-rank: draw joint candidates, score, keep the argmax.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CodedError
from .gp import (
    MultimodalTrajectoryDistribution,
    TrajectorySample,
    mixture_log_density_batch,
    sample_batch,
)

# Coupling factors are clamped here before the log so a coincident
# robot/obstacle sample ranks terribly instead of poisoning the argmax.
COUPLING_FLOOR = 1e-300


@dataclass(frozen=True)
class InteractionParams:
    """Coupling parameters of the joint density."""

    safety_strength: float = 0.9  # alpha in [0, 1)
    safety_scale: float = 0.8  # meters
    agreement_scale: float = 1.0  # meters
    agreement_enabled: bool = True
    safety_enabled: bool = True

    def __post_init__(self):
        if not (0.0 <= self.safety_strength < 1.0):
            raise CodedError("bad-interaction", "safety_strength must be in [0, 1)")
        if self.safety_scale <= 0 or self.agreement_scale <= 0:
            raise CodedError("bad-interaction", "scales must be positive")

    def to_json(self) -> dict:
        return {
            "safety_strength": self.safety_strength,
            "safety_scale": self.safety_scale,
            "agreement_scale": self.agreement_scale,
            "agreement_enabled": self.agreement_enabled,
            "safety_enabled": self.safety_enabled,
        }

    @staticmethod
    def from_json(d: dict) -> "InteractionParams":
        return InteractionParams(**d)


@dataclass(frozen=True)
class JointModel:
    operator: MultimodalTrajectoryDistribution
    autonomy: MultimodalTrajectoryDistribution
    environment: tuple  # of MultimodalTrajectoryDistribution, may be empty
    params: InteractionParams

    def __post_init__(self):
        object.__setattr__(self, "environment", tuple(self.environment))
        g = self.operator.grid
        for d in (self.autonomy, *self.environment):
            if d.grid.size != g.size or not np.allclose(d.grid, g):
                raise CodedError("grid-mismatch", "all agents must share one horizon grid")


@dataclass(frozen=True)
class JointHypothesis:
    operator_traj: TrajectorySample
    autonomy_traj: TrajectorySample
    environment_trajs: tuple
    log_score: float
    operator_mode: int = field(default=0)
    autonomy_mode: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "environment_trajs", tuple(self.environment_trajs))


def _safety_batch(robot: np.ndarray, obstacles: np.ndarray, alpha: float, h_s: float) -> np.ndarray:
    """(n,T,2) robot x (m,n,T,2) obstacles -> (n,) summed log coupling."""
    if obstacles.shape[0] == 0 or alpha == 0.0:
        return np.zeros(robot.shape[0])
    d2 = ((robot[None] - obstacles) ** 2).sum(axis=-1)  # (m, n, T)
    fac = np.clip(1.0 - alpha * np.exp(-d2 / (2.0 * h_s**2)), COUPLING_FLOOR, None)
    return np.log(fac).sum(axis=(0, 2))


def _agreement_batch(robot: np.ndarray, operator: np.ndarray, h_a: float) -> np.ndarray:
    d2 = ((robot - operator) ** 2).sum(axis=-1)  # (n, T)
    return -d2.sum(axis=1) / (2.0 * h_a**2)


def _require_shared_grid(a: TrajectorySample, b: TrajectorySample):
    if a.positions.shape[0] != b.positions.shape[0]:
        raise CodedError("grid-mismatch")


def safety_coupling(robot: TrajectorySample, obstacles, alpha: float, h_s: float) -> float:
    """log prod_t prod_i (1 - alpha exp(-||r_t - o_it||^2 / 2 h_s^2)); <= 0."""
    obstacles = list(obstacles)
    for o in obstacles:
        _require_shared_grid(robot, o)
    if not obstacles:
        return 0.0
    obs = np.stack([o.positions for o in obstacles])
    return float(_safety_batch(robot.positions[None], obs[:, None], alpha, h_s)[0])


def agreement_coupling(robot: TrajectorySample, operator: TrajectorySample, h_a: float) -> float:
    """-sum_t ||r_t - h_t||^2 / (2 h_a^2); <= 0."""
    _require_shared_grid(robot, operator)
    return float(_agreement_batch(robot.positions[None], operator.positions[None], h_a)[0])


def _score_batch(
    model: JointModel,
    op: np.ndarray,  # (n, T, 2)
    rob: np.ndarray,
    envs: list,  # list of (n, T, 2)
) -> np.ndarray:
    score = mixture_log_density_batch(model.operator, op)
    score = score + mixture_log_density_batch(model.autonomy, rob)
    for dist, tr in zip(model.environment, envs):
        score = score + mixture_log_density_batch(dist, tr)
    p = model.params
    if p.safety_enabled and envs:
        score = score + _safety_batch(rob, np.stack(envs), p.safety_strength, p.safety_scale)
    if p.agreement_enabled:
        score = score + _agreement_batch(rob, op, p.agreement_scale)
    return score


def joint_log_score(model: JointModel, hyp: JointHypothesis) -> float:
    """Log joint density of one hypothesis under the factorized model."""
    T = model.operator.grid.size
    for tr in (hyp.operator_traj, hyp.autonomy_traj, *hyp.environment_trajs):
        if tr.positions.shape[0] != T:
            raise CodedError("grid-mismatch")
    if len(hyp.environment_trajs) != len(model.environment):
        raise CodedError("grid-mismatch", "environment trajectory count mismatch")
    envs = [tr.positions[None] for tr in hyp.environment_trajs]
    return float(
        _score_batch(model, hyp.operator_traj.positions[None], hyp.autonomy_traj.positions[None],
                     envs)[0]
    )


def map_joint(model: JointModel, n_samples: int = 500, seed: int = 0) -> JointHypothesis:
    """Sample-and-rank MAP: best of n_samples joint draws; ties -> lowest index."""
    if n_samples < 1:
        raise CodedError("bad-count", "n_samples must be >= 1")
    root = np.random.SeedSequence(seed)
    kids = root.spawn(2 + len(model.environment))
    op, op_modes = sample_batch(model.operator, n_samples, kids[0])
    rob, rob_modes = sample_batch(model.autonomy, n_samples, kids[1])
    envs = [sample_batch(d, n_samples, k)[0] for d, k in zip(model.environment, kids[2:])]
    scores = _score_batch(model, op, rob, envs)
    j = int(np.argmax(scores))
    dt = float(model.operator.grid[1] - model.operator.grid[0]) if model.operator.grid.size > 1 else 0.1
    return JointHypothesis(
        operator_traj=TrajectorySample(op[j], dt),
        autonomy_traj=TrajectorySample(rob[j], dt),
        environment_trajs=tuple(TrajectorySample(e[j], dt) for e in envs),
        log_score=float(scores[j]),
        operator_mode=int(op_modes[j]),
        autonomy_mode=int(rob_modes[j]),
    )
