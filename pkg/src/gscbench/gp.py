"""Gaussian-process regression over planar trajectories.

Each agent (operator, autonomy, environment obstacle) is modelled as a pair of
independent 1-D GPs (x(t), y(t)) with a squared-exponential kernel.  Route
multimodality is produced by conditioning on goal pseudo-observations: one GP
posterior per goal hypothesis, mixed with data-driven weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import CodedError

# Variance floor used when evaluating Gaussian log densities so that
# zero-variance (degenerate) mixtures stay finite and comparable.
VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class KernelParams:
    """Squared-exponential kernel hyperparameters, shared by x and y."""

    length_scale: float  # seconds
    signal_variance: float  # meters^2
    noise_variance: float  # meters^2

    def __post_init__(self):
        if not (self.length_scale > 0 and self.signal_variance > 0):
            raise CodedError("bad-kernel", "length_scale and signal_variance must be > 0")
        if self.noise_variance < 0:
            raise CodedError("bad-kernel", "noise_variance must be >= 0")

    def to_json(self) -> dict:
        return {
            "length_scale": self.length_scale,
            "signal_variance": self.signal_variance,
            "noise_variance": self.noise_variance,
        }

    @staticmethod
    def from_json(d: dict) -> "KernelParams":
        return KernelParams(d["length_scale"], d["signal_variance"], d["noise_variance"])


@dataclass(frozen=True)
class ObservationSet:
    """Timestamped 2-D position measurements for one agent.

    ``noise_scales`` inflate per-sample noise: 1 for fresh data, > 1 for stale
    data (see comms staleness weighting).
    """

    agent_id: str
    times: np.ndarray  # (n,) strictly increasing, seconds
    positions: np.ndarray  # (n, 2) meters
    noise_scales: np.ndarray  # (n,) >= 1

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "noise_scales", np.asarray(self.noise_scales, dtype=float))
        if self.times.size != self.positions.shape[0] or self.times.size != self.noise_scales.size:
            raise CodedError("bad-observations", "times/positions/noise_scales length mismatch")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise CodedError("bad-times", "observation times must be strictly increasing")
        if self.times.size and np.any(self.noise_scales < 1.0 - 1e-12):
            raise CodedError("bad-observations", "noise scales must be >= 1")

    def __len__(self) -> int:
        return int(self.times.size)

    @staticmethod
    def from_samples(agent_id: str, samples) -> "ObservationSet":
        """samples: iterable of (time, (x, y), noise_scale)."""
        samples = list(samples)
        return ObservationSet(
            agent_id,
            np.array([s[0] for s in samples], dtype=float),
            np.array([s[1] for s in samples], dtype=float).reshape(-1, 2),
            np.array([s[2] for s in samples], dtype=float),
        )


@dataclass(frozen=True)
class ModeHypothesis:
    """One route hypothesis: a goal position with a prior weight."""

    goal: tuple  # (x, y) meters
    prior_weight: float  # in (0, 1]
    label: str = ""

    def __post_init__(self):
        if not (0.0 < self.prior_weight <= 1.0):
            raise CodedError("bad-hypothesis", "prior_weight must be in (0, 1]")


@dataclass(frozen=True)
class GPosterior:
    """Per-timestep marginal mean/variance of one GP route mode (x, y independent)."""

    grid: np.ndarray  # (T,) seconds
    mean: np.ndarray  # (T, 2) meters
    var: np.ndarray  # (T, 2) meters^2, >= 0

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "var", np.asarray(self.var, dtype=float))


@dataclass(frozen=True)
class TrajectorySample:
    """A discretized 2-D path over the horizon grid."""

    positions: np.ndarray  # (T, 2) meters
    dt: float  # seconds

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        if not np.all(np.isfinite(self.positions)):
            raise CodedError("bad-trajectory", "non-finite coordinates")


@dataclass(frozen=True)
class MultimodalTrajectoryDistribution:
    """Weighted mixture of GP posteriors, one per route hypothesis."""

    weights: np.ndarray  # (K,), sums to 1
    posteriors: tuple  # K GPosterior, shared grid
    hypotheses: tuple  # K ModeHypothesis
    degenerate_weights: bool = field(default=False)  # true when weights fell back to priors

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "posteriors", tuple(self.posteriors))
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        if len(self.posteriors) == 0:
            raise CodedError("bad-mixture", "at least one mode required")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9 or np.any(self.weights < -1e-12):
            raise CodedError("bad-mixture", "weights must be a probability vector")

    @property
    def grid(self) -> np.ndarray:
        return self.posteriors[0].grid

    def n_modes(self) -> int:
        return len(self.posteriors)


def _se_kernel(ta: np.ndarray, tb: np.ndarray, kernel: KernelParams) -> np.ndarray:
    d = ta[:, None] - tb[None, :]
    return kernel.signal_variance * np.exp(-0.5 * (d / kernel.length_scale) ** 2)


def _trend(times: np.ndarray, positions: np.ndarray):
    """Per-axis least-squares linear trend (constant when a single sample).

    Returns (predict(t_query) -> (m, 2), fitted (n, 2)).  Detrending lets the
    GP extrapolate along the motion direction instead of reverting to a
    constant when queried beyond the data.
    """
    n = times.size
    if n == 1 or np.ptp(times) < 1e-12:
        c = positions.mean(axis=0)
        return (lambda tq: np.tile(c, (np.asarray(tq).size, 1))), np.tile(c, (n, 1))
    A = np.column_stack([np.ones(n), times])
    coef, *_ = np.linalg.lstsq(A, positions, rcond=None)  # (2, 2)

    def predict(tq):
        tq = np.asarray(tq, dtype=float)
        return coef[0][None, :] + tq[:, None] * coef[1][None, :]

    return predict, predict(times)


def fit_gp_posterior(obs: ObservationSet, kernel: KernelParams, grid: np.ndarray) -> GPosterior:
    """GP regression of the agent path onto ``grid``.

    Per-sample noise variance is kernel.noise_variance * noise_scale^2.  The
    prior mean is a per-axis least-squares linear trend through the
    observations, with the GP modelling residuals around it.
    """
    if len(obs) == 0:
        raise CodedError("no-observations", f"agent {obs.agent_id!r}")
    grid = np.asarray(grid, dtype=float)
    t = obs.times
    noise = kernel.noise_variance * obs.noise_scales**2
    K = _se_kernel(t, t, kernel) + np.diag(noise) + 1e-12 * np.eye(len(obs))
    Ks = _se_kernel(t, grid, kernel)  # (n, T)
    cf = cho_factor(K, lower=True)
    predict, fitted = _trend(t, obs.positions)
    alpha = cho_solve(cf, obs.positions - fitted)  # (n, 2)
    mean = predict(grid) + Ks.T @ alpha  # (T, 2)
    v = cho_solve(cf, Ks)  # (n, T)
    var1 = kernel.signal_variance - np.einsum("nt,nt->t", Ks, v)
    var = np.clip(var1, 0.0, None)[:, None] * np.ones((1, 2))
    return GPosterior(grid, mean, var)


def condition_on_goal(
    obs: ObservationSet, hyp: ModeHypothesis, horizon_end: float, goal_noise_scale: float = 1.0
) -> ObservationSet:
    """Append a pseudo-observation placing the agent at hyp.goal at horizon_end."""
    if len(obs) and horizon_end <= obs.times[-1]:
        raise CodedError("goal-in-past", f"horizon_end {horizon_end} <= last obs {obs.times[-1]}")
    return ObservationSet(
        obs.agent_id,
        np.append(obs.times, horizon_end),
        np.vstack([obs.positions, np.asarray(hyp.goal, dtype=float)]),
        np.append(obs.noise_scales, goal_noise_scale),
    )


def _goal_line(obs: ObservationSet, hyp: ModeHypothesis, goal_time: float) -> np.ndarray:
    """Hypothesized mean path: straight line from the first observation to the
    goal, arriving at goal_time, evaluated at the observation times."""
    goal = np.asarray(hyp.goal, dtype=float)
    p0 = obs.positions[0]
    t0 = obs.times[0]
    span = goal_time - t0
    if span <= 1e-9:
        return np.tile(goal, (len(obs), 1))
    frac = np.clip((obs.times - t0) / span, 0.0, 1.0)
    return p0[None, :] + frac[:, None] * (goal - p0)[None, :]


def _goal_conditioned_loglik(
    obs: ObservationSet, hyp: ModeHypothesis, kernel: KernelParams,
    goal_time: float, goal_noise_scale: float
) -> float:
    """log p(obs | goal pseudo-observation) under the goal-conditioned GP.

    The hypothesis prior mean is the straight line from the first observation
    to the goal (so all hypotheses are penalized by route deviation, not by
    goal distance).  The GP prior is conditioned on the goal pseudo-observation
    and the observations' joint Gaussian density is evaluated under it
    (x and y independent).
    """
    t = obs.times
    tg = np.array([goal_time])
    Kgg = _se_kernel(tg, tg, kernel) + kernel.noise_variance * goal_noise_scale**2
    Kgt = _se_kernel(tg, t, kernel)  # (1, n)
    Ktt = _se_kernel(t, t, kernel) + np.diag(kernel.noise_variance * obs.noise_scales**2)
    # Under the line prior the goal pseudo-observation has zero residual, so
    # conditioning shrinks the covariance but leaves the mean at the line.
    cov = Ktt - (Kgt.T @ Kgt) / Kgg[0, 0] + 1e-10 * np.eye(len(obs))
    cf = cho_factor(cov, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(cf[0])))
    resid = obs.positions - _goal_line(obs, hyp, goal_time)
    ll = 0.0
    for d in range(2):
        r = resid[:, d]
        sol = cho_solve(cf, r)
        ll += -0.5 * (r @ sol) - 0.5 * logdet - 0.5 * len(obs) * np.log(2 * np.pi)
    return float(ll)


def mode_weights(
    obs: ObservationSet,
    hypotheses,
    kernel: KernelParams,
    goal_times=None,
    goal_noise_scale: float = 1.0,
):
    """Posterior responsibility of each goal hypothesis given the observations.

    weight_i ∝ prior_i * marginal likelihood of obs under the goal-conditioned
    GP model i.  ``goal_times`` is the pseudo-observation time per hypothesis
    (scalar or sequence; default: last observation + 4 s).  Returns
    (weights, degenerate_flag); on total underflow the weights fall back to
    the priors and the flag is set.
    """
    hypotheses = list(hypotheses)
    if not hypotheses:
        raise CodedError("no-hypotheses")
    priors = np.array([h.prior_weight for h in hypotheses], dtype=float)
    priors = priors / priors.sum()
    if len(obs) == 0:
        return priors, False
    if goal_times is None:
        goal_times = float(obs.times[-1]) + 4.0
    goal_times = np.broadcast_to(np.asarray(goal_times, dtype=float), (len(hypotheses),))
    logliks = np.array([
        _goal_conditioned_loglik(obs, h, kernel, float(gt), goal_noise_scale)
        for h, gt in zip(hypotheses, goal_times)
    ])
    logw = np.log(priors) + logliks
    if not np.any(np.isfinite(logw)):
        return priors, True
    logw = logw - logw.max()
    w = np.exp(logw)
    s = w.sum()
    if s <= 0 or not np.isfinite(s):
        return priors, True
    return w / s, False


def build_mixture(
    obs: ObservationSet,
    hypotheses,
    kernel: KernelParams,
    grid: np.ndarray,
    goal_noise_scale: float = 1.0,
    goal_times=None,
    weights=None,
) -> MultimodalTrajectoryDistribution:
    """Goal-conditioned posterior per hypothesis + data-driven mode weights.

    Pass ``weights`` to override the data-driven responsibilities (e.g. when
    an external planner reweights modes by predicted safety).
    """
    grid = np.asarray(grid, dtype=float)
    hypotheses = list(hypotheses)
    if goal_times is None:
        goal_times = float(grid[-1])
    goal_times = np.broadcast_to(np.asarray(goal_times, dtype=float), (len(hypotheses),))
    degenerate = False
    if weights is None:
        weights, degenerate = mode_weights(obs, hypotheses, kernel, goal_times, goal_noise_scale)
    posts = []
    for h, gt in zip(hypotheses, goal_times):
        gt = max(float(gt), (float(obs.times[-1]) if len(obs) else float(grid[0])) + 1e-6)
        cond = condition_on_goal(obs, h, gt, goal_noise_scale) if len(obs) else \
            ObservationSet(obs.agent_id, [gt], [h.goal], [goal_noise_scale])
        posts.append(fit_gp_posterior(cond, kernel, grid))
    return MultimodalTrajectoryDistribution(weights, posts, tuple(hypotheses), degenerate)


def _check_grid(dist: MultimodalTrajectoryDistribution, traj: TrajectorySample):
    if traj.positions.shape[0] != dist.grid.size:
        raise CodedError("grid-mismatch", f"{traj.positions.shape[0]} vs {dist.grid.size}")


def sample_batch(dist: MultimodalTrajectoryDistribution, n: int, seed_seq: np.random.SeedSequence):
    """Vectorized sampler: returns (samples (n,T,2), mode_idx (n,)).

    Mode picks and Gaussian draws come from two separate child streams and are
    consumed in candidate order, so the first n candidates of a 2n draw equal
    an n draw (deterministic nesting).
    """
    if n < 1:
        raise CodedError("bad-count", "n must be >= 1")
    kid_mode, kid_noise = seed_seq.spawn(2)
    rng_mode = np.random.Generator(np.random.PCG64(kid_mode))
    rng_noise = np.random.Generator(np.random.PCG64(kid_noise))
    cdf = np.cumsum(dist.weights)
    cdf[-1] = 1.0
    u = rng_mode.random(n)
    modes = np.searchsorted(cdf, u, side="right").clip(0, dist.n_modes() - 1)
    T = dist.grid.size
    z = rng_noise.standard_normal((n, T, 2))
    means = np.stack([p.mean for p in dist.posteriors])  # (K, T, 2)
    stds = np.sqrt(np.stack([p.var for p in dist.posteriors]))  # (K, T, 2)
    samples = means[modes] + stds[modes] * z
    return samples, modes


def sample_trajectories(dist: MultimodalTrajectoryDistribution, n: int, seed: int):
    """Draw n trajectory samples; deterministic for a fixed seed."""
    dt = float(dist.grid[1] - dist.grid[0]) if dist.grid.size > 1 else 0.1
    samples, modes = sample_batch(dist, n, np.random.SeedSequence(seed))
    return [(TrajectorySample(samples[i], dt), int(modes[i])) for i in range(n)]


def mixture_log_density_batch(dist: MultimodalTrajectoryDistribution, trajs: np.ndarray) -> np.ndarray:
    """log mixture density for a batch of trajectories (n, T, 2) -> (n,)."""
    means = np.stack([p.mean for p in dist.posteriors])  # (K, T, 2)
    var = np.clip(np.stack([p.var for p in dist.posteriors]), VAR_FLOOR, None)
    x = trajs[:, None, :, :]  # (n, 1, T, 2)
    ll = -0.5 * np.log(2 * np.pi * var)[None] - (x - means[None]) ** 2 / (2 * var[None])
    per_mode = ll.sum(axis=(2, 3))  # (n, K)
    logw = np.log(np.clip(dist.weights, 1e-300, None))[None]
    m = (per_mode + logw).max(axis=1, keepdims=True)
    return (m[:, 0] + np.log(np.exp(per_mode + logw - m).sum(axis=1)))


def mixture_log_density(dist: MultimodalTrajectoryDistribution, traj: TrajectorySample) -> float:
    """log sum_k w_k prod_t N(traj_t; mean_kt, var_kt), stabilized in log space."""
    _check_grid(dist, traj)
    return float(mixture_log_density_batch(dist, traj.positions[None])[0])


def most_likely_mode(dist: MultimodalTrajectoryDistribution):
    """Index of the maximum-weight mode (ties -> lowest index) and its posterior."""
    i = int(np.argmax(dist.weights))
    return i, dist.posteriors[i]
