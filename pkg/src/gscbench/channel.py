"""Degraded operator-input channel: drops, fixed lag, additive noise.

Each input's fate is decided by a counter-based RNG keyed on
(seed, issued_step), so whether input k is dropped does not depend on how long
the stream is -- sweeps over channel parameters stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import Command
from .errors import CodedError


@dataclass(frozen=True)
class ChannelConfig:
    drop_probability: float = 0.0
    lag_steps: int = 0
    noise_std: float = 0.0  # m/s, per axis
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.drop_probability <= 1.0):
            raise CodedError("bad-channel", "drop_probability must be in [0, 1]")
        if self.lag_steps < 0 or self.noise_std < 0:
            raise CodedError("bad-channel", "lag_steps and noise_std must be >= 0")

    def to_json(self) -> dict:
        return {
            "drop_probability": self.drop_probability,
            "lag_steps": self.lag_steps,
            "noise_std": self.noise_std,
            "seed": self.seed,
        }

    @staticmethod
    def from_json(d: dict) -> "ChannelConfig":
        return ChannelConfig(**d)


@dataclass(frozen=True)
class TimedInput:
    issued_step: int
    command: Command


def _input_rng(cfg: ChannelConfig, issued_step: int) -> np.random.Generator:
    key = np.array([cfg.seed & 0xFFFFFFFFFFFFFFFF, issued_step], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def transmit(inp: TimedInput, cfg: ChannelConfig):
    """Pass one input through the channel.

    Returns (delivered_step, original, noisy_command) or None when dropped.
    """
    rng = _input_rng(cfg, inp.issued_step)
    if rng.random() < cfg.drop_probability:
        return None
    noise = rng.normal(0.0, cfg.noise_std, 2) if cfg.noise_std > 0 else np.zeros(2)
    noisy = Command(inp.command.vx + noise[0], inp.command.vy + noise[1])
    return inp.issued_step + cfg.lag_steps, inp, noisy


def channel_apply(stream, cfg: ChannelConfig):
    """Apply the channel to a whole input stream, preserving delivery order."""
    stream = list(stream)
    steps = [s.issued_step for s in stream]
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise CodedError("bad-stream", "issued steps must be strictly increasing")
    out = []
    for inp in stream:
        res = transmit(inp, cfg)
        if res is not None:
            out.append(res)
    return out


def staleness_weight(age: float, tau: float) -> float:
    """Confidence in an input ``age`` seconds old: 1/(1 + age/tau), in (0, 1]."""
    if tau <= 0:
        raise CodedError("bad-tau", "tau must be > 0")
    if age < 0:
        raise CodedError("bad-age", "age must be >= 0")
    return 1.0 / (1.0 + age / tau)


def staleness_noise_scale(age: float, tau: float) -> float:
    """Observation noise scale for stale data: the reciprocal confidence."""
    return 1.0 / staleness_weight(age, tau)
