"""2-D shared-control simulation and benchmarking suite."""

from .channel import ChannelConfig, TimedInput, channel_apply, staleness_weight
from .control import (
    BlendGains,
    Command,
    ControllerConfig,
    CONTROLLER_KINDS,
    csc_step,
    gsc_step,
    linear_blend,
    safeguarded_blend,
    switching_control,
)
from .errors import CodedError
from .gp import (
    GPosterior,
    KernelParams,
    ModeHypothesis,
    MultimodalTrajectoryDistribution,
    ObservationSet,
    TrajectorySample,
    build_mixture,
    condition_on_goal,
    fit_gp_posterior,
    mixture_log_density,
    mode_weights,
    most_likely_mode,
    sample_trajectories,
)
from .joint import (
    InteractionParams,
    JointHypothesis,
    JointModel,
    agreement_coupling,
    joint_log_score,
    map_joint,
    safety_coupling,
)
from .scenarios import (
    OperatorScript,
    Route,
    ScenarioSpec,
    build_scenario,
    load_scenario,
    scenario_ids,
    scripted_operator_input,
)
from .simulate import Runner, controller_config, run_scenario
from .world import Metrics, Obstacle, Trace, WorldState, collision_check, compute_metrics, step_world

__version__ = "0.1.0"
