"""Acceptance gate: the headline scenario contrasts, the Theorem 1 reduction,
oracle equivalences, channel statistics, and end-to-end determinism.

Scenario contrasts are stated over 50 (or 20) seeds.  For scenarios whose
channel is noiseless and lossless the rollout is provably seed-independent:
the run seed only reaches the channel RNG, and a channel with drop 0 and
noise 0 never consumes randomness that affects the output.  Each such test
demonstrates this by bit-comparing traces at spread-out probe seeds, then
counts the verified-identical result once per requested seed.  The lossy
channel scenario is genuinely stochastic and is run seed by seed.
"""

import json
from collections import Counter

import numpy as np
import pytest

import oracles
from gscbench import (
    ChannelConfig,
    Command,
    InteractionParams,
    JointModel,
    KernelParams,
    ModeHypothesis,
    MultimodalTrajectoryDistribution,
    TimedInput,
    TrajectorySample,
    build_scenario,
    compute_metrics,
    controller_config,
    fit_gp_posterior,
    map_joint,
    mixture_log_density,
    run_scenario,
)
from gscbench.channel import transmit
from gscbench.cli import cmd_compare, cmd_run, cmd_sweep
from gscbench.gp import GPosterior

SEEDS_50 = list(range(50))
SEEDS_20 = list(range(20))
PROBE = (0, 17, 41)


def deterministic_channel(spec) -> bool:
    return spec.channel.drop_probability == 0.0 and spec.channel.noise_std == 0.0


def runs_over_seeds(sid, kind, seeds):
    """(trace, metrics) per seed; seed-independent scenarios verified once."""
    spec = build_scenario(sid)
    cc = controller_config(spec, kind)
    if deterministic_channel(spec):
        probes = [run_scenario(spec, cc, seed=s) for s in PROBE]
        base = probes[0][0].to_jsonl()
        for t, _ in probes[1:]:
            assert t.to_jsonl() == base, "seed leaked into a lossless-channel run"
        return [probes[0]] * len(seeds)
    return [run_scenario(spec, cc, seed=s) for s in seeds]


def metrics_over_seeds(sid, kind, seeds):
    return [m for _, m in runs_over_seeds(sid, kind, seeds)]


def rate(flags):
    flags = list(flags)
    return sum(flags) / len(flags)


class TestFig1MultimodalCorridor:
    """Blending two safe modes produces a collision; GSC picks a mode."""

    def test_linear_blend_always_collides(self):
        ms = metrics_over_seeds("multimodal-corridor", "linear-blend", SEEDS_50)
        assert rate(m.collision for m in ms) == 1.0

    def test_gsc_never_collides_and_matches_intent(self):
        runs = runs_over_seeds("multimodal-corridor", "gsc", SEEDS_50)
        assert rate(m.collision for _, m in runs) == 0.0
        intent = build_scenario("multimodal-corridor").operator_script.intent_mode
        matches = []
        for trace, _ in runs:
            labels = [r.operator_mode for r in trace.records if r.operator_mode]
            matches.append(Counter(labels).most_common(1)[0][0] == intent)
        assert rate(matches) >= 0.9


class TestFig2LossySurveillance:
    """Dropped operator inputs: averaging forgets the detour, GSC keeps it."""

    def test_hit_rates(self):
        gsc = metrics_over_seeds("lossy-surveillance", "gsc", SEEDS_50)
        lb = metrics_over_seeds("lossy-surveillance", "linear-blend", SEEDS_50)
        assert rate(m.region_hits["surveillance"] for m in gsc) >= 0.9
        assert rate(m.region_hits["surveillance"] for m in lb) <= 0.1


class TestFig3LaggyOcclusion:
    """Stale inputs force the blender into an evasive maneuver."""

    def _reveal_x(self, trace, step):
        return trace.records[step].robot_position[0]

    def test_accel_ratio_and_early_commitment(self):
        spec = build_scenario("laggy-occlusion")
        reveal = min(o.reveal_step for o in spec.world.obstacles if o.reveal_step > 0)
        lb = runs_over_seeds("laggy-occlusion", "linear-blend", SEEDS_20)
        gsc = runs_over_seeds("laggy-occlusion", "gsc", SEEDS_20)
        lb_acc = np.median([m.max_accel for _, m in lb])
        gsc_acc = np.median([m.max_accel for _, m in gsc])
        assert lb_acc >= 2.0 * gsc_acc
        # lateral offset toward the right route (larger x) at the reveal step
        wins = [
            self._reveal_x(tg, reveal) > self._reveal_x(tl, reveal)
            for (tg, _), (tl, _) in zip(gsc, lb)
        ]
        assert rate(wins) >= 0.9


class TestFig4aDistractedOperator:
    """Unsafe human inputs: plain blending crashes, safeguards do not."""

    def test_collision_rates(self):
        lb = metrics_over_seeds("distracted-operator", "linear-blend", SEEDS_50)
        sg = metrics_over_seeds("distracted-operator", "safeguarded-blend", SEEDS_50)
        gsc = metrics_over_seeds("distracted-operator", "gsc", SEEDS_50)
        assert rate(m.collision for m in lb) >= 0.9
        assert rate(m.collision for m in sg) == 0.0
        assert rate(m.collision for m in gsc) == 0.0


class TestFig4b5bFreezing:
    """Safeguards freeze before a crossable crowd; GSC threads through."""

    REGION = {"elevator-crowd": "crowd", "traffic-merge": "merge-lane"}

    @pytest.mark.parametrize("sid", ["elevator-crowd", "traffic-merge"])
    def test_safeguard_freezes_gsc_goes(self, sid):
        sg = metrics_over_seeds(sid, "safeguarded-blend", SEEDS_50)
        gsc = metrics_over_seeds(sid, "gsc", SEEDS_50)
        assert rate(m.steps_to_goal is not None for m in sg) == 0.0
        assert rate(m.region_hits[self.REGION[sid]] for m in sg) == 0.0
        assert rate(m.steps_to_goal is not None for m in gsc) >= 0.9
        assert rate(m.collision for m in gsc) == 0.0


class TestFig5aStartledDriver:
    """A jerked wheel drags the blend across the centerline; GSC discounts it."""

    def test_oncoming_lane_entry(self):
        lb = metrics_over_seeds("startled-driver", "linear-blend", SEEDS_50)
        gsc = metrics_over_seeds("startled-driver", "gsc", SEEDS_50)
        assert rate(m.region_hits["oncoming-lane"] for m in lb) >= 0.9
        assert rate(m.region_hits["oncoming-lane"] for m in gsc) == 0.0
        assert rate(m.collision for m in gsc) == 0.0


class TestTheorem1Reduction:
    """Unimodal Gaussians, agreement on, safety off: MAP is the
    precision-weighted compromise; brute force and map_joint agree."""

    CELL = 0.06

    def setup_method(self):
        rng = np.random.default_rng(77)
        self.grid1 = np.array([0.0])
        self.mu_h = rng.normal(0, 1.5, (1, 2))
        self.mu_r = rng.normal(0, 1.5, (1, 2))
        self.var_h, self.var_r, self.h_a = 0.5, 0.8, 0.9

        def uni1(mean, var):
            return MultimodalTrajectoryDistribution(
                [1.0], [GPosterior(self.grid1, mean, np.full((1, 2), var))],
                (ModeHypothesis(tuple(mean[-1]), 1.0, "m"),))

        self.model = JointModel(
            uni1(self.mu_h, self.var_h), uni1(self.mu_r, self.var_r), (),
            InteractionParams(0.9, 0.8, self.h_a, True, False))

    def analytic(self):
        a, b, c = 1 / self.var_h, 1 / self.var_r, 1 / self.h_a**2
        A = np.array([[a + c, -c], [-c, b + c]])
        rhs = np.stack([a * self.mu_h, b * self.mu_r])
        sol = np.linalg.solve(A, rhs.reshape(2, -1)).reshape(2, 1, 2)
        return sol[0], sol[1]

    def test_precision_weighted_mean_limit(self):
        a, b = 1 / self.var_h, 1 / self.var_r
        pw = (a * self.mu_h + b * self.mu_r) / (a + b)
        c = 1e8
        A = np.array([[a + c, -c], [-c, b + c]])
        rhs = np.stack([a * self.mu_h, b * self.mu_r])
        sol = np.linalg.solve(A, rhs.reshape(2, -1)).reshape(2, 1, 2)
        assert np.allclose(sol[0], pw, atol=1e-6)
        assert np.allclose(sol[1], pw, atol=1e-6)

    def test_brute_force_confirms_analytic(self):
        h_star, r_star = self.analytic()
        for d in range(2):
            hs = h_star[0, d] + np.arange(-40, 41) * self.CELL
            rs = r_star[0, d] + np.arange(-40, 41) * self.CELL
            H, R = np.meshgrid(hs, rs, indexing="ij")
            obj = (-(H - self.mu_h[0, d]) ** 2 / (2 * self.var_h)
                   - (R - self.mu_r[0, d]) ** 2 / (2 * self.var_r)
                   - (R - H) ** 2 / (2 * self.h_a**2))
            i, j = np.unravel_index(np.argmax(obj), obj.shape)
            assert abs(hs[i] - h_star[0, d]) <= self.CELL
            assert abs(rs[j] - r_star[0, d]) <= self.CELL

    def test_map_joint_within_three_cells(self):
        h_star, r_star = self.analytic()
        hyp = map_joint(self.model, n_samples=10_000, seed=0)
        assert np.all(np.abs(hyp.operator_traj.positions - h_star) <= 3 * self.CELL)
        assert np.all(np.abs(hyp.autonomy_traj.positions - r_star) <= 3 * self.CELL)


def _bimodal_zero_var(rng, T, grid):
    means = [rng.normal(0, 2, (T, 2)) for _ in range(2)]
    w = rng.uniform(0.2, 0.8)
    posts = [GPosterior(grid, m, np.zeros((T, 2))) for m in means]
    hyps = tuple(ModeHypothesis(tuple(m[-1]), ww, lbl)
                 for m, ww, lbl in zip(means, (w, 1 - w), ("a", "b")))
    return MultimodalTrajectoryDistribution([w, 1 - w], posts, hyps)


class TestOracleEquivalences:
    def test_map_joint_matches_exhaustive_argmax(self):
        T = 8
        grid = 0.1 * np.arange(T)
        rng = np.random.default_rng(123)
        for _ in range(100):
            op = _bimodal_zero_var(rng, T, grid)
            aut = _bimodal_zero_var(rng, T, grid)
            em = rng.normal(0, 2, (T, 2))
            env = (MultimodalTrajectoryDistribution(
                [1.0], [GPosterior(grid, em, np.zeros((T, 2)))],
                (ModeHypothesis(tuple(em[-1]), 1.0, "e"),)),)
            model = JointModel(op, aut, env,
                               InteractionParams(0.9, 0.8, 1.0, True, True))
            hyp = map_joint(model, n_samples=256, seed=int(rng.integers(1 << 30)))
            i, j, s = oracles.exhaustive_map(model)
            assert (hyp.operator_mode, hyp.autonomy_mode) == (i, j)
            assert hyp.log_score == pytest.approx(s, rel=1e-9)

    def test_gp_matches_dense_oracle(self):
        from gscbench import ObservationSet

        kernel = KernelParams(1.5, 4.0, 0.01)
        rng = np.random.default_rng(5)
        grid = np.linspace(0, 8, 25)
        for _ in range(20):
            n = int(rng.integers(2, 9))
            t = np.sort(rng.uniform(0, 5, n)) + np.arange(n) * 1e-3
            obs = ObservationSet("a", t, rng.normal(0, 2, (n, 2)),
                                 1.0 + rng.uniform(0, 2, n))
            post = fit_gp_posterior(obs, kernel, grid)
            mean_ref, var_ref = oracles.dense_gp(obs, kernel, grid)
            assert np.allclose(post.mean, mean_ref, atol=1e-8)
            assert np.allclose(post.var, var_ref, atol=1e-8)

    def test_mixture_log_density_matches_direct(self):
        T = 6
        grid = 0.1 * np.arange(T)
        rng = np.random.default_rng(8)
        for _ in range(25):
            means = [rng.normal(0, 1.5, (T, 2)) for _ in range(3)]
            posts = [GPosterior(grid, m, rng.uniform(0.1, 1.0, (T, 2)))
                     for m in means]
            w = rng.uniform(0.1, 1.0, 3)
            w = w / w.sum()
            hyps = tuple(ModeHypothesis(tuple(m[-1]), float(ww), str(k))
                         for k, (m, ww) in enumerate(zip(means, w)))
            dist = MultimodalTrajectoryDistribution(list(w), posts, hyps)
            x = rng.normal(0, 1.5, (T, 2))
            got = mixture_log_density(dist, TrajectorySample(x, 0.1))
            ref = oracles.mixture_log_density_ref(dist, x)
            assert got == pytest.approx(ref, rel=1e-9)

    def test_metrics_match_reference(self):
        for sid, kind in (("multimodal-corridor", "gsc"),
                          ("lossy-surveillance", "linear-blend"),
                          ("elevator-crowd", "safeguarded-blend")):
            spec = build_scenario(sid)
            trace, m = run_scenario(spec, controller_config(spec, kind), seed=0)
            ref = oracles.metrics_ref(trace, spec)
            got = compute_metrics(trace, spec)
            assert got.min_clearance == pytest.approx(ref["min_clearance"], abs=1e-9)
            assert got.collision == ref["collision"]
            assert got.path_length == pytest.approx(ref["path_length"], abs=1e-9)
            assert got.steps_to_goal == ref["steps_to_goal"]
            assert got.agreement_rms == pytest.approx(ref["agreement_rms"], abs=1e-9)
            assert got.region_hits == ref["region_hits"]
            assert got.max_accel == pytest.approx(ref["max_accel"], abs=1e-9)


class TestChannelStatistics:
    N = 100_000

    def test_drop_rate_within_tolerance(self):
        for p in (0.3, 0.7):
            cfg = ChannelConfig(p, 0, 0, seed=11)
            survivors = sum(
                1 for k in range(self.N)
                if transmit(TimedInput(k, Command(1, 0)), cfg)
            )
            assert abs((1 - survivors / self.N) - p) < 0.02

    def test_lag_exact(self):
        cfg = ChannelConfig(0, 7, 0, seed=0)
        for k in (0, 3, 999):
            delivered, _, _ = transmit(TimedInput(k, Command(1, 0)), cfg)
            assert delivered == k + 7

    def test_noise_std_within_five_percent(self):
        std = 0.25
        cfg = ChannelConfig(0, 0, std, seed=2)
        vs = np.array([
            transmit(TimedInput(k, Command(0, 0)), cfg)[2].as_array()
            for k in range(self.N)
        ])
        for axis in range(2):
            assert abs(float(np.std(vs[:, axis])) - std) / std < 0.05


class TestDeterminism:
    def test_run_scenario_bit_identical(self):
        for sid, kind in (("lossy-surveillance", "gsc"),
                          ("multimodal-corridor", "linear-blend")):
            spec = build_scenario(sid)
            cc = controller_config(spec, kind)
            a, ma = run_scenario(spec, cc, seed=7)
            b, mb = run_scenario(spec, cc, seed=7)
            assert a.to_jsonl() == b.to_jsonl()
            assert json.dumps(ma.to_json(), sort_keys=True) == \
                json.dumps(mb.to_json(), sort_keys=True)

    def test_cmd_run_outputs_bit_identical(self, tmp_path):
        for sub in ("a", "b"):
            cmd_run("lossy-surveillance", "gsc", 3, tmp_path / sub)
        d = "lossy-surveillance-gsc-s3"
        for name in ("trace.jsonl", "metrics.json", "rollout.svg"):
            assert (tmp_path / "a" / d / name).read_bytes() == \
                (tmp_path / "b" / d / name).read_bytes()

    def test_cmd_compare_bit_identical(self, tmp_path):
        args = ("lossy-surveillance", ["linear-blend", "gsc"], [0, 1])
        a = cmd_compare(*args, tmp_path / "a")
        b = cmd_compare(*args, tmp_path / "b")
        assert a == b

    def test_parallel_sweep_bit_identical(self, tmp_path):
        args = ("lossy-surveillance", "gsc", "drop", [0.0, 0.7], [0, 1])
        serial = cmd_sweep(*args, tmp_path / "a", jobs=1)
        parallel = cmd_sweep(*args, tmp_path / "b", jobs=4)
        rerun = cmd_sweep(*args, tmp_path / "c", jobs=4)
        assert serial == parallel == rerun
