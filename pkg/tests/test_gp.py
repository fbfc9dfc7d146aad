"""GP regression, goal conditioning, mode weights, sampling, mixture density."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gscbench import (
    CodedError,
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
from gscbench.gp import GPosterior, mixture_log_density_batch

KERNEL = KernelParams(1.5, 4.0, 0.01)


def obs_of(samples, agent="a"):
    return ObservationSet.from_samples(agent, samples)


def random_obs(rng, n, agent="a"):
    t = np.sort(rng.uniform(0, 5, n))
    t += np.arange(n) * 1e-3  # strictly increasing
    pos = rng.normal(0, 2, (n, 2))
    scales = 1.0 + rng.uniform(0, 2, n)
    return ObservationSet(agent, t, pos, scales)


class TestKernelParams:
    def test_round_trip(self):
        k = KernelParams(0.7, 2.5, 0.03)
        assert KernelParams.from_json(k.to_json()) == k

    @pytest.mark.parametrize("bad", [(0, 1, 0), (1, 0, 0), (-1, 1, 0), (1, 1, -0.1)])
    def test_invalid(self, bad):
        with pytest.raises(CodedError, match="bad-kernel"):
            KernelParams(*bad)


class TestObservationSet:
    def test_non_increasing_times_rejected(self):
        with pytest.raises(CodedError, match="bad-times"):
            obs_of([(0.0, (0, 0), 1.0), (0.0, (1, 1), 1.0)])

    def test_length_mismatch_rejected(self):
        with pytest.raises(CodedError, match="bad-observations"):
            ObservationSet("a", [0.0, 1.0], [[0, 0]], [1.0, 1.0])

    def test_scale_below_one_rejected(self):
        with pytest.raises(CodedError, match="bad-observations"):
            obs_of([(0.0, (0, 0), 0.5)])


class TestFitGpPosterior:
    def test_single_point_zero_noise_interpolates(self):
        kernel = KernelParams(1.5, 4.0, 1e-12)
        post = fit_gp_posterior(obs_of([(0.0, (0.0, 0.0), 1.0)]), kernel, np.array([0.0]))
        assert np.allclose(post.mean[0], [0.0, 0.0], atol=1e-9)

    def test_mirror_symmetry(self):
        # observations symmetric about t=0 in y, mirrored in x
        samples = [(-1.0, (-2.0, 1.0), 1.0), (0.0, (0.0, 0.0), 1.0), (1.0, (2.0, 1.0), 1.0)]
        grid = np.array([1.5, 2.0])
        post = fit_gp_posterior(obs_of(samples), KERNEL, grid)
        mirrored = [(-1.0, (-2.0, 1.0), 1.0), (0.0, (0.0, 0.0), 1.0), (1.0, (2.0, 1.0), 1.0)]
        flipped = obs_of([(-t, (-x, y), s) for t, (x, y), s in reversed(mirrored)])
        post_m = fit_gp_posterior(flipped, KERNEL, -grid[::-1])
        assert np.allclose(post.mean[:, 0], -post_m.mean[::-1, 0], atol=1e-9)
        assert np.allclose(post.mean[:, 1], post_m.mean[::-1, 1], atol=1e-9)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(3)
        obs = random_obs(rng, 3)
        grid = np.linspace(obs.times[-1], obs.times[-1] + 2.0, 5)
        post = fit_gp_posterior(obs, KERNEL, grid)
        mean, var = oracles.dense_gp(obs, KERNEL, grid)
        assert np.allclose(post.mean, mean, atol=1e-8)
        assert np.allclose(post.var, var, atol=1e-8)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 8))
    def test_oracle_property(self, seed, n):
        rng = np.random.default_rng(seed)
        obs = random_obs(rng, n)
        grid = np.linspace(obs.times[-1], obs.times[-1] + 3.0, 7)
        post = fit_gp_posterior(obs, KERNEL, grid)
        mean, var = oracles.dense_gp(obs, KERNEL, grid)
        assert np.allclose(post.mean, mean, atol=1e-8)
        assert np.allclose(post.var, var, atol=1e-8)

    def test_empty_rejected(self):
        empty = ObservationSet("a", [], np.zeros((0, 2)), [])
        with pytest.raises(CodedError, match="no-observations"):
            fit_gp_posterior(empty, KERNEL, np.array([0.0]))

    def test_variance_bounded_by_prior(self):
        rng = np.random.default_rng(11)
        obs = random_obs(rng, 5)
        grid = np.linspace(0, 10, 30)
        post = fit_gp_posterior(obs, KERNEL, grid)
        assert np.all(post.var <= KERNEL.signal_variance + KERNEL.noise_variance + 1e-9)

    def test_noise_scale_equivalence(self):
        # scale k on one observation == multiplying that sample's noise var by k^2
        k = 3.0
        obs_scaled = obs_of([(0.0, (0.0, 0.0), 1.0), (1.0, (1.0, 0.5), k)])
        grid = np.linspace(1.0, 3.0, 6)
        post_a = fit_gp_posterior(obs_scaled, KERNEL, grid)
        # same thing via a hand-built dense solve with inflated noise
        mean, var = oracles.dense_gp(obs_scaled, KERNEL, grid)
        assert np.allclose(post_a.mean, mean, atol=1e-12)
        assert np.allclose(post_a.var, var, atol=1e-12)


class TestConditionOnGoal:
    def test_appends_one_sample(self):
        obs = obs_of([(0.0, (0, 0), 1.0), (0.5, (0.5, 0), 1.0)])
        hyp = ModeHypothesis((3.0, 3.0), 1.0)
        out = condition_on_goal(obs, hyp, 4.0)
        assert len(out) == 3
        assert out.times[-1] == 4.0
        assert np.allclose(out.positions[:2], obs.positions)

    def test_goal_at_last_position_consistent(self):
        obs = obs_of([(0.0, (1.0, 2.0), 1.0), (0.5, (1.0, 2.0), 1.0)])
        hyp = ModeHypothesis((1.0, 2.0), 1.0)
        cond = condition_on_goal(obs, hyp, 4.0)
        post = fit_gp_posterior(cond, KERNEL, np.array([4.0]))
        assert np.allclose(post.mean[0], [1.0, 2.0], atol=0.05)

    def test_goal_in_past_rejected(self):
        obs = obs_of([(0.0, (0, 0), 1.0), (1.0, (1, 0), 1.0)])
        with pytest.raises(CodedError, match="goal-in-past"):
            condition_on_goal(obs, ModeHypothesis((1, 1), 1.0), 0.5)

    def test_two_goals_separate_the_means(self):
        obs = obs_of([(0.0, (0, 0), 1.0), (0.3, (0.3, 0.0), 1.0)])
        end = 4.0
        ga, gb = ModeHypothesis((3.0, 3.0), 1.0), ModeHypothesis((3.0, -3.0), 1.0)
        pa = fit_gp_posterior(condition_on_goal(obs, ga, end), KERNEL, np.array([end]))
        pb = fit_gp_posterior(condition_on_goal(obs, gb, end), KERNEL, np.array([end]))
        sep = np.linalg.norm(pa.mean[0] - pb.mean[0])
        assert sep >= 0.5 * 6.0


class TestModeWeights:
    def test_single_hypothesis(self):
        obs = obs_of([(0.0, (0, 0), 1.0)])
        w, degenerate = mode_weights(obs, [ModeHypothesis((1, 1), 1.0)], KERNEL)
        assert np.allclose(w, [1.0])
        assert not degenerate

    def test_mirror_symmetric_goals(self):
        obs = obs_of([(0.0, (0, 0), 1.0), (0.5, (1.0, 0.0), 1.0), (1.0, (2.0, 0.0), 1.0)])
        hyps = [ModeHypothesis((4.0, 2.0), 0.5), ModeHypothesis((4.0, -2.0), 0.5)]
        w, _ = mode_weights(obs, hyps, KERNEL)
        assert np.allclose(w, [0.5, 0.5], atol=1e-6)

    def test_heading_toward_goal_wins_and_matches_oracle(self):
        obs = obs_of([(0.0, (0, 0), 1.0), (0.5, (0.5, 0.5), 1.0), (1.0, (1.0, 1.0), 1.0)])
        hyps = [ModeHypothesis((3.0, 3.0), 0.5, "A"), ModeHypothesis((3.0, -3.0), 0.5, "B")]
        gt = float(obs.times[-1]) + 4.0
        w, _ = mode_weights(obs, hyps, KERNEL)
        assert w[0] > w[1]
        ref = oracles.mode_weights_ref(obs, hyps, KERNEL, gt)
        assert np.allclose(w, ref, atol=1e-7)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_probability_vector_property(self, seed):
        rng = np.random.default_rng(seed)
        obs = random_obs(rng, int(rng.integers(1, 6)))
        hyps = [ModeHypothesis(tuple(rng.normal(0, 4, 2)), p, str(i))
                for i, p in enumerate([0.2, 0.3, 0.5])]
        w, _ = mode_weights(obs, hyps, KERNEL)
        assert abs(w.sum() - 1.0) < 1e-9
        assert np.all(w >= 0)

    def test_no_hypotheses_rejected(self):
        with pytest.raises(CodedError, match="no-hypotheses"):
            mode_weights(obs_of([(0.0, (0, 0), 1.0)]), [], KERNEL)


def toy_mixture(weights=(0.7, 0.3), T=6, vari=0.5):
    grid = 0.1 * np.arange(T)
    posts, hyps = [], []
    for i, w in enumerate(weights):
        mean = np.column_stack([np.full(T, float(i)), np.linspace(0, 1, T)])
        posts.append(GPosterior(grid, mean, np.full((T, 2), vari)))
        hyps.append(ModeHypothesis((float(i), 1.0), w, str(i)))
    return MultimodalTrajectoryDistribution(np.array(weights), posts, tuple(hyps))


class TestSampling:
    def test_zero_variance_returns_means(self):
        dist = toy_mixture(weights=(1.0,), vari=0.0)
        out = sample_trajectories(dist, 3, seed=0)
        for traj, mode in out:
            assert mode == 0
            assert np.allclose(traj.positions, dist.posteriors[0].mean)

    def test_same_seed_bit_identical(self):
        dist = toy_mixture()
        a = sample_trajectories(dist, 10, seed=42)
        b = sample_trajectories(dist, 10, seed=42)
        for (ta, ma), (tb, mb) in zip(a, b):
            assert ma == mb
            assert np.array_equal(ta.positions, tb.positions)

    def test_mode_frequencies(self):
        dist = toy_mixture(weights=(0.7, 0.3), T=3)
        out = sample_trajectories(dist, 100_000, seed=7)
        freq = np.mean([m for _, m in out])
        assert abs(freq - 0.3) < 0.01

    def test_nesting(self):
        # first n candidates of a 2n draw equal the n draw
        dist = toy_mixture()
        small = sample_trajectories(dist, 50, seed=5)
        big = sample_trajectories(dist, 100, seed=5)
        for (ta, ma), (tb, mb) in zip(small, big[:50]):
            assert ma == mb and np.array_equal(ta.positions, tb.positions)

    def test_bad_count(self):
        with pytest.raises(CodedError, match="bad-count"):
            sample_trajectories(toy_mixture(), 0, seed=0)


class TestMixtureLogDensity:
    def test_single_mode_at_mean_closed_form(self):
        dist = toy_mixture(weights=(1.0,), T=5, vari=0.25)
        traj = TrajectorySample(dist.posteriors[0].mean, 0.1)
        expected = -0.5 * np.log(2 * np.pi * 0.25) * 5 * 2
        assert mixture_log_density(dist, traj) == pytest.approx(expected, abs=1e-9)

    def test_duplicate_modes_collapse(self):
        one = toy_mixture(weights=(1.0,), T=5)
        grid = one.grid
        post = one.posteriors[0]
        two = MultimodalTrajectoryDistribution(
            [0.5, 0.5], [post, post], (one.hypotheses[0], one.hypotheses[0])
        )
        traj = TrajectorySample(post.mean + 0.3, 0.1)
        assert mixture_log_density(two, traj) == pytest.approx(
            mixture_log_density(one, traj), abs=1e-12)

    def test_matches_direct_oracle(self):
        rng = np.random.default_rng(0)
        base = toy_mixture(weights=(0.5, 0.5), T=5)
        dist = MultimodalTrajectoryDistribution(
            [0.5, 0.3, 0.2],
            list(base.posteriors) + [GPosterior(base.grid, rng.normal(0, 1, (5, 2)),
                                                np.full((5, 2), 0.8))],
            base.hypotheses + (ModeHypothesis((0.0, 0.0), 0.2, "2"),),
        )
        traj = TrajectorySample(rng.normal(0, 1, (5, 2)), 0.1)
        direct = oracles.mixture_density_direct(dist, traj)
        got = mixture_log_density(dist, traj)
        assert got == pytest.approx(np.log(direct), rel=1e-9)

    def test_mode_reorder_invariance(self):
        dist = toy_mixture(weights=(0.7, 0.3))
        rev = MultimodalTrajectoryDistribution(
            dist.weights[::-1].copy(), dist.posteriors[::-1], dist.hypotheses[::-1]
        )
        traj = TrajectorySample(np.linspace(0, 1, 12).reshape(6, 2), 0.1)
        assert mixture_log_density(dist, traj) == pytest.approx(
            mixture_log_density(rev, traj), abs=1e-12)

    def test_grid_mismatch(self):
        dist = toy_mixture(T=6)
        with pytest.raises(CodedError, match="grid-mismatch"):
            mixture_log_density(dist, TrajectorySample(np.zeros((4, 2)), 0.1))


class TestMostLikelyMode:
    def test_argmax(self):
        assert most_likely_mode(toy_mixture(weights=(0.2, 0.8)))[0] == 1

    def test_tie_break_lowest_index(self):
        assert most_likely_mode(toy_mixture(weights=(0.5, 0.5)))[0] == 0

    def test_consistent_with_mode_weights(self):
        obs = obs_of([(0.0, (0, 0), 1.0), (0.5, (0.5, 0.5), 1.0), (1.0, (1.0, 1.0), 1.0)])
        hyps = [ModeHypothesis((3.0, 3.0), 0.5, "A"), ModeHypothesis((3.0, -3.0), 0.5, "B")]
        dist = build_mixture(obs, hyps, KERNEL, np.linspace(1.0, 4.0, 10))
        idx, _ = most_likely_mode(dist)
        assert dist.hypotheses[idx].label == "A"


class TestMixtureInvariants:
    def test_weights_must_normalize(self):
        one = toy_mixture(weights=(1.0,))
        with pytest.raises(CodedError, match="bad-mixture"):
            MultimodalTrajectoryDistribution([0.5], one.posteriors, one.hypotheses)

    def test_empty_rejected(self):
        with pytest.raises(CodedError, match="bad-mixture"):
            MultimodalTrajectoryDistribution([], (), ())

    def test_batch_density_matches_scalar(self):
        dist = toy_mixture()
        rng = np.random.default_rng(2)
        batch = rng.normal(0, 1, (4, 6, 2))
        got = mixture_log_density_batch(dist, batch)
        for i in range(4):
            assert got[i] == pytest.approx(
                oracles.mixture_log_density_ref(dist, batch[i]), rel=1e-9)
