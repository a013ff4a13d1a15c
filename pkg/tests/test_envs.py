"""
Tests for simcert environments, generators and data sources.
"""

import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from simcert.envs import (
    BiasedCoverageEnv,
    DatasetSource,
    GenerativeSource,
    NarrowPassageEnv,
    TabularSource,
    Transitions,
    biased_batch,
    corrupt_row,
    make_minimal_noise_instance,
    make_random_tabular,
    np_step,
    perturb_kernel,
)
from simcert.mdp import TabularPolicy, policy_value, worst_case_gap
from simcert.metrics import kl
from simcert.utils import ShapeMismatchError


class TestNarrowPassage:
    """Test suite for the narrow-passage dynamics."""

    def setup_method(self):
        """Setup test fixtures before each test."""
        self.env = NarrowPassageEnv()

    def test_normal_region_motion(self):
        """Outside the wind the step is s + a + noise."""
        np.testing.assert_allclose(np_step([0.2, 0.5], [0.05, 0.0], [0.0, 0.0]), [0.25, 0.5])

    def test_wind_inside_passage(self):
        """Inside the passage the wind takes 0.05 off the vertical motion."""
        np.testing.assert_allclose(np_step([0.48, 0.5], [0.05, 0.0], [0.0, 0.0]), [0.53, 0.45])

    def test_wall_truncates(self):
        """Motion into the wall outside the passage stops just short of it."""
        out = np_step([0.45, 0.2], [0.1, 0.0], [0.0, 0.0])
        assert out[0] < 0.5
        assert out[0] == pytest.approx(0.5, abs=1e-5)
        assert out[1] == pytest.approx(0.2)

    def test_wall_rejects(self):
        """In reject mode a blocked step leaves the state unchanged."""
        env = NarrowPassageEnv(wall_mode='reject')
        np.testing.assert_allclose(np_step([0.45, 0.2], [0.1, 0.05], [0.0, 0.0], env), [0.45, 0.2])

    def test_inside_mode_has_no_approach_wind(self):
        """x = 0.42 is windy only in approach mode."""
        s = np.array([[0.42, 0.5]])
        assert self.env.in_wind_region(s)[0]
        assert not NarrowPassageEnv(wind_mode='inside').in_wind_region(s)[0]

    def test_action_out_of_box(self):
        """Actions beyond 0.1 are rejected."""
        with pytest.raises(ValueError, match="actions"):
            np_step([0.2, 0.5], [0.2, 0.0], [0.0, 0.0])

    def test_shape_mismatch(self):
        """Batches must line up."""
        with pytest.raises(ShapeMismatchError):
            self.env.step(np.zeros((3, 2)), np.zeros((2, 2)), np.zeros((3, 2)))

    def test_invalid_modes(self):
        """Unknown wind or wall modes fail at construction."""
        with pytest.raises(ValueError):
            NarrowPassageEnv(wind_mode='everywhere')
        with pytest.raises(ValueError):
            NarrowPassageEnv(wall_mode='bounce')

    def test_never_crosses_wall_outside_passage(self):
        """10^5 random steps stay in the box and only cross x = 0.5 through the passage."""
        rng = np.random.default_rng(0)
        n = 100_000
        s = rng.uniform(0.0, 1.0, size=(n, 2))
        a = self.env.random_actions(rng, n)
        noise = np.clip(self.env.sample_noise(rng, n), -0.2, 0.2)
        nxt = self.env.step(s, a, noise)
        assert np.all((nxt >= 0.0) & (nxt <= 1.0))
        crosses = (s[:, 0] - 0.5) * (nxt[:, 0] - 0.5) < 0
        t = (0.5 - s[crosses, 0]) / (nxt[crosses, 0] - s[crosses, 0])
        y = s[crosses, 1] + t * (nxt[crosses, 1] - s[crosses, 1])
        assert crosses.any()
        assert np.all((y >= 0.45 - 1e-9) & (y <= 0.55 + 1e-9))

    def test_wind_is_detectable(self):
        """Mean vertical displacement inside minus outside is -0.05 within 0.005."""
        rng = np.random.default_rng(1)
        n = 10_000
        a = np.zeros((n, 2))
        inside = self.env.transition(np.tile([0.5, 0.5], (n, 1)), a, rng)[:, 1] - 0.5
        outside = self.env.transition(np.tile([0.2, 0.5], (n, 1)), a, rng)[:, 1] - 0.5
        assert abs(np.mean(inside) - np.mean(outside) + 0.05) <= 0.005

    def test_task_reward_and_band(self):
        """Reward 1 past the goal line; the band surrounds the wall."""
        np.testing.assert_array_equal(self.env.task_reward([[0.95, 0.1], [0.5, 0.5]]), [1.0, 0.0])
        np.testing.assert_array_equal(self.env.in_strategic_band([[0.45, 0.0], [0.2, 0.0]]), [True, False])

    def test_reset_at_start(self):
        """Non-uniform resets begin at (0.1, 0.5)."""
        np.testing.assert_array_equal(self.env.reset(np.random.default_rng(0), 2, uniform=False),
                                      [[0.1, 0.5], [0.1, 0.5]])


class TestTabularGenerators:
    """Test suite for random tabular instances."""

    def test_same_seed_same_mdp(self):
        """Generation is deterministic per seed."""
        a, b = make_random_tabular(5, 3, seed=7), make_random_tabular(5, 3, seed=7)
        np.testing.assert_array_equal(a.transitions, b.transitions)
        np.testing.assert_array_equal(a.rewards, b.rewards)

    def test_full_sparsity_is_deterministic(self):
        """sparsity = 1 gives one-hot rows."""
        mdp = make_random_tabular(6, 2, sparsity=1.0, seed=1)
        assert np.all(np.isclose(mdp.transitions.max(axis=2), 1.0))

    def test_rows_sum_to_one(self):
        """Row sums within 1e-12 across many draws."""
        for seed in range(1000):
            mdp = make_random_tabular(3, 2, sparsity=0.3, seed=seed)
            assert np.max(np.abs(mdp.transitions.sum(axis=2) - 1.0)) <= 1e-12
            assert np.all((mdp.rewards >= 0.0) & (mdp.rewards <= 1.0))

    def test_invalid_arguments(self):
        """Counts and sparsity are validated."""
        with pytest.raises(ValueError):
            make_random_tabular(0, 2)
        with pytest.raises(ValueError):
            make_random_tabular(3, 2, sparsity=1.5)

    def test_corrupt_row_touches_one_row(self):
        """Every other row is left alone."""
        mdp = make_random_tabular(4, 2, seed=2)
        bad = corrupt_row(mdp, 1, 0, np.random.default_rng(0))
        diff = np.abs(bad.transitions - mdp.transitions).sum(axis=2)
        assert diff[1, 0] > 0
        diff[1, 0] = 0.0
        assert np.all(diff == 0)

    def test_perturb_scale_zero(self):
        """Zero scale is the identity."""
        mdp = make_random_tabular(4, 2, seed=3)
        np.testing.assert_allclose(perturb_kernel(mdp, 0.0, np.random.default_rng(0)).transitions, mdp.transitions)


class TestMinimalNoise:
    """Test suite for the misspecification instance."""

    def test_value_ignores_noise_labels(self):
        """Relabelling the noise coordinate leaves chain-only policies' values unchanged."""
        instance, _ = make_minimal_noise_instance(4)
        rng = np.random.default_rng(0)
        for _ in range(10):
            chain_actions = rng.integers(2, size=instance.chain_length)
            pi = TabularPolicy.deterministic(np.repeat(chain_actions, instance.noise_levels), 2)
            permuted = instance.permute_noise(rng.permutation(instance.noise_levels))
            assert abs(policy_value(instance.mdp, pi) - policy_value(permuted, pi)) <= 1e-10

    def test_zero_gap_model_with_positive_kl(self):
        """sigma = 0 has zero worst-case gap but does not match the noise."""
        instance, models = make_minimal_noise_instance(3)
        model = models.model(0.0)
        assert worst_case_gap(instance.mdp, model)[1] <= 1e-10
        assert kl(instance.mdp.transitions[0, 1], model.transitions[0, 1]) > 0.1

    def test_sigma_range(self):
        """The slip probability is a probability."""
        _, models = make_minimal_noise_instance(2)
        with pytest.raises(ValueError):
            models.model(1.5)
        assert len(models.grid(11)) == 11

    def test_kernel_rows_are_distributions(self):
        """Every slip model is a valid kernel."""
        _, models = make_minimal_noise_instance(3)
        for sigma in (0.0, 0.3, 1.0):
            np.testing.assert_allclose(models.kernel(sigma).sum(axis=2), 1.0)


class TestBiasedCoverage:
    """Test suite for the biased-coverage environment."""

    def setup_method(self):
        """Setup test fixtures before each test."""
        self.env = BiasedCoverageEnv()

    def test_contact_reflection(self):
        """Past the threshold the state reflects with restitution and loss."""
        np.testing.assert_allclose(self.env.mean_next([[0.8], [0.0]], [[0.0], [1.0]]), [[0.34], [0.1]])

    def test_unbiased_fraction(self):
        """Bias factor 1 matches the uniform share within 2%."""
        env = BiasedCoverageEnv(bias_factor=1.0)
        batch = biased_batch(env, 10_000, seed=0)
        assert abs(env.is_sensitive(batch.s).mean() - env.sensitive_share) <= 0.02

    def test_factor_ten(self):
        """Bias factor 10 gives a tenth of the share within 20% relative."""
        env = BiasedCoverageEnv(bias_factor=10.0)
        frac = env.is_sensitive(biased_batch(env, 10_000, seed=1).s).mean()
        assert frac == pytest.approx(env.sensitive_share / 10.0, rel=0.2)

    def test_same_seed_same_batch(self):
        """Batches are reproducible."""
        a, b = biased_batch(self.env, 50, seed=3), biased_batch(self.env, 50, seed=3)
        np.testing.assert_array_equal(a.s_next, b.s_next)

    def test_invalid(self):
        """Degenerate configurations are refused."""
        with pytest.raises(ValueError):
            BiasedCoverageEnv(threshold=2.0)
        with pytest.raises(ValueError):
            biased_batch(self.env, 0, seed=0)


class TestDataSources:
    """Test suite for transition batches and samplers."""

    def setup_method(self):
        """Setup test fixtures before each test."""
        self.test_dir = Path(tempfile.mkdtemp())

    def teardown_method(self):
        """Cleanup after each test."""
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def test_csv_columns(self):
        """Dumps carry s..., a..., r, sn... and read back exactly."""
        batch = biased_batch(BiasedCoverageEnv(), 20, seed=0)
        path = batch.to_csv(self.test_dir / "batch.csv")
        assert path.read_text().splitlines()[0] == "s0,a0,r,sn0"
        back = Transitions.from_csv(path)
        np.testing.assert_array_equal(back.s_next, batch.s_next)
        np.testing.assert_array_equal(back.r, batch.r)

    def test_malformed_csv(self):
        """Missing reward column is an error."""
        path = self.test_dir / "bad.csv"
        path.write_text("s0,a0,sn0\n0,0,0\n")
        with pytest.raises(ValueError, match="expected columns"):
            Transitions.from_csv(path)

    def test_dataset_source_replays_rows(self):
        """Drawn pairs come with their stored next states."""
        batch = biased_batch(BiasedCoverageEnv(), 30, seed=1)
        source = DatasetSource(batch)
        rng = np.random.default_rng(0)
        with pytest.raises(RuntimeError):
            source.true_sampler(batch.s[:5], batch.a[:5], rng)
        s, a = source(rng, 10)
        s_next, _ = source.true_sampler(s, a, rng)
        for row_s, row_n in zip(s, s_next):
            k = int(np.flatnonzero(batch.s[:, 0] == row_s[0])[0])
            assert batch.s_next[k, 0] == row_n[0]

    def test_dataset_weights(self):
        """Weights are validated and zero-weight rows never drawn."""
        batch = biased_batch(BiasedCoverageEnv(), 4, seed=2)
        with pytest.raises(ValueError):
            DatasetSource(batch, np.zeros(4))
        source = DatasetSource(batch, [0.0, 0.0, 1.0, 0.0])
        s, _ = source(np.random.default_rng(0), 8)
        assert np.all(s == batch.s[2])

    def test_tabular_source(self):
        """Pairs follow d_data and next states follow P."""
        mdp = make_random_tabular(3, 2, sparsity=1.0, seed=4)
        d = np.zeros((3, 2))
        d[1, 0] = 1.0
        source = TabularSource(mdp, d)
        rng = np.random.default_rng(0)
        s, a = source(rng, 5)
        assert np.all(s == 1) and np.all(a == 0)
        s_next, r = source.true_sampler(s, a, rng)
        assert np.all(s_next == np.argmax(mdp.transitions[1, 0]))
        assert np.all(r == mdp.rewards[1, 0])
        with pytest.raises(ValueError):
            TabularSource(mdp, np.ones((3, 2)))

    def test_generative_source(self):
        """Next states come from the environment."""
        env = BiasedCoverageEnv(noise_std=0.0)
        source = GenerativeSource(env, env.uniform_pairs)
        rng = np.random.default_rng(0)
        s, a = source(rng, 6)
        s_next, _ = source.true_sampler(s, a, rng)
        np.testing.assert_allclose(s_next, env.mean_next(s, a))
