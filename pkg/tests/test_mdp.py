"""
Tests for exact finite-MDP machinery in simcert.
"""

import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simcert.envs import make_random_tabular, perturb_kernel
from simcert.mdp import (
    StateMetric,
    TabularMDP,
    TabularPolicy,
    count_deterministic,
    deterministic_actions,
    deterministic_occupancies,
    deterministic_values,
    iter_deterministic,
    load_mdp,
    occupancy,
    policy_iteration,
    policy_value,
    save_mdp,
    state_values,
    value_gap,
    value_iteration,
    worst_case_gap,
)
from simcert.utils import BudgetExceededError, ShapeMismatchError


def single_state_mdp(rewards=(1.0,), gamma=0.9) -> TabularMDP:
    A = len(rewards)
    return TabularMDP(np.ones((1, A, 1)), np.array([rewards]), gamma, np.ones(1))


def two_state_cycle(gamma=0.5) -> TabularMDP:
    P = np.zeros((2, 1, 2))
    P[0, 0, 1] = 1.0
    P[1, 0, 0] = 1.0
    return TabularMDP(P, np.array([[1.0], [0.0]]), gamma, np.array([0.5, 0.5]))


class TestTabularMDP:
    """Test suite for MDP construction and validation."""

    def test_rejects_rows_that_do_not_sum_to_one(self):
        """A transition row summing to 0.9 is refused."""
        P = np.full((2, 1, 2), 0.45)
        with pytest.raises(ValueError):
            TabularMDP(P, np.zeros((2, 1)), 0.9, np.array([1.0, 0.0]))

    def test_rejects_discount_outside_open_interval(self):
        """gamma = 1 has no finite horizon."""
        with pytest.raises(ValueError):
            single_state_mdp(gamma=1.0)

    def test_rejects_reward_shape_mismatch(self):
        """Rewards must be (S, A)."""
        with pytest.raises(ShapeMismatchError):
            TabularMDP(np.ones((1, 1, 1)), np.zeros((2, 1)), 0.9, np.ones(1))

    def test_rejects_rewards_above_r_max(self):
        """A reward above the declared bound is refused."""
        with pytest.raises(ValueError):
            TabularMDP(np.ones((1, 1, 1)), np.array([[2.0]]), 0.9, np.ones(1), r_max=1.0)

    def test_arrays_are_read_only(self):
        """Constructed MDPs are immutable."""
        mdp = single_state_mdp()
        with pytest.raises(ValueError):
            mdp.transitions[0, 0, 0] = 0.5

    def test_horizon(self):
        """Effective horizon is 1/(1 - gamma)."""
        assert single_state_mdp(gamma=0.9).horizon == pytest.approx(10.0)

    def test_check_compatible_raises_on_shape_mismatch(self):
        """MDPs over different spaces cannot be compared."""
        with pytest.raises(ShapeMismatchError):
            single_state_mdp().check_compatible(two_state_cycle())


class TestTabularPolicy:
    """Test suite for stationary policies."""

    def test_deterministic_is_one_hot(self):
        """Deterministic policies put all mass on the chosen action."""
        pi = TabularPolicy.deterministic([1, 0, 2], 3)
        assert pi.is_deterministic
        np.testing.assert_array_equal(pi.actions, [1, 0, 2])

    def test_rejects_rows_that_do_not_sum_to_one(self):
        """Every row must be a probability vector."""
        with pytest.raises(ValueError):
            TabularPolicy(np.array([[0.5, 0.4]]))

    def test_mix(self):
        """Mixture weights interpolate rows."""
        a = TabularPolicy.deterministic([0], 2)
        b = TabularPolicy.deterministic([1], 2)
        np.testing.assert_allclose(a.mix(b, 0.25).probs, [[0.75, 0.25]])


class TestStateMetric:
    """Test suite for state metrics."""

    def test_from_coordinates(self):
        """1-D coordinates give absolute differences and keep the coordinates."""
        metric = StateMetric.from_coordinates([0.0, 1.0, 3.0])
        assert metric.dist[0, 2] == 3.0
        assert metric.is_one_dimensional
        assert metric.triangle_violation() <= 1e-12

    def test_discrete(self):
        """The 0/1 metric is not one-dimensional."""
        metric = StateMetric.discrete(3)
        assert metric.dist[0, 1] == 1.0
        assert not metric.is_one_dimensional

    def test_rejects_asymmetric(self):
        """Asymmetric distance matrices are not metrics."""
        with pytest.raises(ValueError):
            StateMetric(np.array([[0.0, 1.0], [2.0, 0.0]]))


class TestOccupancy:
    """Test suite for discounted occupancies."""

    def test_single_state_geometric_mass(self):
        """One state, one action, gamma 0.9: d = 10."""
        occ = occupancy(single_state_mdp(), TabularPolicy.uniform(1, 1))
        assert occ.d[0, 0] == pytest.approx(10.0)

    def test_two_state_cycle(self):
        """Deterministic cycle with uniform start and gamma 0.5: d = 1 on each pair."""
        occ = occupancy(two_state_cycle(), TabularPolicy.uniform(2, 1))
        np.testing.assert_allclose(occ.d, [[1.0], [1.0]], atol=1e-12)

    def test_matches_truncated_rollout(self):
        """Random 3x2 MDP: d equals sum_{t<200} gamma^t of the visitation."""
        mdp = make_random_tabular(3, 2, seed=4, gamma=0.9)
        pi = TabularPolicy.random(3, 2, np.random.default_rng(0))
        P_pi = np.einsum('sa,sat->st', pi.probs, mdp.transitions)
        nu = np.zeros(3)
        marginal = mdp.initial.copy()
        for t in range(200):
            nu += mdp.discount ** t * marginal
            marginal = marginal @ P_pi
        np.testing.assert_allclose(occupancy(mdp, pi).d, nu[:, None] * pi.probs, atol=1e-4)

    def test_normalized_is_a_distribution(self):
        """(1 - gamma) d sums to 1."""
        mdp = make_random_tabular(4, 2, seed=1)
        occ = occupancy(mdp, TabularPolicy.uniform(4, 2))
        assert occ.normalized().sum() == pytest.approx(1.0)
        assert occ.total_mass == pytest.approx(mdp.horizon)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 10_000), S=st.integers(1, 6), A=st.integers(1, 3),
           gamma=st.floats(0.1, 0.95))
    def test_mass_property(self, seed, S, A, gamma):
        """Occupancy mass is 1/(1 - gamma) within 1e-6 on random pairs."""
        mdp = make_random_tabular(S, A, seed=seed, gamma=gamma)
        pi = TabularPolicy.random(S, A, np.random.default_rng(seed))
        occ = occupancy(mdp, pi)
        assert abs(occ.total_mass - mdp.horizon) <= 1e-6 * mdp.horizon

    def test_batched_occupancies_match_single_solves(self):
        """deterministic_occupancies agrees with occupancy per policy."""
        mdp = make_random_tabular(3, 2, seed=7)
        actions = deterministic_actions(3, 2)
        batched = deterministic_occupancies(mdp, actions)
        for k, pi in enumerate(iter_deterministic(3, 2)):
            np.testing.assert_allclose(batched[k], occupancy(mdp, pi).d, atol=1e-10)


class TestPolicyValue:
    """Test suite for exact policy evaluation."""

    def test_single_state(self):
        """r = 1, gamma 0.9: value 10."""
        assert policy_value(single_state_mdp(), TabularPolicy.uniform(1, 1)) == pytest.approx(10.0)

    def test_zero_rewards(self):
        """Zero rewards give zero value for every policy."""
        mdp = make_random_tabular(3, 2, seed=2)
        mdp = mdp.with_rewards(np.zeros((3, 2)))
        for pi in iter_deterministic(3, 2):
            assert policy_value(mdp, pi) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_occupancy_identity(self, seed):
        """V_pi equals sum d_pi * r within 1e-8."""
        mdp = make_random_tabular(4, 2, seed=seed)
        pi = TabularPolicy.random(4, 2, np.random.default_rng(seed + 1))
        assert policy_value(mdp, pi) == pytest.approx(float(np.sum(occupancy(mdp, pi).d * mdp.rewards)), abs=1e-8)

    def test_batched_values_match_single_solves(self):
        """deterministic_values agrees with state_values per policy."""
        mdp = make_random_tabular(3, 3, seed=5)
        values = deterministic_values(mdp, deterministic_actions(3, 3))
        for k, pi in enumerate(iter_deterministic(3, 3)):
            np.testing.assert_allclose(values[k], state_values(mdp, pi), atol=1e-10)


class TestValueGap:
    """Test suite for value gaps between kernels."""

    def test_identical_kernels(self):
        """The gap of a model equal to the truth is zero."""
        mdp = make_random_tabular(3, 2, seed=0)
        assert value_gap(mdp, mdp, TabularPolicy.uniform(3, 2)) == 0.0

    def test_swapped_transition(self):
        """Two-state instance where the model swaps a deterministic transition."""
        P = np.zeros((2, 1, 2))
        P[0, 0, 0] = 1.0
        P[1, 0, 1] = 1.0
        true = TabularMDP(P, np.array([[1.0], [0.0]]), 0.5, np.array([1.0, 0.0]))
        Q = P.copy()
        Q[0, 0] = [0.0, 1.0]
        model = true.with_transitions(Q)
        pi = TabularPolicy.uniform(2, 1)
        # truth stays in state 0 forever: 1/(1-0.5) = 2; the model collects 1 then moves to 0-reward state 1
        assert value_gap(true, model, pi) == pytest.approx(1.0)

    def test_symmetric(self):
        """|V(P) - V(P_hat)| does not depend on argument order."""
        mdp = make_random_tabular(3, 2, seed=3)
        model = perturb_kernel(mdp, 0.3, np.random.default_rng(0))
        pi = TabularPolicy.uniform(3, 2)
        assert value_gap(mdp, model, pi) == pytest.approx(value_gap(model, mdp, pi))


class TestWorstCaseGap:
    """Test suite for sup-over-policies value gaps."""

    def test_identical_kernels(self):
        """A perfect model has zero worst-case gap."""
        mdp = make_random_tabular(3, 2, seed=1)
        _, gap = worst_case_gap(mdp, mdp)
        assert gap == 0.0

    def test_matches_brute_force(self):
        """2x2 instance: the maximum over the four deterministic policies."""
        mdp = make_random_tabular(2, 2, seed=11)
        model = perturb_kernel(mdp, 0.5, np.random.default_rng(1))
        expected = max(value_gap(mdp, model, pi) for pi in iter_deterministic(2, 2))
        pi, gap = worst_case_gap(mdp, model)
        assert gap == pytest.approx(expected, abs=1e-12)
        assert value_gap(mdp, model, pi) == pytest.approx(gap, abs=1e-12)

    def test_given_set(self):
        """An explicit set returns its own maximizer."""
        mdp = make_random_tabular(3, 2, seed=2)
        model = perturb_kernel(mdp, 0.5, np.random.default_rng(2))
        policies = list(iter_deterministic(3, 2))[:3]
        pi, gap = worst_case_gap(mdp, model, policies)
        assert gap == pytest.approx(max(value_gap(mdp, model, p) for p in policies))

    def test_equal_deterministic_values_extend_to_mixtures(self):
        """State-constant rewards make all deterministic values agree, and every mixture agrees too."""
        mdp = make_random_tabular(3, 2, seed=6).with_rewards(np.full((3, 2), 0.4))
        model = perturb_kernel(mdp, 0.7, np.random.default_rng(6))
        _, gap = worst_case_gap(mdp, model)
        assert gap <= 1e-10
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert value_gap(mdp, model, TabularPolicy.random(3, 2, rng)) <= 1e-8

    def test_budget_exceeded(self):
        """Enumeration refuses more policies than the budget."""
        with pytest.raises(BudgetExceededError):
            deterministic_actions(30, 2)
        assert count_deterministic(30, 2) == 2 ** 30


class TestOptimalControl:
    """Test suite for value iteration and policy iteration."""

    def test_zero_rewards(self):
        """V* = 0 when nothing is rewarded."""
        mdp = make_random_tabular(4, 2, seed=0).with_rewards(np.zeros((4, 2)))
        V, _ = value_iteration(mdp)
        np.testing.assert_array_equal(V, 0.0)

    def test_bandit(self):
        """1-state bandit with rewards (1, 0): action 0, V = 1/(1 - gamma)."""
        V, pi = value_iteration(single_state_mdp(rewards=(1.0, 0.0)))
        assert V[0] == pytest.approx(10.0, abs=1e-9)
        np.testing.assert_array_equal(pi.actions, [0])

    def test_ties_take_lowest_index(self):
        """Equal rewards break ties toward action 0."""
        _, pi = value_iteration(single_state_mdp(rewards=(0.5, 0.5, 0.5)))
        np.testing.assert_array_equal(pi.actions, [0])

    def test_greedy_value_matches_exact_solve(self):
        """Random 5-state MDP: V from value iteration equals the greedy policy's exact value."""
        mdp = make_random_tabular(5, 2, seed=9)
        tol = 1e-8
        V, pi = value_iteration(mdp, tol=tol)
        np.testing.assert_allclose(V, state_values(mdp, pi), atol=tol)

    def test_greedy_attains_enumerated_maximum(self):
        """The greedy policy is optimal among all deterministic policies."""
        mdp = make_random_tabular(4, 3, seed=12)
        _, pi = value_iteration(mdp)
        best = np.max(deterministic_values(mdp, deterministic_actions(4, 3)) @ mdp.initial)
        assert policy_value(mdp, pi) == pytest.approx(best, abs=1e-8)

    def test_policy_iteration_agrees(self):
        """Howard's iteration reaches the same optimal values."""
        mdp = make_random_tabular(5, 3, seed=13)
        V_vi, _ = value_iteration(mdp, tol=1e-10)
        V_pi, _ = policy_iteration(mdp)
        np.testing.assert_allclose(V_pi, V_vi, atol=1e-9)

    def test_rejects_nonpositive_tolerance(self):
        """tol must be positive."""
        with pytest.raises(ValueError):
            value_iteration(single_state_mdp(), tol=0.0)


class TestMdpFiles:
    """Test suite for the plain-text MDP file."""

    def setup_method(self):
        """Setup test fixtures before each test."""
        self.test_dir = Path(tempfile.mkdtemp())

    def teardown_method(self):
        """Cleanup after each test."""
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def test_save_then_load_is_exact(self):
        """%.17g keeps every float bit."""
        mdp = make_random_tabular(4, 3, seed=21, gamma=0.85)
        path = self.test_dir / "true.mdp"
        save_mdp(mdp, path)
        loaded = load_mdp(path)
        np.testing.assert_array_equal(loaded.transitions, mdp.transitions)
        np.testing.assert_array_equal(loaded.rewards, mdp.rewards)
        np.testing.assert_array_equal(loaded.initial, mdp.initial)
        assert loaded.discount == mdp.discount
        assert loaded.r_max == mdp.r_max

    def test_comments_and_blank_lines_are_ignored(self):
        """Hand-written files may carry comments."""
        path = self.test_dir / "hand.mdp"
        path.write_text("# a bandit\nn_states 1\nn_actions 2\n\ngamma 0.5\ninitial\n1\n"
                        "transitions\n1\n1\n# reward block\nrewards\n1 0\n")
        mdp = load_mdp(path)
        assert mdp.n_actions == 2
        assert policy_value(mdp, TabularPolicy.deterministic([0], 2)) == pytest.approx(2.0)

    def test_missing_section(self):
        """A file without rewards is rejected."""
        path = self.test_dir / "broken.mdp"
        path.write_text("n_states 1\nn_actions 1\ngamma 0.5\ninitial\n1\ntransitions\n1\n")
        with pytest.raises(ValueError, match="missing"):
            load_mdp(path)

    def test_malformed_header(self):
        """A header without gamma is rejected."""
        path = self.test_dir / "broken.mdp"
        path.write_text("n_states 1\nn_actions 1\ninitial\n1\ntransitions\n1\nrewards\n0\n")
        with pytest.raises(ValueError, match="header"):
            load_mdp(path)
