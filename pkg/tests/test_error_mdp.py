"""
Tests for the Error-MDP and the value Lipschitz machinery.
"""

import json

import numpy as np
import pytest

from simcert.envs import make_random_tabular, perturb_kernel, random_line_metric
from simcert.error_mdp import (
    ErrorMDP,
    build_error_mdp,
    duality_check,
    empirical_value_lipschitz,
    instance_moduli,
    joint_value_gap,
    lipschitz_value_constant,
    solve_error_mdp,
    two_state_saturating_instance,
    value_lipschitz_report,
    w1_coverage_bound,
)
from simcert.mdp import StateMetric, TabularMDP, TabularPolicy
from simcert.utils import BOUND_TOL, ContractionError, ShapeMismatchError


def random_pair(seed, n_states=4, n_actions=2, scale=0.3):
    mdp = make_random_tabular(n_states, n_actions, seed=seed)
    model = perturb_kernel(mdp, scale, np.random.default_rng(seed + 1000))
    return mdp, model


def absorbing_swap():
    """Action 0 stays put under the true kernel and jumps under the model; action 1 agrees."""
    P = np.zeros((2, 2, 2))
    Q = np.zeros((2, 2, 2))
    for s in range(2):
        P[s, 0, s] = 1.0
        Q[s, 0, 1 - s] = 1.0
        P[s, 1, s] = Q[s, 1, s] = 1.0
    true = TabularMDP(P, np.zeros((2, 2)), 0.9, np.array([1.0, 0.0]))
    return true, true.with_transitions(Q)


class TestLipschitzConstant:
    """Test suite for L_v = L_r / (1 - gamma L_P)."""

    def test_closed_form(self):
        """Plain arithmetic when the operator contracts."""
        assert lipschitz_value_constant(1.0, 0.5, 0.9) == pytest.approx(1.0 / 0.55)

    def test_non_contracting(self):
        """gamma * L_P >= 1 is an error, not infinity."""
        with pytest.raises(ContractionError):
            lipschitz_value_constant(1.0, 1.2, 0.9)

    def test_invalid_inputs(self):
        """Negative moduli and gamma outside (0, 1) are refused."""
        with pytest.raises(ValueError):
            lipschitz_value_constant(-1.0, 0.5, 0.9)
        with pytest.raises(ValueError):
            lipschitz_value_constant(1.0, 0.5, 1.0)

    def test_saturating_instance(self):
        """Two absorbing states at distance 1 with rewards 0 and 1 meet the bound exactly."""
        mdp, metric = two_state_saturating_instance(0.9)
        L_r, L_P = instance_moduli(mdp, metric)
        assert (L_r, L_P) == pytest.approx((1.0, 1.0))
        pi = TabularPolicy.uniform(2, 1)
        assert empirical_value_lipschitz(mdp, pi, metric) == pytest.approx(10.0)
        report = value_lipschitz_report(mdp, metric)
        assert report['holds']
        assert report['checked_max'] == pytest.approx(report['bound'])

    @pytest.mark.parametrize("seed", range(5))
    def test_report_holds_on_random_instances(self, seed):
        """Uniform-action policies and the optimal value respect the closed form."""
        mdp = make_random_tabular(4, 2, seed=seed, gamma=0.5)
        report = value_lipschitz_report(mdp, random_line_metric(4, np.random.default_rng(seed)))
        assert report['holds']
        assert report['all_deterministic_max'] >= 0.0


class TestErrorMDP:
    """Test suite for building and solving Error-MDPs."""

    def test_identical_model_has_zero_value(self):
        """No model error, nothing for the adversary to exploit."""
        mdp, _ = random_pair(0)
        emdp = build_error_mdp(mdp, mdp, mode='tv')
        assert np.all(emdp.err_reward == 0)
        assert solve_error_mdp(emdp)[1] == 0.0

    def test_adversary_finds_the_wrong_row(self):
        """The optimal adversary keeps taking the mis-modelled action."""
        true, model = absorbing_swap()
        emdp = build_error_mdp(true, model, mode='tv')
        np.testing.assert_allclose(emdp.err_reward, [[1.0, 0.0], [1.0, 0.0]])
        pi, v_star = solve_error_mdp(emdp)
        assert v_star == pytest.approx(10.0)
        np.testing.assert_array_equal(pi.actions, [0, 0])

    def test_w1_needs_metric(self):
        """W1 error is undefined without a state metric."""
        mdp, model = random_pair(1)
        with pytest.raises(ValueError, match="StateMetric"):
            build_error_mdp(mdp, model, mode='w1')
        with pytest.raises(ValueError, match="unknown error mode"):
            build_error_mdp(mdp, model, mode='hellinger')

    def test_rejects_bad_rewards(self):
        """Error rewards are nonnegative and shaped like the base MDP."""
        mdp, _ = random_pair(2)
        with pytest.raises(ValueError):
            ErrorMDP(mdp, -np.ones((4, 2)), 'tv')
        with pytest.raises(ShapeMismatchError):
            ErrorMDP(mdp, np.ones((3, 2)), 'tv')

    def test_value_is_occupancy_weighted_error(self):
        """V_pi of the Error-MDP at the adversary equals V*."""
        mdp, model = random_pair(3)
        emdp = build_error_mdp(mdp, model, random_line_metric(4, np.random.default_rng(3)), 'w1')
        pi, v_star = solve_error_mdp(emdp)
        assert emdp.value(pi) == pytest.approx(v_star, rel=1e-8)

    def test_warm_start_agrees(self):
        """Warm-starting policy iteration gives the same optimum."""
        mdp, model = random_pair(4)
        emdp = build_error_mdp(mdp, model, mode='kl')
        pi, v_star = solve_error_mdp(emdp)
        _, v_warm = solve_error_mdp(emdp, warm_start=pi)
        assert v_warm == pytest.approx(v_star, rel=1e-10)


class TestDuality:
    """Test suite for the worst-case gap against the Error-MDP bound."""

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("mode", ['w1', 'tv', 'joint'])
    def test_bound_holds(self, seed, mode):
        """max_pi |V_pi(P) - V_pi(P_hat)| <= the Error-MDP bound."""
        mdp, model = random_pair(seed)
        metric = random_line_metric(4, np.random.default_rng(seed)) if mode != 'tv' else None
        report = duality_check(mdp, model, metric, mode=mode)
        assert report.lhs <= report.rhs + BOUND_TOL
        assert report.holds

    def test_swapped_kernel_values(self):
        """TV bound on the swap instance: gap 9 within 0.9 * 10 * 10."""
        true, model = absorbing_swap()
        true = true.with_rewards(np.array([[1.0, 1.0], [0.0, 0.0]]))
        report = duality_check(true, model, mode='tv')
        assert report.v_star == pytest.approx(10.0)
        assert report.lhs == pytest.approx(9.0, rel=1e-8)
        assert report.holds

    def test_report_serializes(self):
        """to_json carries the verdicts next to the numbers."""
        mdp, model = random_pair(5)
        report = duality_check(mdp, model, StateMetric.from_coordinates([0.0, 0.3, 0.5, 1.0]))
        payload = json.loads(report.to_json())
        assert payload['holds'] is True
        assert payload['lv_source'] == 'empirical'
        assert payload['mode'] == 'w1'

    def test_given_lipschitz_constant(self):
        """An explicit L_v scales the right-hand side linearly."""
        mdp, model = random_pair(6)
        metric = random_line_metric(4, np.random.default_rng(6))
        a = duality_check(mdp, model, metric, L_v=10.0)
        b = duality_check(mdp, model, metric, L_v=20.0)
        assert b.rhs == pytest.approx(2.0 * a.rhs)
        assert a.lv_source == 'given'

    def test_joint_gap_with_reward_error(self):
        """Same dynamics, rewards off by 0.1 everywhere: the gap is 0.1 / (1 - gamma)."""
        mdp, _ = random_pair(7)
        model = mdp.with_rewards(np.clip(mdp.rewards + 0.1, 0.0, None), r_max=2.0)
        pi = TabularPolicy.uniform(4, 2)
        assert joint_value_gap(mdp, model, pi) == pytest.approx(1.0, rel=1e-8)

    @pytest.mark.parametrize("seed", range(4))
    def test_coverage_bound(self, seed):
        """Full-support data bounds the gap through the coverage constant."""
        mdp, model = random_pair(seed, scale=0.2)
        metric = random_line_metric(4, np.random.default_rng(seed))
        out = w1_coverage_bound(mdp, model, np.full((4, 2), 1.0 / 8), metric)
        assert out['lhs'] <= out['rhs'] + BOUND_TOL
        assert out['kappa'] >= 1.0 - 1e-9
