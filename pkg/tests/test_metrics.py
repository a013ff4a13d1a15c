"""
Tests for divergences and value-gap bridges in simcert.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from simcert.envs import corrupt_row, make_random_tabular, perturb_kernel
from simcert.mdp import OccupancyMeasure, StateMetric, TabularPolicy, iter_deterministic, occupancy
from simcert.metrics import (
    DiscreteDist,
    coverage_constant,
    entropy,
    kl,
    nll_loss,
    occupancy_weighted_divergence,
    pairwise_divergence,
    pinsker_bound,
    pinsker_chain,
    random_stationary_mixture,
    simulation_bound,
    trajectory_w1,
    tv,
    tv_coverage_bound,
    tv_dual,
    w1_discrete,
    w1_with_potential,
    weighted_entropy,
)
from simcert.utils import ShapeMismatchError


def _weights(n: int):
    return st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n).filter(lambda xs: sum(xs) > 1e-3)


probability_pairs = st.integers(2, 8).flatmap(lambda n: st.tuples(_weights(n), _weights(n)))


def _normalize(xs) -> np.ndarray:
    x = np.asarray(xs, dtype=np.float64)
    return x / x.sum()


def _primal_w1(p: np.ndarray, q: np.ndarray, D: np.ndarray) -> float:
    n = p.size
    A_eq = np.zeros((2 * n, n * n))
    for i in range(n):
        A_eq[i, i * n:(i + 1) * n] = 1.0
        A_eq[n + i, i::n] = 1.0
    res = linprog(D.ravel(), A_eq=A_eq, b_eq=np.concatenate([p, q]), bounds=(0, None), method='highs')
    return float(res.fun)


class TestDiscreteDist:
    """Test suite for the probability vector type."""

    def test_rejects_unnormalized(self):
        """Vectors must sum to one."""
        with pytest.raises(ValueError):
            DiscreteDist(np.array([0.5, 0.6]))

    def test_is_read_only(self):
        """Stored vectors are immutable."""
        d = DiscreteDist(np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            d.p[0] = 1.0


class TestTotalVariation:
    """Test suite for total variation and its dual."""

    def test_identical(self):
        """tv(p, p) = 0."""
        p = DiscreteDist(np.array([0.2, 0.8]))
        assert tv(p, p) == 0.0

    def test_disjoint_point_masses(self):
        """Disjoint supports give 1."""
        assert tv([1.0, 0.0], [0.0, 1.0]) == 1.0

    def test_hand_computed(self):
        """(0.5, 0.5) vs (0.75, 0.25) gives 0.25."""
        assert tv([0.5, 0.5], [0.75, 0.25]) == pytest.approx(0.25)

    def test_shape_mismatch(self):
        """Different support sizes are rejected."""
        with pytest.raises(ShapeMismatchError):
            tv([1.0], [0.5, 0.5])

    @settings(max_examples=200)
    @given(pair=probability_pairs)
    def test_dual_witness_is_exact(self, pair):
        """The sign critic attains the supremum."""
        p, q = _normalize(pair[0]), _normalize(pair[1])
        assert tv_dual(p, q) == pytest.approx(tv(p, q), abs=1e-12)
        assert 0.0 <= tv(p, q) <= 1.0 + 1e-12


class TestKL:
    """Test suite for Kullback-Leibler divergence."""

    def test_identical(self):
        """KL(p || p) = 0."""
        assert kl([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_closed_form(self):
        """KL((1, 0) || (0.5, 0.5)) = log 2."""
        assert kl([1.0, 0.0], [0.5, 0.5]) == pytest.approx(np.log(2.0))

    def test_support_violation_is_infinite(self):
        """Mass where q has none gives +inf, not an exception."""
        assert kl([0.5, 0.5], [1.0, 0.0]) == float('inf')

    def test_entropy_of_uniform(self):
        """H(uniform over 4) = log 4."""
        assert entropy(np.full(4, 0.25)) == pytest.approx(np.log(4.0))


class TestWasserstein:
    """Test suite for exact W1 on finite metric spaces."""

    def test_identical(self):
        """W1(p, p) = 0."""
        metric = StateMetric.discrete(3)
        assert w1_discrete([0.2, 0.3, 0.5], [0.2, 0.3, 0.5], metric) == 0.0

    def test_point_masses_on_a_line(self):
        """Point masses at coordinates 0 and 1 are one apart."""
        metric = StateMetric.from_coordinates([0.0, 1.0])
        assert w1_discrete([1.0, 0.0], [0.0, 1.0], metric) == pytest.approx(1.0)

    def test_discrete_metric_equals_tv(self):
        """Under the 0/1 metric W1 is total variation."""
        rng = np.random.default_rng(0)
        p, q = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
        assert w1_discrete(p, q, StateMetric.discrete(5)) == pytest.approx(tv(p, q), abs=1e-9)

    def test_three_point_instance_matches_primal_plan(self):
        """Dual LP value equals the optimal transport plan's cost."""
        D = np.array([[0.0, 1.0, 1.5], [1.0, 0.0, 2.0], [1.5, 2.0, 0.0]])
        metric = StateMetric(D)
        p, q = np.array([0.6, 0.3, 0.1]), np.array([0.1, 0.2, 0.7])
        assert w1_discrete(p, q, metric) == pytest.approx(_primal_w1(p, q, D), abs=1e-9)

    def test_line_closed_form_matches_lp(self):
        """Sorted-CDF formula and LP agree on a 1-D metric."""
        coords = np.array([0.0, 2.5, 0.7, 1.1, 4.0])
        line = StateMetric.from_coordinates(coords)
        general = StateMetric(line.dist)
        rng = np.random.default_rng(1)
        for _ in range(10):
            p, q = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
            assert w1_discrete(p, q, line) == pytest.approx(w1_discrete(p, q, general), abs=1e-9)

    @pytest.mark.parametrize("one_dimensional", [True, False])
    def test_potential_is_an_optimal_lipschitz_witness(self, one_dimensional):
        """f(s_0) = 0, f is 1-Lipschitz and sum f (p - q) = W1."""
        coords = np.array([0.0, 0.4, 1.0, 1.7])
        metric = StateMetric.from_coordinates(coords) if one_dimensional else StateMetric(
            np.abs(coords[:, None] - coords[None, :]) ** 0.5)
        rng = np.random.default_rng(2)
        p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
        value, f = w1_with_potential(p, q, metric)
        assert f[0] == 0.0
        assert np.max(np.abs(f[:, None] - f[None, :]) - metric.dist) <= 1e-9
        assert f @ (p - q) == pytest.approx(value, abs=1e-9)

    def test_triangle_inequality(self):
        """W1 is a metric on distributions."""
        metric = StateMetric.from_coordinates([0.0, 1.0, 3.0])
        rng = np.random.default_rng(3)
        p, q, r = (rng.dirichlet(np.ones(3)) for _ in range(3))
        assert w1_discrete(p, r, metric) <= w1_discrete(p, q, metric) + w1_discrete(q, r, metric) + 1e-12

    def test_metric_size_mismatch(self):
        """The metric must cover the support."""
        with pytest.raises(ShapeMismatchError):
            w1_discrete([1.0, 0.0], [0.0, 1.0], StateMetric.discrete(3))


class TestPinsker:
    """Test suite for the Pinsker bridge."""

    def test_zero(self):
        """No divergence, no bound."""
        assert pinsker_bound(0.0) == 0.0

    def test_closed_form_pair(self):
        """(1, 0) vs (0.5, 0.5): tv 0.5 <= sqrt(2 log 2) / 2."""
        bound = pinsker_bound(kl([1.0, 0.0], [0.5, 0.5]))
        assert bound == pytest.approx(np.sqrt(2 * np.log(2)) / 2)
        assert 0.5 <= bound

    def test_negative_input(self):
        """Negative KL is invalid."""
        with pytest.raises(ValueError):
            pinsker_bound(-1e-3)

    def test_random_pairs(self):
        """tv <= pinsker_bound(kl) over 1000 random pairs."""
        rng = np.random.default_rng(4)
        for _ in range(1000):
            n = int(rng.integers(2, 8))
            p, q = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
            assert tv(p, q) <= pinsker_bound(kl(p, q)) + 1e-12

    def test_occupancy_weighted_chain(self):
        """E[l1] <= sqrt(2 E[KL]) under the normalized occupancy."""
        for seed in range(20):
            mdp = make_random_tabular(4, 2, seed=seed)
            model = perturb_kernel(mdp, 0.4, np.random.default_rng(seed))
            l1, rhs = pinsker_chain(mdp, model, TabularPolicy.uniform(4, 2))
            assert l1 <= rhs + 1e-10


class TestOccupancyWeightedDivergence:
    """Test suite for occupancy-weighted one-step losses."""

    def setup_method(self):
        """Setup test fixtures before each test."""
        self.mdp = make_random_tabular(3, 2, seed=8)
        self.model = perturb_kernel(self.mdp, 0.5, np.random.default_rng(8))
        self.metric = StateMetric.from_coordinates([0.0, 1.0, 2.0])
        self.occ = occupancy(self.mdp, TabularPolicy.uniform(3, 2))

    @pytest.mark.parametrize("which", ["tv", "kl", "w1"])
    def test_perfect_model(self, which):
        """A model equal to the truth has zero loss under every divergence."""
        assert occupancy_weighted_divergence(self.mdp, self.mdp, self.occ, which, self.metric) == 0.0

    def test_single_pair_occupancy(self):
        """An occupancy supported on one pair scales the pointwise divergence by its mass."""
        d = np.zeros((3, 2))
        d[1, 0] = 10.0
        occ = OccupancyMeasure(d, 0.9)
        expected = 10.0 * tv(self.mdp.transitions[1, 0], self.model.transitions[1, 0])
        assert occupancy_weighted_divergence(self.mdp, self.model, occ, 'tv') == pytest.approx(expected)

    def test_unnormalized_by_default(self):
        """Normalized weights scale the sum by 1 - gamma."""
        raw = occupancy_weighted_divergence(self.mdp, self.model, self.occ, 'tv')
        normalized = occupancy_weighted_divergence(self.mdp, self.model, self.occ, 'tv', normalize=True)
        assert normalized == pytest.approx((1.0 - self.mdp.discount) * raw)

    def test_w1_requires_metric(self):
        """W1 needs a metric."""
        with pytest.raises(ValueError):
            pairwise_divergence(self.mdp, self.model, 'w1')

    def test_unknown_divergence(self):
        """Only tv, kl and w1 exist."""
        with pytest.raises(ValueError):
            pairwise_divergence(self.mdp, self.model, 'hellinger')

    def test_shape_mismatch(self):
        """Occupancy must match the MDP."""
        with pytest.raises(ShapeMismatchError):
            occupancy_weighted_divergence(self.mdp, self.model, OccupancyMeasure(np.ones((2, 2)), 0.9), 'tv')


class TestNllLoss:
    """Test suite for the expected negative log-likelihood."""

    def test_deterministic_kernel(self):
        """A perfect model of a deterministic kernel has zero loss."""
        mdp = make_random_tabular(3, 2, sparsity=1.0, seed=0)
        assert nll_loss(mdp, mdp, TabularPolicy.uniform(3, 2)) == pytest.approx(0.0, abs=1e-12)

    def test_stochastic_kernel_equals_entropy(self):
        """A perfect model of a stochastic kernel pays exactly the weighted entropy."""
        mdp = make_random_tabular(3, 2, seed=1)
        pi = TabularPolicy.uniform(3, 2)
        assert nll_loss(mdp, mdp, pi) == pytest.approx(weighted_entropy(mdp, pi), abs=1e-10)

    def test_decomposes_into_kl_plus_entropy(self):
        """L_pi - E[H(P)] = occupancy-weighted KL."""
        mdp = make_random_tabular(4, 2, seed=2)
        model = perturb_kernel(mdp, 0.3, np.random.default_rng(2))
        pi = TabularPolicy.random(4, 2, np.random.default_rng(3))
        weighted_kl = occupancy_weighted_divergence(mdp, model, occupancy(mdp, pi), 'kl')
        assert nll_loss(mdp, model, pi) - weighted_entropy(mdp, pi) == pytest.approx(weighted_kl, abs=1e-8)


class TestSimulationBound:
    """Test suite for the TV simulation bound."""

    def test_identical_kernels(self):
        """(0, 0) for a perfect model."""
        mdp = make_random_tabular(3, 2, seed=0)
        assert simulation_bound(mdp, mdp, TabularPolicy.uniform(3, 2)) == (0.0, 0.0)

    def test_holds_on_random_instances(self):
        """lhs <= rhs on 100 random 4-state instances."""
        rng = np.random.default_rng(5)
        for seed in range(100):
            mdp = make_random_tabular(4, 2, seed=seed)
            model = perturb_kernel(mdp, float(rng.uniform(0.05, 1.0)), rng)
            lhs, rhs = simulation_bound(mdp, model, TabularPolicy.random(4, 2, rng))
            assert lhs <= rhs + 1e-10

    def test_rhs_is_linear_in_row_perturbation(self):
        """Mixing one row toward a fixed target by eps scales rhs by eps."""
        mdp = make_random_tabular(3, 2, seed=6)
        pi = TabularPolicy.uniform(3, 2)
        _, rhs_full = simulation_bound(mdp, corrupt_row(mdp, 1, 1, np.random.default_rng(0), 1.0), pi)
        for eps in (0.1, 0.25, 0.5):
            model = corrupt_row(mdp, 1, 1, np.random.default_rng(0), eps)
            _, rhs = simulation_bound(mdp, model, pi)
            assert rhs == pytest.approx(eps * rhs_full, rel=1e-9)


class TestCoverage:
    """Test suite for coverage constants."""

    def setup_method(self):
        """Setup test fixtures before each test."""
        self.mdp = make_random_tabular(3, 2, seed=9)

    def test_matched_data_gives_horizon(self):
        """d_data = normalized d_pi for singleton Pi gives kappa = 1/(1 - gamma)."""
        pi = TabularPolicy.random(3, 2, np.random.default_rng(0))
        d_data = occupancy(self.mdp, pi).normalized()
        report = coverage_constant(self.mdp, [pi], d_data)
        assert report.kappa == pytest.approx(self.mdp.horizon)
        assert report.ratio_at_witness == report.kappa

    def test_missed_pair_is_infinite(self):
        """Zero data mass on a visited pair reports kappa = inf with that witness."""
        d_data = np.full((3, 2), 1.0 / 5.0)
        d_data[2, 1] = 0.0
        report = coverage_constant(self.mdp, "all_deterministic", d_data)
        assert not report.finite
        _, s, a = report.witness
        assert (s, a) == (2, 1)

    def test_larger_policy_set_never_decreases_kappa(self):
        """kappa is a max over the set."""
        d_data = np.full((3, 2), 1.0 / 6.0)
        policies = list(iter_deterministic(3, 2))
        small = coverage_constant(self.mdp, policies[:2], d_data).kappa
        large = coverage_constant(self.mdp, policies, d_data).kappa
        assert small <= large

    def test_rejects_non_distribution(self):
        """d_data must sum to one."""
        with pytest.raises(ValueError):
            coverage_constant(self.mdp, "all_deterministic", np.ones((3, 2)))

    def test_tv_corollary_holds(self):
        """Worst-case gap <= kappa * gamma * Rmax / (1 - gamma) * E_data[TV]."""
        model = perturb_kernel(self.mdp, 0.3, np.random.default_rng(1))
        out = tv_coverage_bound(self.mdp, model, np.full((3, 2), 1.0 / 6.0))
        assert out['lhs'] <= out['rhs_proof'] + 1e-10
        assert out['rhs_stated'] == pytest.approx(2.0 * out['rhs_proof'])


class TestTrajectoryW1:
    """Test suite for the trajectory-level diagnostic."""

    def test_perfect_model_is_close_to_zero(self):
        """Same kernel, 10^4 rollouts on a 3-state chain: only sampling noise remains."""
        mdp = make_random_tabular(3, 1, seed=0)
        value = trajectory_w1(mdp, mdp, TabularPolicy.uniform(3, 1), horizon=5, n_traj=10_000, seed=0)
        assert 0.0 <= value <= 0.05

    def test_deterministic_given_seed(self):
        """The same seed reproduces the value."""
        mdp = make_random_tabular(3, 2, seed=1)
        model = perturb_kernel(mdp, 0.5, np.random.default_rng(1))
        pi = TabularPolicy.uniform(3, 2)
        a = trajectory_w1(mdp, model, pi, horizon=3, n_traj=200, seed=7)
        b = trajectory_w1(mdp, model, pi, horizon=3, n_traj=200, seed=7)
        assert a == b

    def test_rejects_empty_horizon(self):
        """horizon must be positive."""
        mdp = make_random_tabular(2, 1, seed=0)
        with pytest.raises(ValueError):
            trajectory_w1(mdp, mdp, TabularPolicy.uniform(2, 1), horizon=0, n_traj=10, seed=0)


class TestRandomMixture:
    """Test suite for random stationary mixtures."""

    def test_is_a_valid_policy(self):
        """Per-state mixtures of deterministic policies are stochastic rows."""
        policies = list(iter_deterministic(3, 2))
        mix = random_stationary_mixture(policies, np.random.default_rng(0))
        np.testing.assert_allclose(mix.probs.sum(axis=1), 1.0)
        assert not mix.is_deterministic
