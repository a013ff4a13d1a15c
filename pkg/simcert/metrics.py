"""
Divergences between one-step kernels and the bridges that turn them into value-gap bounds.

Covers total variation (with its sign-critic dual), KL, W1 on a finite metric space
(exact LP, or the sorted-CDF closed form on a line), the Pinsker bridge, the TV
simulation bound, coverage constants and a trajectory-level W1 diagnostic.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.special import entr, rel_entr, xlogy
from scipy.stats import wasserstein_distance

from .mdp import (
    OccupancyMeasure, StateMetric, TabularMDP, TabularPolicy,
    deterministic_actions, deterministic_occupancies, occupancy, value_gap, worst_case_gap,
)
from .utils import NumericalError, ShapeMismatchError, ROW_TOL, W1_LP_MAX_SUPPORT

DIVERGENCES = ('tv', 'kl', 'w1')


@dataclass(frozen=True)
class DiscreteDist:
    """Probability vector over a finite support."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=np.float64)
        if p.ndim != 1 or np.any(p < -ROW_TOL) or abs(p.sum() - 1.0) > ROW_TOL:
            raise ValueError("DiscreteDist must be a nonnegative vector summing to 1")
        p.setflags(write=False)
        object.__setattr__(self, 'p', p)


@dataclass(frozen=True)
class CoverageReport:
    """kappa = max over (policy, s, a) of d_pi(s,a) / d_data(s,a)."""

    kappa: float
    witness: Optional[tuple]  # (TabularPolicy, state, action)
    ratio_at_witness: float

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.kappa))


def _vec(x) -> np.ndarray:
    return x.p if isinstance(x, DiscreteDist) else np.asarray(x, dtype=np.float64)


def _pair(p, q) -> tuple:
    p, q = _vec(p), _vec(q)
    if p.shape != q.shape:
        raise ShapeMismatchError(f"distribution shapes differ: {p.shape} vs {q.shape}")
    return p, q


def tv(p, q) -> float:
    """Total variation 1/2 * sum |p - q|."""
    p, q = _pair(p, q)
    return float(0.5 * np.abs(p - q).sum())


def tv_dual(p, q) -> float:
    """TV through its dual witness D* = sign(p - q): 1/2 * (E_p[D*] - E_q[D*])."""
    p, q = _pair(p, q)
    critic = np.sign(p - q)
    return float(0.5 * (p @ critic - q @ critic))


def kl(p, q) -> float:
    """KL(p || q) with 0 log 0 = 0 and +inf on support violation."""
    p, q = _pair(p, q)
    return float(rel_entr(p, q).sum())


def entropy(p) -> float:
    return float(entr(_vec(p)).sum())


def _w1_line(p: np.ndarray, q: np.ndarray, coords: np.ndarray) -> tuple:
    order = np.argsort(coords, kind='stable')
    x = coords[order]
    G = np.cumsum(p[order] - q[order])[:-1]
    gaps = np.diff(x)
    value = float(np.abs(G) @ gaps)
    steps = -np.sign(np.where(np.abs(G) > 1e-15, G, 0.0)) * gaps
    f_sorted = np.concatenate([[0.0], np.cumsum(steps)])
    f = np.empty_like(f_sorted)
    f[order] = f_sorted
    return value, f - f[0]


def _w1_lp(p: np.ndarray, q: np.ndarray, D: np.ndarray) -> tuple:
    support = np.flatnonzero((p > 0) | (q > 0))
    n = support.size
    if n > W1_LP_MAX_SUPPORT:
        raise ValueError(f"exact W1 LP supports at most {W1_LP_MAX_SUPPORT} points, got {n}")
    Ds = D[np.ix_(support, support)]
    g = (p - q)[support]
    rows, cols = np.nonzero(~np.eye(n, dtype=bool))
    A_ub = np.zeros((rows.size, n))
    A_ub[np.arange(rows.size), rows] = 1.0
    A_ub[np.arange(rows.size), cols] = -1.0
    bounds = [(0.0, 0.0)] + [(None, None)] * (n - 1)
    res = linprog(-g, A_ub=A_ub, b_ub=Ds[rows, cols], bounds=bounds, method='highs')
    if res.status != 0:
        raise NumericalError(f"W1 dual LP failed: {res.message}")
    f_sup = res.x
    # McShane extension keeps f 1-Lipschitz off the support.
    f = np.min(f_sup[None, :] + D[:, support], axis=1)
    f[support] = f_sup
    return float(-res.fun), f - f[0]


def w1_with_potential(p, q, metric: StateMetric) -> tuple:
    """Exact W1(p, q) and an optimal 1-Lipschitz Kantorovich potential f with f[0] = 0.

    W1 = sum_i f_i (p_i - q_i). The sorted-CDF closed form is used on 1-D metrics and a
    dual LP (scipy HiGHS) otherwise.
    """
    p, q = _pair(p, q)
    if metric.n_states != p.size:
        raise ShapeMismatchError(f"metric has {metric.n_states} points, distributions have {p.size}")
    if np.max(np.abs(p - q)) <= 1e-15:
        return 0.0, np.zeros(p.size)
    if metric.is_one_dimensional:
        return _w1_line(p, q, metric.coords)
    return _w1_lp(p, q, metric.dist)


def w1_discrete(p, q, metric: StateMetric) -> float:
    """Exact Wasserstein-1 distance between two distributions on a finite metric space."""
    return w1_with_potential(p, q, metric)[0]


def pinsker_bound(kl_value: float) -> float:
    """Upper bound sqrt(2 KL) / 2 on total variation."""
    if kl_value < 0:
        raise ValueError(f"KL must be nonnegative, got {kl_value}")
    return float(np.sqrt(2.0 * kl_value) / 2.0)


def pairwise_divergence(true_mdp: TabularMDP, model: TabularMDP, which: str,
                        metric: Optional[StateMetric] = None) -> np.ndarray:
    """Per-pair divergence D(P(.|s,a), P_hat(.|s,a)) as an (S, A) matrix."""
    true_mdp.check_compatible(model)
    P, Q = true_mdp.transitions, model.transitions
    if which == 'tv':
        return 0.5 * np.abs(P - Q).sum(axis=2)
    if which == 'kl':
        return rel_entr(P, Q).sum(axis=2)
    if which == 'w1':
        if metric is None:
            raise ValueError("w1 divergence requires a StateMetric")
        out = np.empty(P.shape[:2])
        for s in range(P.shape[0]):
            for a in range(P.shape[1]):
                out[s, a] = w1_discrete(P[s, a], Q[s, a], metric)
        return out
    raise ValueError(f"unknown divergence '{which}', expected one of {DIVERGENCES}")


def weighted_sum(weights: np.ndarray, values: np.ndarray) -> float:
    """sum weights * values, treating 0 * inf as 0."""
    mask = weights > 0
    return float(np.sum(weights[mask] * values[mask]))


def occupancy_weighted_divergence(true_mdp: TabularMDP, model: TabularMDP, occ: OccupancyMeasure,
                                  which: str, metric: Optional[StateMetric] = None,
                                  normalize: bool = False) -> float:
    """sum_{s,a} occ(s,a) * D(P(.|s,a), P_hat(.|s,a)).

    The unnormalized occupancy is used unless normalize=True, in which case the weights
    are (1 - gamma) * occ, a probability distribution.
    """
    if occ.d.shape != (true_mdp.n_states, true_mdp.n_actions):
        raise ShapeMismatchError(f"occupancy shape {occ.d.shape} does not match MDP")
    weights = occ.normalized() if normalize else occ.d
    return weighted_sum(weights, pairwise_divergence(true_mdp, model, which, metric))


def pinsker_chain(true_mdp: TabularMDP, model: TabularMDP, pi: TabularPolicy) -> tuple:
    """(E[l1], sqrt(2 E[KL])) under the normalized occupancy of pi; lhs <= rhs always."""
    occ = occupancy(true_mdp, pi)
    l1 = 2.0 * occupancy_weighted_divergence(true_mdp, model, occ, 'tv', normalize=True)
    kl_avg = occupancy_weighted_divergence(true_mdp, model, occ, 'kl', normalize=True)
    return l1, float(np.sqrt(2.0 * kl_avg))


def nll_loss(true_mdp: TabularMDP, model: TabularMDP, pi: TabularPolicy) -> float:
    """L_pi(P_hat) = E_{d_pi} E_{s' ~ P}[-log P_hat(s'|s,a)] under the unnormalized occupancy."""
    true_mdp.check_compatible(model)
    occ = occupancy(true_mdp, pi)
    cross = -xlogy(true_mdp.transitions, model.transitions).sum(axis=2)
    return weighted_sum(occ.d, cross)


def weighted_entropy(true_mdp: TabularMDP, pi: TabularPolicy) -> float:
    """E_{d_pi}[H(P(.|s,a))], the irreducible part of the NLL loss."""
    occ = occupancy(true_mdp, pi)
    return weighted_sum(occ.d, entr(true_mdp.transitions).sum(axis=2))


def simulation_bound(true_mdp: TabularMDP, model: TabularMDP, pi: TabularPolicy) -> tuple:
    """(value gap, gamma * Rmax / (1 - gamma) * E_{d_pi}[TV]) with unnormalized d_pi."""
    lhs = value_gap(true_mdp, model, pi)
    occ = occupancy(true_mdp, pi)
    g = true_mdp.discount
    rhs = g * true_mdp.r_max / (1.0 - g) * occupancy_weighted_divergence(true_mdp, model, occ, 'tv')
    return lhs, rhs


def _policy_occupancies(true_mdp: TabularMDP, policy_set) -> tuple:
    if isinstance(policy_set, str):
        if policy_set != "all_deterministic":
            raise ValueError(f"unknown policy class '{policy_set}'")
        actions = deterministic_actions(true_mdp.n_states, true_mdp.n_actions)

        def to_policy(k):
            return TabularPolicy.deterministic(actions[k], true_mdp.n_actions)
        return deterministic_occupancies(true_mdp, actions), to_policy
    policies = list(policy_set)
    if not policies:
        raise ValueError("policy set must be nonempty")
    occs = np.stack([occupancy(true_mdp, pi).d for pi in policies])
    return occs, lambda k: policies[k]


def coverage_constant(true_mdp: TabularMDP, policy_set, d_data,
                      restrict: Optional[np.ndarray] = None) -> CoverageReport:
    """kappa = max_{pi, s, a} d_pi(s,a) / d_data(s,a), against unnormalized d_pi.

    Args:
        true_mdp: MDP under which policy occupancies are computed
        policy_set: "all_deterministic" or an explicit sequence of TabularPolicy
        d_data: (S, A) probability distribution over pairs
        restrict: optional boolean (S, A) mask; pairs outside it are ignored

    Returns:
        CoverageReport; kappa is +inf with a witness when d_data misses a visited pair
    """
    d_data = np.asarray(d_data, dtype=np.float64).reshape(true_mdp.n_states, true_mdp.n_actions)
    if np.any(d_data < -ROW_TOL) or abs(d_data.sum() - 1.0) > 1e-6:
        raise ValueError("d_data must be a probability distribution over (s, a) pairs")
    occs, to_policy = _policy_occupancies(true_mdp, policy_set)
    mask = np.ones(d_data.shape, dtype=bool) if restrict is None else np.asarray(restrict, dtype=bool)
    visited = (occs > 1e-14) & mask[None]
    uncovered = visited & (d_data[None] <= 0)
    if np.any(uncovered):
        k, s, a = (int(i) for i in np.argwhere(uncovered)[0])
        return CoverageReport(float('inf'), (to_policy(k), s, a), float('inf'))
    if not np.any(visited):
        return CoverageReport(0.0, None, 0.0)
    ratios = np.where(visited, occs / np.where(d_data > 0, d_data, 1.0)[None], 0.0)
    k, s, a = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
    kappa = float(ratios[k, s, a])
    return CoverageReport(kappa, (to_policy(int(k)), int(s), int(a)), kappa)


def tv_coverage_bound(true_mdp: TabularMDP, model: TabularMDP, d_data,
                      policy_set="all_deterministic") -> dict:
    """Worst-case gap against the TV coverage bound.

    rhs_proof = kappa * gamma * Rmax / (1 - gamma) * E_d[TV]; rhs_stated is twice that,
    the looser constant the bound is often quoted with.
    """
    d_data = np.asarray(d_data, dtype=np.float64).reshape(true_mdp.n_states, true_mdp.n_actions)
    cov = coverage_constant(true_mdp, policy_set, d_data)
    _, lhs = worst_case_gap(true_mdp, model, policy_set)
    g = true_mdp.discount
    err = weighted_sum(d_data, pairwise_divergence(true_mdp, model, 'tv'))
    rhs_proof = cov.kappa * g * true_mdp.r_max / (1.0 - g) * err if cov.finite else float('inf')
    return {'lhs': lhs, 'rhs_proof': rhs_proof, 'rhs_stated': 2.0 * rhs_proof,
            'kappa': cov.kappa, 'data_tv': err}


def _sample_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(rows, axis=1)
    u = rng.random(rows.shape[0]) * cdf[:, -1]
    return np.minimum((u[:, None] >= cdf).sum(axis=1), rows.shape[1] - 1)


def _tabular_marginals(mdp: TabularMDP, kernel: np.ndarray, pi: TabularPolicy, horizon: int,
                       n_traj: int, rng: np.random.Generator) -> np.ndarray:
    S = mdp.n_states
    states = _sample_rows(np.broadcast_to(mdp.initial, (n_traj, S)), rng)
    out = np.zeros((horizon, S))
    for t in range(horizon):
        actions = _sample_rows(pi.probs[states], rng)
        states = _sample_rows(kernel[states, actions], rng)
        out[t] = np.bincount(states, minlength=S) / n_traj
    return out


def trajectory_w1(true_mdp_or_env, model, pi, horizon: int, n_traj: int, seed: int,
                  metric: Optional[StateMetric] = None) -> float:
    """Mean over t = 1..horizon of the W1 distance between the state marginals at time t.

    For a TabularMDP, `model` is a TabularMDP and `pi` a TabularPolicy; the marginals are
    empirical frequencies over n_traj independent rollouts per kernel, compared under
    `metric` (default: state index on a line). For a continuous env, `true_mdp_or_env`
    and `model` expose `reset(rng, n)` and `transition(states, actions, rng)`, `pi` maps a
    state batch and a Generator to actions, and per-dimension 1-D W1 is averaged.
    """
    if horizon < 1 or n_traj < 1:
        raise ValueError("horizon and n_traj must be at least 1")
    rng_true, rng_model = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    if isinstance(true_mdp_or_env, TabularMDP):
        true_mdp = true_mdp_or_env
        true_mdp.check_compatible(model)
        metric = metric or StateMetric.from_coordinates(np.arange(true_mdp.n_states, dtype=float))
        m_true = _tabular_marginals(true_mdp, true_mdp.transitions, pi, horizon, n_traj, rng_true)
        m_model = _tabular_marginals(true_mdp, model.transitions, pi, horizon, n_traj, rng_model)
        return float(np.mean([w1_discrete(m_true[t], m_model[t], metric) for t in range(horizon)]))

    env = true_mdp_or_env
    xs_true = env.reset(rng_true, n_traj)
    xs_model = env.reset(rng_model, n_traj)
    total = 0.0
    for _ in range(horizon):
        xs_true = env.transition(xs_true, pi(xs_true, rng_true), rng_true)
        xs_model = model.transition(xs_model, pi(xs_model, rng_model), rng_model)
        a, b = np.atleast_2d(xs_true.T).T, np.atleast_2d(xs_model.T).T
        total += np.mean([wasserstein_distance(a[:, i], b[:, i]) for i in range(a.shape[1])])
    return float(total / horizon)


def random_stationary_mixture(policies: Sequence[TabularPolicy], rng: np.random.Generator) -> TabularPolicy:
    """Per-state random convex combination of the given policies."""
    probs = np.stack([pi.probs for pi in policies])
    weights = rng.dirichlet(np.ones(len(policies)), size=probs.shape[1])   # (S, K)
    return TabularPolicy(np.einsum('sk,ksa->sa', weights, probs))
