"""
Error-MDP: the true dynamics with the model's pointwise error as reward.

Its optimal policy is the most exploitative adversary against a learned kernel, and
its optimal value bounds the worst-case value gap through the Lipschitz constant of
the model's values. Also here: Lipschitz moduli of an instance, the closed-form value
Lipschitz constant, and the joint dynamics-plus-reward variant.
"""

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .mdp import (
    StateMetric, TabularMDP, TabularPolicy,
    deterministic_actions, deterministic_values, policy_iteration, policy_value,
    state_values, value_iteration, value_gap, worst_case_gap,
)
from .metrics import coverage_constant, pairwise_divergence, w1_discrete, weighted_sum
from .utils import BOUND_TOL, ContractionError, ShapeMismatchError, array_hash, require_finite

ERROR_MODES = ('w1', 'tv', 'kl', 'joint')


@dataclass(frozen=True)
class ErrorMDP:
    """The true MDP with rewards replaced by r_err(s, a) >= 0."""

    base: TabularMDP
    err_reward: np.ndarray
    metric_used: str
    dynamics_scale: float = 1.0

    def __post_init__(self):
        r = np.array(self.err_reward, dtype=np.float64)
        if r.shape != (self.base.n_states, self.base.n_actions):
            raise ShapeMismatchError(f"error reward shape {r.shape} does not match the base MDP")
        if np.any(r < 0):
            raise ValueError("error rewards must be nonnegative")
        r.setflags(write=False)
        object.__setattr__(self, 'err_reward', r)

    @property
    def mdp(self) -> TabularMDP:
        require_finite("error reward", self.err_reward)
        return self.base.with_rewards(self.err_reward, r_max=max(float(self.err_reward.max()), 1.0))

    def value(self, pi: TabularPolicy) -> float:
        """V_pi(M_err) = E_{d_pi}[r_err], unnormalized discounting."""
        return policy_value(self.mdp, pi)


def lipschitz_value_constant(L_r: float, L_P: float, gamma: float) -> float:
    """L_v = L_r / (1 - gamma * L_P); raises ContractionError when gamma * L_P >= 1."""
    if L_r < 0 or L_P < 0:
        raise ValueError("Lipschitz moduli must be nonnegative")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if gamma * L_P >= 1.0:
        raise ContractionError(f"gamma * L_P = {gamma * L_P:.6g} >= 1: the Bellman operator does not contract in Lip")
    return L_r / (1.0 - gamma * L_P)


def _lipschitz_ratio(V: np.ndarray, metric: StateMetric) -> np.ndarray:
    """max_{s != s'} |V(s) - V(s')| / d(s, s') along the last axis of V."""
    D = metric.dist
    off = ~np.eye(D.shape[0], dtype=bool)
    if np.any(D[off] <= 0):
        raise ValueError("metric assigns zero distance to distinct states")
    if D.shape[0] < 2:
        return np.zeros(V.shape[:-1])
    diff = np.abs(V[..., :, None] - V[..., None, :])
    return (diff[..., off] / D[off]).max(axis=-1)


def empirical_value_lipschitz(mdp: TabularMDP, pi: TabularPolicy, metric: StateMetric) -> float:
    """Exact Lipschitz constant of V_pi over the state metric."""
    if metric.n_states != mdp.n_states:
        raise ShapeMismatchError("metric and MDP disagree on the number of states")
    return float(_lipschitz_ratio(state_values(mdp, pi), metric))


def max_value_lipschitz(mdp: TabularMDP, metric: StateMetric, rewards: Optional[np.ndarray] = None,
                        chunk: int = 4096) -> float:
    """Largest exact Lipschitz constant of V_pi over all deterministic policies."""
    actions = deterministic_actions(mdp.n_states, mdp.n_actions)
    best = 0.0
    for start in range(0, len(actions), chunk):
        V = deterministic_values(mdp, actions[start:start + chunk], rewards)
        best = max(best, float(_lipschitz_ratio(V, metric).max()))
    return best


def instance_moduli(mdp: TabularMDP, metric: StateMetric) -> tuple:
    """(L_r, L_P): Lipschitz moduli of r(., a) and of P(.|., a) in W1, maximized over actions."""
    S, A = mdp.n_states, mdp.n_actions
    if S < 2:
        return 0.0, 0.0
    D = metric.dist
    L_r = 0.0
    L_P = 0.0
    for s in range(S):
        for t in range(s + 1, S):
            if D[s, t] <= 0:
                raise ValueError("metric assigns zero distance to distinct states")
            for a in range(A):
                L_r = max(L_r, abs(mdp.rewards[s, a] - mdp.rewards[t, a]) / D[s, t])
                L_P = max(L_P, w1_discrete(mdp.transitions[s, a], mdp.transitions[t, a], metric) / D[s, t])
    return float(L_r), float(L_P)


def value_lipschitz_report(mdp: TabularMDP, metric: StateMetric) -> dict:
    """Check the closed-form value Lipschitz constant where it applies.

    The constant L_r / (1 - gamma L_P) bounds V_pi for policies whose action distribution
    is the same in every state, and the optimal value function. Those ratios are
    checked; the largest ratio over all deterministic policies is reported alongside.
    """
    L_r, L_P = instance_moduli(mdp, metric)
    try:
        bound = lipschitz_value_constant(L_r, L_P, mdp.discount)
    except ContractionError:
        bound = float('inf')
    S, A = mdp.n_states, mdp.n_actions
    covered = [TabularPolicy.deterministic(np.full(S, a), A) for a in range(A)]
    covered.append(TabularPolicy.uniform(S, A))
    ratios = [empirical_value_lipschitz(mdp, pi, metric) for pi in covered]
    V_opt, _ = policy_iteration(mdp)
    ratios.append(float(_lipschitz_ratio(V_opt, metric)))
    checked = max(ratios)
    return {
        'L_r': L_r,
        'L_P': L_P,
        'bound': bound,
        'checked_max': checked,
        'all_deterministic_max': max_value_lipschitz(mdp, metric),
        'holds': bool(checked <= bound * (1.0 + 1e-9) + BOUND_TOL),
    }


def two_state_saturating_instance(gamma: float = 0.9) -> tuple:
    """Two absorbing states one unit apart with rewards 0 and 1.

    L_r = L_P = 1 and the single policy has Lipschitz constant exactly 1 / (1 - gamma),
    which equals the closed-form bound.
    """
    P = np.zeros((2, 1, 2))
    P[0, 0, 0] = 1.0
    P[1, 0, 1] = 1.0
    mdp = TabularMDP(P, np.array([[0.0], [1.0]]), gamma, np.array([0.5, 0.5]))
    return mdp, StateMetric.from_coordinates([0.0, 1.0])


def joint_dynamics_scale(true_mdp: TabularMDP, model: TabularMDP, metric: Optional[StateMetric],
                         L_v: Optional[float] = None) -> float:
    """Scale on the dynamics term of the joint error cost.

    gamma * L_v for W1 (L_v from the model's own rewards when not given), and
    gamma * Rmax / (1 - gamma) on TV otherwise, which is gamma * Rmax / (2 (1 - gamma))
    on the l1 distance.
    """
    g = true_mdp.discount
    if metric is not None:
        if L_v is None:
            L_v = max_value_lipschitz(model, metric)
        return g * L_v
    r_max = max(true_mdp.r_max, model.r_max)
    return g * r_max / (1.0 - g)


def build_error_mdp(true_mdp: TabularMDP, model: TabularMDP, metric: Optional[StateMetric] = None,
                    mode: str = 'w1', L_v: Optional[float] = None) -> ErrorMDP:
    """Error-MDP over the true dynamics.

    Args:
        true_mdp: true kernel, rewards and start distribution
        model: learned kernel (and, for joint mode, learned rewards)
        metric: state metric, required for w1 mode; selects W1 over TV in joint mode
        mode: w1, tv, kl, or joint for |r - r_hat| + lambda * D(P, P_hat)
        L_v: value Lipschitz constant for the joint W1 scale

    Returns:
        ErrorMDP with one error reward per (s, a)
    """
    true_mdp.check_compatible(model)
    if mode not in ERROR_MODES:
        raise ValueError(f"unknown error mode '{mode}', expected one of {ERROR_MODES}")
    if mode == 'w1' and metric is None:
        raise ValueError("w1 error mode requires a StateMetric")
    if mode == 'joint':
        scale = joint_dynamics_scale(true_mdp, model, metric, L_v)
        dyn = pairwise_divergence(true_mdp, model, 'w1' if metric is not None else 'tv', metric)
        err = np.abs(true_mdp.rewards - model.rewards) + scale * dyn
        return ErrorMDP(true_mdp, err, mode, scale)
    err = pairwise_divergence(true_mdp, model, mode, metric)
    return ErrorMDP(true_mdp, np.clip(err, 0.0, None), mode)


def solve_error_mdp(emdp: ErrorMDP, tol: float = 1e-10, warm_start: Optional[TabularPolicy] = None) -> tuple:
    """(adversarial policy, V*(M_err)) by value iteration polished with policy iteration.

    V* is the start-weighted optimal value under unnormalized discounting. The polish
    makes it exact up to the linear-solve residual; `warm_start` skips value iteration.
    """
    mdp = emdp.mdp
    if not np.any(emdp.err_reward > 0):
        return TabularPolicy.deterministic(np.zeros(mdp.n_states, dtype=int), mdp.n_actions), 0.0
    init = warm_start if warm_start is not None else value_iteration(mdp, tol)[1]
    V, pi = policy_iteration(mdp, init)
    return pi, float(mdp.initial @ V)


def joint_value_gap(true_mdp: TabularMDP, model: TabularMDP, pi: TabularPolicy) -> float:
    """|V_pi(P, r) - V_pi(P_hat, r_hat)|, each MDP under its own rewards."""
    true_mdp.check_compatible(model)
    return abs(policy_value(true_mdp, pi) - policy_value(model, pi))


def joint_worst_case_gap(true_mdp: TabularMDP, model: TabularMDP) -> tuple:
    actions = deterministic_actions(true_mdp.n_states, true_mdp.n_actions)
    gaps = np.abs(deterministic_values(true_mdp, actions) @ true_mdp.initial
                  - deterministic_values(model, actions) @ true_mdp.initial)
    k = int(np.argmax(gaps))
    return TabularPolicy.deterministic(actions[k], true_mdp.n_actions), float(gaps[k])


@dataclass(frozen=True)
class DualityReport:
    """Worst-case gap against gamma * L_v * V*(M_err) for one (true, model) pair."""

    instance_hash: str
    mode: str
    lhs: float
    rhs: float
    L_v: float
    lv_source: str
    v_star: float
    realized_gap: float

    @property
    def holds(self) -> bool:
        return bool(self.lhs <= self.rhs + BOUND_TOL)

    @property
    def effective(self) -> bool:
        """Error-MDP policy reaches half of the enumerated worst case."""
        return bool(self.realized_gap >= 0.5 * self.lhs - BOUND_TOL)

    @property
    def tightness(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else float('inf'))

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(holds=self.holds, effective=self.effective)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def duality_check(true_mdp: TabularMDP, model: TabularMDP, metric: Optional[StateMetric] = None,
                  L_v: Optional[float] = None, mode: str = 'w1') -> DualityReport:
    """Compare the enumerated worst-case gap with the Error-MDP bound.

    w1 mode: rhs = gamma * L_v * V*, with L_v defaulting to the largest exact Lipschitz
    constant of V_pi under the model kernel (true rewards) over deterministic policies.
    tv mode: rhs = gamma * Rmax / (1 - gamma) * V*. joint mode: rhs = V* of the joint
    error cost, lhs compares each MDP under its own rewards.
    """
    true_mdp.check_compatible(model)
    lv_source = 'given' if L_v is not None else 'empirical'
    if mode == 'joint':
        emdp = build_error_mdp(true_mdp, model, metric, 'joint', L_v)
        adversary, v_star = solve_error_mdp(emdp)
        _, lhs = joint_worst_case_gap(true_mdp, model)
        realized = joint_value_gap(true_mdp, model, adversary)
        return DualityReport(array_hash(true_mdp.transitions, model.transitions, model.rewards), mode,
                             lhs, v_star, emdp.dynamics_scale, lv_source, v_star, realized)

    model_dyn = true_mdp.with_transitions(model.transitions)
    emdp = build_error_mdp(true_mdp, model, metric, mode)
    adversary, v_star = solve_error_mdp(emdp)
    _, lhs = worst_case_gap(true_mdp, model)
    realized = value_gap(true_mdp, model, adversary)
    g = true_mdp.discount
    if mode == 'w1':
        if L_v is None:
            L_v = max_value_lipschitz(model_dyn, metric)
        rhs = g * L_v * v_star
    elif mode == 'tv':
        L_v = true_mdp.r_max / (1.0 - g)
        lv_source = 'closed_form'
        rhs = g * L_v * v_star
    else:
        raise ValueError("duality_check supports w1, tv and joint modes")
    return DualityReport(array_hash(true_mdp.transitions, model.transitions), mode, lhs, rhs,
                         float(L_v), lv_source, v_star, realized)


def w1_coverage_bound(true_mdp: TabularMDP, model: TabularMDP, d_data, metric: StateMetric,
                      L_v: Optional[float] = None, policy_set="all_deterministic") -> dict:
    """Worst-case gap against gamma * L_v * kappa * E_{d_data}[W1(P, P_hat)]."""
    d_data = np.asarray(d_data, dtype=np.float64).reshape(true_mdp.n_states, true_mdp.n_actions)
    cov = coverage_constant(true_mdp, policy_set, d_data)
    _, lhs = worst_case_gap(true_mdp, model, policy_set)
    if L_v is None:
        L_v = max_value_lipschitz(true_mdp.with_transitions(model.transitions), metric)
    err = weighted_sum(d_data, pairwise_divergence(true_mdp, model, 'w1', metric))
    rhs = true_mdp.discount * L_v * cov.kappa * err if cov.finite else float('inf')
    return {'lhs': lhs, 'rhs': rhs, 'kappa': cov.kappa, 'L_v': L_v, 'data_w1': err}
