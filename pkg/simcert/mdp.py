"""
Exact finite-MDP machinery for simcert.

Policies, discounted occupancies, exact policy evaluation, value iteration and
policy iteration. Everything here is a dense linear solve: these functions are the
ground-truth oracle that every bound check compares against, so they favour
precision over scale.

Occupancies are kept unnormalized: sum_{s,a} d_pi(s,a) = 1/(1 - gamma).
"""

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .utils import (
    BudgetExceededError, NumericalError, ShapeMismatchError,
    MASS_TOL, POLICY_ENUM_LIMIT, ROW_TOL, SOLVE_RESIDUAL_TOL,
)

MDP_FILE_MAGIC = "# simcert-mdp v1"


def _frozen(arr, dtype=np.float64) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TabularMDP:
    """Finite discounted MDP with an exact transition tensor P[s, a, s']."""

    transitions: np.ndarray
    rewards: np.ndarray
    discount: float
    initial: np.ndarray
    r_max: Optional[float] = None

    def __post_init__(self):
        P = _frozen(self.transitions)
        r = _frozen(self.rewards)
        rho = _frozen(self.initial)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ShapeMismatchError(f"transitions must have shape (S, A, S), got {P.shape}")
        S, A, _ = P.shape
        if r.shape != (S, A):
            raise ShapeMismatchError(f"rewards must have shape {(S, A)}, got {r.shape}")
        if rho.shape != (S,):
            raise ShapeMismatchError(f"initial must have shape {(S,)}, got {rho.shape}")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")
        if np.any(P < -ROW_TOL) or np.max(np.abs(P.sum(axis=2) - 1.0)) > ROW_TOL:
            raise ValueError("every transition row must be a probability vector")
        if np.any(rho < -ROW_TOL) or abs(rho.sum() - 1.0) > ROW_TOL:
            raise ValueError("initial distribution must be a probability vector")
        r_max = float(self.r_max) if self.r_max is not None else max(float(r.max()), 1.0)
        if np.any(r < -ROW_TOL) or np.any(r > r_max + ROW_TOL):
            raise ValueError(f"rewards must lie in [0, {r_max}]")
        object.__setattr__(self, 'transitions', P)
        object.__setattr__(self, 'rewards', r)
        object.__setattr__(self, 'initial', rho)
        object.__setattr__(self, 'discount', float(self.discount))
        object.__setattr__(self, 'r_max', r_max)

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def horizon(self) -> float:
        """Effective horizon 1/(1 - gamma), the total occupancy mass."""
        return 1.0 / (1.0 - self.discount)

    def with_transitions(self, transitions: np.ndarray) -> 'TabularMDP':
        """Same rewards, discount and start distribution over a different kernel."""
        return TabularMDP(transitions, self.rewards, self.discount, self.initial, self.r_max)

    def with_rewards(self, rewards: np.ndarray, r_max: Optional[float] = None) -> 'TabularMDP':
        return TabularMDP(self.transitions, rewards, self.discount, self.initial, r_max)

    def check_compatible(self, other: 'TabularMDP'):
        """Raise ShapeMismatchError unless both MDPs share state and action spaces."""
        if self.transitions.shape != other.transitions.shape:
            raise ShapeMismatchError(
                f"MDP shapes differ: {self.transitions.shape} vs {other.transitions.shape}")


@dataclass(frozen=True)
class TabularPolicy:
    """Stationary policy pi(a|s), one probability row per state."""

    probs: np.ndarray

    def __post_init__(self):
        pi = _frozen(self.probs)
        if pi.ndim != 2:
            raise ShapeMismatchError(f"policy must have shape (S, A), got {pi.shape}")
        if np.any(pi < -ROW_TOL) or np.max(np.abs(pi.sum(axis=1) - 1.0)) > ROW_TOL:
            raise ValueError("every policy row must be a probability vector")
        object.__setattr__(self, 'probs', pi)

    @classmethod
    def deterministic(cls, actions: Sequence[int], n_actions: int) -> 'TabularPolicy':
        actions = np.asarray(actions, dtype=int)
        probs = np.zeros((actions.size, n_actions))
        probs[np.arange(actions.size), actions] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> 'TabularPolicy':
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def random(cls, n_states: int, n_actions: int, rng: np.random.Generator) -> 'TabularPolicy':
        return cls(rng.dirichlet(np.ones(n_actions), size=n_states))

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.probs.shape[1]

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(np.isclose(self.probs.max(axis=1), 1.0)))

    @property
    def actions(self) -> np.ndarray:
        """Greedy action per state (lowest index on ties)."""
        return np.argmax(self.probs, axis=1)

    def mix(self, other: 'TabularPolicy', weight: float) -> 'TabularPolicy':
        """Per-state mixture (1 - weight) * self + weight * other."""
        return TabularPolicy((1.0 - weight) * self.probs + weight * other.probs)


@dataclass(frozen=True)
class OccupancyMeasure:
    """Unnormalized discounted state-action occupancy d_pi(s, a)."""

    d: np.ndarray
    discount: float

    def __post_init__(self):
        object.__setattr__(self, 'd', _frozen(self.d))

    @property
    def total_mass(self) -> float:
        return float(self.d.sum())

    @property
    def states(self) -> np.ndarray:
        """State occupancy nu(s) = sum_a d(s, a)."""
        return self.d.sum(axis=1)

    def normalized(self) -> np.ndarray:
        """(1 - gamma) * d, a probability distribution over pairs."""
        return (1.0 - self.discount) * self.d


@dataclass(frozen=True)
class StateMetric:
    """Metric d(s, s') over a finite state space.

    When `coords` is given the metric is 1-D Euclidean over those coordinates,
    which lets W1 use the sorted-CDF closed form.
    """

    dist: np.ndarray
    coords: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        D = _frozen(self.dist)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ShapeMismatchError(f"metric must be square, got {D.shape}")
        if np.any(D < 0) or np.any(np.diag(D) != 0) or not np.allclose(D, D.T, atol=1e-12):
            raise ValueError("metric must be nonnegative, symmetric, with zero diagonal")
        object.__setattr__(self, 'dist', D)
        if self.coords is not None:
            object.__setattr__(self, 'coords', _frozen(self.coords))

    @classmethod
    def from_coordinates(cls, coords: Sequence[float]) -> 'StateMetric':
        x = np.asarray(coords, dtype=np.float64)
        return cls(np.abs(x[:, None] - x[None, :]), coords=x)

    @classmethod
    def discrete(cls, n_states: int) -> 'StateMetric':
        """0/1 metric; W1 under it equals total variation."""
        return cls(1.0 - np.eye(n_states))

    @property
    def n_states(self) -> int:
        return self.dist.shape[0]

    @property
    def is_one_dimensional(self) -> bool:
        return self.coords is not None

    def triangle_violation(self) -> float:
        """Largest d(i,k) - d(i,j) - d(j,k) over all triples (<= 0 for a metric)."""
        D = self.dist
        return float(np.max(D[:, None, :] - D[:, :, None] - D[None, :, :]))


def policy_kernel(mdp: TabularMDP, pi: TabularPolicy) -> tuple:
    """State-to-state kernel P_pi and reward vector r_pi under policy pi."""
    if pi.probs.shape != (mdp.n_states, mdp.n_actions):
        raise ShapeMismatchError(
            f"policy shape {pi.probs.shape} does not match MDP ({mdp.n_states}, {mdp.n_actions})")
    P_pi = np.einsum('sa,sat->st', pi.probs, mdp.transitions)
    r_pi = np.einsum('sa,sa->s', pi.probs, mdp.rewards)
    return P_pi, r_pi


def _solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"linear solve failed: {e}") from e
    residual = np.max(np.abs(A @ x - b)) if x.size else 0.0
    if not np.all(np.isfinite(x)) or residual > SOLVE_RESIDUAL_TOL * max(1.0, np.max(np.abs(b))):
        raise NumericalError(f"linear solve residual {residual:.3e} exceeds tolerance")
    return x


def occupancy(mdp: TabularMDP, pi: TabularPolicy) -> OccupancyMeasure:
    """Solve nu = rho0 + gamma * P_pi^T nu and return d(s, a) = nu(s) * pi(a|s)."""
    P_pi, _ = policy_kernel(mdp, pi)
    S = mdp.n_states
    nu = _solve(np.eye(S) - mdp.discount * P_pi.T, mdp.initial)
    d = nu[:, None] * pi.probs
    if abs(d.sum() - mdp.horizon) > MASS_TOL * mdp.horizon:
        raise NumericalError(f"occupancy mass {d.sum():.8f} differs from 1/(1-gamma) = {mdp.horizon:.8f}")
    return OccupancyMeasure(np.clip(d, 0.0, None), mdp.discount)


def state_values(mdp: TabularMDP, pi: TabularPolicy) -> np.ndarray:
    """V_pi(s) by exact solve of (I - gamma P_pi) V = r_pi."""
    P_pi, r_pi = policy_kernel(mdp, pi)
    return _solve(np.eye(mdp.n_states) - mdp.discount * P_pi, r_pi)


def policy_value(mdp: TabularMDP, pi: TabularPolicy) -> float:
    """rho0-weighted value V_pi(P) = sum_{s,a} d_pi(s,a) r(s,a)."""
    return float(mdp.initial @ state_values(mdp, pi))


def value_gap(true_mdp: TabularMDP, model: TabularMDP, pi: TabularPolicy) -> float:
    """|V_pi(P) - V_pi(P_hat)| with the true rewards used under both kernels."""
    true_mdp.check_compatible(model)
    model_dyn = true_mdp.with_transitions(model.transitions)
    return abs(policy_value(true_mdp, pi) - policy_value(model_dyn, pi))


def count_deterministic(n_states: int, n_actions: int) -> int:
    return n_actions ** n_states


def deterministic_actions(n_states: int, n_actions: int, limit: int = POLICY_ENUM_LIMIT) -> np.ndarray:
    """All deterministic policies as an int array (K, S), lexicographic order."""
    count = count_deterministic(n_states, n_actions)
    if count > limit:
        raise BudgetExceededError(
            f"{n_actions}^{n_states} = {count} deterministic policies exceed the budget of {limit}")
    return np.array(list(itertools.product(range(n_actions), repeat=n_states)), dtype=int).reshape(count, n_states)


def iter_deterministic(n_states: int, n_actions: int, limit: int = POLICY_ENUM_LIMIT) -> Iterator[TabularPolicy]:
    for row in deterministic_actions(n_states, n_actions, limit):
        yield TabularPolicy.deterministic(row, n_actions)


def deterministic_values(mdp: TabularMDP, actions: np.ndarray, rewards: Optional[np.ndarray] = None,
                         chunk: int = 4096) -> np.ndarray:
    """State values V[k, s] of every deterministic policy in `actions` (K, S), batched."""
    r = mdp.rewards if rewards is None else rewards
    S = mdp.n_states
    out = np.empty((actions.shape[0], S))
    idx = np.arange(S)
    eye = np.eye(S)
    for start in range(0, actions.shape[0], chunk):
        acts = actions[start:start + chunk]
        P_pi = mdp.transitions[idx[None, :], acts]          # (k, S, S)
        r_pi = r[idx[None, :], acts]                        # (k, S)
        try:
            out[start:start + chunk] = np.linalg.solve(eye[None] - mdp.discount * P_pi, r_pi[..., None])[..., 0]
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"batched policy evaluation failed: {e}") from e
    return out


def worst_case_gap(true_mdp: TabularMDP, model: TabularMDP,
                   policy_class: Union[str, Sequence[TabularPolicy]] = "all_deterministic") -> tuple:
    """sup over a policy class of |V_pi(P) - V_pi(P_hat)|.

    Args:
        true_mdp: MDP carrying the true kernel and the rewards used for both sides
        model: MDP whose transitions are the learned kernel
        policy_class: "all_deterministic" or an explicit sequence of policies

    Returns:
        (argmax policy, gap); the first maximizer wins ties
    """
    true_mdp.check_compatible(model)
    model_dyn = true_mdp.with_transitions(model.transitions)
    if isinstance(policy_class, str):
        if policy_class != "all_deterministic":
            raise ValueError(f"unknown policy class '{policy_class}'")
        actions = deterministic_actions(true_mdp.n_states, true_mdp.n_actions)
        gaps = np.abs(deterministic_values(true_mdp, actions) @ true_mdp.initial
                      - deterministic_values(model_dyn, actions) @ true_mdp.initial)
        k = int(np.argmax(gaps))
        return TabularPolicy.deterministic(actions[k], true_mdp.n_actions), float(gaps[k])
    policies = list(policy_class)
    if not policies:
        raise ValueError("policy set must be nonempty")
    gaps = [value_gap(true_mdp, model_dyn, pi) for pi in policies]
    k = int(np.argmax(gaps))
    return policies[k], float(gaps[k])


def bellman_q(mdp: TabularMDP, values: np.ndarray, rewards: Optional[np.ndarray] = None) -> np.ndarray:
    r = mdp.rewards if rewards is None else rewards
    return r + mdp.discount * mdp.transitions @ values


def greedy_policy(q: np.ndarray) -> TabularPolicy:
    """One-hot argmax policy; np.argmax keeps the lowest index on ties."""
    return TabularPolicy.deterministic(np.argmax(q, axis=1), q.shape[1])


def value_iteration(mdp: TabularMDP, tol: float = 1e-10, max_iter: int = 1_000_000) -> tuple:
    """Optimal state values and the greedy policy.

    Iterates until the sup-norm Bellman residual is at most tol * (1 - gamma) / 3, which
    keeps both the residual and the greedy policy's exact value within tol of the result.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    target = tol * (1.0 - mdp.discount) / 3.0
    V = np.zeros(mdp.n_states)
    for _ in range(max_iter):
        V_new = bellman_q(mdp, V).max(axis=1)
        if np.max(np.abs(V_new - V)) <= target:
            V = V_new
            break
        V = V_new
    else:
        raise NumericalError(f"value iteration did not reach tol={tol} in {max_iter} iterations")
    return V, greedy_policy(bellman_q(mdp, V))


def policy_iteration(mdp: TabularMDP, init: Optional[TabularPolicy] = None, max_iter: int = 10_000) -> tuple:
    """Exact optimal values and policy by Howard's policy iteration.

    An action only replaces the current one when it improves Q by more than 1e-12,
    so the loop terminates on ties.
    """
    actions = (init.actions if init is not None else np.zeros(mdp.n_states, dtype=int)).copy()
    idx = np.arange(mdp.n_states)
    for _ in range(max_iter):
        pi = TabularPolicy.deterministic(actions, mdp.n_actions)
        V = state_values(mdp, pi)
        q = bellman_q(mdp, V)
        best = np.argmax(q, axis=1)
        improve = q[idx, best] > q[idx, actions] + 1e-12
        if not np.any(improve):
            return V, pi
        actions = np.where(improve, best, actions)
    raise NumericalError("policy iteration did not stabilise")


def save_mdp(mdp: TabularMDP, path: Union[str, Path]):
    """Write an MDP file: key/value header, then row-major dense blocks."""
    S, A = mdp.n_states, mdp.n_actions
    lines = [
        MDP_FILE_MAGIC,
        f"n_states {S}",
        f"n_actions {A}",
        f"gamma {mdp.discount!r}",
        f"r_max {mdp.r_max!r}",
        "initial",
        " ".join(f"{x:.17g}" for x in mdp.initial),
        "transitions",
    ]
    for s in range(S):
        for a in range(A):
            lines.append(" ".join(f"{x:.17g}" for x in mdp.transitions[s, a]))
    lines.append("rewards")
    for s in range(S):
        lines.append(" ".join(f"{x:.17g}" for x in mdp.rewards[s]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_mdp(path: Union[str, Path]) -> TabularMDP:
    """Read an MDP file written by save_mdp (blank lines and '#' comments ignored)."""
    raw = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in raw if ln and not ln.startswith('#')]
    header = {}
    pos = 0
    while pos < len(lines) and lines[pos] not in ('initial', 'transitions', 'rewards'):
        key, _, value = lines[pos].partition(' ')
        header[key] = value.strip()
        pos += 1
    try:
        S = int(header['n_states'])
        A = int(header['n_actions'])
        gamma = float(header['gamma'])
    except (KeyError, ValueError) as e:
        raise ValueError(f"{path}: malformed MDP header ({e})") from e
    r_max = float(header['r_max']) if 'r_max' in header else None

    blocks = {}
    while pos < len(lines):
        name = lines[pos]
        n_rows = {'initial': 1, 'transitions': S * A, 'rewards': S}.get(name)
        if n_rows is None:
            raise ValueError(f"{path}: unexpected section '{name}'")
        rows = lines[pos + 1:pos + 1 + n_rows]
        blocks[name] = np.array([[float(x) for x in row.split()] for row in rows])
        pos += 1 + n_rows
    missing = {'initial', 'transitions', 'rewards'} - set(blocks)
    if missing:
        raise ValueError(f"{path}: missing sections {sorted(missing)}")
    return TabularMDP(blocks['transitions'].reshape(S, A, S), blocks['rewards'].reshape(S, A),
                      gamma, blocks['initial'].reshape(S), r_max)


def deterministic_occupancies(mdp: TabularMDP, actions: np.ndarray) -> np.ndarray:
    """Occupancies d[k, s, a] of every deterministic policy in `actions` (K, S), batched."""
    S, A = mdp.n_states, mdp.n_actions
    idx = np.arange(S)
    P_pi = mdp.transitions[idx[None, :], actions]                    # (K, S, S)
    lhs = np.eye(S)[None] - mdp.discount * np.swapaxes(P_pi, 1, 2)
    rhs = np.broadcast_to(mdp.initial, (actions.shape[0], S))[..., None]
    try:
        nu = np.linalg.solve(lhs, rhs)[..., 0]
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"batched occupancy solve failed: {e}") from e
    d = np.zeros((actions.shape[0], S, A))
    d[np.arange(actions.shape[0])[:, None], idx[None, :], actions] = np.clip(nu, 0.0, None)
    return d
