"""
Benchmark environments and data sources for simcert.

- NarrowPassageEnv: 2-D navigation with a wall, a narrow passage and a downward wind
  band in and in front of the passage.
- Random tabular MDP generators and kernel perturbations for the property suites.
- MinimalNoiseMDP: a deterministic reward-bearing chain times an irrelevant noise
  coordinate, with a coupled-slip model class.
- BiasedCoverageEnv: 1-D dynamics with a discontinuous contact region that the training
  distribution under-samples.

Environments are stateless: `step(states, actions, noise)` is a pure function and
`transition(states, actions, rng)` draws the noise itself.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .mdp import StateMetric, TabularMDP
from .utils import ShapeMismatchError


@dataclass(frozen=True)
class Transitions:
    """A batch of (s, a, r, s') tuples; states and actions are 2-D (N, dim)."""

    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=np.float64)
        a = np.asarray(self.a, dtype=np.float64)
        s = s.reshape(len(s), -1)
        a = a.reshape(len(a), -1)
        s_next = np.asarray(self.s_next, dtype=np.float64).reshape(len(s), -1)
        r = np.asarray(self.r, dtype=np.float64).reshape(len(s))
        if not (len(a) == len(s) and s_next.shape == s.shape):
            raise ShapeMismatchError("transition arrays disagree in length or state width")
        for name, value in (('s', s), ('a', a), ('r', r), ('s_next', s_next)):
            object.__setattr__(self, name, value)

    def __len__(self) -> int:
        return len(self.s)

    @property
    def state_dim(self) -> int:
        return self.s.shape[1]

    @property
    def action_dim(self) -> int:
        return self.a.shape[1]

    def subset(self, idx) -> 'Transitions':
        return Transitions(self.s[idx], self.a[idx], self.r[idx], self.s_next[idx])

    def concat(self, other: 'Transitions') -> 'Transitions':
        return Transitions(np.vstack([self.s, other.s]), np.vstack([self.a, other.a]),
                           np.concatenate([self.r, other.r]), np.vstack([self.s_next, other.s_next]))

    def _columns(self) -> list:
        return ([f's{i}' for i in range(self.state_dim)] + [f'a{i}' for i in range(self.action_dim)]
                + ['r'] + [f'sn{i}' for i in range(self.state_dim)])

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        table = np.hstack([self.s, self.a, self.r[:, None], self.s_next])
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(self._columns())
            writer.writerows([[repr(float(x)) for x in row] for row in table])
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'Transitions':
        with open(path, newline='') as f:
            reader = csv.DictReader(f)
            header = reader.fieldnames or []
            rows = list(reader)
        s_cols = [c for c in header if c.startswith('s') and not c.startswith('sn')]
        a_cols = [c for c in header if c.startswith('a')]
        n_cols = [c for c in header if c.startswith('sn')]
        if 'r' not in header or len(s_cols) != len(n_cols) or not s_cols:
            raise ValueError(f"{path}: expected columns s..., a..., r, sn...")

        def block(cols):
            return np.array([[float(row[c]) for c in cols] for row in rows]).reshape(len(rows), len(cols))
        return cls(block(s_cols), block(a_cols), block(['r'])[:, 0], block(n_cols))


class DatasetSource:
    """Replays a fixed transition set.

    Calling the source draws (s, a) rows, weighted by `weights` when given; `true_sampler`
    then returns the stored next states and rewards of the rows drawn last.
    """

    def __init__(self, data: Transitions, weights: Optional[np.ndarray] = None):
        self.data = data
        if weights is None:
            self.probs = None
        else:
            w = np.asarray(weights, dtype=np.float64)
            if w.shape != (len(data),) or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("weights must be nonnegative, one per transition, not all zero")
            self.probs = w / w.sum()
        self._last = None

    def __call__(self, rng: np.random.Generator, n: int) -> tuple:
        self._last = rng.choice(len(self.data), size=n, replace=True, p=self.probs)
        return self.data.s[self._last], self.data.a[self._last]

    def true_sampler(self, s, a, rng: np.random.Generator) -> tuple:
        if self._last is None or len(self._last) != len(s):
            raise RuntimeError("true_sampler must follow a draw of the same size")
        return self.data.s_next[self._last], self.data.r[self._last]


class GenerativeSource:
    """(s, a) pairs from a sampler, next states from the environment itself."""

    def __init__(self, env, pair_sampler: Callable[[np.random.Generator, int], tuple]):
        self.env = env
        self.pair_sampler = pair_sampler

    def __call__(self, rng: np.random.Generator, n: int) -> tuple:
        return self.pair_sampler(rng, n)

    def true_sampler(self, s, a, rng: np.random.Generator) -> tuple:
        return self.env.transition(s, a, rng), self.env.reward(s, a)


class TabularSource:
    """(s, a) ~ d_data over a TabularMDP and s' ~ P(.|s, a); states and actions are ints."""

    def __init__(self, mdp: TabularMDP, d_data: Optional[np.ndarray] = None):
        self.mdp = mdp
        S, A = mdp.n_states, mdp.n_actions
        d = np.full((S, A), 1.0 / (S * A)) if d_data is None else np.asarray(d_data, dtype=np.float64)
        if d.shape != (S, A) or abs(d.sum() - 1.0) > 1e-9 or np.any(d < 0):
            raise ValueError("d_data must be an (S, A) probability matrix")
        self.d_data = d

    def __call__(self, rng: np.random.Generator, n: int) -> tuple:
        flat = rng.choice(self.d_data.size, size=n, p=self.d_data.ravel())
        return np.divmod(flat, self.mdp.n_actions)

    def true_sampler(self, s, a, rng: np.random.Generator) -> tuple:
        rows = self.mdp.transitions[s, a]
        cdf = np.cumsum(rows, axis=1)
        u = rng.random(len(s))[:, None] * cdf[:, -1:]
        s_next = np.minimum((u >= cdf).sum(axis=1), self.mdp.n_states - 1)
        return s_next, self.mdp.rewards[s, a]


# --- tabular generators ------------------------------------------------------------------

def make_random_tabular(n_states: int, n_actions: int, sparsity: float = 0.0, seed: int = 0,
                        gamma: float = 0.9, r_max: float = 1.0) -> TabularMDP:
    """Random MDP: Dirichlet rows over a random support, uniform rewards in [0, r_max].

    `sparsity` in [0, 1] sets the support size max(1, round((1 - sparsity) * S)) of every
    row; sparsity 1 gives deterministic one-hot rows.
    """
    if n_states < 1 or n_actions < 1:
        raise ValueError("n_states and n_actions must be at least 1")
    if not 0.0 <= sparsity <= 1.0:
        raise ValueError(f"sparsity must lie in [0, 1], got {sparsity}")
    rng = np.random.default_rng(seed)
    k = max(1, int(round((1.0 - sparsity) * n_states)))
    P = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            support = rng.choice(n_states, size=k, replace=False)
            P[s, a, support] = rng.dirichlet(np.ones(k))
    P /= P.sum(axis=2, keepdims=True)
    rewards = rng.uniform(0.0, r_max, size=(n_states, n_actions))
    initial = rng.dirichlet(np.ones(n_states))
    return TabularMDP(P, rewards, gamma, initial, r_max)


def perturb_kernel(mdp: TabularMDP, scale: float, rng: np.random.Generator) -> TabularMDP:
    """Mix every row with a random Dirichlet row: (1 - scale) P + scale Q."""
    Q = rng.dirichlet(np.ones(mdp.n_states), size=(mdp.n_states, mdp.n_actions))
    return mdp.with_transitions((1.0 - scale) * mdp.transitions + scale * Q)


def corrupt_row(mdp: TabularMDP, s: int, a: int, rng: np.random.Generator, strength: float = 1.0) -> TabularMDP:
    """Copy of mdp with only the (s, a) row replaced by a mixture toward a random row."""
    P = mdp.transitions.copy()
    P[s, a] = (1.0 - strength) * P[s, a] + strength * rng.dirichlet(np.ones(mdp.n_states))
    return mdp.with_transitions(P)


def random_line_metric(n_states: int, rng: np.random.Generator) -> StateMetric:
    """1-D Euclidean metric over sorted uniform coordinates in [0, 1]."""
    return StateMetric.from_coordinates(np.sort(rng.uniform(0.0, 1.0, size=n_states)))


# --- narrow passage ----------------------------------------------------------------------

@dataclass(frozen=True)
class NarrowPassageEnv:
    """Unit-square navigation with a wall at x = 0.5 and a windy passage.

    wall_mode "truncate" stops the x-motion just before the wall and keeps the y-motion;
    "reject" cancels the whole step. wind_mode "approach" applies the downward wind for
    x in [0.40, 0.55] and "inside" only for x in [0.45, 0.55]; both require the y range
    of the passage. Noise is added outside the wind region only.
    """

    start: tuple = (0.1, 0.5)
    goal_x: float = 0.9
    wall_x: float = 0.5
    passage: tuple = (0.45, 0.55)
    action_bound: float = 0.1
    wind: float = 0.05
    wind_mode: str = 'approach'
    noise_std: float = 0.1
    wall_mode: str = 'truncate'
    horizon: int = 200
    wall_margin: float = 1e-6
    band_halfwidth: float = 0.1

    state_dim = 2
    action_dim = 2

    def __post_init__(self):
        if self.wind_mode not in ('approach', 'inside'):
            raise ValueError(f"unknown wind_mode '{self.wind_mode}'")
        if self.wall_mode not in ('truncate', 'reject'):
            raise ValueError(f"unknown wall_mode '{self.wall_mode}'")

    @property
    def wind_x_range(self) -> tuple:
        return (0.40, 0.55) if self.wind_mode == 'approach' else (0.45, 0.55)

    def in_wind_region(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(states)
        x_lo, x_hi = self.wind_x_range
        y_lo, y_hi = self.passage
        return ((states[:, 0] >= x_lo) & (states[:, 0] <= x_hi)
                & (states[:, 1] >= y_lo) & (states[:, 1] <= y_hi))

    def in_strategic_band(self, states: np.ndarray) -> np.ndarray:
        """The wall/passage band |x - wall| <= band_halfwidth, where the dynamics are non-trivial."""
        return np.abs(np.atleast_2d(states)[:, 0] - self.wall_x) <= self.band_halfwidth

    def step(self, states, actions, noise) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
        noise = np.atleast_2d(np.asarray(noise, dtype=np.float64))
        if not (states.shape == actions.shape == noise.shape) or states.shape[1] != 2:
            raise ShapeMismatchError("states, actions and noise must all have shape (N, 2)")
        if np.any(np.abs(actions) > self.action_bound + 1e-12):
            raise ValueError(f"actions must lie in [-{self.action_bound}, {self.action_bound}]^2")
        windy = self.in_wind_region(states)
        motion = actions.copy()
        motion[windy, 1] -= self.wind
        motion[~windy] += noise[~windy]
        proposed = states + motion

        dx = proposed[:, 0] - states[:, 0]
        crosses = (states[:, 0] - self.wall_x) * (proposed[:, 0] - self.wall_x) < 0
        with np.errstate(divide='ignore', invalid='ignore'):
            t = np.where(crosses, (self.wall_x - states[:, 0]) / np.where(dx == 0, 1.0, dx), 0.0)
        y_cross = states[:, 1] + t * (proposed[:, 1] - states[:, 1])
        blocked = crosses & ((y_cross < self.passage[0]) | (y_cross > self.passage[1]))
        if self.wall_mode == 'truncate':
            side = np.sign(states[:, 0] - self.wall_x)
            proposed[blocked, 0] = self.wall_x + side[blocked] * self.wall_margin
        else:
            proposed[blocked] = states[blocked]
        return np.clip(proposed, 0.0, 1.0)

    def sample_noise(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.noise_std * rng.standard_normal((n, 2))

    def transition(self, states, actions, rng: np.random.Generator) -> np.ndarray:
        states = np.atleast_2d(states)
        return self.step(states, actions, self.sample_noise(rng, len(states)))

    def reward(self, states, actions) -> np.ndarray:
        """Rewards are attached to arrival, see task_reward; the transition reward is 0."""
        return np.zeros(len(np.atleast_2d(states)))

    def task_reward(self, next_states) -> np.ndarray:
        return (np.atleast_2d(next_states)[:, 0] > self.goal_x).astype(np.float64)

    def reset(self, rng: np.random.Generator, n: int, uniform: bool = True) -> np.ndarray:
        if uniform:
            return rng.uniform(0.0, 1.0, size=(n, 2))
        return np.tile(np.asarray(self.start, dtype=np.float64), (n, 1))

    def random_actions(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(-self.action_bound, self.action_bound, size=(n, 2))

    def uniform_pairs(self, rng: np.random.Generator, n: int) -> tuple:
        return self.reset(rng, n), self.random_actions(rng, n)

    def true_mean(self, states, actions, rng: np.random.Generator, n_samples: int = 256) -> np.ndarray:
        """Monte-Carlo estimate of E[s' | s, a] (exact in the noise-free wind region)."""
        states = np.atleast_2d(states)
        actions = np.atleast_2d(actions)
        total = np.zeros_like(states, dtype=np.float64)
        for _ in range(n_samples):
            total += self.transition(states, actions, rng)
        return total / n_samples


def np_step(state, action, noise, env: Optional[NarrowPassageEnv] = None) -> np.ndarray:
    """One narrow-passage step for a single state or a batch; shape follows the input."""
    env = env or NarrowPassageEnv()
    out = env.step(state, action, noise)
    return out[0] if np.ndim(state) == 1 else out


# --- minimal-noise misspecification instance ---------------------------------------------

@dataclass(frozen=True)
class MinimalNoiseMDP:
    """Deterministic chain c in [0, K) times a uniform noise level n in [0, N).

    State index is c * N + n. Action 0 moves left and action 1 moves right along the
    chain; the reward is 1 at the right end. The noise level is redrawn uniformly every
    step and never affects reward or chain motion.
    """

    mdp: TabularMDP
    chain_length: int
    noise_levels: int

    def chain_next(self) -> np.ndarray:
        c = np.arange(self.chain_length)
        return np.stack([np.maximum(c - 1, 0), np.minimum(c + 1, self.chain_length - 1)], axis=1)

    def permute_noise(self, perm) -> TabularMDP:
        """The same MDP with noise levels relabelled by `perm`."""
        K, N = self.chain_length, self.noise_levels
        idx = (np.arange(K)[:, None] * N + np.asarray(perm)[None, :]).ravel()
        P = self.mdp.transitions[np.ix_(idx, np.arange(2), idx)]
        return TabularMDP(P, self.mdp.rewards[idx], self.mdp.discount, self.mdp.initial[idx], self.mdp.r_max)


@dataclass(frozen=True)
class SlipModelClass:
    """One-parameter coupled-slip models P_sigma over a MinimalNoiseMDP.

    With probability 1 - sigma the chain moves correctly and the noise collapses to level 0
    (up to a floor epsilon); with probability sigma both coordinates are redrawn
    uniformly. sigma = 0 is deterministic on the chain, so its value gap is zero, while
    likelihood prefers sigma > 0 to cover the noise.
    """

    instance: MinimalNoiseMDP
    epsilon: float = 0.05

    def kernel(self, sigma: float) -> np.ndarray:
        K, N = self.instance.chain_length, self.instance.noise_levels
        nxt = self.instance.chain_next()
        chain = np.full((K, 2, K), sigma / K)
        chain[np.arange(K)[:, None], np.arange(2)[None, :], nxt] += 1.0 - sigma
        noise = np.full(N, (1.0 - sigma) * self.epsilon / N + sigma / N)
        noise[0] += (1.0 - sigma) * (1.0 - self.epsilon)
        row = np.einsum('cak,n->cakn', chain, noise).reshape(K, 2, K * N)
        return np.repeat(row, N, axis=0)

    def model(self, sigma: float) -> TabularMDP:
        if not 0.0 <= sigma <= 1.0:
            raise ValueError(f"sigma must lie in [0, 1], got {sigma}")
        return self.instance.mdp.with_transitions(self.kernel(sigma))

    def grid(self, n: int = 101) -> np.ndarray:
        return np.linspace(0.0, 1.0, n)


def make_minimal_noise_instance(noise_levels: int, chain_length: int = 3, gamma: float = 0.9,
                                epsilon: float = 0.05) -> tuple:
    """(MinimalNoiseMDP, SlipModelClass) for the given number of irrelevant noise levels."""
    if noise_levels < 1 or chain_length < 2:
        raise ValueError("need noise_levels >= 1 and chain_length >= 2")
    K, N = chain_length, noise_levels
    S = K * N
    nxt = np.stack([np.maximum(np.arange(K) - 1, 0), np.minimum(np.arange(K) + 1, K - 1)], axis=1)
    P = np.zeros((S, 2, S))
    for c in range(K):
        for a in range(2):
            P[c * N:(c + 1) * N, a, nxt[c, a] * N:(nxt[c, a] + 1) * N] = 1.0 / N
    rewards = np.zeros((S, 2))
    rewards[(K - 1) * N:, :] = 1.0
    initial = np.zeros(S)
    initial[:N] = 1.0 / N
    instance = MinimalNoiseMDP(TabularMDP(P, rewards, gamma, initial, 1.0), K, N)
    return instance, SlipModelClass(instance, epsilon)


# --- biased coverage ---------------------------------------------------------------------

@dataclass(frozen=True)
class BiasedCoverageEnv:
    """1-D dynamics with a contact-like reflection past `threshold`.

    For s <= threshold the next state is s + gain * a + drift * sin(pi s); beyond it the
    state reflects off the contact: threshold - restitution * (s - threshold) + gain * a
    - contact_loss. The training distribution draws sensitive states share / bias_factor
    of the time instead of `share`.
    """

    threshold: float = 0.6
    bias_factor: float = 4.0
    noise_std: float = 0.01
    gain: float = 0.1
    drift: float = 0.05
    restitution: float = 0.8
    contact_loss: float = 0.1
    low: float = -1.0
    high: float = 1.0

    state_dim = 1
    action_dim = 1

    def __post_init__(self):
        if not self.low < self.threshold < self.high:
            raise ValueError("threshold must lie strictly inside the state range")
        if self.bias_factor <= 0:
            raise ValueError("bias_factor must be positive")

    @property
    def sensitive_share(self) -> float:
        """Fraction of the uniform distribution inside the sensitive region."""
        return (self.high - self.threshold) / (self.high - self.low)

    def is_sensitive(self, states) -> np.ndarray:
        return np.asarray(states, dtype=np.float64).reshape(-1) > self.threshold

    def mean_next(self, states, actions) -> np.ndarray:
        s = np.asarray(states, dtype=np.float64).reshape(-1, 1)
        a = np.asarray(actions, dtype=np.float64).reshape(-1, 1)
        free = s + self.gain * a + self.drift * np.sin(np.pi * s)
        contact = self.threshold - self.restitution * (s - self.threshold) + self.gain * a - self.contact_loss
        return np.where(s > self.threshold, contact, free)

    def step(self, states, actions, noise) -> np.ndarray:
        return self.mean_next(states, actions) + np.asarray(noise, dtype=np.float64).reshape(-1, 1)

    def transition(self, states, actions, rng: np.random.Generator) -> np.ndarray:
        n = np.asarray(states).reshape(-1).size
        return self.step(states, actions, self.noise_std * rng.standard_normal((n, 1)))

    def reward(self, states, actions) -> np.ndarray:
        s = np.asarray(states, dtype=np.float64).reshape(-1)
        a = np.asarray(actions, dtype=np.float64).reshape(-1)
        return 1.0 - 0.5 * s ** 2 - 0.1 * a ** 2

    def reset(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(n, 1))

    def uniform_pairs(self, rng: np.random.Generator, n: int) -> tuple:
        return self.reset(rng, n), rng.uniform(-1.0, 1.0, size=(n, 1))

    def biased_pairs(self, rng: np.random.Generator, n: int) -> tuple:
        """Pairs whose sensitive fraction is exactly round(n * share / bias_factor) / n."""
        share = self.sensitive_share / max(self.bias_factor, 1.0)
        n_sens = int(round(n * share))
        s = np.concatenate([rng.uniform(self.threshold, self.high, size=n_sens),
                            rng.uniform(self.low, self.threshold, size=n - n_sens)])
        s = s[rng.permutation(n)].reshape(n, 1)
        return s, rng.uniform(-1.0, 1.0, size=(n, 1))

    def batch(self, s, a, rng: np.random.Generator) -> Transitions:
        return Transitions(s, a, self.reward(s, a), self.transition(s, a, rng))


def biased_batch(env: BiasedCoverageEnv, n: int, seed: int) -> Transitions:
    """n transitions drawn from the biased training distribution."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    s, a = env.biased_pairs(rng, n)
    return env.batch(s, a, rng)
