"""
Critic-guided active data selection.

- iterative_learning_tabular / iterative_learning: alternate critic maximization,
  model minimization and a sampling distribution proportional to the critic's
  per-pair error
- finite_time_check: the averaged model's worst-case gap against the coverage-weighted
  mean critic objective
- regularized_game: mirror-descent model player against an entropic hedge distribution
  player, with exact regrets and duality gap
- task_aware_sampler: policy-gradient sampler on alpha * task reward + critic gap
"""

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp, rel_entr, softmax

from .envs import DatasetSource, Transitions
from .error_mdp import build_error_mdp, max_value_lipschitz, solve_error_mdp
from .games import GameConfig, GameTrace, TabularKernel, mle_baseline, train_w1_critic
from .mdp import (
    StateMetric, TabularMDP, TabularPolicy,
    bellman_q, occupancy, policy_value, state_values, worst_case_gap,
)
from .metrics import coverage_constant, w1_with_potential
from .nn import AdamState, GaussianPolicy, MixtureModel, adam_step
from .utils import BOUND_TOL, ConfigError, NumericalError, ShapeMismatchError

SADDLE_COLUMNS = ('T', 'payoff', 'regret_M', 'regret_D', 'duality_gap', 'bound_rhs')
ZERO_ERROR = 1e-12


@dataclass
class ActiveConfig:
    """Knobs of the active loop and the task-aware sampler."""

    rounds: int = 3
    samples_per_round: int = 512
    pool_size: int = 4096
    real_samples: int = 32
    w_max: float = 10.0
    uniform_mix: float = 0.1
    eta_model: float = 5.0
    alpha: float = 0.0
    final_mle_rounds: int = 0
    sampler_iterations: int = 50
    sampler_episodes: int = 16
    sampler_horizon: int = 20
    sampler_lr: float = 3e-3
    sampler_discount: float = 0.99
    model_samples: int = 4
    game: GameConfig = field(default_factory=GameConfig)

    def __post_init__(self):
        if isinstance(self.game, dict):
            self.game = GameConfig(**self.game)
        for name in ('rounds', 'samples_per_round', 'pool_size', 'real_samples', 'sampler_iterations',
                     'sampler_episodes', 'sampler_horizon', 'model_samples'):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"active.{name} must be a positive integer, got {getattr(self, name)}")
        if self.w_max < 1:
            raise ConfigError(f"active.w_max must be at least 1, got {self.w_max}")
        if not 0.0 <= self.uniform_mix <= 1.0:
            raise ConfigError(f"active.uniform_mix must lie in [0, 1], got {self.uniform_mix}")
        if self.alpha < 0:
            raise ConfigError(f"active.alpha must be nonnegative, got {self.alpha}")
        if self.eta_model <= 0 or self.sampler_lr <= 0 or not 0 < self.sampler_discount <= 1:
            raise ConfigError("active step sizes must be positive and the sampler discount in (0, 1]")
        if self.final_mle_rounds < 0:
            raise ConfigError("active.final_mle_rounds must be nonnegative")


class SamplingDistribution:
    """A distribution over (s, a) pairs to draw training transitions from.

    Three forms: an explicit (S, A) probability matrix; a weighted candidate pool of
    continuous pairs; or a GaussianPolicy rolled out in an environment. Reweighting is
    always clipped to [1 / w_max, w_max] relative to the base distribution.
    """

    def __init__(self, probs: Optional[np.ndarray] = None, pool: Optional[tuple] = None,
                 pool_weights: Optional[np.ndarray] = None, policy: Optional[GaussianPolicy] = None,
                 env=None, horizon: int = 20, w_max: float = 3.0):
        if w_max < 1:
            raise ValueError(f"w_max must be at least 1, got {w_max}")
        if sum(x is not None for x in (probs, pool, policy)) != 1:
            raise ValueError("give exactly one of probs, pool or policy")
        self.w_max = float(w_max)
        self.probs = None
        if probs is not None:
            p = np.asarray(probs, dtype=np.float64)
            if p.ndim != 2 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ValueError("tabular sampling distribution must be an (S, A) probability matrix")
            self.probs = p
        self.pool = pool
        if pool is not None:
            n = len(pool[0])
            w = np.ones(n) if pool_weights is None else np.asarray(pool_weights, dtype=np.float64)
            if w.shape != (n,) or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("pool weights must be nonnegative, one per candidate")
            self.pool_weights = w / w.sum()
        self.policy = policy
        self.env = env
        self.horizon = int(horizon)

    @property
    def kind(self) -> str:
        if self.probs is not None:
            return 'tabular'
        return 'pool' if self.pool is not None else 'policy'

    def __call__(self, rng: np.random.Generator, n: int) -> tuple:
        if self.probs is not None:
            flat = rng.choice(self.probs.size, size=n, p=self.probs.ravel())
            return np.divmod(flat, self.probs.shape[1])
        if self.pool is not None:
            idx = rng.choice(len(self.pool_weights), size=n, p=self.pool_weights)
            return self.pool[0][idx], self.pool[1][idx]
        states, actions = rollout_pairs(self.env, self.policy, rng, -(-n // self.horizon), self.horizon)
        idx = rng.choice(len(states), size=n, replace=False) if len(states) >= n else rng.choice(len(states), n)
        return states[idx], actions[idx]

    def mass(self, mask: np.ndarray) -> float:
        """Probability the distribution assigns to a boolean mask over pairs or pool entries."""
        if self.probs is not None:
            return float(self.probs[np.asarray(mask, dtype=bool)].sum())
        if self.pool is not None:
            return float(self.pool_weights[np.asarray(mask, dtype=bool)].sum())
        raise TypeError("mass is defined for tabular and pool distributions")

    def importance_weights(self, s, a, base_logp: np.ndarray) -> np.ndarray:
        """pi(a|s) / b(a|s) clipped to [1 / w_max, w_max]."""
        if self.policy is None:
            raise TypeError("importance weights need a policy distribution")
        ratio = np.exp(np.clip(self.policy.log_prob(s, a) - base_logp, -50.0, 50.0))
        return np.clip(ratio, 1.0 / self.w_max, self.w_max)


def clipped_ratio_weights(scores: np.ndarray, w_max: float) -> np.ndarray:
    """Score / mean score clipped to [1 / w_max, w_max]; all-zero scores give uniform weights."""
    scores = np.abs(np.asarray(scores, dtype=np.float64))
    mean = scores.mean() if scores.size else 0.0
    if not mean > ZERO_ERROR:
        return np.ones_like(scores)
    return np.clip(scores / mean, 1.0 / w_max, w_max)


def rollout_pairs(env, policy: GaussianPolicy, rng: np.random.Generator, episodes: int, horizon: int) -> tuple:
    s = env.reset(rng, episodes)
    states, actions = [], []
    for _ in range(horizon):
        a = policy.act(s, rng)
        states.append(s)
        actions.append(a)
        s = env.transition(s, a, rng)
    return np.concatenate(states), np.concatenate(actions)


# --- tabular loop ---------------------------------------------------------------------------

@dataclass
class TabularActiveRun:
    """Per-round record of a tabular active run."""

    true_mdp: TabularMDP
    metric: StateMetric
    kernels: list = field(default_factory=list)
    dists: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.kernels)

    @property
    def averaged_kernel(self) -> np.ndarray:
        return np.mean(self.kernels, axis=0)

    @property
    def mean_objective(self) -> float:
        return float(np.mean(self.objectives)) if self.objectives else 0.0


def w1_errors(true_mdp: TabularMDP, kernel: np.ndarray, metric: StateMetric) -> tuple:
    """Per-pair W1(P, P_hat) and Kantorovich potentials, shapes (S, A) and (S, A, S)."""
    S, A = true_mdp.n_states, true_mdp.n_actions
    errors = np.zeros((S, A))
    potentials = np.zeros((S, A, S))
    for s in range(S):
        for a in range(A):
            errors[s, a], potentials[s, a] = w1_with_potential(true_mdp.transitions[s, a], kernel[s, a], metric)
    return errors, potentials


def guided_distribution(errors: np.ndarray, uniform_mix: float = 0.0) -> np.ndarray:
    """d proportional to the per-pair errors, mixed with uniform; uniform when all errors vanish."""
    uniform = np.full(errors.shape, 1.0 / errors.size)
    total = float(np.sum(np.clip(errors, 0.0, None)))
    if total <= ZERO_ERROR:
        return uniform
    return (1.0 - uniform_mix) * np.clip(errors, 0.0, None) / total + uniform_mix * uniform


def mirror_step(kernel: np.ndarray, dist: np.ndarray, potentials: np.ndarray, errors: np.ndarray,
                eta: float) -> np.ndarray:
    """Entropic mirror-descent step on E_d[W1(P, P_hat)] applied to rows with d > 0.

    The subgradient wrt P_hat[s, a] is -d(s, a) f[s, a], so q <- q exp(eta d f) / Z.
    """
    step = eta * dist[:, :, None] * np.where(errors[:, :, None] > ZERO_ERROR, potentials, 0.0)
    logq = np.log(np.maximum(kernel, 1e-300)) + step
    out = np.exp(logq - logsumexp(logq, axis=2, keepdims=True))
    return np.where((dist > 0)[:, :, None], out, kernel)


def iterative_learning_tabular(true_mdp: TabularMDP, kernel: Union[TabularKernel, np.ndarray], metric: StateMetric,
                               rounds: int, d0: Optional[np.ndarray] = None, eta0: float = 5.0,
                               uniform_mix: float = 0.0) -> tuple:
    """Exact-critic active loop on a tabular instance.

    Round t plays P_hat_t against d_t: the critic is the exact W1 witness, J_t =
    E_{d_t}[W1(P, P_hat_t)], the model takes a mirror step with eta0 / sqrt(t), and
    d_{t+1} is proportional to the updated model's per-pair W1 errors.

    Returns:
        (averaged kernel as TabularKernel, TabularActiveRun)
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    Q = kernel.probs if isinstance(kernel, TabularKernel) else np.asarray(kernel, dtype=np.float64)
    S, A = true_mdp.n_states, true_mdp.n_actions
    if Q.shape != (S, A, S):
        raise ShapeMismatchError(f"kernel shape {Q.shape} does not match MDP ({S}, {A}, {S})")
    d = np.full((S, A), 1.0 / (S * A)) if d0 is None else np.asarray(d0, dtype=np.float64)
    run = TabularActiveRun(true_mdp, metric)
    errors, potentials = w1_errors(true_mdp, Q, metric)
    for t in range(1, rounds + 1):
        run.kernels.append(Q.copy())
        run.dists.append(d.copy())
        run.errors.append(errors.copy())
        run.objectives.append(float(np.sum(d * errors)))
        Q = mirror_step(Q, d, potentials, errors, eta0 / np.sqrt(t))
        errors, potentials = w1_errors(true_mdp, Q, metric)
        d = guided_distribution(errors, uniform_mix)
    return TabularKernel.from_probs(run.averaged_kernel), run


@dataclass(frozen=True)
class FiniteTimeReport:
    avg_gap_lhs: float
    rhs: float
    kappa: float
    L_v: float
    mean_objective: float
    critic_error: float

    @property
    def holds(self) -> bool:
        return bool(self.avg_gap_lhs <= self.rhs + BOUND_TOL)


def finite_time_check(run: TabularActiveRun, L_v: Optional[float] = None,
                      critic_error: float = 0.0) -> FiniteTimeReport:
    """Worst-case gap of the averaged model against gamma * L_v * kappa * (J_bar + eps_critic).

    kappa is the largest per-round coverage constant of d_t, counting only pairs where
    that round's model has nonzero W1 error. L_v defaults to the largest Lipschitz
    constant of the averaged model's deterministic-policy values.
    """
    true_mdp = run.true_mdp
    avg = true_mdp.with_transitions(run.averaged_kernel)
    _, lhs = worst_case_gap(true_mdp, avg)
    if L_v is None:
        L_v = max_value_lipschitz(avg, run.metric)
    kappa = 0.0
    for d, err in zip(run.dists, run.errors):
        kappa = max(kappa, coverage_constant(true_mdp, "all_deterministic", d, restrict=err > ZERO_ERROR).kappa)
    j_bar = run.mean_objective
    if not np.isfinite(kappa):
        rhs = float('inf')
    else:
        rhs = true_mdp.discount * L_v * kappa * (j_bar + critic_error)
    return FiniteTimeReport(lhs, rhs, kappa, float(L_v), j_bar, critic_error)


def averaged_value_linearity(true_mdp: TabularMDP, kernels: Sequence[np.ndarray], pi: TabularPolicy) -> float:
    """|V_pi(mean kernel) - mean_t V_pi(kernel_t)| under the true rewards.

    Zero when the kernels differ only on rows of a start state that is never revisited;
    in general the value is not linear in the kernel and this is a diagnostic.
    """
    values = [policy_value(true_mdp.with_transitions(K), pi) for K in kernels]
    avg = policy_value(true_mdp.with_transitions(np.mean(kernels, axis=0)), pi)
    return float(abs(avg - np.mean(values)))


# --- regularized game -----------------------------------------------------------------------

@dataclass
class SaddleTrace:
    """Per-round payoff, regrets and duality gap of the averaged strategies."""

    records: list = field(default_factory=list)
    averaged_kernel: Optional[np.ndarray] = None
    averaged_dist: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records], dtype=np.float64)

    def at(self, T: int) -> dict:
        return self.records[T - 1]

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with open(path, 'w', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=list(SADDLE_COLUMNS), extrasaction='ignore')
            writer.writeheader()
            for r in self.records:
                writer.writerow({k: (int(r[k]) if k == 'T' else repr(float(r[k]))) for k in SADDLE_COLUMNS})
        return path


def regularized_payoff(errors: np.ndarray, dist: np.ndarray, prior: np.ndarray, lam: float) -> float:
    """L(P_hat, d) = E_d[W1(P, P_hat)] - lambda * KL(d || u)."""
    return float(np.sum(dist * errors) - lam * rel_entr(dist, prior).sum())


def regularized_game(true_mdp: TabularMDP, metric: StateMetric, lam: float, prior: Optional[np.ndarray] = None,
                     T: int = 1000, eta_model: float = 5.0, eta_dist: float = 1.0,
                     init_kernel: Optional[np.ndarray] = None) -> SaddleTrace:
    """Model player against distribution player on the entropy-regularized W1 payoff.

    The model player (minimizer) takes per-row mirror steps with eta_model / sqrt(t) on
    the W1 potentials. The distribution player (maximizer) plays follow-the-regularized-
    leader, d_t proportional to u exp(W_{t-1} / (lambda (t - 1) + 1 / eta_dist)), with
    W the cumulative error vector. The true kernel is in the model class, so
    Regret_M = sum_t d_t . w_t, and Regret_D has the closed form
    T lambda log sum u exp(W_T / (T lambda)) - sum_t L(P_hat_t, d_t).
    The duality gap of the averages is lambda log sum u exp(w_bar / lambda) + lambda KL(d_bar || u).
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if T < 1:
        raise ValueError("T must be at least 1")
    S, A = true_mdp.n_states, true_mdp.n_actions
    u = np.full((S, A), 1.0 / (S * A)) if prior is None else np.asarray(prior, dtype=np.float64)
    if u.shape != (S, A) or np.any(u <= 0) or abs(u.sum() - 1.0) > 1e-9:
        raise ValueError("prior must be a strictly positive (S, A) probability matrix")
    Q = np.full((S, A, S), 1.0 / S) if init_kernel is None else np.asarray(init_kernel, dtype=np.float64).copy()
    log_u = np.log(u)

    trace = SaddleTrace()
    W = np.zeros((S, A))
    kernel_sum = np.zeros_like(Q)
    dist_sum = np.zeros((S, A))
    payoff_sum = 0.0
    regret_m = 0.0
    for t in range(1, T + 1):
        logits = log_u + W / (lam * (t - 1) + 1.0 / eta_dist)
        d = np.exp(logits - logsumexp(logits))
        errors, potentials = w1_errors(true_mdp, Q, metric)
        payoff = regularized_payoff(errors, d, u, lam)
        payoff_sum += payoff
        regret_m += float(np.sum(d * errors))
        W += errors
        kernel_sum += Q
        dist_sum += d

        regret_d = t * lam * float(logsumexp(W / (t * lam), b=u)) - payoff_sum
        kernel_bar = kernel_sum / t
        dist_bar = dist_sum / t
        w_bar, _ = w1_errors(true_mdp, kernel_bar, metric)
        gap = lam * float(logsumexp(w_bar / lam, b=u)) + lam * float(rel_entr(dist_bar, u).sum())
        trace.records.append({'T': t, 'payoff': payoff, 'regret_M': regret_m, 'regret_D': regret_d,
                              'duality_gap': gap, 'bound_rhs': (regret_m + regret_d) / t,
                              'kl_dist_bar': float(rel_entr(dist_bar, u).sum())})

        Q = mirror_step(Q, d, potentials, errors, eta_model / np.sqrt(t))
    trace.averaged_kernel = kernel_sum / T
    trace.averaged_dist = dist_sum / T
    return trace


def saddle_violations(trace: SaddleTrace, checkpoints: Sequence[int] = (10, 100, 1000)) -> list:
    """Checkpoints T where the duality gap exceeds (Regret_M + Regret_D) / T + 1e-8."""
    out = []
    for T in checkpoints:
        if T <= len(trace):
            r = trace.at(T)
            if r['duality_gap'] > r['bound_rhs'] + BOUND_TOL or r['duality_gap'] < -BOUND_TOL:
                out.append(T)
    return out


# --- continuous loop ------------------------------------------------------------------------

@dataclass
class RoundData:
    """One round of the continuous active loop."""

    round: int
    batch: Transitions
    pool: tuple
    pool_weights: np.ndarray
    scores: np.ndarray
    trace: GameTrace
    train_size: int = 0

    @property
    def critic_objective(self) -> float:
        return float(np.nanmean(self.trace.column('critic_obj')))


def critic_scores(critic, model, env, s: np.ndarray, a: np.ndarray, rng: np.random.Generator,
                  real_samples: int = 32, model_samples: int = 1) -> np.ndarray:
    """|mean_k D(s, a, s'_k) - mean_j D(s, a, s_hat_j)| per candidate pair.

    s'_k are real next states (generative access), s_hat_j model samples. When the
    environment exposes step(s, a, noise) and noise_std, a stochastic model is fed the
    same standard-normal draws as the real transitions and real_samples pairs are used;
    the expectation is unchanged. A deterministic model needs one sample.
    """
    n = len(s)
    real, fake = np.zeros(n), np.zeros(n)
    deterministic = getattr(model, 'deterministic', False)
    if not deterministic and hasattr(model, 'sample') and hasattr(env, 'step') and hasattr(env, 'noise_std'):
        for _ in range(real_samples):
            z = rng.standard_normal((n, model.state_dim))
            real += critic(s, a, env.step(s, a, env.noise_std * z))
            fake += critic(s, a, model.sample(s, a, z)[0])
        scores = np.abs(real - fake) / real_samples
    else:
        for _ in range(real_samples):
            real += critic(s, a, env.transition(s, a, rng))
        n_fake = 1 if deterministic else model_samples
        for _ in range(n_fake):
            fake += critic(s, a, model.transition(s, a, rng))
        scores = np.abs(real / real_samples - fake / n_fake)
    if not np.all(np.isfinite(scores)):
        raise NumericalError("critic scores are not finite")
    return scores


def iterative_learning(true_env, model, critic, rounds: int, cfg: ActiveConfig,
                       base_sampler: Optional[Callable] = None, seed: int = 0,
                       on_round: Optional[Callable[[int], None]] = None,
                       initial: Optional[Transitions] = None) -> tuple:
    """Critic-guided active loop for continuous environments.

    Each round draws cfg.samples_per_round pairs from d_t, collects real transitions and
    plays the W1 game on everything gathered so far (`initial` plus every active batch).
    d_{t+1} is a fresh candidate pool from the base distribution weighted by the critic
    score, clipped to [1 / w_max, w_max]. The averaged model is the uniform mixture of the
    per-round game outputs. With cfg.final_mle_rounds > 0, `final` is a likelihood refit
    on the aggregated data, started from the model as it entered the loop; otherwise
    `final` is the mixture.

    Returns:
        (MixtureModel, list[RoundData], final model)
    """
    rng = np.random.default_rng(seed)
    base_sampler = base_sampler or true_env.uniform_pairs
    start = model.copy()
    dist = SamplingDistribution(pool=base_sampler(rng, cfg.pool_size), w_max=cfg.w_max)
    data = initial
    history, members = [], []
    for t in range(1, rounds + 1):
        s, a = dist(rng, cfg.samples_per_round)
        batch = Transitions(s, a, true_env.reward(s, a), true_env.transition(s, a, rng))
        data = batch if data is None else data.concat(batch)
        source = DatasetSource(data)
        round_avg, trace = train_w1_critic(source, source.true_sampler, model, critic,
                                           replace(cfg.game, seed=cfg.game.seed + t))
        members.append(round_avg)

        pool = base_sampler(rng, cfg.pool_size)
        scores = critic_scores(critic, model, true_env, pool[0], pool[1], rng, cfg.real_samples, cfg.model_samples)
        weights = clipped_ratio_weights(scores, cfg.w_max)
        history.append(RoundData(t, batch, pool, weights / weights.sum(), scores, trace, len(data)))
        dist = SamplingDistribution(pool=pool, pool_weights=weights, w_max=cfg.w_max)
        if on_round is not None:
            on_round(t)

    averaged = MixtureModel(members)
    final = averaged
    if cfg.final_mle_rounds > 0:
        source = DatasetSource(data)
        refit = replace(cfg.game, rounds=cfg.final_mle_rounds, seed=cfg.game.seed + rounds + 1)
        final = mle_baseline(source, source.true_sampler, start.copy(), refit)
    return averaged, history, final


# --- task-aware sampler ---------------------------------------------------------------------

def tabular_task_sampler(true_mdp: TabularMDP, model: TabularMDP, metric: Optional[StateMetric],
                         alpha: float, iterations: int = 2000, lr: float = 1.0) -> tuple:
    """Softmax policy trained by exact policy gradient on alpha r + r_err.

    r_err is the per-pair W1 error (TV without a metric), the exact critic gap. The
    gradient is dJ/dtheta(s, a) = nu(s) pi(a|s) A(s, a) under the true kernel; the step
    size is lr / (1 + alpha).

    Returns:
        (SamplingDistribution over the normalized occupancy, final TabularPolicy)
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    mode = 'w1' if metric is not None else 'tv'
    err = build_error_mdp(true_mdp, model, metric, mode).err_reward
    reward = alpha * true_mdp.rewards + err
    step = lr / (1.0 + alpha)
    hybrid = true_mdp.with_rewards(reward, r_max=max(float(reward.max()), 1.0))
    theta = np.zeros((true_mdp.n_states, true_mdp.n_actions))
    for _ in range(iterations):
        pi = TabularPolicy(softmax(theta, axis=1))
        V = state_values(hybrid, pi)
        adv = bellman_q(hybrid, V) - V[:, None]
        nu = occupancy(hybrid, pi).states
        theta += step * (1.0 - true_mdp.discount) * nu[:, None] * pi.probs * adv
    pi = TabularPolicy(softmax(theta, axis=1))
    return SamplingDistribution(probs=occupancy(true_mdp, pi).normalized()), pi


def error_mdp_occupancy(true_mdp: TabularMDP, model: TabularMDP, metric: Optional[StateMetric]) -> np.ndarray:
    """Normalized occupancy of the Error-MDP optimal policy."""
    mode = 'w1' if metric is not None else 'tv'
    pi, _ = solve_error_mdp(build_error_mdp(true_mdp, model, metric, mode))
    return occupancy(true_mdp, pi).normalized()


def task_aware_sampler(true_env, model, critic, task_reward: Callable[[np.ndarray], np.ndarray], alpha: float,
                       w_max: float, cfg: ActiveConfig, seed: int = 0) -> tuple:
    """REINFORCE-with-baseline Gaussian sampler on the hybrid reward.

    r_sample = alpha * r_task(s') + D(s, a, s') - mean_j D(s, a, s_hat_j), with s' from the
    real environment and s_hat_j from the model. Advantages are standardized per iteration. Returns the
    policy-form SamplingDistribution (reweighting clipped at w_max) and per-iteration
    records of mean hybrid reward and task return.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    rng = np.random.default_rng(seed)
    bound = getattr(true_env, 'action_bound', 1.0)
    policy = GaussianPolicy(true_env.state_dim, true_env.action_dim, (32, 32), action_bound=bound,
                            init_log_std=float(np.log(0.5 * bound)), rng=rng)
    opt = AdamState.for_params(policy.params, lr=cfg.sampler_lr)
    n_fake = 1 if getattr(model, 'deterministic', False) else cfg.model_samples
    H, E = cfg.sampler_horizon, cfg.sampler_episodes
    history = []
    for it in range(cfg.sampler_iterations):
        s = true_env.reset(rng, E)
        states, actions, rewards, task = [], [], [], []
        for _ in range(H):
            raw = policy.sample(s, rng)
            act = policy.clip(raw)
            s_next = true_env.transition(s, act, rng)
            fake = np.mean([critic(s, act, model.transition(s, act, rng)) for _ in range(n_fake)], axis=0)
            r_task = np.asarray(task_reward(s_next), dtype=np.float64)
            r = alpha * r_task + critic(s, act, s_next) - fake
            if not np.all(np.isfinite(r)):
                raise NumericalError(f"sampler iteration {it}: non-finite hybrid reward")
            states.append(s)
            actions.append(raw)
            rewards.append(r)
            task.append(r_task)
            s = s_next
        rewards = np.array(rewards)                                    # (H, E)
        returns = np.zeros_like(rewards)
        running = np.zeros(E)
        for h in reversed(range(H)):
            running = rewards[h] + cfg.sampler_discount * running
            returns[h] = running
        adv = returns - returns.mean(axis=1, keepdims=True)
        scale = adv.std()
        adv = adv / scale if scale > 0 else adv
        grads = policy.log_prob_grad(np.concatenate(states), np.concatenate(actions), adv.ravel() / adv.size)
        adam_step(policy.params, [-g for g in grads], opt)
        history.append({'iteration': it, 'hybrid_reward': float(rewards.mean()),
                        'task_return': float(np.sum(task, axis=0).mean())})
    return SamplingDistribution(policy=policy, env=true_env, horizon=H, w_max=w_max), history
