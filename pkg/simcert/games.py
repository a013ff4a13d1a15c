"""
Adversarial simulator-learning games.

- train_tv_critic: model against a bounded critic (|D| <= 1), the dual of total variation
- train_w1_critic: model against a Lipschitz critic, the dual of Wasserstein-1
- mle_baseline: plain likelihood fitting
- online_game: exponentiated-gradient kernel learner against a best-responding policy
  adversary, with exact regret accounting on tabular instances
- misspecification_demo: likelihood versus worst-case-gap fitting in a restricted class

Models are either a GaussianModel (continuous) or a TabularKernel. Data arrives through
a source: `source(rng, n)` draws (s, a) pairs and `true_sampler(s, a, rng)` returns
(s', r) from the real system.
"""

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp, rel_entr, softmax

from .envs import MinimalNoiseMDP, SlipModelClass
from .error_mdp import build_error_mdp, solve_error_mdp
from .mdp import (
    StateMetric, TabularMDP, TabularPolicy,
    count_deterministic, deterministic_actions, deterministic_occupancies,
    occupancy, value_gap, worst_case_gap,
)
from .metrics import _sample_rows, nll_loss, pairwise_divergence, w1_with_potential, weighted_entropy
from .nn import AdamState, CriticNet, GaussianModel, adam_step, enforce_lipschitz, save_checkpoint
from .utils import BOUND_TOL, ConfigError, NumericalError, ShapeMismatchError

ADVERSARIES = ('best_response_error_mdp', 'enumeration', 'fixed_sequence')
LEARNERS = ('exp_gradient_rows',)
TRACE_COLUMNS = ('round', 'critic_obj', 'model_loss', 'value_gap', 'regret', 'bound_rhs')
GAP_ENUM_LIMIT = 4096


@dataclass
class GameConfig:
    """Knobs shared by the adversarial training loops."""

    batch_size: int = 64
    model_lr: float = 1e-3
    critic_lr: float = 1e-3
    critic_steps: int = 5
    gp_coef: float = 10.0
    lik_coef: float = 0.0
    rounds: int = 500
    seed: int = 0
    snapshot_every: int = 0
    eval_every: int = 1

    def __post_init__(self):
        for name in ('batch_size', 'critic_steps', 'rounds', 'eval_every'):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"game.{name} must be a positive integer, got {getattr(self, name)}")
        for name in ('model_lr', 'critic_lr'):
            if not float(getattr(self, name)) > 0:
                raise ConfigError(f"game.{name} must be positive, got {getattr(self, name)}")
        for name in ('gp_coef', 'lik_coef', 'snapshot_every'):
            if getattr(self, name) < 0:
                raise ConfigError(f"game.{name} must be nonnegative, got {getattr(self, name)}")


@dataclass
class GameTrace:
    """Per-round records of one game run."""

    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    def append(self, **row):
        self.records.append(row)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([r.get(name, np.nan) for r in self.records], dtype=np.float64)

    @property
    def columns(self) -> list:
        extra = []
        for r in self.records:
            extra.extend(k for k in r if k not in TRACE_COLUMNS and k not in extra)
        return list(TRACE_COLUMNS) + extra

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with open(path, 'w', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=self.columns, restval='nan')
            writer.writeheader()
            for r in self.records:
                writer.writerow({k: repr(float(v)) if k != 'round' else int(v) for k, v in r.items()})
        return path


class TabularKernel:
    """Learnable kernel P_hat[s, a, :] = softmax(logits[s, a, :])."""

    def __init__(self, logits: np.ndarray):
        logits = np.array(logits, dtype=np.float64)
        if logits.ndim != 3 or logits.shape[0] != logits.shape[2]:
            raise ShapeMismatchError(f"logits must have shape (S, A, S), got {logits.shape}")
        self.logits = logits

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> 'TabularKernel':
        return cls(np.zeros((n_states, n_actions, n_states)))

    @classmethod
    def from_probs(cls, probs: np.ndarray, floor: float = 1e-300) -> 'TabularKernel':
        return cls(np.log(np.maximum(np.asarray(probs, dtype=np.float64), floor)))

    @property
    def n_states(self) -> int:
        return self.logits.shape[0]

    @property
    def n_actions(self) -> int:
        return self.logits.shape[1]

    @property
    def params(self) -> list:
        return [self.logits]

    @property
    def probs(self) -> np.ndarray:
        return softmax(self.logits, axis=2)

    def as_mdp(self, base: TabularMDP) -> TabularMDP:
        return base.with_transitions(self.probs)

    def copy(self) -> 'TabularKernel':
        return TabularKernel(self.logits.copy())

    def sample(self, s, a, rng: np.random.Generator) -> np.ndarray:
        s, a = _indices(s), _indices(a)
        return _sample_rows(self.probs[s, a], rng)

    def nll(self, s, a, s_next, weights=None) -> tuple:
        """Mean -log P_hat(s'|s,a) over a batch and its gradient wrt the logits."""
        s, a, sn = _indices(s), _indices(a), _indices(s_next)
        B = s.size
        w = np.full(B, 1.0 / B) if weights is None else np.asarray(weights, dtype=np.float64) / np.sum(weights)
        rows = self.probs[s, a]
        loss = float(-w @ np.log(np.maximum(rows[np.arange(B), sn], 1e-300)))
        g_rows = rows * w[:, None]
        g_rows[np.arange(B), sn] -= w
        grad = np.zeros_like(self.logits)
        np.add.at(grad, (s, a), g_rows)
        return loss, [grad]

    def score_loss(self, s, a, table: np.ndarray) -> tuple:
        """-mean_i sum_s' P_hat(s'|s_i,a_i) D_i(s') and its gradient wrt the logits."""
        s, a = _indices(s), _indices(a)
        B = s.size
        rows = self.probs[s, a]
        expected = np.sum(rows * table, axis=1)
        g_rows = -(rows * (table - expected[:, None])) / B
        grad = np.zeros_like(self.logits)
        np.add.at(grad, (s, a), g_rows)
        return float(-expected.mean()), [grad]


def _indices(x) -> np.ndarray:
    return np.asarray(x).reshape(-1).astype(int)


def _one_hot(idx, n: int) -> np.ndarray:
    return np.eye(n)[_indices(idx)]


class ParameterAverager:
    """Running arithmetic mean of model parameters, with optional snapshots.

    TabularKernel models are averaged in probability space; network models by their
    flat parameter vector.
    """

    def __init__(self, snapshot_every: int = 0, checkpoint_dir: Optional[Path] = None):
        self.snapshot_every = int(snapshot_every)
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
        self.total = None
        self.count = 0
        self.snapshots = []

    @staticmethod
    def vector(model) -> np.ndarray:
        if isinstance(model, TabularKernel):
            return model.probs.ravel().copy()
        return model.mlp.get_flat()

    def update(self, model, round_index: int):
        vec = self.vector(model)
        self.total = vec.copy() if self.total is None else self.total + vec
        self.count += 1
        if self.snapshot_every and round_index % self.snapshot_every == 0:
            self.snapshots.append(vec)
            if self.checkpoint_dir is not None:
                self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
                target = self.checkpoint_dir / f"model_{round_index:06d}.npz"
                if isinstance(model, TabularKernel):
                    np.savez(target, probs=model.probs)
                else:
                    save_checkpoint(target, model)

    def average(self, model):
        if self.count == 0:
            return model.copy()
        mean = self.total / self.count
        if isinstance(model, TabularKernel):
            return TabularKernel.from_probs(mean.reshape(model.logits.shape))
        out = model.copy()
        out.mlp.set_flat(mean)
        return out


def _exact_critic_tables(kind: str, true_mdp: TabularMDP, kernel: TabularKernel,
                         metric: Optional[StateMetric]) -> np.ndarray:
    """Optimal dual witness per (s, a): sign(P - P_hat) for TV, the Kantorovich potential for W1."""
    P, Q = true_mdp.transitions, kernel.probs
    if kind == 'tv':
        return np.sign(P - Q)
    if metric is None:
        raise ValueError("an exact W1 critic needs a StateMetric")
    out = np.zeros_like(P)
    for s in range(P.shape[0]):
        for a in range(P.shape[1]):
            out[s, a] = w1_with_potential(P[s, a], Q[s, a], metric)[1]
    return out


def _net_table(critic: CriticNet, s: np.ndarray, a: np.ndarray, n_states: int, n_actions: int) -> tuple:
    """Critic values D(s_i, a_i, s') for every next state, shape (B, S), plus the cache."""
    B = s.size
    ss = np.repeat(_one_hot(s, n_states), n_states, axis=0)
    aa = np.repeat(_one_hot(a, n_actions), n_states, axis=0)
    nn = np.tile(np.eye(n_states), (B, 1))
    values, cache = critic.forward(ss, aa, nn)
    return values.reshape(B, n_states), cache


def _check_finite(round_index: int, **values):
    for name, v in values.items():
        if not np.isfinite(v):
            raise NumericalError(f"round {round_index}: non-finite {name} ({v})")


def _tabular_gap(true_mdp: Optional[TabularMDP], kernel: TabularKernel) -> float:
    if true_mdp is None:
        return float('nan')
    model = kernel.as_mdp(true_mdp)
    if count_deterministic(true_mdp.n_states, true_mdp.n_actions) <= GAP_ENUM_LIMIT:
        return worst_case_gap(true_mdp, model)[1]
    return value_gap(true_mdp, model, TabularPolicy.uniform(true_mdp.n_states, true_mdp.n_actions))


def _critic_round_tabular(critic, source, true_sampler, kernel, cfg, rng, opt, exact_tables):
    s, a = source(rng, cfg.batch_size)
    s, a = _indices(s), _indices(a)
    s_real = _indices(true_sampler(s, a, rng)[0])
    rows = kernel.probs[s, a]
    if exact_tables is not None:
        true_rows = np.zeros_like(rows)
        true_rows[np.arange(s.size), s_real] = 1.0
        return float(np.mean(np.sum((true_rows - rows) * exact_tables[s, a], axis=1)))
    S, A = kernel.n_states, kernel.n_actions
    table, cache = _net_table(critic, s, a, S, A)
    real = _one_hot(s_real, S)
    objective = float(np.mean(np.sum((real - rows) * table, axis=1)))
    grads = critic.backward(cache, (-(real - rows) / s.size).ravel())[0]
    penalty = 0.0
    if critic.mode.kind == 'finite_diff_penalty':
        fake = _one_hot(kernel.sample(s, a, rng), S)
        penalty, g_pen = critic.lipschitz_penalty(_one_hot(s, S), _one_hot(a, A), real, fake, rng)
        grads = [g + gp for g, gp in zip(grads, g_pen)]
    adam_step(critic.params, grads, opt)
    enforce_lipschitz(critic)
    return objective - penalty


def _model_round_tabular(critic, source, true_sampler, kernel, cfg, rng, opt, exact_tables):
    s, a = source(rng, cfg.batch_size)
    s, a = _indices(s), _indices(a)
    s_real = _indices(true_sampler(s, a, rng)[0])
    if exact_tables is not None:
        table = exact_tables[s, a]
    else:
        table = _net_table(critic, s, a, kernel.n_states, kernel.n_actions)[0]
    loss, grads = kernel.score_loss(s, a, table)
    if cfg.lik_coef > 0:
        lik, g_lik = kernel.nll(s, a, s_real)
        loss += cfg.lik_coef * lik
        grads = [g + cfg.lik_coef * gl for g, gl in zip(grads, g_lik)]
    adam_step(kernel.params, grads, opt)
    return loss


def _critic_round_continuous(critic, source, true_sampler, model, cfg, rng, opt):
    B = cfg.batch_size
    s, a = source(rng, B)
    s_real, _ = true_sampler(s, a, rng)
    s_fake, _ = model.sample(s, a, rng.standard_normal((len(s), model.state_dim)))
    v_real, c_real = critic.forward(s, a, s_real)
    v_fake, c_fake = critic.forward(s, a, s_fake)
    objective = float(v_real.mean() - v_fake.mean())
    g_real = critic.backward(c_real, np.full(len(s), -1.0 / len(s)))[0]
    g_fake = critic.backward(c_fake, np.full(len(s), 1.0 / len(s)))[0]
    penalty, g_pen = critic.lipschitz_penalty(s, a, s_real, s_fake, rng)
    adam_step(critic.params, [x + y + z for x, y, z in zip(g_real, g_fake, g_pen)], opt)
    enforce_lipschitz(critic)
    return objective - penalty


def _model_round_continuous(critic, source, true_sampler, model, cfg, rng, opt):
    s, a = source(rng, cfg.batch_size)
    s_real, r = true_sampler(s, a, rng)
    s_fake, sample_cache = model.sample(s, a, rng.standard_normal((len(s), model.state_dim)))
    values, critic_cache = critic.forward(s, a, s_fake)
    loss = float(-values.mean())
    g_snext = critic.backward(critic_cache, np.full(len(s), -1.0 / len(s)))[3]
    grads = model.sample_backward(sample_cache, g_snext)
    if cfg.lik_coef > 0:
        lik, g_lik = model.nll(s, a, s_real, r)
        loss += cfg.lik_coef * lik
        grads = [g + cfg.lik_coef * gl for g, gl in zip(grads, g_lik)]
    adam_step(model.params, grads, opt)
    return loss


def _adversarial_game(kind: str, data_source, true_sampler, model, critic, cfg: GameConfig, *,
                      true_mdp: Optional[TabularMDP] = None, metric: Optional[StateMetric] = None,
                      freeze_model: bool = False, checkpoint_dir: Optional[Path] = None,
                      on_round: Optional[Callable[[int], None]] = None) -> tuple:
    rng = np.random.default_rng(cfg.seed)
    tabular = isinstance(model, TabularKernel)
    exact = isinstance(critic, str)
    if exact:
        if critic != 'exact' or not tabular or true_mdp is None:
            raise ValueError("the exact critic needs a TabularKernel model and the true MDP")
    elif kind == 'tv' and not critic.squash:
        raise ValueError("the TV game needs a squashed critic (|D| <= 1)")
    critic_opt = None if exact else AdamState.for_params(critic.params, lr=cfg.critic_lr)
    model_opt = AdamState.for_params(model.params, lr=cfg.model_lr)
    averager = ParameterAverager(cfg.snapshot_every, checkpoint_dir)
    trace = GameTrace()
    critic_round = _critic_round_tabular if tabular else _critic_round_continuous
    model_round = _model_round_tabular if tabular else _model_round_continuous

    for t in range(1, cfg.rounds + 1):
        tables = _exact_critic_tables(kind, true_mdp, model, metric) if exact else None
        critic_obj = float('nan')
        for _ in range(1 if exact else cfg.critic_steps):
            if tabular:
                critic_obj = critic_round(critic, data_source, true_sampler, model, cfg, rng, critic_opt, tables)
            else:
                critic_obj = critic_round(critic, data_source, true_sampler, model, cfg, rng, critic_opt)
        if freeze_model:
            model_loss = float('nan')
        elif tabular:
            model_loss = model_round(critic, data_source, true_sampler, model, cfg, rng, model_opt, tables)
        else:
            model_loss = model_round(critic, data_source, true_sampler, model, cfg, rng, model_opt)
        _check_finite(t, critic_objective=critic_obj)
        if not freeze_model:
            _check_finite(t, model_loss=model_loss)
        averager.update(model, t)
        gap = _tabular_gap(true_mdp, model) if tabular and t % cfg.eval_every == 0 else float('nan')
        trace.append(round=t, critic_obj=critic_obj, model_loss=model_loss, value_gap=gap)
        if on_round is not None:
            on_round(t)

    trace.snapshots = averager.snapshots
    return averager.average(model), trace


def train_tv_critic(data_source, true_sampler, model, critic, cfg: GameConfig, **kwargs) -> tuple:
    """Minimax training against a bounded critic.

    The critic ascends E_real[D] - E_model[D] with |D| <= 1 (a tanh head, or the exact
    sign witness on tabular instances when critic == "exact"); the model then ascends
    its own critic score. Returns (parameter-averaged model, GameTrace).
    """
    return _adversarial_game('tv', data_source, true_sampler, model, critic, cfg, **kwargs)


def train_w1_critic(data_source, true_sampler, model, critic, cfg: GameConfig, **kwargs) -> tuple:
    """Minimax training against a Lipschitz critic.

    Each round runs cfg.critic_steps critic updates under the critic's Lipschitz mode
    (interpolation penalty, projection or clipping), then one model step that minimizes
    -D(s, a, s_hat) plus cfg.lik_coef times the likelihood loss. Tabular models use the
    exact expectation over next states. Returns (parameter-averaged model, GameTrace).
    """
    return _adversarial_game('w1', data_source, true_sampler, model, critic, cfg, **kwargs)


def mle_baseline(data_source, true_sampler, model, cfg: GameConfig, trace: Optional[GameTrace] = None):
    """Fit by Adam on transition negative log-likelihood (plus reward squared error)."""
    rng = np.random.default_rng(cfg.seed)
    opt = AdamState.for_params(model.params, lr=cfg.model_lr)
    for t in range(1, cfg.rounds + 1):
        s, a = data_source(rng, cfg.batch_size)
        s_next, r = true_sampler(s, a, rng)
        if isinstance(model, TabularKernel):
            loss, grads = model.nll(s, a, s_next)
        else:
            loss, grads = model.nll(s, a, s_next, r)
        _check_finite(t, model_loss=loss)
        adam_step(model.params, grads, opt)
        if trace is not None:
            trace.append(round=t, model_loss=loss)
    return model


# --- online game ---------------------------------------------------------------------------

def _online_adversary(true_mdp: TabularMDP, adversary: str, fixed_policies: Optional[Sequence[TabularPolicy]]):
    if adversary not in ADVERSARIES:
        raise ValueError(f"unknown adversary '{adversary}', expected one of {ADVERSARIES}")
    if adversary == 'fixed_sequence':
        policies = list(fixed_policies or [])
        if not policies:
            raise ValueError("fixed_sequence adversary needs at least one policy")
        return lambda t, kernel, prev: policies[(t - 1) % len(policies)]
    if adversary == 'enumeration':
        actions = deterministic_actions(true_mdp.n_states, true_mdp.n_actions)
        occs = deterministic_occupancies(true_mdp, actions)

        def enumerate_best(t, kernel, prev):
            excess = rel_entr(true_mdp.transitions, kernel).sum(axis=2)
            k = int(np.argmax(np.einsum('ksa,sa->k', occs, excess)))
            return TabularPolicy.deterministic(actions[k], true_mdp.n_actions)
        return enumerate_best

    def best_response(t, kernel, prev):
        emdp = build_error_mdp(true_mdp, true_mdp.with_transitions(kernel), mode='kl')
        return solve_error_mdp(emdp, warm_start=prev)[0]
    return best_response


def online_game(true_mdp: TabularMDP, adversary: str = 'best_response_error_mdp',
                learner: str = 'exp_gradient_rows', T: int = 1000, eta0: float = 1.0,
                fixed_policies: Optional[Sequence[TabularPolicy]] = None,
                init: Optional[np.ndarray] = None) -> GameTrace:
    """Online kernel learning against a policy adversary, with exact regret.

    Round t: the adversary picks pi_t; the learner suffers the likelihood loss
    l_t = E_{d_pi_t} E_P[-log P_hat_t] and updates every row by exponentiated gradient,
    log P_hat += eta_t * min(d_t * P / P_hat, G) with eta_t = eta0 (1 - gamma) / sqrt(t)
    and G = 50 / (1 - gamma). The true kernel minimizes every l_t, so
    Regret_T = sum_t (l_t - E_{d_pi_t}[H(P)]).

    bound_rhs is gamma Rmax / (1 - gamma) * sqrt((min_loss_T + Regret_T / T) / 2), where min_loss_T
    is the running mean of the per-round minimum loss E_{d_pi_t}[H(P)]. bound_rhs_regret drops
    the min-loss term and bound_rhs_certified multiplies bound_rhs by sqrt(1 / (1 - gamma)).
    """
    if not isinstance(true_mdp, TabularMDP):
        raise TypeError("online_game needs a TabularMDP")
    if learner not in LEARNERS:
        raise ValueError(f"unknown learner '{learner}', expected one of {LEARNERS}")
    if T < 1 or eta0 <= 0:
        raise ValueError("T must be >= 1 and eta0 positive")
    S, A = true_mdp.n_states, true_mdp.n_actions
    g = true_mdp.discount
    horizon = true_mdp.horizon
    grad_cap = 50.0 * horizon
    pick = _online_adversary(true_mdp, adversary, fixed_policies)
    log_q = np.zeros((S, A, S)) if init is None else np.log(np.maximum(np.asarray(init, dtype=np.float64), 1e-300))
    log_q -= logsumexp(log_q, axis=2, keepdims=True)
    scale = g * true_mdp.r_max / (1.0 - g)

    trace = GameTrace()
    regret = 0.0
    gap_sum = 0.0
    entropy_sum = 0.0
    prev = None
    for t in range(1, T + 1):
        kernel = np.exp(log_q)
        pi = pick(t, kernel, prev)
        prev = pi
        model = true_mdp.with_transitions(kernel)
        loss = nll_loss(true_mdp, model, pi)
        entropy_term = weighted_entropy(true_mdp, pi)
        gap = value_gap(true_mdp, model, pi)
        regret += loss - entropy_term
        gap_sum += gap
        entropy_sum += entropy_term
        rhs = scale * np.sqrt(max(entropy_sum + regret, 0.0) / (2.0 * t))
        trace.append(round=t, critic_obj=loss - entropy_term, model_loss=loss, value_gap=gap, regret=regret,
                     bound_rhs=rhs, avg_gap=gap_sum / t, bound_rhs_certified=rhs * np.sqrt(horizon),
                     bound_rhs_regret=scale * np.sqrt(max(regret, 0.0) / (2.0 * t)), entropy=entropy_term)

        d = occupancy(true_mdp, pi).d
        ratio = np.where(true_mdp.transitions > 0, true_mdp.transitions / kernel, 0.0)
        step = np.minimum(d[:, :, None] * ratio, grad_cap)
        eta = eta0 / (horizon * np.sqrt(t))
        log_q = log_q + eta * step
        log_q -= logsumexp(log_q, axis=2, keepdims=True)
    return trace


def online_bound_violations(trace: GameTrace) -> dict:
    """Rounds where the running average gap exceeds each recorded right-hand side."""
    avg = trace.column('avg_gap')
    out = {}
    for key, column in (('stated', 'bound_rhs'), ('certified', 'bound_rhs_certified'),
                        ('regret_only', 'bound_rhs_regret')):
        out[key] = (np.flatnonzero(avg > trace.column(column) + BOUND_TOL) + 1).tolist()
    return out


# --- misspecification ------------------------------------------------------------------------

@dataclass(frozen=True)
class MisspecificationReport:
    sigma_mle: float
    sigma_minimax: float
    gap_mle: float
    gap_minimax: float
    kl_mle: float
    kl_minimax: float

    @property
    def coincide(self) -> bool:
        return abs(self.sigma_mle - self.sigma_minimax) <= 1e-6

    @property
    def holds(self) -> bool:
        """The worst-case fit has the smaller gap and the larger KL."""
        return self.gap_minimax < self.gap_mle and self.kl_minimax > self.kl_mle

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(coincide=self.coincide, holds=self.holds)
        return out


def relevant_policies(instance: MinimalNoiseMDP) -> list:
    """Deterministic policies that act on the chain coordinate only."""
    K, N = instance.chain_length, instance.noise_levels
    return [TabularPolicy.deterministic(np.repeat(acts, N), 2) for acts in deterministic_actions(K, 2)]


def misspecification_demo(instance: MinimalNoiseMDP, model_class: Optional[SlipModelClass] = None,
                          grid: int = 201) -> MisspecificationReport:
    """Compare the KL projection with the worst-case-gap fit inside the slip class.

    KL is averaged uniformly over (s, a) pairs; gaps are worst cases over the policies
    that ignore the noise coordinate. The likelihood fit refines the best grid point
    with a bounded scalar search.
    """
    model_class = model_class or SlipModelClass(instance)
    true_mdp = instance.mdp
    policies = relevant_policies(instance)
    sigmas = model_class.grid(grid)

    def mean_kl(sigma: float) -> float:
        return float(pairwise_divergence(true_mdp, model_class.model(sigma), 'kl').mean())

    def gap(sigma: float) -> float:
        return worst_case_gap(true_mdp, model_class.model(sigma), policies)[1]

    kls = np.array([mean_kl(x) for x in sigmas])
    k = int(np.argmin(kls))
    sigma_mle = float(sigmas[k])
    step = sigmas[1] - sigmas[0]
    lo, hi = max(0.0, sigma_mle - step), min(1.0, sigma_mle + step)
    refined = minimize_scalar(mean_kl, bounds=(lo, hi), method='bounded', options={'xatol': 1e-10})
    if refined.success and refined.fun < kls[k]:
        sigma_mle = float(refined.x)

    gaps = np.array([gap(x) for x in sigmas])
    sigma_mm = float(sigmas[int(np.argmin(gaps))])
    return MisspecificationReport(sigma_mle, sigma_mm, gap(sigma_mle), gap(sigma_mm),
                                  mean_kl(sigma_mle), mean_kl(sigma_mm))
