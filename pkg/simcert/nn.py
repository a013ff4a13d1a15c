"""
Minimal feed-forward network stack for simcert.

Plain numpy forward and exact backward passes for small multilayer perceptrons, plus
the heads built on them:

- CriticNet: D(s, a, s') with a configurable Lipschitz mechanism
- GaussianModel: next-state mean / log-variance and a reward head
- MixtureModel: uniform mixture of per-round dynamics models
- GaussianPolicy: diagonal Gaussian actions for the task-aware sampler

Arrays are batch-major: inputs have shape (B, features). Weight matrices are stored
(fan_in, fan_out) so a layer computes h @ W + b.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .utils import LOGVAR_BOUNDS, NumericalError, ShapeMismatchError, require_finite

CHECKPOINT_VERSION = 1
LIPSCHITZ_KINDS = ('none', 'weight_clip', 'projection', 'finite_diff_penalty')
LOG_2PI = float(np.log(2.0 * np.pi))


def _as_batch(x, width: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :] if width > 1 or x.size == 1 else x[:, None]
    if x.ndim != 2 or x.shape[1] != width:
        raise ShapeMismatchError(f"{name}: expected (B, {width}), got {x.shape}")
    return x


class Mlp:
    """Feed-forward network with rectifier hidden layers and a linear output."""

    def __init__(self, sizes: Sequence[int], rng: Optional[np.random.Generator] = None):
        if len(sizes) < 2 or any(int(s) < 1 for s in sizes):
            raise ValueError(f"invalid layer sizes {sizes}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.sizes = tuple(int(s) for s in sizes)
        self.weights = []
        self.biases = []
        n = len(self.sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            # He init for rectifier layers, LeCun for the linear head
            std = np.sqrt((2.0 if i < n - 1 else 1.0) / fan_in)
            self.weights.append(rng.normal(0.0, std, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def params(self) -> list:
        """Parameter arrays (W0, b0, W1, b1, ...), returned by reference."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend((W, b))
        return out

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def forward(self, x) -> tuple:
        x = _as_batch(x, self.sizes[0], "Mlp input")
        require_finite("Mlp input", x)
        acts, pres = [x], []
        h = x
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            pres.append(z)
            h = np.maximum(z, 0.0) if i < self.n_layers - 1 else z
            acts.append(h)
        return h, (acts, pres)

    def backward(self, cache, grad_out) -> tuple:
        """Parameter gradients (same order as `params`) and the gradient w.r.t. the input."""
        acts, pres = cache
        g = np.asarray(grad_out, dtype=np.float64)
        if g.shape != pres[-1].shape:
            raise ShapeMismatchError(f"upstream gradient {g.shape} does not match output {pres[-1].shape}")
        grads = [None] * (2 * self.n_layers)
        for i in reversed(range(self.n_layers)):
            if i < self.n_layers - 1:
                g = g * (pres[i] > 0)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grads, g

    def __call__(self, x) -> np.ndarray:
        return self.forward(x)[0]

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, vec: np.ndarray):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.n_params:
            raise ShapeMismatchError(f"flat vector has {vec.size} entries, network has {self.n_params}")
        pos = 0
        for p in self.params:
            p[...] = vec[pos:pos + p.size].reshape(p.shape)
            pos += p.size

    def copy(self) -> 'Mlp':
        clone = Mlp.__new__(Mlp)
        clone.sizes = self.sizes
        clone.weights = [W.copy() for W in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone


def forward(net: Mlp, x) -> tuple:
    """Module-level alias of Mlp.forward: (output, cache)."""
    return net.forward(x)


def backward(net: Mlp, cache, upstream) -> tuple:
    """Module-level alias of Mlp.backward: (param grads, input grad)."""
    return net.backward(cache, upstream)


def gradient_check(loss_fn: Callable[[], float], params: list, grads: list, rng: np.random.Generator,
                   n_trials: int = 20, eps: float = 1e-6, floor: float = 1e-4) -> float:
    """Largest relative error between analytic grads and central differences at random points.

    `loss_fn` must read the current values of `params`, which are perturbed in place and
    restored.
    """
    worst = 0.0
    for _ in range(n_trials):
        k = int(rng.integers(len(params)))
        idx = tuple(int(rng.integers(d)) for d in params[k].shape)
        old = params[k][idx]
        params[k][idx] = old + eps
        up = loss_fn()
        params[k][idx] = old - eps
        down = loss_fn()
        params[k][idx] = old
        fd = (up - down) / (2.0 * eps)
        an = float(grads[k][idx])
        worst = max(worst, abs(fd - an) / max(abs(fd) + abs(an), floor))
    return worst


@dataclass
class AdamState:
    """Adam moments for one parameter list."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list, lr: float = 3e-4, **kwargs) -> 'AdamState':
        return cls(lr=lr, m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], **kwargs)


def adam_step(params: list, grads: list, state: AdamState) -> list:
    """One Adam update applied in place; returns `params`."""
    if len(params) != len(grads):
        raise ShapeMismatchError(f"{len(params)} parameter arrays but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != np.shape(g):
            raise ShapeMismatchError(f"gradient {i} has shape {np.shape(g)}, parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in parameter {i} (shape {p.shape}) at step {state.step + 1}")
    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


@dataclass(frozen=True)
class LipschitzMode:
    """How a critic is kept (approximately) Lipschitz.

    kind is one of none, weight_clip (constant = clip c), projection (constant = L) or
    finite_diff_penalty (constant = lambda_GP).
    """

    kind: str = 'projection'
    constant: float = 1.0
    fd_step: float = 1e-3
    power_iters: int = 10

    def __post_init__(self):
        if self.kind not in LIPSCHITZ_KINDS:
            raise ValueError(f"unknown Lipschitz mode '{self.kind}', expected one of {LIPSCHITZ_KINDS}")
        if self.kind != 'none' and not self.constant > 0:
            raise ValueError(f"{self.kind} needs a positive constant, got {self.constant}")

    @classmethod
    def none(cls) -> 'LipschitzMode':
        return cls('none', 1.0)

    @classmethod
    def weight_clip(cls, c: float) -> 'LipschitzMode':
        return cls('weight_clip', c)

    @classmethod
    def projection(cls, lipschitz: float = 1.0) -> 'LipschitzMode':
        return cls('projection', lipschitz)

    @classmethod
    def finite_diff_penalty(cls, coef: float = 10.0) -> 'LipschitzMode':
        return cls('finite_diff_penalty', coef)


def spectral_norm(W: np.ndarray, v: Optional[np.ndarray] = None, n_iter: int = 10) -> tuple:
    """Power-iteration estimate of the operator norm of W and the right singular vector."""
    if v is None:
        v = np.ones(W.shape[1]) / np.sqrt(W.shape[1])
    u = W @ v
    for _ in range(n_iter):
        u = W @ v
        u /= max(np.linalg.norm(u), 1e-300)
        v = W.T @ u
        v /= max(np.linalg.norm(v), 1e-300)
    return float(u @ W @ v), v


class CriticNet:
    """Critic D(s, a, s') over the concatenated transition.

    The output head is linear; `squash=True` adds a tanh so that |D| <= 1 for the
    total-variation game.
    """

    def __init__(self, state_dim: int, action_dim: int, hidden: Sequence[int] = (64, 64),
                 mode: LipschitzMode = LipschitzMode.projection(1.0), squash: bool = False,
                 rng: Optional[np.random.Generator] = None):
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self.hidden = tuple(hidden)
        self.mode = mode
        self.squash = bool(squash)
        self.mlp = Mlp([2 * self.state_dim + self.action_dim, *self.hidden, 1], rng)
        self._power_vectors = [None] * self.mlp.n_layers

    @property
    def params(self) -> list:
        return self.mlp.params

    def config(self) -> dict:
        return {'state_dim': self.state_dim, 'action_dim': self.action_dim, 'hidden': list(self.hidden),
                'mode': asdict(self.mode), 'squash': self.squash}

    @classmethod
    def from_config(cls, cfg: dict) -> 'CriticNet':
        cfg = dict(cfg)
        cfg['mode'] = LipschitzMode(**cfg['mode'])
        return cls(**cfg)

    def inputs(self, s, a, s_next) -> np.ndarray:
        return np.concatenate([_as_batch(s, self.state_dim, "state"),
                               _as_batch(a, self.action_dim, "action"),
                               _as_batch(s_next, self.state_dim, "next state")], axis=1)

    def forward(self, s, a, s_next) -> tuple:
        out, cache = self.mlp.forward(self.inputs(s, a, s_next))
        y = np.tanh(out[:, 0]) if self.squash else out[:, 0]
        return y, (cache, y)

    def __call__(self, s, a, s_next) -> np.ndarray:
        return self.forward(s, a, s_next)[0]

    def backward(self, cache, grad_values) -> tuple:
        """(param grads, grad wrt s, grad wrt a, grad wrt s') for an upstream grad per sample."""
        mlp_cache, y = cache
        g = np.asarray(grad_values, dtype=np.float64).reshape(-1, 1)
        if self.squash:
            g = g * (1.0 - y[:, None] ** 2)
        grads, gx = self.mlp.backward(mlp_cache, g)
        ds, da = self.state_dim, self.action_dim
        return grads, gx[:, :ds], gx[:, ds:ds + da], gx[:, ds + da:]

    def lipschitz_penalty(self, s, a, s_real, s_fake, rng: np.random.Generator) -> tuple:
        """lambda_GP * mean (||grad_s' D(s~)|| - 1)^2 at interpolates s~ = alpha s' + (1 - alpha) s_hat.

        The input gradient is a symmetric finite difference with step `mode.fd_step`, and
        the returned parameter gradients are the exact derivative of that estimate.
        """
        if self.mode.kind != 'finite_diff_penalty':
            return 0.0, [np.zeros_like(p) for p in self.params]
        s = _as_batch(s, self.state_dim, "state")
        a = _as_batch(a, self.action_dim, "action")
        s_real = _as_batch(s_real, self.state_dim, "next state")
        s_fake = _as_batch(s_fake, self.state_dim, "next state")
        B, d, h = s.shape[0], self.state_dim, self.mode.fd_step
        alpha = rng.random((B, 1))
        s_mid = alpha * s_real + (1.0 - alpha) * s_fake
        offsets = h * np.eye(d)
        plus = (s_mid[:, None, :] + offsets[None]).reshape(B * d, d)
        minus = (s_mid[:, None, :] - offsets[None]).reshape(B * d, d)
        s_rep = np.repeat(s, d, axis=0)
        a_rep = np.repeat(a, d, axis=0)
        values, cache = self.forward(np.vstack([s_rep, s_rep]), np.vstack([a_rep, a_rep]), np.vstack([plus, minus]))
        g = ((values[:B * d] - values[B * d:]) / (2.0 * h)).reshape(B, d)
        norm = np.linalg.norm(g, axis=1)
        lam = self.mode.constant
        penalty = float(lam * np.mean((norm - 1.0) ** 2))
        coef = (lam * 2.0 / B) * (norm - 1.0)[:, None] * g / np.maximum(norm, 1e-12)[:, None] / (2.0 * h)
        upstream = np.concatenate([coef.ravel(), -coef.ravel()])
        grads = self.backward(cache, upstream)[0]
        return penalty, grads


def enforce_lipschitz(critic: CriticNet, mode: Optional[LipschitzMode] = None) -> CriticNet:
    """Apply a constraint-type Lipschitz mode to the critic's weights in place.

    weight_clip clamps every weight to [-c, c]. projection rescales the weight matrices so
    that the product of their power-iteration spectral norms is at most L. The
    finite_diff_penalty mode acts through the loss instead (see
    CriticNet.lipschitz_penalty) and leaves the weights untouched, as does none.
    """
    mode = mode or critic.mode
    if mode.kind == 'weight_clip':
        for W in critic.mlp.weights:
            np.clip(W, -mode.constant, mode.constant, out=W)
    elif mode.kind == 'projection':
        norms = []
        for i, W in enumerate(critic.mlp.weights):
            sigma, critic._power_vectors[i] = spectral_norm(W, critic._power_vectors[i], mode.power_iters)
            norms.append(sigma)
        total = float(np.prod(norms))
        if total > mode.constant:
            scale = (mode.constant / total) ** (1.0 / len(norms))
            for W in critic.mlp.weights:
                W *= scale
    return critic


def empirical_lipschitz_ratio(fn: Callable[[np.ndarray], np.ndarray], dim: int, rng: np.random.Generator,
                              n_pairs: int = 1000, scale: float = 1.0) -> float:
    """Largest |f(x) - f(y)| / ||x - y|| over random input pairs."""
    x = rng.normal(0.0, scale, size=(n_pairs, dim))
    y = x + rng.normal(0.0, scale, size=(n_pairs, dim)) * rng.random((n_pairs, 1))
    num = np.abs(fn(x) - fn(y))
    den = np.linalg.norm(x - y, axis=1)
    return float(np.max(num / np.maximum(den, 1e-12)))


class GaussianModel:
    """Diagonal Gaussian dynamics model with a reward head.

    The network maps (s, a) to (mean offset, log-variance, reward). With `residual=True`
    the predicted mean is s + offset. With `deterministic=True` the variance is ignored:
    samples equal the mean and the training loss is squared error.
    """

    def __init__(self, state_dim: int, action_dim: int, hidden: Sequence[int] = (64, 64),
                 logvar_bounds: tuple = LOGVAR_BOUNDS, residual: bool = True, deterministic: bool = False,
                 rng: Optional[np.random.Generator] = None):
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self.hidden = tuple(hidden)
        self.logvar_bounds = (float(logvar_bounds[0]), float(logvar_bounds[1]))
        if self.logvar_bounds[0] >= self.logvar_bounds[1]:
            raise ValueError(f"invalid log-variance bounds {logvar_bounds}")
        self.residual = bool(residual)
        self.deterministic = bool(deterministic)
        self.mlp = Mlp([self.state_dim + self.action_dim, *self.hidden, 2 * self.state_dim + 1], rng)

    @property
    def params(self) -> list:
        return self.mlp.params

    def config(self) -> dict:
        return {'state_dim': self.state_dim, 'action_dim': self.action_dim, 'hidden': list(self.hidden),
                'logvar_bounds': list(self.logvar_bounds), 'residual': self.residual,
                'deterministic': self.deterministic}

    @classmethod
    def from_config(cls, cfg: dict) -> 'GaussianModel':
        return cls(**cfg)

    def copy(self) -> 'GaussianModel':
        clone = GaussianModel.from_config(self.config())
        clone.mlp = self.mlp.copy()
        return clone

    def predict(self, s, a) -> tuple:
        """(mean, logvar, reward, cache) for a batch of pairs."""
        s = _as_batch(s, self.state_dim, "state")
        a = _as_batch(a, self.action_dim, "action")
        require_finite("GaussianModel parameters", *self.params)
        out, cache = self.mlp.forward(np.concatenate([s, a], axis=1))
        d = self.state_dim
        mean = out[:, :d] + (s if self.residual else 0.0)
        raw_logvar = out[:, d:2 * d]
        logvar = np.clip(raw_logvar, *self.logvar_bounds)
        return mean, logvar, out[:, 2 * d], (cache, raw_logvar)

    def predict_mean(self, s, a) -> np.ndarray:
        return self.predict(s, a)[0]

    def backward(self, cache, grad_mean, grad_logvar=None, grad_reward=None) -> list:
        mlp_cache, raw_logvar = cache
        B, d = raw_logvar.shape
        lo, hi = self.logvar_bounds
        g_lv = np.zeros((B, d)) if grad_logvar is None else grad_logvar * ((raw_logvar > lo) & (raw_logvar < hi))
        g_r = np.zeros((B, 1)) if grad_reward is None else np.asarray(grad_reward).reshape(B, 1)
        grads, _ = self.mlp.backward(mlp_cache, np.concatenate([grad_mean, g_lv, g_r], axis=1))
        return grads

    def sample(self, s, a, noise) -> tuple:
        """Reparameterized sample mean + exp(logvar / 2) * noise, and a cache for sample_backward."""
        mean, logvar, _, cache = self.predict(s, a)
        noise = np.asarray(noise, dtype=np.float64).reshape(mean.shape)
        if self.deterministic:
            return mean.copy(), (cache, noise, np.zeros_like(mean))
        std = np.exp(0.5 * logvar)
        return mean + std * noise, (cache, noise, std)

    def sample_backward(self, cache, grad_s_next) -> list:
        """Parameter gradients of sum(grad_s_next * sample) through the reparameterization."""
        inner, noise, std = cache
        g_lv = None if self.deterministic else grad_s_next * noise * 0.5 * std
        return self.backward(inner, grad_s_next, g_lv)

    def transition(self, s, a, rng: np.random.Generator) -> np.ndarray:
        """Next-state draw with the same signature as the environments' transition."""
        s = _as_batch(s, self.state_dim, "state")
        return self.sample(s, a, rng.standard_normal(s.shape))[0]

    def reward(self, s, a) -> np.ndarray:
        return self.predict(s, a)[2]

    def log_prob(self, s, a, s_next) -> np.ndarray:
        """Per-sample Gaussian log density of s_next."""
        mean, logvar, _, _ = self.predict(s, a)
        x = _as_batch(s_next, self.state_dim, "next state")
        return -0.5 * np.sum(LOG_2PI + logvar + (x - mean) ** 2 / np.exp(logvar), axis=1)

    def nll(self, s, a, s_next, r=None, weights=None, reward_weight: float = 1.0) -> tuple:
        """Weighted mean of transition NLL (squared error when deterministic) plus reward MSE.

        Returns (loss, param grads).
        """
        mean, logvar, reward, cache = self.predict(s, a)
        x = _as_batch(s_next, self.state_dim, "next state")
        B = x.shape[0]
        w = np.full(B, 1.0 / B) if weights is None else np.asarray(weights, dtype=np.float64) / np.sum(weights)
        diff = x - mean
        if self.deterministic:
            per = 0.5 * np.sum(diff ** 2, axis=1)
            g_mean = -diff * w[:, None]
            g_lv = None
        else:
            inv_var = np.exp(-logvar)
            per = 0.5 * np.sum(LOG_2PI + logvar + diff ** 2 * inv_var, axis=1)
            g_mean = -diff * inv_var * w[:, None]
            g_lv = 0.5 * (1.0 - diff ** 2 * inv_var) * w[:, None]
        loss = float(w @ per)
        g_r = None
        if r is not None and reward_weight > 0:
            err = reward - np.asarray(r, dtype=np.float64).reshape(B)
            loss += reward_weight * float(w @ err ** 2)
            g_r = 2.0 * reward_weight * w * err
        return loss, self.backward(cache, g_mean, g_lv, g_r)


class MixtureModel:
    """Uniform mixture (1/T) sum_t P_hat_t of dynamics models.

    Averaging kernels averages their conditional means, so `predict_mean` is the mean of
    the members' means; `transition` draws each row from one member chosen uniformly.
    """

    def __init__(self, members: Sequence[GaussianModel]):
        members = list(members)
        if not members:
            raise ValueError("a mixture needs at least one member")
        dims = {(m.state_dim, m.action_dim) for m in members}
        if len(dims) != 1:
            raise ShapeMismatchError(f"mixture members disagree in dimensions: {sorted(dims)}")
        self.members = members
        self.state_dim, self.action_dim = dims.pop()
        self.deterministic = False

    def __len__(self) -> int:
        return len(self.members)

    def predict_mean(self, s, a) -> np.ndarray:
        return np.mean([m.predict_mean(s, a) for m in self.members], axis=0)

    def reward(self, s, a) -> np.ndarray:
        return np.mean([m.reward(s, a) for m in self.members], axis=0)

    def transition(self, s, a, rng: np.random.Generator) -> np.ndarray:
        s = _as_batch(s, self.state_dim, "state")
        a = _as_batch(a, self.action_dim, "action")
        pick = rng.integers(len(self.members), size=len(s))
        out = np.empty_like(s)
        for k, m in enumerate(self.members):
            rows = pick == k
            if rows.any():
                out[rows] = m.transition(s[rows], a[rows], rng)
        return out


def gaussian_logprob(model: GaussianModel, s, a, s_next) -> Union[float, np.ndarray]:
    """log P_hat(s' | s, a); a float for a single transition, else one value per row."""
    out = model.log_prob(s, a, s_next)
    return float(out[0]) if np.ndim(s) == 1 and out.size == 1 else out


def gaussian_sample(model: GaussianModel, s, a, noise) -> np.ndarray:
    """Reparameterized next-state sample with externally supplied standard-normal noise."""
    return model.sample(s, a, noise)[0]


class GaussianPolicy:
    """Diagonal Gaussian policy a ~ N(mu(s), diag(exp(log_std(s))^2))."""

    def __init__(self, state_dim: int, action_dim: int, hidden: Sequence[int] = (64, 64),
                 action_bound: Optional[float] = None, log_std_bounds: tuple = (-5.0, 1.0),
                 init_log_std: float = -1.0, rng: Optional[np.random.Generator] = None):
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self.hidden = tuple(hidden)
        self.action_bound = action_bound
        self.log_std_bounds = (float(log_std_bounds[0]), float(log_std_bounds[1]))
        self.init_log_std = float(init_log_std)
        self.mlp = Mlp([self.state_dim, *self.hidden, 2 * self.action_dim], rng)
        self.mlp.weights[-1] *= 0.1
        self.mlp.biases[-1][self.action_dim:] = self.init_log_std

    @property
    def params(self) -> list:
        return self.mlp.params

    def config(self) -> dict:
        return {'state_dim': self.state_dim, 'action_dim': self.action_dim, 'hidden': list(self.hidden),
                'action_bound': self.action_bound, 'log_std_bounds': list(self.log_std_bounds),
                'init_log_std': self.init_log_std}

    @classmethod
    def from_config(cls, cfg: dict) -> 'GaussianPolicy':
        return cls(**cfg)

    def distribution(self, s) -> tuple:
        s = _as_batch(s, self.state_dim, "state")
        out, cache = self.mlp.forward(s)
        k = self.action_dim
        raw = out[:, k:]
        return out[:, :k], np.clip(raw, *self.log_std_bounds), (cache, raw)

    def sample(self, s, rng: np.random.Generator) -> np.ndarray:
        """Unclipped Gaussian actions; pass them to `clip` before stepping an env."""
        mean, log_std, _ = self.distribution(s)
        return mean + np.exp(log_std) * rng.standard_normal(mean.shape)

    def clip(self, actions: np.ndarray) -> np.ndarray:
        if self.action_bound is None:
            return actions
        return np.clip(actions, -self.action_bound, self.action_bound)

    def act(self, s, rng: np.random.Generator) -> np.ndarray:
        return self.clip(self.sample(s, rng))

    def log_prob(self, s, a) -> np.ndarray:
        mean, log_std, _ = self.distribution(s)
        a = _as_batch(a, self.action_dim, "action")
        z = (a - mean) / np.exp(log_std)
        return -np.sum(0.5 * LOG_2PI + log_std + 0.5 * z ** 2, axis=1)

    def log_prob_grad(self, s, a, weights) -> list:
        """Parameter gradients of sum_i weights[i] * log pi(a_i | s_i)."""
        mean, log_std, (cache, raw) = self.distribution(s)
        a = _as_batch(a, self.action_dim, "action")
        w = np.asarray(weights, dtype=np.float64).reshape(-1, 1)
        z = (a - mean) / np.exp(log_std)
        g_mean = w * z / np.exp(log_std)
        lo, hi = self.log_std_bounds
        g_log_std = w * (z ** 2 - 1.0) * ((raw > lo) & (raw < hi))
        grads, _ = self.mlp.backward(cache, np.concatenate([g_mean, g_log_std], axis=1))
        return grads


_CHECKPOINT_KINDS = {
    'critic': CriticNet,
    'gaussian_model': GaussianModel,
    'gaussian_policy': GaussianPolicy,
}


def save_checkpoint(path: Union[str, Path], net) -> Path:
    """Write a versioned .npz checkpoint: header fields plus one dense array per parameter."""
    if isinstance(net, Mlp):
        kind, cfg, mlp = 'mlp', {'sizes': list(net.sizes)}, net
    else:
        kind = next((k for k, cls in _CHECKPOINT_KINDS.items() if isinstance(net, cls)), None)
        if kind is None:
            raise TypeError(f"cannot checkpoint object of type {type(net).__name__}")
        cfg, mlp = net.config(), net.mlp
    arrays = {f'param_{i:03d}': p for i, p in enumerate(mlp.params)}
    path = Path(path)
    with open(path, 'wb') as f:
        np.savez(f, format_version=np.array(CHECKPOINT_VERSION), kind=np.array(kind),
                 config=np.array(json.dumps(cfg, sort_keys=True)), sizes=np.array(mlp.sizes), **arrays)
    return path


def load_checkpoint(path: Union[str, Path]):
    """Rebuild the network saved by save_checkpoint."""
    with np.load(path, allow_pickle=False) as data:
        version = int(data['format_version'])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        kind = str(data['kind'])
        cfg = json.loads(str(data['config']))
        params = [data[k] for k in sorted(k for k in data.files if k.startswith('param_'))]
    if kind == 'mlp':
        net = Mlp(cfg['sizes'])
        mlp = net
    else:
        net = _CHECKPOINT_KINDS[kind].from_config(cfg)
        mlp = net.mlp
    if len(params) != len(mlp.params):
        raise ShapeMismatchError(f"{path}: {len(params)} arrays for {len(mlp.params)} parameters")
    for dst, src in zip(mlp.params, params):
        if dst.shape != src.shape:
            raise ShapeMismatchError(f"{path}: parameter shape {src.shape} does not match {dst.shape}")
        dst[...] = src
    return net
