"""
Experiment subcommands: narrow passage, bias study, stability, and the single-game runners.

Each subcommand fans seeds (and regimes) out over a thread pool, every job seeded only by
its own seed, and assembles one Report in seed order. Figures are drawn afterwards on the
main thread.
"""

from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import stats

from .active import (
    critic_scores, finite_time_check, iterative_learning, iterative_learning_tabular, tabular_task_sampler,
    task_aware_sampler,
)
from .config import ExperimentConfig
from .envs import (
    DatasetSource, GenerativeSource, TabularSource, Transitions,
    biased_batch, make_random_tabular, perturb_kernel, random_line_metric,
)
from .games import GameConfig, GameTrace, TabularKernel, mle_baseline, train_tv_critic, train_w1_critic
from .mdp import worst_case_gap
from .nn import CriticNet, GaussianModel, LipschitzMode, save_checkpoint
from .plots import heatmap, line_plot, vector_field
from .report import Report, mean_std, run_jobs
from .ui import ProgressBar

RIGHT = np.array([0.1, 0.0])
FIELD_POINTS = 9
STABILITY_REGIMES = ('stabilized', 'aggressive', 'mle')


def _new_report(command: str, cfg: ExperimentConfig) -> Report:
    report = Report(command, cfg.hashed_dict(), cfg.config_hash(), list(cfg.seeds))
    report.start()
    return report


def _fan_out(label: str, jobs: list, cfg: ExperimentConfig, quiet: bool) -> list:
    progress = ProgressBar(len(jobs), label, quiet=quiet, handle_signals=not quiet)
    results = run_jobs(jobs, cfg.workers, progress)
    progress.finish()
    return results


def _fit(model, data: Transitions, game: GameConfig, rounds: int, seed: int, trace: Optional[GameTrace] = None):
    source = DatasetSource(data)
    return mle_baseline(source, source.true_sampler, model, replace(game, rounds=rounds, seed=seed), trace)


def _refit_seed(active) -> int:
    """Seed iterative_learning uses for its final refit, so baselines share the protocol."""
    return active.game.seed + active.rounds + 1


def _draw(env, pairs: tuple, rng: np.random.Generator) -> Transitions:
    s, a = pairs
    return Transitions(s, a, env.reward(s, a), env.transition(s, a, rng))


def _rmse(pred: np.ndarray, target: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    err = np.sum((np.asarray(pred) - np.asarray(target)) ** 2, axis=1)
    if mask is not None:
        err = err[mask]
    return float(np.sqrt(err.mean())) if err.size else float('nan')


def _collected(history: list) -> Transitions:
    data = history[0].batch
    for rd in history[1:]:
        data = data.concat(rd.batch)
    return data


def _curves(history: list) -> tuple:
    critic = np.concatenate([rd.trace.column('critic_obj') for rd in history])
    loss = np.concatenate([rd.trace.column('model_loss') for rd in history])
    return critic, loss


def _grid(n: int) -> tuple:
    xs = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(xs, xs)
    return xs, np.stack([X.ravel(), Y.ravel()], axis=1)


# --- narrow passage -----------------------------------------------------------------------

def _narrow_passage_seed(cfg: ExperimentConfig, seed: int, with_plots: bool) -> dict:
    env = cfg.env.narrow_passage()
    study, active = cfg.study, cfg.active
    rng = np.random.default_rng(seed)
    hidden = tuple(study.hidden)
    model = GaussianModel(2, 2, hidden, deterministic=study.passage_model == 'deterministic', rng=rng)
    naive = _draw(env, env.uniform_pairs(rng, study.n_train), rng)
    _fit(model, naive, active.game, study.mle_rounds, seed)
    baseline = model.copy()
    critic = CriticNet(2, 2, hidden, LipschitzMode.projection(1.0), rng=rng)
    xs, cells = _grid(study.grid)
    plots = {}

    def after_round(t: int):
        if with_plots and t == 1:
            acts = np.tile(RIGHT, (len(cells), 1))
            scores = critic_scores(critic, model, env, cells, acts, np.random.default_rng(seed),
                                   active.real_samples, active.model_samples)
            plots['critic_error'] = scores.reshape(study.grid, study.grid)

    refit = replace(active, final_mle_rounds=study.mle_rounds)
    averaged, history, final = iterative_learning(env, model, critic, active.rounds, refit, seed=seed,
                                                  on_round=after_round, initial=naive)
    extra = _draw(env, env.uniform_pairs(rng, active.rounds * active.samples_per_round), rng)
    _fit(baseline, naive.concat(extra), active.game, study.mle_rounds, _refit_seed(active))

    first = history[0]
    band = env.in_strategic_band(first.pool[0])
    uniform_share = float(band.mean())
    band_mass = float(first.pool_weights[band].sum())
    score_share = float(first.scores[band].sum() / first.scores.sum()) if first.scores.sum() > 0 else 0.0

    test_s = np.column_stack([rng.uniform(env.wall_x - env.band_halfwidth, env.wall_x + env.band_halfwidth,
                                          study.n_test), rng.uniform(0.0, 1.0, study.n_test)])
    test_a = env.random_actions(rng, study.n_test)
    truth = env.true_mean(test_s, test_a, rng, study.eval_samples)
    critic_curve, loss_curve = _curves(history)
    out = {
        'seed': seed,
        'band_mass_round2': band_mass,
        'uniform_band_share': uniform_share,
        'critic_band_ratio': score_share / uniform_share if uniform_share > 0 else float('inf'),
        'rmse_active': _rmse(final.predict_mean(test_s, test_a), truth),
        'rmse_uniform_mle': _rmse(baseline.predict_mean(test_s, test_a), truth),
        'rmse_mixture': _rmse(averaged.predict_mean(test_s, test_a), truth),
        'critic_objective': [rd.critic_objective for rd in history],
        'finite': bool(np.all(np.isfinite(critic_curve)) and np.all(np.isfinite(loss_curve))),
    }
    if with_plots:
        plots['sampling_mass'] = []
        for rd in history:
            H, _, _ = np.histogram2d(rd.pool[0][:, 0], rd.pool[0][:, 1], bins=study.grid,
                                     range=[[0.0, 1.0], [0.0, 1.0]], weights=rd.pool_weights)
            plots['sampling_mass'].append(H.T)
        pts = (np.arange(FIELD_POINTS) + 0.5) / FIELD_POINTS
        X, Y = np.meshgrid(pts, pts)
        points = np.stack([X.ravel(), Y.ravel()], axis=1)
        acts = np.tile(RIGHT, (len(points), 1))
        plots['field_points'] = points
        plots['field_true'] = env.true_mean(points, acts, rng, study.eval_samples) - points
        plots['field_learned'] = final.predict_mean(points, acts) - points
        plots['grid_xs'] = xs
        sampler, sampler_history = task_aware_sampler(env, final, critic, env.task_reward, active.alpha,
                                                      active.w_max, active, seed=seed)
        plots['sampler_reward'] = [h['hybrid_reward'] for h in sampler_history]
        plots['sampler_task_return'] = [h['task_return'] for h in sampler_history]
        plots['model'] = final
        plots['critic_curve'], plots['loss_curve'] = critic_curve, loss_curve
        out['sampler_kind'] = sampler.kind
    out['plots'] = plots
    return out


def cmd_reproduce_narrow_passage(cfg: ExperimentConfig, run_dir: Optional[Path] = None,
                                 quiet: bool = True) -> Report:
    """Critic-guided active learning on the narrow passage against a uniform-data MLE model."""
    report = _new_report('reproduce-narrow-passage', cfg)
    first = cfg.seeds[0]
    jobs = [(f"seed {s}", _bind(_narrow_passage_seed, cfg, s, s == first and run_dir is not None))
            for s in cfg.seeds]
    runs = _fan_out('narrow passage', jobs, cfg, quiet)
    plots = runs[0].pop('plots')
    for r in runs[1:]:
        r.pop('plots')
    strict = cfg.study.strict

    band = [r['band_mass_round2'] for r in runs]
    ratio = [r['critic_band_ratio'] for r in runs]
    wins = [r['rmse_active'] < r['rmse_uniform_mle'] for r in runs]
    report.check('round-2 sampling mass in the wall/passage band', min(band) >= cfg.study.band_mass_threshold,
                 cfg.study.band_mass_threshold, min(band), 'minimum over seeds', asserted=strict)
    report.check('critic error concentrates in the band', min(ratio) > 2.0, 2.0, min(ratio),
                 'band share of critic error over uniform share after round 1', asserted=strict)
    report.check('active model beats uniform MLE in the band', all(wins),
                 detail=f"{sum(wins)}/{len(wins)} seeds", asserted=strict)
    report.check('all training curves finite', all(r['finite'] for r in runs))
    report.results = {
        'seeds': runs,
        'band_mass_round2': mean_std(band),
        'rmse_active': mean_std([r['rmse_active'] for r in runs]),
        'rmse_uniform_mle': mean_std([r['rmse_uniform_mle'] for r in runs]),
    }
    if run_dir is not None:
        _narrow_passage_artifacts(report, plots, Path(run_dir))
    report.finish()
    return report


def _narrow_passage_artifacts(report: Report, plots: dict, run_dir: Path):
    run_dir.mkdir(parents=True, exist_ok=True)
    xs = plots['grid_xs']
    written = [*heatmap(run_dir / 'critic_error', xs, xs, plots['critic_error'],
                        'critic error after round 1, action right', '|critic gap|')]
    for t, H in enumerate(plots['sampling_mass'], start=2):
        written += heatmap(run_dir / f'sampling_mass_round{t}', xs, xs, H, f'sampling mass, round {t}', 'mass')
    written += vector_field(run_dir / 'vector_field_right', plots['field_points'],
                            {'true': plots['field_true'], 'learned': plots['field_learned']},
                            'one-step displacement, action right')
    its = np.arange(len(plots['sampler_reward']))
    written += line_plot(run_dir / 'sampler_curves', {'hybrid reward': (its, plots['sampler_reward']),
                                                      'task return': (its, plots['sampler_task_return'])},
                         xlabel='iteration', ylabel='mean')
    steps = np.arange(1, len(plots['critic_curve']) + 1)
    written += line_plot(run_dir / 'training_curves', {'critic objective': (steps, plots['critic_curve']),
                                                       'model loss': (steps, plots['loss_curve'])},
                         xlabel='game round', ylabel='value')
    written.append(save_checkpoint(run_dir / 'final_model.npz', plots['model']))
    report.artifacts.extend(Path(p).name for p in written)


# --- bias study ---------------------------------------------------------------------------

def _bias_seed(cfg: ExperimentConfig, seed: int) -> dict:
    env = cfg.env.biased_coverage()
    study, active = cfg.study, cfg.active
    rng = np.random.default_rng(seed)
    hidden = tuple(study.hidden)
    budget = active.rounds * active.samples_per_round
    initial = biased_batch(env, study.n_train, seed)

    model = GaussianModel(1, 1, hidden, rng=rng)
    _fit(model, initial, active.game, study.mle_rounds, seed)
    mle = model.copy()
    mle_data = initial.concat(_draw(env, env.biased_pairs(rng, budget), rng))
    _fit(mle, mle_data, active.game, study.mle_rounds, _refit_seed(active))

    critic = CriticNet(1, 1, hidden, LipschitzMode.projection(1.0), rng=rng)
    loop = replace(active, w_max=study.w_max_stabilized, final_mle_rounds=study.mle_rounds)
    adversarial, history, final = iterative_learning(env, model, critic, loop.rounds, loop,
                                                     base_sampler=env.biased_pairs, seed=seed, initial=initial)

    test_s, test_a = env.uniform_pairs(rng, study.n_test)
    truth = env.mean_next(test_s, test_a)
    sens = env.is_sensitive(test_s)
    out = {'seed': seed}
    for name, m in (('mle', mle), ('adversarial', adversarial), ('minimax', final)):
        pred = m.predict_mean(test_s, test_a)
        out[f'rmse_{name}'] = _rmse(pred, truth)
        out[f'rmse_{name}_sensitive'] = _rmse(pred, truth, sens)
    out['gain_avg'] = out['rmse_mle'] / out['rmse_minimax']
    out['gain_sensitive'] = out['rmse_mle_sensitive'] / out['rmse_minimax_sensitive']
    collected = _collected(history)
    out['collected_sensitive_share'] = float(env.is_sensitive(collected.s).mean())
    out['training_sensitive_share'] = float(env.is_sensitive(initial.s).mean())
    return out


def cmd_bias_study(cfg: ExperimentConfig, run_dir: Optional[Path] = None, quiet: bool = True) -> Report:
    """MLE against critic-guided active learning when training data under-sample the contact region."""
    report = _new_report('bias-study', cfg)
    runs = _fan_out('bias study', [(f"seed {s}", _bind(_bias_seed, cfg, s)) for s in cfg.seeds], cfg, quiet)
    strict = cfg.study.strict
    gains = np.array([r['gain_sensitive'] for r in runs])
    summary = {
        'seeds': runs,
        'bias_factor': cfg.env.bias_factor,
        'gain_sensitive': mean_std(gains),
        'gain_avg': mean_std([r['gain_avg'] for r in runs]),
        'avg_gain_below_one': bool(np.mean([r['gain_avg'] for r in runs]) < 1.0),
    }
    if len(runs) > 1:
        test = stats.ttest_1samp(gains, 1.0)
        summary['ttest_gain_vs_1'] = {'statistic': float(test.statistic), 'pvalue': float(test.pvalue)}
    if cfg.env.bias_factor > 1.0:
        low = summary['gain_sensitive']['mean'] - summary['gain_sensitive'].get('std', 0.0)
        report.check('sensitive-region gain above 1', low > 1.0, 1.0, low, 'mean minus one std', asserted=strict)
    elif 'ttest_gain_vs_1' in summary:
        p = summary['ttest_gain_vs_1']['pvalue']
        report.check('unbiased control: gain indistinguishable from 1', p >= 0.05, detail=f"two-sided p = {p:.3g}",
                     asserted=False)
    report.check('all models finite', all(np.isfinite(r['rmse_minimax']) and np.isfinite(r['rmse_mle']) for r in runs))
    report.results = summary
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        x = np.arange(len(runs))
        written = line_plot(run_dir / 'bias_gains', {'sensitive gain': (x, gains),
                                                     'average gain': (x, [r['gain_avg'] for r in runs])},
                            xlabel='seed index', ylabel='RMSE(MLE) / RMSE(minimax)')
        report.artifacts.extend(Path(p).name for p in written)
    report.finish()
    return report


# --- stability ----------------------------------------------------------------------------

def _stability_run(cfg: ExperimentConfig, regime: str, seed: int) -> dict:
    env = cfg.env.biased_coverage()
    study = cfg.study
    rng = np.random.default_rng(seed)
    hidden = tuple(study.hidden)
    initial = biased_batch(env, study.n_train, seed)
    test_s, test_a = env.uniform_pairs(np.random.default_rng(10_000 + seed), study.n_test)
    truth = env.mean_next(test_s, test_a)
    sens = env.is_sensitive(test_s)
    model = GaussianModel(1, 1, hidden, rng=rng)
    _fit(model, initial, cfg.active.game, study.mle_rounds, seed)
    if regime == 'mle':
        trace = GameTrace()
        data = initial.concat(_draw(env, env.biased_pairs(rng, cfg.active.rounds * cfg.active.samples_per_round), rng))
        _fit(model, data, cfg.active.game, study.mle_rounds, _refit_seed(cfg.active), trace)
        critic_curve, loss_curve = np.array([]), trace.column('model_loss')
        final = model
    else:
        w_max = study.w_max_stabilized if regime == 'stabilized' else study.w_max_aggressive
        active = replace(cfg.active, w_max=w_max, final_mle_rounds=study.mle_rounds)
        critic = CriticNet(1, 1, hidden, LipschitzMode.projection(1.0), rng=rng)
        _, history, final = iterative_learning(env, model, critic, active.rounds, active,
                                               base_sampler=env.biased_pairs, seed=seed, initial=initial)
        critic_curve, loss_curve = _curves(history)
    return {
        'regime': regime,
        'seed': seed,
        'rmse_strategic': _rmse(final.predict_mean(test_s, test_a), truth, sens),
        'critic_curve': critic_curve,
        'loss_curve': loss_curve,
        'finite': bool(np.all(np.isfinite(critic_curve)) and np.all(np.isfinite(loss_curve))),
    }


def cmd_stability(cfg: ExperimentConfig, run_dir: Optional[Path] = None, quiet: bool = True) -> Report:
    """Inter-seed spread of strategic RMSE for clipped (small and large w_max) and MLE training."""
    report = _new_report('stability', cfg)
    jobs = [(f"{regime} seed {s}", _bind(_stability_run, cfg, regime, s))
            for regime in STABILITY_REGIMES for s in cfg.seeds]
    runs = _fan_out('stability', jobs, cfg, quiet)
    by_regime = {regime: [r for r in runs if r['regime'] == regime] for regime in STABILITY_REGIMES}
    summary = {}
    for regime, rs in by_regime.items():
        summary[regime] = {'rmse_strategic': mean_std([r['rmse_strategic'] for r in rs]),
                           'per_seed': [r['rmse_strategic'] for r in rs]}
    report.check('all runs finite', all(r['finite'] for r in runs), detail=f"{len(runs)} runs")
    if len(cfg.seeds) > 1:
        stab = summary['stabilized']['rmse_strategic']['std']
        aggr = summary['aggressive']['rmse_strategic']['std']
        report.check('stabilized spread below aggressive spread', stab < aggr, stab, aggr,
                     'inter-seed std of strategic RMSE', asserted=cfg.study.strict)
    report.results = {'regimes': summary}
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for name in ('loss_curve', 'critic_curve'):
            series, bands = {}, {}
            for regime, rs in by_regime.items():
                curves = [r[name] for r in rs if len(r[name])]
                if not curves:
                    continue
                n = min(len(c) for c in curves)
                stack = np.stack([c[:n] for c in curves])
                series[regime] = (np.arange(1, n + 1), stack.mean(axis=0))
                bands[regime] = stack.std(axis=0)
            if series:
                written += line_plot(run_dir / name, series, xlabel='game round',
                                     ylabel=name.replace('_', ' '), bands=bands)
        report.artifacts.extend(Path(p).name for p in written)
    report.finish()
    return report


# --- single games -------------------------------------------------------------------------

def _continuous_env(cfg: ExperimentConfig, env_name: str):
    if env_name == 'narrow-passage':
        env = cfg.env.narrow_passage()
        return env, env.uniform_pairs
    env = cfg.env.biased_coverage()
    return env, env.biased_pairs


def cmd_train(cfg: ExperimentConfig, kind: str, env_name: str = 'tabular', run_dir: Optional[Path] = None,
              quiet: bool = True) -> Report:
    """One TV or W1 game per seed next to an MLE fit on the same data stream."""
    if kind not in ('tv', 'w1'):
        raise ValueError(f"unknown game '{kind}'")
    game = train_tv_critic if kind == 'tv' else train_w1_critic
    report = _new_report(f'train-{kind}', cfg)

    def one(seed: int) -> dict:
        gcfg = replace(cfg.game, seed=seed)
        rng = np.random.default_rng(seed)
        if env_name == 'tabular':
            mdp = make_random_tabular(cfg.verify.max_states, cfg.verify.max_actions, seed=seed, gamma=cfg.verify.gamma)
            metric = random_line_metric(mdp.n_states, rng)
            source = TabularSource(mdp)
            model, trace = game(source, source.true_sampler, TabularKernel.uniform(mdp.n_states, mdp.n_actions),
                                'exact', gcfg, true_mdp=mdp, metric=metric)
            mle = mle_baseline(source, source.true_sampler, TabularKernel.uniform(mdp.n_states, mdp.n_actions), gcfg)
            return {'seed': seed, 'trace': trace,
                    'worst_gap': worst_case_gap(mdp, model.as_mdp(mdp))[1],
                    'worst_gap_mle': worst_case_gap(mdp, mle.as_mdp(mdp))[1]}
        env, pairs = _continuous_env(cfg, env_name)
        source = GenerativeSource(env, pairs)
        hidden = tuple(cfg.study.hidden)
        model = GaussianModel(env.state_dim, env.action_dim, hidden, rng=rng)
        mode = LipschitzMode.none() if kind == 'tv' else LipschitzMode.projection(1.0)
        critic = CriticNet(env.state_dim, env.action_dim, hidden, mode, squash=(kind == 'tv'), rng=rng)
        model, trace = game(source, source.true_sampler, model, critic, gcfg)
        mle = mle_baseline(source, source.true_sampler, GaussianModel(env.state_dim, env.action_dim, hidden, rng=rng),
                           gcfg)
        test = _draw(env, env.uniform_pairs(rng, cfg.study.n_test), rng)
        return {'seed': seed, 'trace': trace,
                'rmse': _rmse(model.predict_mean(test.s, test.a), test.s_next),
                'rmse_mle': _rmse(mle.predict_mean(test.s, test.a), test.s_next)}

    runs = _fan_out(f'train-{kind}', [(f"seed {s}", _bind(one, s)) for s in cfg.seeds], cfg, quiet)
    traces = [r.pop('trace') for r in runs]
    finite = all(np.all(np.isfinite(t.column('critic_obj'))) for t in traces)
    report.check('training curves finite', finite, detail=f"{len(traces)} seeds x {cfg.game.rounds} rounds")
    report.results = {'env': env_name, 'seeds': runs}
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        for seed, trace in zip(cfg.seeds, traces):
            trace.to_csv(run_dir / f'trace_seed{seed}.csv')
            report.artifacts.append(f'trace_seed{seed}.csv')
    report.finish()
    return report


def cmd_active(cfg: ExperimentConfig, env_name: str = 'tabular', run_dir: Optional[Path] = None,
               quiet: bool = True) -> Report:
    """The active loop per seed; tabular runs also certify the finite-time bound."""
    report = _new_report('active', cfg)
    active = cfg.active

    def one(seed: int) -> dict:
        rng = np.random.default_rng(seed)
        if env_name == 'tabular':
            mdp = make_random_tabular(cfg.verify.max_states, cfg.verify.max_actions, seed=seed, gamma=cfg.verify.gamma)
            metric = random_line_metric(mdp.n_states, rng)
            init = perturb_kernel(mdp, 0.5, rng).transitions
            avg, run = iterative_learning_tabular(mdp, init, metric, active.rounds, eta0=active.eta_model,
                                                  uniform_mix=active.uniform_mix)
            bound = finite_time_check(run)
            sampler, _ = tabular_task_sampler(mdp, avg.as_mdp(mdp), metric, active.alpha)
            return {'seed': seed, 'objectives': run.objectives, 'holds': bound.holds, 'lhs': bound.avg_gap_lhs,
                    'rhs': bound.rhs, 'kappa': bound.kappa, 'sampler': sampler.probs.tolist()}
        env, pairs = _continuous_env(cfg, env_name)
        hidden = tuple(cfg.study.hidden)
        model = GaussianModel(env.state_dim, env.action_dim, hidden, rng=rng)
        critic = CriticNet(env.state_dim, env.action_dim, hidden, LipschitzMode.projection(1.0), rng=rng)
        _, history, final = iterative_learning(env, model, critic, active.rounds, active, base_sampler=pairs,
                                               seed=seed)
        test = _draw(env, env.uniform_pairs(rng, cfg.study.n_test), rng)
        return {'seed': seed, 'objectives': [rd.critic_objective for rd in history],
                'rmse': _rmse(final.predict_mean(test.s, test.a), test.s_next)}

    runs = _fan_out('active', [(f"seed {s}", _bind(one, s)) for s in cfg.seeds], cfg, quiet)
    if env_name == 'tabular':
        for r in runs:
            report.check(f"finite-time bound (seed {r['seed']})", r['holds'], r['lhs'], r['rhs'],
                         f"kappa {r['kappa']:.3g}")
    report.check('critic objectives finite', all(np.all(np.isfinite(r['objectives'])) for r in runs))
    report.results = {'env': env_name, 'seeds': runs}
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        series = {f"seed {r['seed']}": (np.arange(1, len(r['objectives']) + 1), r['objectives']) for r in runs}
        written = line_plot(run_dir / 'critic_objective', series, ylabel='critic objective')
        report.artifacts.extend(Path(p).name for p in written)
    report.finish()
    return report


def _bind(fn, *args):
    return lambda: fn(*args)
