"""
Core functionality and CLI for simcert.
Handles command-line argument parsing and dispatches to the harness subcommands.
"""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import SUITES, load_experiment_config
from .experiments import cmd_active, cmd_bias_study, cmd_reproduce_narrow_passage, cmd_stability, cmd_train
from .mdp import load_mdp
from .report import Report
from .ui import Colors, print_error
from .utils import SimcertError, last_run, remember_last_run
from .verify import cmd_verify

ENVS = ('tabular', 'narrow-passage', 'biased-coverage')


def _add_common(p: argparse.ArgumentParser):
    p.add_argument('-c', '--config', metavar='FILE', help='JSON experiment config')
    p.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                   help='dotted-path config override, e.g. --set active.w_max=3 (repeatable)')
    p.add_argument('-o', '--output-dir', metavar='DIR', help='parent directory for run directories')
    p.add_argument('-w', '--workers', type=int, metavar='N', help='parallel jobs (default from user config)')
    p.add_argument('--seeds', metavar='LIST', help='comma-separated seed list, e.g. 0,1,2')
    p.add_argument('-q', '--quiet', action='store_true', help='no progress output')


def _subparser(subparsers, name: str, help_text: str, description: str, examples: str) -> argparse.ArgumentParser:
    p = subparsers.add_parser(name, help=help_text, description=description, epilog=f"\nExamples:\n{examples}",
                              formatter_class=argparse.RawDescriptionHelpFormatter)
    if name != 'report':
        _add_common(p)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='simcert',
        description="Policy-aware minimax simulator learning with certified bounds",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  simcert verify                                  # every bound suite, default sizes
  simcert verify --suite duality --suite saddle   # a subset of suites
  simcert verify --mdp true.mdp --model model.mdp # every bound on one pair
  simcert train-w1 --env narrow-passage --seeds 0,1
  simcert active --env tabular --rounds 20
  simcert reproduce-narrow-passage -o runs/
  simcert bias-study --set env.bias_factor=1      # unbiased control
  simcert report                                  # show the last run
        """
    )
    parser.add_argument('-v', '--version', action='version', version=f'simcert {__version__}')
    subparsers = parser.add_subparsers(dest='command', help='Command to execute')

    p = _subparser(subparsers, 'verify', 'Check every bound numerically',
                   'Run the bound-certification suites on random desk-scale MDPs, or on one user-supplied pair.',
                   "  verify --suite online --set verify.online_rounds=500\n"
                   "  verify --sabotage          # must fail: the simulation bound on a tampered kernel")
    p.add_argument('--suite', action='append', choices=SUITES, metavar='NAME',
                   help=f"run only this suite (repeatable): {', '.join(SUITES)}")
    p.add_argument('--mdp', metavar='FILE', help='true MDP file (with --model)')
    p.add_argument('--model', metavar='FILE', help='model MDP file (with --mdp)')
    p.add_argument('--sabotage', action='store_true', help='tamper with one kernel row after computing the bound')

    for kind, critic in (('tv', 'bounded (TV)'), ('w1', 'Lipschitz (W1)')):
        p = _subparser(subparsers, f'train-{kind}', f'Train a model against a {critic} critic',
                       f'Play the minimax game against a {critic} critic, next to an MLE baseline on the same data.',
                       f"  train-{kind} --env tabular --rounds 300\n  train-{kind} --env biased-coverage --seeds 0")
        p.add_argument('--env', choices=ENVS, default='tabular', help='environment (default: tabular)')
        p.add_argument('--rounds', type=int, metavar='N', help='game rounds (game.rounds)')

    p = _subparser(subparsers, 'active', 'Run the critic-guided active learning loop',
                   'Alternate model games and critic-guided data selection; tabular runs certify the finite-time bound.',
                   "  active --env tabular --rounds 20\n  active --env narrow-passage --w-max 3")
    p.add_argument('--env', choices=ENVS, default='tabular', help='environment (default: tabular)')
    p.add_argument('--rounds', type=int, metavar='N', help='active rounds (active.rounds)')
    p.add_argument('--w-max', type=float, metavar='W', help='importance weight clip (active.w_max)')
    p.add_argument('--alpha', type=float, metavar='A', help='task reward weight of the sampler (active.alpha)')

    p = _subparser(subparsers, 'reproduce-narrow-passage', 'Reproduce the narrow-passage experiment',
                   'Critic-guided sampling on the wall-and-passage task: heatmaps, vector fields and band RMSE.',
                   "  reproduce-narrow-passage --seeds 0,1,2,3,4 -o runs/")
    p.add_argument('--wind-mode', choices=('approach', 'inside'), help='wind model (env.wind_mode)')
    p.add_argument('--wall-mode', choices=('truncate', 'reject'), help='wall model (env.wall_mode)')

    p = _subparser(subparsers, 'bias-study', 'MLE against minimax under biased coverage',
                   'Compare strategic-region RMSE of MLE and critic-guided models when contact states are rare.',
                   "  bias-study --bias-factor 4\n  bias-study --bias-factor 1   # control: gain near 1")
    p.add_argument('--bias-factor', type=float, metavar='B', help='under-sampling of contact states (env.bias_factor)')

    _subparser(subparsers, 'stability', 'Seed spread of clipped and MLE training',
               'Inter-seed spread of strategic RMSE for w_max=3, w_max=10 and MLE.',
               "  stability --seeds 0,1,2,3,4")

    p = _subparser(subparsers, 'report', 'Print a stored run report',
                   'Pretty-print report.json from a run directory, or from the last run.',
                   "  report\n  report simcert-runs/verify-0123456789ab")
    p.add_argument('run_dir', nargs='?', help='run directory or report.json (default: last run)')
    return parser


_FLAG_KEYS = {
    'sabotage': 'verify.sabotage',
    'w_max': 'active.w_max',
    'alpha': 'active.alpha',
    'wind_mode': 'env.wind_mode',
    'wall_mode': 'env.wall_mode',
    'bias_factor': 'env.bias_factor',
}


def _overrides(args) -> list:
    out = []
    if args.output_dir:
        out.append(f"output_dir={json.dumps(args.output_dir)}")
    if args.workers is not None:
        out.append(f"workers={args.workers}")
    if args.seeds:
        try:
            seeds = [int(s) for s in args.seeds.split(',') if s.strip()]
        except ValueError as e:
            raise SimcertError(f"--seeds must be a comma-separated list of integers, got '{args.seeds}'") from e
        out.append(f"seeds={json.dumps(seeds)}")
    if getattr(args, 'suite', None):
        out.append(f"verify.suites={json.dumps(sorted(set(args.suite), key=SUITES.index))}")
    if getattr(args, 'rounds', None) is not None:
        section = 'active' if args.command == 'active' else 'game'
        out.append(f"{section}.rounds={args.rounds}")
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None and value is not False:
            out.append(f"{key}={json.dumps(value)}")
    return out + list(args.overrides)


def _print_report(report: Report, quiet: bool = False):
    lines = report.summary_lines()
    if quiet:
        lines = lines[-1:]
    for line in lines:
        print(line)


def _run(args) -> Report:
    cfg = load_experiment_config(args.config, _overrides(args))
    run_dir = cfg.run_dir(args.command)
    kwargs = {'run_dir': run_dir, 'quiet': args.quiet}
    if args.command == 'verify':
        pair = None
        if args.mdp or args.model:
            if not (args.mdp and args.model):
                raise SimcertError("--mdp and --model must be given together")
            pair = (load_mdp(args.mdp), load_mdp(args.model))
        report = cmd_verify(cfg, pair=pair, **kwargs)
    elif args.command in ('train-tv', 'train-w1'):
        report = cmd_train(cfg, args.command.split('-')[1], args.env, **kwargs)
    elif args.command == 'active':
        report = cmd_active(cfg, args.env, **kwargs)
    elif args.command == 'reproduce-narrow-passage':
        report = cmd_reproduce_narrow_passage(cfg, **kwargs)
    elif args.command == 'bias-study':
        report = cmd_bias_study(cfg, **kwargs)
    else:
        report = cmd_stability(cfg, **kwargs)
    report.write(run_dir)
    remember_last_run(run_dir)
    return report


def main(argv=None):
    """Main entry point for simcert CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        sys.exit(1)

    try:
        if args.command == 'report':
            target = args.run_dir or last_run()
            if not target:
                print_error("No run recorded yet; pass a run directory")
                sys.exit(1)
            report = Report.load(Path(target))
            _print_report(report)
        else:
            report = _run(args)
            _print_report(report, quiet=args.quiet)
            if not args.quiet:
                print(f"{Colors.DIM}report: {args.command} -> {last_run()}{Colors.RESET}")
    except KeyboardInterrupt:
        print(f"\n{Colors.YELLOW}Operation cancelled by user{Colors.RESET}", file=sys.stderr)
        sys.exit(130)
    except (SimcertError, FileNotFoundError, ValueError) as e:
        print_error(str(e))
        sys.exit(1)

    sys.exit(0 if report.passed else 1)


if __name__ == '__main__':
    main()
