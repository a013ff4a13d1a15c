"""
simcert - policy-aware minimax simulator learning

Adversarial (critic-based) model training, Error-MDP data selection and numerical
certification of the value-gap bounds on desk-scale MDPs.
"""

__version__ = "0.1.0"

from .active import ActiveConfig, SamplingDistribution, iterative_learning, iterative_learning_tabular
from .config import ExperimentConfig, load_experiment_config
from .core import main
from .error_mdp import ErrorMDP, build_error_mdp, duality_check, solve_error_mdp
from .games import GameConfig, TabularKernel, mle_baseline, online_game, train_tv_critic, train_w1_critic
from .mdp import OccupancyMeasure, StateMetric, TabularMDP, TabularPolicy, load_mdp, occupancy, save_mdp
from .metrics import kl, simulation_bound, tv, w1_discrete
from .nn import CriticNet, GaussianModel, GaussianPolicy, LipschitzMode, Mlp, load_checkpoint, save_checkpoint
from .report import Report
from .ui import Colors, ProgressBar
from .utils import (
    BudgetExceededError,
    ConfigError,
    ContractionError,
    NumericalError,
    ShapeMismatchError,
    SimcertError,
    load_config,
    save_config,
)

__all__ = [
    'main',
    'ActiveConfig',
    'SamplingDistribution',
    'iterative_learning',
    'iterative_learning_tabular',
    'ExperimentConfig',
    'load_experiment_config',
    'ErrorMDP',
    'build_error_mdp',
    'duality_check',
    'solve_error_mdp',
    'GameConfig',
    'TabularKernel',
    'mle_baseline',
    'online_game',
    'train_tv_critic',
    'train_w1_critic',
    'OccupancyMeasure',
    'StateMetric',
    'TabularMDP',
    'TabularPolicy',
    'load_mdp',
    'occupancy',
    'save_mdp',
    'kl',
    'simulation_bound',
    'tv',
    'w1_discrete',
    'CriticNet',
    'GaussianModel',
    'GaussianPolicy',
    'LipschitzMode',
    'Mlp',
    'load_checkpoint',
    'save_checkpoint',
    'Report',
    'Colors',
    'ProgressBar',
    'BudgetExceededError',
    'ConfigError',
    'ContractionError',
    'NumericalError',
    'ShapeMismatchError',
    'SimcertError',
    'load_config',
    'save_config',
]
