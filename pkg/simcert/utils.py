"""
Utility functions for simcert.
Handles user preferences, the exception hierarchy, hashing and formatting helpers.
"""

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Optional

import numpy as np

# Configuration file management
CONFIG_FILE = Path.home() / ".config" / "simcert" / "config.json"

# Constants
ROW_TOL = 1e-9
MASS_TOL = 1e-6
SOLVE_RESIDUAL_TOL = 1e-8
BOUND_TOL = 1e-8
POLICY_ENUM_LIMIT = 10**6
W1_LP_MAX_SUPPORT = 64
LOGVAR_BOUNDS = (-10.0, 2.0)
RATE_SMOOTHING_FACTOR = 0.7


class SimcertError(Exception):
    """Base class for every error raised by simcert."""


class ShapeMismatchError(SimcertError, ValueError):
    """Array shapes of two objects that must agree do not."""


class NumericalError(SimcertError, ArithmeticError):
    """A non-finite value, a failed solve, or a solver that did not converge."""


class BudgetExceededError(SimcertError):
    """An enumeration would exceed its configured budget."""


class ContractionError(SimcertError, ValueError):
    """gamma * L_P >= 1, so the Lipschitz value constant does not exist."""


class ConfigError(SimcertError, ValueError):
    """Experiment configuration failed schema validation."""


def load_config() -> dict:
    """Load user preferences from the config file."""
    if not CONFIG_FILE.exists():
        return {}
    try:
        with open(CONFIG_FILE) as f:
            return json.load(f)
    except (json.JSONDecodeError, OSError):
        return {}


def save_config(config: dict):
    """Save user preferences to the config file."""
    CONFIG_FILE.parent.mkdir(parents=True, exist_ok=True)
    with open(CONFIG_FILE, 'w') as f:
        json.dump(config, f, indent=2)


def get_default_workers() -> int:
    """Get the default worker count from user preferences, or derive one from the CPU count."""
    config = load_config()
    return int(config.get('workers', min(4, os.cpu_count() or 1)))


def remember_last_run(run_dir: Path):
    """Record the most recent run directory so `simcert report` can find it."""
    config = load_config()
    config['last_run'] = str(run_dir)
    save_config(config)


def last_run() -> str:
    """Return the most recent run directory, or an empty string."""
    return load_config().get('last_run', '')


def require_finite(name: str, *arrays) -> None:
    """Raise NumericalError if any array holds NaN or infinity."""
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"{name}: non-finite values encountered")


def canonical_json(obj: Any) -> str:
    """JSON with sorted keys and fixed separators, stable across runs."""
    return json.dumps(obj, sort_keys=True, separators=(',', ':'), default=json_default)


def json_default(obj: Any):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def stable_hash(obj: Any) -> str:
    """SHA-256 of the canonical JSON form of obj."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def array_hash(*arrays: np.ndarray) -> str:
    """Short SHA-256 over the raw bytes of a sequence of arrays."""
    h = hashlib.sha256()
    for arr in arrays:
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()[:16]


def format_duration(seconds: Optional[float]) -> str:
    """Run or ETA duration: milliseconds below one second, "--" when unknown."""
    if seconds is None or not np.isfinite(seconds) or seconds < 0:
        return "--"
    if seconds < 1:
        return f"{seconds * 1000:.0f}ms"
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes, secs = divmod(int(round(seconds)), 60)
    if minutes < 60:
        return f"{minutes}m{secs:02d}s"
    hours, minutes = divmod(minutes, 60)
    return f"{hours}h{minutes:02d}m"


def format_value(x: float) -> str:
    """Format a bound value; infinities and NaN are spelled out."""
    if x is None:
        return "n/a"
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "+inf" if x > 0 else "-inf"
    if x != 0 and (abs(x) < 1e-3 or abs(x) >= 1e4):
        return f"{x:.3e}"
    return f"{x:.4f}"


def spawn_generators(seed: int, n: int) -> list:
    """Independent numpy Generators for n parallel jobs derived from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
