"""
Run reports and job fan-out for the harness subcommands.

A report body (command, config, hash, seeds, version, checks, results, artifacts) is a
pure function of the config; wall-clock data lives in `meta` and is excluded from
`body_json`, so two runs of one config compare byte-for-byte.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .ui import ProgressBar, check_line
from .utils import format_duration, json_default

REPORT_FILE = 'report.json'


@dataclass
class Check:
    name: str
    passed: bool
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    detail: str = ''
    asserted: bool = True

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.lhs = None if self.lhs is None else float(self.lhs)
        self.rhs = None if self.rhs is None else float(self.rhs)


@dataclass
class Report:
    command: str
    config: dict
    config_hash: str
    seeds: list
    version: str = __version__
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def check(self, name: str, passed: bool, lhs: Optional[float] = None, rhs: Optional[float] = None,
              detail: str = '', asserted: bool = True) -> Check:
        c = Check(name, passed, lhs, rhs, detail, asserted)
        self.checks.append(c)
        return c

    def extend(self, checks: Sequence[Check]):
        self.checks.extend(checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if c.asserted and not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def body(self) -> dict:
        return {
            'command': self.command,
            'config': self.config,
            'config_hash': self.config_hash,
            'seeds': list(self.seeds),
            'version': self.version,
            'passed': self.passed,
            'checks': [asdict(c) for c in self.checks],
            'results': self.results,
            'artifacts': sorted(self.artifacts),
        }

    def body_json(self) -> str:
        return json.dumps(self.body(), sort_keys=True, indent=2, default=json_default)

    def start(self):
        self.meta['started'] = datetime.now(timezone.utc).isoformat()
        self.meta['_t0'] = time.time()

    def finish(self):
        t0 = self.meta.pop('_t0', None)
        self.meta['finished'] = datetime.now(timezone.utc).isoformat()
        if t0 is not None:
            self.meta['elapsed_s'] = round(time.time() - t0, 3)

    def write(self, run_dir: Union[str, Path]) -> Path:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        doc = self.body()
        doc['meta'] = {k: v for k, v in self.meta.items() if not k.startswith('_')}
        path = run_dir / REPORT_FILE
        path.write_text(json.dumps(doc, sort_keys=True, indent=2, default=json_default) + '\n')
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'Report':
        path = Path(path)
        if path.is_dir():
            path = path / REPORT_FILE
        doc = json.loads(path.read_text())
        checks = [Check(**c) for c in doc.get('checks', [])]
        return cls(doc['command'], doc['config'], doc['config_hash'], doc['seeds'], doc.get('version', ''),
                   checks, doc.get('results', {}), doc.get('artifacts', []), doc.get('meta', {}))

    def summary_lines(self) -> list:
        lines = [f"{self.command} (config {self.config_hash[:12]}, seeds {self.seeds}, simcert {self.version})"]
        for c in self.checks:
            detail = c.detail if c.asserted else f"{c.detail} [reported]".strip()
            lines.append(check_line(c.name, c.passed, c.lhs, c.rhs, detail))
        n_asserted = sum(c.asserted for c in self.checks)
        n_failed = len(self.failures)
        verdict = "all checks passed" if n_failed == 0 else f"{n_failed} of {n_asserted} checks failed"
        elapsed = self.meta.get('elapsed_s')
        if elapsed is not None:
            verdict += f" in {format_duration(elapsed)}"
        lines.append(verdict)
        return lines


def run_jobs(jobs: Sequence[tuple], workers: int, progress: Optional[ProgressBar] = None) -> list:
    """Run (name, callable) jobs on a thread pool; results come back in job order."""
    results = [None] * len(jobs)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = {executor.submit(fn): k for k, (_, fn) in enumerate(jobs)}
        for future in as_completed(futures):
            k = futures[future]
            results[k] = future.result()
            if progress is not None:
                progress.complete_item(jobs[k][0])
    return results


def mean_std(values: Sequence[float]) -> dict:
    """mean and sample std; std and stderr are absent for a single value."""
    x = np.asarray(values, dtype=np.float64)
    out = {'mean': float(x.mean()), 'n': int(x.size)}
    if x.size > 1:
        std = float(x.std(ddof=1))
        out['std'] = std
        out['stderr'] = std / float(np.sqrt(x.size))
    return out

