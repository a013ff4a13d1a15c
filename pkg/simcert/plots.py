"""
SVG figures with a colocated CSV of the exact plotted values.

Figures use the Agg backend, a fixed SVG hash salt and no Date metadata, so the same
numbers always produce byte-identical files.
"""

import csv
from pathlib import Path
from typing import Mapping, Sequence, Union

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams['svg.hashsalt'] = 'simcert'
matplotlib.rcParams['svg.fonttype'] = 'none'

PathLike = Union[str, Path]


def _save(fig, stem: Path) -> Path:
    svg = stem.with_suffix('.svg')
    fig.savefig(svg, format='svg', bbox_inches='tight', metadata={'Date': None})
    plt.close(fig)
    return svg


def _write_rows(path: Path, header: Sequence[str], rows) -> Path:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def heatmap(stem: PathLike, xs: np.ndarray, ys: np.ndarray, values: np.ndarray, title: str = '',
            label: str = 'value') -> tuple:
    """values[i, j] belongs to the cell at (xs[j], ys[i]). Writes stem.svg and stem.csv (x, y, value)."""
    stem = Path(stem)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (len(ys), len(xs)):
        raise ValueError(f"heatmap values have shape {values.shape}, expected {(len(ys), len(xs))}")
    csv_path = _write_rows(stem.with_suffix('.csv'), ('x', 'y', 'value'),
                           ((float(x), float(y), float(values[i, j]))
                            for i, y in enumerate(ys) for j, x in enumerate(xs)))
    fig, ax = plt.subplots(figsize=(5, 4))
    mesh = ax.pcolormesh(xs, ys, values, shading='nearest', cmap='viridis')
    fig.colorbar(mesh, ax=ax, label=label)
    ax.set_xlabel('x')
    ax.set_ylabel('y')
    ax.set_aspect('equal')
    if title:
        ax.set_title(title)
    return _save(fig, stem), csv_path


def line_plot(stem: PathLike, series: Mapping[str, tuple], xlabel: str = 'round', ylabel: str = 'value',
              title: str = '', bands: Mapping[str, np.ndarray] = None) -> tuple:
    """One line per named (x, y) series, optional +-band per series. CSV columns: series, x, y[, band]."""
    stem = Path(stem)
    bands = bands or {}
    rows = []
    for name, (x, y) in series.items():
        band = bands.get(name)
        for k, (xi, yi) in enumerate(zip(x, y)):
            rows.append((name, float(xi), float(yi), float(band[k]) if band is not None else 0.0))
    csv_path = _write_rows(stem.with_suffix('.csv'), ('series', 'x', 'y', 'band'), rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, (x, y) in series.items():
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        ax.plot(x, y, label=name)
        if name in bands:
            b = np.asarray(bands[name], dtype=np.float64)
            ax.fill_between(x, y - b, y + b, alpha=0.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    return _save(fig, stem), csv_path


def vector_field(stem: PathLike, points: np.ndarray, fields: Mapping[str, np.ndarray], title: str = '') -> tuple:
    """Displacement arrows at 2-D points, one color per named field.

    CSV columns: field, x, y, u, v.
    """
    stem = Path(stem)
    points = np.asarray(points, dtype=np.float64)
    rows = []
    for name, uv in fields.items():
        uv = np.asarray(uv, dtype=np.float64)
        if uv.shape != points.shape:
            raise ValueError(f"field '{name}' has shape {uv.shape}, expected {points.shape}")
        rows.extend((name, p[0], p[1], d[0], d[1]) for p, d in zip(points, uv))
    csv_path = _write_rows(stem.with_suffix('.csv'), ('field', 'x', 'y', 'u', 'v'), rows)
    fig, ax = plt.subplots(figsize=(5, 5))
    for color, (name, uv) in zip(('tab:blue', 'tab:red', 'tab:green'), fields.items()):
        uv = np.asarray(uv, dtype=np.float64)
        ax.quiver(points[:, 0], points[:, 1], uv[:, 0], uv[:, 1], color=color, label=name,
                  angles='xy', scale_units='xy', scale=1.0, width=0.003)
    ax.axvline(0.5, color='k', linewidth=0.8)
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_aspect('equal')
    ax.legend(loc='upper left')
    if title:
        ax.set_title(title)
    return _save(fig, stem), csv_path
