"""Static plots rendered from harness CSV files."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .results import read_csv

# x column preferred for each kind of table, first match wins
_X_COLUMNS = ("lambda", "h", "t", "sample")
_LOG_X = {"lambda", "h"}


def plot_csv(path, out=None) -> Path:
    """Plot every numeric column of ``path`` against its natural abscissa; returns the PNG path."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    columns, rows = read_csv(path)
    if not rows:
        raise ValueError(f"{path}: no rows")
    data = {c: [r[i] for r in rows] for i, c in enumerate(columns)}
    xcol = next((c for c in _X_COLUMNS if c in data), None)
    if xcol is None or not all(isinstance(v, float) for v in data[xcol]):
        raise ValueError(f"{path}: no numeric abscissa column")
    x = np.asarray(data[xcol])
    ys = {c: np.asarray(v) for c, v in data.items()
          if c != xcol and all(isinstance(e, float) for e in v)}
    if not ys:
        raise ValueError(f"{path}: nothing to plot")
    fig, ax = plt.subplots(figsize=(6, 4))
    for c, y in ys.items():
        y = np.abs(y)
        if np.any(y > 0):
            ax.plot(x, y, "o-", label=c)
    ax.set_xlabel(xcol)
    if xcol in _LOG_X:
        ax.set_xscale("log")
    if any(np.any(np.abs(y) > 0) for y in ys.values()):
        ax.set_yscale("log")
    ax.legend(fontsize=7)
    ax.set_title(path.stem)
    fig.tight_layout()
    target = Path(out) if out else path.with_suffix(".png")
    fig.savefig(target, dpi=120)
    plt.close(fig)
    return target
