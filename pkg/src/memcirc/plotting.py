"""Figure rendering for CLI reports (matplotlib, non-interactive backend)."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no timestamps or version strings, so reruns give identical bytes
_METADATA = {"Software": None}


def _save(fig, path):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", dpi=100, metadata=_METADATA)
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.remove(tmp)
    return path


def _arr(x):
    return x.samples if hasattr(x, "samples") else np.asarray(x, dtype=float)


def plot_loop(path, x, y, title="", xlabel="i [A]", ylabel="v [V]"):
    """Closed curve y(x), e.g. a v-i loop; the first point is repeated to close it."""
    x, y = _arr(x), _arr(y)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(np.append(x, x[:1]), np.append(y, y[:1]), lw=1.2)
    ax.axhline(0, color="0.7", lw=0.6)
    ax.axvline(0, color="0.7", lw=0.6)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_traces(path, t, series: dict, xlabel="t [s]", ylabel="", events=()):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for name, y in series.items():
        ax.plot(t, _arr(y), lw=1.0, label=name)
    for te in events:
        ax.axvline(te, color="0.6", lw=0.5, ls=":")
    ax.set_xlabel(xlabel)
    if ylabel:
        ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_sweep(path, x, series: dict, xlabel=""):
    fig, axes = plt.subplots(len(series), 1, figsize=(5, 2.5 * len(series)), sharex=True, squeeze=False)
    for ax, (name, y) in zip(axes[:, 0], series.items()):
        ax.plot(x, y, "o-", ms=3)
        ax.set_ylabel(name)
    axes[-1, 0].set_xlabel(xlabel)
    fig.tight_layout()
    return _save(fig, path)
