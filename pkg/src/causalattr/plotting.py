"""Figure rendering for report outputs (sweeps, ACE curves, saliency maps,
training logs).  Uses the Agg backend so files render identically headless."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .regressor import predict

__all__ = [
    "save_sweep_figure",
    "save_ace_figure",
    "save_saliency_figure",
    "save_training_figure",
]

_DPI = 120


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_sweep_figure(path, sweep, regressor=None, title=None):
    """Interventional expectation against alpha, with the regressor's
    predictive band and baseline when available."""
    fig, ax = plt.subplots(figsize=(6, 4))
    alphas = sweep.grid.alphas
    ax.plot(alphas, sweep.ie, "o", ms=4, color="tab:blue",
            label=f"ie ({sweep.method})")
    if regressor is not None:
        dense = np.linspace(alphas[0], alphas[-1], 300)
        mean, var = predict(regressor, dense)
        std = np.sqrt(var)
        ax.plot(dense, mean, "-", color="tab:orange", label="regressor mean")
        ax.fill_between(dense, mean - std, mean + std, color="tab:orange",
                        alpha=0.25, linewidth=0, label="+-1 std")
        ax.axhline(regressor.baseline, color="gray", ls="--", lw=1,
                   label="baseline")
    ax.set_xlabel("alpha")
    ax.set_ylabel("E[y | do(x=alpha)]")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    _finish(fig, path)


def save_ace_figure(path, regressor, title=None):
    """ACE curve (predictive mean minus baseline) with its uncertainty band."""
    low, high = regressor.domain
    dense = np.linspace(low, high, 300)
    mean, var = predict(regressor, dense)
    ace = mean - regressor.baseline
    std = np.sqrt(var)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(dense, ace, "-", color="tab:green", label="ACE")
    ax.fill_between(dense, ace - std, ace + std, color="tab:green", alpha=0.25,
                    linewidth=0)
    ax.axhline(0.0, color="gray", ls="--", lw=1)
    ax.set_xlabel("alpha")
    ax.set_ylabel("ACE(alpha)")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    _finish(fig, path)


def save_saliency_figure(path, saliency_map, feature_names=None, title=None):
    """Heatmap of a saliency vector (1 row) or step-by-feature matrix."""
    m = np.atleast_2d(np.asarray(saliency_map, dtype=np.float64))
    fig, ax = plt.subplots(figsize=(6, 4))
    image = ax.imshow(m.T, aspect="auto", cmap="viridis", interpolation="nearest")
    ax.set_xlabel("step" if m.shape[0] > 1 else "instance")
    ax.set_ylabel("feature")
    if feature_names is not None:
        ax.set_yticks(range(len(feature_names)))
        ax.set_yticklabels(feature_names, fontsize=8)
    if title:
        ax.set_title(title)
    fig.colorbar(image, ax=ax, label="ACE")
    _finish(fig, path)


def save_training_figure(path, history, title=None):
    """Loss and accuracy curves over epochs."""
    epochs = [h[0] for h in history]
    loss = [h[1] for h in history]
    acc = [h[2] for h in history]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, loss, color="tab:red", label="loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    twin = ax.twinx()
    twin.plot(epochs, acc, color="tab:blue", label="accuracy")
    twin.set_ylabel("accuracy")
    twin.set_ylim(0.0, 1.05)
    if title:
        ax.set_title(title)
    _finish(fig, path)
