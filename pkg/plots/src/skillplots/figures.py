"""The four figure types: skill-count learning curves with mean+-std bands,
accuracy per step, reward-scale comparison with Gaussian smoothing, and the
final-state map over the grid. Everything is read-only over run directories.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import RunSeries, load_final_skills, load_reward_series, load_walls, seed_dirs


def gaussian_smooth(x: np.ndarray, sigma: float = 5.0) -> np.ndarray:
    """Gaussian kernel smoothing in sample units; edges renormalized so the
    smoothed series has no boundary droop."""
    if sigma <= 0 or len(x) < 2:
        return np.asarray(x, dtype=float)
    radius = max(1, int(round(4 * sigma)))
    k = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
    num = np.convolve(x, k, mode="same")
    den = np.convolve(np.ones_like(x), k, mode="same")
    return num / den


def plot_learning_curves(runs: list[RunSeries], out: Path,
                         references: dict[str, float] | None = None) -> Path:
    """Effective skills vs env steps, one mean+-std band per run, plus dashed
    reference lines (e.g. maximum available states, random-walk mean)."""
    if not runs:
        raise ValueError("need at least one run")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for run in runs:
        mean, std = run.skill_stats()
        (line,) = ax.plot(run.env_steps, mean, label=run.name)
        ax.fill_between(run.env_steps, mean - std, mean + std,
                        color=line.get_color(), alpha=0.25, linewidth=0)
    for label, value in (references or {}).items():
        ax.axhline(value, linestyle="--", linewidth=1, color="gray")
        ax.annotate(label, (0.99, value), xycoords=("axes fraction", "data"),
                    ha="right", va="bottom", fontsize=8, color="gray")
    ax.set_xlabel("environment steps")
    ax.set_ylabel("effective number of skills")
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return Path(out)


def plot_accuracy_per_step(run: RunSeries, out: Path,
                           reference: float | None = None) -> Path:
    """Discriminator accuracy at each episode step, latest evaluation."""
    mean, std = run.accuracy_stats()
    t = np.arange(1, run.horizon + 1)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    (line,) = ax.plot(t, mean, marker=".", label=run.name)
    ax.fill_between(t, mean - std, mean + std, color=line.get_color(),
                    alpha=0.25, linewidth=0)
    if reference is not None:
        ax.axhline(reference, linestyle="--", linewidth=1, color="gray",
                   label="max achievable")
    ax.set_xlabel("episode step t")
    ax.set_ylabel("discriminator accuracy")
    ax.set_xticks(t[1::2] if run.horizon > 20 else t)
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return Path(out)


def plot_rewards(run_dirs: list[Path], out: Path, sigma: float = 5.0) -> Path:
    """Mean intrinsic reward per update, Gaussian-smoothed (sigma in logged
    update units), one line per run directory."""
    if not run_dirs:
        raise ValueError("need at least one run directory")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for d in run_dirs:
        name, series = load_reward_series(d)
        n = min(len(s) for s in series)
        if n == 0:
            raise ValueError(f"{d}: rewards.csv holds no updates")
        mean = np.stack([s[:n] for s in series]).mean(axis=0)
        ax.plot(np.arange(1, n + 1), gaussian_smooth(mean, sigma), label=name)
    ax.set_xlabel("update")
    ax.set_ylabel(f"mean intrinsic reward (smoothed, sigma={sigma:g})")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return Path(out)


def skill_occupancy(seed_dir: Path) -> tuple[np.ndarray, np.ndarray, tuple | None]:
    """(walls [y,x], per-cell skill counts [y,x], start) for one seed."""
    walls, start = load_walls(seed_dir)
    finals = load_final_skills(seed_dir)
    counts = np.zeros_like(walls, dtype=int)
    for x, y in finals:
        counts[y, x] += 1
    if (counts[walls] != 0).any():
        raise ValueError(f"{seed_dir}: final states recorded inside walls")
    return walls, counts, start


def plot_skill_map(run_dir: Path, out: Path) -> Path:
    """Final-state scatter over the grid for the first seed of a run: wall
    cells dark, occupied cells colored by how many skills end there."""
    seed_dir = seed_dirs(Path(run_dir))[0]
    walls, counts, start = skill_occupancy(seed_dir)
    h, w = walls.shape

    img = np.full((h, w), np.nan)
    img[counts > 0] = counts[counts > 0]
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    ax.imshow(walls, origin="lower", cmap="gray_r", alpha=0.8, vmin=0, vmax=1.4)
    im = ax.imshow(img, origin="lower", cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.8, label="skills ending in cell")
    if start is not None:
        ax.plot(start[0], start[1], marker="*", color="red", markersize=12)
    occupied = int((counts > 0).sum())
    ax.set_title(f"{Path(run_dir).name}: {occupied} occupied final states")
    ax.set_xticks(range(w))
    ax.set_yticks(range(h))
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return Path(out)
