"""Readers for the run-directory files written by the training harness.

Consumed formats (the contract with the trainer):
  metrics.csv       env_steps,seed,n_effective,mean_reward,acc_t1,...,acc_tT
  rewards.csv       update,env_steps,mean_reward (one row per update)
  final_skills.csv  skill,final_state_x,final_state_y (one row per latent)
  env.txt           ASCII wall mask: '#' wall, '.' free, 'S' start, top row first
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class SeedFrame:
    """One seed's metrics.csv, keyed by env_steps."""

    seed: int
    env_steps: np.ndarray     # (n_evals,)
    n_effective: np.ndarray   # (n_evals,)
    mean_reward: np.ndarray   # (n_evals,)
    accuracy: np.ndarray      # (n_evals, T)


@dataclass
class RunSeries:
    """All seeds of one experiment directory; seeds share the eval grid."""

    name: str
    frames: list[SeedFrame]

    @property
    def env_steps(self) -> np.ndarray:
        return self.frames[0].env_steps

    @property
    def horizon(self) -> int:
        return self.frames[0].accuracy.shape[1]

    def skill_stats(self) -> tuple[np.ndarray, np.ndarray]:
        """(mean, std) of n_effective across seeds at each eval point."""
        stacked = np.stack([f.n_effective for f in self.frames])
        return stacked.mean(axis=0), stacked.std(axis=0)

    def accuracy_stats(self) -> tuple[np.ndarray, np.ndarray]:
        """(mean, std) across seeds of the final eval's accuracy-per-step row."""
        stacked = np.stack([f.accuracy[-1] for f in self.frames])
        return stacked.mean(axis=0), stacked.std(axis=0)


def seed_dirs(run_dir: Path) -> list[Path]:
    run_dir = Path(run_dir)
    if (run_dir / "metrics.csv").exists():
        return [run_dir]
    dirs = sorted(run_dir.glob("seed_*"), key=lambda p: int(p.name.split("_")[1]))
    if not dirs:
        raise FileNotFoundError(f"no metrics.csv or seed_* directories under {run_dir}")
    return dirs


def load_seed_frame(seed_dir: Path) -> SeedFrame:
    path = Path(seed_dir) / "metrics.csv"
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [row for row in reader if row]
    if header[:4] != ["env_steps", "seed", "n_effective", "mean_reward"]:
        raise ValueError(f"{path}: unexpected metrics schema {header[:4]}")
    t_cols = [c for c in header if c.startswith("acc_t")]
    if not rows:
        raise ValueError(f"{path}: no evaluation rows")
    data = np.array([[float(v) for v in row] for row in rows])
    return SeedFrame(
        seed=int(data[0, 1]),
        env_steps=data[:, 0].astype(np.int64),
        n_effective=data[:, 2].astype(np.int64),
        mean_reward=data[:, 3],
        accuracy=data[:, 4:4 + len(t_cols)],
    )


def load_run_series(run_dir: Path, name: str | None = None) -> RunSeries:
    run_dir = Path(run_dir)
    frames = [load_seed_frame(d) for d in seed_dirs(run_dir)]
    grid = frames[0].env_steps
    for f in frames[1:]:
        if not np.array_equal(f.env_steps, grid):
            raise ValueError(f"{run_dir}: seed {f.seed} is on a different eval grid "
                             f"(missing or extra rows)")
    return RunSeries(name=name or run_dir.name, frames=frames)


def load_reward_series(run_dir: Path) -> tuple[str, list[np.ndarray]]:
    """Per-seed mean-reward-per-update series for one experiment directory."""
    series = []
    for d in seed_dirs(run_dir):
        with open(d / "rewards.csv", newline="") as f:
            reader = csv.reader(f)
            next(reader)
            series.append(np.array([float(row[2]) for row in reader if row]))
    return Path(run_dir).name, series


def load_walls(seed_dir: Path) -> tuple[np.ndarray, tuple[int, int] | None]:
    """Wall mask [y, x] (y=0 at the bottom) and the start cell, from env.txt."""
    lines = (Path(seed_dir) / "env.txt").read_text().strip().splitlines()
    height = len(lines)
    width = len(lines[0])
    walls = np.zeros((height, width), dtype=bool)
    start = None
    for row, line in enumerate(lines):           # first line is the top row
        y = height - 1 - row
        for x, ch in enumerate(line):
            if ch == "#":
                walls[y, x] = True
            elif ch == "S":
                start = (x, y)
    return walls, start


def load_final_skills(seed_dir: Path) -> np.ndarray:
    """(n_latents, 2) array of final (x, y) per skill."""
    with open(Path(seed_dir) / "final_skills.csv", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != ["skill", "final_state_x", "final_state_y"]:
            raise ValueError(f"unexpected final_skills schema {header}")
        return np.array([[int(r[1]), int(r[2])] for r in reader if r])
