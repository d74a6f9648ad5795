"""Deterministic 10x10 grid worlds (four rooms, empty, u-maze) and their
one-hot observation encodings.

Cells are indexed (x, y) with x growing rightward and y growing upward,
linearized row-major as ``y * width + x``. Episodes never terminate early;
the horizon is the only stopping rule.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class Action(IntEnum):
    STAY = 0
    LEFT = 1
    RIGHT = 2
    UP = 3
    DOWN = 4


N_ACTIONS = 5

# (dx, dy) per action, y grows upward
_DELTAS = ((0, 0), (-1, 0), (1, 0), (0, 1), (0, -1))

ENV_NAMES = ("rooms", "empty", "umaze")

_ALIASES = {
    "rooms": "rooms",
    "four_rooms": "rooms",
    "fourrooms": "rooms",
    "empty": "empty",
    "umaze": "umaze",
    "u_maze": "umaze",
}


@dataclass(frozen=True)
class GridEnv:
    """Immutable grid MDP. All derived tables are built once at construction.

    ``free_states`` lists non-wall cell indices in ascending order;
    ``state_index`` maps a cell to its position in that list (-1 for walls);
    ``next_state`` maps (free-state index, action) to the next free-state index.
    """

    name: str
    width: int
    height: int
    walls: np.ndarray       # bool, shape (width*height,)
    start: int              # cell index, must be free
    horizon: int
    free_states: np.ndarray  # int32, ascending cell indices
    state_index: np.ndarray  # int32, cell -> free index or -1
    next_state: np.ndarray   # int32, shape (n_free, 5)

    @property
    def n_free(self) -> int:
        return len(self.free_states)

    @property
    def start_index(self) -> int:
        return int(self.state_index[self.start])

    def cell_xy(self, cell: int) -> tuple[int, int]:
        return cell % self.width, cell // self.width

    def xy_cell(self, x: int, y: int) -> int:
        return y * self.width + x


def _make_env(name: str, width: int, height: int, walls: np.ndarray,
              start_xy: tuple[int, int], horizon: int = 40) -> GridEnv:
    walls = np.asarray(walls, dtype=bool).reshape(width * height)
    start = start_xy[1] * width + start_xy[0]
    if walls[start]:
        raise ValueError(f"start cell {start_xy} is a wall")
    free_states = np.flatnonzero(~walls).astype(np.int32)
    state_index = np.full(width * height, -1, dtype=np.int32)
    state_index[free_states] = np.arange(len(free_states), dtype=np.int32)

    n_free = len(free_states)
    next_state = np.empty((n_free, N_ACTIONS), dtype=np.int32)
    for fi, cell in enumerate(free_states):
        x, y = cell % width, cell // width
        for a, (dx, dy) in enumerate(_DELTAS):
            nx, ny = x + dx, y + dy
            if 0 <= nx < width and 0 <= ny < height and not walls[ny * width + nx]:
                next_state[fi, a] = state_index[ny * width + nx]
            else:
                next_state[fi, a] = fi  # blocked moves stay in place

    env = GridEnv(name=name, width=width, height=height, walls=walls,
                  start=start, horizon=horizon, free_states=free_states,
                  state_index=state_index, next_state=next_state)
    _check_reachability(env)
    return env


def _check_reachability(env: GridEnv) -> None:
    """Every free state must be reachable from start within the horizon (BFS)."""
    dist = np.full(env.n_free, -1, dtype=np.int64)
    q = deque([env.start_index])
    dist[env.start_index] = 0
    while q:
        fi = q.popleft()
        for a in range(1, N_ACTIONS):  # Stay never discovers new cells
            nfi = env.next_state[fi, a]
            if dist[nfi] < 0:
                dist[nfi] = dist[fi] + 1
                q.append(nfi)
    if (dist < 0).any():
        raise ValueError(f"{env.name}: {np.sum(dist < 0)} free states unreachable from start")
    if dist.max() > env.horizon:
        raise ValueError(f"{env.name}: farthest free state needs {dist.max()} steps "
                         f"> horizon {env.horizon}")


def _rooms_walls() -> np.ndarray:
    # Full inner walls at x=5 and y=5, one doorway per wall arm at the arm midpoint.
    walls = np.zeros((10, 10), dtype=bool)  # [y, x]
    walls[:, 5] = True
    walls[5, :] = True
    for x, y in ((5, 2), (5, 7), (2, 5), (7, 5)):
        walls[y, x] = False
    return walls.reshape(-1)


def _umaze_walls() -> np.ndarray:
    # 3-wide U: left column, bottom strip, right column are free.
    walls = np.ones((10, 10), dtype=bool)
    walls[:, 0:3] = False          # left column, all y
    walls[0:3, 3:10] = False       # bottom strip
    walls[3:10, 7:10] = False      # right column
    return walls.reshape(-1)


def build_env(name: str, horizon: int = 40) -> GridEnv:
    """Construct one of the three benchmark environments by name."""
    key = _ALIASES.get(name.lower().strip())
    if key is None:
        raise ValueError(f"unknown environment {name!r}; expected one of {ENV_NAMES}")
    if key == "rooms":
        return _make_env("rooms", 10, 10, _rooms_walls(), (1, 1), horizon)
    if key == "empty":
        return _make_env("empty", 10, 10, np.zeros(100, dtype=bool), (5, 5), horizon)
    return _make_env("umaze", 10, 10, _umaze_walls(), (1, 1), horizon)


def step(env: GridEnv, s: int, a: int) -> int:
    """Next cell after taking action ``a`` in cell ``s``; blocked moves return ``s``."""
    fi = env.state_index[s]
    if fi < 0:
        raise ValueError(f"cell {s} is not a free state")
    return int(env.free_states[env.next_state[fi, int(a)]])


def encode_disc_obs(env: GridEnv, s: int) -> np.ndarray:
    """One-hot over free states (discriminator input)."""
    obs = np.zeros(env.n_free)
    obs[disc_obs_index(env, s)] = 1.0
    return obs


def disc_obs_index(env: GridEnv, s: int) -> int:
    fi = env.state_index[s]
    if fi < 0:
        raise ValueError(f"cell {s} is not a free state")
    return int(fi)


def rl_obs_dim(env: GridEnv, n_latents: int, mode: str) -> int:
    if mode == "concat":
        return env.n_free + n_latents
    if mode == "outer":
        return env.n_free * n_latents
    raise ValueError(f"unknown observation mode {mode!r}")


def encode_rl_obs(env: GridEnv, s: int, z: int, n_latents: int, mode: str = "outer") -> np.ndarray:
    """Policy input: location one-hot combined with the latent one-hot.

    ``concat`` appends the latent one-hot after the location one-hot;
    ``outer`` is a single one-hot over (location, latent) pairs.
    """
    if not 0 <= z < n_latents:
        raise ValueError(f"latent {z} out of range [0, {n_latents})")
    fi = disc_obs_index(env, s)
    if mode == "concat":
        obs = np.zeros(env.n_free + n_latents)
        obs[fi] = 1.0
        obs[env.n_free + z] = 1.0
        return obs
    if mode == "outer":
        obs = np.zeros(env.n_free * n_latents)
        obs[fi * n_latents + z] = 1.0
        return obs
    raise ValueError(f"unknown observation mode {mode!r}")


def outer_obs_index(env: GridEnv, fi: int, z: int, n_latents: int) -> int:
    """Hot position of the outer-mode one-hot, from a free-state index."""
    return fi * n_latents + z


def ascii_art(env: GridEnv) -> str:
    """Wall mask as ASCII art: '#' wall, '.' free, 'S' start. Top row is y=height-1."""
    rows = []
    for y in range(env.height - 1, -1, -1):
        row = []
        for x in range(env.width):
            cell = y * env.width + x
            if env.walls[cell]:
                row.append("#")
            elif cell == env.start:
                row.append("S")
            else:
                row.append(".")
        rows.append("".join(row))
    return "\n".join(rows)
