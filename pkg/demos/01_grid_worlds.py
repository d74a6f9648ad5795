"""Tour of the three grid worlds: wall layouts, free-state counts, dynamics.

Run: python demos/01_grid_worlds.py
"""

import numpy as np

from gridskills import Action, build_env, step
from gridskills.grids import ascii_art

for name in ("rooms", "empty", "umaze"):
    env = build_env(name)
    print(f"=== {name}: {env.n_free} free states, start {env.cell_xy(env.start)}, "
          f"horizon {env.horizon}")
    print(ascii_art(env))
    print()

# Deterministic dynamics: blocked moves (and Stay) return the same cell.
env = build_env("rooms")
s = env.start
print("walking from start:", env.cell_xy(s))
for a in (Action.RIGHT, Action.RIGHT, Action.UP, Action.LEFT, Action.STAY):
    s = step(env, s, a)
    print(f"  {a.name:>5} -> {env.cell_xy(s)}")

# A uniform random walker needs many steps to leave the first room.
rng = np.random.default_rng(0)
s = env.start
visited_rooms = set()
for t in range(200):
    s = step(env, s, int(rng.integers(5)))
    x, y = env.cell_xy(s)
    visited_rooms.add((x > 5, y > 5))
print(f"\nrooms visited by a 200-step random walk: {len(visited_rooms)} of 4")
