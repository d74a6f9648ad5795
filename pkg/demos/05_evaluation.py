"""Evaluation metrics on a hand-built policy: effective skills, per-step
discriminator accuracy, and the random-walk reference line.

Run: python demos/05_evaluation.py
"""

import numpy as np

from gridskills import build_env, effective_skills, random_walk_baseline
from gridskills.agent import make_policy
from gridskills.metrics import disc_accuracy_per_step, final_states
from gridskills.nn import LinearModel

env = build_env("empty")
rng = np.random.default_rng(0)
n_z = 100

# An untrained policy: most skills collapse onto a handful of final states.
policy = make_policy(env, n_z, rng)
print(f"untrained policy, effective skills: {effective_skills(env, policy, n_z)} / {env.n_free}")

# The random-walk reference (the dashed line in learning-curve figures).
baseline = random_walk_baseline(env, n_z, episodes=300, rng=rng)
print(f"random-walk reference on empty: {baseline:.1f}")

# A zero discriminator is exactly at chance at every step: it predicts skill 0
# everywhere, and exactly one latent is skill 0.
disc = LinearModel(np.zeros((n_z, env.n_free)), np.zeros(n_z))
acc = disc_accuracy_per_step(env, policy, disc, "ova", None, n_z)
print(f"zero discriminator accuracy: min {acc.min():.3f}, max {acc.max():.3f} "
      f"(chance = {1 / n_z})")

# Final-state map of the untrained policy: which cells are occupied.
finals = final_states(env, policy, n_z)
occupied = np.zeros(env.n_free, dtype=int)
np.add.at(occupied, finals, 1)
grid = occupied.reshape(10, 10)
print("\nskills ending in each cell (rows top to bottom are y=9..0):")
for y in range(9, -1, -1):
    print("  " + " ".join(f"{grid[y, x]:>2d}" if grid[y, x] else " ." for x in range(10)))
