"""Short end-to-end training runs: APART vs DIAYN on the empty grid.

A quarter-million steps is far from convergence but already separates the
methods. Expect a couple of minutes of runtime.

Run: python demos/04_train_small.py [steps]
"""

import sys
from pathlib import Path

from gridskills import load_config, run_experiment

steps = sys.argv[1] if len(sys.argv) > 1 else "250000"
out_root = Path("runs/demo_small")

for reward in ("apart", "diayn"):
    cfg = load_config(overrides={
        "env": "empty", "reward": reward, "total_steps": steps,
        "eval_every": "50000", "seed": "0",
    })
    out = run_experiment(cfg, out_root / reward)
    rows = (out / "seed_0" / "metrics.csv").read_text().splitlines()
    print(f"\n{reward} on empty ({steps} steps):")
    print(f"  {'env_steps':>10} {'skills':>7} {'mean_reward':>12}")
    for row in rows[1:]:
        cols = row.split(",")
        print(f"  {cols[0]:>10} {cols[2]:>7} {float(cols[3]):>12.4f}")

print(f"\nrun directories under {out_root}/ hold metrics.csv, rewards.csv, "
      "final_skills.csv, env.txt and a resumable checkpoint.")
