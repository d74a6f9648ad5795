"""Command-line entry point.

Subcommands:
  run              train from a config file plus flag overrides
  preset NAME      train a named preset (one per headline curve / ablation row)
  eval             evaluate a saved checkpoint
  baseline-random  mean effective skills of a uniform-random agent
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, metrics
from .grids import ascii_art, build_env

# CLI flag -> config key (flags use dashes, a couple of short forms)
_FLAG_KEYS = {
    "env": "env", "reward": "reward", "beta": "beta", "weight-fn": "weight_fn",
    "ascending": "ascending", "dropout": "dropout", "disc": "disc",
    "mask-dont-cares": "mask_dont_cares", "obs-mode": "obs_mode",
    "policy": "policy", "n-latents": "n_latents", "horizon": "horizon",
    "batch-size": "batch_size", "buffer": "buffer_capacity",
    "lr-policy": "lr_policy", "lr-disc": "lr_disc", "gamma": "gamma",
    "epsilon": "epsilon", "target-interval": "target_interval",
    "steps": "total_steps", "eval-every": "eval_every",
    "seed": "seed", "seeds": "seeds",
}


def _add_override_flags(p: argparse.ArgumentParser) -> None:
    for flag in _FLAG_KEYS:
        p.add_argument(f"--{flag}", default=None, metavar="V")


def _collect_overrides(args: argparse.Namespace) -> dict[str, str]:
    out = {}
    for flag, key in _FLAG_KEYS.items():
        v = getattr(args, flag.replace("-", "_"))
        if v is not None:
            out[key] = v
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="gridskills",
                                     description="Skill discovery on tabular grid worlds")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="train from a config file")
    p_run.add_argument("--config", default=None, help="flat key=value config file")
    p_run.add_argument("--out", default="runs/run", help="output run directory")
    p_run.add_argument("--resume", action="store_true", help="continue from checkpoints in --out")
    _add_override_flags(p_run)

    p_pre = sub.add_parser("preset", help="train a named preset")
    p_pre.add_argument("name", choices=sorted(harness.PRESETS))
    p_pre.add_argument("--out", default=None, help="output run directory (default runs/<name>)")
    p_pre.add_argument("--resume", action="store_true")
    _add_override_flags(p_pre)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--rollouts", type=int, default=1)

    p_base = sub.add_parser("baseline-random", help="random-walk skill count")
    p_base.add_argument("--env", default="rooms")
    p_base.add_argument("--n-latents", type=int, default=100)
    p_base.add_argument("--episodes", type=int, default=100)
    p_base.add_argument("--horizon", type=int, default=40)
    p_base.add_argument("--seed", type=int, default=0)
    p_base.add_argument("--show-walls", action="store_true")

    args = parser.parse_args(argv)

    if args.cmd == "run":
        cfg = harness.load_config(args.config, _collect_overrides(args))
        out = harness.run_experiment(cfg, args.out, resume=args.resume)
        print(f"run directory: {out}")
        return 0

    if args.cmd == "preset":
        cfg = harness.preset(args.name, _collect_overrides(args))
        out = Path(args.out) if args.out else Path("runs") / args.name
        harness.run_experiment(cfg, out, resume=args.resume)
        print(f"run directory: {out}")
        return 0

    if args.cmd == "eval":
        st = harness.load_checkpoint(args.checkpoint)
        cfg = st.cfg
        if cfg.policy == "random":
            finals = metrics.random_walk_final_states(st.env, cfg.n_latents, st.rngs["eval"])
            n_eff = int(len(np.unique(finals)))
        else:
            n_eff = metrics.effective_skills(st.env, st.policy, cfg.n_latents)
        acc = metrics.disc_accuracy_per_step(st.env, st.policy, st.disc_model,
                                             cfg.disc_mode, st.code, cfg.n_latents,
                                             rollouts=args.rollouts)
        print(f"env={cfg.env} reward={cfg.reward} seed={st.seed} env_steps={st.env_steps}")
        print(f"n_effective={n_eff}")
        print(f"accuracy_t1={acc[0]:.4f} accuracy_tT={acc[-1]:.4f} accuracy_mean={acc.mean():.4f}")
        print(metrics.csv_header(cfg.horizon))
        print(metrics.csv_row(metrics.EvalRecord(st.env_steps, st.seed, n_eff, 0.0, acc)))
        return 0

    if args.cmd == "baseline-random":
        env = build_env(args.env, horizon=args.horizon)
        if args.show_walls:
            print(ascii_art(env))
        rng = np.random.default_rng(args.seed)
        mean = metrics.random_walk_baseline(env, args.n_latents, args.episodes, rng)
        print(f"random-walk effective skills on {env.name}: {mean:.2f} "
              f"(n_latents={args.n_latents}, episodes={args.episodes})")
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
