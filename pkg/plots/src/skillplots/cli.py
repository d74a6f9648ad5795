"""Figure generation from recorded run directories.

Usage:
  plots RUN_DIR [RUN_DIR ...] --fig {curves,accuracy,rewards,map} --out FILE
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import plot_accuracy_per_step, plot_learning_curves, plot_rewards, plot_skill_map
from .io import load_run_series


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plots",
                                     description="Render figures from run directories")
    parser.add_argument("run_dirs", nargs="+", metavar="RUN_DIR")
    parser.add_argument("--fig", required=True,
                        choices=("curves", "accuracy", "rewards", "map"))
    parser.add_argument("--out", required=True, help="output image file")
    parser.add_argument("--reference", action="append", default=[], metavar="LABEL=VALUE",
                        help="dashed reference line (curves/accuracy); repeatable")
    parser.add_argument("--sigma", type=float, default=5.0,
                        help="Gaussian smoothing width for --fig rewards")
    args = parser.parse_args(argv)

    refs = {}
    for item in args.reference:
        label, _, value = item.partition("=")
        try:
            refs[label] = float(value)
        except ValueError:
            parser.error(f"--reference expects LABEL=VALUE, got {item!r}")

    dirs = [Path(d) for d in args.run_dirs]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    if args.fig == "curves":
        plot_learning_curves([load_run_series(d) for d in dirs], out, refs)
    elif args.fig == "accuracy":
        ref = next(iter(refs.values()), None)
        plot_accuracy_per_step(load_run_series(dirs[0]), out, ref)
    elif args.fig == "rewards":
        plot_rewards(dirs, out, sigma=args.sigma)
    else:
        plot_skill_map(dirs[0], out)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
