#!/usr/bin/env python3
"""Run the full experiment pipeline into one results directory.

Produces chsh.json, the four rotating-frame CSVs, the split-step round-trip
report, the sampling convergence study, and the collapse ensemble, all with
fixed seeds so a rerun reproduces the same bytes.
"""

import argparse
import sys

from cavitybell.cli import main as cavitybell_main

STAGES = ("chsh", "frames", "evolve", "sample", "collapse")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="output directory root")
    parser.add_argument("--config", default=None, help="shared config file")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    for stage in STAGES:
        argv = [stage, "--out", f"{args.out}/{stage}"]
        if args.config:
            argv += ["--config", args.config]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        print(f"== {stage}")
        code = cavitybell_main(argv)
        if code != 0:
            print(f"stage {stage} failed with exit code {code}", file=sys.stderr)
            return code
    print(f"pipeline complete under {args.out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
