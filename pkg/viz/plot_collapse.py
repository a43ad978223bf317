#!/usr/bin/env python3
"""Plot parity-feedback trajectories colored by their terminal branch.

Reads trajectory CSVs (`step,parity_x,parity_y,fidelity_01,fidelity_10`)
written by `cavitybell collapse` and draws parity_x against step for every
run; trajectories ending at even x-parity and odd x-parity form the two
terminal clusters at +1 and -1.

    python plot_collapse.py run_*.csv --out collapse.png
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HEADER = "step,parity_x,parity_y,fidelity_01,fidelity_10"


def read_trajectory(path):
    try:
        lines = open(path, encoding="utf-8").read().strip().splitlines()
    except OSError as exc:
        raise SystemExit(f"cannot read trajectory {path}: {exc}")
    if not lines or lines[0].strip() != HEADER:
        raise SystemExit(f"{path}: expected header '{HEADER}' on row 1")
    steps, parity = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise SystemExit(f"{path}: malformed row {lineno} (need 5 columns)")
        try:
            steps.append(int(parts[0]))
            parity.append(float(parts[1]))
        except ValueError:
            raise SystemExit(f"{path}: malformed row {lineno} (non-numeric field)")
    if not steps:
        raise SystemExit(f"{path}: trajectory has no rows")
    return np.array(steps), np.array(parity)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("trajectories", nargs="+", help="trajectory CSV paths")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    fig, ax = plt.subplots(figsize=(7, 4.5), constrained_layout=True)
    counts = {"+1": 0, "-1": 0}
    for path in args.trajectories:
        steps, parity = read_trajectory(path)
        up = parity[-1] >= 0
        counts["+1" if up else "-1"] += 1
        ax.plot(steps, parity, color="tab:blue" if up else "tab:red",
                alpha=0.25, linewidth=1.0)
    ax.axhline(1.0, color="k", linewidth=0.6, linestyle=":")
    ax.axhline(-1.0, color="k", linewidth=0.6, linestyle=":")
    ax.set_xlabel("feedback step")
    ax.set_ylabel("x-axis parity")
    ax.set_ylim(-1.05, 1.05)
    ax.set_title(
        f"parity feedback: {counts['+1']} runs to +1, {counts['-1']} runs to -1"
    )
    fig.savefig(args.out, dpi=130)
    print(f"wrote {args.out} ({len(args.trajectories)} trajectories)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
