#!/usr/bin/env python3
"""Render Re(psi) heatmap panels from field-frame CSV files.

Input frames follow the `x,y,re,im` contract (row-major, header line).
Panels share one symmetric diverging color scale so nodal lines sit exactly
on the neutral color.

    python plot_frames.py frame_0.csv frame_1.csv frame_2.csv frame_3.csv --out frames.png
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

DEFAULT_LABELS = ("phase 0", "phase pi/4", "phase 3pi/4", "phase 5pi/4")


def read_frame(path):
    """Parse one frame CSV into (x, y, re) with re indexed [ix, iy]."""
    try:
        lines = open(path, encoding="utf-8").read().strip().splitlines()
    except OSError as exc:
        raise SystemExit(f"cannot read frame file {path}: {exc}")
    if not lines or lines[0].strip() != "x,y,re,im":
        raise SystemExit(f"{path}: expected header x,y,re,im on row 1")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 4:
            raise SystemExit(f"{path}: malformed row {lineno} (need 4 columns)")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise SystemExit(f"{path}: malformed row {lineno} (non-numeric field)")
    data = np.array(rows)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if xs.size * ys.size != data.shape[0]:
        raise SystemExit(f"{path}: rows do not form a full rectangular grid")
    re = data[:, 2].reshape(xs.size, ys.size)
    return xs, ys, re


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("frames", nargs="+", help="frame CSV paths in panel order")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--labels", default=None, help="comma-separated panel titles")
    args = parser.parse_args(argv)

    parsed = [read_frame(path) for path in args.frames]
    if args.labels:
        labels = [s.strip() for s in args.labels.split(",")]
    elif len(parsed) == 4:
        labels = list(DEFAULT_LABELS)
    else:
        labels = [f"frame {i}" for i in range(len(parsed))]

    vmax = max(np.abs(re).max() for _, _, re in parsed)
    ncols = 2 if len(parsed) > 1 else 1
    nrows = (len(parsed) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.5 * ncols, 4 * nrows),
                             squeeze=False, constrained_layout=True)
    for ax in axes.ravel():
        ax.set_axis_off()
    for k, (xs, ys, re) in enumerate(parsed):
        ax = axes[k // ncols][k % ncols]
        ax.set_axis_on()
        image = ax.imshow(
            re.T, origin="lower", cmap="RdBu_r", vmin=-vmax, vmax=vmax,
            extent=(xs[0], xs[-1], ys[0], ys[-1]),
        )
        ax.set_title(labels[k] if k < len(labels) else f"frame {k}")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    fig.colorbar(image, ax=axes.ravel().tolist(), label="Re psi", shrink=0.85)
    fig.savefig(args.out, dpi=130)
    print(f"wrote {args.out} ({len(parsed)} panels)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
