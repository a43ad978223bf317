#!/usr/bin/env python3
"""Plot the sampling convergence study: estimate error versus site count.

Reads the JSON report written by `cavitybell sample` and draws the mean
absolute CHSH-estimate error on log-log axes with the fitted power-law
slope annotated.

    python plot_convergence.py sample.json --out convergence.png
"""

import argparse
import json
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load_study(path):
    try:
        doc = json.load(open(path, encoding="utf-8"))
    except OSError as exc:
        raise SystemExit(f"cannot read report {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise SystemExit(f"{path}: not valid JSON ({exc})")
    study = doc.get("study", doc)
    for key in ("m_values", "mean_abs_error", "slope"):
        if key not in study:
            raise SystemExit(f"{path}: report is missing '{key}'")
    return study


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("report", help="sample.json path")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    study = load_study(args.report)
    m = np.array(study["m_values"], dtype=float)
    mean = np.array(study["mean_abs_error"], dtype=float)
    stds = study.get("std_abs_error")
    slope = float(study["slope"])

    fig, ax = plt.subplots(figsize=(6, 4.5), constrained_layout=True)
    if stds and all(s is not None for s in stds):
        trials = study.get("trials", 1)
        ax.errorbar(m, mean, yerr=np.array(stds) / np.sqrt(trials),
                    fmt="o-", capsize=3, label="mean |error|")
    else:
        ax.plot(m, mean, "o-", label="mean |error|")
    anchor = mean[0] * (m / m[0]) ** slope
    ax.plot(m, anchor, "k--", alpha=0.6, label=f"fit slope {slope:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("detector sites M")
    ax.set_ylabel("|CHSH estimate - exact|")
    noise = study.get("noise_sigma")
    title = "sampling convergence" + (f" (noise {noise})" if noise is not None else "")
    ax.set_title(title)
    ax.annotate(f"slope = {slope:.3f}", xy=(0.05, 0.08), xycoords="axes fraction")
    ax.legend()
    fig.savefig(args.out, dpi=130)
    print(f"wrote {args.out} (slope {slope:.4f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
