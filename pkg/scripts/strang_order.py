#!/usr/bin/env python3
"""Measure the split-step integrator order by halving the time step.

Evolves the entangled field over one trap period at a ladder of step counts
and prints the projected-coefficient error against the exact mode phases.
A second-order scheme shows a ratio of ~4 per halving.
"""

import argparse
import math

import numpy as np

from cavitybell import cavity, field, fock
from cavitybell.modes import Grid1D


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=128, help="grid points per axis")
    parser.add_argument("--ladder", type=int, default=5, help="number of halvings")
    args = parser.parse_args()

    grid = Grid1D(8.0, args.count)
    state = fock.beamsplitter_state(2)
    start = field.synthesize(state, grid)

    print(f"{'steps':>8} {'dt':>12} {'coeff error':>14} {'ratio':>8}")
    previous = None
    for k in range(args.ladder):
        steps = 500 * 2**k
        config = cavity.PropagatorConfig(dt=2 * math.pi / steps, steps=steps)
        projected = field.project(cavity.evolve_splitstep(start, config), 2)
        error = float(np.abs(projected.coeffs - state.coeffs).max())
        ratio = f"{previous / error:8.3f}" if previous else "       -"
        print(f"{steps:>8} {config.dt:>12.3e} {error:>14.3e} {ratio}")
        previous = error
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
