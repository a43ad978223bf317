"""Hermite polynomials and normalized harmonic-oscillator eigenfunctions.

Everything here works in dimensionless oscillator units (hbar = m = omega = 1),
so the scaled transverse coordinate coincides with the physical one.  Unit
conversions for a concrete cavity live in :mod:`cavitybell.cavity`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Orders above this are only trusted if the scaled recurrence stays finite.
STABLE_ORDER_BOUND = 64


@dataclass(frozen=True)
class Grid1D:
    """Uniform zero-centered grid, FFT convention (left edge in, right edge out).

    ``points[i] = -half_extent + i * spacing`` with ``spacing = 2*half_extent/count``,
    so x = 0 sits exactly on a node and spectral derivatives are periodic-exact
    for fields that decay below roundoff at the edges.
    """

    half_extent: float
    count: int

    def __post_init__(self):
        if not (self.half_extent > 0):
            raise ValueError("half_extent must be positive")
        if self.count <= 0 or self.count % 2 != 0:
            raise ValueError("count must be a positive even integer")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.count

    @cached_property
    def points(self) -> np.ndarray:
        return np.arange(self.count) * self.spacing - self.half_extent

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.count, d=self.spacing)


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n(x) via the three-term recurrence.

    H_0 = 1, H_1 = 2x, H_{n+1} = 2x H_n - 2n H_{n-1}.  Accepts scalars or
    arrays; no overflow protection (use :func:`hg_mode` for large n).
    """
    if n < 0:
        raise ValueError("mode index n must be nonnegative")
    scalar = np.isscalar(x)
    xa = np.asarray(x, dtype=float)
    h_prev = np.ones_like(xa)
    if n == 0:
        return float(h_prev) if scalar else h_prev
    h = 2.0 * xa
    for k in range(1, n):
        h_prev, h = h, 2.0 * xa * h - 2.0 * k * h_prev
    return float(h) if scalar else h


def hg_basis(nmax: int, x) -> np.ndarray:
    """All oscillator eigenfunctions psi_0..psi_nmax at the given points.

    Returns an array of shape ``(len(x), nmax + 1)``; column n holds
    psi_n(x) = pi^(-1/4) (2^n n!)^(-1/2) H_n(x) exp(-x^2/2).

    The Gaussian is folded into the recurrence (psi_{n+1} =
    sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}) so no factorials or
    bare Hermite values are ever formed; this stays finite far beyond the
    orders where 2^n n! overflows.
    """
    if nmax < 0:
        raise ValueError("mode index n must be nonnegative")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((xa.size, nmax + 1))
    out[:, 0] = np.pi ** -0.25 * np.exp(-0.5 * xa * xa)
    if nmax >= 1:
        out[:, 1] = np.sqrt(2.0) * xa * out[:, 0]
    for n in range(1, nmax):
        out[:, n + 1] = (
            np.sqrt(2.0 / (n + 1)) * xa * out[:, n]
            - np.sqrt(n / (n + 1)) * out[:, n - 1]
        )
    return out


def hg_mode(n: int, x):
    """Normalized oscillator eigenfunction psi_n(x)."""
    scalar = np.isscalar(x)
    col = hg_basis(n, x)[:, n]
    if n > STABLE_ORDER_BOUND and not np.all(np.isfinite(col)):
        raise FloatingPointError(f"psi_{n} evaluation produced non-finite values")
    return float(col[0]) if scalar else col


def eval_basis(nmax: int, grid: Grid1D) -> np.ndarray:
    """Basis matrix on a grid: column j holds psi_j at every grid point."""
    return hg_basis(nmax, grid.points)
