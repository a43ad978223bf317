"""Grid representation of the envelope psi(x, y).

Synthesis from mode coefficients, projection back, spectral differential
operators, and plane-integral expectation values.  Index convention:
``values[i, j] = psi(x_i, y_j)``, axis 0 is x, axis 1 is y.  Derivatives
are spectral (FFT, multiply by (ik)^q, inverse FFT); the Gaussian decay at
the default half extent of 8 makes the periodic wraparound negligible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .fock import ModeState2D
from .modes import Grid1D, eval_basis

# Edge amplitude above which spectral operators are no longer trustworthy.
BOUNDARY_AMPLITUDE = 1e-8

SQRT2 = math.sqrt(2.0)


@dataclass
class FieldGrid:
    """Complex envelope samples on a shared square grid."""

    grid: Grid1D
    values: np.ndarray
    boundary_warning: bool = field(default=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        n = self.grid.count
        if self.values.shape != (n, n):
            raise ValueError(f"values must have shape {(n, n)}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.grid.spacing ** 2)


@dataclass(frozen=True)
class DiffOpSpec:
    """Polynomial differential operator: sum of c * x^p * d^q/dx^q terms.

    Each term is a (x_power, d_order, coefficient) triple.  Within a term
    the derivative acts first, then the coordinate powers multiply.
    """

    terms: tuple

    def __post_init__(self):
        if len(self.terms) == 0:
            raise ValueError("term list must be nonempty")
        for p, q, _ in self.terms:
            if p < 0 or q < 0:
                raise ValueError("powers must be nonnegative")
            if q > 3:
                raise ValueError("derivative order above 3 is not supported")

    def scaled(self, factor: complex) -> "DiffOpSpec":
        return DiffOpSpec(tuple((p, q, factor * c) for p, q, c in self.terms))


def identity_spec() -> DiffOpSpec:
    return DiffOpSpec(((0, 0, 1.0),))


def number_spec() -> DiffOpSpec:
    """(x^2 - d^2 - 1)/2, the occupation number of one axis."""
    return DiffOpSpec(((2, 0, 0.5), (0, 2, -0.5), (0, 0, -0.5)))


def sz_spec() -> DiffOpSpec:
    """x^2 - d^2 - 2 = 2 N - 1."""
    return DiffOpSpec(((2, 0, 1.0), (0, 2, -1.0), (0, 0, -2.0)))


def sx_spec() -> DiffOpSpec:
    """(7x - x^3 + (x^2 - 1) d + x d^2 - d^3) / (2 sqrt2)."""
    c = 1.0 / (2.0 * SQRT2)
    return DiffOpSpec(
        ((1, 0, 7 * c), (3, 0, -c), (2, 1, c), (0, 1, -c), (1, 2, c), (0, 3, -c))
    )


def sy_spec() -> DiffOpSpec:
    """i (3x - x^3 + (x^2 - 5) d + x d^2 - d^3) / (2 sqrt2)."""
    c = 1j / (2.0 * SQRT2)
    return DiffOpSpec(
        ((1, 0, 3 * c), (3, 0, -c), (2, 1, c), (0, 1, -5 * c), (1, 2, c), (0, 3, -c))
    )


def hamiltonian_spec() -> DiffOpSpec:
    """(x^2 - d^2)/2, the one-axis oscillator energy."""
    return DiffOpSpec(((2, 0, 0.5), (0, 2, -0.5)))


def bloch_spec(theta: float, phi: float) -> DiffOpSpec:
    """Differential form of cos(theta) Sz + sin(theta)(cos(phi) Sx + sin(phi) Sy)."""
    terms = []
    terms += sz_spec().scaled(math.cos(theta)).terms
    terms += sx_spec().scaled(math.sin(theta) * math.cos(phi)).terms
    terms += sy_spec().scaled(math.sin(theta) * math.sin(phi)).terms
    return DiffOpSpec(tuple(terms))


def synthesize(state: ModeState2D, grid: Grid1D) -> FieldGrid:
    """psi(x_i, y_j) = sum over modes of c[nx][ny] psi_nx(x_i) psi_ny(y_j)."""
    if grid.count < 4 * (state.nmax + 1):
        raise ValueError(
            f"grid count {grid.count} cannot resolve modes up to {state.nmax}"
        )
    basis = eval_basis(state.nmax, grid)
    values = basis @ state.coeffs @ basis.T
    return FieldGrid(grid, values)


def project(fieldgrid: FieldGrid, nmax: int) -> ModeState2D:
    """Mode coefficients of a grid field by trapezoid double integrals.

    Returns the raw (not renormalized) coefficients; for a unit-norm field
    the truncation loss is 1 minus the squared norm of the result.
    """
    basis = eval_basis(nmax, fieldgrid.grid)
    coeffs = basis.T @ fieldgrid.values @ basis * fieldgrid.grid.spacing ** 2
    return ModeState2D(nmax, coeffs)


def _edge_amplitude(values: np.ndarray) -> float:
    return float(
        max(
            np.abs(values[0, :]).max(),
            np.abs(values[-1, :]).max(),
            np.abs(values[:, 0]).max(),
            np.abs(values[:, -1]).max(),
        )
    )


def apply_diff_op(fieldgrid: FieldGrid, spec: DiffOpSpec, axis: str) -> FieldGrid:
    """Apply a one-axis polynomial differential operator along x or y."""
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    ax = 0 if axis == "x" else 1
    grid = fieldgrid.grid
    x = grid.points
    k = grid.wavenumbers
    kshape = [1, 1]
    kshape[ax] = grid.count
    out = np.zeros_like(fieldgrid.values)
    for p, q, c in spec.terms:
        term = fieldgrid.values
        if q:
            spec_hat = np.fft.fft(term, axis=ax) * (1j * k.reshape(kshape)) ** q
            term = np.fft.ifft(spec_hat, axis=ax)
        if p:
            term = term * x.reshape(kshape) ** p
        out = out + c * term
    flagged = fieldgrid.boundary_warning or _edge_amplitude(fieldgrid.values) > BOUNDARY_AMPLITUDE
    return FieldGrid(grid, out, boundary_warning=flagged)


def inner(f: FieldGrid, g: FieldGrid) -> complex:
    """Sesquilinear trapezoid inner product <f, g>."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return complex(np.vdot(f.values, g.values) * f.grid.spacing ** 2)


def normalize(fieldgrid: FieldGrid) -> FieldGrid:
    n = fieldgrid.norm()
    if n == 0.0:
        raise ValueError("cannot normalize a zero field")
    return replace(fieldgrid, values=fieldgrid.values / n)


def expect_grid(fieldgrid: FieldGrid, spec_x: DiffOpSpec, spec_y: DiffOpSpec) -> complex:
    """Plane integral of psi* (O_x O_y psi) by trapezoid quadrature."""
    if fieldgrid.boundary_warning or _edge_amplitude(fieldgrid.values) > BOUNDARY_AMPLITUDE:
        warnings.warn(
            "field amplitude at the domain edge exceeds the spectral-accuracy bound",
            RuntimeWarning,
            stacklevel=2,
        )
    applied = apply_diff_op(fieldgrid, spec_y, "y")
    applied = apply_diff_op(applied, spec_x, "x")
    return complex(np.vdot(fieldgrid.values, applied.values) * fieldgrid.grid.spacing ** 2)


def bilinear(fieldgrid: FieldGrid, xq, yq) -> np.ndarray:
    """Bilinear interpolation of the field at query points (vectorized).

    Points must lie inside [points[0], points[-1]] on both axes.
    """
    grid = fieldgrid.grid
    x0 = grid.points[0]
    dx = grid.spacing
    n = grid.count
    xq = np.asarray(xq, dtype=float)
    yq = np.asarray(yq, dtype=float)
    top = grid.points[-1]
    if np.any(xq < x0) or np.any(xq > top) or np.any(yq < x0) or np.any(yq > top):
        raise ValueError("query point outside the grid domain")
    fx = np.clip((xq - x0) / dx, 0.0, n - 1 - 1e-12)
    fy = np.clip((yq - x0) / dx, 0.0, n - 1 - 1e-12)
    ix = fx.astype(int)
    iy = fy.astype(int)
    tx = fx - ix
    ty = fy - iy
    v = fieldgrid.values
    return (
        v[ix, iy] * (1 - tx) * (1 - ty)
        + v[ix + 1, iy] * tx * (1 - ty)
        + v[ix, iy + 1] * (1 - tx) * ty
        + v[ix + 1, iy + 1] * tx * ty
    )


def rotate_resample(fieldgrid: FieldGrid, angle: float) -> FieldGrid:
    """Field evaluated at coordinates rotated by ``angle`` (bilinear resample).

    rotate_resample(f, a)(x, y) = f(R_{-a} (x, y)); points that rotate out
    of the domain are filled with zero, which is exact for decayed fields.
    """
    grid = fieldgrid.grid
    xs, ys = np.meshgrid(grid.points, grid.points, indexing="ij")
    ca, sa = math.cos(angle), math.sin(angle)
    xr = ca * xs + sa * ys
    yr = -sa * xs + ca * ys
    top = grid.points[-1]
    inside = (xr >= grid.points[0]) & (xr <= top) & (yr >= grid.points[0]) & (yr <= top)
    out = np.zeros_like(fieldgrid.values)
    out[inside] = bilinear(fieldgrid, xr[inside], yr[inside])
    return FieldGrid(grid, out)


def frame_to_csv(fieldgrid: FieldGrid) -> str:
    """Row-major CSV with header x,y,re,im at 17 significant digits."""
    lines = ["x,y,re,im"]
    pts = fieldgrid.grid.points
    v = fieldgrid.values
    for i in range(fieldgrid.grid.count):
        for j in range(fieldgrid.grid.count):
            lines.append(
                f"{pts[i]:.17g},{pts[j]:.17g},{v[i, j].real:.17g},{v[i, j].imag:.17g}"
            )
    return "\n".join(lines) + "\n"


def frame_from_csv(text: str) -> FieldGrid:
    """Parse a frame written by :func:`frame_to_csv`."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0].strip() != "x,y,re,im":
        raise ValueError("frame CSV must start with header x,y,re,im")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 4:
            raise ValueError(f"malformed frame CSV at line {lineno}")
        try:
            rows.append(tuple(float(p) for p in parts))
        except ValueError as exc:
            raise ValueError(f"malformed frame CSV at line {lineno}") from exc
    xs = sorted({r[0] for r in rows})
    count = len(xs)
    if count * count != len(rows):
        raise ValueError("frame CSV is not a full rectangular grid")
    spacing = xs[1] - xs[0]
    grid = Grid1D(half_extent=-xs[0], count=count)
    if abs(grid.spacing - spacing) > 1e-9 * spacing:
        raise ValueError("frame CSV grid is not uniform in the expected convention")
    index = {x: i for i, x in enumerate(xs)}
    values = np.zeros((count, count), dtype=complex)
    for x, y, re, im in rows:
        values[index[x], index[y]] = re + 1j * im
    return FieldGrid(grid, values)
