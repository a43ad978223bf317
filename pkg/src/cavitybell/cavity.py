"""Cavity parameter mapping and time evolution of the envelope equation.

A planar resonator whose thickness decreases parabolically away from the
center, L(x) = L0 - b x^2, confines the slowly varying envelope like a 2D
harmonic oscillator: i dpsi/dt = -(1/2) laplacian psi + (1/2)(x^2 + y^2) psi
in oscillator units.  This module derives the effective-oscillator
quantities from the physical cavity, checks the validity assumptions, and
integrates the dimensionless equation either by exact mode phases or by
Strang-split spectral steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import hbar as HBAR

from .field import FieldGrid
from .fock import ModeState2D
from .modes import Grid1D

SVEA_RATIO_LIMIT = 0.2
PARABOLIC_LIMIT = 0.1
DEFAULT_DT = 2.0 * math.pi / 2000.0


class CavityValidityError(ValueError):
    """A derived cavity violates one of the envelope-equation assumptions."""


class IntegratorError(RuntimeError):
    """Split-step evolution lost unitarity beyond tolerance."""


class NoNodalLineError(RuntimeError):
    """A frame has no resolvable nodal line of Re psi."""


@dataclass(frozen=True)
class CavityParams:
    """Physical cavity description plus derived effective-oscillator scales."""

    l0: float               # center thickness, m
    b: float                # curvature of L(x) = l0 - b x^2, 1/m
    n_long: int             # longitudinal mode index
    c: float                # wave speed, m/s
    omega0: float           # carrier frequency N pi c / l0, rad/s
    omega_tilde: float      # transverse oscillation frequency c sqrt(2 b / l0), rad/s
    m_eff: float            # hbar omega0 / c^2, kg
    gamma_eff: float        # 2 hbar omega0 b / l0, kg/s^2
    osc_length: float       # sqrt(hbar / (m_eff omega_tilde)), m

    @property
    def frequency_ratio(self) -> float:
        return self.omega_tilde / self.omega0


def derive_params(l0: float, b: float, n_long: int, c: float = SPEED_OF_LIGHT) -> CavityParams:
    """Fill the derived fields and enforce the slow-envelope validity ratio."""
    if l0 <= 0 or b <= 0 or n_long <= 0 or c <= 0:
        raise ValueError("all cavity inputs must be positive")
    omega0 = n_long * math.pi * c / l0
    omega_tilde = c * math.sqrt(2.0 * b / l0)
    ratio = omega_tilde / omega0
    if ratio >= SVEA_RATIO_LIMIT:
        raise CavityValidityError(
            f"omega_tilde/omega0 = {ratio:.4g} violates the slow-envelope "
            f"requirement omega_tilde/omega0 < {SVEA_RATIO_LIMIT}"
        )
    m_eff = HBAR * omega0 / c ** 2
    gamma_eff = 2.0 * HBAR * omega0 * b / l0
    osc_length = math.sqrt(HBAR / (m_eff * omega_tilde))
    return CavityParams(
        l0=l0, b=b, n_long=n_long, c=c,
        omega0=omega0, omega_tilde=omega_tilde,
        m_eff=m_eff, gamma_eff=gamma_eff, osc_length=osc_length,
    )


@dataclass(frozen=True)
class SveaReport:
    """Validity flags for a cavity on a given numerical aperture."""

    frequency_ratio: float
    svea_ok: bool
    max_parabolic_term: float
    parabolic_ok: bool


def svea_check(params: CavityParams, grid: Grid1D) -> SveaReport:
    """Report-only check of the two approximations over the grid aperture.

    The grid is in oscillator lengths; the aperture edge in meters is
    half_extent * osc_length, and the local-planarity measure is
    max(2 b x^2 / l0) there.
    """
    ratio = params.frequency_ratio
    edge = grid.half_extent * params.osc_length
    max_parab = 2.0 * params.b * edge ** 2 / params.l0
    return SveaReport(
        frequency_ratio=ratio,
        svea_ok=ratio < SVEA_RATIO_LIMIT,
        max_parabolic_term=max_parab,
        parabolic_ok=max_parab < PARABOLIC_LIMIT,
    )


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float = DEFAULT_DT
    steps: int = 2000
    scheme: str = "split_step"

    def __post_init__(self):
        if self.dt <= 0 or self.steps <= 0:
            raise ValueError("dt and steps must be positive")
        if self.scheme not in ("mode_exact", "split_step"):
            raise ValueError("scheme must be 'mode_exact' or 'split_step'")


def evolve_modes(state: ModeState2D, t: float) -> ModeState2D:
    """Exact evolution: c[nx][ny] picks up exp(-i (nx + ny + 1) t)."""
    n = np.arange(state.nmax + 1)
    phase = np.exp(-1j * (n[:, None] + n[None, :] + 1) * t)
    return ModeState2D(state.nmax, state.coeffs * phase)


def _split_factors(grid: Grid1D, dt: float):
    x = grid.points
    xs, ys = np.meshgrid(x, x, indexing="ij")
    half_potential = np.exp(-0.25j * dt * (xs ** 2 + ys ** 2))
    k = grid.wavenumbers
    kx, ky = np.meshgrid(k, k, indexing="ij")
    kinetic = np.exp(-0.5j * dt * (kx ** 2 + ky ** 2))
    return half_potential, kinetic


def evolve_splitstep(fieldgrid: FieldGrid, config: PropagatorConfig) -> FieldGrid:
    """Strang splitting: half potential phase, spectral kinetic phase, half potential."""
    if config.dt > 0.1:
        raise ValueError(f"dt = {config.dt:.4g} exceeds the stability guard 0.1")
    half_potential, kinetic = _split_factors(fieldgrid.grid, config.dt)
    with np.errstate(over="ignore"):
        norm_in = fieldgrid.norm()
    if not math.isfinite(norm_in):
        raise IntegratorError("input field norm is not finite")
    v = fieldgrid.values
    for _ in range(config.steps):
        v = half_potential * v
        v = np.fft.ifft2(kinetic * np.fft.fft2(v))
        v = half_potential * v
    if not np.all(np.isfinite(v)):
        raise IntegratorError("split-step evolution produced non-finite values")
    out = FieldGrid(fieldgrid.grid, v)
    drift = abs(out.norm() - norm_in)
    if not math.isfinite(drift) or drift > 1e-6 * max(norm_in, 1.0):
        raise IntegratorError(f"norm drifted by {drift:.3e} over {config.steps} steps")
    return out


def splitstep_trajectory(fieldgrid: FieldGrid, config: PropagatorConfig, record_every: int):
    """Evolve while recording every ``record_every`` steps (frame 0 included)."""
    frames = [fieldgrid]
    times = [0.0]
    current = fieldgrid
    done = 0
    step_cfg = PropagatorConfig(dt=config.dt, steps=record_every, scheme=config.scheme)
    while done + record_every <= config.steps:
        current = evolve_splitstep(current, step_cfg)
        done += record_every
        frames.append(current)
        times.append(done * config.dt)
    return frames, np.array(times)


def _scan_crossings(window: np.ndarray, coords: np.ndarray, amp: float):
    """Subpixel zeros of each row of ``window`` along ``coords``.

    Returns (row_index, zero_coordinate) arrays covering exact on-node
    zeros and sign changes between neighbors.
    """
    dx = coords[1] - coords[0]
    on_node = window == 0.0
    rows_a, cols_a = np.nonzero(on_node)
    zeros_a = coords[cols_a]
    v0 = window[:, :-1]
    v1 = window[:, 1:]
    change = (v0 * v1 < 0.0) & (np.maximum(np.abs(v0), np.abs(v1)) > 1e-6 * amp)
    rows_b, cols_b = np.nonzero(change)
    zeros_b = coords[cols_b] - v0[rows_b, cols_b] * dx / (v1[rows_b, cols_b] - v0[rows_b, cols_b])
    return np.concatenate([rows_a, rows_b]), np.concatenate([zeros_a, zeros_b])


def nodal_angle(fieldgrid: FieldGrid, search_radius: float = 3.0) -> float:
    """Orientation of the nodal line of Re psi through the origin, in [0, pi).

    Zero crossings of Re psi are located to subpixel accuracy along both
    grid directions inside the search radius; the line direction is the
    principal axis of the crossing-point cloud.
    """
    re = fieldgrid.values.real
    amp = float(np.abs(re).max())
    if amp == 0.0:
        raise NoNodalLineError("frame is identically zero")
    pts = fieldgrid.grid.points
    idx = np.where(np.abs(pts) <= search_radius)[0]
    window = re[np.ix_(idx, idx)]
    coords = pts[idx]
    rows_y, zeros_y = _scan_crossings(window, coords, amp)       # vary y at fixed x
    rows_x, zeros_x = _scan_crossings(window.T, coords, amp)     # vary x at fixed y
    xs = np.concatenate([coords[rows_y], zeros_x])
    ys = np.concatenate([zeros_y, coords[rows_x]])
    if xs.size < 8:
        raise NoNodalLineError(
            f"only {xs.size} zero crossings found inside radius {search_radius}"
        )
    cloud = np.column_stack([xs, ys])
    moments = cloud.T @ cloud
    _, vecs = np.linalg.eigh(moments)
    direction = vecs[:, -1]
    return float(np.arctan2(direction[1], direction[0]) % np.pi)


def measure_rotation_rate(frames, times):
    """Angular rate of the nodal line: unwrap per-frame angles, fit a line.

    Returns (rate, rms_residual).  Angles are defined modulo pi, so
    successive frames must advance by less than pi/2 for the unwrap to be
    unambiguous.
    """
    if len(frames) < 4:
        raise ValueError("need at least 4 frames to fit a rotation rate")
    if len(frames) != len(times):
        raise ValueError("frames and times must have equal length")
    angles = [nodal_angle(f) for f in frames]
    unwrapped = [angles[0]]
    for a in angles[1:]:
        delta = (a - unwrapped[-1]) % math.pi
        if delta > math.pi / 2:
            delta -= math.pi
        unwrapped.append(unwrapped[-1] + delta)
    t = np.asarray(times, dtype=float)
    design = np.vstack([t, np.ones_like(t)]).T
    coeffs, *_ = np.linalg.lstsq(design, np.array(unwrapped), rcond=None)
    residuals = np.array(unwrapped) - design @ coeffs
    return float(coeffs[0]), float(np.sqrt(np.mean(residuals ** 2)))
