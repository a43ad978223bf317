"""Discrete-site field measurement, state reconstruction, and parity feedback.

Quadrature detectors at scattered sites read the complex envelope with
additive Gaussian noise.  A least-squares fit of mode coefficients to the
readings replaces plane-integral quadrature (scattered sites have no good
quadrature weights; the fit is well-posed and its conditioning is
observable).  The same detectors, driven with positive feedback on the
parity they read, collapse the superposition onto a definite-parity
product state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import qmc

from . import fock
from .field import FieldGrid, bilinear, project
from .fock import ChshSettings, ModeState2D
from .modes import hg_basis

CONDITION_LIMIT = 1e8

LAYOUTS = ("uniform_grid", "random_uniform", "halton")


class IllPosedPlanError(ValueError):
    """The sampling plan's design matrix is numerically rank deficient."""


@dataclass(frozen=True)
class SamplePlan:
    """Detector sites in oscillator lengths plus the seed that generated them."""

    sites: tuple          # ((x, y), ...) pairs
    layout: str
    seed: int

    @property
    def count(self) -> int:
        return len(self.sites)

    def site_array(self) -> np.ndarray:
        return np.array(self.sites, dtype=float)


def default_extent(nmax: int) -> float:
    """Sites out to one oscillator length past the classical turning point."""
    return math.sqrt(2.0 * nmax + 1.0) + 1.0


def make_plan(layout: str, count: int, seed: int, extent: float) -> SamplePlan:
    """Generate detector sites in [-extent, extent]^2.

    uniform_grid requires a square count; random_uniform and halton draw
    from streams derived from the seed, so plans are reproducible.
    """
    if layout not in LAYOUTS:
        raise ValueError(f"layout must be one of {LAYOUTS}")
    if count <= 0:
        raise ValueError("count must be positive")
    if extent <= 0:
        raise ValueError("extent must be positive")
    if layout == "uniform_grid":
        side = math.isqrt(count)
        if side * side != count:
            raise ValueError("uniform_grid layout needs a square site count")
        axis = np.linspace(-extent, extent, side)
        sites = [(float(x), float(y)) for x in axis for y in axis]
    elif layout == "random_uniform":
        rng = np.random.default_rng([seed, 1])
        pts = rng.uniform(-extent, extent, size=(count, 2))
        sites = [tuple(map(float, p)) for p in pts]
    else:
        engine = qmc.Halton(d=2, scramble=True, seed=np.random.default_rng([seed, 1]))
        pts = (engine.random(count) * 2.0 - 1.0) * extent
        sites = [tuple(map(float, p)) for p in pts]
    return SamplePlan(sites=tuple(sites), layout=layout, seed=seed)


@dataclass(frozen=True)
class AntennaReading:
    site: tuple
    value: complex
    noise_sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.value.real) and np.isfinite(self.value.imag)):
            raise ValueError("reading value must be finite")


def sample(fieldgrid: FieldGrid, plan: SamplePlan, noise_sigma: float = 0.0):
    """Read the field at the plan sites: bilinear interpolation plus noise.

    Noise is complex Gaussian (independent real and imaginary parts, each
    with std noise_sigma) from a stream seeded by plan.seed, so repeated
    calls with the same plan give identical readings.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    pts = plan.site_array()
    values = bilinear(fieldgrid, pts[:, 0], pts[:, 1])
    if noise_sigma > 0:
        rng = np.random.default_rng([plan.seed, 2])
        values = values + noise_sigma * (
            rng.standard_normal(plan.count) + 1j * rng.standard_normal(plan.count)
        )
    return [
        AntennaReading(site=plan.sites[i], value=complex(values[i]), noise_sigma=noise_sigma)
        for i in range(plan.count)
    ]


def design_matrix(sites: np.ndarray, nmax: int) -> np.ndarray:
    """Rows are psi_nx(x_i) psi_ny(y_i) over all (nx, ny), flattened row-major."""
    bx = hg_basis(nmax, sites[:, 0])
    by = hg_basis(nmax, sites[:, 1])
    return np.einsum("ip,iq->ipq", bx, by).reshape(len(sites), -1)


def _lstsq_coeffs(readings, nmax: int):
    if len(readings) < (nmax + 1) ** 2:
        raise ValueError(
            f"need at least {(nmax + 1) ** 2} readings to fit nmax = {nmax}"
        )
    sites = np.array([r.site for r in readings], dtype=float)
    values = np.array([r.value for r in readings], dtype=complex)
    design = design_matrix(sites, nmax)
    singulars = np.linalg.svd(design, compute_uv=False)
    cond = float("inf") if singulars[-1] == 0 else float(singulars[0] / singulars[-1])
    if cond > CONDITION_LIMIT:
        raise IllPosedPlanError(
            f"design matrix condition number {cond:.3g} exceeds {CONDITION_LIMIT:.0e} "
            f"for a plan with {len(readings)} sites"
        )
    coeffs, *_ = np.linalg.lstsq(design, values, rcond=None)
    return coeffs.reshape(nmax + 1, nmax + 1), cond


def reconstruct(readings, nmax: int):
    """Least-squares mode fit of the readings.

    Returns (normalized state, design-matrix condition number).
    """
    coeffs, cond = _lstsq_coeffs(readings, nmax)
    return ModeState2D(nmax, coeffs).normalized(), cond


def chsh_from_samples(readings, nmax: int, settings: ChshSettings) -> float:
    """Reconstruct, then evaluate the CHSH combination on the fitted state."""
    state, _ = reconstruct(readings, nmax)
    return fock.chsh_value(state, settings)


@dataclass(frozen=True)
class ConvergenceReport:
    m_values: tuple
    mean_abs_error: tuple
    std_abs_error: tuple          # None entries when trials < 2
    mean_condition: tuple
    slope: float
    oracle_value: float
    noise_sigma: float
    trials: int
    layout: str

    def as_dict(self) -> dict:
        return {
            "m_values": list(self.m_values),
            "mean_abs_error": list(self.mean_abs_error),
            "std_abs_error": list(self.std_abs_error),
            "mean_condition": list(self.mean_condition),
            "slope": self.slope,
            "oracle_value": self.oracle_value,
            "noise_sigma": self.noise_sigma,
            "trials": self.trials,
            "layout": self.layout,
        }


def _plugin_chsh(coeffs: np.ndarray, operators) -> float:
    """CHSH combination of the raw fitted coefficients (no renormalization).

    This is the sampled stand-in for the four plane integrals, so the fit
    is plugged in as-is; the physical field it approximates already has
    unit norm.
    """
    aa, ab, ba, bb = (op.entries for op in operators)

    def corr(mx, my):
        return float(np.vdot(coeffs, mx @ coeffs @ my.T).real)

    return corr(aa, ba) + corr(aa, bb) + corr(ab, ba) - corr(ab, bb)


def convergence_study(
    fieldgrid: FieldGrid,
    m_list,
    noise_sigma: float,
    trials: int,
    nmax: int = 3,
    seed: int = 7,
    layout: str = "halton",
    extent: float | None = None,
) -> ConvergenceReport:
    """Error of the sampled CHSH estimate versus the number of sites.

    For each M, ``trials`` independent plans are drawn, readings are fitted
    by least squares, and the four correlator integrals are evaluated from
    the fit at the settings that maximize the exact value.  The report
    carries the mean and std of |estimate - exact| per M plus a log-log
    slope over the M grid.
    """
    m_list = tuple(int(m) for m in m_list)
    if any(m2 <= m1 for m1, m2 in zip(m_list, m_list[1:])):
        raise ValueError("m_list must be strictly ascending")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if extent is None:
        extent = default_extent(nmax)
    truth = project(fieldgrid, nmax)
    settings, oracle = fock.chsh_optimize(truth.normalized())
    operators = settings.operators(nmax)

    means, stds, conds = [], [], []
    for m in m_list:
        errors = []
        trial_conds = []
        for t in range(trials):
            plan_seed = int(np.random.SeedSequence([seed, m, t]).generate_state(1)[0])
            plan = make_plan(layout, m, plan_seed, extent)
            readings = sample(fieldgrid, plan, noise_sigma)
            coeffs, cond = _lstsq_coeffs(readings, nmax)
            errors.append(abs(_plugin_chsh(coeffs, operators) - oracle))
            trial_conds.append(cond)
        means.append(float(np.mean(errors)))
        stds.append(float(np.std(errors, ddof=1)) if trials > 1 else None)
        conds.append(float(np.mean(trial_conds)))
    slope = float(np.polyfit(np.log(m_list), np.log(means), 1)[0]) if len(m_list) > 1 else float("nan")
    return ConvergenceReport(
        m_values=m_list,
        mean_abs_error=tuple(means),
        std_abs_error=tuple(stds),
        mean_condition=tuple(conds),
        slope=slope,
        oracle_value=oracle,
        noise_sigma=noise_sigma,
        trials=trials,
        layout=layout,
    )


@dataclass(frozen=True)
class CollapseConfig:
    gain: float = 0.1
    noise_sigma: float = 0.05
    threshold: float = 0.999
    max_steps: int = 500
    seed: int = 2026
    feedback_axis: str = "x"

    def __post_init__(self):
        if not (0 <= self.gain <= 0.2):
            raise ValueError("gain must be in [0, 0.2]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if not (0 < self.threshold < 1):
            raise ValueError("threshold must be in (0, 1)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.feedback_axis not in ("x", "y", "both"):
            raise ValueError("feedback_axis must be 'x', 'y' or 'both'")


@dataclass
class CollapseResult:
    trajectory: list      # rows (step, parity_x, parity_y, fidelity_01, fidelity_10)
    outcome: str          # zero_one | one_zero | none
    tie_break: bool       # sign(0) -> +1 was ever used


def _parity_pair(state: ModeState2D, parity):
    px = fock.axis_reduced_expectation(state, parity, "x").real
    py = fock.axis_reduced_expectation(state, parity, "y").real
    return px, py


def _apply_parity_gain(coeffs: np.ndarray, gain: float, sign: float, axis: str) -> np.ndarray:
    n = coeffs.shape[0]
    factor = np.exp(gain * sign * (-1.0) ** np.arange(n))
    if axis == "x":
        return coeffs * factor[:, None]
    return coeffs * factor[None, :]


def _collapse_run(state: ModeState2D, config: CollapseConfig, rng) -> CollapseResult:
    if abs(state.norm() - 1.0) > 1e-9:
        raise ValueError("initial state must be normalized")
    off_block = state.coeffs.copy()
    off_block[:2, :2] = 0.0
    if np.abs(off_block).max() > 1e-9:
        raise ValueError("initial state must be supported on modes 0 and 1 of each axis")
    parity = fock.parity_op(state.nmax)
    axes = ("x", "y") if config.feedback_axis == "both" else (config.feedback_axis,)
    coeffs = state.coeffs.copy()
    trajectory = []
    tie_break = False
    outcome = "none"
    for step in range(config.max_steps + 1):
        current = ModeState2D(state.nmax, coeffs)
        px, py = _parity_pair(current, parity)
        trajectory.append(
            (step, px, py, float(abs(coeffs[0, 1]) ** 2), float(abs(coeffs[1, 0]) ** 2))
        )
        if abs(px) >= config.threshold:
            outcome = "zero_one" if px > 0 else "one_zero"
            break
        if step == config.max_steps:
            break
        for axis in axes:
            measured = px if axis == "x" else py
            if config.noise_sigma > 0:
                measured = measured + rng.normal(0.0, config.noise_sigma)
            if measured == 0.0:
                tie_break = True
            sign = 1.0 if measured >= 0.0 else -1.0
            coeffs = _apply_parity_gain(coeffs, config.gain, sign, axis)
        coeffs = coeffs / np.linalg.norm(coeffs)
    return CollapseResult(trajectory=trajectory, outcome=outcome, tie_break=tie_break)


def collapse_run(state: ModeState2D, config: CollapseConfig) -> CollapseResult:
    """One feedback run: read parity with noise, amplify it, renormalize.

    Each iteration reads p = <parity on the feedback axis> + noise, applies
    the non-unitary gain exp(gain * sign(p) * parity) on that axis, and
    renormalizes (the stand-in for pumping energy back in).  Stops when
    |<parity_x>| reaches the threshold or after max_steps.  sign(0) is +1
    and is flagged via ``tie_break``.
    """
    return _collapse_run(state, config, np.random.default_rng(config.seed))


@dataclass(frozen=True)
class CollapseStats:
    fraction_zero_one: float
    fraction_one_zero: float
    fraction_none: float
    runs: int


def collapse_statistics(state: ModeState2D, config: CollapseConfig, runs: int):
    """Outcome fractions over seeded runs; per-run seeds derive from config.seed.

    Returns (stats, results) with results in run order.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    results = [
        _collapse_run(state, config, np.random.default_rng([config.seed, k]))
        for k in range(runs)
    ]
    counts = {"zero_one": 0, "one_zero": 0, "none": 0}
    for r in results:
        counts[r.outcome] += 1
    stats = CollapseStats(
        fraction_zero_one=counts["zero_one"] / runs,
        fraction_one_zero=counts["one_zero"] / runs,
        fraction_none=counts["none"] / runs,
        runs=runs,
    )
    return stats, results


def trajectory_to_csv(result: CollapseResult) -> str:
    lines = ["step,parity_x,parity_y,fidelity_01,fidelity_10"]
    for step, px, py, f01, f10 in result.trajectory:
        lines.append(f"{step},{px:.17g},{py:.17g},{f01:.17g},{f10:.17g}")
    return "\n".join(lines) + "\n"
