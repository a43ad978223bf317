"""Truncated mode-space states and operators for the two-axis envelope.

A state is a coefficient matrix c[nx][ny] over products of transverse
eigenmodes; operators act on one axis at a time.  This representation is
exact up to truncation and serves as the analytic reference for every
expectation value the grid representation estimates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)
TSIRELSON = 2.0 * SQRT2

# Bloch vectors are ordered (x, y, z) throughout.
_AXIS_NAMES = ("x", "y", "z")


@dataclass
class ModeState2D:
    """Complex coefficients of the envelope over mode products, c[nx][ny]."""

    nmax: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        n = self.nmax + 1
        if self.coeffs.shape != (n, n):
            raise ValueError(f"coeffs must have shape {(n, n)}, got {self.coeffs.shape}")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("coefficients must be finite")

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> "ModeState2D":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero state")
        return ModeState2D(self.nmax, self.coeffs / n)

    def padded(self, nmax: int) -> "ModeState2D":
        """Embed into a larger truncation, zero-filling the new modes."""
        if nmax < self.nmax:
            raise ValueError("target nmax smaller than current truncation")
        c = np.zeros((nmax + 1, nmax + 1), dtype=complex)
        c[: self.nmax + 1, : self.nmax + 1] = self.coeffs
        return ModeState2D(nmax, c)


@dataclass
class OperatorMatrix:
    """Dense matrix of a one-axis operator in the truncated mode basis."""

    nmax: int
    entries: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        n = self.nmax + 1
        if self.entries.shape != (n, n):
            raise ValueError(f"entries must have shape {(n, n)}")


def _mat(op) -> np.ndarray:
    return op.entries if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)


def ladder(nmax: int):
    """Lowering and raising operators: a[n-1, n] = sqrt(n), adag = a^H."""
    if nmax < 1:
        raise ValueError("nmax must be >= 1 to represent ladder action")
    n = nmax + 1
    a = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        a[k - 1, k] = math.sqrt(k)
    return (
        OperatorMatrix(nmax, a, "a"),
        OperatorMatrix(nmax, a.conj().T, "adag"),
    )


def identity_op(nmax: int) -> OperatorMatrix:
    return OperatorMatrix(nmax, np.eye(nmax + 1, dtype=complex), "identity")


def number_op(nmax: int) -> OperatorMatrix:
    a, adag = ladder(nmax)
    return OperatorMatrix(nmax, adag.entries @ a.entries, "N")


def parity_op(nmax: int) -> OperatorMatrix:
    """Diagonal (-1)^n: +1 on even modes, -1 on odd modes."""
    diag = np.array([(-1.0) ** n for n in range(nmax + 1)], dtype=complex)
    return OperatorMatrix(nmax, np.diag(diag), "parity")


def commutator_defect(nmax: int) -> np.ndarray:
    """[a, adag] - I.  Exactly zero except the corner entry -(nmax + 1)."""
    a, adag = ladder(nmax)
    am, adm = a.entries, adag.entries
    return am @ adm - adm @ am - np.eye(nmax + 1, dtype=complex)


def spin_ops(nmax: int):
    """Qubit-component operators on the lowest two modes.

    Sz = 2 adag a - 1 and Sx = adag (1 - adag a) + a reduce to the usual
    spin matrices on the {0, 1} block; Sy = i (adag (1 - adag a) - a)
    completes the triple.  Note the closure carries the opposite
    orientation, Si Sj = delta_ij - i eps_ijk Sk, which is what the Sy
    combination above generates; it is a valid spin representation and
    every Bell quantity below is orientation-independent.
    """
    a, adag = ladder(nmax)
    am, adm = a.entries, adag.entries
    eye = np.eye(nmax + 1, dtype=complex)
    raise_block = adm @ (eye - adm @ am)
    sx = OperatorMatrix(nmax, raise_block + am, "Sx")
    sy = OperatorMatrix(nmax, 1j * (raise_block - am), "Sy")
    sz = OperatorMatrix(nmax, 2.0 * adm @ am - eye, "Sz")
    return sx, sy, sz


def bloch_operator(theta: float, phi: float, nmax: int) -> OperatorMatrix:
    """cos(theta) Sz + sin(theta) (cos(phi) Sx + sin(phi) Sy)."""
    sx, sy, sz = spin_ops(nmax)
    m = (
        math.cos(theta) * sz.entries
        + math.sin(theta) * (math.cos(phi) * sx.entries + math.sin(phi) * sy.entries)
    )
    return OperatorMatrix(nmax, m, "custom")


def beamsplitter_matrix() -> np.ndarray:
    """50-50 splitter acting on single-excitation amplitudes."""
    return np.array([[1.0, 1j], [1j, 1.0]], dtype=complex) / SQRT2


def beamsplitter_state(nmax: int) -> ModeState2D:
    """Single excitation through the splitter: c[0][1] = 1/sqrt2, c[1][0] = i/sqrt2.

    Component 0 of the amplitude vector maps to c[0][1] (excitation on the
    y axis), component 1 to c[1][0].
    """
    if nmax < 1:
        raise ValueError("nmax must be >= 1")
    amp = beamsplitter_matrix() @ np.array([1.0, 0.0], dtype=complex)
    c = np.zeros((nmax + 1, nmax + 1), dtype=complex)
    c[0, 1] = amp[0]
    c[1, 0] = amp[1]
    return ModeState2D(nmax, c)


def expect(state: ModeState2D, op_x, op_y) -> complex:
    """<Psi| op_x (x) op_y |Psi> for one-axis operators on each factor."""
    mx, my = _mat(op_x), _mat(op_y)
    n = state.nmax + 1
    if mx.shape != (n, n) or my.shape != (n, n):
        raise ValueError("operator shape does not match state truncation")
    return complex(np.vdot(state.coeffs, mx @ state.coeffs @ my.T))


def axis_reduced_expectation(state: ModeState2D, op, axis: str) -> complex:
    """Expectation of a one-axis operator, identity on the other axis."""
    m = _mat(op)
    n = state.nmax + 1
    if m.shape != (n, n):
        raise ValueError("operator shape does not match state truncation")
    if axis == "x":
        return complex(np.vdot(state.coeffs, m @ state.coeffs))
    if axis == "y":
        return complex(np.vdot(state.coeffs, state.coeffs @ m.T))
    raise ValueError("axis must be 'x' or 'y'")


@dataclass(frozen=True)
class ChshSettings:
    """Four qubit observables, two per cavity axis, as (theta, phi) pairs."""

    axis_x_a: tuple
    axis_x_b: tuple
    axis_y_a: tuple
    axis_y_b: tuple

    def __post_init__(self):
        for pair in self.as_tuple():
            theta, phi = pair
            if not (math.isfinite(theta) and math.isfinite(phi)):
                raise ValueError("angles must be finite")
            op = bloch_operator(theta, phi, 1).entries
            if np.abs(op @ op - np.eye(2)).max() > 1e-12:
                raise ValueError("observable does not square to identity on the qubit block")

    def as_tuple(self):
        return (self.axis_x_a, self.axis_x_b, self.axis_y_a, self.axis_y_b)

    def operators(self, nmax: int):
        return tuple(bloch_operator(t, p, nmax) for (t, p) in self.as_tuple())


def _vector_to_angles(v) -> tuple:
    vx, vy, vz = v
    theta = math.acos(min(1.0, max(-1.0, float(vz))))
    phi = math.atan2(float(vy), float(vx)) if abs(vx) + abs(vy) > 1e-15 else 0.0
    return (theta, phi)


def settings_from_vectors(ax_a, ax_b, ay_a, ay_b) -> ChshSettings:
    """Build settings from four unit Bloch vectors in (x, y, z) component order."""
    return ChshSettings(
        _vector_to_angles(ax_a),
        _vector_to_angles(ax_b),
        _vector_to_angles(ay_a),
        _vector_to_angles(ay_b),
    )


def paper_settings() -> ChshSettings:
    """The published quadruple: Sz/Sx analyzers, Sx-based pair on the y axis."""
    inv = 1.0 / SQRT2
    return settings_from_vectors(
        (0.0, 0.0, 1.0),        # Sz
        (1.0, 0.0, 0.0),        # Sx
        (-inv, 0.0, -inv),      # -(Sz + Sx)/sqrt2
        (-inv, 0.0, inv),       # (Sz - Sx)/sqrt2
    )


def optimal_settings() -> ChshSettings:
    """Quadruple attaining the two-qubit maximum on the i-phased splitter state."""
    inv = 1.0 / SQRT2
    return settings_from_vectors(
        (0.0, 0.0, 1.0),        # Sz
        (1.0, 0.0, 0.0),        # Sx
        (0.0, -inv, -inv),      # -(Sz + Sy)/sqrt2
        (0.0, inv, -inv),       # (Sy - Sz)/sqrt2
    )


def chsh_value(state: ModeState2D, settings: ChshSettings) -> float:
    """<Aa Ba> + <Aa Bb> + <Ab Ba> - <Ab Bb> for the given settings."""
    aa, ab, ba, bb = settings.operators(state.nmax)
    return float(
        expect(state, aa, ba).real
        + expect(state, aa, bb).real
        + expect(state, ab, ba).real
        - expect(state, ab, bb).real
    )


def correlation_matrix(state: ModeState2D) -> np.ndarray:
    """3x3 matrix T[i][j] = Re <S_i (x) S_j>, i, j over (x, y, z)."""
    sx, sy, sz = spin_ops(state.nmax)
    ops = (sx, sy, sz)
    t = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            t[i, j] = expect(state, ops[i], ops[j]).real
    return t


def chsh_optimize(state: ModeState2D):
    """Settings maximizing the CHSH combination, and the maximum itself.

    The maximum over qubit observables equals 2 sqrt(t1^2 + t2^2) with
    t1 >= t2 the two largest singular values of the correlation matrix;
    the maximizing Bloch vectors come from the corresponding singular
    vectors.  The returned value is cross-checked against a direct
    evaluation of the recovered settings.
    """
    t = correlation_matrix(state)
    u, s, vh = np.linalg.svd(t)
    if s[0] < 1e-12:
        zero = (0.0, 0.0)
        return ChshSettings(zero, zero, zero, zero), 0.0
    value = 2.0 * math.sqrt(s[0] ** 2 + s[1] ** 2)
    split = math.atan2(s[1], s[0])
    b_a = math.cos(split) * vh[0] + math.sin(split) * vh[1]
    b_b = math.cos(split) * vh[0] - math.sin(split) * vh[1]
    settings = settings_from_vectors(u[:, 0], u[:, 1], b_a, b_b)
    direct = chsh_value(state, settings)
    if abs(direct - value) > 1e-9 * max(1.0, value):
        raise RuntimeError(
            f"optimizer cross-check failed: direct {direct!r} vs formula {value!r}"
        )
    return settings, value


def state_to_json(state: ModeState2D) -> str:
    """Serialize as nmax plus row-major (re, im) pairs."""
    pairs = [[z.real, z.imag] for z in state.coeffs.ravel()]
    return json.dumps({"nmax": state.nmax, "coeffs": pairs})


def state_from_json(text: str) -> ModeState2D:
    doc = json.loads(text)
    nmax = int(doc["nmax"])
    n = nmax + 1
    flat = np.array([complex(re, im) for re, im in doc["coeffs"]])
    if flat.size != n * n:
        raise ValueError("coefficient count does not match nmax")
    return ModeState2D(nmax, flat.reshape(n, n))
