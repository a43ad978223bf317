import math

import numpy as np
import pytest

from cavitybell import field, fock
from cavitybell.cavity import (
    DEFAULT_DT,
    CavityParams,
    CavityValidityError,
    IntegratorError,
    NoNodalLineError,
    PropagatorConfig,
    derive_params,
    evolve_modes,
    evolve_splitstep,
    measure_rotation_rate,
    nodal_angle,
    splitstep_trajectory,
    svea_check,
)
from cavitybell.field import FieldGrid, synthesize
from cavitybell.fock import ModeState2D, beamsplitter_state
from cavitybell.modes import Grid1D

MICRON = 1e-6
C_LIGHT = 299792458.0


def ground_state(nmax=1):
    c = np.zeros((nmax + 1, nmax + 1), dtype=complex)
    c[0, 0] = 1.0
    return ModeState2D(nmax, c)


class TestDeriveParams:
    def test_reference_cavity(self):
        # L0 = 2 um, b = 0.01 / um, single longitudinal mode
        params = derive_params(2 * MICRON, 0.01 / MICRON, 1, C_LIGHT)
        assert params.omega_tilde == pytest.approx(0.1 * C_LIGHT / MICRON, rel=1e-12)
        assert params.frequency_ratio == pytest.approx(0.2 / math.pi, rel=1e-12)
        assert params.frequency_ratio == pytest.approx(0.0637, abs=5e-4)
        assert params.omega0 == pytest.approx(math.pi * C_LIGHT / (2 * MICRON), rel=1e-12)
        # oscillator length carries no hbar: c / sqrt(omega0 omega_tilde)
        assert params.osc_length == pytest.approx(
            C_LIGHT / math.sqrt(params.omega0 * params.omega_tilde), rel=1e-12
        )

    def test_flat_cavity_limit(self):
        ref = derive_params(2 * MICRON, 1e-4 / MICRON, 1)
        tiny = derive_params(2 * MICRON, 1e-8 / MICRON, 1)
        assert tiny.omega_tilde == pytest.approx(ref.omega_tilde / 100, rel=1e-12)

    def test_longitudinal_index_scaling(self):
        one = derive_params(2 * MICRON, 0.01 / MICRON, 1)
        two = derive_params(2 * MICRON, 0.01 / MICRON, 2)
        assert two.omega0 == pytest.approx(2 * one.omega0, rel=1e-12)
        assert two.omega_tilde == pytest.approx(one.omega_tilde, rel=1e-12)

    def test_validity_ratio_failure_names_inequality(self):
        with pytest.raises(CavityValidityError, match="omega_tilde/omega0"):
            derive_params(2 * MICRON, 0.222 / MICRON, 1)

    def test_positive_inputs_required(self):
        with pytest.raises(ValueError):
            derive_params(-1.0, 1.0, 1)


class TestSveaCheck:
    def test_reference_cavity_fails_local_planarity_at_wide_aperture(self, grid256):
        # The frequency ratio passes easily, but at +-8 oscillator lengths
        # the parabolic term 2 b x^2 / L0 evaluates far above the 0.1 bound.
        params = derive_params(2 * MICRON, 0.01 / MICRON, 1, C_LIGHT)
        report = svea_check(params, grid256)
        edge = 8.0 * params.osc_length
        expected = 2 * params.b * edge**2 / params.l0
        assert report.max_parabolic_term == pytest.approx(expected, rel=1e-12)
        assert report.svea_ok
        assert not report.parabolic_ok

    def test_gentle_cavity_passes_both(self, grid256):
        params = derive_params(2 * MICRON, 1e-6 / MICRON, 1, C_LIGHT)
        report = svea_check(params, grid256)
        assert report.svea_ok
        assert report.parabolic_ok

    def test_fast_envelope_fails_svea_flag(self, grid256):
        params = CavityParams(
            l0=1.0, b=1.0, n_long=1, c=1.0,
            omega0=1.0, omega_tilde=0.3, m_eff=1.0, gamma_eff=1.0, osc_length=1e-6,
        )
        report = svea_check(params, grid256)
        assert report.frequency_ratio == pytest.approx(0.3)
        assert not report.svea_ok


class TestEvolveModes:
    def test_full_period_identity(self, entangled):
        evolved = evolve_modes(entangled, 2 * math.pi)
        assert np.abs(evolved.coeffs - entangled.coeffs).max() <= 1e-12

    def test_entangled_state_evolves_by_global_phase(self, entangled, grid128):
        t = 0.37
        evolved = evolve_modes(entangled, t)
        assert np.abs(evolved.coeffs - np.exp(-2j * t) * entangled.coeffs).max() <= 1e-14
        before = np.abs(synthesize(entangled, grid128).values) ** 2
        after = np.abs(synthesize(evolved, grid128).values) ** 2
        assert np.abs(before - after).max() <= 1e-14

    def test_magnitudes_preserved(self, entangled):
        evolved = evolve_modes(entangled, 1.234)
        assert np.abs(np.abs(evolved.coeffs) - np.abs(entangled.coeffs)).max() <= 1e-15

    def test_ground_state_stationary(self, grid128):
        state = ground_state()
        evolved = evolve_modes(state, 0.9)
        assert abs(abs(evolved.coeffs[0, 0]) - 1.0) <= 1e-15
        assert np.abs(
            np.abs(synthesize(evolved, grid128).values)
            - np.abs(synthesize(state, grid128).values)
        ).max() <= 1e-14


class TestSplitStep:
    def test_one_period_round_trip(self, grid128):
        state = beamsplitter_state(2)
        start = synthesize(state, grid128)
        config = PropagatorConfig(dt=2 * math.pi / 2000, steps=2000)
        evolved = evolve_splitstep(start, config)
        projected = field.project(evolved, 2)
        assert np.abs(projected.coeffs - state.coeffs).max() < 1e-5

    def test_matches_mode_propagator_at_partial_time(self, grid128):
        state = beamsplitter_state(2)
        steps = 500
        config = PropagatorConfig(dt=2 * math.pi / 2000, steps=steps)
        evolved = evolve_splitstep(synthesize(state, grid128), config)
        exact = evolve_modes(state, steps * config.dt)
        projected = field.project(evolved, 2)
        assert np.abs(projected.coeffs - exact.coeffs).max() < 1e-5

    def test_ground_state_amplitude_static(self, grid128):
        start = synthesize(ground_state(), grid128)
        evolved = evolve_splitstep(start, PropagatorConfig(dt=DEFAULT_DT, steps=1000))
        assert np.abs(np.abs(evolved.values) - np.abs(start.values)).max() <= 1e-8

    def test_norm_conserved(self, grid128, entangled):
        start = synthesize(beamsplitter_state(2), grid128)
        evolved = evolve_splitstep(start, PropagatorConfig(dt=DEFAULT_DT, steps=1000))
        assert abs(evolved.norm() - start.norm()) <= 1e-10

    def test_second_order_convergence(self, grid128):
        state = beamsplitter_state(2)
        start = synthesize(state, grid128)
        errors = []
        for steps in (1000, 2000):
            config = PropagatorConfig(dt=2 * math.pi / steps, steps=steps)
            projected = field.project(evolve_splitstep(start, config), 2)
            errors.append(np.abs(projected.coeffs - state.coeffs).max())
        ratio = errors[0] / errors[1]
        assert 3.5 <= ratio <= 4.5

    def test_energy_conserved(self, grid128):
        start = synthesize(beamsplitter_state(2), grid128)
        evolved = evolve_splitstep(start, PropagatorConfig(dt=DEFAULT_DT, steps=700))
        ham = field.hamiltonian_spec()
        ident = field.identity_spec()

        def energy(f):
            return (
                field.expect_grid(f, ham, ident).real
                + field.expect_grid(f, ident, ham).real
            )

        assert energy(evolved) == pytest.approx(energy(start), abs=1e-6)
        assert energy(start) == pytest.approx(2.0, abs=1e-9)

    def test_coherent_center_oscillates(self, grid128):
        # displaced Gaussian: <x>(t) follows x0 cos t
        x0 = 1.5
        xs, ys = np.meshgrid(grid128.points, grid128.points, indexing="ij")
        values = np.pi**-0.5 * np.exp(-((xs - x0) ** 2 + ys**2) / 2)
        current = FieldGrid(grid128, values)
        dt = 2 * math.pi / 2000
        chunk = 250
        for k in range(1, 5):
            current = evolve_splitstep(current, PropagatorConfig(dt=dt, steps=chunk))
            weight = np.abs(current.values) ** 2
            center = float((weight * xs).sum() / weight.sum())
            assert center == pytest.approx(x0 * math.cos(k * chunk * dt), abs=1e-4)

    def test_non_finite_input_raises_integrator_error(self, grid128):
        huge = FieldGrid(grid128, np.full((128, 128), 1e300, dtype=complex))
        with pytest.raises(IntegratorError):
            evolve_splitstep(huge, PropagatorConfig(dt=DEFAULT_DT, steps=5))

    def test_timestep_guard(self, grid128):
        start = synthesize(ground_state(), grid128)
        with pytest.raises(ValueError):
            evolve_splitstep(start, PropagatorConfig(dt=0.2, steps=1))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PropagatorConfig(dt=-0.1, steps=10)
        with pytest.raises(ValueError):
            PropagatorConfig(dt=0.01, steps=10, scheme="euler")

    def test_trajectory_recording(self, grid128):
        start = synthesize(beamsplitter_state(2), grid128)
        frames, times = splitstep_trajectory(start, PropagatorConfig(dt=0.01, steps=100), 25)
        assert len(frames) == 5
        assert np.allclose(times, [0.0, 0.25, 0.5, 0.75, 1.0])


class TestRotation:
    def make_frames(self, grid, n_frames=33, span=4 * math.pi):
        state = beamsplitter_state(2)
        times = np.linspace(0.0, span, n_frames)
        frames = [synthesize(evolve_modes(state, t), grid) for t in times]
        return frames, times

    def test_mode_frames_rotate_at_twice_the_trap_frequency(self, grid128):
        frames, times = self.make_frames(grid128)
        rate, residual = measure_rotation_rate(frames, times)
        assert residual < 1e-3
        # quantum phase convention: nodal line turns at 2 omega_tilde,
        # clockwise; the per-term display convention would give +1
        assert rate == pytest.approx(-2.0, abs=1e-6)

    def test_splitstep_frames_match_mode_rate(self, grid128):
        frames, times = self.make_frames(grid128)
        rate_mode, _ = measure_rotation_rate(frames, times)
        start = synthesize(beamsplitter_state(2), grid128)
        config = PropagatorConfig(dt=4 * math.pi / 1024, steps=1024)
        split_frames, split_times = splitstep_trajectory(start, config, 32)
        rate_split, residual = measure_rotation_rate(split_frames, split_times)
        assert abs(rate_split - rate_mode) <= 1e-3 * abs(rate_mode)
        assert residual < 1e-3

    def test_reversed_frames_negate_rate(self, grid128):
        frames, times = self.make_frames(grid128)
        rate, _ = measure_rotation_rate(frames, times)
        reversed_rate, _ = measure_rotation_rate(frames[::-1], times)
        assert reversed_rate == pytest.approx(-rate, abs=1e-9)

    def test_ground_state_has_no_nodal_line(self, grid128):
        with pytest.raises(NoNodalLineError):
            nodal_angle(synthesize(ground_state(), grid128))

    def test_requires_enough_frames(self, grid128):
        frames, times = self.make_frames(grid128, n_frames=3, span=1.0)
        with pytest.raises(ValueError):
            measure_rotation_rate(frames, times)

    def test_nodal_angle_of_known_frame(self, grid128):
        # Re psi at t = 0 vanishes on the x axis (angle 0 mod pi)
        state = beamsplitter_state(2)
        angle = nodal_angle(synthesize(state, grid128))
        assert min(angle, math.pi - angle) <= 1e-9
