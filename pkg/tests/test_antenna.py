import numpy as np
import pytest

from cavitybell import fock
from cavitybell.antenna import (
    AntennaReading,
    CollapseConfig,
    IllPosedPlanError,
    SamplePlan,
    chsh_from_samples,
    collapse_run,
    collapse_statistics,
    convergence_study,
    default_extent,
    make_plan,
    reconstruct,
    sample,
    trajectory_to_csv,
)
from cavitybell.field import synthesize
from cavitybell.fock import ModeState2D, beamsplitter_state, optimal_settings
from cavitybell.modes import Grid1D

SQRT2 = np.sqrt(2.0)


@pytest.fixture(scope="module")
def entangled_field(grid256=None):
    grid = Grid1D(8.0, 256)
    return synthesize(beamsplitter_state(3), grid)


def pure_state(nmax, nx, ny):
    c = np.zeros((nmax + 1, nmax + 1), dtype=complex)
    c[nx, ny] = 1.0
    return ModeState2D(nmax, c)


class TestPlans:
    def test_layouts_are_reproducible(self):
        for layout in ("random_uniform", "halton"):
            a = make_plan(layout, 50, 123, 4.0)
            b = make_plan(layout, 50, 123, 4.0)
            assert a.sites == b.sites

    def test_uniform_grid_needs_square_count(self):
        with pytest.raises(ValueError):
            make_plan("uniform_grid", 50, 1, 4.0)

    def test_unknown_layout(self):
        with pytest.raises(ValueError):
            make_plan("spiral", 16, 1, 4.0)

    def test_default_extent_covers_turning_point(self):
        assert default_extent(3) == pytest.approx(np.sqrt(7.0) + 1.0)


class TestSample:
    def test_exact_on_grid_nodes(self, entangled_field):
        # extent 3.5 with an 8x8 grid puts every site on a node of the 1/16 mesh
        plan = make_plan("uniform_grid", 64, 1, 3.5)
        readings = sample(entangled_field, plan, 0.0)
        pts = entangled_field.grid.points
        for reading in readings:
            i = int(round((reading.site[0] - pts[0]) / entangled_field.grid.spacing))
            j = int(round((reading.site[1] - pts[0]) / entangled_field.grid.spacing))
            assert reading.value == pytest.approx(entangled_field.values[i, j], abs=1e-15)

    def test_fixed_seed_is_deterministic(self, entangled_field):
        plan = make_plan("random_uniform", 100, 42, 4.0)
        first = sample(entangled_field, plan, 0.05)
        second = sample(entangled_field, plan, 0.05)
        assert all(a.value == b.value for a, b in zip(first, second))

    def test_noise_power(self, entangled_field):
        plan = make_plan("random_uniform", 10_000, 3, 4.0)
        clean = sample(entangled_field, plan, 0.0)
        noisy = sample(entangled_field, plan, 0.01)
        power = np.mean([abs(n.value - c.value) ** 2 for n, c in zip(noisy, clean)])
        assert power == pytest.approx(2 * 0.01**2, rel=0.1)

    def test_site_outside_domain(self, entangled_field):
        plan = SamplePlan(sites=((9.0, 0.0),), layout="random_uniform", seed=1)
        with pytest.raises(ValueError):
            sample(entangled_field, plan, 0.0)


class TestReconstruct:
    def test_noiseless_round_trip(self, entangled_field):
        plan = make_plan("uniform_grid", 64, 1, 3.5)
        readings = sample(entangled_field, plan, 0.0)
        state, cond = reconstruct(readings, 3)
        truth = beamsplitter_state(3)
        assert cond < 1e4
        assert np.abs(state.coeffs - truth.coeffs).max() <= 1e-8

    def test_ground_state_round_trip(self, entangled_field):
        grid = entangled_field.grid
        f = synthesize(pure_state(3, 0, 0), grid)
        plan = make_plan("uniform_grid", 64, 1, 3.5)
        state, _ = reconstruct(sample(f, plan, 0.0), 3)
        assert abs(state.coeffs[0, 0]) == pytest.approx(1.0, abs=1e-8)

    def test_clustered_sites_are_ill_posed(self, entangled_field):
        sites = tuple((1e-6 * k, 1e-6 * k) for k in range(32))
        readings = [AntennaReading(site=s, value=0.1 + 0j, noise_sigma=0.0) for s in sites]
        with pytest.raises(IllPosedPlanError):
            reconstruct(readings, 3)

    def test_needs_enough_readings(self, entangled_field):
        plan = make_plan("uniform_grid", 9, 1, 3.0)
        readings = sample(entangled_field, plan, 0.0)
        with pytest.raises(ValueError):
            reconstruct(readings, 3)


class TestChshFromSamples:
    def test_noiseless_reaches_tsirelson(self, entangled_field):
        plan = make_plan("uniform_grid", 100, 1, 4.5)
        readings = sample(entangled_field, plan, 0.0)
        value = chsh_from_samples(readings, 3, optimal_settings())
        assert value == pytest.approx(2 * SQRT2, abs=1e-6)

    def test_product_field_respects_bound(self):
        grid = Grid1D(8.0, 256)
        f = synthesize(pure_state(3, 0, 0), grid)
        plan = make_plan("uniform_grid", 100, 1, 4.5)
        readings = sample(f, plan, 0.0)
        value = chsh_from_samples(readings, 3, optimal_settings())
        assert abs(value) <= 2.0 + 1e-6

    def test_violation_survives_noise(self, entangled_field):
        values = []
        for seed in range(30):
            plan = make_plan("random_uniform", 400, seed, default_extent(3))
            readings = sample(entangled_field, plan, 0.02)
            values.append(chsh_from_samples(readings, 3, optimal_settings()))
        assert np.quantile(values, 0.05) > 2.0


class TestConvergenceStudy:
    def test_noiseless_is_exact_for_solvable_counts(self, entangled_field):
        # side counts 5, 9, 17 with extent 4.0 keep every site on a mesh node
        report = convergence_study(
            entangled_field, (25, 81, 289), 0.0, trials=2,
            nmax=3, seed=5, layout="uniform_grid", extent=4.0,
        )
        assert all(err <= 1e-10 for err in report.mean_abs_error)

    def test_noisy_errors_shrink(self, entangled_field):
        report = convergence_study(
            entangled_field, (1024, 8192), 0.05, trials=16, nmax=3, seed=7,
        )
        assert report.mean_abs_error[-1] < report.mean_abs_error[0]
        assert report.oracle_value == pytest.approx(2 * SQRT2, abs=1e-9)

    def test_single_trial_reports_degenerate_std(self, entangled_field):
        report = convergence_study(
            entangled_field, (64, 128), 0.01, trials=1, nmax=1, seed=5,
        )
        assert report.std_abs_error == (None, None)

    def test_m_list_must_ascend(self, entangled_field):
        with pytest.raises(ValueError):
            convergence_study(entangled_field, (128, 64), 0.0, trials=1)


class TestCollapseRun:
    def test_pure_state_is_fixed_point(self):
        config = CollapseConfig(gain=0.1, noise_sigma=0.05, threshold=0.999, seed=1)
        result = collapse_run(pure_state(1, 0, 1), config)
        assert result.outcome == "zero_one"
        assert len(result.trajectory) <= 2
        assert result.trajectory[0][1] == pytest.approx(1.0)

    def test_entangled_state_collapses_with_anticorrelation(self):
        config = CollapseConfig(gain=0.1, noise_sigma=0.05, threshold=0.999, seed=11)
        result = collapse_run(beamsplitter_state(1), config)
        assert result.outcome in ("zero_one", "one_zero")
        _, px, py, f01, f10 = result.trajectory[-1]
        assert max(f01, f10) > 0.999
        assert px * py < 0

    def test_zero_gain_leaves_parity_constant(self):
        config = CollapseConfig(gain=0.0, noise_sigma=0.05, threshold=0.999,
                                max_steps=50, seed=3)
        result = collapse_run(beamsplitter_state(1), config)
        assert result.outcome == "none"
        parities = [row[1] for row in result.trajectory]
        assert np.abs(np.diff(parities)).max() <= 1e-15

    def test_bit_identical_reruns(self):
        config = CollapseConfig(gain=0.1, noise_sigma=0.05, threshold=0.999, seed=21)
        first = collapse_run(beamsplitter_state(1), config)
        second = collapse_run(beamsplitter_state(1), config)
        assert first.trajectory == second.trajectory
        assert first.outcome == second.outcome

    def test_parity_magnitude_monotone_after_commitment(self):
        # noise an order below gain: once the sign locks, the gain map
        # strictly amplifies the committed parity
        config = CollapseConfig(gain=0.1, noise_sigma=0.005, threshold=0.999, seed=8)
        result = collapse_run(beamsplitter_state(1), config)
        parities = [abs(row[1]) for row in result.trajectory]
        committed = next(k for k, p in enumerate(parities) if p > 5 * config.noise_sigma)
        diffs = np.diff(parities[committed:])
        assert np.all(diffs >= -1e-12)

    def test_tie_break_at_zero_noise(self):
        config = CollapseConfig(gain=0.1, noise_sigma=0.0, threshold=0.999, seed=1)
        result = collapse_run(beamsplitter_state(1), config)
        # sign(0) is defined as +1, so the symmetric state drifts to even parity on x
        assert result.outcome == "zero_one"
        assert result.tie_break

    def test_feedback_on_y_axis(self):
        config = CollapseConfig(gain=0.1, noise_sigma=0.05, threshold=0.999,
                                seed=4, feedback_axis="y")
        result = collapse_run(beamsplitter_state(1), config)
        assert result.outcome in ("zero_one", "one_zero")

    def test_feedback_on_both_axes(self):
        config = CollapseConfig(gain=0.1, noise_sigma=0.05, threshold=0.999,
                                seed=4, feedback_axis="both")
        result = collapse_run(beamsplitter_state(1), config)
        assert result.outcome in ("zero_one", "one_zero")

    def test_requires_two_level_support(self):
        c = np.zeros((3, 3), dtype=complex)
        c[2, 0] = 1.0
        config = CollapseConfig(seed=1)
        with pytest.raises(ValueError):
            collapse_run(ModeState2D(2, c), config)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CollapseConfig(gain=0.5)
        with pytest.raises(ValueError):
            CollapseConfig(threshold=1.5)
        with pytest.raises(ValueError):
            CollapseConfig(feedback_axis="z")


class TestCollapseStatistics:
    def test_entangled_outcomes_split_evenly(self):
        config = CollapseConfig(gain=0.1, noise_sigma=0.05, threshold=0.999, seed=2026)
        stats, results = collapse_statistics(beamsplitter_state(1), config, 200)
        assert stats.fraction_none == 0.0
        assert 0.4 <= stats.fraction_zero_one <= 0.6
        assert 0.4 <= stats.fraction_one_zero <= 0.6
        assert len(results) == 200

    def test_pure_state_always_lands_in_its_branch(self):
        config = CollapseConfig(gain=0.1, noise_sigma=0.05, threshold=0.999, seed=5)
        stats, _ = collapse_statistics(pure_state(1, 0, 1), config, 20)
        assert stats.fraction_zero_one == 1.0

    def test_runs_validation(self):
        config = CollapseConfig(seed=1)
        with pytest.raises(ValueError):
            collapse_statistics(beamsplitter_state(1), config, 0)


class TestTrajectoryCsv:
    def test_header_and_rows(self):
        config = CollapseConfig(gain=0.1, noise_sigma=0.05, threshold=0.999, seed=1)
        result = collapse_run(beamsplitter_state(1), config)
        text = trajectory_to_csv(result)
        lines = text.strip().splitlines()
        assert lines[0] == "step,parity_x,parity_y,fidelity_01,fidelity_10"
        assert len(lines) == 1 + len(result.trajectory)
        assert lines[1].startswith("0,")
