import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinramsey import (
    FitConfig,
    FitResult,
    FringeScan,
    fit_fringe,
    fringe_scan,
    harmonic_spectrum,
    neighbor_average,
    populations_vs_phase,
    sensitivity,
    SpinState,
    with_population_noise,
)
from spinramsey.fitting import DEFAULT_BOUNDS, find_fringe_peaks


def constant_scan(value=0.3, n=40):
    f = np.linspace(180.0, 200.0, n)
    row = np.array([value, 1.0 - value, 0.0, 0.0, 0.0])
    return FringeScan(f, np.tile(row, (n, 1)))


def ramp_scan(slope=0.002, n=41, step=0.5):
    f = 180.0 + step * np.arange(n)
    p0 = slope * (f - f[0])
    p = np.zeros((n, 5))
    p[:, 0] = p0
    p[:, 1] = 1.0 - p0
    return FringeScan(f, p)


class TestNeighborAverage:
    def test_constant_scan_unchanged(self):
        scan = constant_scan()
        out = neighbor_average(scan, 3)
        assert np.array_equal(out.populations, scan.populations)
        assert np.max(out.stddev) == 0.0

    def test_window_one_is_identity(self):
        scan = ramp_scan()
        out = neighbor_average(scan, 1)
        assert np.array_equal(out.populations, scan.populations)
        assert np.max(out.stddev) == 0.0

    def test_linear_ramp_interior(self):
        slope, step = 0.002, 0.5
        scan = ramp_scan(slope, step=step)
        out = neighbor_average(scan, 3)
        interior = slice(1, -1)
        assert np.allclose(out.populations[interior], scan.populations[interior], atol=1e-14)
        # population stddev of {x-d, x, x+d} is d*sqrt(2/3)
        expected = slope * step * np.sqrt(2.0 / 3.0)
        assert np.allclose(out.stddev[interior, 0], expected, atol=1e-14)
        assert np.allclose(out.stddev[interior, 1], expected, atol=1e-14)

    def test_edges_truncated(self):
        scan = ramp_scan(0.002, step=0.5)
        out = neighbor_average(scan, 3)
        assert out.populations[0, 0] == pytest.approx(scan.populations[:2, 0].mean())
        assert out.populations[-1, 0] == pytest.approx(scan.populations[-2:, 0].mean())

    def test_rejects_bad_window(self):
        scan = constant_scan(n=10)
        with pytest.raises(ValueError):
            neighbor_average(scan, 2)
        with pytest.raises(ValueError):
            neighbor_average(scan, 11)
        with pytest.raises(ValueError):
            neighbor_average(scan, -3)


class TestFitConfig:
    def test_requires_free_parameter(self):
        with pytest.raises(ValueError):
            FitConfig(guesses={"f0": 195.0, "t": 290.0}, free=())

    def test_rejects_unknown_parameter(self):
        with pytest.raises(ValueError):
            FitConfig(guesses={"f0": 195.0, "t": 290.0}, free=("f0", "tau"))

    def test_requires_core_guesses(self):
        with pytest.raises(ValueError):
            FitConfig(guesses={"f0": 195.0})

    def test_guess_must_sit_in_bounds(self):
        with pytest.raises(ValueError):
            FitConfig(guesses={"f0": 5.0, "t": 290.0})

    def test_rejects_bad_target(self):
        with pytest.raises(ValueError):
            FitConfig(guesses={"f0": 195.0, "t": 290.0}, target="+3")

    def test_defaults_merged(self):
        config = FitConfig(guesses={"f0": 195.0, "t": 290.0})
        assert config.guesses["delta"] == 25.0
        assert config.guesses["scale"] == 1.0
        assert config.bounds["f0"] == DEFAULT_BOUNDS["f0"]


class TestFitFringe:
    def test_requires_enough_rows(self, fig3_scan):
        small = FringeScan(fig3_scan.f_khz[:4], fig3_scan.populations[:4])
        with pytest.raises(ValueError):
            fit_fringe(small, FitConfig(guesses={"f0": 195.0, "t": 290.0},
                                        free=("f0", "t", "phi", "delta")))

    def test_constant_scan_flagged_ill_conditioned(self):
        result = fit_fringe(constant_scan(), FitConfig(guesses={"f0": 190.0, "t": 290.0}))
        assert result.ill_conditioned
        assert not result.converged

    def test_noiseless_roundtrip_exact(self, fig3_scan):
        config = FitConfig(guesses={"f0": 198.0, "t": 320.0, "phi": 0.0})
        result = fit_fringe(fig3_scan, config)
        assert result.converged
        assert result.parameters["f0"] == pytest.approx(195.0, abs=1e-6)
        assert result.parameters["t"] == pytest.approx(290.0, abs=1e-6)
        assert result.parameters["phi"] == pytest.approx(0.14, abs=1e-6)
        assert result.ssr < 1e-16

    def test_noisy_recovery(self, make_noisy):
        errors = []
        for seed in range(6):
            result = fit_fringe(make_noisy(seed),
                                FitConfig(guesses={"f0": 197.0, "t": 310.0, "phi": 0.0}))
            errors.append((abs(result.parameters["f0"] - 195.0),
                           abs(result.parameters["t"] - 290.0) / 290.0))
        errors = np.array(errors)
        assert np.median(errors[:, 0]) < 1.0
        assert np.median(errors[:, 1]) < 0.03

    def test_cost_history_non_increasing(self, make_noisy):
        result = fit_fringe(make_noisy(3), FitConfig(guesses={"f0": 196.0, "t": 300.0}))
        history = np.array(result.cost_history)
        assert np.all(np.diff(history) <= 0.0)
        assert result.ssr >= 0.0
        assert result.ssr == pytest.approx(float(result.residuals @ result.residuals))

    def test_identifiability_over_parameter_box(self):
        rng = np.random.default_rng(33)
        for _ in range(6):
            f0 = rng.uniform(180.0, 220.0)
            t = rng.uniform(100.0, 600.0)
            phi = rng.uniform(-np.pi, np.pi)
            grid = np.linspace(f0 - 18.0, f0 + 18.0, 145)
            scan = fringe_scan(grid, f0, t, 25.0, phi)
            config = FitConfig(guesses={
                "f0": f0 + rng.uniform(-5.0, 5.0),
                "t": t * (1.0 + rng.uniform(-0.15, 0.15)),
                "phi": 0.0,
            })
            result = fit_fringe(scan, config)
            assert result.parameters["f0"] == pytest.approx(f0, abs=1e-6)
            assert result.parameters["t"] == pytest.approx(t, abs=1e-5)

    def test_recovered_phi_wrapped(self, make_noisy):
        result = fit_fringe(make_noisy(1), FitConfig(guesses={"f0": 196.0, "t": 300.0}))
        assert -np.pi <= result.parameters["phi"] <= np.pi

    def test_parameters_within_bounds(self, make_noisy):
        result = fit_fringe(make_noisy(2), FitConfig(guesses={"f0": 196.0, "t": 300.0}))
        for name in result.free:
            lo, hi = DEFAULT_BOUNDS[name]
            assert lo <= result.parameters[name] <= hi

    def test_stderr_reported_for_noisy_fit(self, make_noisy):
        result = fit_fringe(make_noisy(4), FitConfig(guesses={"f0": 196.0, "t": 300.0}))
        assert set(result.stderr) == set(result.free)
        assert all(np.isfinite(v) and v > 0 for v in result.stderr.values())

    def test_weighted_fit_needs_stddev(self, fig3_scan):
        with pytest.raises(ValueError):
            fit_fringe(fig3_scan, FitConfig(guesses={"f0": 196.0, "t": 300.0}, weighted=True))

    def test_weighted_fit_runs(self, make_noisy):
        averaged = neighbor_average(make_noisy(5), 3)
        result = fit_fringe(averaged, FitConfig(guesses={"f0": 196.0, "t": 300.0}, weighted=True))
        assert result.converged
        assert abs(result.parameters["f0"] - 195.0) < 1.0

    def test_iteration_cap_reports_unconverged(self, make_noisy):
        config = FitConfig(guesses={"f0": 197.0, "t": 310.0}, max_iterations=1,
                           tolerance=1e-30, multistart=False)
        result = fit_fringe(make_noisy(7), config)
        assert not result.converged
        assert result.iterations == 1

    def test_component_residuals_shape(self, make_noisy):
        scan = make_noisy(8)
        result = fit_fringe(scan, FitConfig(guesses={"f0": 196.0, "t": 300.0}))
        assert result.component_residuals.shape == scan.populations.shape


class TestSensitivity:
    def tiny_spread(self, scan, value=1e-6):
        return FringeScan(scan.f_khz, scan.populations,
                          stddev=np.full_like(scan.populations, value),
                          source=scan.source)

    def test_requires_spread(self, fig3_scan, fig3_config):
        result = fit_fringe(fig3_scan, fig3_config)
        with pytest.raises(ValueError):
            sensitivity(fig3_scan, result)

    def test_noise_free_control(self, fig3_scan, fig3_config):
        scan = self.tiny_spread(fig3_scan)
        result = fit_fringe(scan, fig3_config)
        report = sensitivity(scan, result)
        assert report.average_rad < 0.01
        assert len(report.per_peak_rad) >= 5
        assert report.average_rad == pytest.approx(float(np.mean(report.per_peak_rad)))

    def test_noisy_band(self, make_noisy, fig3_config):
        values = []
        for seed in range(5):
            averaged = neighbor_average(make_noisy(seed), 3)
            result = fit_fringe(averaged, fig3_config)
            values.append(sensitivity(averaged, result).average_rad)
        assert 0.3 <= float(np.median(values)) <= 1.2

    def test_monotone_in_spread(self, make_noisy, fig3_config):
        averaged = neighbor_average(make_noisy(1), 3)
        result = fit_fringe(averaged, fig3_config)
        base = sensitivity(averaged, result).average_rad
        doubled = FringeScan(averaged.f_khz, averaged.populations,
                             stddev=2.0 * averaged.stddev, source=averaged.source)
        assert sensitivity(doubled, result).average_rad >= base

    def test_all_phases_non_negative(self, make_noisy, fig3_config):
        averaged = neighbor_average(make_noisy(2), 3)
        result = fit_fringe(averaged, fig3_config)
        report = sensitivity(averaged, result)
        assert min(report.per_peak_rad) >= 0.0

    def test_no_peaks_raises(self, fig3_scan):
        flat = FitResult(
            parameters={"f0": 500.0, "t": 290.0, "phi": 0.0, "delta": 5.0, "scale": 1.0},
            stderr={}, ssr=0.0, residuals=np.zeros(len(fig3_scan)),
            component_residuals=np.zeros_like(fig3_scan.populations),
            converged=True, ill_conditioned=False, iterations=1,
            cost_history=(0.0,), free=("f0",), target="+2",
        )
        with pytest.raises(ValueError):
            sensitivity(self.tiny_spread(fig3_scan), flat)

    def test_find_fringe_peaks(self):
        x = np.linspace(0.0, 4.0 * np.pi, 200)
        y = np.cos(x)
        peaks = find_fringe_peaks(x, y, 0.5)
        assert len(peaks) == 2
        assert np.all(y[peaks] > 0.99)


class TestHarmonicSpectrum:
    PHASES_64 = 2.0 * np.pi * np.arange(64) / 64

    @given(st.integers(min_value=1, max_value=31))
    @settings(max_examples=31, deadline=None)
    def test_pure_cosine_recovered_exactly(self, k):
        spectrum = harmonic_spectrum(self.PHASES_64, np.cos(k * self.PHASES_64))
        assert spectrum.dominant == k

    def test_fundamental_for_stretched_input(self):
        pops = populations_vs_phase(self.PHASES_64)
        assert harmonic_spectrum(self.PHASES_64, pops, component="+2").dominant == 1
        assert harmonic_spectrum(self.PHASES_64, pops, component="-2").dominant == 1

    def test_doubled_for_middle_component(self):
        pops = populations_vs_phase(self.PHASES_64)
        assert harmonic_spectrum(self.PHASES_64, pops, component="0").dominant == 2

    def test_quadrupled_for_plus1_input(self):
        pops = populations_vs_phase(self.PHASES_64, initial=SpinState.from_level("+1"))
        assert harmonic_spectrum(self.PHASES_64, pops, component="0").dominant == 4

    def test_requires_enough_samples(self):
        phases = 2.0 * np.pi * np.arange(8) / 8
        with pytest.raises(ValueError):
            harmonic_spectrum(phases, np.cos(phases))

    def test_rejects_non_uniform_grid(self):
        phases = np.array(self.PHASES_64)
        phases[10] += 1e-3
        with pytest.raises(ValueError):
            harmonic_spectrum(phases, np.cos(phases))

    def test_rejects_partial_period(self):
        phases = np.pi * np.arange(64) / 64
        with pytest.raises(ValueError):
            harmonic_spectrum(phases, np.cos(phases))

    def test_component_required_for_table(self):
        pops = populations_vs_phase(self.PHASES_64)
        with pytest.raises(ValueError):
            harmonic_spectrum(self.PHASES_64, pops)

    def test_magnitudes_shape(self):
        spectrum = harmonic_spectrum(self.PHASES_64, np.cos(3 * self.PHASES_64))
        assert spectrum.magnitudes.shape == (33,)
