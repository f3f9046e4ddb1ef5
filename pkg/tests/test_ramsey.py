import pytest
import math

import numpy as np

from src.hfclock import (
    DetectionModel, FringeAmbiguityError, HyperfineClockSpec, RamseyConfig, detection_error_rates,
    detuning_grid, estimate_frequency, fringe_fwhm, moment_to_frequency, observed_probability,
    projection_noise_sigma, ramsey_probability, required_shots, simulate_fringe,
)
from src.business_logic.seeding import TRIAL_STREAM, derive_seed

SR87_NU0 = 5.0e9
HG199_NU0 = 4.05e10


@pytest.fixture
def sr87_clock():
    return HyperfineClockSpec('Sr-87', SR87_NU0, 4, 5, pump_nm=422.0, detect_nm=408.0, label='Sr-87+')


@pytest.fixture
def one_second():
    """T = 1 s, 1 ms pulses and the shot count for 2e-14 on 5 GHz"""
    return RamseyConfig.standard(free_s=1.0, pulse_s=1e-3, shots=2_530_000)


class TestClockSpec:
    def test_hyperfine_levels(self, sr87_clock):
        assert sr87_clock.nuclide.name == 'Sr-87'
        with pytest.raises(ValueError):
            HyperfineClockSpec('Sr-87', SR87_NU0, 4, 6)
        with pytest.raises(ValueError):
            HyperfineClockSpec('Sr-87', -1.0, 4, 5)

    def test_pulse_area(self):
        """Test the pi/2 pulse area is enforced within tolerance"""
        config = RamseyConfig.standard(free_s=0.1, pulse_s=1e-3, shots=100)
        assert config.rabi_rad_s * config.pulse_s == pytest.approx(math.pi / 2)
        with pytest.raises(ValueError, match='Pulse area'):
            RamseyConfig(rabi_rad_s=1000.0, pulse_s=1e-3, free_s=0.1, shots=100)
        with pytest.raises(ValueError):
            RamseyConfig.standard(free_s=0.0, pulse_s=1e-3, shots=100)
        with pytest.raises(ValueError):
            RamseyConfig.standard(free_s=0.1, pulse_s=1e-3, shots=0)


class TestRamseyProbability:
    def test_resonant_full_transfer(self):
        config = RamseyConfig.standard(free_s=0.1, pulse_s=1e-3, shots=100)
        assert ramsey_probability(config, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_dark_fringe(self):
        """Test delta = pi/T lands on the first zero in the short-pulse limit"""
        free = 0.1
        config = RamseyConfig.standard(free_s=free, pulse_s=free / 100, shots=100)
        assert ramsey_probability(config, math.pi / free) <= 0.01

    def test_bounds_and_symmetry(self):
        config = RamseyConfig.standard(free_s=0.1, pulse_s=1e-3, shots=100)
        detunings = np.random.default_rng(3).uniform(-5e4, 5e4, 2000)
        probability = ramsey_probability(config, detunings)
        assert np.all((probability >= 0.0) & (probability <= 1.0))
        np.testing.assert_allclose(probability, ramsey_probability(config, -detunings), rtol=0, atol=1e-15)

    @pytest.mark.parametrize('free_s', [0.01, 0.1, 1.0])
    def test_fringe_width(self, free_s):
        """Test the central fringe FWHM is 1/(2T)"""
        config = RamseyConfig.standard(free_s=free_s, pulse_s=free_s / 1000, shots=100)
        assert fringe_fwhm(config) == pytest.approx(1.0 / (2.0 * free_s), rel=0.01)

    def test_fringe_width_with_longer_pulses(self):
        """Test half maximum near +-2 pi 2.5 rad/s for T=0.1 s and tau=T/100"""
        config = RamseyConfig.standard(free_s=0.1, pulse_s=1e-3, shots=100)
        half_width = fringe_fwhm(config) / 2.0
        assert half_width == pytest.approx(2.5, rel=0.02)
        assert ramsey_probability(config, 2 * math.pi * half_width) == pytest.approx(0.5, abs=1e-9)


class TestDetection:
    def test_poisson_tails(self):
        """Test bright mean 5.9 and dark mean 0.1 with threshold 2"""
        miss, false_bright = detection_error_rates(5.9, 0.1, 2)
        assert miss == pytest.approx(math.exp(-5.9) * 6.9)
        assert miss == pytest.approx(0.019, abs=0.0005)
        assert false_bright == pytest.approx(1.0 - math.exp(-0.1) * 1.1)
        assert false_bright == pytest.approx(0.0047, abs=0.0001)

    def test_observed_probability(self):
        detection = DetectionModel(bright_mean=5.9, dark_mean=0.1)
        config = RamseyConfig.standard(free_s=0.1, pulse_s=1e-3, shots=100, detection=detection)
        miss, false_bright = detection.error_rates
        assert observed_probability(config, 0.0) == pytest.approx(1.0 - miss)
        dark = math.pi / config.effective_free_s
        expected = ramsey_probability(config, dark) * (1 - miss) + (1 - ramsey_probability(config, dark)) * false_bright
        assert observed_probability(config, dark) == pytest.approx(expected)

    def test_invalid_means(self):
        with pytest.raises(ValueError):
            DetectionModel(bright_mean=0.1, dark_mean=0.2)


class TestShotBudget:
    def test_required_shots(self):
        """Test 2e-14 of 5 GHz at T=1 s needs about 2.5e6 shots"""
        shots = required_shots(2e-14, SR87_NU0, 1.0)
        assert shots == math.ceil((1.0 / (2 * math.pi * SR87_NU0 * 2e-14)) ** 2)
        assert 2.5e6 <= shots <= 2.6e6

    def test_single_shot_resolution(self):
        assert required_shots(1.0 / (2 * math.pi * 0.5 * SR87_NU0), SR87_NU0, 0.5) == 1

    def test_depends_on_absolute_frequency(self):
        """Test the same absolute Hz target needs the same shots on Hg-199+"""
        sigma_hz = 2e-14 * SR87_NU0
        assert required_shots(sigma_hz / HG199_NU0, HG199_NU0, 1.0) == required_shots(2e-14, SR87_NU0, 1.0)

    def test_projection_noise(self):
        assert projection_noise_sigma(SR87_NU0, 1.0, required_shots(2e-14, SR87_NU0, 1.0)) <= 2e-14
        with pytest.raises(ValueError):
            required_shots(0.0, SR87_NU0, 1.0)


class TestMomentToFrequency:
    def test_linear(self, sr87_clock):
        assert moment_to_frequency(sr87_clock, 1.0) == SR87_NU0
        assert moment_to_frequency(sr87_clock, 1.0 + 1e-12) - SR87_NU0 == pytest.approx(5e-3, rel=1e-3)
        assert moment_to_frequency(sr87_clock, 2.0) == 2 * SR87_NU0
        with pytest.raises(ValueError):
            moment_to_frequency(sr87_clock, 0.0)


class TestSimulateFringe:
    def test_analytic_fringe_is_symmetric(self, sr87_clock, one_second):
        fringe = simulate_fringe(sr87_clock, one_second, 0.0, analytic=True)
        np.testing.assert_allclose(fringe.successes, fringe.successes[::-1], rtol=1e-12)
        np.testing.assert_allclose(fringe.detunings_rad_s, -fringe.detunings_rad_s[::-1], atol=1e-12)

    def test_seeded_fringe_is_reproducible(self, sr87_clock, one_second):
        first = simulate_fringe(sr87_clock, one_second, 1e-13, seed=42)
        second = simulate_fringe(sr87_clock, one_second, 1e-13, seed=42)
        other = simulate_fringe(sr87_clock, one_second, 1e-13, seed=43)
        np.testing.assert_array_equal(first.successes, second.successes)
        assert not np.array_equal(first.successes, other.successes)
        assert first.shots_per_point == 2_530_000 // 9

    def test_grid(self, one_second):
        grid = detuning_grid(one_second)
        assert len(grid) == 9
        assert grid[-1] == pytest.approx(0.8 * math.pi / one_second.effective_free_s)
        with pytest.raises(ValueError):
            detuning_grid(one_second, points=4)
        with pytest.raises(ValueError):
            detuning_grid(one_second, span=1.2)

    def test_too_few_shots(self, sr87_clock):
        config = RamseyConfig.standard(free_s=1.0, pulse_s=1e-3, shots=5)
        with pytest.raises(ValueError):
            simulate_fringe(sr87_clock, config, 0.0)


class TestEstimateFrequency:
    def test_noiseless_zero_offset(self, sr87_clock, one_second):
        """Test a noiseless fringe at zero offset fits to zero"""
        estimate = estimate_frequency(simulate_fringe(sr87_clock, one_second, 0.0, analytic=True))
        assert abs(estimate.offset_fractional) < 1e-15

    def test_noiseless_shifted_center(self, sr87_clock, one_second):
        """Test a 1e-13 offset on 5 GHz shifts the center by 0.5 mHz"""
        estimate = estimate_frequency(simulate_fringe(sr87_clock, one_second, 1e-13, analytic=True))
        assert estimate.center_rad_s / (2 * math.pi) == pytest.approx(5e-4, rel=1e-6)
        assert estimate.offset_fractional == pytest.approx(1e-13, rel=1e-6)

    def test_detection_errors_do_not_bias(self, sr87_clock):
        detection = DetectionModel(bright_mean=5.9, dark_mean=0.1)
        config = RamseyConfig.standard(free_s=1.0, pulse_s=1e-3, shots=2_530_000, detection=detection)
        estimate = estimate_frequency(simulate_fringe(sr87_clock, config, 1e-13, analytic=True))
        assert estimate.offset_fractional == pytest.approx(1e-13, rel=1e-6)

    def test_sigma_scales_with_shots(self, sr87_clock):
        """Test halving the shots grows the standard error by sqrt(2)"""
        full = RamseyConfig.standard(free_s=1.0, pulse_s=1e-3, shots=2_530_000)
        half = RamseyConfig.standard(free_s=1.0, pulse_s=1e-3, shots=1_265_000)
        sigma_full = estimate_frequency(simulate_fringe(sr87_clock, full, 0.0, analytic=True)).sigma_fractional
        sigma_half = estimate_frequency(simulate_fringe(sr87_clock, half, 0.0, analytic=True)).sigma_fractional
        assert sigma_half / sigma_full == pytest.approx(math.sqrt(2.0), rel=0.05)

    @pytest.mark.slow
    def test_calibration(self, sr87_clock, one_second):
        """Test injected 0.5 mHz is recovered and the reported sigma matches the scatter"""
        offset = 1e-13
        estimates = [
            estimate_frequency(simulate_fringe(sr87_clock, one_second, offset, derive_seed(11, TRIAL_STREAM, i)))
            for i in range(1000)
        ]
        values = np.array([e.offset_fractional for e in estimates])
        sigmas = np.array([e.sigma_fractional for e in estimates])
        z = (values - offset) / sigmas
        assert np.mean(np.abs(z) <= 5) >= 0.99
        assert values.std(ddof=1) == pytest.approx(sigmas.mean(), rel=0.1)
        assert sigmas.mean() == pytest.approx(2e-14, rel=0.5)

    def test_outside_central_fringe(self, sr87_clock, one_second):
        """Test a fringe peaking on the grid edge is ambiguous"""
        limit = math.pi / one_second.effective_free_s
        offset = 0.9 * limit / (2 * math.pi * SR87_NU0)
        fringe = simulate_fringe(sr87_clock, one_second, offset, analytic=True)
        with pytest.raises(FringeAmbiguityError):
            estimate_frequency(fringe)

    def test_needs_five_points(self, sr87_clock, one_second):
        grid = np.linspace(-1.0, 1.0, 4)
        fringe = simulate_fringe(sr87_clock, one_second, 0.0, detunings_rad_s=grid, analytic=True)
        with pytest.raises(ValueError):
            estimate_frequency(fringe)
