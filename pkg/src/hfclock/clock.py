from dataclasses import dataclass
from typing import Optional, Tuple, Union
import math

import numpy as np
from scipy.optimize import brentq
from scipy.stats import poisson

from ..nuclear_data import NuclideId, as_identity

PULSE_AREA_TOLERANCE = 0.01

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class HyperfineClockSpec:
    nuclide: NuclideId
    nu0_hz: float
    f_lower: int
    f_upper: int
    pump_nm: Optional[float] = None
    detect_nm: Optional[float] = None
    label: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'nuclide', as_identity(self.nuclide))
        if not math.isfinite(self.nu0_hz) or self.nu0_hz <= 0:
            raise ValueError(f"nu0_hz must be positive, got {self.nu0_hz}")
        if self.f_upper != self.f_lower + 1:
            raise ValueError(f"Ground-state clock needs f_upper = f_lower + 1, got {self.f_lower}->{self.f_upper}")


@dataclass(frozen=True)
class DetectionModel:
    """Bright/dark Poisson count means with a hard threshold"""
    bright_mean: float
    dark_mean: float
    threshold: int = 2

    def __post_init__(self):
        if self.bright_mean <= self.dark_mean or self.dark_mean < 0:
            raise ValueError(f"Need bright_mean > dark_mean >= 0, got {self.bright_mean}/{self.dark_mean}")
        if self.threshold < 1:
            raise ValueError(f"threshold must be >= 1, got {self.threshold}")

    @property
    def error_rates(self) -> Tuple[float, float]:
        return detection_error_rates(self.bright_mean, self.dark_mean, self.threshold)


def detection_error_rates(bright_mean: float, dark_mean: float, threshold: int) -> Tuple[float, float]:
    """(P(bright read as dark), P(dark read as bright)) for a count threshold"""
    miss = float(poisson.cdf(threshold - 1, bright_mean))
    false_bright = float(poisson.sf(threshold - 1, dark_mean))
    return miss, false_bright


@dataclass(frozen=True)
class RamseyConfig:
    rabi_rad_s: float
    pulse_s: float
    free_s: float
    # total shots per fringe, split evenly across the detuning grid
    shots: int
    detection: Optional[DetectionModel] = None
    pulse_area_tolerance: float = PULSE_AREA_TOLERANCE

    def __post_init__(self):
        for name in ('rabi_rad_s', 'pulse_s', 'free_s'):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        area = self.rabi_rad_s * self.pulse_s
        if abs(area - math.pi / 2) > self.pulse_area_tolerance * math.pi / 2:
            raise ValueError(f"Pulse area {area:.6g} rad is not pi/2 within {self.pulse_area_tolerance:g}")

    @classmethod
    def standard(cls, free_s: float, pulse_s: float, shots: int,
                 detection: Optional[DetectionModel] = None) -> 'RamseyConfig':
        """Exact pi/2 pulses of the given length"""
        return cls(rabi_rad_s=math.pi / (2.0 * pulse_s), pulse_s=pulse_s, free_s=free_s,
                   shots=shots, detection=detection)

    @property
    def effective_free_s(self) -> float:
        """Free evolution plus the pulses' phase contribution, T + 4 tau / pi"""
        return self.free_s + 4.0 * self.pulse_s / math.pi

    @property
    def fringe_period_rad_s(self) -> float:
        return 2.0 * math.pi / self.effective_free_s


def ramsey_probability(config: RamseyConfig, detuning_rad_s: ArrayLike) -> ArrayLike:
    """Two-pulse Ramsey transition probability at angular detuning delta"""
    delta = np.asarray(detuning_rad_s, dtype=float)
    rabi = config.rabi_rad_s
    generalized = np.sqrt(rabi * rabi + delta * delta)
    half_area = generalized * config.pulse_s / 2.0
    half_phase = delta * config.free_s / 2.0
    bracket = (np.cos(half_area) * np.cos(half_phase)
               - (delta / generalized) * np.sin(half_area) * np.sin(half_phase))
    probability = 4.0 * (rabi * rabi / (generalized * generalized)) * np.sin(half_area) ** 2 * bracket ** 2
    probability = np.clip(probability, 0.0, 1.0)
    return float(probability) if probability.ndim == 0 else probability


def observed_probability(config: RamseyConfig, detuning_rad_s: ArrayLike) -> ArrayLike:
    """Probability of a 'bright' detection once misclassification is folded in"""
    probability = ramsey_probability(config, detuning_rad_s)
    if config.detection is None:
        return probability
    miss, false_bright = config.detection.error_rates
    return probability * (1.0 - miss) + (1.0 - probability) * false_bright


def fringe_fwhm(config: RamseyConfig) -> float:
    """Full width at half maximum of the central fringe, in Hz"""
    peak = ramsey_probability(config, 0.0)
    upper = math.pi / config.effective_free_s
    half_width = brentq(lambda d: ramsey_probability(config, d) - peak / 2.0, 0.0, upper, xtol=1e-15, rtol=1e-14)
    return 2.0 * half_width / (2.0 * math.pi)


def required_shots(target_sigma_fractional: float, nu0_hz: float, free_s: float) -> int:
    """Shots needed for a projection-noise-limited fractional uncertainty"""
    if target_sigma_fractional <= 0 or nu0_hz <= 0 or free_s <= 0:
        raise ValueError("target_sigma_fractional, nu0_hz and free_s must be positive")
    exact = (1.0 / (2.0 * math.pi * free_s * nu0_hz * target_sigma_fractional)) ** 2
    # absorb rounding when exact lands on an integer
    return max(1, math.ceil(exact * (1.0 - 1e-12)))


def projection_noise_sigma(nu0_hz: float, free_s: float, shots: int) -> float:
    """Fractional frequency uncertainty 1 / (2 pi T nu0 sqrt(N))"""
    if nu0_hz <= 0 or free_s <= 0 or shots < 1:
        raise ValueError("nu0_hz and free_s must be positive and shots >= 1")
    return 1.0 / (2.0 * math.pi * free_s * nu0_hz * math.sqrt(shots))


def moment_to_frequency(spec: HyperfineClockSpec, moment_ratio: float) -> float:
    """Hyperfine frequency for a nuclear moment scaled by moment_ratio"""
    if not moment_ratio > 0:
        raise ValueError(f"moment_ratio must be positive, got {moment_ratio}")
    return spec.nu0_hz * moment_ratio
