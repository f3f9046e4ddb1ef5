from dataclasses import dataclass
from typing import Optional, Tuple
import logging
import math

import numpy as np

from ..hfclock.clock import DetectionModel

# probe-induced hazard may use at most this share of the natural e1 hazard
ZENO_BUDGET = 0.01
HORIZON_LIFETIMES = 50.0


class ZenoBudgetError(ValueError):
    """Probing too often for the configured back-action"""


class LadderError(ValueError):
    """Ladder data cannot support the requested analysis"""


@dataclass(frozen=True)
class LadderDetection:
    cycling_rate_s: float = 5.9e7
    collection_efficiency: float = 1e-3
    window_s: float = 100e-6
    dark_mean: float = 0.1
    threshold: int = 2

    def __post_init__(self):
        if self.cycling_rate_s <= 0 or self.window_s <= 0:
            raise ValueError("cycling_rate_s and window_s must be positive")
        if not 0 < self.collection_efficiency <= 1:
            raise ValueError(f"collection_efficiency must be in (0, 1], got {self.collection_efficiency}")

    @property
    def bright_mean(self) -> float:
        return self.cycling_rate_s * self.collection_efficiency * self.window_s

    @property
    def model(self) -> DetectionModel:
        return DetectionModel(self.bright_mean, self.dark_mean, self.threshold)


@dataclass(frozen=True)
class JumpLadderConfig:
    lifetime_e1_s: float
    lifetime_e2_s: float
    probe_interval_s: float
    probe_perturbation: float = 0.0
    detection: LadderDetection = LadderDetection()
    aging_beta_per_s: float = 0.0
    probe_sigma_fractional: float = 1e-7
    horizon_s: Optional[float] = None
    zeno_budget: float = ZENO_BUDGET
    # h(t) = h0 (1 + slope t); zero keeps decay memoryless
    hazard_slope_per_s: float = 0.0
    nu2_hz: Optional[float] = None
    label: str = ''

    def __post_init__(self):
        if not self.lifetime_e1_s > self.lifetime_e2_s > 0:
            raise ValueError(f"Need lifetime_e1_s > lifetime_e2_s > 0, got "
                             f"{self.lifetime_e1_s} / {self.lifetime_e2_s}")
        if not 0.0 <= self.probe_perturbation < 1.0:
            raise ValueError(f"probe_perturbation must be in [0, 1), got {self.probe_perturbation}")
        if not self.probe_interval_s > 0:
            raise ValueError(f"probe_interval_s must be positive, got {self.probe_interval_s}")
        if not self.probe_sigma_fractional > 0:
            raise ValueError(f"probe_sigma_fractional must be positive, got {self.probe_sigma_fractional}")
        if self.horizon_s is not None and not self.horizon_s > 0:
            raise ValueError(f"horizon_s must be positive, got {self.horizon_s}")
        if self.hazard_slope_per_s < 0:
            raise ValueError(f"hazard_slope_per_s must be non-negative, got {self.hazard_slope_per_s}")

    @property
    def horizon(self) -> float:
        return self.horizon_s if self.horizon_s is not None else HORIZON_LIFETIMES * self.lifetime_e1_s

    @property
    def natural_hazard(self) -> float:
        return 1.0 / self.lifetime_e1_s

    @property
    def probe_hazard(self) -> float:
        return self.probe_perturbation / self.probe_interval_s

    @property
    def hazard(self) -> float:
        return self.natural_hazard + self.probe_hazard

    @property
    def effective_lifetime_s(self) -> float:
        return 1.0 / self.hazard


def minimum_probe_interval(config: JumpLadderConfig) -> float:
    """Shortest interval keeping probe hazard within the Zeno budget"""
    return config.probe_perturbation * config.lifetime_e1_s / config.zeno_budget


def make_schedule(config: JumpLadderConfig) -> np.ndarray:
    """Uniform probe times up to the horizon"""
    floor = minimum_probe_interval(config)
    if config.probe_interval_s < floor * (1.0 - 1e-12):
        logging.warning(f"Probe interval {config.probe_interval_s:g} s below Zeno floor {floor:g} s")
        raise ZenoBudgetError(
            f"probe interval {config.probe_interval_s:g} s is below {floor:g} s for "
            f"perturbation {config.probe_perturbation:g} and budget {config.zeno_budget:g}")
    count = math.floor(config.horizon / config.probe_interval_s * (1.0 + 1e-12))
    return config.probe_interval_s * np.arange(1, count + 1)


@dataclass(frozen=True)
class ProbeRecord:
    t_probe_s: float
    freq_frac: float
    sigma: float
    counts: int = 0
    bright: bool = False


@dataclass(frozen=True)
class JumpRun:
    run_id: int
    decay_time_s: float
    probes: Tuple[ProbeRecord, ...]
    # first probe read bright after the decay, None past the horizon
    observed_decay_s: Optional[float] = None
    seed: Tuple[int, ...] = ()

    def __post_init__(self):
        times = [probe.t_probe_s for probe in self.probes]
        if any(t >= self.decay_time_s for t in times):
            raise LadderError(f"Run {self.run_id} has a probe at or after its decay")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise LadderError(f"Run {self.run_id} probe times are not strictly increasing")
