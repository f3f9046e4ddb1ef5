from dataclasses import dataclass
from typing import Sequence, Tuple, Union
import math

import numpy as np
from scipy.stats import kstest, norm

from ..business_logic.seeding import BOOTSTRAP_STREAM, SeedLike, derive_rng
from .config import JumpRun, LadderDetection, LadderError

BOOTSTRAP_RESAMPLES = 1000
MIN_SAMPLES = 10
_CHUNK = 100


@dataclass(frozen=True)
class AgingEstimate:
    beta_per_s: float
    sigma_per_s: float
    lower_per_s: float
    upper_per_s: float
    z_score: float
    n_probes: int


@dataclass(frozen=True)
class MemorylessTest:
    statistic: float
    p_value: float
    mean_s: float
    resamples: int


def detect_aging(runs: Sequence[JumpRun], confidence: float = 0.95) -> AgingEstimate:
    """Pooled weighted regression of Clock-2 fractional frequency on time in e1"""
    probes = [probe for run in runs for probe in run.probes]
    if len(probes) < 2:
        raise LadderError(f"Need at least 2 probes across runs, got {len(probes)}")
    t = np.array([probe.t_probe_s for probe in probes])
    y = np.array([probe.freq_frac for probe in probes])
    w = 1.0 / np.array([probe.sigma for probe in probes]) ** 2
    t_mean = w @ t / w.sum()
    y_mean = w @ y / w.sum()
    spread = float(w @ (t - t_mean) ** 2)
    if spread <= 0.0:
        raise LadderError("All probes share one time; the aging slope is unidentifiable")
    beta = float(w @ ((t - t_mean) * (y - y_mean)) / spread)
    sigma = 1.0 / math.sqrt(spread)
    z = float(norm.ppf(0.5 + confidence / 2.0))
    return AgingEstimate(
        beta_per_s=beta,
        sigma_per_s=sigma,
        lower_per_s=beta - z * sigma,
        upper_per_s=beta + z * sigma,
        z_score=beta / sigma,
        n_probes=len(probes),
    )


def _exponential_ks(samples: np.ndarray) -> np.ndarray:
    """KS distance of each row from an exponential with the row's ML mean"""
    ordered = np.sort(samples, axis=-1)
    n = ordered.shape[-1]
    cdf = -np.expm1(-ordered / ordered.mean(axis=-1, keepdims=True))
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return np.maximum((upper - cdf).max(axis=-1), (cdf - lower).max(axis=-1))


def test_memoryless(decay_times: Sequence[float],
                    resamples: int = BOOTSTRAP_RESAMPLES,
                    seed: Union[SeedLike, np.random.Generator] = 0) -> MemorylessTest:
    """KS test against an exponential with fitted rate, p-value by parametric bootstrap"""
    samples = np.asarray(decay_times, dtype=float)
    if len(samples) < MIN_SAMPLES:
        raise LadderError(f"Need at least {MIN_SAMPLES} decay times, got {len(samples)}")
    if np.any(~(samples > 0)):
        raise LadderError("Decay times must be positive")
    if resamples < 1:
        raise ValueError(f"resamples must be >= 1, got {resamples}")
    mean = float(samples.mean())
    statistic = float(kstest(samples, 'expon', args=(0.0, mean)).statistic)

    # the statistic is scale free, so unit-rate resamples suffice
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, BOOTSTRAP_STREAM)
    exceed = 0
    for start in range(0, resamples, _CHUNK):
        rows = min(_CHUNK, resamples - start)
        simulated = _exponential_ks(rng.standard_exponential((rows, len(samples))))
        exceed += int(np.count_nonzero(simulated >= statistic))
    return MemorylessTest(
        statistic=statistic,
        p_value=(exceed + 1) / (resamples + 1),
        mean_s=mean,
        resamples=resamples,
    )


# keep pytest from collecting the function when a test module imports it
test_memoryless.__test__ = False


def detection_misclassification(detection: LadderDetection,
                                draws: int,
                                seed: Union[SeedLike, np.random.Generator] = 0) -> Tuple[float, float]:
    """Empirical (bright-miss, dark-false) rates over Poisson count draws"""
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed)
    bright = rng.poisson(detection.bright_mean, draws)
    dark = rng.poisson(detection.dark_mean, draws)
    return (float(np.mean(bright < detection.threshold)),
            float(np.mean(dark >= detection.threshold)))
