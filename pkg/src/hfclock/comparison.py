from dataclasses import dataclass
from typing import Sequence, Tuple
import math

import numpy as np
from scipy.stats import norm

DEFAULT_ALPHA = 0.05


class DegenerateEnsembleError(ValueError):
    """Ensemble too small or without finite positive errors"""


@dataclass(frozen=True)
class Reading:
    estimate: float
    sigma: float
    ion_id: str = ''
    label: str = ''
    epoch_s: float = 0.0
    trap: str = ''


@dataclass(frozen=True)
class ComparisonResult:
    delta_fractional: float
    sigma_fractional: float
    z_score: float
    distinguishable: bool
    alpha: float
    mean_new: float
    mean_natural: float
    # sqrt of reduced chi-square of all readings about their ensemble means
    birge_ratio: float

    @property
    def verdict(self) -> str:
        return 'distinguishable' if self.distinguishable else 'consistent'


def weighted_mean(readings: Sequence[Reading]) -> Tuple[float, float]:
    """Inverse-variance weighted mean and its standard error"""
    values = np.array([reading.estimate for reading in readings], dtype=float)
    sigmas = np.array([reading.sigma for reading in readings], dtype=float)
    if not np.all(np.isfinite(values)) or not np.all(np.isfinite(sigmas)) or np.any(sigmas <= 0):
        raise DegenerateEnsembleError("Readings need finite estimates and finite positive sigmas")
    weights = 1.0 / sigmas ** 2
    total = float(weights.sum())
    return float(weights @ values / total), 1.0 / math.sqrt(total)


def _chi_square(readings: Sequence[Reading], mean: float) -> float:
    return math.fsum(((reading.estimate - mean) / reading.sigma) ** 2 for reading in readings)


def compare_ensembles(readings_new: Sequence[Reading],
                      readings_natural: Sequence[Reading],
                      alpha: float = DEFAULT_ALPHA) -> ComparisonResult:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be inside (0, 1), got {alpha}")
    for name, readings in (('new', readings_new), ('natural', readings_natural)):
        if len(readings) < 2:
            raise DegenerateEnsembleError(f"The {name} ensemble needs at least 2 readings, got {len(readings)}")
    mean_new, sigma_new = weighted_mean(readings_new)
    mean_natural, sigma_natural = weighted_mean(readings_natural)
    delta = mean_new - mean_natural
    sigma = math.hypot(sigma_new, sigma_natural)
    z = delta / sigma
    dof = len(readings_new) + len(readings_natural) - 2
    chi_square = _chi_square(readings_new, mean_new) + _chi_square(readings_natural, mean_natural)
    return ComparisonResult(
        delta_fractional=delta,
        sigma_fractional=sigma,
        z_score=z,
        distinguishable=abs(z) > float(norm.ppf(1.0 - alpha / 2.0)),
        alpha=alpha,
        mean_new=mean_new,
        mean_natural=mean_natural,
        birge_ratio=math.sqrt(chi_square / dof),
    )
