from dataclasses import dataclass, field
from typing import Optional, Union
import logging
import math

import numpy as np
from scipy.optimize import least_squares

from ..business_logic.seeding import SeedLike, as_generator
from .clock import HyperfineClockSpec, RamseyConfig, observed_probability, ramsey_probability

FRINGE_POINTS = 9
# grid half-width as a fraction of pi / T_eff, the first fringe zero
FRINGE_SPAN = 0.8
MAX_ITERATIONS = 100
FIT_TOLERANCE = 1e-12


class FitError(RuntimeError):
    """Frequency fit did not converge"""


class FringeAmbiguityError(FitError):
    """Fit seed or result lies outside the central fringe"""


@dataclass(frozen=True, eq=False)
class FringeData:
    spec: HyperfineClockSpec
    config: RamseyConfig
    detunings_rad_s: np.ndarray
    successes: np.ndarray
    shots_per_point: int
    # expected counts instead of sampled ones
    analytic: bool = False
    true_offset: float = field(default=0.0, compare=False)

    @property
    def detunings_hz(self) -> np.ndarray:
        return self.detunings_rad_s / (2.0 * math.pi)

    @property
    def fractions(self) -> np.ndarray:
        return self.successes / self.shots_per_point


@dataclass(frozen=True)
class FrequencyEstimate:
    offset_fractional: float
    sigma_fractional: float
    center_rad_s: float
    sigma_rad_s: float
    iterations: int
    chi_square: float


def detuning_grid(config: RamseyConfig, points: int = FRINGE_POINTS, span: float = FRINGE_SPAN) -> np.ndarray:
    if points < 5:
        raise ValueError(f"Need at least 5 grid points across the central fringe, got {points}")
    if not 0 < span < 1:
        raise ValueError(f"span must be inside (0, 1), got {span}")
    edge = span * math.pi / config.effective_free_s
    return np.linspace(-edge, edge, points)


def simulate_fringe(spec: HyperfineClockSpec,
                    config: RamseyConfig,
                    true_fractional_offset: float,
                    seed: Union[SeedLike, np.random.Generator] = 0,
                    detunings_rad_s: Optional[np.ndarray] = None,
                    analytic: bool = False,
                    points: int = FRINGE_POINTS,
                    span: float = FRINGE_SPAN) -> FringeData:
    """Scan the local oscillator across the central fringe.

    Projection noise is binomial in the shots of each point; detection
    misclassification then moves shots between bright and dark.
    """
    grid = detuning_grid(config, points, span) if detunings_rad_s is None else np.asarray(detunings_rad_s, float)
    per_point = config.shots // len(grid)
    if per_point < 1:
        raise ValueError(f"{config.shots} shots cannot cover {len(grid)} grid points")
    center = 2.0 * math.pi * spec.nu0_hz * true_fractional_offset
    if analytic:
        successes = per_point * np.asarray(observed_probability(config, grid - center), dtype=float)
    else:
        rng = as_generator(seed)
        probability = np.asarray(ramsey_probability(config, grid - center), dtype=float)
        bright = rng.binomial(per_point, probability)
        if config.detection is not None:
            miss, false_bright = config.detection.error_rates
            bright = rng.binomial(bright, 1.0 - miss) + rng.binomial(per_point - bright, false_bright)
        successes = bright.astype(np.int64)
    return FringeData(spec=spec, config=config, detunings_rad_s=grid, successes=successes,
                      shots_per_point=per_point, analytic=analytic, true_offset=true_fractional_offset)


def _parabola_seed(grid: np.ndarray, fractions: np.ndarray, limit: float) -> float:
    peak = int(np.argmax(fractions))
    if peak == 0 or peak == len(grid) - 1:
        raise FringeAmbiguityError("Fringe maximum sits on the edge of the detuning grid")
    left, middle, right = fractions[peak - 1:peak + 2]
    curvature = left - 2.0 * middle + right
    step = grid[peak + 1] - grid[peak]
    seed = grid[peak] if curvature >= 0 else grid[peak] + step * (left - right) / (2.0 * curvature)
    if abs(seed) >= limit:
        raise FringeAmbiguityError(f"Fit seed {seed:.6g} rad/s is outside the central fringe")
    return float(seed)


def estimate_frequency(fringe: FringeData,
                       max_iterations: int = MAX_ITERATIONS,
                       tolerance: float = FIT_TOLERANCE) -> FrequencyEstimate:
    """Weighted least-squares fit of the fringe center as a fractional offset"""
    grid = fringe.detunings_rad_s
    if len(grid) < 5:
        raise ValueError("Need at least 5 fringe points")
    config = fringe.config
    shots = fringe.shots_per_point
    fractions = fringe.fractions
    limit = math.pi / config.effective_free_s
    seed = _parabola_seed(grid, fractions, limit)

    # fixed weights from continuity-corrected observed fractions
    smoothed = (fringe.successes + 0.5) / (shots + 1.0)
    weights = 1.0 / np.sqrt(smoothed * (1.0 - smoothed) / shots)

    def residuals(params):
        return (fractions - observed_probability(config, grid - params[0])) * weights

    result = least_squares(residuals, x0=[seed], jac='3-point', method='trf',
                           xtol=tolerance, ftol=tolerance, gtol=tolerance, max_nfev=max_iterations,
                           x_scale=[limit])
    if result.status <= 0:
        logging.error(f"Fringe fit failed after {result.nfev} evaluations: {result.message}")
        raise FitError(f"Fringe fit did not converge: {result.message}")
    center = float(result.x[0])
    if abs(center) >= limit:
        raise FringeAmbiguityError(f"Fitted center {center:.6g} rad/s is outside the central fringe")

    information = float(result.jac[:, 0] @ result.jac[:, 0])
    if information <= 0:
        raise FitError("Fringe carries no information on its center")
    sigma = 1.0 / math.sqrt(information)
    scale = 2.0 * math.pi * fringe.spec.nu0_hz
    return FrequencyEstimate(
        offset_fractional=center / scale,
        sigma_fractional=sigma / scale,
        center_rad_s=center,
        sigma_rad_s=sigma,
        iterations=int(result.nfev),
        chi_square=float(2.0 * result.cost),
    )
