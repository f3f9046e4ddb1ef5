from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union
import logging
import math

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import norm

from .fringe import FitError

# fractional moment shifts must stay perturbative
PERTURBATIVE_LIMIT = 1e-3


class ModelExcludedError(ValueError):
    """Measured shift cannot be produced by the drift model"""


class DriftDomainError(ValueError):
    """Drift model evaluated outside its domain"""


class DriftKind(Enum):
    NONE = 'none'
    RELAXATION = 'relaxation'
    PREDECAY = 'predecay'


@dataclass(frozen=True)
class DriftModel:
    kind: DriftKind = DriftKind.NONE
    amplitude: float = 0.0
    tau_relax_s: Optional[float] = None
    kappa_s: float = 0.0
    decay_time_s: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', DriftKind(self.kind))
        if self.kind is DriftKind.RELAXATION:
            if self.tau_relax_s is None or not self.tau_relax_s > 0:
                raise ValueError(f"Relaxation drift needs tau_relax_s > 0, got {self.tau_relax_s}")
            if abs(self.amplitude) >= PERTURBATIVE_LIMIT:
                raise DriftDomainError(f"Relaxation amplitude {self.amplitude:g} is not perturbative")
        elif self.kind is DriftKind.PREDECAY:
            if self.decay_time_s is None or not self.decay_time_s > 0:
                raise ValueError(f"Pre-decay drift needs decay_time_s > 0, got {self.decay_time_s}")
            if self.kappa_s < 0:
                raise ValueError(f"kappa_s must be non-negative, got {self.kappa_s}")

    @classmethod
    def none(cls) -> 'DriftModel':
        return cls()

    @classmethod
    def relaxation(cls, amplitude: float, tau_relax_s: float) -> 'DriftModel':
        return cls(DriftKind.RELAXATION, amplitude=amplitude, tau_relax_s=tau_relax_s)

    @classmethod
    def predecay(cls, kappa_s: float, decay_time_s: float) -> 'DriftModel':
        return cls(DriftKind.PREDECAY, kappa_s=kappa_s, decay_time_s=decay_time_s)

    def check_perturbative(self, times_s: Sequence[float]):
        shifts = np.abs(np.asarray(drift_fraction(self, np.asarray(times_s, dtype=float))))
        if np.any(shifts >= PERTURBATIVE_LIMIT):
            raise DriftDomainError(f"Drift reaches {shifts.max():g}, beyond the perturbative regime")


def drift_fraction(model: DriftModel, t_since_creation_s: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Fractional moment shift at a given age"""
    t = np.asarray(t_since_creation_s, dtype=float)
    if np.any(t < 0):
        raise DriftDomainError("Age must be non-negative")
    if model.kind is DriftKind.NONE:
        shift = np.zeros_like(t)
    elif model.kind is DriftKind.RELAXATION:
        shift = model.amplitude * np.exp(-t / model.tau_relax_s)
    else:
        if np.any(t >= model.decay_time_s):
            raise DriftDomainError(f"Pre-decay drift undefined at or after t_d={model.decay_time_s:g} s")
        shift = model.kappa_s / (model.decay_time_s - t)
    return float(shift) if shift.ndim == 0 else shift


@dataclass(frozen=True)
class AgeEstimate:
    age_s: float
    lower_s: float
    upper_s: float
    confidence: float


def _quantile(confidence: float) -> float:
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must be inside (0, 1), got {confidence}")
    return float(norm.ppf(0.5 + confidence / 2.0))


def estimate_age(amplitude: float,
                 tau_relax_s: float,
                 measured: float,
                 sigma: float = 0.0,
                 confidence: float = 0.95) -> AgeEstimate:
    """Invert the relaxation family A exp(-t / tau) for the age t"""
    if not amplitude > 0 or not tau_relax_s > 0:
        raise ValueError("amplitude and tau_relax_s must be positive")
    if not 0 < measured <= amplitude:
        raise ModelExcludedError(f"Measured shift {measured:g} is outside (0, {amplitude:g}]")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    z = _quantile(confidence)

    def invert(value: float) -> float:
        if value <= 0:
            return math.inf
        if value >= amplitude:
            return 0.0
        return tau_relax_s * math.log(amplitude / value)

    # a larger measured shift means a younger sample
    return AgeEstimate(
        age_s=invert(measured),
        lower_s=invert(measured + z * sigma),
        upper_s=invert(measured - z * sigma),
        confidence=confidence,
    )


@dataclass(frozen=True)
class DecayPrediction:
    decay_time_s: float
    sigma_s: float
    lower_s: float
    upper_s: float
    # time left after the last measurement
    remaining_s: float
    confidence: float
    iterations: int


def predict_decay_time(kappa_s: float,
                       times_s: Sequence[float],
                       measured: Sequence[float],
                       sigmas: Optional[Sequence[float]] = None,
                       confidence: float = 0.95,
                       max_iterations: int = 100,
                       tolerance: float = 1e-12) -> DecayPrediction:
    """Fit kappa / (t_d - t) to a shift series for the decay time t_d.

    With sigmas the interval uses them as absolute errors; without, the
    residual scatter sets the scale.
    """
    if not kappa_s > 0:
        raise DriftDomainError("kappa_s must be positive for the decay time to be identifiable")
    t = np.asarray(times_s, dtype=float)
    y = np.asarray(measured, dtype=float)
    if len(t) < 2 or len(t) != len(y):
        raise ValueError("Need at least two (time, shift) pairs of equal length")
    if sigmas is None:
        weights = np.ones_like(t)
    else:
        s = np.asarray(sigmas, dtype=float)
        if len(s) != len(t) or np.any(~(s > 0)):
            raise ValueError("sigmas must be positive, one per point")
        weights = 1.0 / s

    positive = y > 0
    if not positive.any():
        raise DriftDomainError("No positive shift to anchor the decay-time guess")
    guess = float(np.median(t[positive] + kappa_s / y[positive]))
    floor = float(t.max())
    span = max(abs(floor), 1.0)
    guess = max(guess, floor + 1e-6 * span)
    scale = max(guess - floor, 1e-6 * span)

    def residuals(params):
        return (y - kappa_s / (params[0] - t)) * weights

    result = least_squares(residuals, x0=[guess], bounds=([np.nextafter(floor, np.inf)], [np.inf]),
                           method='trf', xtol=tolerance, ftol=tolerance, gtol=tolerance,
                           max_nfev=max_iterations, x_scale=[scale])
    if result.status <= 0:
        logging.error(f"Decay-time fit failed: {result.message}")
        raise FitError(f"Decay-time fit did not converge: {result.message}")
    decay_time = float(result.x[0])
    information = float(result.jac[:, 0] @ result.jac[:, 0])
    if information <= 0:
        raise FitError("Shift series carries no information on the decay time")
    variance = 1.0 / information
    if sigmas is None:
        dof = len(t) - 1
        variance *= float(2.0 * result.cost) / dof
    sigma = math.sqrt(variance)
    z = _quantile(confidence)
    return DecayPrediction(
        decay_time_s=decay_time,
        sigma_s=sigma,
        lower_s=decay_time - z * sigma,
        upper_s=decay_time + z * sigma,
        remaining_s=decay_time - floor,
        confidence=confidence,
        iterations=int(result.nfev),
    )
