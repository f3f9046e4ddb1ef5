from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import logging

from ..business_logic.seeding import CAMPAIGN_STREAM, SeedLike, derive_rng
from .clock import HyperfineClockSpec, RamseyConfig
from .comparison import DEFAULT_ALPHA, ComparisonResult, Reading, compare_ensembles, weighted_mean
from .drift import (
    AgeEstimate, DecayPrediction, DriftDomainError, DriftKind, DriftModel, ModelExcludedError,
    drift_fraction, estimate_age, predict_decay_time,
)
from .fringe import FRINGE_POINTS, FRINGE_SPAN, FitError, estimate_frequency, simulate_fringe

NEW = 'new'
NATURAL = 'natural'


@dataclass(frozen=True)
class CampaignConfig:
    ions_new: int = 8
    ions_natural: int = 8
    age_new_s: float = 0.0
    age_natural_s: float = 0.0
    epochs: int = 1
    epoch_spacing_s: float = 0.0
    # extra fractional offset of the new ensemble, on top of the drift model
    injected_offset: float = 0.0
    alpha: float = DEFAULT_ALPHA
    trap_new: str = 'A'
    trap_natural: str = 'A'

    def __post_init__(self):
        if self.ions_new < 2 or self.ions_natural < 2:
            raise ValueError("Each ensemble needs at least 2 ions")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.age_new_s < 0 or self.age_natural_s < 0 or self.epoch_spacing_s < 0:
            raise ValueError("Ages and epoch spacing must be non-negative")
        if self.epochs > 1 and self.epoch_spacing_s <= 0:
            raise ValueError("Several epochs need a positive epoch_spacing_s")

    def epoch_times(self) -> Tuple[float, ...]:
        return tuple(k * self.epoch_spacing_s for k in range(self.epochs))


@dataclass(frozen=True)
class CampaignResult:
    readings: Tuple[Reading, ...]
    comparison: ComparisonResult
    epoch_comparisons: Tuple[ComparisonResult, ...] = ()
    age_estimate: Optional[AgeEstimate] = None
    decay_prediction: Optional[DecayPrediction] = None
    drift_kind: DriftKind = DriftKind.NONE

    def ensemble(self, label: str) -> Tuple[Reading, ...]:
        return tuple(reading for reading in self.readings if reading.label == label)


def _readings_for(spec: HyperfineClockSpec, ramsey: RamseyConfig, drift: DriftModel,
                  campaign: CampaignConfig, seed: SeedLike, label: str, ensemble_key: int,
                  points: int, span: float) -> List[Reading]:
    ions = campaign.ions_new if label == NEW else campaign.ions_natural
    age = campaign.age_new_s if label == NEW else campaign.age_natural_s
    trap = campaign.trap_new if label == NEW else campaign.trap_natural
    readings = []
    for epoch_index, epoch in enumerate(campaign.epoch_times()):
        shift = drift_fraction(drift, age + epoch)
        if label == NEW:
            shift += campaign.injected_offset
        for ion in range(ions):
            rng = derive_rng(seed, CAMPAIGN_STREAM, ensemble_key, ion, epoch_index)
            fringe = simulate_fringe(spec, ramsey, shift, rng, points=points, span=span)
            estimate = estimate_frequency(fringe)
            readings.append(Reading(
                estimate=estimate.offset_fractional,
                sigma=estimate.sigma_fractional,
                ion_id=f"{label}-{ion:03d}",
                label=label,
                epoch_s=epoch,
                trap=trap,
            ))
    return readings


def simulate_campaign(spec: HyperfineClockSpec,
                      ramsey: RamseyConfig,
                      drift: DriftModel,
                      campaign: CampaignConfig,
                      seed: SeedLike = 0,
                      points: int = FRINGE_POINTS,
                      span: float = FRINGE_SPAN) -> CampaignResult:
    """Measure labelled new and natural ensembles over epochs and compare them.

    Every reading is one simulated fringe and its fit. Relaxation drift also
    yields an age estimate for the natural ensemble; pre-decay drift yields a
    decay-time prediction from the new ensemble's epoch means.
    """
    drift.check_perturbative([campaign.age_new_s + t for t in campaign.epoch_times()]
                             + [campaign.age_natural_s + t for t in campaign.epoch_times()])
    new = _readings_for(spec, ramsey, drift, campaign, seed, NEW, 0, points, span)
    natural = _readings_for(spec, ramsey, drift, campaign, seed, NATURAL, 1, points, span)

    epoch_results = []
    if campaign.epochs > 1:
        for epoch in campaign.epoch_times():
            pick_new = [r for r in new if r.epoch_s == epoch]
            pick_natural = [r for r in natural if r.epoch_s == epoch]
            epoch_results.append(compare_ensembles(pick_new, pick_natural, campaign.alpha))

    age = None
    prediction = None
    if drift.kind is DriftKind.RELAXATION:
        mean, sigma = weighted_mean(natural)
        try:
            age = estimate_age(drift.amplitude, drift.tau_relax_s, mean, sigma)
        except ModelExcludedError as e:
            logging.warning(f"Natural ensemble age not estimable: {e}")
    elif drift.kind is DriftKind.PREDECAY and campaign.epochs >= 2:
        times, means, sigmas = [], [], []
        for epoch in campaign.epoch_times():
            mean, sigma = weighted_mean([r for r in new if r.epoch_s == epoch])
            times.append(campaign.age_new_s + epoch)
            means.append(mean - campaign.injected_offset)
            sigmas.append(sigma)
        try:
            prediction = predict_decay_time(drift.kappa_s, times, means, sigmas)
        except (FitError, DriftDomainError) as e:
            logging.warning(f"Decay time not predictable from this campaign: {e}")

    result = CampaignResult(
        readings=tuple(new + natural),
        comparison=compare_ensembles(new, natural, campaign.alpha),
        epoch_comparisons=tuple(epoch_results),
        age_estimate=age,
        decay_prediction=prediction,
        drift_kind=drift.kind,
    )
    logging.info(f"Campaign on {spec.nuclide}: z={result.comparison.z_score:.3f} ({result.comparison.verdict})")
    return result
