from .clock import (
    DetectionModel, HyperfineClockSpec, RamseyConfig, detection_error_rates, fringe_fwhm,
    moment_to_frequency, observed_probability, projection_noise_sigma, ramsey_probability,
    required_shots,
)
from .fringe import (
    FitError, FrequencyEstimate, FringeAmbiguityError, FringeData, detuning_grid, estimate_frequency,
    simulate_fringe,
)
from .drift import (
    AgeEstimate, DecayPrediction, DriftDomainError, DriftKind, DriftModel, ModelExcludedError,
    drift_fraction, estimate_age, predict_decay_time,
)
from .comparison import (
    ComparisonResult, DegenerateEnsembleError, Reading, compare_ensembles, weighted_mean,
)
from .campaign import NATURAL, NEW, CampaignConfig, CampaignResult, simulate_campaign
