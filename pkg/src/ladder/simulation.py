from typing import List, Optional, Union
import math

import numpy as np

from ..business_logic.seeding import LADDER_STREAM, SeedLike, derive_seed
from .config import JumpLadderConfig, JumpRun, ProbeRecord, make_schedule


def sample_decay_time(config: JumpLadderConfig, rng: np.random.Generator) -> float:
    """Decay of e1 under hazard h0 (1 + slope t), by inverting the cumulative hazard"""
    scaled = rng.standard_exponential() / config.hazard
    slope = config.hazard_slope_per_s
    if slope == 0.0:
        return float(scaled)
    return float(2.0 * scaled / (1.0 + math.sqrt(1.0 + 2.0 * slope * scaled)))


def _first_bright(times: np.ndarray, bright_mean: float, threshold: int,
                  rng: np.random.Generator, chunk: int = 16) -> Optional[float]:
    """Time of the first post-decay probe whose counts clear the threshold"""
    for start in range(0, len(times), chunk):
        block = times[start:start + chunk]
        hits = np.nonzero(rng.poisson(bright_mean, len(block)) >= threshold)[0]
        if len(hits):
            return float(block[hits[0]])
    return None


def simulate_run(config: JumpLadderConfig,
                 seed: Union[SeedLike, np.random.SeedSequence] = 0,
                 run_id: int = 0,
                 schedule: Optional[np.ndarray] = None) -> JumpRun:
    """One e1 residence: Clock-2 probes until the jump, then telegraph detection"""
    if schedule is None:
        schedule = make_schedule(config)
    sequence = seed if isinstance(seed, np.random.SeedSequence) else derive_seed(seed)
    rng = np.random.default_rng(sequence)

    decay = sample_decay_time(config, rng)
    before = schedule[schedule < decay]
    noise = rng.standard_normal(len(before))
    estimates = config.aging_beta_per_s * before + config.probe_sigma_fractional * noise

    detection = config.detection
    dark_counts = rng.poisson(detection.dark_mean, len(before))
    observed = _first_bright(schedule[schedule >= decay], detection.bright_mean, detection.threshold, rng)

    probes = tuple(
        ProbeRecord(
            t_probe_s=float(t),
            freq_frac=float(estimate),
            sigma=config.probe_sigma_fractional,
            counts=int(count),
            bright=bool(count >= detection.threshold),
        )
        for t, estimate, count in zip(before, estimates, dark_counts)
    )
    return JumpRun(run_id=run_id, decay_time_s=decay, probes=probes, observed_decay_s=observed,
                   seed=(int(sequence.entropy),) + tuple(sequence.spawn_key))


def simulate_runs(config: JumpLadderConfig, master_seed: SeedLike, n: int) -> List[JumpRun]:
    """n independent runs; run i always draws from the stream keyed by i"""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    schedule = make_schedule(config)
    return [simulate_run(config, derive_seed(master_seed, LADDER_STREAM, run_id), run_id, schedule)
            for run_id in range(n)]
