from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np

from ..nuclear_data import AVOGADRO, NuclideId, as_identity
from .chain import ChainError
from .solver import InventoryTrajectory

NEGLIGIBLE_THRESHOLD = 0.05


def classify_ratio(ratio: float, threshold: float = NEGLIGIBLE_THRESHOLD) -> str:
    if ratio == 0.0:
        return 'none'
    return 'small' if ratio < threshold else 'significant'


@dataclass(frozen=True)
class YieldReport:
    nuclide: NuclideId
    t_end_s: float
    atoms: float
    mass_g: float
    # max |series - least-squares line| / |series(t_end)|
    linearity: float
    contaminant_ratios: Dict[NuclideId, float] = field(default_factory=dict)
    classifications: Dict[NuclideId, str] = field(default_factory=dict)
    negligible_threshold: float = NEGLIGIBLE_THRESHOLD

    @property
    def negligible(self) -> bool:
        return all(ratio < self.negligible_threshold for ratio in self.contaminant_ratios.values())


def linearity_metric(times: np.ndarray, values: np.ndarray) -> float:
    """Max relative deviation of a series from its least-squares line"""
    if len(times) < 3 or values[-1] == 0.0:
        return 0.0
    slope, intercept = np.polyfit(times, values, 1)
    return float(np.max(np.abs(values - (slope * times + intercept))) / abs(values[-1]))


def yield_report(trajectory: InventoryTrajectory,
                 nuclide: Union[str, NuclideId],
                 t_end: Optional[float] = None,
                 negligible_threshold: float = NEGLIGIBLE_THRESHOLD) -> YieldReport:
    product = as_identity(nuclide)
    position = trajectory.index(product)
    end = trajectory.t_end if t_end is None else float(t_end)
    state = trajectory.state_at(end)
    atoms = float(state[position])

    inside = trajectory.times <= end
    series = trajectory.counts[position, inside]
    times = trajectory.times[inside]
    if len(times) and times[-1] != end:
        times = np.append(times, end)
        series = np.append(series, atoms)

    ratios: Dict[NuclideId, float] = {}
    if trajectory.chain is not None:
        for contaminant in trajectory.chain.capture_descendants(product):
            count = float(state[trajectory.index(contaminant)])
            ratios[contaminant] = count / atoms if atoms > 0 else 0.0

    return YieldReport(
        nuclide=product,
        t_end_s=end,
        atoms=atoms,
        mass_g=atoms * trajectory.molar_masses[position] / AVOGADRO,
        linearity=linearity_metric(times, series),
        contaminant_ratios=ratios,
        classifications={nid: classify_ratio(ratio, negligible_threshold) for nid, ratio in ratios.items()},
        negligible_threshold=negligible_threshold,
    )


def saturation_fraction(trajectory: InventoryTrajectory,
                        nuclide: Union[str, NuclideId],
                        t: Optional[float] = None) -> float:
    """Atoms of an activation/decay intermediate over inflow/removal at time t"""
    if not trajectory.matrices:
        raise ChainError("Trajectory carries no rate matrices")
    position = trajectory.index(nuclide)
    when = trajectory.t_end if t is None else float(t)
    matrix = trajectory.matrices[trajectory.segment_index(when)]
    state = trajectory.state_at(when)
    removal = -matrix[position, position]
    inflow = float(matrix[position] @ state + removal * state[position])
    if removal <= 0 or inflow <= 0:
        raise ChainError(f"{as_identity(nuclide)} has no saturation level at t={when}")
    return float(state[position]) * removal / inflow
