from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union
import math
import re

from ..nuclear_data import TIME_UNITS, NuclideId, NuclideRegistry, as_identity

_DURATION_PATTERN = re.compile(r'^\s*([0-9.eE+-]+)\s*(us|ms|s|m|h|d|y)?\s*$')


def parse_duration(text: str) -> float:
    """'5d' -> 432000.0; bare numbers are seconds"""
    match = _DURATION_PATTERN.match(text)
    if not match:
        raise ValueError(f"Cannot parse duration {text!r}")
    number, unit = match.groups()
    seconds = float(number) * TIME_UNITS[unit or 's']
    if not math.isfinite(seconds):
        raise ValueError(f"Non-finite duration {text!r}")
    return seconds


@dataclass(frozen=True)
class Segment:
    duration_s: float
    flux: float

    def __post_init__(self):
        if not math.isfinite(self.duration_s) or self.duration_s < 0:
            raise ValueError(f"Segment duration must be non-negative, got {self.duration_s}")
        if not math.isfinite(self.flux) or self.flux < 0:
            raise ValueError(f"Segment flux must be non-negative, got {self.flux}")


def parse_segments(text: str, default_flux: Optional[float] = None) -> Tuple[Segment, ...]:
    """Parse '5d@1.0e13,25d@0' into segments; a missing '@flux' uses default_flux"""
    segments = []
    for item in text.split(','):
        item = item.strip()
        if not item:
            continue
        duration, sep, flux = item.partition('@')
        if sep:
            flux_value = float(flux)
        elif default_flux is not None:
            flux_value = default_flux
        else:
            raise ValueError(f"Segment {item!r} has no flux and no default flux is set")
        segments.append(Segment(parse_duration(duration), flux_value))
    return tuple(segments)


@dataclass(frozen=True)
class IrradiationScenario:
    segments: Tuple[Segment, ...]
    initial_inventory: Mapping[NuclideId, float]
    grid_points: int = 300
    target: Optional[NuclideId] = None
    target_mass_g: Optional[float] = None
    enrichment: Mapping[NuclideId, float] = field(default_factory=dict)
    product: Optional[NuclideId] = None
    depth: int = 2
    negligible_threshold: float = 0.05
    name: str = ''

    def __post_init__(self):
        if self.grid_points < 1:
            raise ValueError(f"grid_points must be >= 1, got {self.grid_points}")
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        for nuclide, atoms in self.initial_inventory.items():
            if not math.isfinite(atoms) or atoms < 0:
                raise ValueError(f"Atom count for {nuclide} must be non-negative, got {atoms}")
        for nuclide, fraction in self.enrichment.items():
            if not 0.0 <= fraction <= 1.0:
                raise ValueError(f"Enrichment of {nuclide} outside [0, 1]: {fraction}")
        if math.fsum(self.enrichment.values()) > 1.0 + 1e-12:
            raise ValueError("Enrichment fractions sum above 1")
        if self.target_mass_g is not None and self.target_mass_g < 0:
            raise ValueError(f"target_mass_g must be non-negative, got {self.target_mass_g}")

    @classmethod
    def from_target(cls,
                    registry: NuclideRegistry,
                    target: Union[str, NuclideId],
                    mass_g: float,
                    segments: Sequence[Segment],
                    enrichment: float = 1.0,
                    impurities: Optional[Mapping[Union[str, NuclideId], float]] = None,
                    **kwargs) -> 'IrradiationScenario':
        """Derive the initial inventory from a target mass and its isotopic mass fractions"""
        target_id = as_identity(target)
        fractions: Dict[NuclideId, float] = {target_id: enrichment}
        for name, fraction in (impurities or {}).items():
            fractions[as_identity(name)] = fraction
        inventory = {}
        for nuclide_id, fraction in fractions.items():
            nuclide = registry.lookup(nuclide_id)
            inventory[nuclide_id] = nuclide.grams_to_atoms(mass_g * fraction)
        return cls(
            segments=tuple(segments),
            initial_inventory=inventory,
            target=target_id,
            target_mass_g=mass_g,
            enrichment=fractions,
            **kwargs,
        )

    @property
    def flux(self) -> float:
        return self.segments[0].flux if self.segments else 0.0

    @property
    def total_duration_s(self) -> float:
        return math.fsum(segment.duration_s for segment in self.segments)

    @property
    def boundaries(self) -> Tuple[float, ...]:
        """Segment end times, cumulative from 0"""
        bounds, elapsed = [], 0.0
        for segment in self.segments:
            elapsed += segment.duration_s
            bounds.append(elapsed)
        return tuple(bounds)

    @property
    def seeds(self) -> Tuple[NuclideId, ...]:
        return tuple(sorted(self.initial_inventory))
