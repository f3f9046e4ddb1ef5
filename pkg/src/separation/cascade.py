from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union
import logging
import math

from ..nuclear_data import NuclideId, as_identity

COMPOSITION_TOLERANCE = 1e-9


class SeparationError(ValueError):
    """Invalid separation plan or unreachable target"""


@dataclass(frozen=True)
class Stage:
    suppression: float
    recovery: float = 1.0
    label: str = ''

    def __post_init__(self):
        if not math.isfinite(self.suppression) or self.suppression < 1.0:
            raise SeparationError(f"Stage suppression must be >= 1, got {self.suppression}")
        if not 0.0 < self.recovery <= 1.0:
            raise SeparationError(f"Stage recovery must be in (0, 1], got {self.recovery}")


@dataclass(frozen=True)
class SeparationPlan:
    stages: Tuple[Stage, ...]
    composition: Mapping[NuclideId, float]
    product: Optional[NuclideId] = None
    # excite/ionize wavelengths in nm, descriptive only
    wavelengths_nm: Tuple[float, ...] = ()
    target_suppression: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'stages', tuple(self.stages))
        object.__setattr__(self, 'composition',
                           {as_identity(key): float(value) for key, value in self.composition.items()})
        if self.product is not None:
            object.__setattr__(self, 'product', as_identity(self.product))
        for nuclide, fraction in self.composition.items():
            if not 0.0 <= fraction <= 1.0:
                raise SeparationError(f"Mass fraction of {nuclide} outside [0, 1]: {fraction}")
        if self.composition:
            total = math.fsum(self.composition.values())
            if abs(total - 1.0) > COMPOSITION_TOLERANCE:
                raise SeparationError(f"Composition sums to {total:g}, expected 1")
        if self.target_suppression is not None and self.target_suppression < 1.0:
            raise SeparationError(f"target_suppression must be >= 1, got {self.target_suppression}")

    @classmethod
    def from_factors(cls,
                     factors: Sequence[float],
                     composition: Mapping[Union[str, NuclideId], float],
                     product: Optional[Union[str, NuclideId]] = None,
                     recovery: Union[float, Sequence[float]] = 1.0,
                     **kwargs) -> 'SeparationPlan':
        recoveries = [recovery] * len(factors) if isinstance(recovery, (int, float)) else list(recovery)
        if len(recoveries) != len(factors):
            raise SeparationError("One recovery efficiency per stage is required")
        stages = tuple(Stage(float(s), float(r)) for s, r in zip(factors, recoveries))
        return cls(stages=stages, composition=composition,
                   product=as_identity(product) if product is not None else None, **kwargs)


@dataclass(frozen=True)
class PurityReport:
    composition: Dict[NuclideId, float]
    recovered_fraction: float
    suppression: float
    stages_required: Optional[int] = None


@dataclass(frozen=True)
class StageRow:
    stage: int
    cumulative_suppression: float
    product_purity: float
    contaminant_fraction: float
    cumulative_recovery: float


def _suppression_of(stages: Sequence[Stage]) -> float:
    # overflows to inf, which leaves contaminant fractions at 0.0
    return math.prod(stage.suppression for stage in stages)


def _power(base: float, exponent: int) -> float:
    try:
        return base ** exponent
    except OverflowError:
        return math.inf


def cascade_suppression(plan: SeparationPlan) -> float:
    """Product of the per-stage suppression factors"""
    return _suppression_of(plan.stages)


def stages_required(per_stage: float, target: float) -> int:
    """Smallest k with per_stage**k >= target"""
    if not math.isfinite(target) or target < 1.0:
        raise SeparationError(f"target must be >= 1, got {target}")
    if target == 1.0:
        return 0
    if per_stage <= 1.0:
        raise SeparationError(f"per-stage factor {per_stage} can never reach {target:g}")
    k = max(1, math.ceil(math.log(target) / math.log(per_stage)))
    # log rounding can land one off in either direction
    while k > 1 and _power(per_stage, k - 1) >= target:
        k -= 1
    while _power(per_stage, k) < target:
        k += 1
    return k


def _composition_after(plan: SeparationPlan, stages: Sequence[Stage]) -> Dict[NuclideId, float]:
    suppression = _suppression_of(stages)
    attenuated = {
        nuclide: fraction if nuclide == plan.product else fraction / suppression
        for nuclide, fraction in plan.composition.items()
    }
    total = math.fsum(attenuated.values())
    return {nuclide: value / total for nuclide, value in attenuated.items()}


def _check_product(plan: SeparationPlan) -> NuclideId:
    if plan.product is None or plan.product not in plan.composition:
        raise SeparationError(f"Product {plan.product} is absent from the composition")
    if plan.composition[plan.product] == 0.0:
        raise SeparationError(f"Product {plan.product} has zero mass fraction")
    return plan.product


def purity_after(plan: SeparationPlan) -> PurityReport:
    product = _check_product(plan)
    recovery = math.prod(stage.recovery for stage in plan.stages)
    required = None
    if plan.target_suppression is not None and plan.stages:
        required = stages_required(plan.stages[0].suppression, plan.target_suppression)
    report = PurityReport(
        composition=_composition_after(plan, plan.stages),
        recovered_fraction=plan.composition[product] * recovery,
        suppression=cascade_suppression(plan),
        stages_required=required,
    )
    logging.info(f"Separation of {product}: suppression {report.suppression:g}, "
                 f"purity {report.composition[product]:.12g}")
    return report


def stage_table(plan: SeparationPlan) -> List[StageRow]:
    """Cumulative suppression, purity and recovery after each stage, stage 0 is the feed"""
    product = _check_product(plan)
    rows = []
    for count in range(len(plan.stages) + 1):
        applied = plan.stages[:count]
        composition = _composition_after(plan, applied)
        purity = composition[product]
        rows.append(StageRow(
            stage=count,
            cumulative_suppression=_suppression_of(applied),
            product_purity=purity,
            contaminant_fraction=math.fsum(v for k, v in composition.items() if k != product),
            cumulative_recovery=math.prod(stage.recovery for stage in applied),
        ))
    return rows
