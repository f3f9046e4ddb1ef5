from .scenario import IrradiationScenario, Segment, parse_duration, parse_segments
from .chain import CaptureEdge, ChainError, ChainSpec, DecayEdge, build_chain
from .solver import (
    CONFLUENCE_TOLERANCE, DegenerateChainError, InventoryTrajectory, analytic_chain,
    burnup_matrix, integrate_rk4, solve_inventory,
)
from .report import (
    NEGLIGIBLE_THRESHOLD, YieldReport, classify_ratio, linearity_metric, saturation_fraction,
    yield_report,
)
