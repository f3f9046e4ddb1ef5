from .config import (
    HORIZON_LIFETIMES, ZENO_BUDGET, JumpLadderConfig, JumpRun, LadderDetection, LadderError,
    ProbeRecord, ZenoBudgetError, make_schedule, minimum_probe_interval,
)
from .simulation import sample_decay_time, simulate_run, simulate_runs
from .analysis import (
    AgingEstimate, MemorylessTest, detect_aging, detection_misclassification, test_memoryless,
)
