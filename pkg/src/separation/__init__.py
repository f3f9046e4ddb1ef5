from .cascade import (
    PurityReport, SeparationError, SeparationPlan, Stage, StageRow, cascade_suppression,
    purity_after, stage_table, stages_required,
)
