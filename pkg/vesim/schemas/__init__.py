# Import all schemas to make them available when importing from vesim.schemas
from vesim.schemas.schemas import (
    LayerPotentialConfig, GmresConfig, ControllerConfig, SolverSettings,
    FlowSpec, EllipseShape, PointFileShape, VesicleSpec,
    FixedTime, AdaptiveTime, OutputSpec, RunConfig,
    RunSummary, ConvergenceRow, ConvergenceSummary
)
