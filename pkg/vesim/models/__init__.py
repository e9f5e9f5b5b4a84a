# Import all models to make them available when importing from vesim.models
from vesim.models.models import VesicleState, FarFieldFlow, Suspension, StepRecord, RunDiagnostics
