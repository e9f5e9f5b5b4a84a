import math
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from vesim.config import (
    GMRES_MAX_ITER,
    GMRES_TOL,
    NEAR_THRESHOLD_FACTOR,
    OUTPUT_DIR,
    UPSAMPLING_FACTOR,
)


# Numerical settings
class LayerPotentialConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    upsampling_factor: int = Field(default=UPSAMPLING_FACTOR, ge=2)
    near_threshold_factor: float = Field(default=NEAR_THRESHOLD_FACTOR, gt=0)
    # number of off-surface interpolation points along the normal ray
    interpolation_points: int = Field(default=5, ge=2)
    viscosity: float = Field(default=1.0, gt=0)


class GmresConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    tolerance: float = Field(default=GMRES_TOL, ge=1e-14)
    max_iterations: int = Field(default=GMRES_MAX_ITER, ge=1)
    restart: Optional[int] = Field(default=None, ge=1)


class ControllerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    beta_down: float = 0.6
    beta_up: float = 1.5
    beta_scale: float = math.sqrt(0.9)
    order: Optional[int] = Field(default=None, ge=1)

    @field_validator("beta_scale")
    def check_beta_scale(cls, v):
        if not 0 < v < 1:
            raise ValueError("beta_scale must lie in (0, 1)")
        return v

    @model_validator(mode="after")
    def check_beta_bracket(self):
        if not 0 < self.beta_down < 1 < self.beta_up:
            raise ValueError("controller betas must satisfy 0 < beta_down < 1 < beta_up")
        return self


class SolverSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    layer: LayerPotentialConfig = LayerPotentialConfig()
    gmres: GmresConfig = GmresConfig()


# Run document
class FlowSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["shear", "extensional", "quiescent"] = "shear"
    rate: float = 1.0


class EllipseShape(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["ellipse"] = "ellipse"
    a: float = Field(gt=0)
    b: float = Field(gt=0)


class PointFileShape(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["file"] = "file"
    path: str


Shape = Annotated[Union[EllipseShape, PointFileShape], Field(discriminator="kind")]


class VesicleSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shape: Shape
    center: Tuple[float, float] = (0.0, 0.0)
    rotation: float = 0.0
    nu: float = Field(default=1.0, gt=0)
    kappa_b: float = Field(default=1.0, gt=0)
    N: int = 64

    @field_validator("N")
    def check_point_count(cls, v):
        if v < 8 or v % 2:
            raise ValueError("N must be an even integer >= 8")
        return v


class FixedTime(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["fixed"] = "fixed"
    steps: int = Field(ge=1)


class AdaptiveTime(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["adaptive"] = "adaptive"
    tolerance: float = Field(gt=0)
    initial_dt: Optional[float] = Field(default=None, gt=0)
    dt_floor: Optional[float] = Field(default=None, gt=0)


TimeMode = Annotated[Union[FixedTime, AdaptiveTime], Field(discriminator="mode")]


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = OUTPUT_DIR
    snapshot_interval: Optional[float] = Field(default=None, gt=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    flow: FlowSpec = FlowSpec()
    vesicles: List[VesicleSpec] = Field(min_length=1)
    time: TimeMode
    T: float = Field(default=1.0, gt=0)
    n_sdc: int = Field(default=1, ge=0)
    p: int = Field(default=5, ge=3)
    gmres: GmresConfig = GmresConfig()
    layer: LayerPotentialConfig = LayerPotentialConfig()
    controller: ControllerConfig = ControllerConfig()
    output: OutputSpec = OutputSpec()
    seed: int = 0
    perturbation: float = Field(default=0.0, ge=0)

    @property
    def solver_settings(self) -> SolverSettings:
        return SolverSettings(layer=self.layer, gmres=self.gmres)


# Output documents
class RunSummary(BaseModel):
    mode: Literal["fixed", "adaptive"]
    steps: Optional[int] = None
    tolerance: Optional[float] = None
    e_A: Optional[float] = None
    e_L: Optional[float] = None
    accepts: int = 0
    rejects: int = 0
    matvecs: int = 0
    cpu: float = 0.0
    final_time: float = 0.0
    aborted: Optional[str] = None


class ConvergenceRow(BaseModel):
    steps: int
    e_A: float
    e_L: float
    matvecs: int
    cpu: float


class ConvergenceSummary(BaseModel):
    rows: List[ConvergenceRow]
    order_area: Optional[float] = None
    order_length: Optional[float] = None
