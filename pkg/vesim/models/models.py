from dataclasses import dataclass, field, replace
from typing import List, Literal, Optional

import numpy as np

from vesim.errors import InvalidInputError
from vesim.geometry.spectral_curve import ClosedCurve
from vesim.simulation.analysis import inclination_angle


@dataclass(frozen=True, eq=False)
class VesicleState:
    curve: ClosedCurve
    tension: np.ndarray
    nu: float = 1.0
    kappa_b: float = 1.0

    def __post_init__(self):
        if not self.nu > 0:
            raise InvalidInputError(f"viscosity contrast must be positive, got nu={self.nu}")
        if not self.kappa_b > 0:
            raise InvalidInputError(f"bending modulus must be positive, got kappa_b={self.kappa_b}")
        tension = np.array(self.tension, dtype=float)
        if tension.shape != (self.curve.n,):
            raise InvalidInputError(
                f"tension has shape {tension.shape}, curve has N={self.curve.n}"
            )
        tension.setflags(write=False)
        object.__setattr__(self, "tension", tension)

    @classmethod
    def relaxed(cls, curve: ClosedCurve, nu: float = 1.0, kappa_b: float = 1.0) -> "VesicleState":
        """State with the zero tension field."""
        return cls(curve, np.zeros(curve.n), nu, kappa_b)

    @property
    def n(self) -> int:
        return self.curve.n

    @property
    def alpha(self) -> float:
        # boundary coefficient of the velocity jump across a membrane
        return (1.0 + self.nu) / 2.0

    def evolve(self, points: np.ndarray, tension: Optional[np.ndarray] = None) -> "VesicleState":
        return replace(
            self,
            curve=ClosedCurve(points),
            tension=self.tension if tension is None else tension,
        )

    def with_tension(self, tension: np.ndarray) -> "VesicleState":
        return replace(self, tension=tension)


@dataclass(frozen=True)
class FarFieldFlow:
    kind: Literal["shear", "extensional", "quiescent"] = "shear"
    rate: float = 1.0

    def __post_init__(self):
        if self.kind not in ("shear", "extensional", "quiescent"):
            raise InvalidInputError(f"unknown far-field flow {self.kind!r}")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        x, y = points[:, 0], points[:, 1]
        if self.kind == "shear":
            return np.column_stack([self.rate * y, np.zeros_like(y)])
        if self.kind == "extensional":
            return np.column_stack([-self.rate * x, self.rate * y])
        return np.zeros_like(points)


@dataclass(frozen=True, eq=False)
class Suspension:
    vesicles: tuple
    flow: FarFieldFlow = FarFieldFlow()
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "vesicles", tuple(self.vesicles))
        if not self.vesicles:
            raise InvalidInputError("a suspension needs at least one vesicle")

    @property
    def m(self) -> int:
        return len(self.vesicles)

    @property
    def curves(self) -> List[ClosedCurve]:
        return [v.curve for v in self.vesicles]

    @property
    def areas(self) -> np.ndarray:
        return np.array([v.curve.area for v in self.vesicles])

    @property
    def lengths(self) -> np.ndarray:
        return np.array([v.curve.length for v in self.vesicles])

    def advanced(self, vesicles, t: float) -> "Suspension":
        return replace(self, vesicles=tuple(vesicles), t=t)

    def boundaries_intersect(self) -> bool:
        """Diagnostic only: True if any node of one vesicle lies inside another."""
        curves = self.curves
        for j, source in enumerate(curves):
            for k, target in enumerate(curves):
                if j != k and np.any(_inside(source.points, target.points)):
                    return True
        return False


def _inside(polygon: np.ndarray, points: np.ndarray) -> np.ndarray:
    # even-odd ray casting against the polygon through the curve nodes
    x0, y0 = polygon[:, 0], polygon[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    px, py = points[:, 0:1], points[:, 1:2]
    straddles = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        crossing = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    return np.count_nonzero(straddles & (px < crossing), axis=1) % 2 == 1


@dataclass
class StepRecord:
    t: float
    dt: float
    accepted: bool
    e_A: float
    e_L: float
    gmres_iters: int
    matvecs_cum: int
    wall_time: float


@dataclass
class RunDiagnostics:
    mode: Literal["fixed", "adaptive"]
    records: List[StepRecord] = field(default_factory=list)
    tracker_times: List[float] = field(default_factory=list)
    tracker_points: List[np.ndarray] = field(default_factory=list)
    centers: List[np.ndarray] = field(default_factory=list)
    inclinations: List[np.ndarray] = field(default_factory=list)
    snapshots: List[Suspension] = field(default_factory=list)
    e_A: float = 0.0
    e_L: float = 0.0
    matvecs: int = 0
    cpu: float = 0.0
    aborted: Optional[str] = None

    @property
    def accepts(self) -> int:
        return sum(1 for r in self.records if r.accepted)

    @property
    def rejects(self) -> int:
        return sum(1 for r in self.records if not r.accepted)

    def track(self, suspension: Suspension) -> None:
        self.tracker_times.append(suspension.t)
        self.tracker_points.append(np.array([v.curve.points[0] for v in suspension.vesicles]))
        self.centers.append(np.array([v.curve.centroid for v in suspension.vesicles]))
        self.inclinations.append(np.array([inclination_angle(v.curve) for v in suspension.vesicles]))

    @property
    def tracker_trajectory(self) -> np.ndarray:
        """Array of shape (samples, M, 2)."""
        return np.array(self.tracker_points)
