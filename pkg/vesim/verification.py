"""Built-in identity checks run by ``vesim verify``."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from vesim.geometry.membrane import bending_apply, surface_divergence, traction
from vesim.geometry.spectral_curve import ClosedCurve, fourier_derivative, parameter_nodes
from vesim.models.models import FarFieldFlow, VesicleState
from vesim.potentials.stokes import LayerPotentials, dlp_apply
from vesim.solvers.imex import InteractionFrame, SolverContext, provisional_rhs, provisional_system
from vesim.timestepping.controller import ControllerState, accept_step, dt_optimal, next_dt
from vesim.timestepping.lobatto import lobatto_grid

logger = logging.getLogger(__name__)


@dataclass
class VerificationResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)


Check = Tuple[str, float, Callable[[], float]]


def _max_abs(value) -> float:
    return float(np.max(np.abs(value)))


def _fourier_first_derivative() -> float:
    theta = parameter_nodes(32)
    return _max_abs(fourier_derivative(np.sin(theta), 1) - np.cos(theta))


def _fourier_fourth_derivative() -> float:
    theta = parameter_nodes(32)
    return _max_abs(fourier_derivative(np.sin(3 * theta), 4) - 81 * np.sin(3 * theta))


def _circle_functionals() -> float:
    circle = ClosedCurve.circle(64)
    return max(abs(circle.area - math.pi), abs(circle.length - 2 * math.pi), abs(circle.reduced_area - 1))


def _ellipse_area() -> float:
    return abs(ClosedCurve.ellipse(64, 1.0, 3.0).area - 3 * math.pi)


def _circle_bending() -> float:
    circle = ClosedCurve.circle(32)
    return _max_abs(bending_apply(circle, 1.0, circle.points) - circle.points)


def _circle_stretch() -> float:
    circle = ClosedCurve.circle(32)
    return _max_abs(surface_divergence(circle, circle.points) - 1.0)


def _net_traction() -> float:
    ellipse = ClosedCurve.ellipse(64, 1.0, 3.0)
    state = VesicleState(ellipse, np.sin(ellipse.theta), nu=4.0)
    return _max_abs(ellipse.arclength_spacing @ traction(state))


def _double_layer_vanishes() -> float:
    circle = ClosedCurve.circle(32)
    density = np.column_stack([np.cos(circle.theta), np.ones(32)])
    return _max_abs(dlp_apply(circle, 1.0, density, np.array([[0.3, 0.1], [4.0, 0.0]])))


def _double_layer_interior_constant() -> float:
    circle = ClosedCurve.circle(64)
    nu = 4.0
    density = np.tile([1.0, 0.5], (64, 1))
    values = dlp_apply(circle, nu, density, np.array([[0.2, 0.1], [-0.3, 0.0]]))
    return _max_abs(values + (1 - nu) * np.array([1.0, 0.5]))


def _self_single_layer_resolution() -> float:
    potentials = LayerPotentials()
    coarse, fine = ClosedCurve.circle(32), ClosedCurve.circle(64)
    results = []
    for curve in (coarse, fine):
        density = np.column_stack([np.cos(curve.theta), np.sin(curve.theta)])
        results.append(potentials.single_layer_self(curve) @ np.concatenate([density[:, 0], density[:, 1]]))
    return _max_abs(results[0] - np.concatenate([results[1][:64:2], results[1][64::2]]))


def _simpson_weights() -> float:
    return _max_abs(lobatto_grid(3).weights - np.array([1 / 6, 2 / 3, 1 / 6]))


def _controller_examples() -> float:
    ctrl = ControllerState(tolerance=1e-2, order=2)
    rejected = accept_step(1.0, 1.0 + 2.1e-3, 1.0, 1.0, 1.0, 1.0, 0.5, 0.1, ctrl)
    optimum = dt_optimal(1.0, 1.0 + 4e-3, 1.0, 0.0, 0.1, ctrl)
    grown = next_dt(0.1, math.inf, True, ctrl)
    shrunk = next_dt(0.1, 0.01, True, ctrl)
    return max(
        float(rejected),
        abs(optimum - 0.05),
        abs(grown - 0.9**0.25 * 0.15),
        abs(shrunk - 0.9**0.25 * 0.06),
    )


def _single_vesicle_gmres() -> float:
    vesicle = VesicleState.relaxed(ClosedCurve.ellipse(32, 1.0, 3.0), nu=4.0)
    context = SolverContext(flow=FarFieldFlow("shear"))
    frame = InteractionFrame([vesicle], context.potentials)
    _, iterations = provisional_system(frame, 1e-2).solve(provisional_rhs(frame, 1e-2, context.flow), context)
    return float(iterations - 1)


CHECKS: List[Check] = [
    ("fourier derivative sin -> cos", 1e-12, _fourier_first_derivative),
    ("fourier fourth derivative eigenfunction", 1e-9, _fourier_fourth_derivative),
    ("unit circle area, length, reduced area", 1e-12, _circle_functionals),
    ("ellipse area", 1e-12, _ellipse_area),
    ("unit circle x_ssss = x", 1e-10, _circle_bending),
    ("unit circle x_s . x_s = 1", 1e-10, _circle_stretch),
    ("zero net membrane force", 1e-8, _net_traction),
    ("double layer vanishes at nu = 1", 0.0, _double_layer_vanishes),
    ("double layer constant inside", 1e-8, _double_layer_interior_constant),
    ("self single layer N=32 vs N=64", 1e-10, _self_single_layer_resolution),
    ("Lobatto p=3 Simpson weights", 1e-14, _simpson_weights),
    ("controller worked examples", 1e-14, _controller_examples),
    ("single vesicle GMRES in one iteration", 0.0, _single_vesicle_gmres),
]


def run_checks() -> List[VerificationResult]:
    results = []
    for name, tolerance, check in CHECKS:
        try:
            error = check()
        except Exception as exc:  # a crashing check is a failed check
            logger.error("check %r raised %s: %s", name, type(exc).__name__, exc)
            error = math.inf
        results.append(VerificationResult(name, error, tolerance))
        logger.debug("check=%r error=%.3e tolerance=%.1e", name, error, tolerance)
    return results
