"""Long simulation runs; enabled with ``pytest --runslow``."""

import numpy as np
import pytest

from vesim.geometry.spectral_curve import ClosedCurve
from vesim.models.models import FarFieldFlow, Suspension, VesicleState
from vesim.simulation.analysis import (
    TANK_TREADING,
    TUMBLING,
    classify_regime,
    fit_order,
    rotation_count,
    unwrapped_inclination,
)
from vesim.simulation.driver import run_adaptive, run_fixed
from vesim.solvers.imex import InteractionFrame, SolverContext, provisional_rhs, provisional_system

pytestmark = pytest.mark.slow

# Horizon of the fixed-step studies
CONVERGENCE_HORIZON = 10.0
# Horizon over which the nu = 15 vesicle makes about two and a half turns
TUMBLING_HORIZON = 57.0


def sheared_ellipse(nu, n=64):
    vesicle = VesicleState.relaxed(ClosedCurve.ellipse(n, 1.0, 3.0), nu=nu)
    return Suspension(vesicles=[vesicle], flow=FarFieldFlow("shear"))


def observed_order(nu, n_sdc, steps=(50, 100, 200), T=CONVERGENCE_HORIZON):
    errors = []
    for m in steps:
        _, diagnostics = run_fixed(sheared_ellipse(nu), m, T, n_sdc=n_sdc, p=5)
        errors.append(diagnostics.e_L)
    return errors, fit_order(steps, errors)


# Test one correction gives at least second order
@pytest.mark.parametrize("nu", [4.0, 15.0])
def test_second_order_with_one_correction(nu):
    errors, order = observed_order(nu, 1)
    assert errors[0] > errors[1] > errors[2]
    assert order >= 2.0


# Test the uncorrected scheme is first order
def test_first_order_without_corrections():
    _, order = observed_order(4.0, 0)
    assert 0.8 <= order <= 1.3


# Test adaptive runs meet the tolerance
@pytest.mark.parametrize("nu", [4.0, 15.0])
@pytest.mark.parametrize("tolerance", [1e-1, 1e-2])
def test_adaptive_tolerance(nu, tolerance):
    _, diagnostics = run_adaptive(sheared_ellipse(nu), tolerance, 1.0, n_sdc=1, p=5)
    assert max(diagnostics.e_A, diagnostics.e_L) <= 1.05 * tolerance
    assert diagnostics.rejects <= diagnostics.accepts


# Test two corrections take fewer accepted steps than one
def test_two_corrections_fewer_steps():
    _, one = run_adaptive(sheared_ellipse(4.0), 1e-3, CONVERGENCE_HORIZON, n_sdc=1, p=5)
    _, two = run_adaptive(sheared_ellipse(4.0), 1e-3, CONVERGENCE_HORIZON, n_sdc=2, p=5)
    assert max(two.e_A, two.e_L) <= 1.05e-3
    assert two.accepts < one.accepts


# Test the viscosity contrast switches tank-treading to tumbling
def test_regimes():
    _, treading = run_adaptive(sheared_ellipse(4.0, n=32), 1e-1, 20.0, n_sdc=1, p=5)
    angles = np.array(treading.inclinations)[:, 0]
    assert classify_regime(angles) == TANK_TREADING
    assert np.ptp(unwrapped_inclination(angles)) < np.pi / 2

    _, tumbling = run_adaptive(sheared_ellipse(15.0, n=32), 1e-1, TUMBLING_HORIZON, n_sdc=1, p=5)
    angles = np.array(tumbling.inclinations)[:, 0]
    assert classify_regime(angles) == TUMBLING
    assert np.all(np.diff(unwrapped_inclination(angles)) <= 1e-6)
    assert 2.0 <= abs(rotation_count(angles)) <= 3.0


# Test GMRES iteration counts do not grow with the resolution
def test_mesh_independent_iterations():
    counts = []
    for n in (32, 64, 96):
        context = SolverContext(flow=FarFieldFlow("shear"))
        frame = InteractionFrame(sheared_ellipse(4.0, n).vesicles, context.potentials)
        _, iterations = provisional_system(frame, 1e-2).solve(provisional_rhs(frame, 1e-2, context.flow), context)
        counts.append(iterations)
    assert max(counts) - min(counts) <= 2
