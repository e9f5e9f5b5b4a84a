import numpy as np
import pytest

from vesim.geometry.spectral_curve import ClosedCurve
from vesim.models.models import FarFieldFlow, Suspension, VesicleState
from vesim.solvers.imex import SolverContext


# Unit circle sampled at 32 nodes
@pytest.fixture
def circle():
    return ClosedCurve.circle(32)


# Ellipse (cos t, 3 sin t) sampled at 64 nodes
@pytest.fixture
def ellipse():
    return ClosedCurve.ellipse(64, 1.0, 3.0)


# Solver context for quiescent flow
@pytest.fixture
def quiescent_context():
    return SolverContext(flow=FarFieldFlow("quiescent"))


# Solver context for unit shear
@pytest.fixture
def shear_context():
    return SolverContext(flow=FarFieldFlow("shear"))


# Unit circle in a fluid at rest: an equilibrium once the tension balances bending
@pytest.fixture
def resting_circle():
    vesicle = VesicleState.relaxed(ClosedCurve.circle(32), nu=1.0)
    return Suspension(vesicles=[vesicle], flow=FarFieldFlow("quiescent"))


# Random generator with a fixed seed
@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
