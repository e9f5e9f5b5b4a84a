import numpy as np
import pytest

from vesim.errors import InvalidInputError
from vesim.geometry.spectral_curve import ClosedCurve
from vesim.simulation.analysis import (
    TANK_TREADING,
    TUMBLING,
    classify_regime,
    fit_order,
    inclination_angle,
    rotation_count,
    tracker_winding,
    unwrapped_inclination,
)


def wrapped(angles):
    return (np.asarray(angles) + np.pi / 2) % np.pi - np.pi / 2


# Test the fitted order of exact power laws
@pytest.mark.parametrize("order", [1.0, 2.0, 3.0])
def test_fit_order(order):
    steps = [25, 50, 100, 200]
    errors = [0.3 * m**-order for m in steps]
    assert fit_order(steps, errors) == pytest.approx(order, abs=1e-10)


# Test fitting needs positive pairs
@pytest.mark.parametrize("steps, errors", [([10], [1e-3]), ([10, 20], [1e-3]), ([10, 20], [1e-3, 0.0])])
def test_fit_order_invalid(steps, errors):
    with pytest.raises(InvalidInputError):
        fit_order(steps, errors)


# Test the inclination of rotated ellipses
@pytest.mark.parametrize("rotation", [0.0, 0.3, -1.2])
def test_inclination_angle(rotation):
    curve = ClosedCurve.ellipse(64, 3.0, 1.0, rotation=rotation)
    assert inclination_angle(curve) == pytest.approx(rotation, abs=1e-10)


# Test an upright ellipse sits at the edge of the range
def test_inclination_upright():
    assert inclination_angle(ClosedCurve.ellipse(64, 1.0, 3.0)) == pytest.approx(np.pi / 2, abs=1e-10)


# Test the axis angle is unwrapped modulo pi
def test_unwrapped_inclination():
    angles = np.linspace(0.0, 3 * np.pi, 120)
    np.testing.assert_allclose(unwrapped_inclination(wrapped(angles)), angles, atol=1e-12)


# Test two and a half body rotations
def test_rotation_count():
    angles = -np.linspace(0.0, 5 * np.pi, 300)
    assert rotation_count(wrapped(angles)) == pytest.approx(-2.5, abs=1e-12)


# Test the count changes sign with the turning direction
def test_rotation_count_direction():
    angles = np.linspace(0.0, 5 * np.pi, 300)
    assert rotation_count(wrapped(angles)) == pytest.approx(2.5, abs=1e-12)
    assert abs(rotation_count(wrapped(-angles))) == pytest.approx(2.5, abs=1e-12)


# Test a bounded oscillation is tank-treading and a steady rotation tumbling
def test_classify_regime():
    times = np.linspace(0.0, 10.0, 200)
    assert classify_regime(0.4 + 0.2 * np.sin(times)) == TANK_TREADING
    assert classify_regime(wrapped(-0.8 * times)) == TUMBLING


# Test the tracker winding about a moving center
def test_tracker_winding():
    phase = np.linspace(0.0, 4 * np.pi, 100)
    centers = np.column_stack([phase, np.zeros_like(phase)])
    trackers = centers + 0.5 * np.column_stack([np.cos(phase), np.sin(phase)])
    assert tracker_winding(trackers, centers) == pytest.approx(2.0, abs=1e-12)
