"""Post-processing of run diagnostics: convergence orders and flow regimes."""

from typing import Sequence

import numpy as np

from vesim.errors import InvalidInputError
from vesim.geometry.spectral_curve import ClosedCurve

TANK_TREADING = "tank-treading"
TUMBLING = "tumbling"


def fit_order(steps: Sequence[int], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(dt) for dt ~ 1/steps."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if steps.size < 2 or steps.size != errors.size:
        raise InvalidInputError("need at least two (steps, error) pairs of equal length")
    if np.any(errors <= 0) or np.any(steps <= 0):
        raise InvalidInputError("steps and errors must be positive to fit an order")
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(-slope)


def inclination_angle(curve: ClosedCurve) -> float:
    """Angle in (-pi/2, pi/2] of the principal axis of the boundary's second moment."""
    weights = curve.arclength_spacing
    center = weights @ curve.points / weights.sum()
    offset = curve.points - center
    moment = (offset * weights[:, None]).T @ offset
    _, vectors = np.linalg.eigh(moment)
    axis = vectors[:, -1]
    angle = float(np.arctan2(axis[1], axis[0]))
    if angle <= -np.pi / 2:
        angle += np.pi
    elif angle > np.pi / 2:
        angle -= np.pi
    return angle


def unwrapped_inclination(angles: Sequence[float]) -> np.ndarray:
    """Continuous axis angle; the principal axis is only defined modulo pi."""
    return np.unwrap(np.asarray(angles, dtype=float), period=np.pi)


def rotation_count(angles: Sequence[float]) -> float:
    """Net body rotations (2 pi turns) of the principal axis.

    The sign follows the turning direction: shear with a positive rate turns
    the axis clockwise and gives a negative count. Compare magnitudes when
    only the number of turns matters.
    """
    unwrapped = unwrapped_inclination(angles)
    return float((unwrapped[-1] - unwrapped[0]) / (2 * np.pi))


def tracker_winding(trackers: Sequence[np.ndarray], centers: Sequence[np.ndarray]) -> float:
    """Signed number of turns of a tracker point about the vesicle center."""
    relative = np.asarray(trackers, dtype=float) - np.asarray(centers, dtype=float)
    angles = np.unwrap(np.arctan2(relative[:, 1], relative[:, 0]))
    return float((angles[-1] - angles[0]) / (2 * np.pi))


def classify_regime(angles: Sequence[float]) -> str:
    """Tumbling once the axis has turned through more than a half rotation."""
    unwrapped = unwrapped_inclination(angles)
    if np.ptp(unwrapped) > np.pi:
        return TUMBLING
    return TANK_TREADING
