"""Accept/reject decisions and step-size selection from area and length errors.

Every accepted step may spend a share ``dt / (T - t)`` of the error budget
still available; for each vesicle and for both area and length::

    |X(t + dt) - X(t)| <= X(t) dt / (T - t) * (eps - |X(t) - X(0)| / X(t))

Arguments may be scalars or per-vesicle arrays; a decision over several
vesicles is the most restrictive single-vesicle decision.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from vesim.errors import InvalidInputError
from vesim.schemas.schemas import ControllerConfig


@dataclass
class ControllerState:
    tolerance: float
    horizon: float = 1.0
    order: int = 2
    beta_down: float = 0.6
    beta_up: float = 1.5
    beta_scale: float = math.sqrt(0.9)
    reference_areas: np.ndarray = field(default_factory=lambda: np.ones(1))
    reference_lengths: np.ndarray = field(default_factory=lambda: np.ones(1))
    areas: Optional[np.ndarray] = None
    lengths: Optional[np.ndarray] = None
    accepts: int = 0
    rejects: int = 0
    last_rejected: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidInputError(f"tolerance must be positive, got {self.tolerance}")
        if not self.horizon > 0:
            raise InvalidInputError(f"horizon must be positive, got {self.horizon}")
        if self.order < 1:
            raise InvalidInputError(f"order must be at least 1, got {self.order}")
        if not 0 < self.beta_down < 1 < self.beta_up:
            raise InvalidInputError("controller betas must satisfy 0 < beta_down < 1 < beta_up")
        if not 0 < self.beta_scale < 1:
            raise InvalidInputError("beta_scale must lie in (0, 1)")
        self.reference_areas = np.atleast_1d(np.asarray(self.reference_areas, dtype=float))
        self.reference_lengths = np.atleast_1d(np.asarray(self.reference_lengths, dtype=float))
        if self.areas is None:
            self.areas = self.reference_areas.copy()
        if self.lengths is None:
            self.lengths = self.reference_lengths.copy()

    @classmethod
    def from_config(
        cls,
        config: ControllerConfig,
        tolerance: float,
        horizon: float,
        order: int,
        areas,
        lengths,
    ) -> "ControllerState":
        return cls(
            tolerance=tolerance,
            horizon=horizon,
            order=config.order or order,
            beta_down=config.beta_down,
            beta_up=config.beta_up,
            beta_scale=config.beta_scale,
            reference_areas=areas,
            reference_lengths=lengths,
        )

    def record(self, accepted: bool, areas=None, lengths=None) -> None:
        if accepted:
            self.accepts += 1
            self.areas = np.atleast_1d(np.asarray(areas, dtype=float))
            self.lengths = np.atleast_1d(np.asarray(lengths, dtype=float))
        else:
            self.rejects += 1
        self.last_rejected = not accepted


def _budget(current, reference, tolerance: float) -> np.ndarray:
    current = np.atleast_1d(np.asarray(current, dtype=float))
    reference = np.atleast_1d(np.asarray(reference, dtype=float))
    return tolerance - np.abs(current - reference) / current


def _check_time(t: float, dt: float, ctrl: ControllerState) -> None:
    if t >= ctrl.horizon:
        raise InvalidInputError(f"step starts at t={t} which is not before the horizon T={ctrl.horizon}")
    if not dt > 0:
        raise InvalidInputError(f"step size must be positive, got dt={dt}")


def _channel_holds(current, new, reference, t, dt, ctrl) -> bool:
    current = np.atleast_1d(np.asarray(current, dtype=float))
    new = np.atleast_1d(np.asarray(new, dtype=float))
    budget = _budget(current, reference, ctrl.tolerance)
    if np.any(budget < 0):
        return False
    bound = current * dt / (ctrl.horizon - t) * budget
    return bool(np.all(np.abs(new - current) <= bound))


def accept_step(A_t, A_new, A_0, L_t, L_new, L_0, t: float, dt: float, ctrl: ControllerState) -> bool:
    _check_time(t, dt, ctrl)
    return _channel_holds(A_t, A_new, A_0, t, dt, ctrl) and _channel_holds(L_t, L_new, L_0, t, dt, ctrl)


def _channel_optimum(current, new, reference, t, dt, ctrl) -> float:
    current = np.atleast_1d(np.asarray(current, dtype=float))
    change = np.abs(np.atleast_1d(np.asarray(new, dtype=float)) - current)
    budget = _budget(current, reference, ctrl.tolerance)
    if np.any(budget < 0):
        return ctrl.beta_down * dt
    candidates = np.full(current.shape, math.inf)
    moving = change > 0
    bracket = current[moving] / change[moving] * dt / (ctrl.horizon - t) * budget[moving]
    candidates[moving] = bracket ** (1.0 / ctrl.order) * dt
    return float(candidates.min())


def dt_optimal(
    A_t,
    A_new,
    A_0,
    t: float,
    dt: float,
    ctrl: ControllerState,
    L_t=None,
    L_new=None,
    L_0=None,
) -> float:
    """Largest step the remaining budget allows; +inf when nothing changed."""
    _check_time(t, dt, ctrl)
    optimum = _channel_optimum(A_t, A_new, A_0, t, dt, ctrl)
    if L_t is not None:
        optimum = min(optimum, _channel_optimum(L_t, L_new, L_0, t, dt, ctrl))
    return optimum


def next_dt(dt: float, dt_opt: float, accepted: bool, ctrl: ControllerState, t: Optional[float] = None) -> float:
    """Step size for the next attempt; never grows after a rejection.

    With ``t`` (the start of the next attempt) the result is clamped so the
    attempt does not pass the horizon.
    """
    scale = ctrl.beta_scale ** (1.0 / ctrl.order)
    bounded = max(dt_opt, ctrl.beta_down * dt)
    ceiling = ctrl.beta_up * dt if accepted else dt
    new = scale * min(ceiling, bounded)
    if t is not None:
        new = min(new, ctrl.horizon - t)
    return new
