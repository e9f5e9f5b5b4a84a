import math

import numpy as np
import pytest

from vesim.errors import InvalidInputError
from vesim.schemas.schemas import ControllerConfig
from vesim.timestepping.controller import ControllerState, accept_step, dt_optimal, next_dt

GROWTH = 0.9**0.25


# Second-order controller with a one percent budget
@pytest.fixture
def ctrl():
    return ControllerState(tolerance=1e-2, order=2)


# Test an unchanged shape is accepted
def test_accept_zero_change(ctrl):
    assert accept_step(1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 0.3, 0.1, ctrl)


# Test the area bound rejects a change just above it
def test_reject_area_change(ctrl):
    assert not accept_step(1.0, 1.0 + 2.1e-3, 1.0, 1.0, 1.0, 1.0, 0.5, 0.1, ctrl)
    assert accept_step(1.0, 1.0 + 1.9e-3, 1.0, 1.0, 1.0, 1.0, 0.5, 0.1, ctrl)


# Test the length bound alone can reject
def test_reject_length_change(ctrl):
    assert not accept_step(1.0, 1.0, 1.0, 1.0, 1.0 + 2.1e-3, 1.0, 0.5, 0.1, ctrl)


# Test a spent budget rejects any change
def test_spent_budget_rejects(ctrl):
    assert not accept_step(1.0, 1.0 + 1e-9, 0.99, 1.0, 1.0, 1.0, 0.2, 0.1, ctrl)
    assert not accept_step(1.0, 1.0, 0.95, 1.0, 1.0, 1.0, 0.2, 0.1, ctrl)


# Test the optimal step size examples
@pytest.mark.parametrize("change, expected", [(1e-3, 0.1), (4e-3, 0.05)])
def test_dt_optimal_examples(ctrl, change, expected):
    assert dt_optimal(1.0, 1.0 + change, 1.0, 0.0, 0.1, ctrl) == pytest.approx(expected, rel=1e-12)


# Test the smaller of the area and length optima is used
def test_dt_optimal_length_channel(ctrl):
    optimum = dt_optimal(1.0, 1.0 + 1e-3, 1.0, 0.0, 0.1, ctrl, 1.0, 1.0 + 4e-3, 1.0)
    assert optimum == pytest.approx(0.05, rel=1e-12)


# Test zero local errors leave the step unconstrained
def test_dt_optimal_unconstrained(ctrl):
    assert dt_optimal(1.0, 1.0, 1.0, 0.0, 0.1, ctrl, 2.0, 2.0, 2.0) == math.inf


# Test an exhausted budget forces a shrink
def test_dt_optimal_exhausted_budget(ctrl):
    assert dt_optimal(1.0, 1.0 + 1e-4, 0.95, 0.0, 0.1, ctrl) == pytest.approx(0.06)


# Test the next step size examples
def test_next_dt_examples(ctrl):
    assert next_dt(0.1, math.inf, True, ctrl) == pytest.approx(GROWTH * 0.15, abs=1e-14)
    assert next_dt(0.1, 0.01, True, ctrl) == pytest.approx(GROWTH * 0.06, abs=1e-14)
    assert next_dt(0.1, 0.5, False, ctrl) == pytest.approx(GROWTH * 0.1, abs=1e-14)


# Test the last attempt lands on the horizon
def test_next_dt_horizon_clamp(ctrl):
    assert next_dt(0.1, math.inf, True, ctrl, t=0.95) == pytest.approx(0.05, abs=1e-15)
    assert next_dt(0.1, math.inf, True, ctrl, t=0.5) == pytest.approx(GROWTH * 0.15, abs=1e-14)


# Test steps at or past the horizon
@pytest.mark.parametrize("t", [1.0, 1.5])
def test_past_horizon(ctrl, t):
    with pytest.raises(InvalidInputError):
        accept_step(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, t, 0.1, ctrl)
    with pytest.raises(InvalidInputError):
        dt_optimal(1.0, 1.0, 1.0, t, 0.1, ctrl)


# Test a non-positive step size
def test_non_positive_dt(ctrl):
    with pytest.raises(InvalidInputError):
        dt_optimal(1.0, 1.0, 1.0, 0.0, 0.0, ctrl)


# Test rejections never grow the step and accepted ratios stay bracketed
def test_next_dt_bounds(ctrl, rng):
    low, high = GROWTH * ctrl.beta_down, GROWTH * ctrl.beta_up
    for _ in range(10_000):
        dt = 10 ** rng.uniform(-8, 0)
        dt_opt = math.inf if rng.random() < 0.1 else dt * 10 ** rng.uniform(-3, 3)
        assert next_dt(dt, dt_opt, False, ctrl) < dt
        ratio = next_dt(dt, dt_opt, True, ctrl) / dt
        assert low * (1 - 1e-12) <= ratio <= high * (1 + 1e-12)


# Test several vesicles follow the most restrictive one
def test_multi_vesicle_reduction(ctrl):
    areas = np.array([1.0, 2.0])
    changed = np.array([1.0 + 1e-3, 2.0 * (1.0 + 4e-3)])
    combined = dt_optimal(areas, changed, areas, 0.0, 0.1, ctrl)
    worst = min(dt_optimal(a, c, a, 0.0, 0.1, ctrl) for a, c in zip(areas, changed))
    assert combined == pytest.approx(worst, rel=1e-12)
    assert combined == pytest.approx(0.05, rel=1e-12)

    lengths = np.ones(2)
    assert not accept_step(areas, [1.0, 2.0 * (1 + 2.1e-3)], areas, lengths, lengths, lengths, 0.5, 0.1, ctrl)
    assert accept_step(areas, [1.0, 2.0 * (1 + 1.9e-3)], areas, lengths, lengths, lengths, 0.5, 0.1, ctrl)


# Test accepted steps spend at most the whole budget
def test_budget_soundness(rng):
    ctrl = ControllerState(tolerance=1e-2, order=2)
    area, t, dt = 1.0, 0.0, 0.05
    for _ in range(10_000):
        if 1.0 - t <= 1e-12:
            break
        proposed = area * (1.0 + rng.choice([-1.0, 1.0]) * rng.uniform(0, 5) * dt**2)
        accepted = accept_step(area, proposed, 1.0, 1.0, 1.0, 1.0, t, dt, ctrl)
        optimum = dt_optimal(area, proposed, 1.0, t, dt, ctrl)
        if accepted:
            area, t = proposed, t + dt
        dt = next_dt(dt, optimum, accepted, ctrl, t)
    assert t == pytest.approx(1.0, abs=1e-12)
    assert abs(area - 1.0) / area <= 1.05 * ctrl.tolerance


# Test the state bookkeeping
def test_record(ctrl):
    ctrl.record(True, [1.1], [2.2])
    ctrl.record(False)
    assert (ctrl.accepts, ctrl.rejects, ctrl.last_rejected) == (1, 1, True)
    np.testing.assert_array_equal(ctrl.areas, [1.1])
    np.testing.assert_array_equal(ctrl.lengths, [2.2])


# Test the configured order overrides the integrator order
def test_from_config():
    state = ControllerState.from_config(ControllerConfig(order=3), 1e-2, 2.0, 2, [1.0], [4.0])
    assert state.order == 3
    assert state.horizon == 2.0
    assert ControllerState.from_config(ControllerConfig(), 1e-2, 1.0, 2, [1.0], [4.0]).order == 2


# Test invalid controller parameters
@pytest.mark.parametrize(
    "kwargs",
    [
        {"tolerance": 0.0},
        {"tolerance": 1e-2, "beta_down": 1.2},
        {"tolerance": 1e-2, "beta_up": 0.9},
        {"tolerance": 1e-2, "beta_scale": 1.0},
        {"tolerance": 1e-2, "order": 0},
        {"tolerance": 1e-2, "horizon": 0.0},
    ],
)
def test_invalid_parameters(kwargs):
    with pytest.raises(InvalidInputError):
        ControllerState(**kwargs)
