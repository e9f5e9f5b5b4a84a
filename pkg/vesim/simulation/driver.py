import logging
import time
from typing import Callable, Optional, Tuple

import numpy as np

from vesim.errors import ConfigError, GeometryError, InvalidInputError, SimulationAborted, SolverFailure
from vesim.geometry.spectral_curve import ClosedCurve, parameter_nodes, resample, rotate
from vesim.models.models import FarFieldFlow, RunDiagnostics, StepRecord, Suspension, VesicleState
from vesim.schemas.schemas import ControllerConfig, PointFileShape, RunConfig, SolverSettings, VesicleSpec
from vesim.solvers.imex import SolverContext
from vesim.timestepping.controller import ControllerState, accept_step, dt_optimal, next_dt
from vesim.timestepping.lobatto import lobatto_grid
from vesim.timestepping.sdc import initial_tension, macro_step

logger = logging.getLogger(__name__)

# Relative slack for landing on the horizon
HORIZON_RTOL = 1e-12
# Fourier modes of the radius touched by a random initial perturbation
PERTURBED_MODES = (2, 3, 4)


# Initial data
def build_curve(spec: VesicleSpec, index: int = 0) -> ClosedCurve:
    if isinstance(spec.shape, PointFileShape):
        try:
            points = np.loadtxt(spec.shape.path, dtype=float, ndmin=2)
        except OSError as error:
            raise ConfigError(f"cannot read {spec.shape.path}: {error}", key=f"vesicles.{index}.shape.path")
        if points.shape[1] != 2:
            raise ConfigError(
                f"{spec.shape.path}: expected two columns, got {points.shape[1]}",
                key=f"vesicles.{index}.shape.path",
            )
        if points.shape[0] != spec.N:
            points = resample(points, spec.N)
        return ClosedCurve(rotate(points, spec.rotation) + np.asarray(spec.center))
    return ClosedCurve.ellipse(spec.N, spec.shape.a, spec.shape.b, spec.center, spec.rotation)


def perturb(curve: ClosedCurve, amplitude: float, rng: np.random.Generator) -> ClosedCurve:
    """Random normal displacement on a few low Fourier modes."""
    theta = parameter_nodes(curve.n)
    coefficients = rng.uniform(-1.0, 1.0, size=(len(PERTURBED_MODES), 2))
    bump = sum(
        a * np.cos(k * theta) + b * np.sin(k * theta)
        for k, (a, b) in zip(PERTURBED_MODES, coefficients)
    )
    return ClosedCurve(curve.points + amplitude * bump[:, None] * curve.normal)


def build_suspension(config: RunConfig) -> Suspension:
    rng = np.random.default_rng(config.seed)
    vesicles = []
    for index, spec in enumerate(config.vesicles):
        curve = build_curve(spec, index)
        if config.perturbation > 0:
            curve = perturb(curve, config.perturbation, rng)
        vesicles.append(VesicleState.relaxed(curve, spec.nu, spec.kappa_b))
    flow = FarFieldFlow(config.flow.kind, config.flow.rate)
    return Suspension(vesicles=vesicles, flow=flow, t=0.0)


# Diagnostics helpers
def tracker_points(suspension: Suspension) -> np.ndarray:
    """Node 0 of every vesicle; nodes move with the membrane."""
    return np.array([v.curve.points[0] for v in suspension.vesicles])


def relative_errors(suspension: Suspension, areas0: np.ndarray, lengths0: np.ndarray) -> Tuple[float, float]:
    e_A = float(np.max(np.abs(suspension.areas - areas0) / areas0))
    e_L = float(np.max(np.abs(suspension.lengths - lengths0) / lengths0))
    return e_A, e_L


class _SnapshotSchedule:
    def __init__(self, interval: Optional[float]):
        self.interval = interval
        self.next_time = 0.0

    def offer(self, suspension: Suspension, diagnostics: RunDiagnostics) -> None:
        if self.interval is None:
            if not diagnostics.snapshots:
                diagnostics.snapshots.append(suspension)
            return
        if suspension.t >= self.next_time * (1 - HORIZON_RTOL):
            diagnostics.snapshots.append(suspension)
            while self.next_time <= suspension.t * (1 + HORIZON_RTOL):
                self.next_time += self.interval


def _prepare(suspension: Suspension, context: SolverContext) -> Suspension:
    """Stepping state with a consistent tension; the recorded t = 0 state keeps
    the zero field."""
    vesicles = initial_tension(suspension.vesicles, context)
    return suspension.advanced(vesicles, suspension.t)


def _finish(diagnostics: RunDiagnostics, state: Suspension, context: SolverContext, started: float) -> None:
    if not diagnostics.snapshots or diagnostics.snapshots[-1].t < state.t:
        diagnostics.snapshots.append(state)
    diagnostics.matvecs = context.counter.matvecs
    diagnostics.cpu = time.process_time() - started


def run_fixed(
    suspension: Suspension,
    m: int,
    T: float,
    n_sdc: int = 1,
    p: int = 5,
    settings: Optional[SolverSettings] = None,
    snapshot_interval: Optional[float] = None,
) -> Tuple[Suspension, RunDiagnostics]:
    """``m`` uniform macro steps of size ``T / m``."""
    if m < 1:
        raise InvalidInputError(f"step count must be at least 1, got m={m}")
    context = SolverContext(flow=suspension.flow, settings=settings or SolverSettings())
    grid = lobatto_grid(p)
    dt = T / m
    areas0, lengths0 = suspension.areas, suspension.lengths
    diagnostics = RunDiagnostics(mode="fixed")
    snapshots = _SnapshotSchedule(snapshot_interval)
    cpu_start, wall_start = time.process_time(), time.perf_counter()
    logger.info("fixed run start vesicles=%d steps=%d dt=%.6g n_sdc=%d p=%d", suspension.m, m, dt, n_sdc, p)

    state = suspension
    try:
        diagnostics.track(suspension)
        snapshots.offer(suspension, diagnostics)
        state = _prepare(suspension, context)
        for step in range(m):
            stepped, step_info = macro_step(state, dt, n_sdc, grid, context)
            state = stepped.advanced(stepped.vesicles, T * (step + 1) / m)
            e_A, e_L = relative_errors(state, areas0, lengths0)
            diagnostics.records.append(StepRecord(
                t=state.t - dt,
                dt=dt,
                accepted=True,
                e_A=e_A,
                e_L=e_L,
                gmres_iters=step_info.iterations,
                matvecs_cum=context.counter.matvecs,
                wall_time=time.perf_counter() - wall_start,
            ))
            diagnostics.track(state)
            snapshots.offer(state, diagnostics)
            logger.debug("step=%d t=%.6g e_A=%.3e e_L=%.3e", step + 1, state.t, e_A, e_L)
    except (SolverFailure, GeometryError) as error:
        diagnostics.aborted = error.detail
        _finish(diagnostics, state, context, cpu_start)
        diagnostics.e_A, diagnostics.e_L = relative_errors(state, areas0, lengths0)
        logger.error("fixed run aborted at t=%.6g: %s", state.t, error.detail)
        raise SimulationAborted(f"fixed run aborted at t={state.t:.6g}: {error.detail}", diagnostics, state)

    diagnostics.e_A, diagnostics.e_L = relative_errors(state, areas0, lengths0)
    _finish(diagnostics, state, context, cpu_start)
    logger.info(
        "fixed run done e_A=%.3e e_L=%.3e matvecs=%d cpu=%.2fs",
        diagnostics.e_A, diagnostics.e_L, diagnostics.matvecs, diagnostics.cpu,
    )
    return state, diagnostics


def run_adaptive(
    suspension: Suspension,
    tolerance: float,
    T: float,
    n_sdc: int = 1,
    p: int = 5,
    settings: Optional[SolverSettings] = None,
    controller: Optional[ControllerConfig] = None,
    initial_dt: Optional[float] = None,
    dt_floor: Optional[float] = None,
    snapshot_interval: Optional[float] = None,
    on_step: Optional[Callable[[StepRecord], None]] = None,
) -> Tuple[Suspension, RunDiagnostics]:
    """Step until ``T`` with the area/length error controller; rejected
    attempts are recorded and leave the state untouched."""
    if not tolerance > 0:
        raise InvalidInputError(f"tolerance must be positive, got {tolerance}")
    context = SolverContext(flow=suspension.flow, settings=settings or SolverSettings())
    grid = lobatto_grid(p)
    areas0, lengths0 = suspension.areas, suspension.lengths
    ctrl = ControllerState.from_config(
        controller or ControllerConfig(), tolerance, T, n_sdc + 1, areas0, lengths0
    )
    dt = initial_dt or T / 100
    floor = dt_floor or 1e-12 * T
    diagnostics = RunDiagnostics(mode="adaptive")
    snapshots = _SnapshotSchedule(snapshot_interval)
    cpu_start, wall_start = time.process_time(), time.perf_counter()
    logger.info(
        "adaptive run start vesicles=%d tolerance=%.3g T=%.6g n_sdc=%d p=%d order=%d",
        suspension.m, tolerance, T, n_sdc, p, ctrl.order,
    )

    state = suspension
    try:
        state = _prepare(suspension, context)
    except (SolverFailure, GeometryError) as error:
        diagnostics.aborted = error.detail
        _finish(diagnostics, state, context, cpu_start)
        raise SimulationAborted(f"initial tension solve failed: {error.detail}", diagnostics, state)
    diagnostics.track(suspension)
    snapshots.offer(suspension, diagnostics)

    t = 0.0
    while T - t > HORIZON_RTOL * T:
        dt = min(dt, T - t)
        if dt < floor:
            diagnostics.aborted = f"step size {dt:.3e} fell below the floor {floor:.3e}"
            diagnostics.e_A, diagnostics.e_L = relative_errors(state, areas0, lengths0)
            _finish(diagnostics, state, context, cpu_start)
            logger.error("adaptive run aborted at t=%.6g: %s", t, diagnostics.aborted)
            raise SimulationAborted(diagnostics.aborted, diagnostics, state)

        iterations = 0
        try:
            candidate, step_info = macro_step(state, dt, n_sdc, grid, context)
            iterations = step_info.iterations
            areas, lengths = candidate.areas, candidate.lengths
            accepted = accept_step(
                ctrl.areas, areas, ctrl.reference_areas,
                ctrl.lengths, lengths, ctrl.reference_lengths,
                t, dt, ctrl,
            )
            dt_opt = dt_optimal(
                ctrl.areas, areas, ctrl.reference_areas, t, dt, ctrl,
                ctrl.lengths, lengths, ctrl.reference_lengths,
            )
            e_A, e_L = relative_errors(candidate, areas0, lengths0)
        except (SolverFailure, GeometryError) as error:
            logger.warning("step at t=%.6g dt=%.3e failed, shrinking: %s", t, dt, error.detail)
            candidate, accepted = None, False
            dt_opt = ctrl.beta_down * dt
            e_A = e_L = float("nan")

        record = StepRecord(
            t=t,
            dt=dt,
            accepted=accepted,
            e_A=e_A,
            e_L=e_L,
            gmres_iters=iterations,
            matvecs_cum=context.counter.matvecs,
            wall_time=time.perf_counter() - wall_start,
        )
        diagnostics.records.append(record)
        if on_step is not None:
            on_step(record)

        if accepted:
            ctrl.record(True, areas, lengths)
            t = T if T - (t + dt) <= HORIZON_RTOL * T else t + dt
            state = candidate.advanced(candidate.vesicles, t)
            diagnostics.track(state)
            snapshots.offer(state, diagnostics)
        else:
            ctrl.record(False)
        logger.debug(
            "t=%.6g dt=%.3e accepted=%s e_A=%.3e e_L=%.3e dt_opt=%.3e",
            record.t, dt, accepted, e_A, e_L, dt_opt,
        )
        dt = next_dt(dt, dt_opt, accepted, ctrl, t)

    diagnostics.e_A, diagnostics.e_L = relative_errors(state, areas0, lengths0)
    _finish(diagnostics, state, context, cpu_start)
    logger.info(
        "adaptive run done accepts=%d rejects=%d e_A=%.3e e_L=%.3e matvecs=%d cpu=%.2fs",
        diagnostics.accepts, diagnostics.rejects, diagnostics.e_A, diagnostics.e_L,
        diagnostics.matvecs, diagnostics.cpu,
    )
    return state, diagnostics


def run(config: RunConfig, on_step: Optional[Callable[[StepRecord], None]] = None) -> Tuple[Suspension, RunDiagnostics]:
    """Run a validated configuration in its time mode."""
    suspension = build_suspension(config)
    if suspension.m > 1 and suspension.boundaries_intersect():
        logger.warning("initial vesicle boundaries intersect")
    if config.time.mode == "fixed":
        return run_fixed(
            suspension, config.time.steps, config.T, config.n_sdc, config.p,
            config.solver_settings, config.output.snapshot_interval,
        )
    return run_adaptive(
        suspension, config.time.tolerance, config.T, config.n_sdc, config.p,
        config.solver_settings, config.controller, config.time.initial_dt,
        config.time.dt_floor, config.output.snapshot_interval, on_step,
    )
