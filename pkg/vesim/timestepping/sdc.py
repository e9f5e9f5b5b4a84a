"""Spectral deferred correction macro step.

A macro step ``[t, t + dt]`` is split at the Gauss-Lobatto nodes. The
provisional sweep marches the semi-implicit update node to node; each
correction sweep solves the linearized error equation with the residual
increments as data and adds the errors to the provisional solution.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from vesim.errors import InvalidInputError
from vesim.geometry.membrane import traction
from vesim.models.models import Suspension, VesicleState
from vesim.solvers.imex import (
    InteractionFrame,
    SolverContext,
    VelocitySystem,
    correction_rhs,
    correction_system,
    provisional_rhs,
    provisional_system,
    tension_rhs,
    tension_system,
)
from vesim.timestepping.lobatto import LobattoGrid

logger = logging.getLogger(__name__)


@dataclass
class LobattoStage:
    t: float
    dt: float
    states: List[List[VesicleState]]
    velocities: Optional[List[List[np.ndarray]]] = None
    residuals: Optional[List[List[np.ndarray]]] = None
    frames: List[Optional[InteractionFrame]] = field(default_factory=list)
    iterations: int = 0

    @property
    def initial(self) -> List[VesicleState]:
        return self.states[0]

    @property
    def final(self) -> List[VesicleState]:
        return self.states[-1]

    def frame(self, node: int, context: SolverContext) -> InteractionFrame:
        if len(self.frames) < len(self.states):
            self.frames.extend([None] * (len(self.states) - len(self.frames)))
        if self.frames[node] is None:
            self.frames[node] = InteractionFrame(self.states[node], context.potentials)
        return self.frames[node]

    def residual_norm(self) -> float:
        if self.residuals is None:
            return float("nan")
        return max(float(np.max(np.abs(r))) for node in self.residuals for r in node)


@dataclass
class StepDiagnostics:
    iterations: int = 0
    matvecs: int = 0
    residual_norms: List[float] = field(default_factory=list)


def provisional_velocity(
    vesicles: Sequence[VesicleState],
    context: SolverContext,
    frame: Optional[InteractionFrame] = None,
) -> Tuple[List[np.ndarray], int]:
    """Membrane velocity (alpha I - D)^{-1} (v_inf + S f) with f the traction."""
    frame = frame or InteractionFrame(vesicles, context.potentials)
    forces = [traction(v) for v in vesicles]
    induced = frame.membrane_velocity(forces)
    rhs = [context.flow(v.curve.points) + u for v, u in zip(vesicles, induced)]
    if all(v.nu == 1.0 for v in vesicles):
        return rhs, 0
    return VelocitySystem(frame).solve(rhs, context)


def initial_tension(vesicles: Sequence[VesicleState], context: SolverContext) -> List[VesicleState]:
    """Tension making the membrane velocity of the given shapes inextensible."""
    frame = InteractionFrame(vesicles, context.potentials)
    system = tension_system(frame)
    parts, iterations = system.solve(tension_rhs(frame, context.flow), context)
    logger.debug("initial tension solve iterations=%d", iterations)
    return [v.with_tension(sigma) for v, (_, sigma) in zip(vesicles, parts)]


def provisional_substep(
    vesicles: Sequence[VesicleState],
    dt: float,
    context: SolverContext,
    frame: Optional[InteractionFrame] = None,
) -> Tuple[List[VesicleState], int]:
    """One semi-implicit step of size ``dt`` with operators frozen at ``vesicles``."""
    frame = frame or InteractionFrame(vesicles, context.potentials)
    system = provisional_system(frame, dt)
    parts, iterations = system.solve(provisional_rhs(frame, dt, context.flow), context)
    return [v.evolve(points, sigma) for v, (points, sigma) in zip(vesicles, parts)], iterations


def provisional_sweep(
    vesicles: Sequence[VesicleState],
    t: float,
    dt: float,
    grid: LobattoGrid,
    context: SolverContext,
) -> LobattoStage:
    states = [list(vesicles)]
    stage = LobattoStage(t=t, dt=dt, states=states)
    if dt == 0:
        stage.states = [list(vesicles) for _ in range(grid.p)]
        return stage
    for node, fraction in enumerate(grid.substeps):
        stepped, iterations = provisional_substep(
            states[node], dt * fraction, context, stage.frame(node, context)
        )
        states.append(stepped)
        stage.iterations += iterations
    return stage


def compute_residual(stage: LobattoStage, grid: LobattoGrid) -> List[List[np.ndarray]]:
    """r_j = x_0 - x_j + dt * sum_m Q_jm v_m at every node and vesicle."""
    if stage.velocities is None:
        raise InvalidInputError("stage velocities must be evaluated before the residual")
    residuals = []
    for row, states in zip(grid.integration, stage.states):
        node = []
        for k, state in enumerate(states):
            integral = sum(w * stage.velocities[m][k] for m, w in enumerate(row))
            node.append(stage.initial[k].curve.points - state.curve.points + stage.dt * integral)
        residuals.append(node)
    return residuals


def evaluate_stage(stage: LobattoStage, grid: LobattoGrid, context: SolverContext) -> LobattoStage:
    """Provisional velocities at every node followed by the residual."""
    velocities = []
    for node, states in enumerate(stage.states):
        fields, iterations = provisional_velocity(states, context, stage.frame(node, context))
        velocities.append(fields)
        stage.iterations += iterations
    stage.velocities = velocities
    stage.residuals = compute_residual(stage, grid)
    return stage


def correction_sweep(stage: LobattoStage, grid: LobattoGrid, context: SolverContext) -> LobattoStage:
    """Solve the error equation node to node and add the errors to the stage."""
    if stage.residuals is None:
        evaluate_stage(stage, grid, context)
    references = [v.curve for v in stage.initial]
    position_errors = [[np.zeros_like(v.curve.points) for v in stage.initial]]
    tension_errors = [[np.zeros(v.n) for v in stage.initial]]

    for node, fraction in enumerate(grid.substeps):
        substep = stage.dt * fraction
        frame = stage.frame(node + 1, context)
        increments = [
            after - before
            for after, before in zip(stage.residuals[node + 1], stage.residuals[node])
        ]
        system = correction_system(frame, substep, references)
        rhs = correction_rhs(frame, substep, position_errors[node], increments, references)
        parts, iterations = system.solve(rhs, context)
        stage.iterations += iterations
        position_errors.append([p for p, _ in parts])
        tension_errors.append([s for _, s in parts])

    stage.states = [
        [
            state if node == 0 else state.evolve(state.curve.points + ex, state.tension + es)
            for state, ex, es in zip(states, position_errors[node], tension_errors[node])
        ]
        for node, states in enumerate(stage.states)
    ]
    stage.frames = stage.frames[:1]
    return evaluate_stage(stage, grid, context)


def macro_step(
    suspension: Suspension,
    dt: float,
    n_sdc: int,
    grid: LobattoGrid,
    context: SolverContext,
) -> Tuple[Suspension, StepDiagnostics]:
    """Provisional sweep plus ``n_sdc`` corrections; returns the last-node state."""
    if n_sdc < 0:
        raise InvalidInputError(f"n_sdc must be non-negative, got {n_sdc}")
    matvecs_before = context.counter.matvecs
    diagnostics = StepDiagnostics()
    if dt == 0:
        return suspension.advanced(suspension.vesicles, suspension.t), diagnostics

    stage = provisional_sweep(suspension.vesicles, suspension.t, dt, grid, context)
    if n_sdc:
        evaluate_stage(stage, grid, context)
        diagnostics.residual_norms.append(stage.residual_norm())
    for sweep in range(n_sdc):
        correction_sweep(stage, grid, context)
        diagnostics.residual_norms.append(stage.residual_norm())
        logger.debug("sdc sweep=%d residual=%.3e", sweep + 1, diagnostics.residual_norms[-1])

    diagnostics.iterations = stage.iterations
    diagnostics.matvecs = context.counter.matvecs - matvecs_before
    return suspension.advanced(stage.final, suspension.t + dt), diagnostics
