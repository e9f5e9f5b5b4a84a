"""Linear systems of the semi-implicit vesicle update.

Per-vesicle operand layout is ``[x (N), y (N), sigma (N)]``; vesicle blocks
are concatenated in suspension order. All three uses share one operator
structure, for vesicle ``k`` and unknowns ``(x_j, sigma_j)``::

    position rows:    a alpha_k x_k - d sum_j D_kj x_j + sum_j S_kj (b B_j x_j - T_j sigma_j)
    constraint rows:  c C_k x_k

with scales ``(a, d, b, c)``:

    provisional step   (1/dt, 1/dt, 1, 1/dt)   C = x_s^N . d/ds
    correction sweep   (1/dt, 1/dt, 1, 1/dt)   C = x~_{s0} . d/ds0
    tension solve      (1,    1,    0, 1)      C = x_s . d/ds
"""

import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve, pinv

from vesim.errors import AssemblyError, InvalidInputError
from vesim.geometry.membrane import (
    bending_matrix,
    divergence_matrix,
    stretch_defect,
    tension_matrix,
)
from vesim.geometry.spectral_curve import ClosedCurve, stack, unstack
from vesim.models.models import FarFieldFlow, VesicleState
from vesim.potentials.stokes import LayerPotentials
from vesim.schemas.schemas import SolverSettings
from vesim.solvers.gmres import MatvecCounter, gmres_solve

logger = logging.getLogger(__name__)

PIVOT_RTOL = 1e-10
PINV_RTOL = 1e-12


@dataclass
class SolverContext:
    """Everything a solve needs besides the geometry: flow, settings and the
    shared matvec counter."""

    flow: FarFieldFlow
    settings: SolverSettings = field(default_factory=SolverSettings)
    counter: MatvecCounter = field(default_factory=MatvecCounter)

    @cached_property
    def potentials(self) -> LayerPotentials:
        return LayerPotentials(self.settings.layer)


class InteractionFrame:
    """Discretized layer-potential and membrane operators at one configuration.

    Interaction blocks are built lazily and cached; ``slp(k, j)`` maps a
    density on vesicle ``j`` to velocities at the nodes of vesicle ``k``.
    """

    def __init__(self, vesicles: Sequence[VesicleState], potentials: LayerPotentials):
        self.vesicles = tuple(vesicles)
        self.potentials = potentials
        self._slp: Dict[Tuple[int, int], np.ndarray] = {}
        self._dlp: Dict[Tuple[int, int], np.ndarray] = {}

    @property
    def count(self) -> int:
        return len(self.vesicles)

    @property
    def curves(self) -> List[ClosedCurve]:
        return [v.curve for v in self.vesicles]

    def slp(self, k: int, j: int) -> np.ndarray:
        if (k, j) not in self._slp:
            source = self.vesicles[j].curve
            targets = None if k == j else self.vesicles[k].curve.points
            self._slp[k, j] = self.potentials.single_layer(source, targets)
        return self._slp[k, j]

    def dlp(self, k: int, j: int) -> np.ndarray:
        if (k, j) not in self._dlp:
            source = self.vesicles[j]
            targets = None if k == j else self.vesicles[k].curve.points
            self._dlp[k, j] = self.potentials.double_layer(source.curve, source.nu, targets)
        return self._dlp[k, j]

    @cached_property
    def bending(self) -> List[np.ndarray]:
        return [bending_matrix(v.curve, v.kappa_b) for v in self.vesicles]

    @cached_property
    def tension(self) -> List[np.ndarray]:
        return [tension_matrix(v.curve) for v in self.vesicles]

    @cached_property
    def divergence(self) -> List[np.ndarray]:
        return [divergence_matrix(v.curve) for v in self.vesicles]

    @cached_property
    def velocity_blocks(self) -> List[List[np.ndarray]]:
        """Blocks of (alpha I - D) on stacked velocities."""
        blocks = []
        for k, target in enumerate(self.vesicles):
            row = []
            for j in range(self.count):
                block = -self.dlp(k, j)
                if k == j:
                    block = block + target.alpha * np.eye(2 * target.n)
                row.append(block)
            blocks.append(row)
        return blocks

    def apply_velocity_operator(self, fields: Sequence[np.ndarray]) -> List[np.ndarray]:
        """(alpha I - D) applied to per-vesicle planar fields."""
        vectors = [stack(f) for f in fields]
        return [
            unstack(sum(block @ vectors[j] for j, block in enumerate(row)))
            for row in self.velocity_blocks
        ]

    def membrane_velocity(self, forces: Sequence[np.ndarray]) -> List[np.ndarray]:
        """Single-layer velocity at every vesicle induced by all membrane forces."""
        vectors = [stack(f) for f in forces]
        return [
            unstack(sum(self.slp(k, j) @ vectors[j] for j in range(self.count)))
            for k in range(self.count)
        ]


class BlockPreconditioner:
    """Dense LU factorization of each single-vesicle diagonal block.

    A block that is singular to working precision (a circle carries a
    constant-tension null mode) is inverted by its pseudo-inverse instead.
    """

    def __init__(self, blocks: Sequence[np.ndarray]):
        self._factors = []
        self._offsets = [0]
        self.singular = False
        for index, block in enumerate(blocks):
            if not np.all(np.isfinite(block)):
                raise AssemblyError(f"preconditioner block {index} has non-finite entries")
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", LinAlgWarning)
                lu, pivots = lu_factor(block, check_finite=False)
            pivot_sizes = np.abs(np.diag(lu))
            if pivot_sizes.min() <= PIVOT_RTOL * pivot_sizes.max():
                logger.warning("preconditioner block %d is singular, using its pseudo-inverse", index)
                self._factors.append(pinv(block, rtol=PINV_RTOL))
                self.singular = True
            else:
                self._factors.append((lu, pivots))
            self._offsets.append(self._offsets[-1] + block.shape[0])

    @property
    def size(self) -> int:
        return self._offsets[-1]

    def apply(self, vector: np.ndarray) -> np.ndarray:
        vector = np.asarray(vector, dtype=float)
        result = np.empty_like(vector)
        for factor, start, stop in zip(self._factors, self._offsets[:-1], self._offsets[1:]):
            if isinstance(factor, tuple):
                result[start:stop] = lu_solve(factor, vector[start:stop], check_finite=False)
            else:
                result[start:stop] = factor @ vector[start:stop]
        return result

    __call__ = apply


class CoupledSystem:
    """Dense assembly of the position/tension system for all vesicles."""

    def __init__(
        self,
        frame: InteractionFrame,
        identity_scale: float,
        dlp_scale: float,
        bending_scale: float,
        constraint_scale: float,
        constraints: Sequence[np.ndarray],
    ):
        self.frame = frame
        self.identity_scale = identity_scale
        self.dlp_scale = dlp_scale
        self.bending_scale = bending_scale
        self.constraint_scale = constraint_scale
        self.constraints = list(constraints)

        self.sizes = [3 * v.n for v in frame.vesicles]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.blocks = [[self._block(k, j) for j in range(frame.count)] for k in range(frame.count)]
        self.matrix = np.block(self.blocks)

    def _block(self, k: int, j: int) -> np.ndarray:
        frame = self.frame
        nk, nj = frame.vesicles[k].n, frame.vesicles[j].n
        slp = frame.slp(k, j)
        position = -self.dlp_scale * frame.dlp(k, j)
        if self.bending_scale:
            position = position + self.bending_scale * slp @ frame.bending[j]
        if k == j:
            position = position + self.identity_scale * frame.vesicles[k].alpha * np.eye(2 * nk)
        block = np.zeros((3 * nk, 3 * nj))
        block[: 2 * nk, : 2 * nj] = position
        block[: 2 * nk, 2 * nj:] = -slp @ frame.tension[j]
        if k == j:
            block[2 * nk:, : 2 * nj] = self.constraint_scale * self.constraints[k]
        return block

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    def matvec(self, operand: np.ndarray) -> np.ndarray:
        return self.matrix @ operand

    def preconditioner(self) -> BlockPreconditioner:
        return BlockPreconditioner([self.blocks[k][k] for k in range(self.frame.count)])

    def split(self, operand: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Per-vesicle (planar positions, tension) from a global operand."""
        parts = []
        for vesicle, start in zip(self.frame.vesicles, self.offsets[:-1]):
            n = vesicle.n
            chunk = operand[start:start + 3 * n]
            parts.append((unstack(chunk[: 2 * n]), chunk[2 * n:].copy()))
        return parts

    def solve(self, rhs: np.ndarray, context: SolverContext, x0: Optional[np.ndarray] = None):
        solution, iterations = gmres_solve(
            self.matvec,
            self.preconditioner(),
            rhs,
            context.settings.gmres,
            context.counter,
            x0=x0,
        )
        return self.split(solution), iterations


def join(parts: Sequence[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Inverse of CoupledSystem.split."""
    return np.concatenate([np.concatenate([stack(p), np.asarray(s, dtype=float)]) for p, s in parts])


# System builders
def provisional_system(frame: InteractionFrame, dt: float) -> CoupledSystem:
    inverse = 1.0 / dt
    return CoupledSystem(frame, inverse, inverse, 1.0, inverse, frame.divergence)


def correction_system(
    frame: InteractionFrame, dt: float, references: Sequence[ClosedCurve]
) -> CoupledSystem:
    inverse = 1.0 / dt
    constraints = [
        divergence_matrix(v.curve, reference) for v, reference in zip(frame.vesicles, references)
    ]
    return CoupledSystem(frame, inverse, inverse, 1.0, inverse, constraints)


def tension_system(frame: InteractionFrame) -> CoupledSystem:
    return CoupledSystem(frame, 1.0, 1.0, 0.0, 1.0, frame.divergence)


class VelocitySystem:
    """(alpha I - D) on stacked velocities of all vesicles."""

    def __init__(self, frame: InteractionFrame):
        self.frame = frame
        self.matrix = np.block(frame.velocity_blocks)
        self.sizes = [2 * v.n for v in frame.vesicles]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])

    def matvec(self, operand: np.ndarray) -> np.ndarray:
        return self.matrix @ operand

    def preconditioner(self) -> BlockPreconditioner:
        return BlockPreconditioner([self.frame.velocity_blocks[k][k] for k in range(self.frame.count)])

    def solve(self, fields: Sequence[np.ndarray], context: SolverContext) -> Tuple[List[np.ndarray], int]:
        rhs = np.concatenate([stack(f) for f in fields])
        solution, iterations = gmres_solve(
            self.matvec, self.preconditioner(), rhs, context.settings.gmres, context.counter
        )
        return [unstack(solution[a:b]) for a, b in zip(self.offsets[:-1], self.offsets[1:])], iterations


# Right-hand sides
def provisional_rhs(frame: InteractionFrame, dt: float, flow: FarFieldFlow) -> np.ndarray:
    """(alpha/dt) x^N - (1/dt) D x^N + v_inf(x^N) and 1/dt on the constraint rows."""
    positions = [v.curve.points for v in frame.vesicles]
    jump = frame.apply_velocity_operator(positions)
    parts = [
        (j / dt + flow(v.curve.points), np.full(v.n, 1.0 / dt))
        for v, j in zip(frame.vesicles, jump)
    ]
    return join(parts)


def correction_rhs(
    frame: InteractionFrame,
    dt: float,
    previous_errors: Sequence[np.ndarray],
    residual_increments: Sequence[np.ndarray],
    references: Sequence[ClosedCurve],
) -> np.ndarray:
    """(alpha I - D)(e^m + r^{m+1} - r^m)/dt and the linearized stretch defect."""
    combined = [e + dr for e, dr in zip(previous_errors, residual_increments)]
    jump = frame.apply_velocity_operator(combined)
    parts = [
        (j / dt, 0.5 * stretch_defect(v.curve, reference) / dt)
        for v, j, reference in zip(frame.vesicles, jump, references)
    ]
    return join(parts)


def tension_rhs(frame: InteractionFrame, flow: FarFieldFlow) -> np.ndarray:
    """v_inf - S B x with a homogeneous divergence constraint."""
    bending = [
        unstack(b @ v.curve.stacked) for v, b in zip(frame.vesicles, frame.bending)
    ]
    induced = frame.membrane_velocity(bending)
    parts = [
        (flow(v.curve.points) - u, np.zeros(v.n)) for v, u in zip(frame.vesicles, induced)
    ]
    return join(parts)


# Operation-level entry points
def provisional_matvec(
    vesicles: Sequence[VesicleState], operand: np.ndarray, dt: float, context: SolverContext
) -> np.ndarray:
    system = provisional_system(InteractionFrame(vesicles, context.potentials), dt)
    context.counter.matvecs += 1
    return system.matvec(operand)


def correction_matvec(
    vesicles: Sequence[VesicleState],
    operand: np.ndarray,
    dt: float,
    references: Sequence[ClosedCurve],
    context: SolverContext,
) -> np.ndarray:
    system = correction_system(InteractionFrame(vesicles, context.potentials), dt, references)
    context.counter.matvecs += 1
    return system.matvec(operand)


def build_preconditioner(
    vesicles: Sequence[VesicleState],
    dt: float,
    which: str,
    context: SolverContext,
    references: Optional[Sequence[ClosedCurve]] = None,
) -> BlockPreconditioner:
    frame = InteractionFrame(vesicles, context.potentials)
    if which == "provisional":
        return provisional_system(frame, dt).preconditioner()
    if which == "correction":
        return correction_system(frame, dt, references or frame.curves).preconditioner()
    raise InvalidInputError(f"unknown system {which!r}")
