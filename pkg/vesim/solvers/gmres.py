import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from vesim.errors import SolverFailure
from vesim.schemas.schemas import GmresConfig

logger = logging.getLogger(__name__)


class MatvecCounter:
    """Counts operator applications and GMRES iterations across solves."""

    def __init__(self):
        self.matvecs = 0
        self.iterations = 0
        self.solves = 0

    def wrap(self, operator: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
        def counted(vector):
            self.matvecs += 1
            return operator(vector)

        return counted

    def snapshot(self) -> Tuple[int, int]:
        return self.matvecs, self.iterations


class _IterationCallback:
    def __init__(self):
        self.iterations = 0
        self.residual = math.inf

    def __call__(self, residual_norm):
        self.iterations += 1
        self.residual = float(residual_norm)


def _preconditioned_residual(matvec, preconditioner, rhs, solution) -> float:
    reference = np.linalg.norm(preconditioner(rhs))
    if reference == 0:
        return math.inf
    return float(np.linalg.norm(preconditioner(rhs - matvec(solution))) / reference)


def gmres_solve(
    matvec: Callable[[np.ndarray], np.ndarray],
    preconditioner: Optional[Callable[[np.ndarray], np.ndarray]],
    rhs: np.ndarray,
    config: Optional[GmresConfig] = None,
    counter: Optional[MatvecCounter] = None,
    x0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, int]:
    """Solve ``A x = rhs`` with left-preconditioned GMRES.

    Returns the solution and the number of inner iterations. Raises
    SolverFailure carrying the best iterate when the tolerance is not met.
    A preconditioner flagged ``singular`` (one built from a pseudo-inverse)
    lets a solve pass on its preconditioned residual alone.
    """
    config = config or GmresConfig()
    rhs = np.asarray(rhs, dtype=float)
    size = rhs.shape[0]
    if not np.all(np.isfinite(rhs)):
        raise SolverFailure("right-hand side contains non-finite values", np.zeros(size), math.nan)
    if not np.any(rhs):
        return np.zeros(size), 0

    counter = counter or MatvecCounter()
    operator = LinearOperator((size, size), matvec=counter.wrap(matvec), dtype=float)
    inverse = None
    if preconditioner is not None:
        inverse = LinearOperator((size, size), matvec=preconditioner, dtype=float)

    restart = config.restart or min(config.max_iterations, size)
    cycles = max(1, math.ceil(config.max_iterations / restart))
    callback = _IterationCallback()
    solution, info = gmres(
        operator,
        rhs,
        x0=x0,
        rtol=config.tolerance,
        atol=0.0,
        restart=restart,
        maxiter=cycles,
        M=inverse,
        callback=callback,
        callback_type="pr_norm",
    )
    counter.iterations += callback.iterations
    counter.solves += 1

    if not np.all(np.isfinite(solution)):
        raise SolverFailure("GMRES produced non-finite values", best_iterate=solution, residual=math.nan)
    if info != 0:
        residual = float(np.linalg.norm(rhs - matvec(solution)) / np.linalg.norm(rhs))
        singular = getattr(preconditioner, "singular", False)
        if singular and _preconditioned_residual(matvec, preconditioner, rhs, solution) <= config.tolerance:
            # consistent singular system
            logger.warning(
                "gmres accepted on the preconditioned residual (true relative residual %.3e)", residual
            )
            return solution, callback.iterations
        raise SolverFailure(
            f"GMRES did not converge (info={info}, iterations={callback.iterations}, "
            f"relative residual={residual:.3e})",
            best_iterate=solution,
            residual=residual,
        )
    logger.debug(
        "gmres size=%d iterations=%d preconditioned_residual=%.3e",
        size,
        callback.iterations,
        callback.residual,
    )
    return solution, callback.iterations
