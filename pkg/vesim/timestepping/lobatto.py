from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from vesim.errors import InvalidInputError


@dataclass(frozen=True)
class LobattoGrid:
    """Gauss-Lobatto substeps of a unit macro step.

    ``integration[j] @ f`` is the integral over ``[0, nodes[j]]`` of the
    degree ``p - 1`` interpolant of the nodal values ``f``.
    """

    nodes: np.ndarray
    integration: np.ndarray

    @property
    def p(self) -> int:
        return self.nodes.size

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights of the whole interval."""
        return self.integration[-1]

    @property
    def substeps(self) -> np.ndarray:
        return np.diff(self.nodes)


@lru_cache(maxsize=16)
def lobatto_grid(p: int) -> LobattoGrid:
    if p < 3:
        raise InvalidInputError(f"need at least 3 Gauss-Lobatto nodes, got p={p}")

    # interior nodes are the roots of P'_{p-1} on [-1, 1]
    derivative = legendre.legder(np.eye(p)[p - 1])
    interior = np.sort(legendre.legroots(derivative).real)
    nodes = np.concatenate([[0.0], (interior + 1.0) / 2.0, [1.0]])
    # symmetric about 1/2 up to roundoff
    nodes = 0.5 * (nodes + (1.0 - nodes[::-1]))

    # integrals of the Lagrange basis through the monomial Vandermonde matrix
    powers = np.arange(p)
    vandermonde = nodes[:, None] ** powers
    antiderivative = nodes[:, None] ** (powers + 1) / (powers + 1)
    integration = np.linalg.solve(vandermonde.T, antiderivative.T).T

    nodes.setflags(write=False)
    integration.setflags(write=False)
    return LobattoGrid(nodes=nodes, integration=integration)
