"""Membrane operators: bending, tension, surface divergence and traction.

Each operator has a field form (applied to ``(N, 2)`` or ``(N,)`` samples) and
a dense matrix form acting on the stacked layout used by the linear solvers.
"""

from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy.linalg import block_diag

from vesim.errors import InvalidInputError
from vesim.geometry.spectral_curve import (
    ClosedCurve,
    arclength_derivative,
    arclength_derivative_matrix,
    fourier_derivative_matrix,
)

if TYPE_CHECKING:
    from vesim.models.models import VesicleState


def _planar(curve: ClosedCurve, field) -> np.ndarray:
    field = np.asarray(field, dtype=float)
    if field.shape != (curve.n, 2):
        raise InvalidInputError(f"expected a planar field of shape ({curve.n}, 2), got {field.shape}")
    return field


def bending_apply(curve: ClosedCurve, kappa_b: float, field) -> np.ndarray:
    return kappa_b * arclength_derivative(curve, _planar(curve, field), 4)


def tension_apply(curve: ClosedCurve, sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (curve.n,):
        raise InvalidInputError(f"tension must have shape ({curve.n},), got {sigma.shape}")
    return arclength_derivative(curve, sigma[:, None] * curve.tangent, 1)


def surface_divergence(curve: ClosedCurve, field) -> np.ndarray:
    derivative = arclength_derivative(curve, _planar(curve, field), 1)
    return np.einsum("ij,ij->i", curve.tangent, derivative)


def traction(state: "VesicleState") -> np.ndarray:
    curve = state.curve
    return -bending_apply(curve, state.kappa_b, curve.points) + tension_apply(curve, state.tension)


# Matrix forms on the stacked layout [x..., y...]
def bending_matrix(curve: ClosedCurve, kappa_b: float) -> np.ndarray:
    block = kappa_b * arclength_derivative_matrix(curve, 4)
    return block_diag(block, block)


def tension_matrix(curve: ClosedCurve) -> np.ndarray:
    """(2N, N) matrix of sigma -> (sigma x_s)_s."""
    ds = arclength_derivative_matrix(curve, 1)
    tangent = curve.tangent
    return np.vstack([ds * tangent[:, 0], ds * tangent[:, 1]])


def divergence_matrix(curve: ClosedCurve, reference: Optional[ClosedCurve] = None) -> np.ndarray:
    """(N, 2N) matrix of u -> x_s . u_s.

    With ``reference`` the arclength derivative uses the reference curve's
    Jacobian for both factors, giving the linearized inextensibility rows
    ``x_{s0} . u_{s0}`` of a correction sweep.
    """
    if reference is None:
        ds = arclength_derivative_matrix(curve, 1)
        tangent = curve.tangent
        return np.hstack([tangent[:, 0:1] * ds, tangent[:, 1:2] * ds])
    if reference.n != curve.n:
        raise InvalidInputError("reference curve must share the discretization")
    d1 = fourier_derivative_matrix(curve.n, 1)
    scaled = curve.x_theta / reference.jacobian[:, None] ** 2
    return np.hstack([scaled[:, 0:1] * d1, scaled[:, 1:2] * d1])


def stretch_defect(curve: ClosedCurve, reference: ClosedCurve) -> np.ndarray:
    """1 - |x_{s0}|^2: local arclength defect measured in the reference frame."""
    ratio = curve.jacobian / reference.jacobian
    return 1.0 - ratio**2
