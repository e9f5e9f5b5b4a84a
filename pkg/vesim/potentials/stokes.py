"""2D Stokes single-layer (Stokeslet) and double-layer (stresslet) potentials.

All matrices act on the stacked layout: a density on an N-node source maps
``[fx..., fy...]`` to ``[ux..., uy...]`` at T targets, i.e. shape ``(2T, 2N)``.

Kernel convention, with ``r = target - source`` and ``n`` the outward normal
at the source::

    S f = 1/(4 pi mu) int (-log|r| I + r r^T / |r|^2) f ds
    D u = (1 - nu)/pi int (r.n) r r^T / |r|^4 u ds

For a constant density ``u0`` the double layer equals ``-(1 - nu) u0``
inside the curve, ``0`` outside and ``-(1 - nu) u0 / 2`` as a principal
value on the curve.

Quadrature:
  * self-interaction of S: Kress product quadrature for the periodic log
    singularity plus the trapezoid rule on the smooth remainder;
  * self-interaction of D: trapezoid rule with the diagonal limit
    ``-(curvature/2) t t^T``;
  * well-separated targets: trapezoid rule on the source upsampled by
    ``upsampling_factor``;
  * targets within ``near_threshold_factor`` local spacings: interpolation
    along the normal ray between the one-sided boundary limit and upsampled
    values at safe distances.
"""

import logging
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.interpolate import BarycentricInterpolator
from scipy.linalg import block_diag
from scipy.spatial.distance import cdist

from vesim.errors import InvalidInputError, NearSingularMisuseError
from vesim.geometry.spectral_curve import (
    ClosedCurve,
    fourier_interpolation_weights,
    parameter_nodes,
    resampling_matrix,
    stack,
    unstack,
)
from vesim.schemas.schemas import LayerPotentialConfig

logger = logging.getLogger(__name__)

SINGLE_LAYER = "slp"
DOUBLE_LAYER = "dlp"

# Newton iteration for the closest boundary point
CLOSEST_POINT_MAX_ITER = 30
CLOSEST_POINT_TOL = 1e-14


# Direct kernels on raw point sets
def stokeslet_matrix(targets, sources, weights, viscosity: float = 1.0) -> np.ndarray:
    r = np.asarray(targets, dtype=float)[:, None, :] - np.asarray(sources, dtype=float)[None, :, :]
    rx, ry = r[..., 0], r[..., 1]
    rho2 = rx * rx + ry * ry
    scale = np.asarray(weights, dtype=float)[None, :] / (4 * np.pi * viscosity)
    log_term = -0.5 * np.log(rho2)
    kxy = rx * ry / rho2 * scale
    return np.block([
        [(log_term + rx * rx / rho2) * scale, kxy],
        [kxy, (log_term + ry * ry / rho2) * scale],
    ])


def stresslet_matrix(targets, sources, normals, weights, nu: float) -> np.ndarray:
    r = np.asarray(targets, dtype=float)[:, None, :] - np.asarray(sources, dtype=float)[None, :, :]
    rx, ry = r[..., 0], r[..., 1]
    rho2 = rx * rx + ry * ry
    normals = np.asarray(normals, dtype=float)
    rdotn = rx * normals[None, :, 0] + ry * normals[None, :, 1]
    scale = (1.0 - nu) / np.pi * rdotn / rho2**2 * np.asarray(weights, dtype=float)[None, :]
    kxy = rx * ry * scale
    return np.block([[rx * rx * scale, kxy], [kxy, ry * ry * scale]])


@lru_cache(maxsize=32)
def _kress_log_weights(n: int) -> np.ndarray:
    # R_ij with sum_j R_ij phi(theta_j) ~ int log(4 sin^2((theta_i - tau)/2)) phi(tau) dtau
    theta = parameter_nodes(n)
    delta = theta[:, None] - theta[None, :]
    m = np.arange(1, n // 2)
    weights = -(4 * np.pi / n) * (np.cos(delta[..., None] * m) @ (1.0 / m))
    weights -= (4 * np.pi / n**2) * np.cos(delta * (n / 2))
    weights.setflags(write=False)
    return weights


class LayerPotentials:
    """Direct-summation evaluator for the layer potentials of closed curves.

    Every interaction goes through :meth:`single_layer` / :meth:`double_layer`,
    which return dense matrices; an accelerated backend would replace this
    class.
    """

    def __init__(self, config: Optional[LayerPotentialConfig] = None):
        self.config = config or LayerPotentialConfig()

    @property
    def viscosity(self) -> float:
        return self.config.viscosity

    # Self-interaction
    def single_layer_self(self, source: ClosedCurve) -> np.ndarray:
        n = source.n
        w = 2 * np.pi / n
        points = source.points
        r = points[:, None, :] - points[None, :, :]
        rx, ry = r[..., 0], r[..., 1]
        rho2 = rx * rx + ry * ry
        theta = parameter_nodes(n)
        sin2 = 4 * np.sin((theta[:, None] - theta[None, :]) / 2) ** 2

        diagonal = np.diag_indices(n)
        np.fill_diagonal(rho2, 1.0)
        np.fill_diagonal(sin2, 1.0)
        smooth_log = -0.5 * np.log(rho2 / sin2)
        smooth_log[diagonal] = -np.log(source.jacobian)
        rxx, rxy, ryy = rx * rx / rho2, rx * ry / rho2, ry * ry / rho2
        tangent = source.tangent
        rxx[diagonal] = tangent[:, 0] ** 2
        rxy[diagonal] = tangent[:, 0] * tangent[:, 1]
        ryy[diagonal] = tangent[:, 1] ** 2

        log_part = -0.5 * _kress_log_weights(n) + w * smooth_log
        scale = source.jacobian[None, :] / (4 * np.pi * self.viscosity)
        kxy = w * rxy * scale
        return np.block([
            [(log_part + w * rxx) * scale, kxy],
            [kxy, (log_part + w * ryy) * scale],
        ])

    def double_layer_self(self, source: ClosedCurve, nu: float) -> np.ndarray:
        n = source.n
        if nu == 1.0:
            return np.zeros((2 * n, 2 * n))
        points = source.points
        weights = source.arclength_spacing
        r = points[:, None, :] - points[None, :, :]
        rx, ry = r[..., 0], r[..., 1]
        rho2 = rx * rx + ry * ry
        np.fill_diagonal(rho2, 1.0)
        normals = source.normal
        rdotn = rx * normals[None, :, 0] + ry * normals[None, :, 1]
        scale = rdotn / rho2**2
        kxx, kxy, kyy = rx * rx * scale, rx * ry * scale, ry * ry * scale

        # smooth limit of the stresslet as the source approaches the target
        limit = -0.5 * source.curvature
        tangent = source.tangent
        diagonal = np.diag_indices(n)
        kxx[diagonal] = limit * tangent[:, 0] ** 2
        kxy[diagonal] = limit * tangent[:, 0] * tangent[:, 1]
        kyy[diagonal] = limit * tangent[:, 1] ** 2

        prefactor = (1.0 - nu) / np.pi * weights[None, :]
        return np.block([[kxx, kxy], [kxy, kyy]]) * np.tile(prefactor, (1, 2))

    # Off-surface targets
    def is_near(self, source: ClosedCurve, targets) -> np.ndarray:
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        distances = cdist(targets, source.points)
        ratio = distances / source.arclength_spacing[None, :]
        return ratio.min(axis=1) < self.config.near_threshold_factor

    def _upsampled(self, source: ClosedCurve):
        factor = self.config.upsampling_factor
        fine = source.upsampled(factor)
        interpolation = resampling_matrix(source.n, factor * source.n)
        return fine, block_diag(interpolation, interpolation)

    def _smooth(self, kind: str, source: ClosedCurve, nu: float, targets, upsampled=None) -> np.ndarray:
        fine, interpolation = upsampled or self._upsampled(source)
        if kind == SINGLE_LAYER:
            matrix = stokeslet_matrix(targets, fine.points, fine.arclength_spacing, self.viscosity)
        else:
            matrix = stresslet_matrix(targets, fine.points, fine.normal, fine.arclength_spacing, nu)
        return matrix @ interpolation

    def _self(self, kind: str, source: ClosedCurve, nu: float) -> np.ndarray:
        if kind == SINGLE_LAYER:
            return self.single_layer_self(source)
        return self.double_layer_self(source, nu)

    def _matrix(self, kind: str, source: ClosedCurve, nu: float, targets) -> np.ndarray:
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        count = targets.shape[0]
        if kind == DOUBLE_LAYER and nu == 1.0:
            return np.zeros((2 * count, 2 * source.n))
        matrix = np.empty((2 * count, 2 * source.n))
        near = self.is_near(source, targets)
        far = ~near
        if far.any():
            rows = np.concatenate([np.flatnonzero(far), count + np.flatnonzero(far)])
            matrix[rows] = self._smooth(kind, source, nu, targets[far])
        if near.any():
            rows = np.concatenate([np.flatnonzero(near), count + np.flatnonzero(near)])
            matrix[rows] = self.near_singular(kind, source, nu, targets[near])
        return matrix

    def single_layer(self, source: ClosedCurve, targets=None) -> np.ndarray:
        """S from ``source`` to ``targets``; ``None`` means the source nodes."""
        if targets is None:
            return self.single_layer_self(source)
        return self._matrix(SINGLE_LAYER, source, 1.0, targets)

    def double_layer(self, source: ClosedCurve, nu: float, targets=None) -> np.ndarray:
        """D from ``source`` to ``targets``; ``None`` gives the principal value on the source."""
        if targets is None:
            return self.double_layer_self(source, nu)
        return self._matrix(DOUBLE_LAYER, source, nu, targets)

    # Near-singular evaluation
    def near_singular(self, kind: str, source: ClosedCurve, nu: float, targets) -> np.ndarray:
        if kind not in (SINGLE_LAYER, DOUBLE_LAYER):
            raise InvalidInputError(f"unknown kernel kind {kind!r}")
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        count = targets.shape[0]
        if kind == DOUBLE_LAYER and nu == 1.0:
            return np.zeros((2 * count, 2 * source.n))
        if not np.all(self.is_near(source, targets)):
            raise NearSingularMisuseError(
                "near-singular evaluation requested for a target outside the near zone"
            )

        self_matrix = self._self(kind, source, nu)
        upsampled = self._upsampled(source)
        n = source.n
        points_per_ray = self.config.interpolation_points
        band = self.config.near_threshold_factor
        matrix = np.empty((2 * count, 2 * n))
        for index, target in enumerate(targets):
            theta, foot, normal, speed = closest_point(source, target)
            offset = float(np.dot(target - foot, normal))
            weights0 = fourier_interpolation_weights(n, theta)
            boundary_rows = np.vstack([weights0 @ self_matrix[:n], weights0 @ self_matrix[n:]])

            if np.linalg.norm(target - foot) <= 1e-13 * max(1.0, source.length):
                rows = boundary_rows
            else:
                side = 1.0 if offset >= 0 else -1.0
                if kind == DOUBLE_LAYER:
                    jump = side * 0.5 * (1.0 - nu)
                    boundary_rows = boundary_rows + jump * block_diag(weights0, weights0)
                reach = band * speed * 2 * np.pi / n
                distances = reach * np.arange(1, points_per_ray + 1) / points_per_ray
                ray = foot[None, :] + side * distances[:, None] * normal[None, :]
                ray_rows = self._smooth(kind, source, nu, ray, upsampled)

                nodes = np.concatenate([[0.0], distances])
                lagrange = BarycentricInterpolator(nodes, np.eye(nodes.size))(abs(offset))
                lagrange = np.asarray(lagrange).reshape(-1)
                x_rows = np.vstack([boundary_rows[0], ray_rows[:points_per_ray]])
                y_rows = np.vstack([boundary_rows[1], ray_rows[points_per_ray:]])
                rows = np.vstack([lagrange @ x_rows, lagrange @ y_rows])
            matrix[index] = rows[0]
            matrix[count + index] = rows[1]
        return matrix


def closest_point(source: ClosedCurve, target):
    """Parameter, foot point, unit outward normal and speed |x_theta| of the
    boundary point closest to ``target``, by Newton iteration on the
    trigonometric interpolant started from the nearest node."""
    target = np.asarray(target, dtype=float)
    n = source.n
    start = int(np.argmin(np.sum((source.points - target) ** 2, axis=1)))
    theta = source.theta[start]
    for _ in range(CLOSEST_POINT_MAX_ITER):
        w0, w1, w2 = (fourier_interpolation_weights(n, theta, order) for order in (0, 1, 2))
        position, velocity, acceleration = w0 @ source.points, w1 @ source.points, w2 @ source.points
        gap = position - target
        gradient = np.dot(gap, velocity)
        curvature_term = np.dot(velocity, velocity) + np.dot(gap, acceleration)
        if curvature_term <= 0:
            break
        step = gradient / curvature_term
        theta -= step
        if abs(step) < CLOSEST_POINT_TOL:
            break
    w0, w1 = fourier_interpolation_weights(n, theta, 0), fourier_interpolation_weights(n, theta, 1)
    foot, velocity = w0 @ source.points, w1 @ source.points
    speed = float(np.hypot(*velocity))
    normal = np.array([velocity[1], -velocity[0]]) / speed
    return float(theta), foot, normal, speed


# Operation-level entry points
def _density(source: ClosedCurve, density) -> np.ndarray:
    density = np.asarray(density, dtype=float)
    if density.shape != (source.n, 2):
        raise InvalidInputError(f"density must have shape ({source.n}, 2), got {density.shape}")
    if not np.all(np.isfinite(density)):
        raise InvalidInputError("density contains non-finite values")
    return density


def _check_self_targets(source: ClosedCurve, targets) -> None:
    if targets is not None and not np.allclose(np.asarray(targets, dtype=float), source.points, rtol=0, atol=1e-14):
        raise InvalidInputError("self evaluation requires the targets to be the source nodes")


def slp_apply(
    source: ClosedCurve,
    density,
    targets=None,
    self_eval: bool = False,
    config: Optional[LayerPotentialConfig] = None,
) -> np.ndarray:
    density = _density(source, density)
    potentials = LayerPotentials(config)
    if self_eval or targets is None:
        _check_self_targets(source, targets)
        matrix = potentials.single_layer_self(source)
    else:
        matrix = potentials.single_layer(source, targets)
    return unstack(matrix @ stack(density))


def dlp_apply(
    source: ClosedCurve,
    nu: float,
    density,
    targets=None,
    self_eval: bool = False,
    config: Optional[LayerPotentialConfig] = None,
) -> np.ndarray:
    density = _density(source, density)
    potentials = LayerPotentials(config)
    if self_eval or targets is None:
        _check_self_targets(source, targets)
        matrix = potentials.double_layer_self(source, nu)
    else:
        matrix = potentials.double_layer(source, nu, targets)
    return unstack(matrix @ stack(density))


def near_singular_eval(
    source: ClosedCurve,
    kind: str,
    density,
    targets,
    nu: float = 1.0,
    config: Optional[LayerPotentialConfig] = None,
) -> np.ndarray:
    density = _density(source, density)
    matrix = LayerPotentials(config).near_singular(kind, source, nu, targets)
    return unstack(matrix @ stack(density))
