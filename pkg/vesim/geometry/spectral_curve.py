"""Fourier-spectral representation of closed planar curves.

Points are stored as an ``(N, 2)`` array sampled at the equispaced parameter
values ``theta_i = 2 pi i / N``. Planar vector fields use the same layout;
the linear solvers work on the stacked layout ``[x_0..x_{N-1}, y_0..y_{N-1}]``
(see :func:`stack` / :func:`unstack`).
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import fft, signal

from vesim.errors import GeometryError, InvalidInputError

# A parameterization with min |x_theta| below this fraction of the max is degenerate
JACOBIAN_RTOL = 1e-10
# Relative spread of |x_theta| under which a curve counts as arclength-parameterized
UNIFORM_JACOBIAN_RTOL = 1e-12


def stack(field: np.ndarray) -> np.ndarray:
    field = np.asarray(field, dtype=float)
    return np.concatenate([field[:, 0], field[:, 1]])


def unstack(vector: np.ndarray) -> np.ndarray:
    vector = np.asarray(vector, dtype=float)
    n = vector.shape[0] // 2
    return np.column_stack([vector[:n], vector[n:]])


def parameter_nodes(n: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n) / n


def _check_point_count(n: int) -> None:
    if n < 8 or n % 2:
        raise GeometryError(f"curve needs an even number of points >= 8, got N={n}")


def fourier_derivative(values, order: int, n: Optional[int] = None) -> np.ndarray:
    """Spectral derivative in theta of periodic samples along axis 0.

    ``values`` may be ``(N,)`` or ``(N, m)``; every column is differentiated.
    Pass ``n`` to require a specific length (e.g. the N of the owning curve).
    """
    values = np.asarray(values)
    if not np.isrealobj(values):
        raise InvalidInputError("fourier_derivative expects real samples")
    length = values.shape[0]
    if n is not None and length != n:
        raise InvalidInputError(f"expected {n} samples, got {length}")
    if length % 2:
        raise InvalidInputError(f"sample count must be even, got {length}")
    if order < 1:
        raise InvalidInputError(f"derivative order must be positive, got {order}")

    k = fft.fftfreq(length, d=1.0 / length)
    multiplier = (1j * k) ** order
    if order % 2:
        multiplier[length // 2] = 0.0
    shape = (length,) + (1,) * (values.ndim - 1)
    coefficients = fft.fft(values.astype(float), axis=0)
    return np.real(fft.ifft(coefficients * multiplier.reshape(shape), axis=0))


@lru_cache(maxsize=64)
def _derivative_matrix(n: int, order: int) -> np.ndarray:
    matrix = fourier_derivative(np.eye(n), order)
    matrix.setflags(write=False)
    return matrix


def fourier_derivative_matrix(n: int, order: int) -> np.ndarray:
    """Dense N x N matrix of :func:`fourier_derivative` (read-only, cached)."""
    return _derivative_matrix(n, order)


def fourier_interpolation_weights(n: int, theta, order: int = 0) -> np.ndarray:
    """Weights w such that ``w @ f`` is the ``order``-th theta derivative of the
    trigonometric interpolant of the samples ``f`` evaluated at ``theta``.

    Scalar ``theta`` gives shape ``(N,)``; an array gives ``(len(theta), N)``.
    """
    theta = np.asarray(theta, dtype=float)
    delta = np.atleast_1d(theta)[:, None] - parameter_nodes(n)[None, :]
    k = np.arange(1, n // 2)
    shift = order * np.pi / 2
    weights = 2 * np.cos(delta[..., None] * k + shift) @ (k.astype(float) ** order)
    weights += (n / 2) ** order * np.cos(delta * (n / 2) + shift)
    if order == 0:
        weights += 1.0
    weights /= n
    return weights[0] if theta.ndim == 0 else weights


def resample(values, m: int) -> np.ndarray:
    """Band-limited resampling of periodic samples along axis 0 to ``m`` points."""
    return signal.resample(np.asarray(values, dtype=float), m, axis=0)


@lru_cache(maxsize=64)
def _resampling_matrix(n: int, m: int) -> np.ndarray:
    matrix = signal.resample(np.eye(n), m, axis=0)
    matrix.setflags(write=False)
    return matrix


def resampling_matrix(n: int, m: int) -> np.ndarray:
    """``(m, N)`` matrix mapping N periodic samples to m resampled values."""
    return _resampling_matrix(n, m)


@dataclass(frozen=True)
class CurveGeometry:
    tangent: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray
    jacobian: np.ndarray
    arclength_spacing: np.ndarray


class ClosedCurve:
    """N-point Fourier discretization of a closed planar curve.

    Curves are kept counterclockwise: a clockwise input is reversed in place
    of node 0 so the first sample (the tracker point) is preserved.
    """

    def __init__(self, points):
        points = np.array(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise InvalidInputError(f"curve points must have shape (N, 2), got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise InvalidInputError("curve points must be finite")
        _check_point_count(points.shape[0])

        if _signed_area(points) < 0:
            points = np.roll(points[::-1], 1, axis=0)
        points.setflags(write=False)
        self.points = points

        jacobian = self.jacobian
        if jacobian.max() == 0 or jacobian.min() <= JACOBIAN_RTOL * jacobian.max():
            raise GeometryError("degenerate parameterization: |dx/dtheta| vanishes at a node")

    # Constructors
    @classmethod
    def ellipse(
        cls,
        n: int,
        a: float,
        b: float,
        center: Tuple[float, float] = (0.0, 0.0),
        rotation: float = 0.0,
    ) -> "ClosedCurve":
        theta = parameter_nodes(n)
        local = np.column_stack([a * np.cos(theta), b * np.sin(theta)])
        return cls(rotate(local, rotation) + np.asarray(center, dtype=float))

    @classmethod
    def circle(cls, n: int, radius: float = 1.0, center: Tuple[float, float] = (0.0, 0.0)) -> "ClosedCurve":
        return cls.ellipse(n, radius, radius, center)

    @classmethod
    def from_stacked(cls, vector) -> "ClosedCurve":
        return cls(unstack(vector))

    def translated(self, shift) -> "ClosedCurve":
        return ClosedCurve(self.points + np.asarray(shift, dtype=float))

    def rotated(self, angle: float, about=(0.0, 0.0)) -> "ClosedCurve":
        about = np.asarray(about, dtype=float)
        return ClosedCurve(rotate(self.points - about, angle) + about)

    def upsampled(self, factor: int) -> "ClosedCurve":
        return ClosedCurve(resample(self.points, factor * self.n))

    # Samples
    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def stacked(self) -> np.ndarray:
        return stack(self.points)

    @property
    def theta(self) -> np.ndarray:
        return parameter_nodes(self.n)

    # Derivatives
    @cached_property
    def x_theta(self) -> np.ndarray:
        return fourier_derivative(self.points, 1)

    @cached_property
    def x_thetatheta(self) -> np.ndarray:
        return fourier_derivative(self.points, 2)

    @cached_property
    def jacobian(self) -> np.ndarray:
        return np.hypot(self.x_theta[:, 0], self.x_theta[:, 1])

    @cached_property
    def is_arclength_parameterized(self) -> bool:
        jacobian = self.jacobian
        return bool(np.ptp(jacobian) <= UNIFORM_JACOBIAN_RTOL * jacobian.max())

    @cached_property
    def tangent(self) -> np.ndarray:
        return self.x_theta / self.jacobian[:, None]

    @cached_property
    def normal(self) -> np.ndarray:
        # tangent rotated by -pi/2, outward for counterclockwise curves
        return np.column_stack([self.tangent[:, 1], -self.tangent[:, 0]])

    @cached_property
    def curvature(self) -> np.ndarray:
        d1, d2 = self.x_theta, self.x_thetatheta
        return (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / self.jacobian**3

    @cached_property
    def arclength_spacing(self) -> np.ndarray:
        return self.jacobian * (2 * np.pi / self.n)

    # Functionals
    @cached_property
    def area(self) -> float:
        return _signed_area(self.points, self.x_theta)

    @cached_property
    def length(self) -> float:
        return float(self.arclength_spacing.sum())

    @property
    def reduced_area(self) -> float:
        return 4 * np.pi * self.area / self.length**2

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def __repr__(self) -> str:
        return f"ClosedCurve(n={self.n}, area={self.area:.6g}, length={self.length:.6g})"


def rotate(points: np.ndarray, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.asarray(points, dtype=float) @ np.array([[c, s], [-s, c]])


def _signed_area(points: np.ndarray, x_theta: Optional[np.ndarray] = None) -> float:
    if x_theta is None:
        x_theta = fourier_derivative(points, 1)
    integrand = points[:, 0] * x_theta[:, 1] - points[:, 1] * x_theta[:, 0]
    return float(0.5 * integrand.sum() * 2 * np.pi / points.shape[0])


def arclength_derivative(curve: ClosedCurve, values, order: int = 1) -> np.ndarray:
    """Derivative with respect to arclength applied ``order`` times.

    On an arclength-parameterized curve a single order-q theta derivative
    divided by J^q is used; otherwise first derivatives are chained, which is
    exact for any parameterization.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] != curve.n:
        raise InvalidInputError(f"expected {curve.n} samples, got {values.shape[0]}")
    if order < 1:
        raise InvalidInputError(f"derivative order must be positive, got {order}")
    shape = (curve.n,) + (1,) * (values.ndim - 1)
    jacobian = curve.jacobian.reshape(shape)
    if curve.is_arclength_parameterized:
        return fourier_derivative(values, order) / jacobian**order
    for _ in range(order):
        values = fourier_derivative(values, 1) / jacobian
    return values


def arclength_derivative_matrix(curve: ClosedCurve, order: int = 1) -> np.ndarray:
    """Dense N x N matrix of :func:`arclength_derivative` on scalar fields."""
    inverse_jacobian = 1.0 / curve.jacobian
    if curve.is_arclength_parameterized:
        return (inverse_jacobian**order)[:, None] * fourier_derivative_matrix(curve.n, order)
    first = inverse_jacobian[:, None] * fourier_derivative_matrix(curve.n, 1)
    return np.linalg.matrix_power(first, order)


def geometry(curve: ClosedCurve) -> CurveGeometry:
    return CurveGeometry(
        tangent=curve.tangent,
        normal=curve.normal,
        curvature=curve.curvature,
        jacobian=curve.jacobian,
        arclength_spacing=curve.arclength_spacing,
    )


def area(curve: ClosedCurve) -> float:
    return curve.area


def length(curve: ClosedCurve) -> float:
    return curve.length


def reduced_area(curve: ClosedCurve) -> float:
    return curve.reduced_area
