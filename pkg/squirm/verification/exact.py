"""
Exact steady squirmer solutions with the two-mode Blake slip u_s = B1 sin(theta) + B2 sin(theta) cos(theta):
the spherical squirmer and the circular squirmer of planar flow.

Fields are returned in the (n_b, tau_b) frame, n_b = e_r pointing away from the body center and
tau_b = e_theta, with theta measured from the swimming axis, in the laboratory frame where the
body translates with the swimming speed.
"""
from typing import Callable, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, validator

from squirm.exceptions import VerificationException
from squirm.kinematics import LAMBDA

NEUTRAL = "neutral"
PUSHER = "pusher"
PULLER = "puller"
RADIUS_TOLERANCE = 1e-12

Field = Tuple[NDArray[np.float64], NDArray[np.float64]]


class BlakeCoefficients(BaseModel):
    """Slip-mode amplitudes B1, B2 of a squirmer of radius R"""

    B1: float
    B2: float = 0.0
    R: float = 1.0

    class Config:
        allow_mutation = False

    @validator("R")
    def check_radius(cls, val: float) -> float:  # pylint: disable=no-self-argument, no-self-use
        if not val > 0:
            raise ValueError(f"radius must be positive, but {val} is found")
        return val

    @property
    def beta(self) -> float:
        if self.B1 == 0:
            raise VerificationException("beta = B2 / B1 is undefined for B1 = 0")
        return self.B2 / self.B1


def _check_radius(r: NDArray[np.float64], c: BlakeCoefficients) -> None:
    if np.any(r < c.R * (1.0 - RADIUS_TOLERANCE)):
        raise VerificationException(f"Exact field evaluated inside the body, r = {r.min()} < R = {c.R}")


def exact_sphere_field(r: ArrayLike, theta: ArrayLike, c: BlakeCoefficients, mu: float) -> Field:
    """Velocity (..., 2) as (u_n, u_tau) and pressure of the spherical squirmer.

    Raises:
        VerificationException: r < R.
    """
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    _check_radius(r, c)
    ratio = c.R / r
    cos, sin = np.cos(theta), np.sin(theta)
    u_n = (2.0 / 3.0) * c.B1 * ratio**3 * cos + 0.5 * c.B2 * (ratio**4 - ratio**2) * (3 * cos**2 - 1)
    u_tau = (1.0 / 3.0) * c.B1 * ratio**3 * sin + c.B2 * ratio**4 * sin * cos
    p = -mu * c.B2 * (c.R**2 / r**3) * (3 * cos**2 - 1)
    return np.stack([u_n, u_tau], axis=-1), p


def exact_circle_field(r: ArrayLike, theta: ArrayLike, c: BlakeCoefficients, mu: float) -> Field:
    """Velocity (..., 2) as (u_n, u_tau) and pressure of the circular squirmer in planar flow.

    Raises:
        VerificationException: r < R.
    """
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    _check_radius(r, c)
    ratio = c.R / r
    u_n = 0.5 * c.B1 * ratio**2 * np.cos(theta) + 0.5 * c.B2 * ratio * (ratio**2 - 1) * np.cos(2 * theta)
    u_tau = 0.5 * c.B1 * ratio**2 * np.sin(theta) + 0.5 * c.B2 * ratio**3 * np.sin(2 * theta)
    p = -mu * c.B2 * (c.R / r**2) * np.cos(2 * theta)
    return np.stack([u_n, u_tau], axis=-1), p


def exact_swim_speed(c: BlakeCoefficients) -> float:
    """Swimming speed 2 B1 / 3 of the spherical squirmer"""
    return 2.0 * c.B1 / 3.0


def circle_swim_speed(c: BlakeCoefficients) -> float:
    """Swimming speed B1 / 2 of the circular squirmer"""
    return 0.5 * c.B1


def classify(beta: float) -> str:
    """neutral for beta = 0, pusher for beta < 0, puller for beta > 0"""
    if not np.isfinite(beta):
        raise VerificationException(f"Cannot classify beta = {beta}")
    if beta == 0:
        return NEUTRAL
    return PUSHER if beta < 0 else PULLER


def exact_cartesian(
    points: ArrayLike,
    center: ArrayLike,
    axis: ArrayLike,
    c: BlakeCoefficients,
    mu: float,
    field: Callable[[ArrayLike, ArrayLike, BlakeCoefficients, float], Field],
) -> Field:
    """Evaluate field at Cartesian (or meridian (r, z)) points, velocity in Cartesian components.

    theta is the signed angle from axis to x - center and tau_b the counter-clockwise tangent,
    which agrees with the polar frame of the meridian half-plane since u_tau is odd in theta.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    rel = points - np.asarray(center, dtype=float)
    r = np.linalg.norm(rel, axis=1)
    e_r = rel / r[:, None]
    theta = np.arctan2(axis[0] * e_r[:, 1] - axis[1] * e_r[:, 0], e_r @ axis)
    local, p = field(r, theta, c, mu)
    e_theta = e_r @ LAMBDA.T
    return local[:, :1] * e_r + local[:, 1:] * e_theta, p
