"""
Rigid-body kinematics of a squirmer: configuration, velocity array, the H matrix that maps
the velocity array to the body velocity at a point, and the Adams-Bashforth predictor on
R^d x SO(d).
"""
from typing import NamedTuple, Optional, Union
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from squirm.exceptions import KinematicsException

# Rotation by a quarter turn in the plane, Lambda y = (-y_2, y_1)
LAMBDA = np.array([[0.0, -1.0], [1.0, 0.0]])

ORTHOGONALITY_TOLERANCE = 1e-10
DEFAULT_PROJECTION_EPS = 1e-12
DEFAULT_PROJECTION_MAX_ITER = 50

Orientation = Union[float, NDArray[np.float64]]
AngularVelocity = Union[float, NDArray[np.float64]]


def n_components(dim: int) -> int:
    """Length of the velocity array, d + d(d-1)/2"""
    if dim not in (2, 3):
        raise KinematicsException(f"Unsupported dimension {dim}, expected 2 or 3")
    return dim + dim * (dim - 1) // 2


class BodyState(NamedTuple):
    """Generalized coordinates and velocity array of one rigid squirmer."""

    x_c: NDArray[np.float64]  # position of the rotation center
    orientation: Orientation  # angle theta (d = 2) or rotation matrix Q (d = 3)
    v_c: NDArray[np.float64]  # translational velocity
    omega: AngularVelocity  # scalar (d = 2) or 3-vector (d = 3)

    @property
    def dim(self) -> int:
        return int(np.asarray(self.x_c).shape[0])

    @property
    def n_c(self) -> int:
        return n_components(self.dim)

    def velocity_array(self) -> NDArray[np.float64]:
        """The velocity array s = (v_c, omega)"""
        return np.concatenate([np.asarray(self.v_c, dtype=float), np.atleast_1d(self.omega)])

    def with_velocity(self, s: ArrayLike) -> "BodyState":
        """Copy of the state carrying velocity array s"""
        s = check_velocity_array(s, self.dim)
        omega: AngularVelocity = float(s[2]) if self.dim == 2 else s[3:].copy()
        return self._replace(v_c=s[: self.dim].copy(), omega=omega)

    def rotation(self) -> NDArray[np.float64]:
        """Rotation matrix of the current orientation"""
        if self.dim == 2:
            return rotation_2d(float(self.orientation))
        return np.asarray(self.orientation, dtype=float)


def body_state(
    x_c: ArrayLike,
    orientation: Optional[Orientation] = None,
    v_c: Optional[ArrayLike] = None,
    omega: Optional[AngularVelocity] = None,
) -> BodyState:
    """Build a validated BodyState, defaulting to rest in the reference orientation.

    Raises:
        KinematicsException: wrong dimensions, non-finite values or Q not a rotation.
    """
    x_c = np.asarray(x_c, dtype=float)
    dim = x_c.shape[0] if x_c.ndim == 1 else -1
    n_components(dim)
    if orientation is None:
        orientation = 0.0 if dim == 2 else np.eye(3)
    if v_c is None:
        v_c = np.zeros(dim)
    if omega is None:
        omega = 0.0 if dim == 2 else np.zeros(3)
    v_c = np.asarray(v_c, dtype=float)
    if v_c.shape != (dim,):
        raise KinematicsException(f"Translational velocity of shape {v_c.shape}, expected ({dim},)")
    if dim == 2:
        orientation = float(orientation)  # type: ignore[arg-type]
        omega = float(omega)  # type: ignore[arg-type]
    else:
        orientation = np.asarray(orientation, dtype=float)
        omega = np.asarray(omega, dtype=float)
        if orientation.shape != (3, 3) or omega.shape != (3,):
            raise KinematicsException("A 3D body needs a 3x3 orientation and a 3-vector omega")
        _check_rotation(orientation)
    state = BodyState(x_c=x_c, orientation=orientation, v_c=v_c, omega=omega)
    if not np.all(np.isfinite(state.velocity_array())) or not np.all(np.isfinite(x_c)):
        raise KinematicsException("Body state contains non-finite entries")
    return state


def check_velocity_array(s: ArrayLike, dim: int) -> NDArray[np.float64]:
    """Validate a velocity array for dimension dim"""
    s = np.asarray(s, dtype=float)
    if s.shape != (n_components(dim),):
        raise KinematicsException(
            f"Velocity array of shape {s.shape} does not match dimension {dim}"
        )
    if not np.all(np.isfinite(s)):
        raise KinematicsException("Velocity array contains non-finite entries")
    return s


def _check_rotation(q: NDArray[np.float64]) -> None:
    residual = np.linalg.norm(q.T @ q - np.eye(3))
    if residual > ORTHOGONALITY_TOLERANCE or np.linalg.det(q) <= 0:
        raise KinematicsException(
            f"Orientation is not a rotation, |Q^T Q - I| = {residual:.3e}"
        )


def rotation_2d(theta: float) -> NDArray[np.float64]:
    cos, sin = np.cos(theta), np.sin(theta)
    return np.array([[cos, -sin], [sin, cos]])


def skw(omega: ArrayLike) -> NDArray[np.float64]:
    """Skew-symmetric matrix with skw(omega) y = omega x y"""
    w = np.asarray(omega, dtype=float)
    if w.shape != (3,):
        raise KinematicsException(f"skw expects a 3-vector, got shape {w.shape}")
    return np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )


def rigid_position(state: BodyState, X: ArrayLike, X_c: ArrayLike) -> NDArray[np.float64]:
    """Spatial position x = x_c + Q (X - X_c) of the material point X.

    Raises:
        KinematicsException: X or X_c does not match the body dimension.
    """
    # pylint: disable=invalid-name
    X = np.asarray(X, dtype=float)
    X_c = np.asarray(X_c, dtype=float)
    if X.shape[-1] != state.dim or X_c.shape != (state.dim,):
        raise KinematicsException(
            f"Reference points of dimension {X.shape[-1]} for a {state.dim}D body"
        )
    return state.x_c + (X - X_c) @ state.rotation().T


def h_matrix(state: BodyState, x: ArrayLike) -> NDArray[np.float64]:
    """The d x n_c matrix H(x) with H s the rigid body velocity at x.

    For several points (shape (m, d)) a stacked (m, d, n_c) array is returned.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    rel = np.atleast_2d(x) - state.x_c
    dim = state.dim
    out = np.zeros((rel.shape[0], dim, state.n_c))
    out[:, :, :dim] = np.eye(dim)
    if dim == 2:
        out[:, :, 2] = rel @ LAMBDA.T
    else:
        # -skw(x - x_c) for every point
        out[:, 0, 4] = rel[:, 2]
        out[:, 0, 5] = -rel[:, 1]
        out[:, 1, 3] = -rel[:, 2]
        out[:, 1, 5] = rel[:, 0]
        out[:, 2, 3] = rel[:, 1]
        out[:, 2, 4] = -rel[:, 0]
    return out[0] if single else out


def ab2_advance(
    state: BodyState,
    s_prev: ArrayLike,
    s_prev2: ArrayLike,
    dt: float,
    orientation_prev2: Optional[NDArray[np.float64]] = None,
    projection: str = "svd",
) -> BodyState:
    """Advance the configuration by one Adams-Bashforth step.

    Args:
        state: configuration at t^{n-1}
        s_prev: velocity array at t^{n-1}
        s_prev2: velocity array at t^{n-2}; pass s_prev for the forward Euler start
        dt: time step
        orientation_prev2: Q^{n-2} for d = 3, defaults to Q^{n-1}
        projection: "svd" or "iterative" projection back onto SO(3)
    Returns:
        The predicted state at t^n, carrying velocity s_prev.
    Raises:
        KinematicsException: non-finite input or dt <= 0.
    """
    dim = state.dim
    s_prev = check_velocity_array(s_prev, dim)
    s_prev2 = check_velocity_array(s_prev2, dim)
    if not np.isfinite(dt) or dt <= 0:
        raise KinematicsException(f"Time step must be positive, got {dt}")

    x_c = state.x_c + dt * (1.5 * s_prev[:dim] - 0.5 * s_prev2[:dim])
    if dim == 2:
        theta = float(state.orientation) + dt * (1.5 * s_prev[2] - 0.5 * s_prev2[2])
        return body_state(x_c, theta, s_prev[:2], float(s_prev[2]))

    q_prev = np.asarray(state.orientation, dtype=float)
    q_prev2 = q_prev if orientation_prev2 is None else np.asarray(orientation_prev2, dtype=float)
    q_pred = q_prev + dt * (1.5 * skw(s_prev[3:]) @ q_prev - 0.5 * skw(s_prev2[3:]) @ q_prev2)
    if projection == "svd":
        q_new = project_so3_svd(q_pred)
    elif projection == "iterative":
        q_new = project_so3_iterative(q_pred)
    else:
        raise KinematicsException(f"Unknown SO(3) projection '{projection}'")
    return body_state(x_c, q_new, s_prev[:3], s_prev[3:])


def project_so3_svd(m: ArrayLike) -> NDArray[np.float64]:
    """Nearest rotation U V^T to m = U S V^T in the Frobenius norm.

    Raises:
        KinematicsException: m singular or closer to a reflection.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise KinematicsException("SO(3) projection expects a finite 3x3 matrix")
    det = np.linalg.det(m)
    if det <= 0:
        raise KinematicsException(f"Cannot project a matrix with determinant {det:.3e} onto SO(3)")
    u, _, vt = np.linalg.svd(m)
    return u @ vt


def project_so3_iterative(
    m: ArrayLike,
    eps: float = DEFAULT_PROJECTION_EPS,
    max_iter: int = DEFAULT_PROJECTION_MAX_ITER,
    residuals: Optional[list] = None,
) -> NDArray[np.float64]:
    """Project onto SO(3) with the iteration Q <- Q + Q (I - Q^T Q) / 2.

    Args:
        m: near-rotation with |I - m^T m| < 1
        eps: stopping tolerance on |I - Q^T Q|
        max_iter: iteration cap
        residuals: if given, receives the residual of every checked iterate
    Raises:
        KinematicsException: no convergence within max_iter iterations.
    """
    if eps <= 0:
        raise KinematicsException(f"Projection tolerance must be positive, got {eps}")
    q = np.asarray(m, dtype=float).copy()
    identity = np.eye(3)
    for iteration in range(max_iter + 1):
        defect = identity - q.T @ q
        residual = float(np.linalg.norm(defect))
        if residuals is not None:
            residuals.append(residual)
        if residual <= eps:
            if iteration > 3:
                logging.debug("SO(3) projection converged in %d iterations", iteration)
            return q
        q = q + 0.5 * q @ defect
    raise KinematicsException(
        f"SO(3) projection did not converge in {max_iter} iterations, input outside"
        " the contraction region"
    )
