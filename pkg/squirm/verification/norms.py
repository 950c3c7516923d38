"""Discrete error norms, observed convergence orders and the power balance of a solution"""
from typing import Callable, NamedTuple, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from squirm.exceptions import VerificationException
from squirm.fem.assembly import Viscosity, constant_viscosity, strain_rate
from squirm.fem.spaces import DIM, FeSpace, element_data

# points (n, 2) -> velocity (n, 2), pressure (n,)
ExactField = Callable[[NDArray[np.float64]], Tuple[NDArray[np.float64], NDArray[np.float64]]]


class ErrorNorms(NamedTuple):
    L2_u: float
    L2_p: float
    Linf_u: float
    Linf_p: float


class ConvergenceOrders(NamedTuple):
    pairwise: NDArray[np.float64]  # order between consecutive levels
    slope: float  # least-squares slope of log(e) against log(h)


def error_norms(
    space: FeSpace, U: NDArray[np.float64], P: NDArray[np.float64], exact: ExactField
) -> ErrorNorms:
    """L2 norms by element quadrature and nodal max norms of u_h - u and p_h - p.

    Pressures are compared up to their means; the L2 measure carries the radius in axisymmetric
    mode.
    """
    data = element_data(space)
    u_local = U.reshape(-1, DIM)[space.velocity_cells]
    u_h = np.einsum("qk,ekd->eqd", data.values, u_local)
    p_h = np.einsum("qk,ek->eq", data.p_values, P[space.mesh.triangles])
    u_ex, p_ex = exact(data.points.reshape(-1, DIM))
    u_err = u_h - u_ex.reshape(u_h.shape)
    p_err = p_h - p_ex.reshape(p_h.shape)
    volume = float(data.weights.sum())
    p_shift = float(np.sum(data.weights * p_err)) / volume
    L2_u = np.sqrt(np.sum(data.weights * np.sum(u_err**2, axis=2)))
    L2_p = np.sqrt(np.sum(data.weights * (p_err - p_shift) ** 2))

    u_nodes, _ = exact(space.velocity_points)
    _, p_nodes = exact(space.mesh.nodes)
    Linf_u = np.max(np.linalg.norm(U.reshape(-1, DIM) - u_nodes, axis=1))
    Linf_p = np.max(np.abs(P - p_nodes - p_shift))
    return ErrorNorms(float(L2_u), float(L2_p), float(Linf_u), float(Linf_p))


def convergence_order(errors: ArrayLike, h: ArrayLike) -> ConvergenceOrders:
    """Observed orders log(e_k / e_k+1) / log(h_k / h_k+1) and the fitted slope.

    Raises:
        VerificationException: fewer than two levels, h not decreasing or non-positive errors.
    """
    errors = np.asarray(errors, dtype=float)
    h = np.asarray(h, dtype=float)
    if errors.shape != h.shape or errors.size < 2:
        raise VerificationException("Convergence order needs at least two levels of errors and sizes")
    if np.any(np.diff(h) >= 0) or np.any(h <= 0):
        raise VerificationException("Mesh sizes must be positive and decreasing")
    if np.any(~(errors > 0)):
        raise VerificationException("Convergence order is undefined for zero errors")
    log_e, log_h = np.log(errors), np.log(h)
    pairwise = np.diff(log_e) / np.diff(log_h)
    slope = float(np.polyfit(log_h, log_e, 1)[0])
    return ConvergenceOrders(pairwise, slope)


def dissipation(space: FeSpace, U: NDArray[np.float64], viscosity: Union[float, Viscosity]) -> float:
    """Viscous dissipation, the integral of 2 mu e(u):e(u) including the hoop strain"""
    hook = constant_viscosity(viscosity) if np.isscalar(viscosity) else viscosity
    data = element_data(space)
    rate = strain_rate(data, space, U)
    return float(np.sum(data.weights * hook(data.points, rate) * rate**2))


def power_and_dissipation(
    space: FeSpace,
    U: NDArray[np.float64],
    viscosity: Union[float, Viscosity],
    loads: Sequence[NDArray[np.float64]],
    slips: Sequence[NDArray[np.float64]],
) -> Tuple[float, float]:
    """Power P spent by the cilia and dissipation Phi of the flow.

    Args:
        loads: nodal force (m, 2) each body exerts on the fluid
        slips: nodal slip (m, 2) of each body
    """
    if len(loads) != len(slips):
        raise VerificationException(f"{len(loads)} boundary loads for {len(slips)} slip fields")
    power = sum(float(np.sum(load * slip)) for load, slip in zip(loads, slips))
    return power, dissipation(space, U, viscosity)
