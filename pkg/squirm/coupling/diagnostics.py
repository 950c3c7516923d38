"""Quantities recovered from a coupled solution: slip, reactions and boundary loads"""
from typing import List

import numpy as np
from numpy.typing import NDArray

from squirm.coupling.conditions import Condition, SlipCondition
from squirm.coupling.saddle import SaddleSolution
from squirm.coupling.surgery import CoupledSystem, body_h, coupled_velocity
from squirm.fem.assembly import boundary_mass
from squirm.fem.spaces import DIM, BodyBoundary, FeSpace
from squirm.kinematics import BodyState


def extract_slip(
    space: FeSpace, U: NDArray[np.float64], state: BodyState, boundary: BodyBoundary
) -> NDArray[np.float64]:
    """u_s = u_j - H(x_j) s at every boundary node, (m, 2)"""
    velocity = U.reshape(-1, DIM)[boundary.nodes]
    rigid = np.einsum("mdc,c->md", body_h(space, state, boundary.points), coupled_velocity(space, state))
    return velocity - rigid


def momentum_residual(coupled: CoupledSystem, solution: SaddleSolution) -> NDArray[np.float64]:
    """A U + G P - F on the rows before surgery"""
    original = coupled.original
    return original.A @ solution.U + original.G @ solution.P - original.F


def reaction_forces(coupled: CoupledSystem, solution: SaddleSolution) -> List[NDArray[np.float64]]:
    """Generalized force H^T (A U + G P - F) of every body, in its velocity-array components.

    In planar mode this is (F_x, F_y, torque) exerted by the body on the fluid; it vanishes for
    force- and torque-free squirmers.
    """
    generalized = coupled.H_full.T @ momentum_residual(coupled, solution)
    return [generalized[start:stop] for start, stop in coupled.column_ranges]


def boundary_load(
    space: FeSpace,
    coupled: CoupledSystem,
    solution: SaddleSolution,
    boundary: BodyBoundary,
    condition: Condition,
    slip: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Nodal force (m, 2) the body surface exerts on the fluid.

    Type-I reads it from the momentum residual, type-II integrates the cilia force including the
    drag response to the computed slip.
    """
    if isinstance(condition, SlipCondition):
        residual = momentum_residual(coupled, solution)
        return residual.reshape(-1, DIM)[boundary.nodes]
    return boundary_mass(space, boundary) @ cilia_force(boundary, condition, slip)


def cilia_force(
    boundary: BodyBoundary, condition: Condition, slip: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Pointwise tangential force density of a type-II condition at the computed slip"""
    if isinstance(condition, SlipCondition):
        return np.zeros_like(slip)
    along = np.einsum("md,md->m", slip, boundary.tangents)
    drag = np.broadcast_to(np.asarray(condition.drag, dtype=float), along.shape)
    return condition.force - (drag * along)[:, None] * boundary.tangents
