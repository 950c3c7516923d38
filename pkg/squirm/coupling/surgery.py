"""
Row surgery on the assembled flow blocks.

The rows of body-boundary velocity dofs are rewritten so that the unknown velocity arrays s of the
bodies enter the momentum equations, and the force/torque balance of every body is appended:

    type-I   boundary rows become u_j - H_j s = u_s,j
    type-II  tangential rows keep the momentum equation loaded by the cilia force, normal rows
             become alpha_j n_j n_j^T (u_j - H_j s) = 0

Surgery acts on whole sparse rows, so the result does not depend on the order of the bodies.
"""
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple
import logging

import numpy as np
from numpy.typing import NDArray
import scipy.sparse as sp

from squirm.coupling.conditions import Condition, ForceCondition, SlipCondition
from squirm.exceptions import AssemblyException, CouplingException
from squirm.fem.assembly import SystemBlocks, assemble_traction, boundary_mass
from squirm.fem.spaces import DIM, BodyBoundary, FeSpace
from squirm.kinematics import BodyState, h_matrix
from squirm.linalg import SparseMatrix

TANGENTIAL_SLIP_TOLERANCE = 1e-10
ColumnRange = Tuple[int, int]


class CoupledSystem(NamedTuple):
    """Surgered blocks of the coupled problem in (s, U, P)"""

    A: sp.csr_matrix  # (n_u, n_u) A-hat / A-tilde
    G: sp.csr_matrix  # (n_u, n_p) G-hat / G-tilde
    H: sp.csr_matrix  # (n_u, n_s) coupling of s in the momentum rows, H-block or H-tilde
    S: sp.csr_matrix  # (n_s, n_u) H^T A on the boundary rows
    T: sp.csr_matrix  # (n_s, n_p) H^T G on the boundary rows
    D: sp.csr_matrix
    E: sp.csr_matrix
    M: Optional[sp.csr_matrix]  # surgered mass, with inertia only
    L: Optional[sp.csr_matrix]  # H^T M on the boundary rows, with inertia only
    F: NDArray[np.float64]  # surgered momentum load
    B: NDArray[np.float64]  # H^T F, the cilia force does not enter the balance
    G_rhs: NDArray[np.float64]
    mean: NDArray[np.float64]
    H_full: sp.csr_matrix  # unsurgered block column of H matrices
    column_ranges: List[ColumnRange]  # columns of each body in H
    original: SystemBlocks  # blocks before surgery, for reactions


def coupled_components(space: FeSpace) -> int:
    """Unknowns per body: axial translation in axisymmetric mode, (v_c, omega) in the plane"""
    return 1 if space.axisymmetric else 3


def coupled_velocity(space: FeSpace, state: BodyState) -> NDArray[np.float64]:
    """The part of the velocity array of state that is solved for"""
    if space.axisymmetric:
        return np.array([float(state.v_c[1])])
    return state.velocity_array()


def body_h(space: FeSpace, state: BodyState, points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Stacked H matrices (m, 2, n_c) of the body at points"""
    points = np.asarray(points, dtype=float).reshape(-1, DIM)
    if not space.axisymmetric:
        return h_matrix(state, points)
    out = np.zeros((points.shape[0], DIM, 1))
    out[:, 1, 0] = 1.0
    return out


def build_h_blocks(
    space: FeSpace, boundaries: Sequence[BodyBoundary], bodies: Sequence[BodyState]
) -> Tuple[sp.csr_matrix, List[ColumnRange]]:
    """Block column H: the row block of a node on body b is H_b(x_j) in the columns of b.

    Rows of nodes off the body boundaries are zero.

    Raises:
        CouplingException: count mismatch or a node on two body boundaries.
    """
    if len(boundaries) != len(bodies):
        raise CouplingException(f"{len(boundaries)} boundaries for {len(bodies)} bodies")
    n_c = coupled_components(space)
    owner = np.full(space.n_velocity, -1, dtype=np.int64)
    matrix = SparseMatrix(space.n_velocity_dofs, n_c * len(bodies))
    ranges = []
    for index, (boundary, state) in enumerate(zip(boundaries, bodies)):
        claimed = owner[boundary.nodes]
        if np.any(claimed >= 0):
            node = int(boundary.nodes[np.argmax(claimed >= 0)])
            raise CouplingException(
                f"Node {node} is claimed by body tags {boundaries[claimed.max()].tag} and {boundary.tag}"
            )
        owner[boundary.nodes] = index
        blocks = body_h(space, state, boundary.points)
        rows = DIM * boundary.nodes[:, None, None] + np.arange(DIM)[None, :, None]
        cols = index * n_c + np.arange(n_c)[None, None, :]
        matrix.add(rows, cols, blocks)
        ranges.append((index * n_c, (index + 1) * n_c))
    return matrix.tocsr(), ranges


def _block_diagonal(
    nodes: NDArray[np.int64], blocks: NDArray[np.float64], size: int
) -> sp.csr_matrix:
    """Sparse matrix with the 2x2 blocks[j] on the dofs of nodes[j]"""
    rows = DIM * nodes[:, None, None] + np.arange(DIM)[None, :, None]
    cols = DIM * nodes[:, None, None] + np.arange(DIM)[None, None, :]
    matrix = SparseMatrix(size, size)
    matrix.add(rows, cols, blocks)
    return matrix.tocsr()


def node_projectors(normals: NDArray[np.float64]) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Tangential and normal projectors I - n n^T and n n^T, each (m, 2, 2).

    Raises:
        CouplingException: a zero normal.
    """
    norm = np.linalg.norm(normals, axis=1)
    if np.any(norm <= 0.0):
        raise CouplingException(f"Zero normal at boundary position {int(np.argmin(norm))}")
    unit = normals / norm[:, None]
    normal = np.einsum("ma,mb->mab", unit, unit)
    return np.eye(DIM)[None, :, :] - normal, normal


def default_alpha(A: sp.csr_matrix, boundary: BodyBoundary) -> NDArray[np.float64]:
    """Mean magnitude of the diagonal entries of A on the rows of each boundary node"""
    diagonal = np.abs(A.diagonal())
    alpha = 0.5 * (diagonal[DIM * boundary.nodes] + diagonal[DIM * boundary.nodes + 1])
    if np.any(alpha <= 0.0):
        raise CouplingException(f"Body {boundary.tag} has a node with an empty diagonal in A")
    return alpha


def _drag_matrix(
    space: FeSpace, boundary: BodyBoundary, drag: NDArray[np.float64]
) -> sp.csr_matrix:
    """K[(i,a),(j,b)] = M_ij drag_j tau_j,a tau_j,b, the load of the implicit drag force"""
    mass = boundary_mass(space, boundary).tocoo()
    tau = boundary.tangents
    local = mass.data[:, None, None] * drag[mass.col, None, None] * np.einsum(
        "ma,mb->mab", tau[mass.col], tau[mass.col]
    )
    rows = DIM * boundary.nodes[mass.row][:, None, None] + np.arange(DIM)[None, :, None]
    cols = DIM * boundary.nodes[mass.col][:, None, None] + np.arange(DIM)[None, None, :]
    matrix = SparseMatrix(space.n_velocity_dofs, space.n_velocity_dofs)
    matrix.add(rows, cols, local)
    return matrix.tocsr()


def _checked_slip(condition: SlipCondition, boundary: BodyBoundary) -> NDArray[np.float64]:
    slip = np.asarray(condition.slip, dtype=float)
    if slip.shape != (boundary.nodes.size, DIM) or not np.all(np.isfinite(slip)):
        raise CouplingException(
            f"Missing slip values: body {boundary.tag} needs finite slip at {boundary.nodes.size} nodes"
        )
    normal = np.abs(np.einsum("md,md->m", slip, boundary.normals))
    if np.any(normal > TANGENTIAL_SLIP_TOLERANCE * max(1.0, float(np.abs(slip).max(initial=0.0)))):
        raise CouplingException(f"Slip of body {boundary.tag} is not tangential, |u_s.n| = {normal.max():.3e}")
    return slip


def apply_surgery(
    space: FeSpace,
    blocks: SystemBlocks,
    H: sp.csr_matrix,
    column_ranges: List[ColumnRange],
    boundaries: Sequence[BodyBoundary],
    conditions: Dict[int, Condition],
    with_inertia: bool = False,
) -> CoupledSystem:
    """Rewrite the boundary rows of every body according to its interface condition.

    Args:
        space: the finite element space of blocks
        blocks: assembled blocks, essential conditions already applied
        H: block column from build_h_blocks over the same boundaries
        column_ranges: columns of each body in H
        boundaries: body boundaries, in the order of the columns of H
        conditions: slip or force data per body tag
        with_inertia: keep the mass block and build the body mass coupling
    Raises:
        CouplingException: missing or invalid interface data.
    """
    n_u = space.n_velocity_dofs
    keep = np.ones(n_u)
    prescribed = np.zeros(n_u)
    slip_load = np.zeros(n_u)
    tangential_blocks: List[Tuple[NDArray[np.int64], NDArray[np.float64]]] = []
    normal_blocks: List[Tuple[NDArray[np.int64], NDArray[np.float64]]] = []
    cilia_load = np.zeros(n_u)
    drag = sp.csr_matrix((n_u, n_u))

    for boundary in boundaries:
        condition = conditions.get(boundary.tag)
        if condition is None:
            raise CouplingException(f"Missing interface condition for body {boundary.tag}")
        dofs = boundary.dofs
        keep[dofs] = 0.0
        if isinstance(condition, SlipCondition):
            prescribed[dofs] = 1.0
            slip_load[dofs] = _checked_slip(condition, boundary).ravel()
            continue
        tangential, normal = node_projectors(boundary.normals)
        alpha = default_alpha(blocks.A, boundary)
        if condition.alpha is not None:
            alpha = np.asarray(condition.alpha, dtype=float)
        if alpha.shape != (boundary.nodes.size,) or np.any(~(alpha > 0.0)):
            raise CouplingException(f"Body {boundary.tag} needs a positive alpha at every node")
        tangential_blocks.append((boundary.nodes, tangential))
        normal_blocks.append((boundary.nodes, alpha[:, None, None] * normal))
        try:
            cilia_load += assemble_traction(space, boundary, condition.force)
        except AssemblyException as ex:
            raise CouplingException(f"Invalid tangential force on body {boundary.tag}", ex) from ex
        drag_factor = np.broadcast_to(np.asarray(condition.drag, dtype=float), boundary.nodes.shape)
        if np.any(drag_factor != 0.0):
            drag = drag + _drag_matrix(space, boundary, drag_factor)

    def _collect(parts: List[Tuple[NDArray[np.int64], NDArray[np.float64]]]) -> sp.csr_matrix:
        if not parts:
            return sp.csr_matrix((n_u, n_u))
        nodes = np.concatenate([nodes for nodes, _ in parts])
        return _block_diagonal(nodes, np.concatenate([values for _, values in parts]), n_u)

    p_tau = _collect(tangential_blocks)
    p_n_alpha = _collect(normal_blocks)
    keep_rows = sp.diags(keep)
    identity = sp.diags(prescribed)

    A_hat = keep_rows @ blocks.A + identity + p_tau @ (blocks.A + drag) + p_n_alpha
    G_hat = keep_rows @ blocks.G + p_tau @ blocks.G
    H_rows = identity @ H + p_n_alpha @ H + p_tau @ drag @ H
    F_hat = keep * blocks.F + slip_load + p_tau @ (blocks.F + cilia_load)

    M_hat = L = None
    if with_inertia:
        if blocks.M is None:
            raise CouplingException("Inertia requested but the mass block was not assembled")
        M_hat = (keep_rows @ blocks.M + p_tau @ blocks.M).tocsr()
        L = (H.T @ blocks.M).tocsr()
    logging.debug(
        "Surgery on %d bodies: %d prescribed rows, %d type-II nodes",
        len(boundaries),
        int(prescribed.sum()),
        sum(nodes.size for nodes, _ in tangential_blocks),
    )
    return CoupledSystem(
        A=A_hat.tocsr(),
        G=G_hat.tocsr(),
        H=H_rows.tocsr(),
        S=(H.T @ blocks.A).tocsr(),
        T=(H.T @ blocks.G).tocsr(),
        D=blocks.D,
        E=blocks.E,
        M=M_hat,
        L=L,
        F=F_hat,
        B=H.T @ blocks.F,
        G_rhs=blocks.G_rhs,
        mean=blocks.mean,
        H_full=H,
        column_ranges=list(column_ranges),
        original=blocks,
    )


def surgery_type1(
    space: FeSpace,
    blocks: SystemBlocks,
    H: sp.csr_matrix,
    column_ranges: List[ColumnRange],
    boundaries: Sequence[BodyBoundary],
    u_s: Dict[int, NDArray[np.float64]],
    with_inertia: bool = False,
) -> CoupledSystem:
    """Type-I surgery: boundary rows become identity rows loaded with the nodal slip"""
    conditions: Dict[int, Condition] = {tag: SlipCondition(slip) for tag, slip in u_s.items()}
    return apply_surgery(space, blocks, H, column_ranges, boundaries, conditions, with_inertia)


def surgery_type2(
    space: FeSpace,
    blocks: SystemBlocks,
    H: sp.csr_matrix,
    column_ranges: List[ColumnRange],
    boundaries: Sequence[BodyBoundary],
    f_s: Dict[int, NDArray[np.float64]],
    alpha: Optional[Dict[int, NDArray[np.float64]]] = None,
    drag: Optional[Dict[int, NDArray[np.float64]]] = None,
    with_inertia: bool = False,
) -> CoupledSystem:
    """Type-II surgery: tangential momentum rows loaded by f_s, alpha-scaled normal constraints.

    Args:
        f_s: explicit tangential force density per body tag, (m, 2)
        alpha: scale of the normal rows per body tag, mean diagonal of A when absent
        drag: factor of the drag law -drag tau (tau . u_s) per body tag, zero when absent
    """
    alpha = alpha or {}
    drag = drag or {}
    conditions: Dict[int, Condition] = {
        tag: ForceCondition(force, np.asarray(drag.get(tag, 0.0), dtype=float), alpha.get(tag))
        for tag, force in f_s.items()
    }
    return apply_surgery(space, blocks, H, column_ranges, boundaries, conditions, with_inertia)


def fold_inertia(
    coupled: CoupledSystem, dt: float, U_prev: NDArray[np.float64]
) -> CoupledSystem:
    """Backward Euler time derivative (M / dt)(U - U_prev) folded into the blocks.

    The retained original rows receive the same terms so that reactions include fluid inertia.
    """
    if coupled.M is None or coupled.L is None or coupled.original.M is None:
        raise CouplingException("Coupled system carries no mass block")
    if not dt > 0:
        raise CouplingException(f"Time step must be positive, got {dt}")
    mass = coupled.original.M / dt
    original = coupled.original._replace(
        A=(coupled.original.A + mass).tocsr(), F=coupled.original.F + mass @ U_prev
    )
    return coupled._replace(
        A=(coupled.A + coupled.M / dt).tocsr(),
        F=coupled.F + (coupled.M @ U_prev) / dt,
        S=(coupled.S + coupled.L / dt).tocsr(),
        B=coupled.B + (coupled.L @ U_prev) / dt,
        original=original,
    )
