"""ALE mesh motion: pseudo-elastic extension of boundary displacements into the fluid"""
from typing import Optional
import logging

import numpy as np
from numpy.typing import NDArray
import scipy.sparse as sp

from squirm.exceptions import RemeshRequiredException
from squirm.geometry.mesh import AXIS_TAG, WALL_TAG, Mesh, signed_areas
from squirm.linalg import SparseMatrix, solve_direct

POISSON_RATIO = 0.3


def elasticity_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """P1 plane-strain stiffness with Young modulus 1/area on every element"""
    tri = mesh.triangles
    p0, p1, p2 = (mesh.nodes[tri[:, i]] for i in range(3))
    area = signed_areas(mesh)
    # gradients of the barycentric coordinates, shape (t, 3, 2)
    grads = np.stack(
        [
            np.stack([p1[:, 1] - p2[:, 1], p2[:, 0] - p1[:, 0]], axis=1),
            np.stack([p2[:, 1] - p0[:, 1], p0[:, 0] - p2[:, 0]], axis=1),
            np.stack([p0[:, 1] - p1[:, 1], p1[:, 0] - p0[:, 0]], axis=1),
        ],
        axis=1,
    ) / (2.0 * area[:, None, None])
    young = 1.0 / area
    shear = young / (2.0 * (1.0 + POISSON_RATIO))
    lame = young * POISSON_RATIO / ((1.0 + POISSON_RATIO) * (1.0 - 2.0 * POISSON_RATIO))
    eye = np.eye(2)
    local = (
        shear[:, None, None, None, None]
        * (
            np.einsum("eid,ejd,ab->eiajb", grads, grads, eye)
            + np.einsum("eja,eib->eiajb", grads, grads)
        )
        + lame[:, None, None, None, None] * np.einsum("eia,ejb->eiajb", grads, grads)
    ) * area[:, None, None, None, None]
    dofs = np.stack([2 * tri, 2 * tri + 1], axis=2).reshape(-1, 6)
    stiffness = SparseMatrix(2 * mesh.n_nodes, 2 * mesh.n_nodes)
    stiffness.add_local(dofs, local.reshape(-1, 6, 6))
    return stiffness.tocsr()


def move_mesh(
    mesh: Mesh,
    body_nodes: NDArray[np.int64],
    body_disp: NDArray[np.float64],
    dt: Optional[float] = None,
) -> Mesh:
    """Move the mesh so that body_nodes are displaced by body_disp.

    Wall nodes stay fixed, axis nodes slide along the axis and every other node follows the
    pseudo-elastic extension.

    Args:
        mesh: current mesh
        body_nodes: vertex indices with prescribed displacement
        body_disp: (k, 2) displacements of body_nodes
        dt: if given, the mesh velocity is set to displacement / dt
    Returns:
        Mesh with identical connectivity at the new positions.
    Raises:
        RemeshRequiredException: an element inverts.
    """
    body_nodes = np.asarray(body_nodes, dtype=np.int64)
    body_disp = np.asarray(body_disp, dtype=float).reshape(-1, 2)
    n_dofs = 2 * mesh.n_nodes
    values = np.zeros(n_dofs)
    fixed = np.zeros(n_dofs, dtype=bool)
    wall = mesh.tag_nodes(WALL_TAG)
    axis = mesh.tag_nodes(AXIS_TAG)
    fixed[2 * wall] = fixed[2 * wall + 1] = True
    fixed[2 * axis] = True
    fixed[2 * body_nodes] = fixed[2 * body_nodes + 1] = True
    values[2 * body_nodes] = body_disp[:, 0]
    values[2 * body_nodes + 1] = body_disp[:, 1]

    if np.any(values[fixed] != 0.0):
        stiffness = elasticity_stiffness(mesh)
        free = np.flatnonzero(~fixed)
        reduced = stiffness[free][:, free]
        load = -stiffness[free][:, np.flatnonzero(fixed)] @ values[fixed]
        values[free] = solve_direct(reduced, load)
    displacement = values.reshape(-1, 2)
    moved = mesh._replace(
        nodes=mesh.nodes + displacement,
        mesh_velocity=displacement / dt if dt else np.zeros_like(mesh.nodes),
    )
    n_inverted = int(np.sum(signed_areas(moved) <= 0.0))
    if n_inverted:
        raise RemeshRequiredException(f"Mesh motion inverted {n_inverted} elements")
    logging.debug("Moved mesh, max displacement %.3e", float(np.abs(displacement).max()))
    return moved
