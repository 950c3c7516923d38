"""
Assembly of the incompressible-flow blocks: viscous A, gradient G, divergence D, pressure
stabilization E, mass M, convection and boundary tangential-force loads.

Velocity dofs are interleaved per node (2 i + component); pressure dofs are the vertices.
"""
from typing import Callable, Dict, NamedTuple, Optional, Union
import logging

import numpy as np
from numpy.typing import NDArray
import scipy.sparse as sp

from squirm.exceptions import AssemblyException
from squirm.fem.quadrature import GAUSS_2, GAUSS_3
from squirm.fem.spaces import DIM, BodyBoundary, ElementData, FeSpace, element_data
from squirm.geometry.mesh import AXIS_TAG, WALL_TAG
from squirm.linalg import SparseMatrix

GLS_ALPHA = 1.0 / 3.0
TANGENTIAL_TOLERANCE = 1e-12

# mu(points (t, q, 2), strain rate magnitude (t, q) or None) -> (t, q)
Viscosity = Callable[[NDArray[np.float64], Optional[NDArray[np.float64]]], NDArray[np.float64]]


def constant_viscosity(mu: float) -> Viscosity:
    if mu <= 0:
        raise AssemblyException(f"Viscosity must be positive, got {mu}")

    def viscosity(points: NDArray[np.float64], _: Optional[NDArray[np.float64]]) -> NDArray[np.float64]:
        return np.full(points.shape[:2], float(mu))

    return viscosity


class SystemBlocks(NamedTuple):
    """Assembled blocks of the discrete Stokes (or Oseen) problem"""

    A: sp.csr_matrix  # (n_U d, n_U d) viscous block, plus convection when added
    G: sp.csr_matrix  # (n_U d, n_P) gradient
    D: sp.csr_matrix  # (n_P, n_U d) divergence, with stabilization couplings
    E: sp.csr_matrix  # (n_P, n_P) pressure stabilization, zero for P2P1
    M: Optional[sp.csr_matrix]  # (n_U d, n_U d) mass, assembled when density > 0
    F: NDArray[np.float64]  # (n_U d,) momentum load
    G_rhs: NDArray[np.float64]  # (n_P,) continuity load
    mean: NDArray[np.float64]  # (n_P,) integrals of the pressure basis, pressure-mean row
    body_dofs: Dict[int, NDArray[np.int64]]  # velocity dofs on each body boundary


def _velocity_dofs(space: FeSpace) -> NDArray[np.int64]:
    cells = space.velocity_cells
    return np.stack([DIM * cells, DIM * cells + 1], axis=2).reshape(cells.shape[0], -1)


def strain_rate(data: ElementData, space: FeSpace, velocity: NDArray[np.float64]) -> NDArray[np.float64]:
    """Magnitude sqrt(2 e:e) of the strain rate at the quadrature points"""
    u_local = velocity.reshape(-1, DIM)[space.velocity_cells]  # (t, k, 2)
    grad_u = np.einsum("eqkd,eka->eqad", data.grads, u_local)
    sym = 0.5 * (grad_u + np.swapaxes(grad_u, 2, 3))
    total = 2.0 * np.einsum("eqad,eqad->eq", sym, sym)
    if space.axisymmetric:
        u_r = np.einsum("qk,ek->eq", data.values, u_local[..., 0])
        total = total + 2.0 * (u_r / data.radius) ** 2
    return np.sqrt(total)


def viscous_local(data: ElementData, mu: NDArray[np.float64], axisymmetric: bool) -> NDArray[np.float64]:
    """Element matrices of 2 mu e(u):e(w), shape (t, k, 2, k, 2)"""
    weight = data.weights * mu
    grads = data.grads
    n_loc = grads.shape[2]
    local = np.einsum("eq,eqja,eqib->eiajb", weight, grads, grads)
    laplace = np.einsum("eq,eqid,eqjd->eij", weight, grads, grads)
    for comp in range(DIM):
        local[:, :, comp, :, comp] += laplace
    if axisymmetric:
        hoop = np.einsum("eq,qi,qj->eij", 2.0 * weight / data.radius**2, data.values, data.values)
        local[:, :, 0, :, 0] += hoop
    return local.reshape(-1, n_loc * DIM, n_loc * DIM)


def assemble_stokes(
    space: FeSpace,
    viscosity: Union[float, Viscosity],
    density: float = 0.0,
    velocity: Optional[NDArray[np.float64]] = None,
    body_force: Optional[NDArray[np.float64]] = None,
) -> SystemBlocks:
    """Assemble A, G, D, E, M and the loads on the mesh of space.

    Args:
        space: velocity/pressure numbering
        viscosity: constant or hook mu(x, strain rate)
        density: fluid density; the mass block is assembled when positive
        velocity: velocity iterate passed to a strain-rate dependent viscosity
        body_force: constant body force density (2,), zero by default
    Raises:
        AssemblyException: zero-area element or invalid viscosity.
    """
    hook = constant_viscosity(viscosity) if np.isscalar(viscosity) else viscosity
    data = element_data(space)
    rate = strain_rate(data, space, velocity) if velocity is not None else None
    mu = hook(data.points, rate)
    if np.any(mu <= 0) or not np.all(np.isfinite(mu)):
        raise AssemblyException("Viscosity hook returned non-positive or non-finite values")

    n_u, n_p = space.n_velocity_dofs, space.n_pressure
    u_dofs = _velocity_dofs(space)
    p_dofs = space.mesh.triangles
    n_loc = space.velocity_cells.shape[1]

    viscous = SparseMatrix(n_u, n_u)
    viscous.add_local(u_dofs, viscous_local(data, mu, space.axisymmetric))

    # G[(i,a),k] = -int M_k d_a N_i (r dr dz), plus -int M_k N_i dr dz for a = r
    grad_local = -np.einsum("eq,qk,eqia->eiak", data.weights, data.p_values, data.grads)
    if space.axisymmetric:
        grad_local[:, :, 0, :] -= np.einsum(
            "eq,qk,qi->eik", data.weights / data.radius, data.p_values, data.values
        )
    grad_local = grad_local.reshape(-1, n_loc * DIM, 3)
    gradient = SparseMatrix(n_u, n_p)
    gradient.add(
        np.repeat(u_dofs, 3, axis=1), np.tile(p_dofs, (1, n_loc * DIM)), grad_local.reshape(-1, n_loc * DIM * 3)
    )
    G = gradient.tocsr()
    D = -G.T.tocsr()

    stab = SparseMatrix(n_p, n_p)
    G_rhs = np.zeros(n_p)
    if not space.quadratic:
        mu_e = mu.mean(axis=1)
        tau = GLS_ALPHA * data.diameter**2 / (4.0 * mu_e)
        stab.add_local(
            p_dofs, np.einsum("e,eq,eqkd,eqld->ekl", tau, data.weights, data.p_grads, data.p_grads)
        )
        if space.axisymmetric:
            D = D + _axisymmetric_residual_coupling(space, data, mu, tau, u_dofs, p_dofs)
        if body_force is not None:
            # tau (f, grad q)
            force = np.asarray(body_force, dtype=float)
            np.add.at(G_rhs, p_dofs, np.einsum("e,eq,eqkd,d->ek", tau, data.weights, data.p_grads, force))
    E = stab.tocsr()

    M = None
    if density > 0:
        mass = SparseMatrix(n_u, n_u)
        scalar = np.einsum("eq,qi,qj->eij", density * data.weights, data.values, data.values)
        local = np.zeros((scalar.shape[0], n_loc, DIM, n_loc, DIM))
        for comp in range(DIM):
            local[:, :, comp, :, comp] = scalar
        mass.add_local(u_dofs, local.reshape(-1, n_loc * DIM, n_loc * DIM))
        M = mass.tocsr()

    F = np.zeros(n_u)
    if body_force is not None:
        load = np.einsum("eq,qi->ei", data.weights, data.values)
        for comp in range(DIM):
            np.add.at(F, DIM * space.velocity_cells + comp, load * body_force[comp])
    mean = np.zeros(n_p)
    np.add.at(mean, p_dofs, np.einsum("eq,qk->ek", data.weights, data.p_values))

    body_dofs = {}
    for tag in space.mesh.body_tags():
        nodes = space.tag_velocity_nodes(tag)
        body_dofs[tag] = np.stack([DIM * nodes, DIM * nodes + 1], axis=1).ravel()
    logging.debug("Assembled %s %s blocks: %d velocity dofs, %d pressure dofs", space.family, space.mode, n_u, n_p)
    return SystemBlocks(
        A=viscous.tocsr(),
        G=G,
        D=D.tocsr(),
        E=E,
        M=M,
        F=F,
        G_rhs=G_rhs,
        mean=mean,
        body_dofs=body_dofs,
    )


def _axisymmetric_residual_coupling(space, data, mu, tau, u_dofs, p_dofs) -> sp.csr_matrix:  # type: ignore
    """tau (-mu L u, grad q) where L is the P1 vector Laplacian in (r, z): its first-order terms"""
    n_loc = space.velocity_cells.shape[1]
    weight = tau[:, None] * mu * data.weights / data.radius
    d_r = data.grads[..., 0]  # (t, q, k)
    n_over_r = data.values[None, :, :] / data.radius[..., None]
    local = np.zeros((tau.size, 3, n_loc, DIM))
    local[:, :, :, 0] = -np.einsum("eq,eqj,eqk->ekj", weight, d_r - n_over_r, data.p_grads[..., 0])
    local[:, :, :, 1] = -np.einsum("eq,eqj,eqk->ekj", weight, d_r, data.p_grads[..., 1])
    coupling = SparseMatrix(space.n_pressure, space.n_velocity_dofs)
    coupling.add(
        np.repeat(p_dofs, n_loc * DIM, axis=1), np.tile(u_dofs, (1, 3)), local.reshape(tau.size, -1)
    )
    return coupling.tocsr()


def assemble_convection(
    space: FeSpace,
    velocity: NDArray[np.float64],
    mesh_velocity: NDArray[np.float64],
    density: float,
) -> sp.csr_matrix:
    """Picard-linearized ALE convection rho ((u - w) . grad) u.

    Args:
        space: velocity numbering
        velocity: advecting velocity at the velocity dofs (n_U d,)
        mesh_velocity: mesh velocity at the mesh vertices (n_vertices, 2)
        density: fluid density
    """
    n_u = space.n_velocity_dofs
    if density <= 0:
        return sp.csr_matrix((n_u, n_u))
    data = element_data(space)
    relative = velocity.reshape(-1, DIM) - space.from_vertices(mesh_velocity)
    advect = np.einsum("qk,ekd->eqd", data.values, relative[space.velocity_cells])
    scalar = np.einsum("eq,qi,eqd,eqjd->eij", density * data.weights, data.values, advect, data.grads)
    n_loc = space.velocity_cells.shape[1]
    local = np.zeros((scalar.shape[0], n_loc, DIM, n_loc, DIM))
    for comp in range(DIM):
        local[:, :, comp, :, comp] = scalar
    convection = SparseMatrix(n_u, n_u)
    convection.add_local(_velocity_dofs(space), local.reshape(-1, n_loc * DIM, n_loc * DIM))
    return convection.tocsr()


def edge_mass(
    start: NDArray[np.float64], end: NDArray[np.float64], quadratic: bool, axisymmetric: bool
) -> NDArray[np.float64]:
    """Consistent mass matrices of boundary edges, (n, k, k) with k = 2 (P1) or 3 (P2).

    Local node order is start, end and, for P2, the midpoint.
    """
    rule = GAUSS_3 if quadratic else GAUSS_2
    t = rule.points[:, 0]
    if quadratic:
        phi = np.stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)], axis=1)
    else:
        phi = np.stack([1 - t, t], axis=1)
    length = np.linalg.norm(end - start, axis=1)
    weight = length[:, None] * rule.weights[None, :]
    if axisymmetric:
        weight = weight * (start[:, None, 0] * (1 - t)[None, :] + end[:, None, 0] * t[None, :])
    return np.einsum("eg,gi,gj->eij", weight, phi, phi)


def boundary_mass(space: FeSpace, boundary: BodyBoundary) -> sp.csr_matrix:
    """Scalar boundary mass matrix in the local numbering of boundary.nodes"""
    segments = boundary.segments
    local = edge_mass(
        boundary.points[segments[:, 0]],
        boundary.points[segments[:, 1]],
        space.quadratic,
        space.axisymmetric,
    )
    size = boundary.nodes.size
    mass = SparseMatrix(size, size)
    mass.add_local(segments, local)
    return mass.tocsr()


def assemble_traction(space: FeSpace, boundary: BodyBoundary, f_s: NDArray[np.float64]) -> NDArray[np.float64]:
    """Load vector of the tangential force density f_s given at the boundary nodes.

    Raises:
        AssemblyException: f_s has a normal component.
    """
    f_s = np.asarray(f_s, dtype=float).reshape(-1, DIM)
    if f_s.shape[0] != boundary.nodes.size:
        raise AssemblyException(
            f"Tangential force given at {f_s.shape[0]} nodes, boundary has {boundary.nodes.size}"
        )
    normal_part = np.abs(np.einsum("md,md->m", f_s, boundary.normals))
    scale = max(1.0, float(np.abs(f_s).max(initial=0.0)))
    if np.any(normal_part > TANGENTIAL_TOLERANCE * scale):
        raise AssemblyException(
            f"Tangential force has a normal component up to {normal_part.max():.3e}"
        )
    nodal = boundary_mass(space, boundary) @ f_s
    load = np.zeros(space.n_velocity_dofs)
    load[DIM * boundary.nodes] = nodal[:, 0]
    load[DIM * boundary.nodes + 1] = nodal[:, 1]
    return load


def essential_dofs(space: FeSpace) -> NDArray[np.int64]:
    """Velocity dofs with homogeneous essential conditions.

    Wall nodes carry no-slip; axis nodes of axisymmetric mode carry u_r = 0 unless they belong to a
    body, whose rows are handled by surgery.
    """
    wall = space.tag_velocity_nodes(WALL_TAG)
    dofs = [DIM * wall, DIM * wall + 1]
    if space.axisymmetric:
        axis = space.tag_velocity_nodes(AXIS_TAG)
        body = np.concatenate(
            [space.tag_velocity_nodes(tag) for tag in space.mesh.body_tags()] or [np.zeros(0, np.int64)]
        )
        dofs.append(DIM * np.setdiff1d(axis, body))
    return np.unique(np.concatenate(dofs))


def apply_essential(blocks: SystemBlocks, dofs: NDArray[np.int64]) -> SystemBlocks:
    """Replace the rows of dofs by identity rows with zero load"""
    n_u = blocks.A.shape[0]
    keep = np.ones(n_u)
    keep[dofs] = 0.0
    keep_rows = sp.diags(keep)
    identity = sp.diags(1.0 - keep)
    F = blocks.F * keep
    return blocks._replace(
        A=(keep_rows @ blocks.A + identity).tocsr(),
        G=(keep_rows @ blocks.G).tocsr(),
        M=None if blocks.M is None else (keep_rows @ blocks.M).tocsr(),
        F=F,
    )
