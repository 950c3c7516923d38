"""Remeshing inside the unchanged boundary loops and P1 transfer of nodal fields"""
from typing import Dict, Tuple
import logging

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import cKDTree

from squirm.exceptions import MeshException
from squirm.geometry.chart import build_chart
from squirm.geometry.generators import interior_point, triangulate_domain
from squirm.geometry.mesh import Mesh, edge_lengths, quality

BARYCENTRIC_TOLERANCE = 1e-10
CANDIDATES = 16


def barycentric(
    mesh: Mesh, cells: NDArray[np.int64], points: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Barycentric coordinates of points[i] in triangle cells[i]"""
    tri = mesh.triangles[cells]
    p0, p1, p2 = (mesh.nodes[tri[..., i]] for i in range(3))
    det = (p1[..., 0] - p0[..., 0]) * (p2[..., 1] - p0[..., 1]) - (p1[..., 1] - p0[..., 1]) * (
        p2[..., 0] - p0[..., 0]
    )
    rel = points - p0
    l1 = (rel[..., 0] * (p2[..., 1] - p0[..., 1]) - rel[..., 1] * (p2[..., 0] - p0[..., 0])) / det
    l2 = ((p1[..., 0] - p0[..., 0]) * rel[..., 1] - (p1[..., 1] - p0[..., 1]) * rel[..., 0]) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)


def locate_points(
    mesh: Mesh, points: NDArray[np.float64]
) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Containing triangle and barycentric coordinates of every point.

    Raises:
        MeshException: a point lies outside the mesh.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    centroids = mesh.nodes[mesh.triangles].mean(axis=1)
    k = min(CANDIDATES, mesh.n_triangles)
    _, candidates = cKDTree(centroids).query(points, k=k)
    candidates = np.asarray(candidates).reshape(points.shape[0], k)
    coords = barycentric(mesh, candidates, np.repeat(points[:, None, :], k, axis=1))
    worst = coords.min(axis=2)
    best = np.argmax(worst, axis=1)
    rows = np.arange(points.shape[0])
    cells = candidates[rows, best]
    weights = coords[rows, best]
    missing = np.flatnonzero(worst[rows, best] < -BARYCENTRIC_TOLERANCE)
    for index in missing:
        every = np.arange(mesh.n_triangles)
        all_coords = barycentric(mesh, every, np.repeat(points[index][None, :], every.size, axis=0))
        cell = int(np.argmax(all_coords.min(axis=1)))
        if all_coords[cell].min() < -BARYCENTRIC_TOLERANCE:
            raise MeshException(f"Point {points[index]} is outside the mesh")
        cells[index], weights[index] = cell, all_coords[cell]
    weights = np.clip(weights, 0.0, None)
    return cells, weights / weights.sum(axis=1, keepdims=True)


def interpolate(
    mesh: Mesh, values: NDArray[np.float64], points: NDArray[np.float64]
) -> NDArray[np.float64]:
    """P1 interpolation of vertex values (n, ...) at points"""
    cells, weights = locate_points(mesh, points)
    corner_values = values[mesh.triangles[cells]]
    return np.einsum("pi,pi...->p...", weights, corner_values)


def remesh_and_interpolate(
    mesh: Mesh, fields: Dict[str, NDArray[np.float64]]
) -> Tuple[Mesh, Dict[str, NDArray[np.float64]]]:
    """Retriangulate the domain inside the unchanged boundary loops and transfer vertex fields.

    Boundary vertices become the first vertices of the new mesh, in increasing old index order;
    their values are copied, interior values are interpolated.

    Returns:
        The new mesh and the transferred fields; the mesh velocity is transferred as well.
    Raises:
        MeshException: invalid body loops or point-location failure.
    """
    boundary = np.unique(mesh.boundary_edges)
    renumber = np.full(mesh.n_nodes, -1, dtype=np.int64)
    renumber[boundary] = np.arange(boundary.size)
    holes = []
    for tag in mesh.body_tags():
        chart = build_chart(mesh, tag)
        holes.append(interior_point(mesh.nodes[chart.nodes]))

    spacing = edge_lengths(mesh)

    def size(points: NDArray[np.float64]) -> NDArray[np.float64]:
        return interpolate(mesh, spacing, points)

    new_mesh = triangulate_domain(
        mesh.nodes[boundary],
        renumber[mesh.boundary_edges],
        mesh.edge_tags,
        np.array(holes) if holes else None,
        size,
    )
    new_interior = new_mesh.nodes[boundary.size :]
    transferred = {}
    for name, values in dict(fields, mesh_velocity=mesh.mesh_velocity).items():
        values = np.asarray(values, dtype=float)
        moved = np.empty((new_mesh.n_nodes,) + values.shape[1:])
        moved[: boundary.size] = values[boundary]
        moved[boundary.size :] = interpolate(mesh, values, new_interior)
        transferred[name] = moved
    new_mesh = new_mesh._replace(mesh_velocity=transferred.pop("mesh_velocity"))
    logging.info(
        "Remeshed: %d -> %d nodes, quality %.3f -> %.3f",
        mesh.n_nodes,
        new_mesh.n_nodes,
        quality(mesh),
        quality(new_mesh),
    )
    return new_mesh, transferred
