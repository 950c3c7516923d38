"""Triangulated fluid domain with tagged boundaries"""
from typing import List, NamedTuple, Optional
import logging

import numpy as np
from numpy.typing import NDArray

from squirm.exceptions import MeshException

AXIS_TAG = -1  # symmetry axis r = 0 of an axisymmetric meridian domain
WALL_TAG = 0  # outer wall, no-slip

INVERSION_TOLERANCE = 0.0
AXIS_TOLERANCE = 1e-12


class Mesh(NamedTuple):
    """Triangulation of the fluid domain. Vertex i has coordinates nodes[i]."""

    nodes: NDArray[np.float64]  # (n, 2) coordinates, (r, z) in axisymmetric mode
    triangles: NDArray[np.int64]  # (t, 3) counter-clockwise vertex triples
    boundary_edges: NDArray[np.int64]  # (e, 2) vertex pairs
    edge_tags: NDArray[np.int64]  # (e,) -1 axis, 0 outer wall, k >= 1 body k
    mesh_velocity: NDArray[np.float64]  # (n, 2) ALE velocity of the vertices

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    def body_tags(self) -> List[int]:
        return sorted(int(tag) for tag in np.unique(self.edge_tags) if tag > WALL_TAG)

    def tag_edges(self, tag: int) -> NDArray[np.int64]:
        return self.boundary_edges[self.edge_tags == tag]

    def tag_nodes(self, tag: int) -> NDArray[np.int64]:
        """Sorted vertex indices on the edges carrying tag"""
        return np.unique(self.tag_edges(tag))

    def with_nodes(self, nodes: NDArray[np.float64]) -> "Mesh":
        return self._replace(nodes=np.asarray(nodes, dtype=float))


def make_mesh(
    nodes: NDArray[np.float64],
    triangles: NDArray[np.int64],
    boundary_edges: NDArray[np.int64],
    edge_tags: NDArray[np.int64],
    mesh_velocity: Optional[NDArray[np.float64]] = None,
) -> Mesh:
    """Build a mesh and check its invariants.

    Raises:
        MeshException: inverted triangles, bad indices or malformed boundary loops.
    """
    nodes = np.ascontiguousarray(nodes, dtype=float)
    mesh = Mesh(
        nodes=nodes,
        triangles=np.ascontiguousarray(triangles, dtype=np.int64),
        boundary_edges=np.ascontiguousarray(boundary_edges, dtype=np.int64).reshape(-1, 2),
        edge_tags=np.ascontiguousarray(edge_tags, dtype=np.int64).ravel(),
        mesh_velocity=np.zeros_like(nodes)
        if mesh_velocity is None
        else np.asarray(mesh_velocity, dtype=float),
    )
    validate_mesh(mesh)
    return mesh


def validate_mesh(mesh: Mesh) -> None:
    """Check orientation, index ranges and boundary loop structure"""
    if mesh.nodes.ndim != 2 or mesh.nodes.shape[1] != 2:
        raise MeshException(f"Nodes must have shape (n, 2), got {mesh.nodes.shape}")
    if mesh.triangles.ndim != 2 or mesh.triangles.shape[1] != 3:
        raise MeshException(f"Triangles must have shape (t, 3), got {mesh.triangles.shape}")
    if mesh.edge_tags.shape[0] != mesh.boundary_edges.shape[0]:
        raise MeshException("Every boundary edge needs exactly one tag")
    for indices in (mesh.triangles, mesh.boundary_edges):
        if indices.size and (indices.min() < 0 or indices.max() >= mesh.n_nodes):
            raise MeshException("Connectivity refers to a node index out of range")
    areas = signed_areas(mesh)
    n_inverted = int(np.sum(areas <= INVERSION_TOLERANCE))
    if n_inverted:
        raise MeshException(f"Mesh has {n_inverted} triangles with non-positive signed area")
    for tag in np.unique(mesh.edge_tags):
        degree = np.bincount(mesh.tag_edges(int(tag)).ravel(), minlength=mesh.n_nodes)
        if np.any(degree > 2):
            raise MeshException(f"Boundary with tag {tag} branches, it is not a simple loop")
        if tag > WALL_TAG:
            ends = np.flatnonzero(degree == 1)
            if ends.size and np.any(np.abs(mesh.nodes[ends, 0]) > AXIS_TOLERANCE):
                raise MeshException(
                    f"Body {tag} boundary is open away from the symmetry axis"
                )


def signed_areas(mesh: Mesh) -> NDArray[np.float64]:
    """Signed area of every triangle, positive for counter-clockwise vertices"""
    p0, p1, p2 = (mesh.nodes[mesh.triangles[:, i]] for i in range(3))
    e1, e2 = p1 - p0, p2 - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def element_qualities(mesh: Mesh) -> NDArray[np.float64]:
    """Per-triangle quality 4 sqrt(3) area / (sum of squared edge lengths)"""
    p0, p1, p2 = (mesh.nodes[mesh.triangles[:, i]] for i in range(3))
    edge_sq = (
        np.sum((p1 - p0) ** 2, axis=1)
        + np.sum((p2 - p1) ** 2, axis=1)
        + np.sum((p0 - p2) ** 2, axis=1)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        q = 4.0 * np.sqrt(3.0) * signed_areas(mesh) / edge_sq
    return np.where(edge_sq > 0, q, 0.0)


def quality(mesh: Mesh) -> float:
    """Worst element quality; 1 for equilateral, 0 for degenerate, negative when inverted"""
    if mesh.n_triangles == 0:
        return 0.0
    return float(np.min(element_qualities(mesh)))


def edge_lengths(mesh: Mesh) -> NDArray[np.float64]:
    """Mean length of the mesh edges incident to every node"""
    tri = mesh.triangles
    pairs = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    lengths = np.linalg.norm(mesh.nodes[pairs[:, 0]] - mesh.nodes[pairs[:, 1]], axis=1)
    total = np.bincount(pairs.ravel(), weights=np.repeat(lengths, 2), minlength=mesh.n_nodes)
    count = np.bincount(pairs.ravel(), minlength=mesh.n_nodes)
    return total / np.maximum(count, 1)


def read_mesh(path: str) -> Mesh:
    """Read the plain-text mesh format.

    The first non-comment line holds the counts "n_nodes n_triangles n_edges", followed by
    node lines "id x y", triangle lines "id n1 n2 n3" and boundary edge lines "id n1 n2 tag".
    Ids are zero based; lines starting with '#' are ignored.

    Raises:
        MeshException: unreadable file or malformed content.
    """
    try:
        with open(path, "r", encoding="utf-8") as mesh_file:
            lines = [
                line.split()
                for line in mesh_file
                if line.strip() and not line.lstrip().startswith("#")
            ]
    except OSError as ex:
        raise MeshException(f"Cannot read mesh file {path}", ex) from ex
    try:
        n_nodes, n_tri, n_edges = (int(v) for v in lines[0])
        body = lines[1:]
        if len(body) != n_nodes + n_tri + n_edges:
            raise ValueError(f"expected {n_nodes + n_tri + n_edges} records, found {len(body)}")
        node_rows = np.array(body[:n_nodes], dtype=float).reshape(-1, 3)
        tri_rows = np.array(body[n_nodes : n_nodes + n_tri], dtype=np.int64).reshape(-1, 4)
        edge_rows = np.array(body[n_nodes + n_tri :], dtype=np.int64).reshape(-1, 4)
    except (ValueError, IndexError) as ex:
        raise MeshException(f"Malformed mesh file {path}", ex) from ex
    order = np.argsort(node_rows[:, 0])
    if not np.array_equal(node_rows[order, 0], np.arange(n_nodes)):
        raise MeshException(f"Node ids of {path} are not 0..{n_nodes - 1}")
    logging.info("Read mesh %s: %d nodes, %d triangles", path, n_nodes, n_tri)
    return make_mesh(node_rows[order, 1:], tri_rows[:, 1:], edge_rows[:, 1:3], edge_rows[:, 3])


def write_mesh(mesh: Mesh, path: str) -> None:
    """Write the plain-text mesh format read by read_mesh"""
    with open(path, "w", encoding="utf-8") as mesh_file:
        mesh_file.write("# squirm mesh: n_nodes n_triangles n_edges\n")
        mesh_file.write(f"{mesh.n_nodes} {mesh.n_triangles} {mesh.boundary_edges.shape[0]}\n")
        for i, (x, y) in enumerate(mesh.nodes):
            mesh_file.write(f"{i} {x:.17g} {y:.17g}\n")
        for i, (a, b, c) in enumerate(mesh.triangles):
            mesh_file.write(f"{i} {a} {b} {c}\n")
        for i, ((a, b), tag) in enumerate(zip(mesh.boundary_edges, mesh.edge_tags)):
            mesh_file.write(f"{i} {a} {b} {tag}\n")
