"""
Finite element spaces on a triangulation: equal-order P1/P1 with GLS stabilization and the
Taylor-Hood pair P2/P1, in planar or axisymmetric (r, z) mode.
"""
from typing import NamedTuple
import logging

import numpy as np
from numpy.typing import NDArray

from squirm.exceptions import AssemblyException
from squirm.fem.quadrature import TRIANGLE_3, TRIANGLE_7, Rule
from squirm.geometry.chart import BoundaryChart
from squirm.geometry.mesh import AXIS_TOLERANCE, Mesh, signed_areas

P1P1_GLS = "P1P1_GLS"
P2P1 = "P2P1"
FAMILIES = (P1P1_GLS, P2P1)

PLANAR = "planar"
AXISYMMETRIC = "axisymmetric"
MODES = (PLANAR, AXISYMMETRIC)

DIM = 2


class FeSpace(NamedTuple):
    """Velocity and pressure numbering on one mesh"""

    family: str  # P1P1_GLS or P2P1
    mode: str  # planar or axisymmetric
    mesh: Mesh
    velocity_points: NDArray[np.float64]  # (n_U, 2) vertices first, then edge midpoints
    velocity_cells: NDArray[np.int64]  # (t, 3) or (t, 6): v0 v1 v2 m01 m12 m20
    edges: NDArray[np.int64]  # (n_edges, 2) sorted vertex pairs, P2P1 only

    @property
    def n_velocity(self) -> int:
        return int(self.velocity_points.shape[0])

    @property
    def n_pressure(self) -> int:
        return self.mesh.n_nodes

    @property
    def n_velocity_dofs(self) -> int:
        return DIM * self.n_velocity

    @property
    def axisymmetric(self) -> bool:
        return self.mode == AXISYMMETRIC

    @property
    def quadratic(self) -> bool:
        return self.family == P2P1

    def edge_midpoint(self, pairs: NDArray[np.int64]) -> NDArray[np.int64]:
        """Velocity node at the midpoint of each vertex pair (P2P1)"""
        pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
        keys = pairs[:, 0] * self.mesh.n_nodes + pairs[:, 1]
        known = self.edges[:, 0] * self.mesh.n_nodes + self.edges[:, 1]
        position = np.searchsorted(known, keys)
        if np.any(position >= known.size) or np.any(known[np.minimum(position, known.size - 1)] != keys):
            raise AssemblyException("Vertex pair is not an edge of the mesh")
        return self.mesh.n_nodes + position

    def from_vertices(self, values: NDArray[np.float64]) -> NDArray[np.float64]:
        """Extend vertex values to all velocity nodes, linearly on edges"""
        values = np.asarray(values, dtype=float)
        if not self.quadratic:
            return values
        return np.concatenate([values, 0.5 * (values[self.edges[:, 0]] + values[self.edges[:, 1]])])

    def tag_velocity_nodes(self, tag: int) -> NDArray[np.int64]:
        """Velocity nodes on the boundary edges with the given tag"""
        edges = self.mesh.tag_edges(tag)
        nodes = [edges.ravel()]
        if self.quadratic and edges.size:
            nodes.append(self.edge_midpoint(edges))
        return np.unique(np.concatenate(nodes))


def build_space(mesh: Mesh, family: str = P1P1_GLS, mode: str = PLANAR) -> FeSpace:
    """Number the velocity and pressure nodes of mesh.

    Raises:
        AssemblyException: unknown family or mode, zero-area element, or nodes with r < 0 in
            axisymmetric mode.
    """
    if family not in FAMILIES:
        raise AssemblyException(f"Unknown element family '{family}', expected one of {FAMILIES}")
    if mode not in MODES:
        raise AssemblyException(f"Unknown mode '{mode}', expected one of {MODES}")
    if np.any(signed_areas(mesh) <= 0.0):
        raise AssemblyException("Mesh has zero-area or inverted elements")
    if mode == AXISYMMETRIC and np.any(mesh.nodes[:, 0] < -AXIS_TOLERANCE):
        raise AssemblyException("Axisymmetric mesh has nodes with negative radius")
    tri = mesh.triangles
    if family == P1P1_GLS:
        return FeSpace(family, mode, mesh, mesh.nodes.copy(), tri.copy(), np.zeros((0, 2), np.int64))
    local_edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    edges, inverse = np.unique(np.sort(local_edges, axis=1), axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    midpoints = 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])
    n_tri = tri.shape[0]
    cells = np.concatenate(
        [tri, mesh.n_nodes + inverse.reshape(3, n_tri).T],
        axis=1,
    )
    logging.debug("P2 space: %d vertices, %d edges", mesh.n_nodes, edges.shape[0])
    return FeSpace(family, mode, mesh, np.concatenate([mesh.nodes, midpoints]), cells, edges)


def shape_functions(quadratic: bool, points: NDArray[np.float64]):  # type: ignore
    """Reference shape values (q, k) and gradients (q, k, 2) at reference points"""
    xi, eta = points[:, 0], points[:, 1]
    l1, l2, l3 = 1.0 - xi - eta, xi, eta
    d1, d2, d3 = np.array([-1.0, -1.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])
    if not quadratic:
        values = np.stack([l1, l2, l3], axis=1)
        grads = np.broadcast_to(np.stack([d1, d2, d3]), (points.shape[0], 3, 2)).copy()
        return values, grads
    values = np.stack(
        [
            l1 * (2 * l1 - 1),
            l2 * (2 * l2 - 1),
            l3 * (2 * l3 - 1),
            4 * l1 * l2,
            4 * l2 * l3,
            4 * l3 * l1,
        ],
        axis=1,
    )
    grads = np.stack(
        [
            (4 * l1 - 1)[:, None] * d1,
            (4 * l2 - 1)[:, None] * d2,
            (4 * l3 - 1)[:, None] * d3,
            4 * (l1[:, None] * d2 + l2[:, None] * d1),
            4 * (l2[:, None] * d3 + l3[:, None] * d2),
            4 * (l3[:, None] * d1 + l1[:, None] * d3),
        ],
        axis=1,
    )
    return values, grads


class ElementData(NamedTuple):
    """Geometry and basis functions at the quadrature points of every element"""

    points: NDArray[np.float64]  # (t, q, 2) physical quadrature points
    weights: NDArray[np.float64]  # (t, q) quadrature weight times |J|, times r if axisymmetric
    radius: NDArray[np.float64]  # (t, q) radial coordinate, ones in planar mode
    values: NDArray[np.float64]  # (q, k) velocity basis
    grads: NDArray[np.float64]  # (t, q, k, 2) physical velocity basis gradients
    p_values: NDArray[np.float64]  # (q, 3) pressure basis
    p_grads: NDArray[np.float64]  # (t, q, 3, 2) physical pressure basis gradients
    diameter: NDArray[np.float64]  # (t,) longest edge


def element_rule(space: FeSpace) -> Rule:
    return TRIANGLE_7 if space.quadratic else TRIANGLE_3


def element_data(space: FeSpace, rule: Rule = None) -> ElementData:  # type: ignore
    """Evaluate the bases at the quadrature points of every element"""
    rule = element_rule(space) if rule is None else rule
    mesh = space.mesh
    p0, p1, p2 = (mesh.nodes[mesh.triangles[:, i]] for i in range(3))
    jac = np.stack([p1 - p0, p2 - p0], axis=2)  # (t, 2, 2), columns are edge vectors
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if np.any(det <= 0.0):
        raise AssemblyException("Zero-area or inverted element in assembly")
    inv = np.stack(
        [
            np.stack([jac[:, 1, 1], -jac[:, 0, 1]], axis=1),
            np.stack([-jac[:, 1, 0], jac[:, 0, 0]], axis=1),
        ],
        axis=1,
    ) / det[:, None, None]
    points = p0[:, None, :] + np.einsum("edk,qk->eqd", jac, rule.points)
    radius = points[..., 0] if space.axisymmetric else np.ones(points.shape[:2])
    weights = rule.weights[None, :] * det[:, None] * radius
    values, ref_grads = shape_functions(space.quadratic, rule.points)
    p_values, p_ref_grads = shape_functions(False, rule.points)
    grads = np.einsum("qkm,emd->eqkd", ref_grads, inv)
    p_grads = np.einsum("qkm,emd->eqkd", p_ref_grads, inv)
    diameter = np.max(
        np.stack(
            [
                np.linalg.norm(p1 - p0, axis=1),
                np.linalg.norm(p2 - p1, axis=1),
                np.linalg.norm(p0 - p2, axis=1),
            ]
        ),
        axis=0,
    )
    return ElementData(points, weights, radius, values, grads, p_values, p_grads, diameter)


class BodyBoundary(NamedTuple):
    """Velocity nodes of one body boundary, ordered along its chart"""

    tag: int
    nodes: NDArray[np.int64]  # (m,) velocity node indices
    points: NDArray[np.float64]  # (m, 2) coordinates
    arc: NDArray[np.float64]  # (m,) chart arc length
    tangents: NDArray[np.float64]  # (m, 2) unit tangents
    normals: NDArray[np.float64]  # (m, 2) unit normals into the body
    segments: NDArray[np.int64]  # (n_seg, 2 or 3) positions in nodes: start, end[, midpoint]
    perimeter: float
    closed: bool

    @property
    def dofs(self) -> NDArray[np.int64]:
        """Interleaved velocity dofs (x0, y0, x1, y1, ...) of the boundary nodes"""
        return np.stack([DIM * self.nodes, DIM * self.nodes + 1], axis=1).ravel()


def body_boundary(space: FeSpace, chart: BoundaryChart) -> BodyBoundary:
    """Boundary velocity nodes of a chart; P2 midpoints take the normal of their edge"""
    vertices = chart.nodes
    n_vert = vertices.size
    n_seg = chart.edges.shape[0]
    if not space.quadratic:
        positions = np.arange(n_vert)
        segments = np.stack([positions[:n_seg], (positions[:n_seg] + 1) % n_vert], axis=1)
        return BodyBoundary(
            chart.tag,
            vertices.copy(),
            space.velocity_points[vertices],
            chart.arc.copy(),
            chart.tangents.copy(),
            chart.normals.copy(),
            segments,
            chart.perimeter,
            chart.closed,
        )
    mids = space.edge_midpoint(chart.edges)
    start = space.velocity_points[chart.edges[:, 0]]
    end = space.velocity_points[chart.edges[:, 1]]
    seg = end - start
    length = np.linalg.norm(seg, axis=1)
    mid_tangents = seg / length[:, None]
    mid_normals = np.stack([-mid_tangents[:, 1], mid_tangents[:, 0]], axis=1)

    # interleave v0, m01, v1, m12, ...
    total = n_vert + n_seg
    nodes = np.empty(total, dtype=np.int64)
    arc = np.empty(total)
    tangents = np.empty((total, 2))
    normals = np.empty((total, 2))
    vert_pos = 2 * np.arange(n_vert)
    mid_pos = 2 * np.arange(n_seg) + 1
    nodes[vert_pos], nodes[mid_pos] = vertices, mids
    arc[vert_pos], arc[mid_pos] = chart.arc, chart.arc[:n_seg] + 0.5 * length
    tangents[vert_pos], tangents[mid_pos] = chart.tangents, mid_tangents
    normals[vert_pos], normals[mid_pos] = chart.normals, mid_normals
    segments = np.stack([vert_pos[:n_seg], (vert_pos[:n_seg] + 2) % total, mid_pos], axis=1)
    return BodyBoundary(
        chart.tag,
        nodes,
        space.velocity_points[nodes],
        arc,
        tangents,
        normals,
        segments,
        chart.perimeter,
        chart.closed,
    )
