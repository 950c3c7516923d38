"""Arc-length parameterization, tangents and inward normals of a body boundary"""
from typing import Dict, List, NamedTuple

import numpy as np
from numpy.typing import NDArray

from squirm.exceptions import MeshException
from squirm.geometry.mesh import AXIS_TOLERANCE, Mesh, WALL_TAG

NORMAL_RULES = ("average", "mass_conserving")


class BoundaryChart(NamedTuple):
    """Ordered boundary of one body; the body lies to the left of increasing s."""

    tag: int
    nodes: NDArray[np.int64]  # ordered vertex indices, anchor first
    arc: NDArray[np.float64]  # arc length s of every node, arc[0] = 0
    perimeter: float  # total length, including the closing edge of a closed loop
    tangents: NDArray[np.float64]  # (m, 2) unit tangents, direction of increasing s
    normals: NDArray[np.float64]  # (m, 2) unit normals pointing into the body
    closed: bool  # False for a meridian chain ending on the symmetry axis

    @property
    def edges(self) -> NDArray[np.int64]:
        """Consecutive vertex pairs along the chart"""
        following = np.roll(self.nodes, -1)
        pairs = np.stack([self.nodes, following], axis=1)
        return pairs if self.closed else pairs[:-1]


def _adjacency(edges: NDArray[np.int64]) -> Dict[int, List[int]]:
    neighbours: Dict[int, List[int]] = {}
    for a, b in edges:
        neighbours.setdefault(int(a), []).append(int(b))
        neighbours.setdefault(int(b), []).append(int(a))
    return neighbours


def _walk(neighbours: Dict[int, List[int]], start: int) -> List[int]:
    order = [start]
    previous, current = -1, start
    while True:
        candidates = [n for n in neighbours[current] if n != previous]
        if not candidates or candidates[0] == start:
            return order
        previous, current = current, candidates[0]
        if current in order:
            raise MeshException(f"Boundary walk revisits node {current}")
        order.append(current)


def _polygon_area(points: NDArray[np.float64]) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(points: NDArray[np.float64], closed: bool) -> bool:
    """True if two non-adjacent segments of the polyline cross"""
    start = points if closed else points[:-1]
    end = np.roll(points, -1, axis=0) if closed else points[1:]
    n_seg = start.shape[0]
    index = np.arange(n_seg)

    def orient(p, q, r):  # type: ignore
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (
            r[..., 0] - p[..., 0]
        )

    for first in range(0, n_seg, 256):
        rows = index[first : first + 256, None]
        a, b = start[rows[:, 0]][:, None, :], end[rows[:, 0]][:, None, :]
        c, d = start[None, :, :], end[None, :, :]
        crossing = (np.sign(orient(a, b, c)) * np.sign(orient(a, b, d)) < 0) & (
            np.sign(orient(c, d, a)) * np.sign(orient(c, d, b)) < 0
        )
        gap = np.abs(rows - index[None, :])
        adjacent = (gap <= 1) | (closed & (gap == n_seg - 1))
        if np.any(crossing & ~adjacent):
            return True
    return False


def build_chart(
    mesh: Mesh,
    tag: int,
    normal_rule: str = "average",
    axisymmetric: bool = False,
) -> BoundaryChart:
    """Arc-length chart of the boundary of body tag.

    The anchor is the lowest node index of a closed loop, or the chain end that keeps the body on
    the left for a meridian chain. Normals are length-weighted averages of the adjacent edge
    normals; "mass_conserving" weights them by the integral of the nodal basis function with the
    radius factor of axisymmetric mode.

    Raises:
        MeshException: missing tag, branching, open or self-intersecting loop.
    """
    if tag <= WALL_TAG:
        raise MeshException(f"Tag {tag} does not denote a body")
    if normal_rule not in NORMAL_RULES:
        raise MeshException(f"Unknown normal rule '{normal_rule}', expected one of {NORMAL_RULES}")
    edges = mesh.tag_edges(tag)
    if edges.shape[0] == 0:
        raise MeshException(f"Mesh has no boundary edges with tag {tag}")
    neighbours = _adjacency(edges)
    ends = sorted(node for node, adj in neighbours.items() if len(adj) == 1)
    if any(len(adj) > 2 for adj in neighbours.values()):
        raise MeshException(f"Boundary of body {tag} branches")
    closed = not ends
    if not closed:
        if len(ends) != 2 or np.any(np.abs(mesh.nodes[ends, 0]) > AXIS_TOLERANCE):
            raise MeshException(f"Boundary of body {tag} is an open loop")
    order = _walk(neighbours, min(neighbours) if closed else ends[0])
    if len(order) != len(neighbours):
        raise MeshException(f"Boundary of body {tag} has several components")

    ordered = np.array(order, dtype=np.int64)
    if _polygon_area(mesh.nodes[ordered]) < 0:
        ordered = ordered[::-1]
        if closed:
            ordered = np.roll(ordered, 1)
    points = mesh.nodes[ordered]
    if _segments_intersect(points, closed):
        raise MeshException(f"Boundary of body {tag} self-intersects")

    following = np.roll(points, -1, axis=0)
    segments = (following - points) if closed else (following - points)[:-1]
    lengths = np.linalg.norm(segments, axis=1)
    if np.any(lengths <= 0):
        raise MeshException(f"Boundary of body {tag} has a zero-length edge")
    arc = np.concatenate([[0.0], np.cumsum(lengths)])
    perimeter = float(arc[-1])
    arc = arc[: points.shape[0]]

    edge_normals = np.stack([-segments[:, 1], segments[:, 0]], axis=1) / lengths[:, None]
    if normal_rule == "mass_conserving" and axisymmetric:
        start_r = points[: segments.shape[0], 0]
        end_r = np.roll(points, -1, axis=0)[: segments.shape[0], 0]
        weight_start = lengths * (2.0 * start_r + end_r) / 6.0
        weight_end = lengths * (start_r + 2.0 * end_r) / 6.0
    else:
        weight_start = weight_end = 0.5 * lengths
    normals = np.zeros_like(points)
    n_seg = segments.shape[0]
    normals[:n_seg] += weight_start[:, None] * edge_normals
    normals[np.arange(1, n_seg + 1) % points.shape[0]] += weight_end[:, None] * edge_normals
    if not closed:
        # chain ends on the axis: the mirrored edge cancels the radial component
        for end in (0, points.shape[0] - 1):
            normals[end] = [0.0, np.sign(normals[end, 1]) or 1.0]
    norm = np.linalg.norm(normals, axis=1)
    if np.any(norm <= 0):
        raise MeshException(f"Boundary of body {tag} has a node with a zero normal")
    normals = normals / norm[:, None]
    tangents = np.stack([normals[:, 1], -normals[:, 0]], axis=1)
    return BoundaryChart(
        tag=int(tag),
        nodes=ordered,
        arc=arc,
        perimeter=perimeter,
        tangents=tangents,
        normals=normals,
        closed=closed,
    )
