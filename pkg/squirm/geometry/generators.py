"""
Mesh generation for the shipped geometries: a box around planar bodies and the meridian
half-disk around an axisymmetric body. Constrained Delaunay refinement is delegated to
triangle; boundary nodes are placed here and never split.
"""
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import cKDTree
import triangle

from squirm.exceptions import MeshException
from squirm.geometry.mesh import AXIS_TAG, WALL_TAG, Mesh, make_mesh

SizeField = Callable[[NDArray[np.float64]], NDArray[np.float64]]

MIN_ANGLE = 30
MAX_REFINEMENT_PASSES = 8
AREA_SLACK = 1.5
EQUILATERAL_AREA = np.sqrt(3.0) / 4.0


def circle_outline(center: Sequence[float], radius: float, h: float) -> NDArray[np.float64]:
    """Counter-clockwise polygon inscribed in a circle, spacing about h"""
    n_points = max(8, int(np.ceil(2.0 * np.pi * radius / h)))
    phi = 2.0 * np.pi * np.arange(n_points) / n_points
    return np.asarray(center, dtype=float) + radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)


def sphere_meridian(radius: float, h: float) -> NDArray[np.float64]:
    """Half circle r >= 0 from the rear pole (0, -R) to the front pole (0, R)"""
    n_segments = max(4, int(np.ceil(np.pi * radius / h)))
    phi = np.linspace(-0.5 * np.pi, 0.5 * np.pi, n_segments + 1)
    points = radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    points[[0, -1], 0] = 0.0
    return points


def graded_size_field(
    outlines: Sequence[NDArray[np.float64]], h_near: float, h_far: float, growth: float
) -> SizeField:
    """h(x) = min(h_far, h_near + growth * distance to the nearest body outline)"""
    tree = cKDTree(np.concatenate(outlines))

    def size(points: NDArray[np.float64]) -> NDArray[np.float64]:
        distance, _ = tree.query(points)
        return np.minimum(h_far, h_near + growth * distance)

    return size


def graded_segment(
    start: Sequence[float], end: Sequence[float], size: SizeField
) -> NDArray[np.float64]:
    """Points from start to end (both included) spaced by the size field"""
    start, end = np.asarray(start, dtype=float), np.asarray(end, dtype=float)
    length = float(np.linalg.norm(end - start))
    params = [0.0]
    while params[-1] < 1.0:
        point = start + params[-1] * (end - start)
        params.append(params[-1] + float(size(point[None, :])[0]) / length)
    n_segments = max(1, len(params) - 1)
    if params[-1] - 1.0 > 0.5 * (params[-1] - params[-2]) and n_segments > 1:
        n_segments -= 1
    raw = np.array(params[: n_segments + 1])
    raw = raw / raw[-1]
    return start + raw[:, None] * (end - start)


class _Pslg:
    """Planar straight line graph with tagged segments and shared end points"""

    def __init__(self) -> None:
        self.vertices: List[NDArray[np.float64]] = []
        self.segments: List[Tuple[int, int]] = []
        self.tags: List[int] = []
        self._index: Dict[Tuple[float, float], int] = {}

    def _vertex(self, point: NDArray[np.float64]) -> int:
        key = (round(float(point[0]), 12), round(float(point[1]), 12))
        if key not in self._index:
            self._index[key] = len(self.vertices)
            self.vertices.append(np.asarray(point, dtype=float))
        return self._index[key]

    def add_chain(self, points: NDArray[np.float64], tag: int, closed: bool) -> None:
        ids = [self._vertex(p) for p in points]
        pairs = list(zip(ids[:-1], ids[1:]))
        if closed:
            pairs.append((ids[-1], ids[0]))
        self.segments.extend(pairs)
        self.tags.extend([tag] * len(pairs))


def interior_point(polygon: NDArray[np.float64]) -> NDArray[np.float64]:
    """A point just inside a simple polygon, next to its longest edge"""
    following = np.roll(polygon, -1, axis=0)
    edges = following - polygon
    longest = int(np.argmax(np.linalg.norm(edges, axis=1)))
    x, y = polygon[:, 0], polygon[:, 1]
    ccw = np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0
    edge = edges[longest]
    inward = np.array([-edge[1], edge[0]]) if ccw else np.array([edge[1], -edge[0]])
    return polygon[longest] + 0.5 * edge + 0.01 * inward


def triangulate_domain(
    vertices: NDArray[np.float64],
    segments: NDArray[np.int64],
    tags: NDArray[np.int64],
    holes: Optional[NDArray[np.float64]],
    size: SizeField,
) -> Mesh:
    """Constrained Delaunay triangulation refined until element areas follow the size field.

    Boundary segments are never split, so the input vertices keep their indices.

    Raises:
        MeshException: triangle failed or renumbered the boundary vertices.
    """
    pslg = {"vertices": vertices, "segments": segments}
    if holes is not None and len(holes):
        pslg["holes"] = holes
    try:
        tri = triangle.triangulate(pslg, f"pq{MIN_ANGLE}YQ")
        for refinement in range(MAX_REFINEMENT_PASSES):
            points = tri["vertices"]
            cells = tri["triangles"]
            centroids = points[cells].mean(axis=1)
            target = EQUILATERAL_AREA * size(centroids) ** 2
            p0, p1, p2 = points[cells[:, 0]], points[cells[:, 1]], points[cells[:, 2]]
            areas = 0.5 * np.abs(
                (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
            )
            if np.all(areas <= AREA_SLACK * target):
                break
            logging.debug(
                "Refinement pass %d: %d of %d triangles above target area",
                refinement,
                int(np.sum(areas > AREA_SLACK * target)),
                cells.shape[0],
            )
            tri = triangle.triangulate(
                {
                    "vertices": points,
                    "triangles": cells,
                    "segments": tri["segments"],
                    "triangle_max_area": target,
                },
                f"rpq{MIN_ANGLE}YaQ",
            )
    except Exception as ex:  # pylint: disable=broad-except
        raise MeshException("Constrained Delaunay triangulation failed", ex) from ex

    points = np.asarray(tri["vertices"], dtype=float)
    n_input = vertices.shape[0]
    if points.shape[0] < n_input or not np.allclose(points[:n_input], vertices, rtol=0, atol=1e-12):
        raise MeshException("Triangulation renumbered the boundary vertices")
    points[:n_input] = vertices
    cells = np.asarray(tri["triangles"], dtype=np.int64)
    p0, p1, p2 = points[cells[:, 0]], points[cells[:, 1]], points[cells[:, 2]]
    orientation = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (
        p2[:, 0] - p0[:, 0]
    )
    cells[orientation < 0] = cells[orientation < 0][:, [0, 2, 1]]
    return make_mesh(points, cells, segments, tags)


def planar_domain(
    extent: Sequence[float],
    outlines: Sequence[NDArray[np.float64]],
    h_near: float,
    h_far: float,
    growth: float = 0.3,
) -> Mesh:
    """Box (xmin, xmax, ymin, ymax) with the closed body outlines cut out as holes.

    Body k (1-based, in outline order) gets tag k; the box gets the wall tag.
    """
    xmin, xmax, ymin, ymax = (float(v) for v in extent)
    size = graded_size_field(outlines, h_near, h_far, growth)
    pslg = _Pslg()
    corners = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
    box = np.concatenate(
        [
            graded_segment(start, end, size)[:-1]
            for start, end in zip(corners, corners[1:] + corners[:1])
        ]
    )
    pslg.add_chain(box, WALL_TAG, closed=True)
    holes = []
    for tag, outline in enumerate(outlines, start=1):
        pslg.add_chain(outline, tag, closed=True)
        holes.append(interior_point(outline))
    mesh = triangulate_domain(
        np.array(pslg.vertices),
        np.array(pslg.segments, dtype=np.int64),
        np.array(pslg.tags, dtype=np.int64),
        np.array(holes),
        size,
    )
    logging.info(
        "Generated planar mesh: %d nodes, %d triangles, %d bodies",
        mesh.n_nodes,
        mesh.n_triangles,
        len(outlines),
    )
    return mesh


def axisymmetric_domain(
    radius: float,
    outer_radius: float,
    h_near: float,
    h_far: float,
    growth: float = 0.25,
    meridian: Optional[NDArray[np.float64]] = None,
) -> Mesh:
    """Meridian half-disk r >= 0 of radius outer_radius around a body of the given radius.

    The body meridian (default: sphere) gets tag 1, the outer arc the wall tag and the two axis
    segments the axis tag.
    """
    body = sphere_meridian(radius, h_near) if meridian is None else meridian
    size = graded_size_field([body], h_near, h_far, growth)
    pslg = _Pslg()
    pslg.add_chain(graded_segment((0.0, -outer_radius), body[0], size), AXIS_TAG, closed=False)
    pslg.add_chain(body, 1, closed=False)
    pslg.add_chain(graded_segment(body[-1], (0.0, outer_radius), size), AXIS_TAG, closed=False)
    n_arc = max(8, int(np.ceil(np.pi * outer_radius / h_far)))
    phi = np.linspace(0.5 * np.pi, -0.5 * np.pi, n_arc + 1)
    arc = outer_radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    arc[[0, -1], 0] = 0.0
    pslg.add_chain(arc, WALL_TAG, closed=False)
    closed_body = np.concatenate([body, body[:1]])
    mesh = triangulate_domain(
        np.array(pslg.vertices),
        np.array(pslg.segments, dtype=np.int64),
        np.array(pslg.tags, dtype=np.int64),
        np.array([interior_point(closed_body[:-1])]),
        size,
    )
    logging.info(
        "Generated axisymmetric mesh: %d nodes, %d triangles", mesh.n_nodes, mesh.n_triangles
    )
    return mesh
