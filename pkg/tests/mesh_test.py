"""Tests for mesh generation, boundary charts, mesh motion and remeshing"""

import tempfile

import numpy as np
import pytest

from squirm.exceptions import MeshException, RemeshRequiredException
from squirm.geometry.chart import build_chart
from squirm.geometry.generators import axisymmetric_domain, circle_outline, planar_domain, sphere_meridian
from squirm.geometry.mesh import AXIS_TAG, WALL_TAG, Mesh, make_mesh, quality, read_mesh, write_mesh
from squirm.geometry.motion import move_mesh
from squirm.geometry.remesh import interpolate, locate_points, remesh_and_interpolate

# pylint: disable=missing-function-docstring


@pytest.fixture(name="circle_mesh")
def _circle_mesh() -> Mesh:
    outline = circle_outline((0.0, 0.0), 1.0, 0.3)
    return planar_domain((-4.0, 4.0, -4.0, 4.0), [outline], 0.3, 1.0)


@pytest.fixture(name="sphere_mesh")
def _sphere_mesh() -> Mesh:
    return axisymmetric_domain(1.0, 10.0, 0.3, 2.0)


def test_circle_outline_spacing() -> None:
    outline = circle_outline((1.0, 2.0), 2.0, 0.5)
    assert outline.shape == (26, 2)
    np.testing.assert_allclose(np.linalg.norm(outline - [1.0, 2.0], axis=1), 2.0)


def test_sphere_meridian_ends_on_axis() -> None:
    meridian = sphere_meridian(1.0, 0.2)
    assert meridian[0, 0] == 0.0 and meridian[-1, 0] == 0.0
    assert meridian[0, 1] == pytest.approx(-1.0) and meridian[-1, 1] == pytest.approx(1.0)
    assert np.all(meridian[:, 0] >= 0.0)


def test_planar_domain_keeps_body_nodes(circle_mesh: Mesh) -> None:
    assert circle_mesh.body_tags() == [1]
    assert circle_mesh.tag_nodes(1).size == circle_outline((0.0, 0.0), 1.0, 0.3).shape[0]
    assert circle_mesh.tag_nodes(WALL_TAG).size > 0
    assert quality(circle_mesh) > 0.3


def test_axisymmetric_domain_tags(sphere_mesh: Mesh) -> None:
    assert sphere_mesh.body_tags() == [1]
    axis_nodes = sphere_mesh.tag_nodes(AXIS_TAG)
    np.testing.assert_allclose(sphere_mesh.nodes[axis_nodes, 0], 0.0, atol=1e-12)
    assert np.all(sphere_mesh.nodes[:, 0] >= -1e-12)


def test_closed_chart(circle_mesh: Mesh) -> None:
    chart = build_chart(circle_mesh, 1)
    points = circle_mesh.nodes[chart.nodes]
    assert chart.closed
    assert chart.arc[0] == 0.0
    perimeter = np.sum(np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1))
    assert chart.perimeter == pytest.approx(perimeter)
    # normals point into the body and tangents are unit vectors
    assert np.all(np.einsum("md,md->m", chart.normals, points) < 0)
    np.testing.assert_allclose(np.linalg.norm(chart.tangents, axis=1), 1.0)


def test_open_chart_has_axial_end_normals(sphere_mesh: Mesh) -> None:
    chart = build_chart(sphere_mesh, 1, "mass_conserving", axisymmetric=True)
    assert not chart.closed
    np.testing.assert_allclose(np.abs(chart.normals[[0, -1]]), [[0.0, 1.0], [0.0, 1.0]], atol=1e-14)


def test_chart_missing_tag(circle_mesh: Mesh) -> None:
    with pytest.raises(MeshException):
        build_chart(circle_mesh, 7)
    with pytest.raises(MeshException):
        build_chart(circle_mesh, WALL_TAG)


def test_make_mesh_rejects_clockwise_triangle() -> None:
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshException):
        make_mesh(nodes, np.array([[0, 2, 1]]), np.array([[0, 1], [1, 2], [2, 0]]), np.zeros(3))


def test_mesh_file_round_trip(circle_mesh: Mesh) -> None:
    with tempfile.NamedTemporaryFile("w", suffix=".mesh") as temp:
        write_mesh(circle_mesh, temp.name)
        loaded = read_mesh(temp.name)
    np.testing.assert_array_equal(loaded.nodes, circle_mesh.nodes)
    np.testing.assert_array_equal(loaded.triangles, circle_mesh.triangles)
    np.testing.assert_array_equal(loaded.edge_tags, circle_mesh.edge_tags)


def test_read_malformed_mesh() -> None:
    with tempfile.NamedTemporaryFile("w", suffix=".mesh") as temp:
        temp.write("3 1 3\n0 0 0\n")
        temp.flush()
        with pytest.raises(MeshException):
            read_mesh(temp.name)


def test_move_mesh_translates_body(circle_mesh: Mesh) -> None:
    body = circle_mesh.tag_nodes(1)
    wall = circle_mesh.tag_nodes(WALL_TAG)
    moved = move_mesh(circle_mesh, body, np.tile([0.2, -0.1], (body.size, 1)), dt=0.1)
    np.testing.assert_allclose(moved.nodes[body] - circle_mesh.nodes[body], np.tile([0.2, -0.1], (body.size, 1)))
    np.testing.assert_array_equal(moved.nodes[wall], circle_mesh.nodes[wall])
    np.testing.assert_allclose(moved.mesh_velocity[body], np.tile([2.0, -1.0], (body.size, 1)))
    np.testing.assert_array_equal(moved.triangles, circle_mesh.triangles)


def test_move_mesh_zero_displacement(circle_mesh: Mesh) -> None:
    body = circle_mesh.tag_nodes(1)
    moved = move_mesh(circle_mesh, body, np.zeros((body.size, 2)))
    np.testing.assert_array_equal(moved.nodes, circle_mesh.nodes)


def test_move_mesh_through_wall_requires_remesh(circle_mesh: Mesh) -> None:
    body = circle_mesh.tag_nodes(1)
    with pytest.raises(RemeshRequiredException):
        move_mesh(circle_mesh, body, np.tile([10.0, 0.0], (body.size, 1)))


def test_move_mesh_axis_nodes_slide(sphere_mesh: Mesh) -> None:
    body = sphere_mesh.tag_nodes(1)
    moved = move_mesh(sphere_mesh, body, np.tile([0.0, 0.05], (body.size, 1)))
    axis = sphere_mesh.tag_nodes(AXIS_TAG)
    np.testing.assert_allclose(moved.nodes[axis, 0], 0.0, atol=1e-12)


def test_locate_points(circle_mesh: Mesh) -> None:
    cells, weights = locate_points(circle_mesh, np.array([[2.0, 2.0], [-3.0, 0.5]]))
    corners = circle_mesh.nodes[circle_mesh.triangles[cells]]
    np.testing.assert_allclose(np.einsum("pi,pid->pd", weights, corners), [[2.0, 2.0], [-3.0, 0.5]], atol=1e-12)


def test_remesh_transfers_linear_fields_exactly(circle_mesh: Mesh) -> None:
    field = circle_mesh.nodes[:, 0] + 2.0 * circle_mesh.nodes[:, 1]
    new_mesh, fields = remesh_and_interpolate(circle_mesh, {"f": field})
    np.testing.assert_allclose(fields["f"], new_mesh.nodes[:, 0] + 2.0 * new_mesh.nodes[:, 1], atol=1e-10)
    assert new_mesh.tag_nodes(1).size == circle_mesh.tag_nodes(1).size
    assert new_mesh.mesh_velocity.shape == new_mesh.nodes.shape
    assert quality(new_mesh) > 0.3


def test_transfer_does_not_overshoot(circle_mesh: Mesh) -> None:
    x, y = circle_mesh.nodes.T
    field = np.sin(2.0 * x) * np.cos(3.0 * y) + 0.3 * x * y
    new_mesh, fields = remesh_and_interpolate(circle_mesh, {"f": field})
    assert np.abs(fields["f"]).max() <= np.abs(field).max() + 1e-12
    rng = np.random.default_rng(2)
    points = new_mesh.nodes[new_mesh.triangles[rng.integers(new_mesh.n_triangles, size=200)]].mean(axis=1)
    values = interpolate(new_mesh, fields["f"], points)
    assert np.abs(values).max() <= np.abs(fields["f"]).max() + 1e-12
