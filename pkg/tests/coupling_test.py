"""Tests for row surgery, the coupled saddle system and the recovered quantities"""

from typing import Dict, Sequence

import numpy as np
import pytest

from squirm.coupling.conditions import TYPE_II, Condition, ForceCondition, SlipCondition
from squirm.coupling.diagnostics import extract_slip, reaction_forces
from squirm.coupling.saddle import assemble_saddle, solve_coupled
from squirm.coupling.surgery import apply_surgery, build_h_blocks, fold_inertia, surgery_type1, surgery_type2
from squirm.exceptions import CouplingException
from squirm.fem.assembly import apply_essential, assemble_stokes, essential_dofs
from squirm.fem.spaces import P2P1, body_boundary, build_space
from squirm.geometry.chart import build_chart
from squirm.geometry.generators import circle_outline, planar_domain
from squirm.geometry.mesh import Mesh
from squirm.kinematics import BodyState, body_state
from tests.mocks.mock_program import MockProgram

# pylint: disable=missing-function-docstring


@pytest.fixture(name="mesh")
def _mesh() -> Mesh:
    return planar_domain((-4.0, 4.0, -4.0, 4.0), [circle_outline((0.0, 0.0), 1.0, 0.25)], 0.25, 1.0)


@pytest.fixture(name="pair_mesh")
def _pair_mesh() -> Mesh:
    outlines = [circle_outline((-2.0, 0.0), 0.7, 0.25), circle_outline((2.0, 0.5), 0.7, 0.25)]
    return planar_domain((-5.0, 5.0, -3.0, 3.0), outlines, 0.25, 1.0)


def _solve(
    mesh: Mesh,
    tags: Sequence[int],
    bodies: Sequence[BodyState],
    programs: Dict[int, MockProgram],
    family: str = P2P1,
):  # type: ignore
    space = build_space(mesh, family)
    blocks = apply_essential(assemble_stokes(space, 1.0), essential_dofs(space))
    boundaries = [body_boundary(space, build_chart(mesh, tag)) for tag in tags]
    conditions: Dict[int, Condition] = {
        boundary.tag: programs[boundary.tag].condition(boundary, state, 0.0)
        for boundary, state in zip(boundaries, bodies)
    }
    H, ranges = build_h_blocks(space, boundaries, bodies)
    coupled = apply_surgery(space, blocks, H, ranges, boundaries, conditions)
    return space, boundaries, coupled, solve_coupled(coupled)


@pytest.mark.parametrize("kind", ["type1", TYPE_II])
def test_zero_boundary_data_gives_rest(mesh: Mesh, kind: str) -> None:
    _, _, _, solution = _solve(mesh, [1], [body_state([0.0, 0.0])], {1: MockProgram(0.0, kind)})
    np.testing.assert_allclose(solution.s[0], 0.0, atol=1e-10)
    np.testing.assert_allclose(solution.U, 0.0, atol=1e-10)
    np.testing.assert_allclose(solution.P, 0.0, atol=1e-10)


def test_slip_is_recovered_and_body_is_force_free(mesh: Mesh) -> None:
    state = body_state([0.0, 0.0])
    space, boundaries, coupled, solution = _solve(mesh, [1], [state], {1: MockProgram(1.0)})
    moved = state.with_velocity(solution.s[0])
    slip = extract_slip(space, solution.U, moved, boundaries[0])
    np.testing.assert_allclose(slip, boundaries[0].tangents, atol=1e-10)
    np.testing.assert_allclose(reaction_forces(coupled, solution)[0], 0.0, atol=1e-8)
    # counterclockwise slip turns the circle clockwise at omega = -slip / R
    assert solution.s[0][2] == pytest.approx(-1.0, rel=5e-2)
    assert np.linalg.norm(solution.s[0][:2]) < 1e-2


def test_body_order_does_not_change_the_solution(pair_mesh: Mesh) -> None:
    bodies = {1: body_state([-2.0, 0.0]), 2: body_state([2.0, 0.5])}
    programs = {1: MockProgram(1.0), 2: MockProgram(-0.5)}
    _, _, _, forward = _solve(pair_mesh, [1, 2], [bodies[1], bodies[2]], programs)
    _, _, _, backward = _solve(pair_mesh, [2, 1], [bodies[2], bodies[1]], programs)
    np.testing.assert_allclose(forward.s[0], backward.s[1], atol=1e-10)
    np.testing.assert_allclose(forward.s[1], backward.s[0], atol=1e-10)
    np.testing.assert_allclose(forward.U, backward.U, atol=1e-10)


def test_build_h_blocks_rejects_shared_nodes(mesh: Mesh) -> None:
    space = build_space(mesh)
    boundary = body_boundary(space, build_chart(mesh, 1))
    state = body_state([0.0, 0.0])
    with pytest.raises(CouplingException) as ex:
        build_h_blocks(space, [boundary, boundary], [state, state])
    assert "claimed" in ex.value.message
    with pytest.raises(CouplingException):
        build_h_blocks(space, [boundary], [state, state])


def test_build_h_blocks_rows(mesh: Mesh) -> None:
    space = build_space(mesh)
    boundary = body_boundary(space, build_chart(mesh, 1))
    H, ranges = build_h_blocks(space, [boundary], [body_state([0.0, 0.0])])
    assert H.shape == (space.n_velocity_dofs, 3)
    assert ranges == [(0, 3)]
    rows = np.unique(H.nonzero()[0])
    np.testing.assert_array_equal(np.sort(rows), np.sort(boundary.dofs))


def _surgery(mesh: Mesh, condition: Condition):  # type: ignore
    space = build_space(mesh)
    blocks = apply_essential(assemble_stokes(space, 1.0), essential_dofs(space))
    boundary = body_boundary(space, build_chart(mesh, 1))
    H, ranges = build_h_blocks(space, [boundary], [body_state([0.0, 0.0])])
    return space, blocks, H, ranges, [boundary], {1: condition(boundary)}


def test_surgery_rejects_non_tangential_slip(mesh: Mesh) -> None:
    args = _surgery(mesh, lambda boundary: SlipCondition(boundary.normals))
    with pytest.raises(CouplingException) as ex:
        apply_surgery(*args)
    assert "not tangential" in ex.value.message


def test_surgery_rejects_missing_condition(mesh: Mesh) -> None:
    space, blocks, H, ranges, boundaries, _ = _surgery(mesh, lambda boundary: SlipCondition(boundary.tangents))
    with pytest.raises(CouplingException):
        apply_surgery(space, blocks, H, ranges, boundaries, {})


def test_surgery_rejects_non_positive_alpha(mesh: Mesh) -> None:
    def condition(boundary):  # type: ignore
        size = boundary.nodes.size
        return ForceCondition(boundary.tangents, np.zeros(size), np.zeros(size))

    with pytest.raises(CouplingException):
        apply_surgery(*_surgery(mesh, condition))


def test_fold_inertia_requires_mass(mesh: Mesh) -> None:
    coupled = apply_surgery(*_surgery(mesh, lambda boundary: SlipCondition(boundary.tangents)))
    with pytest.raises(CouplingException):
        fold_inertia(coupled, 0.1, np.zeros(coupled.A.shape[0]))


def test_saddle_layout(mesh: Mesh) -> None:
    coupled = apply_surgery(*_surgery(mesh, lambda boundary: SlipCondition(boundary.tangents)))
    system = assemble_saddle(coupled)
    size = system.n_s + system.n_u + system.n_p + 1
    assert system.matrix.shape == (size, size)
    assert system.rhs.shape == (size,)
    assert system.n_s == 3
    with pytest.raises(CouplingException):
        assemble_saddle(coupled._replace(B=np.zeros(2)))


def test_surgery_wrappers_match_general_surgery(mesh: Mesh) -> None:
    space, blocks, H, ranges, boundaries, _ = _surgery(mesh, lambda boundary: SlipCondition(boundary.tangents))
    boundary = boundaries[0]
    general = apply_surgery(space, blocks, H, ranges, boundaries, {1: SlipCondition(boundary.tangents)})
    slip = surgery_type1(space, blocks, H, ranges, boundaries, {1: boundary.tangents})
    assert (slip.A != general.A).nnz == 0
    np.testing.assert_array_equal(slip.F, general.F)

    force = ForceCondition(boundary.tangents, np.zeros(boundary.nodes.size))
    general = apply_surgery(space, blocks, H, ranges, boundaries, {1: force})
    typed = surgery_type2(space, blocks, H, ranges, boundaries, {1: boundary.tangents})
    assert (typed.A != general.A).nnz == 0
    np.testing.assert_array_equal(typed.F, general.F)
