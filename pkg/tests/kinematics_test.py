"""Tests for the rigid-body kinematics"""

import numpy as np
import pytest

from squirm.exceptions import KinematicsException
from squirm.kinematics import (
    LAMBDA,
    ab2_advance,
    body_state,
    h_matrix,
    n_components,
    project_so3_iterative,
    project_so3_svd,
    rigid_position,
    rotation_2d,
    skw,
)

# pylint: disable=missing-function-docstring


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def test_n_components() -> None:
    assert n_components(2) == 3
    assert n_components(3) == 6
    with pytest.raises(KinematicsException):
        n_components(4)


def test_body_state_defaults_to_rest() -> None:
    state = body_state([1.0, 2.0])
    assert state.orientation == 0.0
    np.testing.assert_array_equal(state.velocity_array(), np.zeros(3))
    state3 = body_state([0.0, 0.0, 0.0])
    np.testing.assert_array_equal(state3.orientation, np.eye(3))
    assert state3.n_c == 6


def test_body_state_rejects_reflection() -> None:
    with pytest.raises(KinematicsException) as ex:
        body_state(np.zeros(3), np.diag([1.0, 1.0, -1.0]))
    assert "not a rotation" in ex.value.message


def test_body_state_rejects_non_finite() -> None:
    with pytest.raises(KinematicsException):
        body_state([0.0, np.nan])


def test_h_matrix_planar_is_rigid_motion() -> None:
    state = body_state([1.0, -1.0])
    x = np.array([[2.0, 0.5], [1.0, -1.0], [-3.0, 4.0]])
    s = np.array([0.3, -0.2, 1.5])
    velocity = np.einsum("mdc,c->md", h_matrix(state, x), s)
    expected = s[:2] + s[2] * (x - state.x_c) @ LAMBDA.T
    np.testing.assert_allclose(velocity, expected, atol=1e-14)


def test_h_matrix_spatial_is_cross_product() -> None:
    state = body_state(np.array([0.5, 0.0, -1.0]))
    x = np.array([1.0, 2.0, 3.0])
    s = np.array([0.1, 0.2, 0.3, -1.0, 0.5, 2.0])
    velocity = h_matrix(state, x) @ s
    np.testing.assert_allclose(velocity, s[:3] + np.cross(s[3:], x - state.x_c), atol=1e-14)


def test_skw_is_cross_product() -> None:
    w, y = np.array([1.0, -2.0, 0.5]), np.array([0.3, 0.7, -1.1])
    np.testing.assert_allclose(skw(w) @ y, np.cross(w, y), atol=1e-15)
    with pytest.raises(KinematicsException):
        skw([1.0, 2.0])


def test_rigid_position_rotates_about_reference_center() -> None:
    state = body_state([1.0, 1.0], np.pi / 2)
    np.testing.assert_allclose(rigid_position(state, [1.0, 0.0], [0.0, 0.0]), [1.0, 2.0], atol=1e-14)
    with pytest.raises(KinematicsException):
        rigid_position(state, [1.0, 0.0, 0.0], [0.0, 0.0])


def test_ab2_forward_euler_start() -> None:
    state = body_state([0.0, 0.0], 0.1)
    s = np.array([1.0, 2.0, 0.5])
    advanced = ab2_advance(state, s, s, 0.1)
    np.testing.assert_allclose(advanced.x_c, [0.1, 0.2], atol=1e-15)
    assert advanced.orientation == pytest.approx(0.15)
    np.testing.assert_array_equal(advanced.velocity_array(), s)


def test_ab2_two_step_weights() -> None:
    state = body_state([0.0, 0.0])
    advanced = ab2_advance(state, [2.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0)
    np.testing.assert_allclose(advanced.x_c, [2.5, 0.0], atol=1e-15)


def _ab2_error(n_steps: int) -> float:
    """Error at t = 1 of AB2 for x' = (cos t, sin 2t), theta' = cos t started from exact history"""

    def velocity(t: float) -> np.ndarray:
        return np.array([np.cos(t), np.sin(2.0 * t), np.cos(t)])

    dt = 1.0 / n_steps
    state = body_state([0.0, 0.0])
    for n in range(n_steps):
        t = n * dt
        state = ab2_advance(state, velocity(t), velocity(t - dt), dt)
    exact = np.array([np.sin(1.0), 0.5 * (1.0 - np.cos(2.0)), np.sin(1.0)])
    return float(np.linalg.norm(np.append(state.x_c, state.orientation) - exact))


def test_ab2_converges_at_second_order() -> None:
    coarse, fine = _ab2_error(40), _ab2_error(80)
    assert coarse / fine == pytest.approx(4.0, rel=0.1)


def test_ab2_rejects_bad_step() -> None:
    state = body_state([0.0, 0.0])
    with pytest.raises(KinematicsException):
        ab2_advance(state, np.zeros(3), np.zeros(3), 0.0)
    with pytest.raises(KinematicsException):
        ab2_advance(state, np.zeros(6), np.zeros(3), 0.1)


def test_ab2_spatial_stays_on_so3() -> None:
    state = body_state(np.zeros(3))
    s = np.array([0.0, 0.0, 0.0, 0.3, -0.2, 1.0])
    advanced = state
    for _ in range(20):
        advanced = ab2_advance(advanced, s, s, 0.05, projection="iterative")
    q = advanced.orientation
    np.testing.assert_allclose(q.T @ q, np.eye(3), atol=1e-12)
    assert np.linalg.det(q) == pytest.approx(1.0)


def test_projections_agree_on_near_rotations() -> None:
    rng = np.random.default_rng(7)
    for _ in range(1000):
        m = _random_rotation(rng) + 1e-3 * rng.normal(size=(3, 3))
        np.testing.assert_allclose(project_so3_svd(m), project_so3_iterative(m), atol=1e-12)


def test_projections_are_idempotent() -> None:
    rng = np.random.default_rng(11)
    for _ in range(100):
        m = _random_rotation(rng) + 1e-3 * rng.normal(size=(3, 3))
        svd = project_so3_svd(m)
        np.testing.assert_allclose(project_so3_svd(svd), svd, rtol=0.0, atol=1e-14)
        iterative = project_so3_iterative(m)
        np.testing.assert_array_equal(project_so3_iterative(iterative), iterative)


def test_iterative_projection_converges_quadratically() -> None:
    rng = np.random.default_rng(3)
    m = _random_rotation(rng) + 0.05 * rng.normal(size=(3, 3))
    residuals: list = []
    project_so3_iterative(m, eps=1e-14, residuals=residuals)
    decreasing = [r for r in residuals if r > 1e-12]
    assert len(decreasing) >= 3
    for previous, current in zip(decreasing, decreasing[1:]):
        assert current <= 3.0 * previous**2


def test_iterative_projection_fails_without_iterations() -> None:
    with pytest.raises(KinematicsException) as ex:
        project_so3_iterative(2.0 * np.eye(3), max_iter=0)
    assert "did not converge" in ex.value.message


def test_svd_projection_rejects_reflection() -> None:
    with pytest.raises(KinematicsException):
        project_so3_svd(np.diag([1.0, 1.0, -1.0]))


def test_rotation_2d() -> None:
    np.testing.assert_allclose(rotation_2d(np.pi / 2) @ [1.0, 0.0], [0.0, 1.0], atol=1e-15)
