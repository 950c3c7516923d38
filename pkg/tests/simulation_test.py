"""
Tests for scaling, the time series, outputs, the time-marching driver and the command line
"""

import os
import tempfile
from typing import Any, Dict, List

import meshio
import mock
import numpy as np
import pytest

from squirm.config_builder import SimulationConfig, SimulationConfigBuilder
from squirm.exceptions import SimulationConfigException, SimulationException
from squirm.geometry.mesh import WALL_TAG, Mesh, make_mesh
from squirm.kinematics import body_state
from squirm.main import run_cli
from squirm.simulation.output import (
    TIME_SERIES_FILE,
    checkpoint_path,
    load_checkpoint,
    make_table,
    save_checkpoint,
    write_snapshot,
    write_table,
)
from squirm.simulation.pipeline import build_problem, check_force_free, run, solve_steady
from squirm.simulation.scaling import Scales, characteristic_velocity, nondimensional_config, reference_scales
from squirm.simulation.state import SimulationState, TimeSeries, time_series_columns
from squirm.simulation.studies import converge, period_average, sweep_cd, sweep_re, swim_speed

# pylint: disable=missing-function-docstring

UNIT = Scales(1.0, 1.0, 1.0, False)


def _square() -> Mesh:
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    edges = np.array([[0, 1], [1, 2], [2, 3], [3, 0]])
    return make_mesh(nodes, np.array([[0, 1, 2], [0, 2, 3]]), edges, np.full(4, WALL_TAG))


def _state(t: float, step: int = 0, velocity=(0.0, 0.0, 0.0), theta: float = 0.0, power: float = 0.0):  # type: ignore
    body = body_state([1.0, 2.0], theta, velocity[:2], velocity[2])
    return SimulationState(
        t=t,
        step=step,
        mesh=_square(),
        bodies=[body],
        s_prev2=[np.zeros(3)],
        U=np.arange(8, dtype=float),
        P=np.array([0.0, 1.0, 2.0, 3.0]),
        power=power,
        dissipation=2.0 * power,
        min_quality=0.5,
        remeshed=False,
    )


def _planar_config(program: str, params: Dict[str, Any], directory: str, t_end: float = 0.2) -> SimulationConfig:
    data: Dict[str, Any] = {
        "mode": "planar",
        "element": "P1P1_GLS",
        "fluid": {"mu": 1.0},
        "time": {"t_end": t_end, "dt": 0.1},
        "domain": {"h_near": 0.3, "h_far": 1.5, "extent": [-5.0, 5.0, -5.0, 5.0]},
        "bodies": [{"tag": 1, "shape": {"kind": "circle", "radius": 1.0}, "program": program, "params": params}],
        "output": {"directory": directory, "every": 1, "checkpoint_every": 0},
    }
    builder = SimulationConfigBuilder()
    builder.config.update(
        {k: v for k, v in data.items() if k != "time"},
        t_end=data["time"]["t_end"],
        dt=data["time"]["dt"],
    )
    return builder.get_config()


def test_scales() -> None:
    scales = Scales(2.0, 4.0, 0.5, False)
    assert scales.time == 0.5
    assert scales.stress == 1.0
    assert scales.power == 8.0
    assert Scales(2.0, 4.0, 0.5, True).power == 16.0
    assert scales.reynolds(3.0) == pytest.approx(48.0)


def test_opalina_scaling() -> None:
    config = SimulationConfigBuilder().from_preset("opalina").get_config()
    scales = reference_scales(config)
    assert scales.length == 110.0
    assert scales.velocity == pytest.approx(10.0 * np.pi * 6.48)
    scaled = nondimensional_config(config, scales)
    params = scaled.bodies[0].params
    assert params["K"] == pytest.approx(6.48 / 110.0)
    assert params["k"] * params["K"] == pytest.approx(2.0 * np.pi / 50.0 * 6.48)
    assert params["omega"] * params["K"] == pytest.approx(1.0)
    assert params["origin"] == pytest.approx([-1.0, 0.0])
    assert scaled.fluid.mu == 1.0 and scaled.fluid.rho == 0.0
    assert scaled.n_steps == config.n_steps
    assert scaled.domain.extent == pytest.approx([-10.0, 10.0, -10.0, 10.0])
    assert scaled.bodies[0].shape.a == 1.0
    # the physical configuration is left untouched
    assert config.bodies[0].params["K"] == 6.48


def test_characteristic_velocity() -> None:
    config = SimulationConfigBuilder().from_preset("sphere_verification").get_config()
    body = config.bodies[0]
    assert characteristic_velocity(body) == 1.0
    assert characteristic_velocity(body.copy(update={"params": {"B1": 0.0, "B2": -3.0}})) == 3.0
    assert characteristic_velocity(body.copy(update={"program": "passive", "params": {}})) == 1.0


def test_time_series_columns() -> None:
    columns = time_series_columns(2)
    assert len(columns) == 1 + 2 * 6 + 4
    assert columns[:4] == ["t", "x_1", "y_1", "theta_1"]
    assert columns[-1] == "remeshed"


def test_time_series_records_physical_units() -> None:
    series = TimeSeries(1, Scales(2.0, 4.0, 1.0, False))
    series.record(_state(0.5, velocity=(1.0, 0.0, 3.0), power=1.0))
    row = series.as_array()[0]
    assert row[0] == 0.25
    np.testing.assert_allclose(row[1:7], [2.0, 4.0, 0.0, 4.0, 0.0, 6.0])
    assert series.column("power")[0] == 16.0
    with pytest.raises(SimulationException):
        series.record(_state(0.5))
    with pytest.raises(SimulationException):
        series.column("speed")


def test_period_average_follows_orientation() -> None:
    series = TimeSeries(1, UNIT)
    for t in np.linspace(0.0, 2.0, 201):
        vy = 2.0 + np.cos(2.0 * np.pi * t)
        series.record(_state(t, velocity=(7.0, vy, 0.0), theta=np.pi / 2, power=t))
    average = period_average(series, 1.0)
    assert average.speed == pytest.approx(2.0, rel=1e-9)
    assert average.power == pytest.approx(1.5, rel=1e-12)
    assert average.dissipation == pytest.approx(3.0, rel=1e-12)
    with pytest.raises(SimulationException):
        period_average(series, 5.0)


def test_write_table() -> None:
    with tempfile.TemporaryDirectory() as directory:
        path = os.path.join(directory, "nested", "table.csv")
        write_table(path, make_table(["a", "b"], [[1.0, 1.0 / 3.0], [2.0, np.nan]]))
        with open(path, "r", encoding="utf-8") as table_file:
            assert table_file.readline().strip() == "a,b"
        values = np.loadtxt(path, delimiter=",", skiprows=1)
    assert values[0, 1] == 1.0 / 3.0
    assert np.isnan(values[1, 1])


def test_write_snapshot_scales_fields() -> None:
    with tempfile.TemporaryDirectory() as directory:
        path = os.path.join(directory, "snapshot.vtk")
        write_snapshot(path, _state(0.0), Scales(2.0, 3.0, 1.0, False))
        grid = meshio.read(path)
    np.testing.assert_allclose(grid.points[:, :2], 2.0 * _square().nodes)
    np.testing.assert_allclose(grid.point_data["pressure"].ravel(), 1.5 * np.arange(4.0))
    np.testing.assert_allclose(grid.point_data["velocity"][:, :2], 3.0 * np.arange(8.0).reshape(4, 2))


def test_checkpoint_restores_state() -> None:
    state = _state(0.3, step=3, velocity=(0.1, -0.2, 0.5), theta=0.25, power=0.7)
    with tempfile.TemporaryDirectory() as directory:
        path = checkpoint_path(directory, 3)
        save_checkpoint(path, state)
        restored = load_checkpoint(path)
        with pytest.raises(SimulationException):
            load_checkpoint(os.path.join(directory, "missing.npz"))
    assert restored.t == 0.3 and restored.step == 3
    np.testing.assert_array_equal(restored.mesh.nodes, state.mesh.nodes)
    np.testing.assert_array_equal(restored.bodies[0].velocity_array(), state.bodies[0].velocity_array())
    assert restored.bodies[0].orientation == 0.25
    np.testing.assert_array_equal(restored.U, state.U)
    assert restored.power == 0.7 and not restored.remeshed


def test_run_marches_and_writes_outputs() -> None:
    with tempfile.TemporaryDirectory() as directory:
        config = _planar_config("passive", {}, directory, t_end=0.4)
        config = config._replace(output=config.output.copy(update={"every": 0, "checkpoint_every": 2}))
        steps: List[float] = []

        def fake_step(_: Any, state: SimulationState) -> SimulationState:
            steps.append(state.t)
            return state._replace(t=state.t + config.dt, step=state.step + 1)

        with mock.patch("squirm.simulation.pipeline.build_mesh", return_value=_square()) as build, mock.patch(
            "squirm.simulation.pipeline.bootstrap", return_value=_state(0.0)
        ) as bootstrap, mock.patch("squirm.simulation.pipeline.step", side_effect=fake_step):
            result = run(config)
            assert build.call_count == 1
            assert bootstrap.call_count == 1
        assert len(steps) == 4
        assert len(result.series) == 5
        assert result.state.step == 4
        assert os.path.isfile(os.path.join(directory, TIME_SERIES_FILE))
        assert sorted(name for name in os.listdir(directory) if name.startswith("checkpoint")) == [
            "checkpoint_000002.npz",
            "checkpoint_000004.npz",
        ]


def test_run_resumes_from_checkpoint() -> None:
    with tempfile.TemporaryDirectory() as directory:
        config = _planar_config("passive", {}, directory, t_end=0.4)
        config = config._replace(output=config.output.copy(update={"every": 0}))
        with mock.patch("squirm.simulation.pipeline.bootstrap") as bootstrap, mock.patch(
            "squirm.simulation.pipeline.step", side_effect=lambda _, s: s._replace(t=s.t + 0.1, step=s.step + 1)
        ) as step:
            result = run(config, resume_from=_state(0.2, step=2))
        bootstrap.assert_not_called()
        assert step.call_count == 2
        assert result.state.step == 4


def test_passive_body_stays_at_rest() -> None:
    with tempfile.TemporaryDirectory() as directory:
        config = _planar_config("passive", {}, directory)
        result = run(config)
        assert os.path.isfile(os.path.join(directory, "snapshot_000002.vtk"))
    assert result.state.step == 2
    np.testing.assert_allclose(result.series.column("x_1"), 0.0, atol=1e-12)
    np.testing.assert_allclose(result.series.column("vx_1"), 0.0, atol=1e-12)
    np.testing.assert_allclose(result.state.U, 0.0, atol=1e-12)


def test_rerun_writes_identical_time_series() -> None:
    params = {"B1": 1.0, "B2": 0.5, "R": 1.0, "axis": [1.0, 0.0]}
    contents = []
    with tempfile.TemporaryDirectory() as directory:
        for name in ("first", "second"):
            config = _planar_config("blake_slip", params, os.path.join(directory, name))
            run(config._replace(output=config.output.copy(update={"every": 0})))
            with open(os.path.join(directory, name, TIME_SERIES_FILE), "rb") as stream:
                contents.append(stream.read())
    assert contents[0] == contents[1]
    assert len(contents[0].splitlines()) == 4


def test_blake_circle_swims_along_its_axis() -> None:
    config = _planar_config("blake_slip", {"B1": 1.0, "B2": 0.0, "R": 1.0, "axis": [1.0, 0.0]}, "unused")
    problem, flow = solve_steady(config)
    speed = swim_speed(problem, flow)
    # confinement slows the circle below the unbounded B1 / 2
    assert 0.0 < speed < 0.5
    assert abs(flow.bodies[0].v_c[1]) < 1e-2 * speed
    assert flow.power == pytest.approx(flow.dissipation, rel=5e-2)


def test_force_balance_is_relative_to_the_load() -> None:
    load = np.full((50, 2), 1e4)
    check_force_free(1, np.array([1e-5, -1e-5, 0.0]), load)
    with pytest.raises(SimulationException) as ex:
        check_force_free(1, np.array([1e-5, 0.0, 0.0]), np.zeros((50, 2)))
    assert "Body 1 is not force free" in ex.value.message


def test_unbalanced_body_stops_the_solve() -> None:
    config = _planar_config("blake_slip", {"B1": 1.0, "B2": 0.0, "R": 1.0, "axis": [1.0, 0.0]}, "unused")
    with mock.patch(
        "squirm.simulation.pipeline.reaction_forces", return_value=[np.array([1e3, 0.0, 0.0])]
    ), pytest.raises(SimulationException):
        solve_steady(config)


def test_build_problem_programs() -> None:
    config = SimulationConfigBuilder().from_preset("opalina_pair").get_config()
    problem = build_problem(config)
    assert [spec.tag for spec in problem.specs] == [1, 2]
    assert problem.config.fluid.mu == 1.0


def test_studies_check_programs() -> None:
    passive = _planar_config("passive", {}, "unused")
    with pytest.raises(SimulationConfigException):
        converge(passive, 2)
    with pytest.raises(SimulationConfigException):
        sweep_cd(passive, [1.0])
    with pytest.raises(SimulationConfigException):
        sweep_re(passive, [1.0], [1.0])


def test_cli_verify() -> None:
    assert run_cli(["verify"]) == 0


def test_cli_reports_invalid_config() -> None:
    assert run_cli(["run", "does_not_exist.yaml"]) == 1
    with pytest.raises(ValueError):
        run_cli(["--log-verbosity", "chatty", "verify"])


def test_cli_writes_study_table() -> None:
    with tempfile.TemporaryDirectory() as directory:
        table = make_table(["level", "h"], [[0.0, 0.5], [1.0, 0.25]])
        with mock.patch("squirm.main.converge", return_value=table) as study:
            code = run_cli(["converge", "sphere_verification", "--levels", "2", "--output-dir", directory])
        assert code == 0
        assert study.call_args[0][1] == 2
        values = np.loadtxt(os.path.join(directory, "convergence.csv"), delimiter=",", skiprows=1)
    np.testing.assert_array_equal(values, [[0.0, 0.5], [1.0, 0.25]])


def test_cli_overrides_refinement_level() -> None:
    with tempfile.TemporaryDirectory() as directory:
        with mock.patch("squirm.main.run") as simulate:
            simulate.return_value.series.rows = [[1.0]]
            simulate.return_value.state.step = 1
            code = run_cli(["run", "sphere_verification", "--level", "2", "--output-dir", directory])
    assert code == 0
    config = simulate.call_args[0][0]
    assert config.domain.level == 2
