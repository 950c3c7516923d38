"""
Acceptance-scale studies, run with --run-slow
"""

from typing import Any, Dict
import os

import numpy as np
import pytest

from squirm.config_builder import Overrides, SimulationConfig, SimulationConfigBuilder
from squirm.coupling.programs import BLAKE_FORCE
from squirm.metachronal import FIRST_ORDER
from squirm.simulation.output import Table, checkpoint_path, load_checkpoint
from squirm.simulation.pipeline import run, solve_steady
from squirm.simulation.studies import converge, period_average, swim_speed, sweep_cd, sweep_re
from squirm.verification.exact import BlakeCoefficients, exact_swim_speed
from squirm.verification.norms import convergence_order

# pylint: disable=missing-function-docstring

pytestmark = pytest.mark.slow


def _preset(name: str, directory: str, **overrides: Any) -> SimulationConfig:
    return (
        SimulationConfigBuilder()
        .from_preset(name)
        .from_overrides(Overrides(output_directory=directory, **overrides))
        .get_config()
    )


def _with_params(config: SimulationConfig, **params: Any) -> SimulationConfig:
    body = config.bodies[0]
    return config._replace(bodies=[body.copy(update={"params": dict(body.params, **params)})] + config.bodies[1:])


def _column(table: Table, name: str) -> np.ndarray:
    return table.rows[:, table.columns.index(name)]


@pytest.mark.parametrize("element, low, high", [("P1P1_GLS", 1.6, 2.4), ("P2P1", 3.2, 4.8)])
def test_sphere_speed_converges(tmp_path: Any, element: str, low: float, high: float) -> None:
    table = converge(_preset("sphere_verification", str(tmp_path), element=element), 4)
    errors = _column(table, "v_c_error")
    assert errors[-1] < 1e-2
    np.testing.assert_allclose(_column(table, "v_c")[-1], 2.0 / 3.0, rtol=1e-2)
    slope = convergence_order(errors, _column(table, "h")).slope
    assert low <= slope <= high


def test_field_orders_and_energy_identity(tmp_path: Any) -> None:
    table = converge(_preset("sphere_verification", str(tmp_path), element="P1P1_GLS"), 4)
    h = _column(table, "h")
    assert 1.5 <= convergence_order(_column(table, "L2_u"), h).slope <= 2.5
    assert 0.8 <= convergence_order(_column(table, "L2_p"), h).slope <= 1.8
    power, dissipation = _column(table, "power"), _column(table, "dissipation")
    mismatch = np.abs(power - dissipation) / np.abs(power)
    assert mismatch[-1] < 1e-2
    assert mismatch[-1] < mismatch[0]


@pytest.mark.parametrize("beta", [0.0, 0.5, -0.5, 5.0, -5.0])
def test_force_program_matches_slip_program(tmp_path: Any, beta: float) -> None:
    slip_config = _with_params(_preset("sphere_verification", str(tmp_path), level=1), B2=beta)
    problem, flow = solve_steady(slip_config)
    slip_speed = swim_speed(problem, flow)
    exact = exact_swim_speed(BlakeCoefficients(B1=1.0, B2=beta, R=1.0))
    force_config = slip_config._replace(bodies=[slip_config.bodies[0].copy(update={"program": BLAKE_FORCE})])
    force_problem, force_flow = solve_steady(force_config)
    force_speed = swim_speed(force_problem, force_flow)
    assert abs(force_speed - slip_speed) <= 2.0 * abs(slip_speed - exact) + 1e-12


def test_steady_sphere_keeps_its_velocity(tmp_path: Any) -> None:
    config = _preset("sphere_verification", str(tmp_path), t_end=0.3, dt=0.1)
    series = run(config).series
    speed = series.column("vy_1")
    assert len(speed) == 4
    np.testing.assert_allclose(speed, speed[0], rtol=1e-2)


def _wave_average(config: SimulationConfig, directory: str, **params: Any) -> float:
    variant = _with_params(config, **params)
    variant = variant._replace(output=variant.output.copy(update={"directory": directory, "every": 0}))
    period = 2.0 * np.pi / float(variant.bodies[0].params["omega"])
    return period_average(run(variant).series, period).speed


def test_first_order_wave_barely_propels(tmp_path: Any) -> None:
    config = _preset("opalina", str(tmp_path))
    second = _wave_average(config, os.path.join(tmp_path, "second"))
    first = _wave_average(config, os.path.join(tmp_path, "first"), order=FIRST_ORDER)
    assert abs(first) < 1e-2 * abs(second)


def test_drag_coefficient_sweep(tmp_path: Any) -> None:
    table = sweep_cd(_preset("opalina", str(tmp_path)))
    drag, ratio = _column(table, "C_D"), _column(table, "v_ratio")
    order = np.argsort(drag)
    assert np.all(np.diff(ratio[order]) > 0)
    assert ratio[drag == 1000.0][0] > 0.95
    assert ratio[drag == 0.1][0] < 0.05
    reference = _column(table, "v_bar") / ratio
    assert abs(reference[0]) == pytest.approx(48.8, rel=0.15)


def test_reynolds_trends(tmp_path: Any) -> None:
    table = sweep_re(_preset("sphere_verification", str(tmp_path), level=1))
    beta, reynolds, ratio = _column(table, "beta"), _column(table, "Re"), _column(table, "v_ratio")
    pusher = ratio[beta == -1.0][np.argsort(reynolds[beta == -1.0])]
    assert np.all(np.diff(pusher) > 0)
    puller: Dict[float, float] = dict(zip(reynolds[beta == 1.0], ratio[beta == 1.0]))
    assert puller[1.0] < puller[0.01]


def test_restart_reproduces_uninterrupted_run(tmp_path: Any) -> None:
    config = _preset("circle_planar", str(tmp_path))
    config = config._replace(output=config.output.copy(update={"every": 0, "checkpoint_every": 5}))
    full = run(config)
    halfway = load_checkpoint(checkpoint_path(str(tmp_path), 5))
    resumed = run(config, resume_from=halfway)
    assert resumed.state.step == full.state.step
    np.testing.assert_allclose(resumed.state.U, full.state.U, atol=1e-10)
    for before, after in zip(full.state.bodies, resumed.state.bodies):
        np.testing.assert_allclose(after.velocity_array(), before.velocity_array(), atol=1e-10)
        np.testing.assert_allclose(after.x_c, before.x_c, atol=1e-10)


def test_two_opalinas_interact(tmp_path: Any) -> None:
    series = run(_preset("opalina_pair", str(tmp_path))).series
    assert series.column("t")[-1] == pytest.approx(46.0)
    assert series.column("omega_1").min() < 0.0
    assert series.column("omega_2").max() > 0.0
