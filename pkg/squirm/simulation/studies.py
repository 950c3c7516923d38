"""Refinement, drag-coefficient and Reynolds-number studies"""
from typing import List, NamedTuple, Sequence, Tuple
import logging
import os

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import trapezoid

from squirm.config_builder import SimulationConfig
from squirm.coupling.conditions import TYPE_I, TYPE_II
from squirm.coupling.programs import BLAKE_FORCE, BLAKE_SLIP, METACHRONAL, swimming_axis
from squirm.exceptions import SimulationConfigException, SimulationException, VerificationException
from squirm.kinematics import rotation_2d
from squirm.simulation.output import Table, make_table
from squirm.simulation.pipeline import FlowSolution, Problem, run, solve_steady
from squirm.simulation.state import TimeSeries
from squirm.verification.exact import (
    circle_swim_speed,
    exact_cartesian,
    exact_circle_field,
    exact_sphere_field,
    exact_swim_speed,
)
from squirm.verification.norms import convergence_order, error_norms

DEFAULT_LEVELS = 4
DEFAULT_DRAG_COEFFICIENTS = (0.1, 1.0, 10.0, 50.0, 100.0, 1000.0)
DEFAULT_REYNOLDS = (0.01, 0.1, 1.0, 5.0)
DEFAULT_BETAS = (-1.0, 1.0)
NORM_NAMES = ("L2_u", "L2_p", "Linf_u", "Linf_p")
CONVERGENCE_COLUMNS = [
    "level",
    "h",
    "n_elements",
    "v_c",
    "v_c_error",
    "v_c_order",
    "L2_u",
    "L2_u_order",
    "L2_p",
    "L2_p_order",
    "Linf_u",
    "Linf_u_order",
    "Linf_p",
    "Linf_p_order",
    "power",
    "dissipation",
]
DRAG_COLUMNS = ["C_D", "v_bar", "v_ratio", "P_ratio", "Phi_ratio"]
REYNOLDS_COLUMNS = ["beta", "Re", "v_c", "v_ratio"]


class PeriodAverage(NamedTuple):
    speed: float  # mean velocity along the body axis
    power: float
    dissipation: float


def swim_speed(problem: Problem, flow: FlowSolution, index: int = 0) -> float:
    """Translational velocity of a body along its swimming axis, in scaled units"""
    state = flow.bodies[index]
    program = problem.specs[index].program
    axis = getattr(program, "axis", np.array([1.0, 0.0]))
    return float(state.v_c @ swimming_axis(state, axis, problem.config.axisymmetric))


def _pairwise(values: Sequence[float], h: Sequence[float]) -> NDArray[np.float64]:
    """Orders between consecutive levels, NaN on the first level or where undefined"""
    orders = np.full(len(values), np.nan)
    if len(values) < 2:
        return orders
    try:
        orders[1:] = convergence_order(values, h).pairwise
    except VerificationException as ex:
        logging.warning("Convergence order undefined: %s", ex.message)
    return orders


def _outside(points: NDArray[np.float64], center: NDArray[np.float64], radius: float) -> NDArray[np.float64]:
    """Points pushed radially onto the exact body where the polygonal boundary cuts inside it"""
    rel = np.asarray(points, dtype=float).reshape(-1, 2) - center
    r = np.linalg.norm(rel, axis=1)
    return center + rel * (np.maximum(r, radius) / np.maximum(r, 1e-300))[:, None]


def converge(config: SimulationConfig, levels: int = DEFAULT_LEVELS) -> Table:
    """Steady refinement sweep of a Blake squirmer against the exact solution.

    Level k divides h_near by 2^k. v_c is in physical units, v_c_error is relative and the field
    errors are in scaled units.

    Raises:
        SimulationConfigException: no domain or the first body is not a Blake squirmer.
    """
    if config.domain is None:
        raise SimulationConfigException("A refinement study needs a generated domain")
    if config.bodies[0].program not in (BLAKE_SLIP, BLAKE_FORCE):
        raise SimulationConfigException("A refinement study needs a Blake squirmer as first body")
    rows: List[List[float]] = []
    for level in range(levels):
        leveled = config._replace(domain=config.domain.copy(update={"level": level}))
        problem, flow = solve_steady(leveled)
        program = problem.specs[0].program
        coefficients = program.coefficients  # type: ignore[attr-defined]
        body = flow.bodies[0]
        if problem.config.axisymmetric:
            field, exact_speed, axis = exact_sphere_field, exact_swim_speed(coefficients), np.array([0.0, 1.0])
        else:
            field, exact_speed = exact_circle_field, circle_swim_speed(coefficients)
            axis = rotation_2d(float(body.orientation)) @ program.axis  # type: ignore[attr-defined]

        def exact(points: NDArray[np.float64]) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
            return exact_cartesian(
                _outside(points, body.x_c, coefficients.R), body.x_c, axis, coefficients, problem.config.fluid.mu, field
            )

        norms = error_norms(flow.space, flow.solution.U, flow.solution.P, exact)
        speed = swim_speed(problem, flow)
        scales = problem.scales
        rows.append(
            [
                level,
                config.domain.h_near / 2**level,
                flow.space.mesh.n_triangles,
                speed * scales.velocity,
                abs(speed - exact_speed) / abs(exact_speed),
                *norms,
                flow.power * scales.power,
                flow.dissipation * scales.power,
            ]
        )
        logging.info("Level %d: v_c = %s, errors %s", level, speed * scales.velocity, norms)

    table = np.array(rows, dtype=float)
    h = table[:, 1]
    columns = {"v_c_error": table[:, 4]}
    columns.update({name: table[:, 5 + i] for i, name in enumerate(NORM_NAMES)})
    orders = {name: _pairwise(values, h) for name, values in columns.items()}
    out = np.column_stack(
        [
            table[:, :5],
            orders["v_c_error"],
            *[np.column_stack([columns[name], orders[name]]) for name in NORM_NAMES],
            table[:, 9:],
        ]
    )
    return make_table(CONVERGENCE_COLUMNS, out)


def period_average(
    series: TimeSeries, period: float, axis: Sequence[float] = (1.0, 0.0), body: int = 1
) -> PeriodAverage:
    """Means over the last period of the run; the axis is carried with the body orientation.

    Raises:
        SimulationException: the series covers less than one period.
    """
    t = series.column("t")
    start = t[-1] - period
    if t[0] > start + 1e-9 * period:
        raise SimulationException(f"Time series spans {t[-1] - t[0]}, shorter than the period {period}")
    window = t >= start - 1e-9 * period
    if np.count_nonzero(window) < 2:
        raise SimulationException("Fewer than two samples in the averaging window")
    theta = series.column(f"theta_{body}")[window]
    velocity = np.stack([series.column(f"vx_{body}")[window], series.column(f"vy_{body}")[window]], axis=1)
    direction = np.einsum("nij,j->ni", np.array([rotation_2d(angle) for angle in theta]), np.asarray(axis, dtype=float))
    along = np.einsum("nd,nd->n", velocity, direction)
    times = t[window]
    duration = times[-1] - times[0]
    return PeriodAverage(
        float(trapezoid(along, times) / duration),
        float(trapezoid(series.column("power")[window], times) / duration),
        float(trapezoid(series.column("dissipation")[window], times) / duration),
    )


def _wave_run(config: SimulationConfig, update: dict, label: str) -> PeriodAverage:
    body = config.bodies[0]
    params = dict(body.params, **update)
    directory = os.path.join(config.output.directory, label)
    variant = config._replace(
        bodies=[body.copy(update={"params": params})] + list(config.bodies[1:]),
        output=config.output.copy(update={"directory": directory, "every": 0, "checkpoint_every": 0}),
    )
    result = run(variant)
    period = 2.0 * np.pi / float(params["omega"])
    return period_average(result.series, period)


def sweep_cd(config: SimulationConfig, drag_coefficients: Sequence[float] = DEFAULT_DRAG_COEFFICIENTS) -> Table:
    """Period-averaged speed, power and dissipation of the type-II wave against the type-I reference.

    Raises:
        SimulationConfigException: the first body has no metachronal program.
    """
    if config.bodies[0].program != METACHRONAL:
        raise SimulationConfigException("A drag-coefficient sweep needs a metachronal first body")
    reference = _wave_run(config, {"mode": TYPE_I, "C_D": float("inf")}, "type1")
    logging.info("Type-I reference: v_bar = %s", reference.speed)
    rows = []
    for drag in drag_coefficients:
        average = _wave_run(config, {"mode": TYPE_II, "C_D": float(drag)}, f"cd_{drag:g}")
        logging.info("C_D = %s: v_bar = %s", drag, average.speed)
        rows.append(
            [
                drag,
                average.speed,
                average.speed / reference.speed,
                average.power / reference.power,
                average.dissipation / reference.dissipation,
            ]
        )
    return make_table(DRAG_COLUMNS, rows)


def sweep_re(
    config: SimulationConfig,
    reynolds: Sequence[float] = DEFAULT_REYNOLDS,
    betas: Sequence[float] = DEFAULT_BETAS,
) -> Table:
    """Steady speed at finite Reynolds number relative to the Stokes speed, for each beta.

    Re = rho B1 R / mu with the scales of the configuration.

    Raises:
        SimulationConfigException: the first body is not a Blake squirmer.
    """
    body = config.bodies[0]
    if body.program not in (BLAKE_SLIP, BLAKE_FORCE):
        raise SimulationConfigException("A Reynolds sweep needs a Blake squirmer as first body")
    rows = []
    for beta in betas:
        params = dict(body.params, B2=beta * float(body.params["B1"]))
        variant = config._replace(bodies=[body.copy(update={"params": params})] + list(config.bodies[1:]))
        stokes_problem, stokes = solve_steady(variant._replace(fluid=variant.fluid.copy(update={"rho": 0.0})))
        v_stokes = swim_speed(stokes_problem, stokes) * stokes_problem.scales.velocity
        for number in reynolds:
            scales = stokes_problem.scales
            rho = number * scales.viscosity / (scales.velocity * scales.length)
            problem, flow = solve_steady(variant._replace(fluid=variant.fluid.copy(update={"rho": rho})))
            speed = swim_speed(problem, flow) * problem.scales.velocity
            logging.info("beta = %s, Re = %s: v_c = %s (Stokes %s)", beta, number, speed, v_stokes)
            rows.append([beta, number, speed, speed / v_stokes])
    return make_table(REYNOLDS_COLUMNS, rows)
