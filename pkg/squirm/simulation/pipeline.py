"""
Time marching of force- and torque-free squirmers.

Every step predicts the body configurations by Adams-Bashforth, moves the mesh with the bodies,
rebuilds and surgers the blocks and solves for (s, U, P). The mesh is regenerated when its quality
drops below the configured threshold, and the step is then solved on the new mesh.
"""
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple
import logging
import os

import numpy as np
from numpy.typing import NDArray

from squirm.config_builder import SimulationConfig
from squirm.coupling.conditions import Condition, ForceCondition
from squirm.coupling.diagnostics import boundary_load, extract_slip, reaction_forces
from squirm.coupling.programs import SquirmerSpec, create_program
from squirm.coupling.saddle import SaddleSolution, solve_coupled
from squirm.coupling.surgery import CoupledSystem, apply_surgery, build_h_blocks, fold_inertia
from squirm.exceptions import RemeshRequiredException, SimulationException
from squirm.fem.assembly import apply_essential, assemble_convection, assemble_stokes, essential_dofs
from squirm.fem.spaces import DIM, BodyBoundary, FeSpace, body_boundary, build_space
from squirm.geometry.chart import build_chart
from squirm.geometry.mesh import Mesh, quality
from squirm.geometry.motion import move_mesh
from squirm.geometry.remesh import remesh_and_interpolate
from squirm.kinematics import BodyState, ab2_advance
from squirm.simulation.domain import build_mesh, initial_bodies
from squirm.simulation.output import (
    TIME_SERIES_FILE,
    checkpoint_path,
    save_checkpoint,
    snapshot_path,
    write_snapshot,
    write_time_series,
)
from squirm.simulation.scaling import Scales, nondimensional_config, reference_scales, scale_mesh
from squirm.simulation.state import SimulationState, TimeSeries
from squirm.verification.norms import power_and_dissipation

FORCE_FREE_TOLERANCE = 1e-8


def check_force_free(tag: int, reaction: NDArray[np.float64], load: NDArray[np.float64]) -> None:
    """Raise unless the net force and torque of a body vanish relative to its surface load"""
    residual = float(np.abs(reaction).max(initial=0.0))
    scale = max(float(np.abs(load).sum()), 1.0)
    logging.debug("Body %d force balance residual %.3e, load scale %.3e", tag, residual, scale)
    if residual > FORCE_FREE_TOLERANCE * scale:
        raise SimulationException(
            f"Body {tag} is not force free, |H^T r| = {residual:.3e} against a load of {scale:.3e}"
        )


class Problem(NamedTuple):
    """Scaled configuration and boundary programs of a run"""

    config: SimulationConfig  # scaled units
    scales: Scales
    specs: List[SquirmerSpec]  # in the order of config.bodies


class FlowSolution(NamedTuple):
    space: FeSpace
    boundaries: List[BodyBoundary]
    conditions: Dict[int, Condition]
    coupled: CoupledSystem
    solution: SaddleSolution
    bodies: List[BodyState]  # configurations carrying the solved velocity arrays
    power: float
    dissipation: float


class RunResult(NamedTuple):
    series: TimeSeries
    state: SimulationState


def build_problem(config: SimulationConfig) -> Problem:
    """Scale the configuration and create the boundary program of every body"""
    scales = reference_scales(config)
    scaled = nondimensional_config(config, scales)
    specs = [
        SquirmerSpec(
            body.tag,
            create_program(body.program, body.params, scaled.axisymmetric, scaled.fluid.mu),
            body.alpha,
        )
        for body in scaled.bodies
    ]
    return Problem(scaled, scales, specs)


def full_velocity(space: FeSpace, state: BodyState, s: NDArray[np.float64]) -> BodyState:
    """State carrying the solved unknowns; axisymmetric bodies only translate along the axis"""
    if space.axisymmetric:
        return state.with_velocity([0.0, float(s[0]), 0.0])
    return state.with_velocity(s)


def interface_conditions(
    problem: Problem, space: FeSpace, bodies: Sequence[BodyState], t: float
) -> Tuple[List[BodyBoundary], Dict[int, Condition]]:
    """Boundaries and slip or force data of every body at time t"""
    solver = problem.config.solver
    boundaries = []
    conditions: Dict[int, Condition] = {}
    for spec, state in zip(problem.specs, bodies):
        chart = build_chart(space.mesh, spec.tag, solver.normal_rule, space.axisymmetric)
        boundary = body_boundary(space, chart)
        condition = spec.program.condition(boundary, state, t)
        if isinstance(condition, ForceCondition) and spec.alpha is not None:
            condition = condition._replace(alpha=np.full(boundary.nodes.size, spec.alpha))
        boundaries.append(boundary)
        conditions[spec.tag] = condition
    return boundaries, conditions


def _translation(space: FeSpace, s: NDArray[np.float64]) -> NDArray[np.float64]:
    if space.axisymmetric:
        return np.array([0.0, float(s[0])])
    return np.asarray(s[:DIM], dtype=float)


def solve_flow(
    problem: Problem,
    space: FeSpace,
    bodies: Sequence[BodyState],
    t: float,
    U_prev: Optional[NDArray[np.float64]] = None,
    dt: Optional[float] = None,
    co_moving: bool = False,
) -> FlowSolution:
    """Coupled solve at fixed body configurations.

    With density > 0 the convection is Picard-iterated, starting from U_prev (or from the Stokes
    solution); dt adds the backward Euler time derivative about U_prev. With co_moving the mesh
    velocity follows the translation of the first body.

    Raises:
        SimulationException: the Picard iteration does not converge.
    """
    config = problem.config
    density = config.fluid.rho
    convective = density > 0 and (U_prev is not None or co_moving)
    transient = density > 0 and U_prev is not None and dt is not None
    boundaries, conditions = interface_conditions(problem, space, bodies, t)
    H, ranges = build_h_blocks(space, boundaries, bodies)
    base = assemble_stokes(space, config.fluid.mu, density if transient else 0.0)
    essential = essential_dofs(space)
    mesh_velocity = space.mesh.mesh_velocity
    advecting = U_prev

    for iteration in range(config.solver.picard_max_iter + 1):
        blocks = base
        if convective and advecting is not None:
            convection = assemble_convection(space, advecting, mesh_velocity, density)
            blocks = base._replace(A=(base.A + convection).tocsr())
        blocks = apply_essential(blocks, essential)
        coupled = apply_surgery(space, blocks, H, ranges, boundaries, conditions, with_inertia=transient)
        if transient:
            coupled = fold_inertia(coupled, dt, U_prev)  # type: ignore[arg-type]
        solution = solve_coupled(coupled, config.solver.tolerance)
        if not convective:
            break
        if co_moving:
            mesh_velocity = np.tile(_translation(space, solution.s[0]), (space.mesh.n_nodes, 1))
        previous, advecting = advecting, solution.U
        if previous is not None:
            change = np.linalg.norm(solution.U - previous) / max(float(np.linalg.norm(solution.U)), 1e-300)
            logging.debug("Picard iteration %d, relative change %.3e", iteration, change)
            if change <= config.solver.picard_tolerance:
                break
    else:
        raise SimulationException(
            f"Picard iteration did not converge in {config.solver.picard_max_iter} iterations at t = {t}"
        )

    solved = [full_velocity(space, state, s) for state, s in zip(bodies, solution.s)]
    slips = [extract_slip(space, solution.U, state, b) for state, b in zip(solved, boundaries)]
    loads = [
        boundary_load(space, coupled, solution, b, conditions[b.tag], slip) for b, slip in zip(boundaries, slips)
    ]
    power, phi = power_and_dissipation(space, solution.U, config.fluid.mu, loads, slips)
    for tag, reaction, load in zip(conditions, reaction_forces(coupled, solution), loads):
        check_force_free(tag, reaction, load)
    return FlowSolution(space, boundaries, conditions, coupled, solution, solved, power, phi)


def _state(
    flow: FlowSolution,
    t: float,
    step: int,
    s_prev2: List[NDArray[np.float64]],
    remeshed: bool,
) -> SimulationState:
    return SimulationState(
        t=t,
        step=step,
        mesh=flow.space.mesh,
        bodies=flow.bodies,
        s_prev2=s_prev2,
        U=flow.solution.U,
        P=flow.solution.P,
        power=flow.power,
        dissipation=flow.dissipation,
        min_quality=quality(flow.space.mesh),
        remeshed=remeshed,
    )


def bootstrap(problem: Problem, mesh: Mesh) -> SimulationState:
    """Stokes solve at t = 0 in the initial configuration; the first step is forward Euler"""
    config = problem.config
    space = build_space(mesh, config.element, config.mode)
    flow = solve_flow(problem, space, initial_bodies(config), 0.0)
    logging.info("Initial velocities: %s", [body.velocity_array() for body in flow.bodies])
    return _state(flow, 0.0, 0, [body.velocity_array() for body in flow.bodies], False)


def body_displacement(
    mesh: Mesh, specs: Sequence[SquirmerSpec], old: Sequence[BodyState], new: Sequence[BodyState]
) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Boundary vertices of all bodies and their rigid displacement from old to new"""
    nodes, displacement = [], []
    for spec, before, after in zip(specs, old, new):
        tag_nodes = mesh.tag_nodes(spec.tag)
        reference = (mesh.nodes[tag_nodes] - before.x_c) @ before.rotation()
        moved = after.x_c + reference @ after.rotation().T
        nodes.append(tag_nodes)
        displacement.append(moved - mesh.nodes[tag_nodes])
    return np.concatenate(nodes), np.concatenate(displacement)


def _remesh(mesh: Mesh, vertex_velocity: NDArray[np.float64]) -> Tuple[Mesh, NDArray[np.float64]]:
    """New mesh and the vertex velocities transferred to it"""
    new_mesh, fields = remesh_and_interpolate(mesh, {"U": vertex_velocity})
    return new_mesh, fields["U"]


def step(problem: Problem, state: SimulationState) -> SimulationState:
    """Advance state by one time step.

    Raises:
        SimulationException: the mesh tangles after a fallback remesh, or remeshing is disabled.
        LinearSolverException: the coupled solve fails.
    """
    config = problem.config
    dt = config.dt
    predicted = [
        ab2_advance(body, s, s2, dt, projection=config.solver.projection)
        for body, s, s2 in zip(state.bodies, state.s_prev, state.s_prev2)
    ]
    nodes, displacement = body_displacement(state.mesh, problem.specs, state.bodies, predicted)
    mesh = state.mesh
    vertex_velocity: Optional[NDArray[np.float64]] = None
    remeshed = False
    try:
        mesh = move_mesh(mesh, nodes, displacement, dt)
    except RemeshRequiredException as ex:
        if not config.remesh.enabled:
            raise SimulationException(f"Mesh tangled at step {state.step + 1} with remeshing disabled", ex) from ex
        logging.warning("Mesh motion inverted elements at step %d, remeshing first", state.step + 1)
        mesh, vertex_velocity = _remesh(state.mesh, state.U.reshape(-1, DIM)[: state.mesh.n_nodes])
        remeshed = True
        nodes, displacement = body_displacement(mesh, problem.specs, state.bodies, predicted)
        try:
            mesh = move_mesh(mesh, nodes, displacement, dt)
        except RemeshRequiredException as retry:
            raise SimulationException(f"Mesh tangled after fallback remesh at step {state.step + 1}", retry) from retry

    worst = quality(mesh)
    if config.remesh.enabled and worst < config.remesh.threshold:
        logging.warning(
            "Mesh quality %.3f below %.3f at step %d, remeshing", worst, config.remesh.threshold, state.step + 1
        )
        if vertex_velocity is None:
            vertex_velocity = state.U.reshape(-1, DIM)[: mesh.n_nodes]
        mesh, vertex_velocity = _remesh(mesh, vertex_velocity)
        remeshed = True

    space = build_space(mesh, config.element, config.mode)
    U_prev = state.U if vertex_velocity is None else space.from_vertices(vertex_velocity).ravel()
    t = state.t + dt
    flow = solve_flow(problem, space, predicted, t, U_prev=U_prev, dt=dt)
    logging.info(
        "Step %d t=%s: s = %s, P = %.6g, Phi = %.6g",
        state.step + 1,
        t,
        [np.round(body.velocity_array(), 10).tolist() for body in flow.bodies],
        flow.power,
        flow.dissipation,
    )
    return _state(flow, t, state.step + 1, state.s_prev, remeshed)


def run(
    config: SimulationConfig,
    mesh: Optional[Mesh] = None,
    resume_from: Optional[SimulationState] = None,
) -> RunResult:
    """Bootstrap (or resume) and march to t_end, writing outputs at the configured cadence.

    Args:
        config: configuration in physical units
        mesh: initial mesh in physical units, generated from config when None
        resume_from: checkpointed state to continue from
    """
    problem = build_problem(config)
    output = config.output
    if resume_from is not None:
        state = resume_from
        logging.info("Resuming at step %d", state.step)
    else:
        initial = build_mesh(problem.config, problem.scales) if mesh is None else scale_mesh(mesh, problem.scales)
        state = bootstrap(problem, initial)
    series = TimeSeries(len(problem.specs), problem.scales)
    series.record(state)
    if output.every:
        os.makedirs(output.directory, exist_ok=True)
        write_snapshot(snapshot_path(output.directory, state.step), state, problem.scales)

    while state.step < problem.config.n_steps:
        state = step(problem, state)
        series.record(state)
        if output.every and state.step % output.every == 0:
            write_snapshot(snapshot_path(output.directory, state.step), state, problem.scales)
        if output.checkpoint_every and state.step % output.checkpoint_every == 0:
            os.makedirs(output.directory, exist_ok=True)
            save_checkpoint(checkpoint_path(output.directory, state.step), state)
    write_time_series(os.path.join(output.directory, TIME_SERIES_FILE), series)
    return RunResult(series, state)


def solve_steady(config: SimulationConfig, mesh: Optional[Mesh] = None) -> Tuple[Problem, FlowSolution]:
    """One coupled solve in the initial configuration.

    With density > 0 the convection is Picard-iterated on the co-moving steady problem, whose mesh
    velocity is the translation of the first body.
    """
    problem = build_problem(config)
    initial = build_mesh(problem.config, problem.scales) if mesh is None else scale_mesh(mesh, problem.scales)
    space = build_space(initial, problem.config.element, problem.config.mode)
    co_moving = problem.config.fluid.rho > 0
    flow = solve_flow(problem, space, initial_bodies(problem.config), 0.0, co_moving=co_moving)
    return problem, flow
