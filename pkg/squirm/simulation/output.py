"""CSV tables, VTK snapshots and restart checkpoints"""
from typing import List, NamedTuple, Sequence
import logging
import os

import meshio
import numpy as np
from numpy.typing import ArrayLike, NDArray

from squirm.exceptions import SimulationException
from squirm.fem.spaces import DIM
from squirm.geometry.mesh import make_mesh
from squirm.kinematics import body_state
from squirm.simulation.scaling import Scales
from squirm.simulation.state import SimulationState, TimeSeries

CSV_FORMAT = "%.17g"
TIME_SERIES_FILE = "time_series.csv"


class Table(NamedTuple):
    columns: List[str]
    rows: NDArray[np.float64]


def make_table(columns: Sequence[str], rows: ArrayLike) -> Table:
    return Table(list(columns), np.asarray(rows, dtype=float).reshape(-1, len(columns)))


def write_table(path: str, table: Table) -> None:
    """CSV with a header line and 17 significant digits"""
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        np.savetxt(path, table.rows, delimiter=",", header=",".join(table.columns), comments="", fmt=CSV_FORMAT)
    except OSError as ex:
        raise SimulationException(f"Cannot write {path}", ex) from ex
    logging.info("Wrote %d rows to %s", table.rows.shape[0], path)


def write_time_series(path: str, series: TimeSeries) -> None:
    write_table(path, Table(series.columns, series.as_array()))


def write_snapshot(path: str, state: SimulationState, scales: Scales) -> None:
    """Legacy ASCII VTK unstructured grid with vertex velocity (padded to 3D) and pressure"""
    mesh = state.mesh
    points = np.zeros((mesh.n_nodes, 3))
    points[:, :DIM] = mesh.nodes * scales.length
    velocity = np.zeros((mesh.n_nodes, 3))
    velocity[:, :DIM] = state.U.reshape(-1, DIM)[: mesh.n_nodes] * scales.velocity
    grid = meshio.Mesh(
        points,
        [("triangle", mesh.triangles)],
        point_data={"velocity": velocity, "pressure": state.P * scales.stress},
    )
    try:
        meshio.write(path, grid, file_format="vtk", binary=False)
    except (OSError, ValueError) as ex:
        raise SimulationException(f"Cannot write snapshot {path}", ex) from ex
    logging.debug("Wrote snapshot %s", path)


def snapshot_path(directory: str, step: int) -> str:
    return os.path.join(directory, f"snapshot_{step:06d}.vtk")


def checkpoint_path(directory: str, step: int) -> str:
    return os.path.join(directory, f"checkpoint_{step:06d}.npz")


def save_checkpoint(path: str, state: SimulationState) -> None:
    """Store a planar or axisymmetric state, in scaled units"""
    mesh = state.mesh
    try:
        np.savez(
            path,
            t=state.t,
            step=state.step,
            nodes=mesh.nodes,
            triangles=mesh.triangles,
            boundary_edges=mesh.boundary_edges,
            edge_tags=mesh.edge_tags,
            mesh_velocity=mesh.mesh_velocity,
            x_c=np.array([body.x_c for body in state.bodies]),
            orientation=np.array([float(body.orientation) for body in state.bodies]),
            s=np.array(state.s_prev),
            s_prev2=np.array(state.s_prev2),
            U=state.U,
            P=state.P,
            diagnostics=np.array([state.power, state.dissipation, state.min_quality, float(state.remeshed)]),
        )
    except OSError as ex:
        raise SimulationException(f"Cannot write checkpoint {path}", ex) from ex
    logging.info("Checkpoint at step %d written to %s", state.step, path)


def load_checkpoint(path: str) -> SimulationState:
    """Restore a state written by save_checkpoint.

    Raises:
        SimulationException: unreadable or incomplete checkpoint.
    """
    try:
        with np.load(path) as data:
            mesh = make_mesh(
                data["nodes"], data["triangles"], data["boundary_edges"], data["edge_tags"], data["mesh_velocity"]
            )
            bodies = [
                body_state(x_c, theta, s[:DIM], s[DIM])
                for x_c, theta, s in zip(data["x_c"], data["orientation"], data["s"])
            ]
            power, phi, min_quality, remeshed = (float(v) for v in data["diagnostics"])
            return SimulationState(
                t=float(data["t"]),
                step=int(data["step"]),
                mesh=mesh,
                bodies=bodies,
                s_prev2=[row.copy() for row in data["s_prev2"]],
                U=data["U"].copy(),
                P=data["P"].copy(),
                power=power,
                dissipation=phi,
                min_quality=min_quality,
                remeshed=bool(remeshed),
            )
    except (OSError, KeyError, ValueError) as ex:
        raise SimulationException(f"Cannot read checkpoint {path}", ex) from ex
