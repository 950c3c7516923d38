"""Simulation state between time steps and the recorded time series"""
from typing import List, NamedTuple

import numpy as np
from numpy.typing import NDArray

from squirm.exceptions import SimulationException
from squirm.geometry.mesh import Mesh
from squirm.kinematics import BodyState
from squirm.simulation.scaling import Scales

BODY_COLUMNS = ("x", "y", "theta", "vx", "vy", "omega")
TRAILING_COLUMNS = ("power", "dissipation", "min_quality", "remeshed")


class SimulationState(NamedTuple):
    """Everything needed to continue a run, in scaled units"""

    t: float
    step: int
    mesh: Mesh
    bodies: List[BodyState]  # configuration at t carrying the velocity arrays s^n
    s_prev2: List[NDArray[np.float64]]  # velocity arrays s^{n-1}, equal to s^n at t = 0
    U: NDArray[np.float64]  # nodal velocities
    P: NDArray[np.float64]  # vertex pressures
    power: float
    dissipation: float
    min_quality: float
    remeshed: bool  # the mesh was regenerated during the last step

    @property
    def s_prev(self) -> List[NDArray[np.float64]]:
        return [body.velocity_array() for body in self.bodies]


def time_series_columns(n_bodies: int) -> List[str]:
    columns = ["t"]
    for index in range(1, n_bodies + 1):
        columns.extend(f"{name}_{index}" for name in BODY_COLUMNS)
    return columns + list(TRAILING_COLUMNS)


class TimeSeries:
    """Rows of t, per-body (x_c, theta, v_c, omega), P, Phi, min quality and remesh flag.

    Rows are stored in physical units.
    """

    def __init__(self, n_bodies: int, scales: Scales) -> None:
        self.columns = time_series_columns(n_bodies)
        self.scales = scales
        self.rows: List[List[float]] = []

    def record(self, state: SimulationState) -> None:
        """Append the row of state.

        Raises:
            SimulationException: t does not increase.
        """
        scales = self.scales
        t = state.t * scales.time
        if self.rows and not t > self.rows[-1][0]:
            raise SimulationException(f"Time series must increase, t = {t} after {self.rows[-1][0]}")
        row = [t]
        for body in state.bodies:
            row.extend(float(v) * scales.length for v in body.x_c)
            row.append(float(body.orientation))
            row.extend(float(v) * scales.velocity for v in body.v_c)
            row.append(float(body.omega) / scales.time)
        row.extend(
            [
                state.power * scales.power,
                state.dissipation * scales.power,
                state.min_quality,
                1.0 if state.remeshed else 0.0,
            ]
        )
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def as_array(self) -> NDArray[np.float64]:
        return np.array(self.rows, dtype=float).reshape(-1, len(self.columns))

    def column(self, name: str) -> NDArray[np.float64]:
        if name not in self.columns:
            raise SimulationException(f"Unknown time series column '{name}'")
        return self.as_array()[:, self.columns.index(name)]
