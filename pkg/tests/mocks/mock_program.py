"""
Boundary programs for testing the coupling and the driver without the squirmer models
"""

from typing import List

import numpy as np

from squirm.coupling.conditions import TYPE_I, TYPE_II, Condition, ForceCondition, SlipCondition
from squirm.coupling.programs import BoundaryProgram
from squirm.fem.spaces import BodyBoundary
from squirm.kinematics import BodyState


class MockProgram(BoundaryProgram):
    """
    Uniform tangential slip (type-I) or force (type-II) of the given magnitude; records call times
    """

    def __init__(self, magnitude: float = 0.0, kind: str = TYPE_I, drag: float = 0.0) -> None:
        self.magnitude = magnitude
        self._kind = kind
        self.drag = drag
        self.times: List[float] = []

    @property
    def kind(self) -> str:
        return self._kind

    def condition(self, boundary: BodyBoundary, state: BodyState, t: float) -> Condition:
        self.times.append(t)
        values = self.magnitude * boundary.tangents
        if self._kind == TYPE_II:
            return ForceCondition(values, np.full(boundary.nodes.size, self.drag))
        return SlipCondition(values)
