"""Interface conditions of a squirmer boundary at one instant"""
from typing import NamedTuple, Optional, Union

import numpy as np
from numpy.typing import NDArray

TYPE_I = "type1"  # prescribed tangential slip
TYPE_II = "type2"  # prescribed tangential force


class SlipCondition(NamedTuple):
    """Type-I data: tangential slip u_s at the boundary nodes"""

    slip: NDArray[np.float64]  # (m, 2)


class ForceCondition(NamedTuple):
    """Type-II data: tangential force density f_s = force - drag tau (tau . u_s)"""

    force: NDArray[np.float64]  # (m, 2) explicit part of f_s
    drag: NDArray[np.float64]  # (m,) drag factor multiplying the tangential slip, zeros if none
    alpha: Optional[NDArray[np.float64]] = None  # (m,) scale of the normal rows, None for auto


Condition = Union[SlipCondition, ForceCondition]
