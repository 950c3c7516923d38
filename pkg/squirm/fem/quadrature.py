"""Quadrature rules on the reference triangle and on the unit interval"""
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray


class Rule(NamedTuple):
    points: NDArray[np.float64]  # (q, dim) reference coordinates
    weights: NDArray[np.float64]  # (q,) summing to the reference measure


def _barycentric_rule(coords, weights) -> Rule:  # type: ignore
    coords = np.asarray(coords, dtype=float)
    return Rule(points=coords[:, 1:3].copy(), weights=0.5 * np.asarray(weights, dtype=float))


# degree 2, three interior points
TRIANGLE_3 = _barycentric_rule(
    [[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]],
    [1 / 3, 1 / 3, 1 / 3],
)

_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
_W0, _W1, _W2 = 0.225, 0.132394152788506, 0.125939180544827

# degree 5, seven points
TRIANGLE_7 = _barycentric_rule(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [_A1, _B1, _B1],
        [_B1, _A1, _B1],
        [_B1, _B1, _A1],
        [_A2, _B2, _B2],
        [_B2, _A2, _B2],
        [_B2, _B2, _A2],
    ],
    [_W0, _W1, _W1, _W1, _W2, _W2, _W2],
)

GAUSS_2 = Rule(
    points=np.array([[0.5 - 0.5 / np.sqrt(3.0)], [0.5 + 0.5 / np.sqrt(3.0)]]),
    weights=np.array([0.5, 0.5]),
)

GAUSS_3 = Rule(
    points=np.array([[0.5 - 0.5 * np.sqrt(0.6)], [0.5], [0.5 + 0.5 * np.sqrt(0.6)]]),
    weights=np.array([5.0, 8.0, 5.0]) / 18.0,
)
