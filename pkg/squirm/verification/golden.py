"""Regression of the exact evaluators against frozen samples (B1 = B2 = R = mu = 1)"""
from typing import Dict, NamedTuple
import logging
import os

import numpy as np
from numpy.typing import NDArray

from squirm.exceptions import VerificationException
from squirm.verification.exact import BlakeCoefficients, exact_circle_field, exact_sphere_field

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
GOLDEN_TOLERANCE = 1e-12
GOLDEN_FIELDS = {
    "sphere": exact_sphere_field,
    "circle": exact_circle_field,
}
GOLDEN_HEADER = "r,theta,u_n,u_tau,p"


class GoldenResult(NamedTuple):
    name: str
    n_samples: int
    max_deviation: float


def golden_path(name: str) -> str:
    return os.path.join(DATA_DIR, f"{name}_golden.csv")


def load_golden(name: str) -> NDArray[np.float64]:
    """Rows of (r, theta, u_n, u_tau, p).

    Raises:
        VerificationException: unknown name or unreadable file.
    """
    if name not in GOLDEN_FIELDS:
        raise VerificationException(f"No golden data '{name}', expected one of {sorted(GOLDEN_FIELDS)}")
    try:
        return np.atleast_2d(np.loadtxt(golden_path(name), delimiter=",", skiprows=1))
    except (OSError, ValueError) as ex:
        raise VerificationException(f"Cannot read golden data '{name}'", ex) from ex


def check_golden(name: str, tolerance: float = GOLDEN_TOLERANCE) -> GoldenResult:
    """Compare an exact evaluator with its frozen samples.

    Raises:
        VerificationException: a sample deviates by more than tolerance.
    """
    table = load_golden(name)
    coefficients = BlakeCoefficients(B1=1.0, B2=1.0, R=1.0)
    velocity, pressure = GOLDEN_FIELDS[name](table[:, 0], table[:, 1], coefficients, 1.0)
    computed = np.column_stack([velocity, pressure])
    deviation = float(np.max(np.abs(computed - table[:, 2:5])))
    if deviation > tolerance:
        raise VerificationException(
            f"Golden data '{name}' deviates by {deviation:.3e} (tolerance {tolerance:.1e})"
        )
    logging.info("Golden data '%s': %d samples, max deviation %.3e", name, table.shape[0], deviation)
    return GoldenResult(name, table.shape[0], deviation)


def check_all_golden(tolerance: float = GOLDEN_TOLERANCE) -> Dict[str, GoldenResult]:
    return {name: check_golden(name, tolerance) for name in GOLDEN_FIELDS}


def write_golden(name: str, r: NDArray[np.float64], theta: NDArray[np.float64], path: str) -> None:
    """Freeze samples of an exact evaluator to path"""
    if name not in GOLDEN_FIELDS:
        raise VerificationException(f"No exact evaluator '{name}'")
    coefficients = BlakeCoefficients(B1=1.0, B2=1.0, R=1.0)
    velocity, pressure = GOLDEN_FIELDS[name](r, theta, coefficients, 1.0)
    table = np.column_stack([r, theta, velocity, pressure])
    np.savetxt(path, table, delimiter=",", header=GOLDEN_HEADER, comments="", fmt="%.17g")
