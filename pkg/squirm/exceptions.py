"""Squirm exceptions"""
import traceback
from typing import Optional


class SquirmException(Exception):
    """Generic exception of the squirmer simulator"""

    def __init__(self, message: str, ex: Optional[Exception] = None) -> None:
        self.message = message
        if ex:
            self.message += f", caused by {type(ex)}: {ex}"
        super().__init__(self.message)

    def chained_traceback_str(self) -> str:
        """A string of chained tracebacks"""
        chained_tb = traceback.format_exception(self.__class__, self, self.__traceback__)
        return "".join(chained_tb)


class SimulationConfigException(SquirmException):
    """Exception thrown when the simulation configuration file or preset is not valid"""


class KinematicsException(SquirmException):
    """Exception thrown for invalid rigid-body states or non-convergent projections"""


class MeshException(SquirmException):
    """Exception thrown when a mesh, a boundary loop or a point location is invalid"""


class RemeshRequiredException(MeshException):
    """Exception thrown when mesh motion inverts an element"""


class AssemblyException(SquirmException):
    """Exception thrown when finite element assembly receives invalid input"""


class CouplingException(SquirmException):
    """Exception thrown when matrix surgery receives inconsistent squirmer data"""


class LinearSolverException(SquirmException):
    """Exception thrown when the sparse direct solver fails"""


class MetachronalException(SquirmException):
    """Exception thrown for invalid wave parameters or failed envelope inversion"""


class VerificationException(SquirmException):
    """Exception thrown when exact solutions or golden data are queried out of range"""


class SimulationException(SquirmException):
    """Exception thrown when a simulation step cannot be completed"""
