"""Continuous-time random walks with heavy-tailed, possibly coupled, jumps and waits.

Simulation of the walks, their stable and Levy-pair limits, Skorokhod path
metrics, a torus jump process, and the statistics to compare them.
"""

from ._accel import backend_name
from .errors import (AccuracyError, CtrwError, NumericalError, ParameterError, RangeError,
                     StructuralError)

__version__ = "0.1.0"

__all__ = ["backend_name", "AccuracyError", "CtrwError", "NumericalError", "ParameterError",
           "RangeError", "StructuralError", "__version__"]
