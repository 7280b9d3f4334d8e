"""Exact cylinder-level laboratory for fractional Sobolev spaces on free-group boundaries."""

from .boundary import BoundaryPoint, Cylinder, Params
from .functions import CylinderFunction, NormReport, Partition, Shell, ShellFunction
from .conformal import BundleChart
from .operators import OperatorMatrix

__all__ = [
    "BoundaryPoint",
    "BundleChart",
    "Cylinder",
    "CylinderFunction",
    "NormReport",
    "OperatorMatrix",
    "Params",
    "Partition",
    "Shell",
    "ShellFunction",
]
__version__ = "0.1.0"
