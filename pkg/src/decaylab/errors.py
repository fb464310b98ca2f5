"""Exception hierarchy shared by every module.

Each error records the module and operation that raised it so that the CLI
can print a precise one-line diagnostic and map it to an exit code.
"""

from __future__ import annotations


class LabError(Exception):
    exit_code = 1

    def __init__(self, message: str, *, module: str = "", operation: str = ""):
        super().__init__(message)
        self.module = module
        self.operation = operation

    def where(self) -> str:
        return f"{self.module}.{self.operation}" if self.module else "unknown"


class StructuralError(LabError):
    """Mismatched grids or array shapes."""


class DomainError(LabError):
    """Input outside the mathematical domain of an operation."""


class BandRangeError(DomainError):
    """Dyadic band outside the range a grid can resolve."""


class GeometryError(LabError):
    """A contour touches the branch rays of the integrand."""


class AccuracyError(LabError):
    exit_code = 2

    def __init__(self, message: str, *, best_estimate=None, **kw):
        super().__init__(message, **kw)
        self.best_estimate = best_estimate


class ContractionError(AccuracyError):
    """Picard iteration failed to contract."""


class BoundaryMassError(AccuracyError):
    """Too much mass near the edge of the periodic box."""


class BlowUpError(LabError):
    exit_code = 3

    def __init__(self, message: str, *, last_time: float, partial=None, **kw):
        super().__init__(message, **kw)
        self.last_time = last_time
        self.partial = partial


class ConfigError(LabError):
    exit_code = 4
