"""Exception hierarchy shared by the library and the command-line jobs.

The CLI maps these onto exit codes: InputError -> 2, InfeasibleError -> 1,
BudgetExhaustedError -> 3.
"""


class DynTomoError(Exception):
    """Base class for all dyntomo errors."""


class InputError(DynTomoError, ValueError):
    """Malformed or inconsistent input data."""


class MassMismatchError(InputError):
    """The X-rays of one frame disagree in total mass."""

    def __init__(self, masses, frame=None):
        self.masses = tuple(masses)
        self.frame = frame
        where = f" in frame {frame}" if frame is not None else ""
        super().__init__(f"X-ray masses differ{where}: {', '.join(str(m) for m in self.masses)}")


class DimensionMismatchError(InputError):
    """Vectors or matrices of incompatible shape."""


class InstanceFormatError(InputError):
    """A file could not be decoded; `field` locates the offending entry."""

    def __init__(self, message, field=None, path=None):
        self.field = field
        self.path = path
        self.message = message
        location = ""
        if path:
            location += f"{path}: "
        if field:
            location += f"[{field}] "
        super().__init__(f"{location}{message}")


class EnumerationBoundError(InputError):
    """An exact oracle was asked to enumerate beyond its configured bound."""


class InfeasibleError(DynTomoError):
    """No solution satisfies the constraints; `frame` names the culprit when known."""

    def __init__(self, message, frame=None):
        self.frame = frame
        super().__init__(message if frame is None else f"{message} (frame {frame})")


class BudgetExhaustedError(DynTomoError):
    """Branch-and-bound stopped at its node budget before proving optimality."""


class SolverError(DynTomoError):
    """An internal solver invariant was violated."""
