"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid input -> 2, non-convergence -> 3,
resource caps -> 4.
"""


class ShiftPlanError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(ShiftPlanError):
    """Malformed instance/plan data, schema violations, bad parameters."""


class UnknownJobError(InvalidInputError):
    """A shift or scenario references a job id that does not exist."""


class StructureError(InvalidInputError):
    """A shift or vertex sequence is structurally malformed."""


class InfeasibleShiftError(ShiftPlanError):
    """An operation required a feasible (or well-scheduled) shift and got none."""


class EncodingError(ShiftPlanError):
    """A shift cannot be represented as a path of the shift digraph."""


class DimensionError(ShiftPlanError):
    """Resources with different scenario counts were combined."""


class UncoveredJobError(ShiftPlanError):
    """A job cannot be covered by the available columns or shifts."""

    def __init__(self, job_id, message=None):
        self.job_id = job_id
        super().__init__(message or f"job {job_id!r} is not covered")


class CapacityError(ShiftPlanError):
    """A configured resource cap (path count, candidate list size) was hit."""


class NonConvergedError(ShiftPlanError):
    """Column generation stopped at the iteration cap before proving optimality."""
