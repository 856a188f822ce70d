"""Named failure modes raised by the toolkit.

Every error carries a stable ``code`` string (used in reports) and the
process exit status the command-line front-end maps it to.
"""


class FieldError(Exception):
    """Base class for all toolkit failures."""

    code = "FIELD_ERROR"
    exit_status = 3

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details


class ConfigError(FieldError):
    code = "CONFIG_ERROR"
    exit_status = 2


class NumericalError(FieldError):
    """Numerical breakdown (exit status 3)."""


class PreconditionError(FieldError):
    """A mathematical precondition does not hold (exit status 4)."""

    exit_status = 4


class UnsupportedDerivative(PreconditionError):
    code = "UNSUPPORTED_DERIVATIVE_ORDER"


class DegenerateLeading(NumericalError):
    code = "DEGENERATE_LEADING"


class SingularVandermonde(NumericalError):
    code = "SINGULAR_VANDERMONDE"


class RepeatedRoots(PreconditionError):
    code = "REPEATED_ROOTS"


class NearSingularEntry(NumericalError):
    code = "NEAR_SINGULAR_ENTRY"


class EssentialPoint(PreconditionError):
    code = "ESSENTIAL_POINT"


class NoConvergence(NumericalError):
    code = "NO_CONVERGENCE"


class RegionAbort(NumericalError):
    code = "REGION_ABORT"


class NotAnEigenvalue(NumericalError):
    code = "NOT_AN_EIGENVALUE"


class TSingular(PreconditionError):
    code = "T_SINGULAR"


class AtEigenvalue(PreconditionError):
    code = "AT_EIGENVALUE"


class ProportionalityFailure(NumericalError):
    code = "PROPORTIONALITY_FAILURE"


class Resonance(PreconditionError):
    code = "RESONANCE"


class UnsupportedMesh(PreconditionError):
    code = "UNSUPPORTED_MESH"


class StepMismatch(PreconditionError):
    code = "STEP_MISMATCH"


class Blowup(NumericalError):
    code = "BLOWUP"


class NoCycle(NumericalError):
    code = "NO_CYCLE"
