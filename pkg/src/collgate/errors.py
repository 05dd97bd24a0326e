"""Exception types raised by the simulator."""


class CollgateError(Exception):
    """Base class for all simulator errors."""

    #: short machine-readable tag used by the CLI error JSON
    kind = "error"


class DomainError(CollgateError, ValueError):
    kind = "domain"


class ContractError(CollgateError, ValueError):
    kind = "contract"


class SolverError(CollgateError, RuntimeError):
    """Norm drift or integrator failure during propagation."""

    kind = "solver"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class TruncationError(CollgateError, RuntimeError):
    """Amplitude leaked into the highest retained basis states."""

    kind = "truncation"


class ResolutionError(CollgateError, ValueError):
    kind = "resolution"


class PhaseUndefinedError(CollgateError, ValueError):
    """|O0| dropped below the level at which arg(O0) is meaningful."""

    kind = "phase_undefined"


class AccuracyError(CollgateError, RuntimeError):
    kind = "accuracy"


class NotATrapError(CollgateError, ValueError):
    kind = "not_a_trap"


class SpinFlipHazard(CollgateError, ValueError):
    """|B| vanishes somewhere in the evaluated region."""

    kind = "spin_flip_hazard"

    def __init__(self, message, locations=()):
        super().__init__(message)
        self.locations = list(locations)
