"""Exception types shared across the package."""


class RealizabilityError(ValueError):
    """A moment vector is not the moment sequence of any nonnegative measure.

    Carries the order of the first failing Hankel determinant and its
    (normalized) value so callers can report which constraint broke.
    """

    def __init__(self, message, order=None, value=None):
        super().__init__(message)
        self.order = order
        self.value = value


class VacuumError(ValueError):
    """Zero or negative number density where a positive one is required."""


class DomainError(ValueError):
    """Moments outside the admissible region of the two-node inversion.

    The message names the violated inequality.
    """


class ConfigError(ValueError):
    """Invalid run configuration (CLI / case setup)."""


class StepError(RuntimeError):
    """A finite-volume update produced an invalid state.

    Carries the flat cell index and a short diagnostic.
    """

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell
