"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: infeasibility -> 1, every
input/parameter problem -> 2.
"""


class WassportError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(WassportError, ValueError):
    """A scalar/vector parameter violates its documented precondition."""


class GridMismatchError(WassportError, ValueError):
    """Two grid functions that must share a partition do not."""


class UnsupportedOperationError(WassportError):
    """The requested operation is not defined for this input kind."""


class DegenerateQueryError(WassportError):
    """A kernel-weighted query has no effective support at the query point."""


class SimulationError(WassportError):
    """A Monte Carlo path could not be produced within the retry policy."""


class InvariantError(WassportError):
    """A computed output violates one of its documented invariants."""


class DegenerateSampleError(WassportError):
    """A sample statistic is undefined for this input (e.g. zero denominator)."""


class InfeasibleError(WassportError):
    """The constraint set is empty for the supplied inputs."""
