"""Exception hierarchy for the toolkit.

Every error raised by the package derives from PotentialError so callers
(and the CLI) can catch one base class.  Errors that signal bad caller
input additionally derive from ValueError.
"""


class PotentialError(Exception):
    """Base class for all toolkit errors."""


class GraphFormatError(PotentialError, ValueError):
    """Malformed graph file: bad JSON, missing keys, wrong field types.

    The message carries the offending field path (e.g. ``edges[3]``).
    """


class GraphValidationError(PotentialError, ValueError):
    """Structurally invalid graph: nonpositive weight, self loop,
    duplicate edge, out-of-range id, or a disconnected vertex set."""


class ResourceLimitError(PotentialError):
    """A generator would exceed the vertex budget
    (``P_POTENTIAL_MAX_VERTICES``, default 200000)."""


class SolverError(PotentialError):
    """The Dirichlet solver failed to reach its residual target.

    Carries the best iterate found so the caller can inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConsistencyError(PotentialError):
    """A quantity that is exact in theory failed its numerical check
    (flow conservation, positivity of a Green function, ...)."""


class VerificationError(PotentialError):
    """An inequality that should hold was violated beyond tolerance."""
