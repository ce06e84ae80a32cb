"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes (see cli.EXIT_CODES); library
callers can catch the base class or the specific failure they care about.
"""


class PathmarginError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PathmarginError):
    """Malformed input: bad shapes, out-of-range values, unknown names."""


class BudgetExceededError(PathmarginError):
    """The dense path tensor would exceed the explicit-path budget.

    Raised instead of silently truncating; the offending size is in the
    message.
    """


class NonSeparableError(PathmarginError):
    """The hard-margin dual diverged: no separating hyperplane through
    the origin exists for the given Gram matrix (or one exists but the
    dual exceeded its divergence cap)."""


class GatedRefusalError(PathmarginError):
    """A pipeline refused to report support-vector statistics because
    zero training error was not achieved, so the numbers would not be
    comparable."""


class UnconvergedSolutionError(PathmarginError):
    """A margin solution that did not converge was used where a
    converged one is required."""


class TrainingDivergedError(PathmarginError):
    """Training produced a non-finite loss."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"non-finite loss at iteration {iteration}")


class UnreachableNeuronError(PathmarginError):
    """Weight recovery found a neuron with no nonzero path product
    through it, so its weights are not determined by the path vector."""


class InconsistentPathProductsError(PathmarginError):
    """The supplied path-product vector is not realizable by any weight
    assignment with the given skeleton (ratio equations disagree)."""
