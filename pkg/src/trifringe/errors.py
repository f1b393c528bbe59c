"""Exception types shared across the package.

Two families matter to callers: data problems (malformed files,
out-of-range arguments, inputs that cannot support the requested
computation) and fit problems (non-convergence, objectives that do not
constrain the parameters).  The command line maps the former to exit
code 2 and the latter to exit code 3.
"""


class Error(Exception):
    """Base class for every package-specific error."""


class ValidationError(Error):
    """Bad input data or arguments: schemas, domains, ranges."""


class RangeError(ValidationError):
    """A value falls outside the range a model or grid covers."""


class DegenerateLikelihoodError(ValidationError):
    """Every ratio at a setpoint is unusable; the likelihood is flat."""


class InconsistentNormalizationError(ValidationError):
    """A fitted loss product exceeds one; counts contradict the model."""


class SingularTermError(ValidationError):
    """A 1/p summand diverges on the working grid; the grid is too coarse."""


class DecompositionError(Error):
    """Eigendecomposition failed.  Carries the offending matrix."""

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class FitError(Error):
    """Base class for optimizer and estimator failures."""


class FitFailureError(FitError):
    """An iterative fit ran out of budget.  Carries the best point seen."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class IllConditionedFitError(FitError):
    """The data do not constrain the parameter being fitted."""


class UndefinedVisibilityError(FitError):
    """Visibility has no meaning here: dark paths or non-positive baseline."""
