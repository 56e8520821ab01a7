"""Exception hierarchy shared across the package."""


class AmpsdeError(Exception):
    """Base class for all package-specific failures."""


class DimensionMismatchError(AmpsdeError):
    """An array does not have the length/shape the model requires."""


class BlowUpError(AmpsdeError):
    """A field contains NaN/Inf; treated as a blow-up signal, not silent state."""


class SingularOperatorError(AmpsdeError):
    """A stable-mode inverse was requested where an eigenvalue vanishes."""


class InvalidModelError(AmpsdeError):
    """A ModelSpec violates an assumption required by the requested operation."""


class NotPositiveSemidefiniteError(AmpsdeError):
    """Matrix square root requested for a significantly indefinite matrix."""


class GridAlignmentError(AmpsdeError):
    """Two trajectories or grids that must share sample times do not."""


class IntegrationError(AmpsdeError):
    """A time stepper produced non-finite state outside the guarded region."""


class ConfigError(AmpsdeError):
    """A run configuration is malformed or violates a model/sim invariant."""
