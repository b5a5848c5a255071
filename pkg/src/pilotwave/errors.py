"""Exception hierarchy shared across the package."""


class PilotWaveError(Exception):
    """Base class for all package errors."""


class GridError(PilotWaveError, ValueError):
    """Invalid grid geometry or memory budget exceeded."""


class ZeroNormError(PilotWaveError, ValueError):
    pass


class NormalizationError(PilotWaveError, ValueError):
    """A wave function that must be normalized is not."""


class GridMismatchError(PilotWaveError, ValueError):
    pass


class BackendError(PilotWaveError, ValueError):
    """Propagator backend is incompatible with the grid or boundary."""


class NumericalInstabilityError(PilotWaveError, ArithmeticError):
    """NaN/Inf produced, or a step size outside the backend's bound."""


class NodeProximityError(PilotWaveError):
    """Velocity requested where the density is below the node threshold."""


class OutOfDomainError(PilotWaveError, ValueError):
    pass


class EnsembleError(PilotWaveError):
    """Trajectory integration could not proceed (e.g. every trajectory aborted)."""


class StatisticsError(PilotWaveError, ValueError):
    """Sample size or binning unsuitable for a statistical test."""


class CalibrationError(PilotWaveError):
    """Pointer coupling failed to separate the branches to the 99.9% criterion."""


class BranchOverlapError(PilotWaveError):
    """Branches of a measured state overlap again during a check window."""


class ClassificationError(PilotWaveError):
    """Too many trajectories could not be classified."""


class ConfigError(PilotWaveError, ValueError):
    pass


class IntegrityError(PilotWaveError):
    """Stored run data is missing or does not match its recorded hash."""
