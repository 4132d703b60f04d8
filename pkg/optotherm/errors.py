# This code is part of optotherm and is licensed under the MIT license.
"""Exceptions raised by optotherm."""


class OptothermError(Exception):
    """Base class for all optotherm errors"""


class ConfigurationError(OptothermError, ValueError):
    """Error when a configuration file cannot be parsed or validated"""


class DegenerateDetuningError(OptothermError, ValueError):
    """Error when a backaction occupancy is requested for a resonant beam"""


class CalibrationMismatchError(OptothermError):
    """Error when the detection calibration cannot be inverted"""


class NonPositiveModelError(OptothermError, ValueError):
    """Error when a model spectrum has a bin that is not strictly positive"""


class FitError(OptothermError):
    """Base class for failures of the sideband fit"""


class NonConvergenceError(FitError):
    """Error when the fit does not converge within the iteration cap"""


class DegenerateFitError(FitError):
    """Error when the data carry no resolvable peak inside the fit range"""


class EstimationError(OptothermError):
    """Base class for failures turning fits into occupancies"""


class InconsistentCalibrationError(EstimationError):
    """Error when the fitted linewidth contradicts the calibrated damping"""


class FlatObjectiveError(EstimationError):
    """Error when the bath weighting has no influence on the objective"""


class InsufficientDataError(EstimationError):
    """Error when a sweep has too few usable points for a fit"""


class ExtrapolationError(OptothermError, ValueError):
    """Error when a tabulated thermometer curve is evaluated out of range"""


class UpstreamFailureError(OptothermError):
    """Error recorded for a sweep unit skipped because a dependency failed"""
