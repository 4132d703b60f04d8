# This code is part of optotherm and is licensed under the MIT license.
"""Sideband fitting, phonon-number estimators and sweep calibrations"""
from .fitting import (
    PARAMETER_NAMES,
    AreaPair,
    FitResult,
    areas,
    fit_sidebands,
    sideband_pair_jacobian,
    sideband_pair_model,
)
from .estimators import (
    CLASSICAL_LIMIT,
    NONPHYSICAL_ASYMMETRY,
    EstimateMethod,
    PhononEstimate,
    estimate_area,
    estimate_asymmetry,
    estimate_covariance,
    estimate_damping,
    mode_temperature,
    mode_temperature_bose,
    sideband_asymmetry,
)
from .calibration import (
    AlphaFitResult,
    AlphaPoint,
    CalibrationPoint,
    CalibrationResult,
    calibrate_g0_and_detuning,
    fit_alpha,
)
