# This code is part of optotherm and is licensed under the MIT license.
"""Pydantic models for physical parameters and run settings"""
from .models import (
    SettingsBaseModel,
    BeamRole,
    SystemParams,
    BeamConfig,
    GridSettings,
    NoiseSettings,
    FitSettings,
    ContaminantPeak,
    ThermometrySettings,
    EstimationSettings,
    RunConfig,
    default_beams,
    default_contaminants,
    DEFAULT_SWEEP_POWERS,
)
