# This code is part of optotherm and is licensed under the MIT license.
"""
Physical constants, derived scales and configuration ingestion.

Configuration files are flat ``key = value`` text (``#`` starts a comment)
or a JSON object with the same keys. Keys naming a frequency take either an
``_hz`` suffix (ordinary frequency, converted to angular here) or an
``_rad_s`` suffix (angular, used as is). See ``docs/guide/configuration.rst``
for the full key table.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from os import PathLike
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from scipy import constants as _codata

try:
    from pydantic.v1 import ValidationError
except ImportError:
    from pydantic import ValidationError

from .errors import ConfigurationError
from .settings import (
    BeamConfig,
    BeamRole,
    ContaminantPeak,
    EstimationSettings,
    FitSettings,
    GridSettings,
    NoiseSettings,
    RunConfig,
    SystemParams,
    ThermometrySettings,
)
from .settings.models import DEFAULT_COOLING_POWER, TWO_PI
from .utils import ensure_filelike

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA constants used by every implemented equation."""
    hbar: float = _codata.hbar
    """Reduced Planck constant, J s."""
    k_B: float = _codata.k
    """Boltzmann constant, J/K."""
    c: float = _codata.c
    """Speed of light, m/s."""

    def __post_init__(self):
        for name in ('hbar', 'k_B', 'c'):
            if not getattr(self, name) > 0:
                raise ValueError(f"physical constant {name} must be positive")


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class DerivedScales:
    """Scales derived from a parameter set at one bath temperature."""
    x_zp: float
    """Zero-point amplitude, m."""
    n_bath: float
    """Bath occupancy at omega_m (linear form)."""
    omega_fsr: float
    """Free spectral range, rad/s (metadata)."""


def zero_point_amplitude(params: SystemParams) -> float:
    """Zero-point amplitude ``sqrt(hbar / (2 m omega_m))`` in metres."""
    return math.sqrt(CONSTANTS.hbar / (2.0 * params.mass_eff * params.omega_m))


def bath_occupancy(t_bath, omega):
    """Bath occupancy ``k_B T / (hbar omega)``.

    This is the high-temperature linear form used throughout the damping
    balance; see :func:`bose_occupancy` for the Bose-Einstein value.
    Accepts scalars or numpy arrays.
    """
    return CONSTANTS.k_B * np.asarray(t_bath, dtype=float)[()] / (
        CONSTANTS.hbar * omega)


def bose_occupancy(t_bath, omega):
    """Bose-Einstein occupancy ``1 / (exp(hbar omega / k_B T) - 1)``.

    Never used in the damping balance; provided for comparison. Zero
    temperature gives zero occupancy.
    """
    t_bath = np.asarray(t_bath, dtype=float)
    with np.errstate(divide='ignore', over='ignore'):
        x = CONSTANTS.hbar * omega / (CONSTANTS.k_B * t_bath)
        occ = 1.0 / np.expm1(x)
    return np.where(t_bath > 0, occ, 0.0)[()]


def optical_photon_energy(lambda_laser: float) -> float:
    """Photon energy ``hbar omega_L = 2 pi hbar c / lambda`` in J."""
    return TWO_PI * CONSTANTS.hbar * CONSTANTS.c / lambda_laser


def derived_scales(params: SystemParams,
                   t_bath: Optional[float] = None) -> DerivedScales:
    """Evaluate x_zp, n_bath and the FSR for ``params``.

    ``t_bath`` defaults to the bath temperature implied by the parameter
    set's thermometer readings.
    """
    if t_bath is None:
        t_bath = params.t_bath
    return DerivedScales(
        x_zp=zero_point_amplitude(params),
        n_bath=float(bath_occupancy(t_bath, params.omega_m)),
        omega_fsr=params.omega_fsr,
    )


# --- configuration ingestion ------------------------------------------------

# frequency-valued keys: stem -> SystemParams field
_SYSTEM_FREQUENCIES = {
    'omega_m': 'omega_m',
    'gamma_m': 'gamma_m',
    'kappa': 'kappa',
    'kappa_in': 'kappa_in',
    'g0': 'g0',
    'omega_fsr': 'omega_fsr',
}
_SYSTEM_SCALARS = {
    'mass_eff': float,
    'lambda_laser': float,
    'eta': float,
    'gain_red': float,
    'gain_blue': float,
    'dark_red': float,
    'dark_blue': float,
    'shot_coeff': float,
    't_pot': float,
    't_stage': float,
    'alpha': float,
    'n_avg': int,
    'reflect_probe': float,
    'reflect_cooling': float,
}
_BEAM_FREQUENCIES = {'probe_detuning', 'cooling_detuning'}
_BEAM_SCALARS = {
    'probe_power': float,
    'cooling_power': float,
    'lo_power': float,
    'probe_enabled': bool,
    'cooling_enabled': bool,
    'lo_enabled': bool,
}
_RUN_SCALARS = {
    'seed': int,
    'noiseless': bool,
    'grid_start_hz': float,
    'grid_stop_hz': float,
    'grid_step_hz': float,
    'fit_start_hz': float,
    'fit_stop_hz': float,
    'fit_weighting': str,
    'fit_max_iterations': int,
    'fit_xtol': float,
    'contaminant_centers_hz': list,
    'contaminant_width_hz': float,
    'contaminant_area': float,
    'thermometry': str,
    't_pot_offset': float,
    't_stage_offset': float,
    't_pot_slope': float,
    't_stage_slope': float,
    'table_power': list,
    'table_t_pot': list,
    'table_t_stage': list,
    't_bath_sigma': float,
    'alpha_reference': str,
    'sweep_powers': list,
}
_FREQUENCY_STEMS = set(_SYSTEM_FREQUENCIES) | _BEAM_FREQUENCIES


def _known_keys() -> set[str]:
    keys = set(_SYSTEM_SCALARS) | set(_BEAM_SCALARS) | set(_RUN_SCALARS)
    for stem in _FREQUENCY_STEMS:
        keys |= {f"{stem}_hz", f"{stem}_rad_s"}
    return keys


def _parse_text_value(text: str) -> Any:
    text = text.strip()
    if text.lower() in ('true', 'yes', 'on'):
        return True
    if text.lower() in ('false', 'no', 'off'):
        return False
    if ',' in text or text in ('[]', ''):
        items = [t.strip() for t in text.strip('[]').split(',') if t.strip()]
        return [_parse_text_value(t) for t in items]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_config_mapping(path: Union[PathLike, str]) -> dict[str, Any]:
    """Read a configuration file into a flat dict of raw values.

    Raises
    ------
    ConfigurationError
        if the file is malformed, repeats a key, or uses an unknown key
    """
    with ensure_filelike(path, mode='r') as f:
        text = f.read()

    if text.lstrip().startswith('{'):
        try:
            mapping = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"malformed JSON configuration: {e}") from e
        if not isinstance(mapping, dict):
            raise ConfigurationError("a JSON configuration must be an object")
    else:
        mapping = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            content = line.split('#', 1)[0].strip()
            if not content:
                continue
            key, sep, value = content.partition('=')
            key = key.strip()
            if not sep or not key:
                raise ConfigurationError(
                    f"line {lineno}: expected 'key = value', got {line!r}")
            if key in mapping:
                raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
            mapping[key] = _parse_text_value(value)

    if unknown := sorted(set(mapping) - _known_keys()):
        raise ConfigurationError(f"unknown configuration keys: {unknown}")

    for stem in _FREQUENCY_STEMS:
        if f"{stem}_hz" in mapping and f"{stem}_rad_s" in mapping:
            raise ConfigurationError(
                f"both {stem}_hz and {stem}_rad_s given; use one")

    return mapping


def _angular(mapping: dict, stem: str) -> Optional[float]:
    if (hz := mapping.get(f"{stem}_hz")) is not None:
        return TWO_PI * float(hz)
    if (rad_s := mapping.get(f"{stem}_rad_s")) is not None:
        return float(rad_s)
    return None


def _as_list(value) -> list:
    if isinstance(value, list):
        return value
    if value in (None, ''):
        return []
    return [value]


def _system_from_mapping(mapping: dict) -> SystemParams:
    fields: dict[str, Any] = {}
    for stem, field in _SYSTEM_FREQUENCIES.items():
        if (value := _angular(mapping, stem)) is not None:
            fields[field] = value
    for key in _SYSTEM_SCALARS:
        if key in mapping:
            fields[key] = mapping[key]
    return SystemParams(**fields)


def _beams_from_mapping(mapping: dict, params: SystemParams) -> list[BeamConfig]:
    beams = []
    if mapping.get('probe_enabled', True):
        detuning = _angular(mapping, 'probe_detuning')
        beams.append(BeamConfig(
            role=BeamRole.PROBE,
            power=mapping.get('probe_power', 32e-6),
            detuning=detuning if detuning is not None else -TWO_PI * 6.5e3,
        ))
    if mapping.get('cooling_enabled', True):
        detuning = _angular(mapping, 'cooling_detuning')
        beams.append(BeamConfig(
            role=BeamRole.COOLING,
            power=mapping.get('cooling_power', DEFAULT_COOLING_POWER),
            detuning=detuning if detuning is not None else -params.omega_m,
        ))
    if mapping.get('lo_enabled', True):
        beams.append(BeamConfig(role=BeamRole.LOCAL_OSCILLATOR,
                                power=mapping.get('lo_power', 1.57e-3)))
    return beams


def _validated(path, builder):
    try:
        return builder()
    except (ValidationError, ValueError, TypeError) as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid configuration {path}: {e}") from e


def load_config(path: Union[PathLike, str]) -> tuple[SystemParams, list[BeamConfig]]:
    """Load and validate the physical parameters and beams of a config file.

    Missing keys take the published defaults. Run-level keys (grid, fit,
    thermometry, ...) are accepted and ignored here; see
    :func:`load_run_config`.

    Returns
    -------
    params : SystemParams
        frozen, as are the beams
    beams : list of BeamConfig
        in the order probe, cooling, local oscillator (disabled roles
        omitted)

    Raises
    ------
    ConfigurationError
        on parse or validation failure; the message names the offending key
    """
    mapping = read_config_mapping(path)

    def build():
        params = _system_from_mapping(mapping)
        return params, _beams_from_mapping(mapping, params)

    params, beams = _validated(path, build)
    logger.debug("loaded configuration from %s", path)
    return params.frozen_copy(), [b.frozen_copy() for b in beams]


def load_run_config(path: Union[PathLike, str]) -> RunConfig:
    """Load a full :class:`RunConfig` from a config file.

    Like :func:`load_config` the result is frozen; derive variants with
    ``copy(update=...)``.
    """
    mapping = read_config_mapping(path)

    def build():
        params = _system_from_mapping(mapping)
        beams = _beams_from_mapping(mapping, params)
        contaminants = [
            ContaminantPeak(
                center_hz=center,
                width_hz=mapping.get('contaminant_width_hz', 50.0),
                area=mapping.get('contaminant_area', 2.7e-31),
            )
            for center in _as_list(
                mapping.get('contaminant_centers_hz', [699e3, 701e3]))
        ]
        thermometry = ThermometrySettings(
            kind=mapping.get('thermometry', 'affine'),
            **{k: mapping[k] for k in ('t_pot_offset', 't_stage_offset',
                                       't_pot_slope', 't_stage_slope')
               if k in mapping},
            **{k: _as_list(mapping[k]) for k in ('table_power',
                                                 'table_t_pot',
                                                 'table_t_stage')
               if k in mapping},
        )
        extra = {}
        if 'sweep_powers' in mapping:
            extra['sweep_powers'] = _as_list(mapping['sweep_powers'])
        return RunConfig(
            system=params,
            beams=beams,
            grid=GridSettings(
                start_hz=mapping.get('grid_start_hz', 640e3),
                stop_hz=mapping.get('grid_stop_hz', 770e3),
                step_hz=mapping.get('grid_step_hz', 2.0),
            ),
            noise=NoiseSettings(
                seed=mapping.get('seed', 0),
                n_avg=params.n_avg,
                noiseless=mapping.get('noiseless', False),
            ),
            fit=FitSettings(
                range_start_hz=mapping.get('fit_start_hz', 702e3),
                range_stop_hz=mapping.get('fit_stop_hz', 714e3),
                weighting=mapping.get('fit_weighting', 'model'),
                max_iterations=mapping.get('fit_max_iterations', 200),
                xtol=mapping.get('fit_xtol', 1e-8),
            ),
            contaminants=contaminants,
            thermometry=thermometry,
            estimation=EstimationSettings(
                t_bath_sigma=mapping.get('t_bath_sigma', 0.0),
                alpha_reference=mapping.get('alpha_reference', 'asymmetry'),
            ),
            **extra,
        )

    return _validated(path, build).frozen_copy()


def save_config(params: SystemParams, beams: list[BeamConfig],
                path: Union[PathLike, str]):
    """Write ``params`` and ``beams`` so that :func:`load_config` restores
    them exactly.

    Frequencies are written in rad/s with shortest round-trip float text. A
    path ending in ``.json`` is written as JSON, anything else as
    ``key = value`` text.
    """
    entries: dict[str, Any] = {}
    for stem, field in _SYSTEM_FREQUENCIES.items():
        entries[f"{stem}_rad_s"] = float(getattr(params, field))
    for key, kind in _SYSTEM_SCALARS.items():
        entries[key] = kind(getattr(params, key))

    by_role = {b.role: b for b in beams}
    for role, prefix in ((BeamRole.PROBE, 'probe'),
                         (BeamRole.COOLING, 'cooling'),
                         (BeamRole.LOCAL_OSCILLATOR, 'lo')):
        beam = by_role.get(role)
        entries[f"{prefix}_enabled"] = beam is not None
        if beam is None:
            continue
        entries[f"{prefix}_power"] = float(beam.power)
        if beam.detuning is not None:
            entries[f"{prefix}_detuning_rad_s"] = float(beam.detuning)

    if str(path).endswith('.json'):
        text = json.dumps(entries, indent=2, sort_keys=True) + "\n"
    else:
        lines = ["# optotherm configuration; frequencies in rad/s"]
        for key, value in entries.items():
            text_value = str(value).lower() if isinstance(value, bool) else repr(value)
            lines.append(f"{key} = {text_value}")
        text = "\n".join(lines) + "\n"

    with ensure_filelike(path, mode='w') as f:
        f.write(text)
