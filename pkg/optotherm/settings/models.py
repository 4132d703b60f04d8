# This code is part of optotherm and is licensed under the MIT license.
"""
Pydantic models used for storing parameters and run settings.

Every frequency-like field of :class:`SystemParams` and :class:`BeamConfig`
is an *angular* frequency in rad/s. Fields that describe positions on the
measured spectrum (grid, fit window, contaminant peaks) are ordinary
frequencies in Hz and carry an ``_hz`` suffix.
"""
import enum
import math
import pprint
from typing import Literal, Optional

try:
    from pydantic.v1 import (
        BaseModel,
        Extra,
        Field,
        NonNegativeFloat,
        NonNegativeInt,
        PositiveFloat,
        PositiveInt,
        PrivateAttr,
        root_validator,
        validator,
    )
except ImportError:
    from pydantic import (
        BaseModel,
        Extra,
        Field,
        NonNegativeFloat,
        NonNegativeInt,
        PositiveFloat,
        PositiveInt,
        PrivateAttr,
        root_validator,
        validator,
    )
from scipy import constants as _codata

TWO_PI = 2.0 * math.pi


class SettingsBaseModel(BaseModel):
    """Settings and modifications we want for all settings classes."""
    _is_frozen: bool = PrivateAttr(default_factory=lambda: False)

    class Config:
        """
        :noindex:
        """
        extra = Extra.forbid
        arbitrary_types_allowed = False
        validate_assignment = True
        smart_union = True

    def _ipython_display_(self):
        pprint.pprint(self.dict())

    def frozen_copy(self):
        """A copy of this Settings object which cannot be modified

        This is intended to be used by a SweepProtocol to make its stored
        settings read-only
        """
        copied = self.copy(deep=True)

        def freeze_model(model):
            for field in model.__fields__:
                value = getattr(model, field)
                nested = value if isinstance(value, (list, tuple)) else [value]
                for mod in nested:
                    if isinstance(mod, SettingsBaseModel):
                        freeze_model(mod)
            model._is_frozen = True

        freeze_model(copied)
        return copied

    def unfrozen_copy(self):
        """A copy of this Settings object, which can be modified

        Settings objects become frozen when attached to a SweepProtocol.  If
        you *really* need to reverse this, this method is how.
        """
        copied = self.copy(deep=True)

        def unfreeze_model(model):
            for field in model.__fields__:
                value = getattr(model, field)
                nested = value if isinstance(value, (list, tuple)) else [value]
                for mod in nested:
                    if isinstance(mod, SettingsBaseModel):
                        unfreeze_model(mod)
            model._is_frozen = False

        unfreeze_model(copied)
        return copied

    @property
    def is_frozen(self):
        """If this Settings object is frozen and cannot be modified"""
        return self._is_frozen

    def __setattr__(self, name, value):
        if name != "_is_frozen" and self._is_frozen:
            raise AttributeError(
                f"Cannot set '{name}': Settings are immutable once loaded "
                "from a config file or attached to a SweepProtocol. Derive "
                "a variant with copy(update=...) or unfrozen_copy().")
        return super().__setattr__(name, value)


class BeamRole(str, enum.Enum):
    """Which of the three optical fields a :class:`BeamConfig` describes"""
    PROBE = "probe"
    COOLING = "cooling"
    LOCAL_OSCILLATOR = "local_oscillator"


# published top cooling power, used as the default operating point
DEFAULT_COOLING_POWER = 415e-6


class SystemParams(SettingsBaseModel):
    """The physical parameter set of the membrane-in-cavity system.

    Defaults reproduce the published device. ``eta`` and the absolute dark
    floor scale are invented values; the 0.5% gain and 1.5% dark-noise
    asymmetries between the sidebands are published.
    """
    class Config:
        """:noindex:"""
        pass

    omega_m: PositiveFloat = TWO_PI * 705.2e3
    """Mechanical resonance, rad/s."""
    gamma_m: PositiveFloat = TWO_PI * 0.14
    """Intrinsic mechanical linewidth, rad/s."""
    mass_eff: PositiveFloat = 43e-12
    """Effective mass, kg."""
    kappa: PositiveFloat = TWO_PI * 165e3
    """Total cavity linewidth, rad/s."""
    kappa_in: PositiveFloat = 0.4 * TWO_PI * 165e3
    """Input coupling rate, rad/s."""
    g0: NonNegativeFloat = TWO_PI * 2.2
    """Vacuum optomechanical coupling, rad/s."""
    lambda_laser: PositiveFloat = 1064e-9
    """Laser wavelength, m."""
    eta: float = 0.35
    """Total detection efficiency."""
    gain_red: PositiveFloat = 1.005
    """Detector gain at the red (Stokes) sideband."""
    gain_blue: PositiveFloat = 1.0
    """Detector gain at the blue (anti-Stokes) sideband."""
    dark_red: Optional[NonNegativeFloat] = None
    """Dark-noise PSD at the red sideband; defaults to 1.015 * dark_blue."""
    dark_blue: NonNegativeFloat = 1.2e-22
    """Dark-noise PSD at the blue sideband, detector units^2/Hz."""
    shot_coeff: Optional[PositiveFloat] = None
    """Shot-floor PSD per watt on the photodiode; defaults to 2*hbar*omega_L."""
    t_pot: NonNegativeFloat = 0.53492844224 + 800.0 * DEFAULT_COOLING_POWER
    """Pot thermometer reading, K."""
    t_stage: NonNegativeFloat = 0.63492844224 + 1200.0 * DEFAULT_COOLING_POWER
    """Stage thermometer reading, K."""
    alpha: float = 0.498
    """Bath weighting between the stage and pot readings."""
    n_avg: PositiveInt = 100
    """Number of averaged periodograms per spectrum."""
    omega_fsr: PositiveFloat = TWO_PI * 4e9
    """Free spectral range, rad/s; recorded as metadata only."""
    reflect_probe: float = 1.0
    """Fraction of the probe power reaching the photodiode."""
    reflect_cooling: float = 1.0
    """Fraction of the cooling power reaching the photodiode."""

    @validator('eta')
    def eta_in_range(cls, v):
        if not 0 < v <= 1:
            raise ValueError(f"eta must satisfy 0 < eta <= 1, got {v}")
        return v

    @validator('alpha')
    def alpha_in_range(cls, v):
        if not 0 <= v <= 1:
            raise ValueError(f"alpha must satisfy 0 <= alpha <= 1, got {v}")
        return v

    @validator('reflect_probe', 'reflect_cooling')
    def fraction_in_range(cls, v, field):
        if not 0 <= v <= 1:
            raise ValueError(f"{field.name} must lie in [0, 1], got {v}")
        return v

    @validator('kappa_in')
    def kappa_in_below_kappa(cls, v, values):
        kappa = values.get('kappa')
        if kappa is not None and v > kappa:
            raise ValueError(f"kappa_in must satisfy 0 < kappa_in <= kappa, "
                             f"got kappa_in={v} > kappa={kappa}")
        return v

    @validator('t_stage')
    def pot_below_stage(cls, v, values):
        t_pot = values.get('t_pot')
        if t_pot is not None and not t_pot < v:
            raise ValueError(f"thermometer readings must satisfy "
                             f"t_pot < t_stage, got t_pot={t_pot}, "
                             f"t_stage={v}")
        return v

    @root_validator(skip_on_failure=True)
    def fill_derived_defaults(cls, values):
        if values.get('dark_red') is None:
            values['dark_red'] = 1.015 * values['dark_blue']
        if values.get('shot_coeff') is None:
            photon_energy = (_codata.h * _codata.c) / values['lambda_laser']
            values['shot_coeff'] = 2.0 * photon_energy
        return values

    @property
    def t_bath(self) -> float:
        """Bath temperature implied by the two readings and ``alpha``, K."""
        return self.alpha * self.t_stage + (1.0 - self.alpha) * self.t_pot


class BeamConfig(SettingsBaseModel):
    """One optical field: power, detuning from its cavity mode, and role.

    The local oscillator carries no detuning.
    """
    class Config:
        """:noindex:"""
        pass

    role: BeamRole
    power: NonNegativeFloat = 0.0
    """Incident optical power, W."""
    detuning: Optional[float] = None
    """Angular detuning from the addressed cavity mode, rad/s."""

    @validator('detuning', always=True)
    def detuning_matches_role(cls, v, values):
        role = values.get('role')
        if role is BeamRole.LOCAL_OSCILLATOR and v is not None:
            raise ValueError("a local_oscillator beam has no detuning")
        if role in (BeamRole.PROBE, BeamRole.COOLING) and v is None:
            raise ValueError(f"a {role.value} beam requires a detuning")
        if v is not None and not math.isfinite(v):
            raise ValueError(f"detuning must be finite, got {v}")
        return v


class GridSettings(SettingsBaseModel):
    """Frequency grid on which sideband spectra are evaluated, Hz.

    The default window sits inside the 115 kHz demodulation band around the
    sideband.
    """
    start_hz: PositiveFloat = 640e3
    stop_hz: PositiveFloat = 770e3
    step_hz: PositiveFloat = 2.0

    @validator('stop_hz')
    def stop_after_start(cls, v, values):
        start = values.get('start_hz')
        if start is not None and not v > start:
            raise ValueError(f"grid stop_hz must exceed start_hz, got "
                             f"{start} .. {v}")
        return v


class NoiseSettings(SettingsBaseModel):
    """Statistics of the synthesized averaged periodograms."""
    seed: NonNegativeInt = 0
    n_avg: PositiveInt = 100
    """Averaging count M."""
    noiseless: bool = False
    """Return the model spectrum unchanged (for closure checks)."""


class FitSettings(SettingsBaseModel):
    """Options of the joint sideband fit."""
    range_start_hz: PositiveFloat = 702e3
    range_stop_hz: PositiveFloat = 714e3
    weighting: Literal['model', 'uniform'] = 'model'
    """``model`` refreshes per-bin sigma from the current model each
    iteration; ``uniform`` is plain least squares."""
    max_iterations: PositiveInt = 200
    xtol: PositiveFloat = 1e-8
    """Relative parameter change below which the fit has converged."""
    min_peak_excess: NonNegativeFloat = 1e-6
    """Smallest (peak - floor) / floor accepted before fitting."""
    min_significance: NonNegativeFloat = 5.0
    """Smallest fitted s / sigma_s accepted on the stronger sideband."""

    @validator('range_stop_hz')
    def range_ordered(cls, v, values):
        start = values.get('range_start_hz')
        if start is not None and not v > start:
            raise ValueError(f"fit range must be increasing, got "
                             f"{start} .. {v}")
        return v

    @property
    def fit_range(self) -> tuple[float, float]:
        return (self.range_start_hz, self.range_stop_hz)


class ContaminantPeak(SettingsBaseModel):
    """A spurious line present in both sidebands, independent of the beams.

    The defaults (50 Hz wide, area ten times the floor over one width) are
    invented; only the 699 and 701 kHz centers are observed.
    """
    center_hz: PositiveFloat
    width_hz: PositiveFloat = 50.0
    area: NonNegativeFloat = 2.7e-31
    """Lorentzian area, m^2 (same convention as the sideband areas)."""


def default_contaminants() -> list[ContaminantPeak]:
    return [ContaminantPeak(center_hz=699e3), ContaminantPeak(center_hz=701e3)]


class ThermometrySettings(SettingsBaseModel):
    """Thermometer readings as a function of cooling power.

    The affine defaults are fitted so that the bath temperature at 415 uW
    gives a mean phonon number of 0.84 with ``alpha = 0.498``; they are a
    reproduction anchor, not measured curves.
    """
    kind: Literal['affine', 'table'] = 'affine'
    t_pot_offset: NonNegativeFloat = 0.53492844224
    t_stage_offset: NonNegativeFloat = 0.63492844224
    t_pot_slope: float = 800.0
    """K/W"""
    t_stage_slope: float = 1200.0
    """K/W"""
    table_power: list[NonNegativeFloat] = Field(default_factory=list)
    table_t_pot: list[NonNegativeFloat] = Field(default_factory=list)
    table_t_stage: list[NonNegativeFloat] = Field(default_factory=list)

    @root_validator(skip_on_failure=True)
    def pot_below_stage(cls, values):
        if values['kind'] == 'affine':
            if not values['t_pot_offset'] < values['t_stage_offset']:
                raise ValueError("affine thermometry must satisfy "
                                 "t_pot_offset < t_stage_offset")
            if values['t_pot_slope'] > values['t_stage_slope']:
                raise ValueError("affine thermometry must satisfy "
                                 "t_pot_slope <= t_stage_slope so that "
                                 "T_pot < T_stage at every power")
            return values

        power = values['table_power']
        t_pot = values['table_t_pot']
        t_stage = values['table_t_stage']
        if not len(power) == len(t_pot) == len(t_stage) >= 1:
            raise ValueError("thermometry tables must be nonempty and of "
                             "equal length")
        if any(b <= a for a, b in zip(power, power[1:])):
            raise ValueError("table_power must be strictly increasing")
        for p, tp, ts in zip(power, t_pot, t_stage):
            if not tp < ts:
                raise ValueError(f"thermometry table violates T_pot < "
                                 f"T_stage at P={p}: {tp} >= {ts}")
        return values


class EstimationSettings(SettingsBaseModel):
    """Options of the phonon-number estimators and the alpha fit."""
    t_bath_sigma: NonNegativeFloat = 0.0
    """One-sigma uncertainty of the bath temperature, K."""
    alpha_reference: Literal['asymmetry', 'blue_area'] = 'asymmetry'
    """Estimator the damping balance is matched to when fitting alpha."""


def default_beams() -> list[BeamConfig]:
    return [
        BeamConfig(role=BeamRole.PROBE, power=32e-6,
                   detuning=-TWO_PI * 6.5e3),
        BeamConfig(role=BeamRole.COOLING, power=DEFAULT_COOLING_POWER,
                   detuning=-TWO_PI * 705.2e3),
        BeamConfig(role=BeamRole.LOCAL_OSCILLATOR, power=1.57e-3),
    ]


# invented grid; only 0, 34, 158 and 415 uW are published
DEFAULT_SWEEP_POWERS = [0.0, 10e-6, 20e-6, 34e-6, 60e-6, 100e-6, 158e-6,
                        220e-6, 300e-6, 415e-6]


class RunConfig(SettingsBaseModel):
    """Container for everything a simulation, fit or sweep run needs."""
    system: SystemParams = Field(default_factory=SystemParams)
    beams: list[BeamConfig] = Field(default_factory=default_beams)
    grid: GridSettings = Field(default_factory=GridSettings)
    noise: NoiseSettings = Field(default_factory=NoiseSettings)
    fit: FitSettings = Field(default_factory=FitSettings)
    contaminants: list[ContaminantPeak] = Field(
        default_factory=default_contaminants)
    thermometry: ThermometrySettings = Field(
        default_factory=ThermometrySettings)
    estimation: EstimationSettings = Field(default_factory=EstimationSettings)
    sweep_powers: list[NonNegativeFloat] = Field(
        default_factory=lambda: list(DEFAULT_SWEEP_POWERS))

    @validator('beams')
    def one_beam_per_role(cls, v):
        roles = [b.role for b in v]
        for role in BeamRole:
            if roles.count(role) > 1:
                raise ValueError(f"at most one {role.value} beam is allowed")
        return v

    @validator('sweep_powers')
    def nonempty_powers(cls, v):
        if not v:
            raise ValueError("sweep_powers must not be empty")
        return v

    def beam(self, role: BeamRole) -> Optional[BeamConfig]:
        """The beam with ``role``, or None"""
        for b in self.beams:
            if b.role is role:
                return b
        return None
