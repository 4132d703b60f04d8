# This code is part of optotherm and is licensed under the MIT license.
"""
Forward model of the measured sideband spectra.

Sideband spectra are built in displacement units (m^2/Hz) as a flat
imprecision floor plus a Lorentzian, following the fitted form::

    S(f) = b + s (gamma/2)^2 / ((|f| - f_tilde)^2 + (gamma/2)^2)

with ``f_tilde`` and ``gamma`` in Hz and the area convention
``A = gamma s / 4``. The red (Stokes) sideband carries ``A = 2 x_zp^2 (n+1)``
and the blue (anti-Stokes) one ``A = 2 x_zp^2 n``.

The detection layer maps displacement to photocurrent units through one
absolute transduction scale, the per-sideband gains, the detection
efficiency and the cavity filter factor.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Any, Iterable, Optional

import numpy as np

from .cavity import CavityResponse, intracavity_photons, sideband_filter_pair
from .dynamics import EffectiveMode
from .errors import CalibrationMismatchError
from .params import optical_photon_energy, zero_point_amplitude
from .settings import BeamConfig, BeamRole, ContaminantPeak, SystemParams
from .settings.models import TWO_PI
from .tokenization import Tokenizable

logger = logging.getLogger(__name__)


class Side(str, enum.Enum):
    """Which motional sideband a spectrum belongs to"""
    RED = "red"
    BLUE = "blue"


class SpectrumUnits(str, enum.Enum):
    DISPLACEMENT = "displacement"
    PHOTOCURRENT = "photocurrent"


def frequency_grid(start_hz: float, stop_hz: float, step_hz: float) -> np.ndarray:
    """Uniform grid from ``start_hz`` to ``stop_hz`` inclusive (to the
    nearest whole step)."""
    if not (step_hz > 0 and stop_hz > start_hz):
        raise ValueError(f"invalid grid {start_hz}..{stop_hz} step {step_hz}")
    n = int(round((stop_hz - start_hz) / step_hz)) + 1
    return start_hz + step_hz * np.arange(n, dtype=float)


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


class SidebandSpectrum(Tokenizable):
    """A sampled one-sided PSD around one motional sideband.

    Parameters
    ----------
    side : Side or str
        ``red`` or ``blue``
    freqs : array_like
        ``|omega| / 2 pi`` values in Hz; strictly increasing and uniformly
        spaced
    psd : array_like
        PSD values, nonnegative; m^2/Hz in displacement units
    n_avg : int
        number of averaged periodograms behind each bin
    units : SpectrumUnits or str
        ``displacement`` or ``photocurrent``
    metadata : dict, optional
        free-form scalar metadata (seed, generating parameters, ...)
    """
    def __init__(self, side, freqs, psd, n_avg: int = 1,
                 units=SpectrumUnits.DISPLACEMENT,
                 metadata: Optional[dict[str, Any]] = None):
        self._side = Side(side)
        self._units = SpectrumUnits(units)
        self._freqs = _readonly(freqs)
        self._psd = _readonly(psd)
        self._n_avg = int(n_avg)
        self._metadata = dict(metadata or {})

        if self._freqs.ndim != 1 or len(self._freqs) < 2:
            raise ValueError("a spectrum needs a 1-d grid of at least two bins")
        if self._psd.shape != self._freqs.shape:
            raise ValueError(f"psd shape {self._psd.shape} does not match "
                             f"grid shape {self._freqs.shape}")
        steps = np.diff(self._freqs)
        if not np.all(steps > 0):
            raise ValueError("spectrum frequencies must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
            raise ValueError("spectrum frequencies must be uniformly spaced")
        if not (np.all(np.isfinite(self._psd)) and np.all(self._psd >= 0)):
            raise ValueError("spectrum psd must be finite and nonnegative")
        if self._n_avg < 1:
            raise ValueError(f"n_avg must be >= 1, got {n_avg}")

    @property
    def side(self) -> Side:
        return self._side

    @property
    def freqs(self) -> np.ndarray:
        return self._freqs

    @property
    def psd(self) -> np.ndarray:
        return self._psd

    @property
    def n_avg(self) -> int:
        return self._n_avg

    @property
    def units(self) -> SpectrumUnits:
        return self._units

    @property
    def metadata(self) -> dict[str, Any]:
        return dict(self._metadata)

    @property
    def step_hz(self) -> float:
        return float(self._freqs[1] - self._freqs[0])

    def __len__(self):
        return len(self._freqs)

    @classmethod
    def _defaults(cls):
        return super()._defaults()

    def _to_dict(self) -> dict:
        return {
            'side': self._side.value,
            'freqs': self._freqs,
            'psd': self._psd,
            'n_avg': self._n_avg,
            'units': self._units.value,
            'metadata': dict(self._metadata),
        }

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)

    def scaled(self, factor: float) -> SidebandSpectrum:
        """Copy with every bin multiplied by ``factor``"""
        return self.copy_with_replacements(psd=self._psd * factor)


@dataclass(frozen=True)
class SpectrumComponents:
    """Bin-by-bin decomposition of a sideband spectrum, m^2/Hz.

    ``shot_floor`` is the full imprecision floor (shot plus dark noise)
    referred to displacement.
    """
    side: Side
    freqs: np.ndarray
    shot_floor: np.ndarray
    thermal: np.ndarray
    zero_point: np.ndarray
    backaction_corr: np.ndarray
    contaminant: np.ndarray

    # Lorentzian weights in units of 2 x_zp^2
    thermal_weight: float
    zero_point_weight: float
    backaction_weight: float

    @property
    def lorentzian_weight(self) -> float:
        return self.thermal_weight + self.zero_point_weight + self.backaction_weight

    @property
    def total(self) -> np.ndarray:
        return (self.shot_floor + self.thermal + self.zero_point
                + self.backaction_corr + self.contaminant)


@dataclass(frozen=True)
class DetectionCalibration:
    """Detection layer of one sideband."""
    side: Side
    transduction: float
    """Absolute transduction scale T_abs."""
    gain: float
    filter_factor: float
    scale: float
    """C = T_abs G^2 eta Phi, detector units per m^2."""
    dark: float
    shot: float
    """shot_coeff G^2 P_total."""

    @property
    def floor(self) -> float:
        """Detector-unit noise floor, dark plus shot."""
        return self.dark + self.shot

    @property
    def displacement_floor(self) -> float:
        """The noise floor referred to displacement, m^2/Hz."""
        return self.floor / self.scale


def _find_beam(beams: Iterable[BeamConfig], role: BeamRole) -> Optional[BeamConfig]:
    for beam in beams:
        if beam.role is role:
            return beam
    return None


def total_detected_power(params: SystemParams,
                         beams: Iterable[BeamConfig]) -> float:
    """Optical power on the photodiode: LO plus reflected probe and cooling."""
    total = 0.0
    for beam in beams:
        if beam.role is BeamRole.LOCAL_OSCILLATOR:
            total += beam.power
        elif beam.role is BeamRole.PROBE:
            total += params.reflect_probe * beam.power
        elif beam.role is BeamRole.COOLING:
            total += params.reflect_cooling * beam.power
    return total


def transduction_scale(params: SystemParams,
                       beams: Iterable[BeamConfig]) -> float:
    """Absolute heterodyne transduction scale.

    ``T_abs = 4 P_LO hbar omega_L kappa_in (g0 / x_zp)^2 n_probe / (kappa/2)^2``
    with ``n_probe`` the probe's intracavity photon number. Zero when either
    the LO or the probe is absent.
    """
    beams = list(beams)
    lo = _find_beam(beams, BeamRole.LOCAL_OSCILLATOR)
    probe = _find_beam(beams, BeamRole.PROBE)
    if lo is None or probe is None:
        return 0.0
    resp = CavityResponse.from_params(params)
    n_probe = intracavity_photons(resp, probe, params.lambda_laser)
    coupling = (params.g0 / zero_point_amplitude(params)) ** 2
    return (4.0 * lo.power * optical_photon_energy(params.lambda_laser)
            * params.kappa_in * coupling * n_probe / resp.half_width ** 2)


def detection_calibration(params: SystemParams, beams: Iterable[BeamConfig],
                          side) -> DetectionCalibration:
    """Gain, filter, scale and floors of the detection layer for ``side``.

    Raises
    ------
    CalibrationMismatchError
        if the resulting scale is not positive (no LO, no probe light or
        zero coupling)
    """
    side = Side(side)
    beams = list(beams)
    probe = _find_beam(beams, BeamRole.PROBE)
    t_abs = transduction_scale(params, beams)
    if probe is None or not t_abs > 0:
        raise CalibrationMismatchError(
            "detection scale is not positive: an LO, a driven probe and "
            "nonzero g0 are required")
    resp = CavityResponse.from_params(params)
    phi_red, phi_blue = sideband_filter_pair(resp, probe.detuning,
                                             params.omega_m)
    if side is Side.RED:
        gain, phi, dark = params.gain_red, phi_red, params.dark_red
    else:
        gain, phi, dark = params.gain_blue, phi_blue, params.dark_blue
    scale = t_abs * gain ** 2 * params.eta * phi
    if not scale > 0:
        raise CalibrationMismatchError(f"detection scale for the {side.value} "
                                       f"sideband is {scale}")
    return DetectionCalibration(
        side=side,
        transduction=t_abs,
        gain=gain,
        filter_factor=phi,
        scale=scale,
        dark=dark,
        shot=params.shot_coeff * gain ** 2 * total_detected_power(params, beams),
    )


def _lorentzian(freqs, center_hz: float, width_hz: float) -> np.ndarray:
    half = 0.5 * width_hz
    u = np.abs(freqs) - center_hz
    return half * half / (u * u + half * half)


def sideband_weights(n_bar: float, side) -> tuple[float, float, float]:
    """Thermal, zero-point and backaction-correlation weights of ``side``.

    The red weights sum to ``n + 1`` and the blue ones to ``n``.
    """
    if Side(side) is Side.RED:
        return n_bar, 0.5, 0.5
    return n_bar, 0.5, -0.5


def contaminant_psd(freqs, contaminants: Iterable[ContaminantPeak]) -> np.ndarray:
    """Sum of contaminant Lorentzians on ``freqs`` (same area convention)."""
    freqs = np.asarray(freqs, dtype=float)
    total = np.zeros_like(freqs)
    for peak in contaminants:
        height = 4.0 * peak.area / peak.width_hz
        total += height * _lorentzian(freqs, peak.center_hz, peak.width_hz)
    return total


def decompose_sxx(params: SystemParams, mode: EffectiveMode, n_bar: float,
                  side, freqs,
                  contaminants: Iterable[ContaminantPeak] = ()) -> SpectrumComponents:
    """Split the model spectrum into floor, thermal, zero-point,
    backaction-correlation and contaminant parts."""
    if n_bar < 0:
        raise ValueError(f"n_bar must be >= 0, got {n_bar}")
    side = Side(side)
    freqs = np.asarray(freqs, dtype=float)
    x_zp = zero_point_amplitude(params)
    gamma_hz = mode.gamma_tilde / TWO_PI
    if not gamma_hz > 0:
        raise ValueError(f"the mode linewidth must be positive, got "
                         f"{mode.gamma_tilde} rad/s")
    shape = _lorentzian(freqs, mode.omega_tilde / TWO_PI, gamma_hz)
    # peak height per unit weight, from A = gamma s / 4 with A = 2 x_zp^2 w
    unit_height = 4.0 * 2.0 * x_zp ** 2 / gamma_hz

    thermal_w, zp_w, ba_w = sideband_weights(n_bar, side)
    floor = detection_calibration(params, mode.beams, side).displacement_floor

    return SpectrumComponents(
        side=side,
        freqs=freqs,
        shot_floor=np.full_like(freqs, floor),
        thermal=thermal_w * unit_height * shape,
        zero_point=zp_w * unit_height * shape,
        backaction_corr=ba_w * unit_height * shape,
        contaminant=contaminant_psd(freqs, contaminants),
        thermal_weight=thermal_w,
        zero_point_weight=zp_w,
        backaction_weight=ba_w,
    )


def model_sxx(params: SystemParams, mode: EffectiveMode, n_bar: float,
              side, freqs,
              contaminants: Iterable[ContaminantPeak] = ()) -> SidebandSpectrum:
    """Noiseless displacement spectrum of one sideband.

    Parameters
    ----------
    params : SystemParams
    mode : EffectiveMode
        supplies the dressed frequency and linewidth and the beams that set
        the imprecision floor
    n_bar : float
        mean phonon number, >= 0
    side : Side or str
    freqs : array_like
        grid in Hz
    contaminants : iterable of ContaminantPeak
        spurious lines added to both sidebands

    Returns
    -------
    SidebandSpectrum
        in displacement units, ``n_avg`` of 1
    """
    comps = decompose_sxx(params, mode, n_bar, side, freqs, contaminants)
    return SidebandSpectrum(
        side=comps.side,
        freqs=comps.freqs,
        psd=comps.total,
        n_avg=1,
        units=SpectrumUnits.DISPLACEMENT,
        metadata={
            'n_bar': float(n_bar),
            'omega_tilde_hz': mode.omega_tilde / TWO_PI,
            'gamma_tilde_hz': mode.gamma_tilde / TWO_PI,
        },
    )


def detection_forward(params: SystemParams, sxx: SidebandSpectrum,
                      beams: Iterable[BeamConfig]) -> SidebandSpectrum:
    """Displacement to photocurrent: ``S_II = floor + C (S_xx - b)``.

    ``floor`` is dark plus shot noise in detector units and ``b`` the same
    floor referred to displacement, so a bare floor maps onto itself.
    """
    if sxx.units is not SpectrumUnits.DISPLACEMENT:
        raise ValueError("detection_forward expects a displacement spectrum")
    cal = detection_calibration(params, beams, sxx.side)
    sii = cal.floor + cal.scale * (sxx.psd - cal.displacement_floor)
    return SidebandSpectrum(side=sxx.side, freqs=sxx.freqs,
                            psd=np.maximum(sii, 0.0), n_avg=sxx.n_avg,
                            units=SpectrumUnits.PHOTOCURRENT,
                            metadata=sxx.metadata)


def detection_inverse(params: SystemParams, sii: SidebandSpectrum,
                      beams: Iterable[BeamConfig]) -> SidebandSpectrum:
    """Photocurrent to displacement: ``S_xx = b + (S_II - floor) / C``.

    Dark noise is not subtracted; it stays in the displacement floor ``b``.

    Raises
    ------
    CalibrationMismatchError
        if the detection scale is not positive
    """
    if sii.units is not SpectrumUnits.PHOTOCURRENT:
        raise ValueError("detection_inverse expects a photocurrent spectrum")
    cal = detection_calibration(params, beams, sii.side)
    sxx = cal.displacement_floor + (sii.psd - cal.floor) / cal.scale
    return SidebandSpectrum(side=sii.side, freqs=sii.freqs,
                            psd=np.maximum(sxx, 0.0), n_avg=sii.n_avg,
                            units=SpectrumUnits.DISPLACEMENT,
                            metadata=sii.metadata)
