# This code is part of optotherm and is licensed under the MIT license.
"""
Mean phonon number from a fitted sideband pair.

Four estimators are provided, each tied to one fitted quantity:

- the sideband asymmetry ``zeta = A_red / A_blue - 1 = 1 / n``, which needs
  no absolute calibration;
- the blue area ``n = A_blue / 2 x_zp^2`` and the red area
  ``n + 1 = A_red / 2 x_zp^2`` (equipartition, absolute calibration);
- the damping balance, which combines the fitted linewidth with the
  calibrated backaction of the probe and cooling beams.
"""
from __future__ import annotations

import enum
import logging
import math
from typing import Iterable, Optional, Union

import numpy as np

from ..cavity import CavityResponse, sideband_filter_pair
from ..dynamics import backaction_occupancy, beam_dynamics
from ..errors import CalibrationMismatchError, EstimationError, InconsistentCalibrationError
from ..params import CONSTANTS, bath_occupancy, zero_point_amplitude
from ..settings import BeamConfig, BeamRole, SystemParams
from ..settings.models import TWO_PI
from ..spectra import Side, SpectrumUnits
from ..tokenization import Tokenizable
from .fitting import PARAMETER_NAMES, FitResult, areas

logger = logging.getLogger(__name__)

CLASSICAL_LIMIT = "classical_limit"
NONPHYSICAL_ASYMMETRY = "nonphysical_asymmetry"

# relative slack on the linewidth consistency check, for noiseless input
_LINEWIDTH_TOLERANCE = 1e-9


class EstimateMethod(str, enum.Enum):
    ASYMMETRY = "asymmetry"
    RED_AREA = "red_area"
    BLUE_AREA = "blue_area"
    DAMPING_BALANCE = "damping_balance"


class PhononEstimate(Tokenizable):
    """A mean phonon number with its one-sigma statistical uncertainty.

    ``flag`` marks results that are reported rather than clamped:
    ``classical_limit`` when the asymmetry vanishes (``n`` is infinite) and
    ``nonphysical_asymmetry`` when it is negative.
    """
    def __init__(self, method, n_bar: float, sigma: float,
                 flag: Optional[str] = None):
        self._method = EstimateMethod(method)
        self._n_bar = float(n_bar)
        self._sigma = float(sigma)
        self._flag = flag
        if not self._sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")

    @property
    def method(self) -> EstimateMethod:
        return self._method

    @property
    def n_bar(self) -> float:
        return self._n_bar

    @property
    def sigma(self) -> float:
        return self._sigma

    @property
    def flag(self) -> Optional[str]:
        return self._flag

    @classmethod
    def _defaults(cls):
        return super()._defaults()

    def _to_dict(self) -> dict:
        return {
            'method': self._method.value,
            'n_bar': self._n_bar,
            'sigma': self._sigma,
            'flag': self._flag,
        }

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)


def _relative_transduction(params: SystemParams, probe: BeamConfig) -> float:
    """``C_red / C_blue``: gain and cavity-filter imbalance of the sidebands"""
    resp = CavityResponse.from_params(params)
    phi_red, phi_blue = sideband_filter_pair(resp, probe.detuning,
                                             params.omega_m)
    return (params.gain_red ** 2 * phi_red) / (params.gain_blue ** 2 * phi_blue)


def sideband_asymmetry(fit: FitResult, params: Optional[SystemParams] = None,
                       probe: Optional[BeamConfig] = None) -> tuple[float, float]:
    """``zeta = A_red / A_blue - 1`` and its one-sigma uncertainty.

    Photocurrent-unit fits are first corrected by ``C_blue / C_red``, which
    needs ``params`` and the ``probe`` beam.

    Raises
    ------
    EstimationError
        if the blue area is not positive
    CalibrationMismatchError
        photocurrent-unit fit without ``params`` and ``probe``
    """
    pair = areas(fit)
    if not pair.a_blue > 0:
        raise EstimationError(f"blue sideband area is {pair.a_blue}; the "
                              f"asymmetry needs a positive blue area")
    correction = 1.0
    if fit.units is SpectrumUnits.PHOTOCURRENT:
        if params is None or probe is None:
            raise CalibrationMismatchError(
                "a photocurrent-unit asymmetry needs the system parameters "
                "and the probe beam to undo the sideband imbalance")
        correction = 1.0 / _relative_transduction(params, probe)

    ratio = correction * pair.a_red / pair.a_blue
    grad = correction * np.array([1.0 / pair.a_blue,
                                  -pair.a_red / pair.a_blue ** 2])
    sigma = float(np.sqrt(max(grad @ pair.covariance @ grad, 0.0)))
    return ratio - 1.0, sigma


def estimate_asymmetry(fit: FitResult, params: Optional[SystemParams] = None,
                       probe: Optional[BeamConfig] = None) -> PhononEstimate:
    """``n = 1 / zeta`` from the sideband asymmetry.

    A vanishing asymmetry gives an infinite occupancy flagged
    ``classical_limit``; a negative one is returned unclamped and flagged
    ``nonphysical_asymmetry``.
    """
    zeta, zeta_sigma = sideband_asymmetry(fit, params, probe)
    if zeta == 0:
        logger.warning("sideband areas are equal: classical limit, n = inf")
        return PhononEstimate(EstimateMethod.ASYMMETRY, math.inf, math.inf,
                              flag=CLASSICAL_LIMIT)
    n_bar = 1.0 / zeta
    sigma = zeta_sigma / zeta ** 2
    flag = None
    if zeta < 0:
        logger.warning("negative sideband asymmetry zeta=%.4g", zeta)
        flag = NONPHYSICAL_ASYMMETRY
    return PhononEstimate(EstimateMethod.ASYMMETRY, n_bar, sigma, flag=flag)


def estimate_area(fit: FitResult, params: SystemParams, side) -> PhononEstimate:
    """Equipartition estimate from one absolutely calibrated sideband area.

    The red estimate can come out negative at low signal; it is returned
    with its sigma and never clamped.
    """
    if fit.units is not SpectrumUnits.DISPLACEMENT:
        raise CalibrationMismatchError("area estimates need spectra in "
                                       "displacement units")
    side = Side(side)
    pair = areas(fit)
    unit = 2.0 * zero_point_amplitude(params) ** 2
    if side is Side.RED:
        return PhononEstimate(EstimateMethod.RED_AREA, pair.a_red / unit - 1.0,
                              pair.sigma_red / unit)
    return PhononEstimate(EstimateMethod.BLUE_AREA, pair.a_blue / unit,
                          pair.sigma_blue / unit)


def _driven(beams: Iterable[BeamConfig], role: BeamRole) -> Optional[BeamConfig]:
    for beam in beams:
        if beam.role is role and beam.power > 0:
            return beam
    return None


def _damping_balance(fit: FitResult, params: SystemParams,
                     beams: Iterable[BeamConfig], t_bath: float,
                     t_bath_sigma: float) -> tuple[float, np.ndarray, float]:
    """Occupancy, its gradient over the fit parameters and the variance
    contributed by ``t_bath_sigma``"""
    beams = list(beams)
    gamma_tilde = TWO_PI * fit.gamma_tilde
    gamma_sigma = TWO_PI * fit.sigma('gamma_tilde')
    omega_tilde = TWO_PI * fit.omega_tilde

    probe = _driven(beams, BeamRole.PROBE)
    cooling = _driven(beams, BeamRole.COOLING)
    gamma_probe = probe_heating = 0.0
    if probe is not None:
        dyn = beam_dynamics(params, probe, require_occupancy=False)
        gamma_probe = dyn.gamma_opt
        probe_heating = dyn.heating_rate

    gamma_cl = gamma_tilde - params.gamma_m - gamma_probe
    slack = 3.0 * gamma_sigma + _LINEWIDTH_TOLERANCE * gamma_tilde
    if gamma_cl < -slack:
        raise InconsistentCalibrationError(
            f"fitted linewidth {fit.gamma_tilde:.6g} Hz is below the "
            f"intrinsic plus probe damping "
            f"{(params.gamma_m + gamma_probe) / TWO_PI:.6g} Hz")

    n_cl = backaction_occupancy(params, cooling.detuning) if cooling else 0.0
    n_bath = bath_occupancy(t_bath, omega_tilde)
    numerator = n_bath * params.gamma_m + probe_heating + n_cl * gamma_cl
    n_bar = numerator / gamma_tilde

    grad = np.zeros(len(PARAMETER_NAMES))
    grad[0] = -params.gamma_m * n_bath / (gamma_tilde * fit.omega_tilde)
    grad[1] = TWO_PI * (n_cl - n_bar) / gamma_tilde
    t_var = 0.0
    if t_bath > 0:
        t_var = (params.gamma_m * n_bath / (gamma_tilde * t_bath)
                 * t_bath_sigma) ** 2
    return n_bar, grad, t_var


def estimate_damping(fit: FitResult, params: SystemParams,
                     beams: Iterable[BeamConfig], t_bath: float,
                     t_bath_sigma: float = 0.0) -> PhononEstimate:
    """Phonon number from the damping balance with the fitted linewidth.

    ``n = (n_bath gamma_m + n_probe gamma_probe + n_CL gamma_CL) / gamma_tilde``
    where ``gamma_tilde`` and ``omega_tilde`` (inside ``n_bath``) come from
    the fit, ``gamma_probe`` and ``n_probe`` from the calibrated probe, and
    ``gamma_CL = gamma_tilde - gamma_m - gamma_probe``.

    Parameters
    ----------
    fit : FitResult
    params : SystemParams
    beams : iterable of BeamConfig
        the probe and (optionally) cooling beams of the measurement
    t_bath : float
        bath temperature, K
    t_bath_sigma : float
        one-sigma uncertainty of ``t_bath``, K

    Raises
    ------
    InconsistentCalibrationError
        if the fitted linewidth is significantly below ``gamma_m + gamma_probe``
    """
    n_bar, grad, t_var = _damping_balance(fit, params, beams, t_bath,
                                          t_bath_sigma)
    var = grad @ fit.covariance @ grad + t_var
    return PhononEstimate(EstimateMethod.DAMPING_BALANCE, n_bar,
                          float(np.sqrt(max(var, 0.0))))


def _asymmetry_gradient(fit: FitResult, correction: float) -> np.ndarray:
    # n = 1 / (c s_red / s_blue - 1); the linewidth cancels in the ratio
    zeta = correction * fit.s_red / fit.s_blue - 1.0
    grad = np.zeros(len(PARAMETER_NAMES))
    grad[4] = -correction / (fit.s_blue * zeta ** 2)
    grad[5] = correction * fit.s_red / (fit.s_blue ** 2 * zeta ** 2)
    return grad


def _area_gradient(fit: FitResult, side: Side, unit: float) -> np.ndarray:
    grad = np.zeros(len(PARAMETER_NAMES))
    amplitude = 4 if side is Side.RED else 5
    grad[1] = fit.values[amplitude] / (4.0 * unit)
    grad[amplitude] = fit.gamma_tilde / (4.0 * unit)
    return grad


def estimate_covariance(fit: FitResult, params: SystemParams,
                        beams: Iterable[BeamConfig], t_bath: float,
                        t_bath_sigma: float = 0.0) -> np.ndarray:
    """Joint covariance of the four estimates of one fit.

    All four are functions of the same six fitted parameters, so they are
    correlated: the asymmetry and the red area share the red amplitude and
    move in opposite directions. Rows follow :class:`EstimateMethod` order
    and the diagonal reproduces each estimator's ``sigma ** 2``. The
    asymmetry row is nan when the asymmetry vanishes or the blue
    amplitude is not positive.

    Raises
    ------
    CalibrationMismatchError
        for a fit in photocurrent units (the area estimates need
        displacement units)
    """
    if fit.units is not SpectrumUnits.DISPLACEMENT:
        raise CalibrationMismatchError("area estimates need spectra in "
                                       "displacement units")
    beams = list(beams)
    unit = 2.0 * zero_point_amplitude(params) ** 2
    _, damping_grad, t_var = _damping_balance(fit, params, beams, t_bath,
                                              t_bath_sigma)
    if fit.s_blue > 0 and fit.s_red != fit.s_blue:
        asymmetry_grad = _asymmetry_gradient(fit, 1.0)
    else:
        asymmetry_grad = np.full(len(PARAMETER_NAMES), math.nan)
    grads = np.vstack([
        asymmetry_grad,
        _area_gradient(fit, Side.RED, unit),
        _area_gradient(fit, Side.BLUE, unit),
        damping_grad,
    ])
    cov = grads @ fit.covariance @ grads.T
    cov[3, 3] += t_var
    return 0.5 * (cov + cov.T)


def _occupancy(est: Union[PhononEstimate, float]) -> float:
    return est.n_bar if isinstance(est, PhononEstimate) else float(est)


def mode_temperature(est: Union[PhononEstimate, float], omega: float) -> float:
    """Mode temperature ``T = n hbar omega / k_B`` (linear convention), K."""
    return _occupancy(est) * CONSTANTS.hbar * omega / CONSTANTS.k_B


def mode_temperature_bose(est: Union[PhononEstimate, float],
                          omega: float) -> float:
    """Temperature whose Bose occupancy at ``omega`` equals ``n``, K."""
    n_bar = _occupancy(est)
    if n_bar < 0:
        raise ValueError(f"the Bose temperature needs n >= 0, got {n_bar}")
    if n_bar == 0:
        return 0.0
    if math.isinf(n_bar):
        return math.inf
    return CONSTANTS.hbar * omega / (CONSTANTS.k_B * math.log1p(1.0 / n_bar))
