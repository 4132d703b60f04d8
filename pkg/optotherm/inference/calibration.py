# This code is part of optotherm and is licensed under the MIT license.
"""
Calibrations run over a cooling-power sweep.

:func:`fit_alpha` weights the two thermometer readings into a bath
temperature ``T_bath = alpha T_stage + (1 - alpha) T_pot`` by matching the
damping-balance estimate to a calibration-free reference estimate.

:func:`calibrate_g0_and_detuning` fits the vacuum coupling rate and the
probe detuning to the dressed frequency and linewidth measured across the
sweep.
"""
from __future__ import annotations

import logging
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.optimize import least_squares, minimize_scalar

from ..dynamics import effective_mode
from ..errors import (
    EstimationError,
    FlatObjectiveError,
    InsufficientDataError,
    NonConvergenceError,
)
from ..settings import BeamConfig, BeamRole, EstimationSettings, SystemParams
from ..settings.models import TWO_PI
from ..tokenization import Tokenizable
from .estimators import (
    PhononEstimate,
    estimate_area,
    estimate_asymmetry,
    estimate_damping,
)
from .fitting import FitResult

logger = logging.getLogger(__name__)

ALPHA_XTOL = 1e-4


class AlphaPoint(NamedTuple):
    """One sweep point entering the bath-weighting fit."""
    fit: FitResult
    beams: Sequence[BeamConfig]
    t_pot: float
    t_stage: float


class CalibrationPoint(NamedTuple):
    """Fitted dressed frequency and linewidth at one cooling power."""
    p_cl: float
    omega_tilde_hz: float
    gamma_tilde_hz: float
    omega_sigma_hz: Optional[float] = None
    gamma_sigma_hz: Optional[float] = None


class AlphaFitResult(Tokenizable):
    """Best bath weighting, its one-sigma error and the objective it reaches."""
    def __init__(self, alpha: float, objective: float, n_points: int,
                 reference: str = 'asymmetry', alpha_sigma: float = math.nan):
        self._alpha = float(alpha)
        self._objective = float(objective)
        self._n_points = int(n_points)
        self._reference = str(reference)
        self._alpha_sigma = float(alpha_sigma)

    @property
    def alpha(self) -> float:
        return self._alpha

    @property
    def alpha_sigma(self) -> float:
        """From the curvature of the objective; nan when not computed"""
        return self._alpha_sigma

    @property
    def objective(self) -> float:
        """Weighted sum of squared occupancy differences at ``alpha``"""
        return self._objective

    @property
    def n_points(self) -> int:
        return self._n_points

    @property
    def reference(self) -> str:
        return self._reference

    @classmethod
    def _defaults(cls):
        return super()._defaults()

    def _to_dict(self) -> dict:
        return {'alpha': self._alpha, 'objective': self._objective,
                'n_points': self._n_points, 'reference': self._reference,
                'alpha_sigma': self._alpha_sigma}

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)


class CalibrationResult(Tokenizable):
    """Fitted ``g0`` and probe detuning (rad/s) with one-sigma errors."""
    def __init__(self, g0: float, probe_detuning: float, g0_sigma: float,
                 probe_detuning_sigma: float, cost: float, n_points: int):
        self._g0 = float(g0)
        self._probe_detuning = float(probe_detuning)
        self._g0_sigma = float(g0_sigma)
        self._probe_detuning_sigma = float(probe_detuning_sigma)
        self._cost = float(cost)
        self._n_points = int(n_points)

    @property
    def g0(self) -> float:
        return self._g0

    @property
    def probe_detuning(self) -> float:
        return self._probe_detuning

    @property
    def g0_sigma(self) -> float:
        return self._g0_sigma

    @property
    def probe_detuning_sigma(self) -> float:
        return self._probe_detuning_sigma

    @property
    def cost(self) -> float:
        return self._cost

    @property
    def n_points(self) -> int:
        return self._n_points

    @classmethod
    def _defaults(cls):
        return super()._defaults()

    def _to_dict(self) -> dict:
        return {
            'g0': self._g0,
            'probe_detuning': self._probe_detuning,
            'g0_sigma': self._g0_sigma,
            'probe_detuning_sigma': self._probe_detuning_sigma,
            'cost': self._cost,
            'n_points': self._n_points,
        }

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)


def _cooling_power(beams: Sequence[BeamConfig]) -> float:
    for beam in beams:
        if beam.role is BeamRole.COOLING:
            return beam.power
    return 0.0


def _probe(beams: Sequence[BeamConfig]) -> Optional[BeamConfig]:
    for beam in beams:
        if beam.role is BeamRole.PROBE:
            return beam
    return None


def _reference_estimate(point: AlphaPoint, params: SystemParams,
                        reference: str) -> Optional[PhononEstimate]:
    try:
        if reference == 'blue_area':
            est = estimate_area(point.fit, params, 'blue')
        else:
            est = estimate_asymmetry(point.fit, params, _probe(point.beams))
    except EstimationError as e:
        logger.info("skipping sweep point in alpha fit: %s", e)
        return None
    if est.flag is not None or not np.isfinite(est.n_bar):
        return None
    return est


def _bath_temperature(point: AlphaPoint, alpha: float) -> float:
    return alpha * point.t_stage + (1.0 - alpha) * point.t_pot


def _curvature(objective, alpha: float, step: float = 1e-3) -> float:
    # one-sided at the bounds of [0, 1]
    lo = min(max(alpha - step, 0.0), 1.0 - 2.0 * step)
    f0, f1, f2 = (objective(lo + k * step) for k in range(3))
    return (f2 - 2.0 * f1 + f0) / step ** 2


def fit_alpha(points: Sequence[AlphaPoint], params: SystemParams,
              settings: Optional[EstimationSettings] = None) -> AlphaFitResult:
    """Bath weighting that best matches the damping balance to a reference.

    Minimises the weighted sum
    ``sum_i (n_damping(alpha; i) - n_ref(i))^2 / (s_ref(i)^2 + s_damping(i)^2)``
    over ``alpha in [0, 1]`` with a bounded scalar search to ``1e-4`` in
    alpha. The weights come from the sigmas of the two estimates; they are
    first taken at ``alpha = 0.5`` and refreshed once at the optimum, the
    way the sideband fit refreshes its model weights. ``alpha_sigma`` is
    ``sqrt(2 / chi2'')`` at the optimum.

    Points whose sigmas are all zero (noiseless spectra) are weighted
    equally.

    Parameters
    ----------
    points : sequence of AlphaPoint
        ``(fit, beams, T_pot, T_stage)`` per sweep point
    params : SystemParams
    settings : EstimationSettings, optional
        picks the reference estimator (``asymmetry`` by default) and the
        bath temperature uncertainty

    Raises
    ------
    InsufficientDataError
        fewer than two usable points with distinct cooling powers
    FlatObjectiveError
        the objective does not depend on alpha (e.g. ``T_pot == T_stage``)
    """
    settings = settings or EstimationSettings()
    reference = settings.alpha_reference
    usable = []
    for point in points:
        ref = _reference_estimate(point, params, reference)
        if ref is not None:
            usable.append((point, ref))
    powers = {_cooling_power(p.beams) for p, _ in usable}
    if len(powers) < 2:
        raise InsufficientDataError(
            f"the alpha fit needs at least two usable points with distinct "
            f"cooling powers, got {len(powers)}")

    def damping(point: AlphaPoint, alpha: float) -> PhononEstimate:
        return estimate_damping(point.fit, params, point.beams,
                                _bath_temperature(point, alpha),
                                settings.t_bath_sigma)

    def weights_at(alpha: float) -> np.ndarray:
        var = np.array([ref.sigma ** 2 + damping(point, alpha).sigma ** 2
                        for point, ref in usable])
        if not np.all(np.isfinite(var)) or not np.all(var > 0):
            return np.ones(len(usable))
        return 1.0 / var

    def objective_with(weights: np.ndarray):
        def objective(alpha: float) -> float:
            resid = np.array([damping(point, alpha).n_bar - ref.n_bar
                              for point, ref in usable])
            return float(np.sum(weights * resid * resid))
        return objective

    def minimise(objective) -> tuple[float, float]:
        res = minimize_scalar(objective, bounds=(0.0, 1.0), method='bounded',
                              options={'xatol': ALPHA_XTOL})
        # bounded Brent never evaluates the end points themselves
        candidates = [(float(res.fun), float(res.x)), (objective(0.0), 0.0),
                      (objective(1.0), 1.0)]
        return min(candidates)

    objective = objective_with(weights_at(0.5))
    samples = np.array([objective(a) for a in np.linspace(0.0, 1.0, 11)])
    if np.ptp(samples) <= 1e-12 * max(np.max(np.abs(samples)), 1e-300):
        raise FlatObjectiveError("the alpha objective is flat: the "
                                 "thermometer readings carry no weighting "
                                 "information")

    _, alpha = minimise(objective)
    objective = objective_with(weights_at(alpha))
    best_value, best_alpha = minimise(objective)

    curvature = _curvature(objective, best_alpha)
    alpha_sigma = (math.sqrt(2.0 / curvature) if curvature > 0
                   else math.inf)
    logger.info("alpha fit over %d points: alpha=%.5f +- %.3g",
                len(usable), best_alpha, alpha_sigma)
    return AlphaFitResult(alpha=best_alpha, objective=best_value,
                          n_points=len(usable), reference=reference,
                          alpha_sigma=alpha_sigma)


def _predict(params: SystemParams, probe: BeamConfig, cooling: BeamConfig,
             g0: float, detuning: float, p_cl: float) -> tuple[float, float]:
    trial_params = params.copy(update={'g0': g0})
    beams = [probe.copy(update={'detuning': detuning}),
             cooling.copy(update={'power': p_cl})]
    mode = effective_mode(trial_params, beams)
    return mode.omega_tilde / TWO_PI, mode.gamma_tilde / TWO_PI


def calibrate_g0_and_detuning(points: Sequence[CalibrationPoint],
                              params: SystemParams, probe: BeamConfig,
                              cooling: Optional[BeamConfig] = None,
                              initial: Optional[tuple[float, float]] = None,
                              ) -> CalibrationResult:
    """Least-squares fit of ``(g0, Delta_probe)`` to ``omega_tilde`` and
    ``gamma_tilde`` across a cooling-power sweep.

    Parameters
    ----------
    points : sequence of CalibrationPoint
        must include ``P_CL = 0`` and at least three nonzero powers; without
        per-point sigmas every residual is weighted as 1 Hz and the
        covariance is scaled by the reduced chi-squared
    params : SystemParams
        everything but ``g0`` is held fixed
    probe : BeamConfig
        probe power is held fixed; its detuning is the fitted quantity
    cooling : BeamConfig, optional
        template for the cooling beam (its power is replaced per point);
        defaults to a beam at ``Delta = -omega_m``
    initial : (float, float), optional
        starting ``(g0, Delta_probe)`` in rad/s; defaults to the values in
        ``params`` and ``probe``

    Raises
    ------
    InsufficientDataError
        no zero-power point or fewer than three nonzero powers
    NonConvergenceError
        if the least-squares solver fails
    """
    points = [CalibrationPoint(*p) for p in points]
    nonzero = {p.p_cl for p in points if p.p_cl > 0}
    if not any(p.p_cl == 0 for p in points) or len(nonzero) < 3:
        raise InsufficientDataError(
            "the g0/detuning calibration needs a P_CL = 0 point and at "
            "least three nonzero cooling powers")
    if cooling is None:
        cooling = BeamConfig(role=BeamRole.COOLING, power=0.0,
                             detuning=-params.omega_m)
    g0_start, detuning_start = initial or (params.g0, probe.detuning)

    observed = np.array([[p.omega_tilde_hz, p.gamma_tilde_hz] for p in points])
    has_sigmas = all(p.omega_sigma_hz and p.gamma_sigma_hz for p in points)
    if has_sigmas:
        sigmas = np.array([[p.omega_sigma_hz, p.gamma_sigma_hz]
                           for p in points])
    else:
        sigmas = np.ones_like(observed)

    def residuals(x):
        predicted = np.array([_predict(params, probe, cooling, x[0], x[1],
                                       p.p_cl) for p in points])
        return ((predicted - observed) / sigmas).ravel()

    x_scale = [max(abs(g0_start), 1.0), params.kappa]
    result = least_squares(residuals, x0=[g0_start, detuning_start],
                           bounds=([0.0, -np.inf], [np.inf, np.inf]),
                           x_scale=x_scale, jac='3-point',
                           xtol=1e-12, ftol=1e-12, gtol=1e-12)
    if result.status <= 0:
        raise NonConvergenceError(f"g0/detuning calibration failed: "
                                  f"{result.message}")

    dof = max(result.fun.size - 2, 1)
    try:
        cov = linalg.inv(result.jac.T @ result.jac)
    except linalg.LinAlgError:
        cov = np.full((2, 2), np.inf)
    if not has_sigmas:
        cov = cov * (2.0 * result.cost / dof)
    sig = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    g0, detuning = result.x
    logger.info("calibration: g0/2pi=%.5g Hz, probe detuning/2pi=%.5g Hz",
                g0 / TWO_PI, detuning / TWO_PI)
    return CalibrationResult(g0=g0, probe_detuning=detuning,
                             g0_sigma=sig[0], probe_detuning_sigma=sig[1],
                             cost=result.cost, n_points=len(points))
