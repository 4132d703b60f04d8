# This code is part of optotherm and is licensed under the MIT license.
"""
Joint Lorentzian fit of a red/blue sideband pair.

Both sidebands share the dressed frequency and linewidth; each has its own
floor ``b`` and peak height ``s``::

    S_q(f) = b_q + s_q (gamma/2)^2 / ((|f| - f_tilde)^2 + (gamma/2)^2)

The fit is a damped Gauss-Newton (Levenberg-Marquardt) loop with an
analytic Jacobian. With ``model`` weighting the per-bin sigma
``mu_i / sqrt(M)`` is refreshed from the current model every iteration,
which is the right noise model for averaged periodograms.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.ndimage import uniform_filter1d

from ..errors import DegenerateFitError, NonConvergenceError
from ..settings import FitSettings
from ..spectra import Side, SidebandSpectrum, SpectrumUnits
from ..tokenization import Tokenizable

logger = logging.getLogger(__name__)

PARAMETER_NAMES = ('omega_tilde', 'gamma_tilde', 'b_red', 'b_blue',
                   's_red', 's_blue')

_EDGE_FRACTION = 0.02
_MAX_DAMPING = 1e16


class FitResult(Tokenizable):
    """The six fitted parameters of a sideband pair with their covariance.

    ``omega_tilde`` and ``gamma_tilde`` are ordinary frequencies in Hz
    (``omega/2pi``); ``b`` and ``s`` are in the units of the spectra.
    """
    def __init__(self, omega_tilde: float, gamma_tilde: float,
                 b_red: float, b_blue: float, s_red: float, s_blue: float,
                 covariance, fit_range, residual_norm: float,
                 reduced_chi2: float = 1.0, n_avg: int = 1,
                 n_iterations: int = 0,
                 units=SpectrumUnits.DISPLACEMENT,
                 weighting: str = 'model'):
        self._values = np.array([omega_tilde, gamma_tilde, b_red, b_blue,
                                 s_red, s_blue], dtype=float)
        self._values.setflags(write=False)
        cov = np.array(covariance, dtype=float)
        if cov.shape != (6, 6):
            raise ValueError(f"covariance must be 6x6, got {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=1e-10, atol=0.0):
            raise ValueError("covariance must be symmetric")
        cov.setflags(write=False)
        self._covariance = cov
        self._fit_range = (float(fit_range[0]), float(fit_range[1]))
        self._residual_norm = float(residual_norm)
        self._reduced_chi2 = float(reduced_chi2)
        self._n_avg = int(n_avg)
        self._n_iterations = int(n_iterations)
        self._units = SpectrumUnits(units)
        self._weighting = str(weighting)

        if not gamma_tilde > 0:
            raise ValueError(f"gamma_tilde must be positive, got {gamma_tilde}")
        if s_red < 0 or s_blue < 0:
            raise ValueError("peak heights must be nonnegative")

    @property
    def omega_tilde(self) -> float:
        """Dressed mechanical frequency, Hz"""
        return float(self._values[0])

    @property
    def gamma_tilde(self) -> float:
        """Dressed mechanical linewidth (FWHM), Hz"""
        return float(self._values[1])

    @property
    def b_red(self) -> float:
        return float(self._values[2])

    @property
    def b_blue(self) -> float:
        return float(self._values[3])

    @property
    def s_red(self) -> float:
        return float(self._values[4])

    @property
    def s_blue(self) -> float:
        return float(self._values[5])

    def sigma(self, name: str) -> float:
        """One-sigma uncertainty of the parameter called ``name``"""
        return float(self.sigmas[PARAMETER_NAMES.index(name)])

    @property
    def values(self) -> np.ndarray:
        """Parameters in :data:`PARAMETER_NAMES` order"""
        return self._values

    @property
    def covariance(self) -> np.ndarray:
        return self._covariance

    @property
    def sigmas(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self._covariance), 0.0, None))

    @property
    def fit_range(self) -> tuple[float, float]:
        return self._fit_range

    @property
    def residual_norm(self) -> float:
        return self._residual_norm

    @property
    def reduced_chi2(self) -> float:
        return self._reduced_chi2

    @property
    def n_avg(self) -> int:
        return self._n_avg

    @property
    def n_iterations(self) -> int:
        return self._n_iterations

    @property
    def units(self) -> SpectrumUnits:
        return self._units

    @property
    def weighting(self) -> str:
        return self._weighting

    @classmethod
    def _defaults(cls):
        return super()._defaults()

    def _to_dict(self) -> dict:
        dct = {name: float(v) for name, v in zip(PARAMETER_NAMES, self._values)}
        dct.update({
            'covariance': self._covariance,
            'fit_range': list(self._fit_range),
            'residual_norm': self._residual_norm,
            'reduced_chi2': self._reduced_chi2,
            'n_avg': self._n_avg,
            'n_iterations': self._n_iterations,
            'units': self._units.value,
            'weighting': self._weighting,
        })
        return dct

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)


def sideband_pair_model(theta, freqs_red, freqs_blue):
    """Evaluate both sideband models at ``theta`` (natural units)."""
    f0, gamma, b_red, b_blue, s_red, s_blue = theta
    half2 = (0.5 * gamma) ** 2
    u_red = np.abs(freqs_red) - f0
    u_blue = np.abs(freqs_blue) - f0
    return (b_red + s_red * half2 / (u_red * u_red + half2),
            b_blue + s_blue * half2 / (u_blue * u_blue + half2))


def sideband_pair_jacobian(theta, freqs_red, freqs_blue) -> np.ndarray:
    """Analytic Jacobian of :func:`sideband_pair_model`, red rows first."""
    f0, gamma, _, _, s_red, s_blue = theta
    half = 0.5 * gamma
    half2 = half * half
    blocks = []
    for freqs, s, b_col, s_col in ((freqs_red, s_red, 2, 4),
                                   (freqs_blue, s_blue, 3, 5)):
        u = np.abs(np.asarray(freqs, dtype=float)) - f0
        denom = u * u + half2
        shape = half2 / denom
        jac = np.zeros((len(u), 6))
        jac[:, 0] = s * 2.0 * u * half2 / denom ** 2
        jac[:, 1] = s * half * u * u / denom ** 2
        jac[:, b_col] = 1.0
        jac[:, s_col] = shape
        blocks.append(jac)
    return np.vstack(blocks)


@dataclass
class _Guess:
    center: float
    fwhm: float
    floor: float
    height: float
    excess: float
    edge: bool


def _initial_guess(freqs: np.ndarray, y: np.ndarray) -> _Guess:
    """Floor from the outer 20% of bins, peak from a lightly smoothed
    argmax, width from the count of bins above half maximum."""
    n = len(y)
    n_outer = max(1, n // 10)
    floor = float(np.median(np.concatenate([y[:n_outer], y[-n_outer:]])))
    step = float(freqs[1] - freqs[0])

    width = max(1, n // 200)
    while True:
        smooth = uniform_filter1d(y, size=width, mode='nearest')
        peak_idx = int(np.argmax(smooth))
        peak = float(smooth[peak_idx])
        above = int(np.count_nonzero(smooth > 0.5 * (floor + peak)))
        if width == 1 or above >= 4 * width:
            break
        width = max(1, above // 4)

    edge_bins = max(1, int(_EDGE_FRACTION * n))
    return _Guess(
        center=float(freqs[peak_idx]),
        fwhm=max(above, 1) * step,
        floor=floor,
        height=peak - floor,
        excess=(peak - floor) / floor if floor > 0 else 0.0,
        edge=peak_idx < edge_bins or peak_idx >= n - edge_bins,
    )


def _window(spec: SidebandSpectrum, fit_range) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = fit_range
    mask = (spec.freqs >= lo) & (spec.freqs <= hi)
    return spec.freqs[mask], spec.psd[mask]


def _weights(mu: np.ndarray, n_avg: int, weighting: str) -> np.ndarray:
    if weighting == 'uniform':
        return np.ones_like(mu)
    return n_avg / (mu * mu)


def _valid(theta: np.ndarray) -> bool:
    return bool(theta[1] > 0 and theta[2] > 0 and theta[3] > 0
                and np.all(np.isfinite(theta)))


def fit_sidebands(red: SidebandSpectrum, blue: SidebandSpectrum,
                  fit_range: Optional[tuple[float, float]] = None,
                  settings: Optional[FitSettings] = None) -> FitResult:
    """Jointly fit the red and blue sideband spectra.

    Parameters
    ----------
    red, blue : SidebandSpectrum
        spectra in the same units with the same bin spacing
    fit_range : (float, float), optional
        ``(lo, hi)`` window in Hz; defaults to ``settings.fit_range``
    settings : FitSettings, optional
        weighting, iteration cap, tolerance and degeneracy thresholds

    Returns
    -------
    FitResult
        covariance is ``(J^T W J)^-1`` scaled by the reduced chi-squared

    Raises
    ------
    DegenerateFitError
        no peak above the floor, peak on the window edge, or a fitted
        centre outside the window
    NonConvergenceError
        the iteration cap was reached

    Notes
    -----
    The spectra are normalised by a power of two near their median before
    the solve. Rescaling both inputs by a power of two therefore gives
    bit-identical ``omega_tilde`` and ``gamma_tilde`` and exactly rescaled
    ``b`` and ``s``. Any other factor changes the rounding, so the results
    agree only to the solver tolerance.
    """
    settings = settings or FitSettings()
    fit_range = tuple(fit_range or settings.fit_range)
    if red.side is not Side.RED or blue.side is not Side.BLUE:
        raise ValueError("fit_sidebands expects (red, blue) spectra")
    if red.units is not blue.units:
        raise ValueError("red and blue spectra must share units")
    if not np.isclose(red.step_hz, blue.step_hz, rtol=1e-9, atol=0.0):
        raise ValueError(f"grid spacings differ: {red.step_hz} vs "
                         f"{blue.step_hz} Hz")

    f_red, y_red = _window(red, fit_range)
    f_blue, y_blue = _window(blue, fit_range)
    if min(len(f_red), len(f_blue)) < 10:
        raise DegenerateFitError(f"fit range {fit_range} holds fewer than "
                                 f"10 bins of each sideband")

    # power-of-two scaling keeps the arithmetic exact under rescaled input
    _, exponent = np.frexp(np.median(np.concatenate([y_red, y_blue])))
    psd_scale = float(np.ldexp(1.0, int(exponent)))
    y_red = y_red / psd_scale
    y_blue = y_blue / psd_scale
    y = np.concatenate([y_red, y_blue])
    n_avg = min(red.n_avg, blue.n_avg)

    guess_red = _initial_guess(f_red, y_red)
    guess_blue = _initial_guess(f_blue, y_blue)
    lead = max(guess_red, guess_blue, key=lambda g: g.excess)
    if not lead.excess > settings.min_peak_excess:
        raise DegenerateFitError("no peak above the floor inside the fit range")
    if lead.edge:
        raise DegenerateFitError(f"highest point at {lead.center:.6g} Hz lies "
                                 f"on the edge of the fit range")

    theta = np.array([
        lead.center,
        lead.fwhm,
        guess_red.floor,
        guess_blue.floor,
        max(guess_red.height, 1e-3 * guess_red.floor),
        max(guess_blue.height, 1e-3 * guess_blue.floor),
    ])
    typical = np.array([lead.fwhm, lead.fwhm, 1.0, 1.0, 1.0, 1.0])

    damping = 1e-3
    converged = False
    for iteration in range(1, settings.max_iterations + 1):
        mu = np.concatenate(sideband_pair_model(theta, f_red, f_blue))
        w = _weights(mu, n_avg, settings.weighting)
        resid = y - mu
        cost = float(np.sum(w * resid * resid))
        jac = sideband_pair_jacobian(theta, f_red, f_blue)
        hess = jac.T @ (w[:, None] * jac)
        grad = jac.T @ (w * resid)
        diag = np.sqrt(np.diag(hess))
        diag[diag == 0] = 1.0
        hess_n = hess / np.outer(diag, diag)
        grad_n = grad / diag

        while damping <= _MAX_DAMPING:
            step = linalg.solve(hess_n + damping * np.eye(6), grad_n,
                                assume_a='sym') / diag
            trial = theta + step
            trial[4:] = np.maximum(trial[4:], 0.0)
            if _valid(trial):
                mu_t = np.concatenate(sideband_pair_model(trial, f_red, f_blue))
                r_t = y - mu_t
                if np.sum(w * r_t * r_t) <= cost * (1 + 1e-14):
                    damping = max(damping / 10.0, 1e-12)
                    break
            damping *= 10.0
        else:
            # no acceptable step at any damping: a minimum on this metric
            converged = True
            break

        change = np.abs(trial - theta)
        theta = trial
        if np.all(change <= settings.xtol * np.maximum(np.abs(theta), typical)):
            converged = True
            break

    if not converged:
        raise NonConvergenceError(
            f"sideband fit did not converge in {settings.max_iterations} "
            f"iterations")

    lo, hi = fit_range
    if not lo <= theta[0] <= hi:
        raise DegenerateFitError(f"fitted centre {theta[0]:.6g} Hz lies "
                                 f"outside the fit range {fit_range}")

    mu = np.concatenate(sideband_pair_model(theta, f_red, f_blue))
    w = _weights(mu, n_avg, settings.weighting)
    resid = y - mu
    chi2 = float(np.sum(w * resid * resid))
    dof = max(len(y) - 6, 1)
    jac = sideband_pair_jacobian(theta, f_red, f_blue)
    try:
        cov = linalg.inv(jac.T @ (w[:, None] * jac)) * (chi2 / dof)
    except linalg.LinAlgError as e:
        raise DegenerateFitError(f"singular fit information matrix: {e}") from e
    cov = 0.5 * (cov + cov.T)

    unscale = np.array([1.0, 1.0, psd_scale, psd_scale, psd_scale, psd_scale])
    values = theta * unscale
    cov = cov * np.outer(unscale, unscale)

    sig = np.sqrt(np.clip(np.diag(cov)[4:], 0.0, None))
    strongest = max((values[4] / sig[0] if sig[0] > 0 else np.inf),
                    (values[5] / sig[1] if sig[1] > 0 else np.inf))
    if strongest < settings.min_significance:
        raise DegenerateFitError(f"fitted peak is not significant "
                                 f"(s/sigma = {strongest:.3g})")

    logger.info("fit converged in %d iterations: f=%.6f Hz, gamma=%.6g Hz, "
                "chi2_red=%.4g", iteration, values[0], values[1], chi2 / dof)
    return FitResult(
        *values,
        covariance=cov,
        fit_range=fit_range,
        residual_norm=float(np.sqrt(np.sum(resid * resid))) * psd_scale,
        reduced_chi2=chi2 / dof,
        n_avg=n_avg,
        n_iterations=iteration,
        units=red.units,
        weighting=settings.weighting,
    )


@dataclass(frozen=True)
class AreaPair:
    """Sideband areas ``A = gamma s / 4`` and their 2x2 covariance."""
    a_red: float
    a_blue: float
    covariance: np.ndarray

    @property
    def sigma_red(self) -> float:
        return float(np.sqrt(max(self.covariance[0, 0], 0.0)))

    @property
    def sigma_blue(self) -> float:
        return float(np.sqrt(max(self.covariance[1, 1], 0.0)))


def areas(fit: FitResult) -> AreaPair:
    """Sideband areas with first-order propagated covariance."""
    gamma, s_red, s_blue = fit.gamma_tilde, fit.s_red, fit.s_blue
    grad = np.zeros((2, 6))
    grad[0, 1] = 0.25 * s_red
    grad[0, 4] = 0.25 * gamma
    grad[1, 1] = 0.25 * s_blue
    grad[1, 5] = 0.25 * gamma
    return AreaPair(
        a_red=0.25 * gamma * s_red,
        a_blue=0.25 * gamma * s_blue,
        covariance=grad @ fit.covariance @ grad.T,
    )
