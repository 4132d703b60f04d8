# This code is part of optotherm and is licensed under the MIT license.
import math

import numpy as np
import pytest

from optotherm.dynamics import effective_mode, phonon_balance
from optotherm.errors import FlatObjectiveError, InsufficientDataError
from optotherm.inference import (
    AlphaFitResult,
    AlphaPoint,
    CalibrationPoint,
    CalibrationResult,
    calibrate_g0_and_detuning,
    fit_alpha,
    fit_sidebands,
)
from optotherm.settings import (
    BeamRole,
    EstimationSettings,
    FitSettings,
    ThermometrySettings,
)
from optotherm.settings.models import TWO_PI
from optotherm.sweep import thermo_model

from .conftest import noiseless_pair, device_beams
from .test_tokenization import TokenizableTestsMixin

POWERS = [0.0, 100e-6, 250e-6, 415e-6]


def planted_alpha_points(params, grid, alpha, powers=POWERS):
    """Noiseless fits whose occupancies follow the damping balance at
    ``T_bath = alpha T_stage + (1 - alpha) T_pot``"""
    thermometry = ThermometrySettings()
    points = []
    for p_cl in powers:
        beams = device_beams(p_cl=p_cl)
        t_pot, t_stage = thermo_model(p_cl, thermometry)
        t_bath = alpha * t_stage + (1.0 - alpha) * t_pot
        n_bar = phonon_balance(params, effective_mode(params, beams), t_bath)
        red, blue = noiseless_pair(params, beams, n_bar, grid)
        fit = fit_sidebands(red, blue, settings=FitSettings(xtol=1e-12))
        points.append(AlphaPoint(fit, beams, t_pot, t_stage))
    return points


def planted_calibration_points(params, probe_detuning_hz=-6.5e3,
                               powers=(0.0, 60e-6, 158e-6, 300e-6, 415e-6)):
    points = []
    for p_cl in powers:
        mode = effective_mode(params, device_beams(
            p_cl=p_cl, probe_detuning_hz=probe_detuning_hz))
        points.append(CalibrationPoint(p_cl, mode.omega_tilde / TWO_PI,
                                       mode.gamma_tilde / TWO_PI))
    return points


@pytest.fixture
def alpha_points(params, fit_grid):
    return planted_alpha_points(params, fit_grid, 0.498)


class TestAlphaFitResult(TokenizableTestsMixin):

    cls = AlphaFitResult

    @pytest.fixture
    def instance(self):
        return AlphaFitResult(alpha=0.5, objective=1e-3, n_points=4)


class TestCalibrationResult(TokenizableTestsMixin):

    cls = CalibrationResult

    @pytest.fixture
    def instance(self):
        return CalibrationResult(g0=TWO_PI * 2.2, probe_detuning=-TWO_PI * 6.5e3,
                                 g0_sigma=0.01, probe_detuning_sigma=100.0,
                                 cost=0.0, n_points=5)


class TestFitAlpha:
    def test_recovers_planted_alpha(self, params, alpha_points):
        result = fit_alpha(alpha_points, params)
        assert result.alpha == pytest.approx(0.498, abs=0.02)
        assert result.alpha == pytest.approx(0.498, abs=1e-3)
        assert result.n_points == 4
        assert result.reference == 'asymmetry'
        assert result.objective >= 0
        assert 0 < result.alpha_sigma < math.inf

    def test_alpha_sigma_from_bath_uncertainty(self, params, alpha_points):
        # noiseless fits leave only the bath temperature spread, so
        # sigma_alpha = sigma_T / sqrt(sum (T_stage - T_pot)^2)
        settings = EstimationSettings(t_bath_sigma=0.01)
        result = fit_alpha(alpha_points, params, settings)
        spread = np.array([p.t_stage - p.t_pot for p in alpha_points])
        expected = 0.01 / np.sqrt(np.sum(spread ** 2))
        assert result.alpha == pytest.approx(0.498, abs=1e-3)
        assert result.alpha_sigma == pytest.approx(expected, rel=1e-3)
        assert result.objective == pytest.approx(0.0, abs=1e-3)

    def test_blue_area_reference(self, params, alpha_points):
        settings = EstimationSettings(alpha_reference='blue_area')
        result = fit_alpha(alpha_points, params, settings)
        assert result.alpha == pytest.approx(0.498, abs=1e-3)
        assert result.reference == 'blue_area'

    @pytest.mark.parametrize('alpha', [0.0, 1.0])
    def test_boundary_alpha(self, params, fit_grid, alpha):
        points = planted_alpha_points(params, fit_grid, alpha,
                                      powers=[0.0, 415e-6])
        assert fit_alpha(points, params).alpha == pytest.approx(alpha,
                                                                abs=1e-3)

    def test_flat_objective(self, params, alpha_points):
        flat = [p._replace(t_stage=p.t_pot) for p in alpha_points]
        with pytest.raises(FlatObjectiveError):
            fit_alpha(flat, params)

    def test_single_power(self, params, alpha_points):
        with pytest.raises(InsufficientDataError):
            fit_alpha(alpha_points[:1], params)
        with pytest.raises(InsufficientDataError):
            fit_alpha([alpha_points[1], alpha_points[1]], params)


class TestCalibrateG0AndDetuning:
    def test_recovers_planted_values(self, params):
        points = planted_calibration_points(params)
        probe = device_beams(probe_detuning_hz=-4e3)[0]
        start = params.copy(update={'g0': TWO_PI * 1.8})
        result = calibrate_g0_and_detuning(points, start, probe)
        assert result.g0 / TWO_PI == pytest.approx(2.2, rel=0.01)
        assert result.probe_detuning / TWO_PI == pytest.approx(-6.5e3,
                                                               rel=0.05)
        assert result.n_points == 5

    def test_explicit_initial_guess(self, params):
        points = planted_calibration_points(params)
        probe = device_beams()[0]
        result = calibrate_g0_and_detuning(
            points, params, probe, initial=(TWO_PI * 2.6, -TWO_PI * 9e3))
        assert result.g0 / TWO_PI == pytest.approx(2.2, rel=0.01)
        assert result.probe_detuning / TWO_PI == pytest.approx(-6.5e3,
                                                               rel=0.05)

    def test_resonant_probe(self, params):
        points = planted_calibration_points(params, probe_detuning_hz=0.0)
        probe = device_beams(probe_detuning_hz=-2e3)[0]
        result = calibrate_g0_and_detuning(points, params, probe)
        assert result.g0 / TWO_PI == pytest.approx(2.2, rel=0.01)
        assert abs(result.probe_detuning / TWO_PI) < 100.0

    def test_cooling_template(self, params):
        points = planted_calibration_points(params)
        beams = device_beams()
        cooling = beams[1]
        assert cooling.role is BeamRole.COOLING
        result = calibrate_g0_and_detuning(points, params, beams[0], cooling)
        assert result.g0 / TWO_PI == pytest.approx(2.2, rel=1e-3)

    def test_with_sigmas(self, params):
        points = [p._replace(omega_sigma_hz=1.0, gamma_sigma_hz=2.0)
                  for p in planted_calibration_points(params)]
        result = calibrate_g0_and_detuning(points, params, device_beams()[0])
        assert result.g0 / TWO_PI == pytest.approx(2.2, rel=1e-3)
        assert result.g0_sigma > 0

    @pytest.mark.parametrize('powers', [
        (60e-6, 158e-6, 300e-6, 415e-6),
        (0.0, 158e-6, 415e-6),
        (0.0, 415e-6, 415e-6, 415e-6),
    ])
    def test_insufficient_points(self, params, powers):
        points = planted_calibration_points(params, powers=powers)
        with pytest.raises(InsufficientDataError):
            calibrate_g0_and_detuning(points, params, device_beams()[0])
