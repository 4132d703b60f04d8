# This code is part of optotherm and is licensed under the MIT license.
import numpy as np
import pytest

from optotherm.dynamics import effective_mode
from optotherm.errors import DegenerateFitError, NonConvergenceError
from optotherm.inference import FitResult, fit_sidebands
from optotherm.inference.fitting import (
    PARAMETER_NAMES,
    areas,
    sideband_pair_jacobian,
    sideband_pair_model,
)
from optotherm.params import zero_point_amplitude
from optotherm.settings import FitSettings, NoiseSettings
from optotherm.settings.models import TWO_PI
from optotherm.spectra import SidebandSpectrum, SpectrumUnits, frequency_grid
from optotherm.synth import synthesize

from .test_tokenization import TokenizableTestsMixin

TIGHT = FitSettings(xtol=1e-12)


def _lorentz_pair(theta, freqs, side_units=SpectrumUnits.DISPLACEMENT):
    red, blue = sideband_pair_model(theta, freqs, freqs)
    return (SidebandSpectrum('red', freqs, red, units=side_units),
            SidebandSpectrum('blue', freqs, blue, units=side_units))


@pytest.fixture
def theta():
    return np.array([708.3e3, 850.0, 2.0, 2.5, 30.0, 12.0])


@pytest.fixture
def grid():
    return frequency_grid(700e3, 716e3, 2.0)


class TestFitResult(TokenizableTestsMixin):

    cls = FitResult

    @pytest.fixture
    def instance(self):
        cov = np.diag([1.0, 4.0, 1e-4, 1e-4, 0.01, 0.01])
        return FitResult(705.2e3, 5.4e3, 1.0, 1.1, 3.0, 1.5, covariance=cov,
                         fit_range=(702e3, 714e3), residual_norm=0.1,
                         reduced_chi2=1.02, n_avg=100, n_iterations=7)

    def test_accessors(self, instance):
        assert instance.omega_tilde == 705.2e3
        assert instance.sigma('gamma_tilde') == 2.0
        assert instance.values.shape == (6,)
        assert instance.fit_range == (702e3, 714e3)
        assert instance.units is SpectrumUnits.DISPLACEMENT

    def test_invalid(self):
        with pytest.raises(ValueError, match="6x6"):
            FitResult(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, covariance=np.eye(5),
                      fit_range=(0, 2), residual_norm=0.0)
        with pytest.raises(ValueError, match="symmetric"):
            cov = np.eye(6)
            cov[0, 1] = 0.5
            FitResult(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, covariance=cov,
                      fit_range=(0, 2), residual_norm=0.0)
        with pytest.raises(ValueError, match="gamma_tilde"):
            FitResult(1.0, 0.0, 1.0, 1.0, 1.0, 1.0, covariance=np.eye(6),
                      fit_range=(0, 2), residual_norm=0.0)


def test_jacobian_matches_finite_differences(theta, grid):
    freqs = grid[3900:4400]
    jac = sideband_pair_jacobian(theta, freqs, freqs)
    for j in range(6):
        # central differences with a relative step are good to ~(h/gamma)^2
        h = 1e-7 * abs(theta[j])
        up, down = theta.copy(), theta.copy()
        up[j] += h
        down[j] -= h
        numeric = (np.concatenate(sideband_pair_model(up, freqs, freqs))
                   - np.concatenate(sideband_pair_model(down, freqs, freqs))) / (2 * h)
        np.testing.assert_allclose(jac[:, j], numeric, rtol=1e-6,
                                   atol=1e-10 * np.max(np.abs(jac[:, j])))


def test_recovers_lorentzian_pair(theta, grid):
    red, blue = _lorentz_pair(theta, grid)
    fit = fit_sidebands(red, blue, settings=TIGHT)
    np.testing.assert_allclose(fit.values, theta, rtol=1e-6)
    assert fit.fit_range == (702e3, 714e3)
    assert fit.n_iterations >= 1


def test_recovers_device_pair(params, beams, device_pair):
    mode = effective_mode(params, beams)
    fit = fit_sidebands(*device_pair, settings=TIGHT)
    assert fit.omega_tilde == pytest.approx(mode.omega_tilde / TWO_PI, rel=1e-6)
    assert fit.gamma_tilde == pytest.approx(mode.gamma_tilde / TWO_PI, rel=1e-6)
    pair = areas(fit)
    unit = 2 * zero_point_amplitude(params) ** 2
    assert pair.a_blue == pytest.approx(0.84 * unit, rel=1e-6)
    assert pair.a_red == pytest.approx(1.84 * unit, rel=1e-6)
    assert pair.a_blue == pytest.approx(4.649378e-31, rel=1e-5)


def test_uniform_weighting(theta, grid):
    red, blue = _lorentz_pair(theta, grid)
    fit = fit_sidebands(red, blue,
                        settings=FitSettings(weighting='uniform', xtol=1e-12))
    np.testing.assert_allclose(fit.values, theta, rtol=1e-6)
    assert fit.weighting == 'uniform'


def test_explicit_fit_range(theta, grid):
    red, blue = _lorentz_pair(theta, grid)
    fit = fit_sidebands(red, blue, fit_range=(704e3, 713e3), settings=TIGHT)
    assert fit.fit_range == (704e3, 713e3)
    assert fit.omega_tilde == pytest.approx(theta[0], rel=1e-9)


@pytest.mark.parametrize('factor', [4.0, 0.25, 2.0 ** -100])
def test_power_of_two_scaling_is_exact(theta, grid, factor):
    red, blue = _lorentz_pair(theta, grid)
    base = fit_sidebands(red, blue)
    scaled = fit_sidebands(red.scaled(factor), blue.scaled(factor))
    assert scaled.omega_tilde == base.omega_tilde
    assert scaled.gamma_tilde == base.gamma_tilde
    np.testing.assert_array_equal(scaled.values[2:], factor * base.values[2:])


def test_general_scaling(theta, grid):
    # not a power of two: equal only to the solver tolerance
    red, blue = _lorentz_pair(theta, grid)
    base = fit_sidebands(red, blue, settings=TIGHT)
    scaled = fit_sidebands(red.scaled(3.7), blue.scaled(3.7), settings=TIGHT)
    assert scaled.omega_tilde == pytest.approx(base.omega_tilde, rel=1e-10)
    assert scaled.gamma_tilde == pytest.approx(base.gamma_tilde, rel=1e-8)
    np.testing.assert_allclose(scaled.values[2:], 3.7 * base.values[2:],
                               rtol=1e-8)


def test_noisy_fit_covers_truth(theta, grid):
    red, blue = _lorentz_pair(theta, grid)
    settings = NoiseSettings(seed=2024, n_avg=100)
    fit = fit_sidebands(synthesize(red, settings), synthesize(blue, settings))
    for j, name in enumerate(PARAMETER_NAMES):
        assert abs(fit.values[j] - theta[j]) < 5 * fit.sigma(name), name
    assert fit.reduced_chi2 == pytest.approx(1.0, abs=0.1)
    assert fit.n_avg == 100


def test_covariance_symmetric(theta, grid):
    red, blue = _lorentz_pair(theta, grid)
    settings = NoiseSettings(seed=5, n_avg=100)
    fit = fit_sidebands(synthesize(red, settings), synthesize(blue, settings))
    np.testing.assert_array_equal(fit.covariance, fit.covariance.T)
    assert np.all(np.linalg.eigvalsh(fit.covariance) > 0)


def test_flat_spectrum_is_degenerate(grid):
    flat = np.full(len(grid), 1.0)
    with pytest.raises(DegenerateFitError, match="no peak"):
        fit_sidebands(SidebandSpectrum('red', grid, flat),
                      SidebandSpectrum('blue', grid, flat))


def test_peak_at_window_edge(grid):
    theta = np.array([702.05e3, 40.0, 1.0, 1.0, 50.0, 20.0])
    red, blue = _lorentz_pair(theta, grid)
    with pytest.raises(DegenerateFitError, match="edge"):
        fit_sidebands(red, blue)


def test_too_few_bins(theta, grid):
    red, blue = _lorentz_pair(theta, grid)
    with pytest.raises(DegenerateFitError, match="fewer than 10"):
        fit_sidebands(red, blue, fit_range=(708e3, 708.01e3))


def test_iteration_cap(theta, grid):
    red, blue = _lorentz_pair(theta, grid)
    settings = FitSettings(max_iterations=1, xtol=1e-14)
    with pytest.raises(NonConvergenceError):
        fit_sidebands(red, blue, settings=settings)


def test_argument_checks(theta, grid):
    red, blue = _lorentz_pair(theta, grid)
    with pytest.raises(ValueError, match=r"\(red, blue\)"):
        fit_sidebands(blue, red)
    sii = SidebandSpectrum('blue', grid, blue.psd,
                           units=SpectrumUnits.PHOTOCURRENT)
    with pytest.raises(ValueError, match="share units"):
        fit_sidebands(red, sii)
    coarse = frequency_grid(700e3, 716e3, 4.0)
    blue_coarse = SidebandSpectrum(
        'blue', coarse, sideband_pair_model(theta, coarse, coarse)[1])
    with pytest.raises(ValueError, match="spacings differ"):
        fit_sidebands(red, blue_coarse)


def test_photocurrent_units_carried(theta, grid):
    red, blue = _lorentz_pair(theta, grid, SpectrumUnits.PHOTOCURRENT)
    fit = fit_sidebands(red, blue)
    assert fit.units is SpectrumUnits.PHOTOCURRENT


def test_areas_propagation():
    cov = np.zeros((6, 6))
    cov[1, 1] = 4.0
    cov[4, 4] = 0.01
    fit = FitResult(705e3, 100.0, 1.0, 1.0, 8.0, 4.0, covariance=cov,
                    fit_range=(700e3, 710e3), residual_norm=0.0)
    pair = areas(fit)
    assert pair.a_red == 200.0
    assert pair.a_blue == 100.0
    # var(A_red) = (s/4)^2 var(gamma) + (gamma/4)^2 var(s_red)
    assert pair.sigma_red == pytest.approx(np.sqrt(4.0 * 4.0 + 625.0 * 0.01))
    assert pair.sigma_blue == pytest.approx(np.sqrt(1.0 * 4.0))
    assert pair.covariance[0, 1] == pytest.approx(2.0 * 1.0 * 4.0)
