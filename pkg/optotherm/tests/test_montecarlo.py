# This code is part of optotherm and is licensed under the MIT license.
"""Many-seed statistical checks of the synthesis, the estimators and the
sweep calibrations. These are the slowest tests; deselect them with
``-m "not slow"``."""
import itertools

import numpy as np
import pytest

from optotherm.dynamics import effective_mode, solve_bath_temperature
from optotherm.inference import (
    EstimateMethod,
    estimate_area,
    estimate_asymmetry,
    estimate_covariance,
    estimate_damping,
    fit_sidebands,
)
from optotherm.settings import (
    GridSettings,
    NoiseSettings,
    RunConfig,
    SystemParams,
    default_beams,
)
from optotherm.spectra import SidebandSpectrum, frequency_grid
from optotherm.sweep import execute_sweep
from optotherm.synth import CHUNK_SIZE, synthesize

from .conftest import noiseless_pair

pytestmark = pytest.mark.slow

N_SEEDS = 100
N_BAR = 0.84


@pytest.fixture(scope='module')
def ensemble():
    """Four estimates, their joint covariance and the fit linewidth for
    ``N_SEEDS`` noisy pairs at the published operating point"""
    params = SystemParams()
    beams = default_beams()
    mode = effective_mode(params, beams)
    t_bath = solve_bath_temperature(params, mode, N_BAR)
    red, blue = noiseless_pair(params, beams, N_BAR,
                               frequency_grid(700e3, 716e3, 2.0))
    n_bars, sigmas, covs, gammas, gamma_sigmas = [], [], [], [], []
    for seed in range(N_SEEDS):
        settings = NoiseSettings(seed=seed, n_avg=100)
        fit = fit_sidebands(synthesize(red, settings),
                            synthesize(blue, settings))
        estimates = [estimate_asymmetry(fit, params, beams[0]),
                     estimate_area(fit, params, 'red'),
                     estimate_area(fit, params, 'blue'),
                     estimate_damping(fit, params, beams, t_bath)]
        n_bars.append([e.n_bar for e in estimates])
        sigmas.append([e.sigma for e in estimates])
        covs.append(estimate_covariance(fit, params, beams, t_bath))
        gammas.append(fit.gamma_tilde)
        gamma_sigmas.append(fit.sigma('gamma_tilde'))
    return {
        'n_bar': np.array(n_bars),
        'sigma': np.array(sigmas),
        'cov': np.array(covs),
        'gamma': np.array(gammas),
        'gamma_sigma': np.array(gamma_sigmas),
        'true_gamma': mode.gamma_tilde / (2 * np.pi),
    }


class TestEstimatorEnsemble:
    def test_means_are_unbiased(self, ensemble):
        n_bar = ensemble['n_bar']
        for column, method in enumerate(EstimateMethod):
            values = n_bar[:, column]
            tolerance = 5 * values.std(ddof=1) / np.sqrt(N_SEEDS)
            assert abs(values.mean() - N_BAR) < tolerance, method

    def test_reported_sigma_matches_scatter(self, ensemble):
        scatter = ensemble['n_bar'].std(axis=0, ddof=1)
        reported = np.sqrt(np.mean(ensemble['sigma'] ** 2, axis=0))
        for ratio, method in zip(scatter / reported, EstimateMethod):
            assert 1 / 1.3 < ratio < 1.3, method

    def test_linewidth_sigma_matches_scatter(self, ensemble):
        gamma = ensemble['gamma']
        ratio = gamma.std(ddof=1) / np.sqrt(np.mean(ensemble['gamma_sigma'] ** 2))
        assert 1 / 1.3 < ratio < 1.3
        tolerance = 5 * gamma.std(ddof=1) / np.sqrt(N_SEEDS)
        assert abs(gamma.mean() - ensemble['true_gamma']) < tolerance

    def test_covariance_diagonal_is_sigma(self, ensemble):
        diagonal = np.sqrt(np.diagonal(ensemble['cov'], axis1=1, axis2=2))
        np.testing.assert_allclose(diagonal, ensemble['sigma'], rtol=1e-8)

    def test_asymmetry_and_red_area_anticorrelated(self, ensemble):
        assert np.all(ensemble['cov'][:, 0, 1] < 0)
        # the ensemble agrees on the sign
        n_bar = ensemble['n_bar']
        assert np.corrcoef(n_bar[:, 0], n_bar[:, 1])[0, 1] < 0

    @pytest.mark.parametrize('i,j', list(itertools.combinations(range(4), 2)))
    def test_pairwise_consistency(self, ensemble, i, j):
        n_bar, cov = ensemble['n_bar'], ensemble['cov']
        combined = np.sqrt(cov[:, i, i] + cov[:, j, j] - 2 * cov[:, i, j])
        consistent = np.abs(n_bar[:, i] - n_bar[:, j]) <= 3 * combined
        assert consistent.mean() >= 0.95


class TestSynthesisStatistics:
    @pytest.fixture(scope='class')
    def draws(self):
        freqs = frequency_grid(1.0, 2e5, 1.0)
        model = SidebandSpectrum('red', freqs, np.ones(len(freqs)))
        return {m: synthesize(model, NoiseSettings(seed=77, n_avg=m)).psd
                for m in (1, 3, 10)}

    @pytest.mark.parametrize('n_avg', [1, 3, 10])
    def test_unbiased(self, draws, n_avg):
        values = draws[n_avg]
        tolerance = 5 / np.sqrt(n_avg * len(values))
        assert abs(values.mean() - 1.0) < tolerance

    def test_skewness(self, draws):
        # Gamma(M)/M has skewness 2/sqrt(M)
        values = draws[10]
        centred = values - values.mean()
        skew = np.mean(centred ** 3) / np.mean(centred ** 2) ** 1.5
        assert skew == pytest.approx(2 / np.sqrt(10), abs=0.05)

    @pytest.mark.parametrize('lag', [1, 2, CHUNK_SIZE])
    def test_no_autocorrelation(self, draws, lag):
        values = draws[10] - draws[10].mean()
        r = np.corrcoef(values[:-lag], values[lag:])[0, 1]
        assert abs(r) < 5 / np.sqrt(len(values))

    def test_sides_uncorrelated(self):
        freqs = frequency_grid(1.0, 2e5, 1.0)
        settings = NoiseSettings(seed=5, n_avg=10)
        red = synthesize(SidebandSpectrum('red', freqs, np.ones(len(freqs))),
                         settings).psd
        blue = synthesize(SidebandSpectrum('blue', freqs, np.ones(len(freqs))),
                          settings).psd
        r = np.corrcoef(red, blue)[0, 1]
        assert abs(r) < 5 / np.sqrt(len(freqs))

    def test_bin_mean_across_seeds(self):
        freqs = frequency_grid(700e3, 700.2e3, 2.0)
        model = SidebandSpectrum('blue', freqs,
                                 np.linspace(1.0, 3.0, len(freqs)))
        stack = np.array([synthesize(model, NoiseSettings(seed=s, n_avg=4)).psd
                          for s in range(2000)])
        ratio = stack.mean(axis=0) / model.psd
        # relative sigma of each bin mean is 1 / sqrt(4 * 2000)
        assert np.all(np.abs(ratio - 1.0) < 5 / np.sqrt(4 * 2000))


class TestNoisyAlphaRecovery:
    @pytest.fixture(scope='class')
    def results(self):
        base = RunConfig(grid=GridSettings(start_hz=700e3, stop_hz=716e3,
                                           step_hz=2.0),
                         contaminants=[])
        out = []
        for seed in range(20):
            config = base.copy(update={
                'noise': NoiseSettings(seed=seed, n_avg=100)})
            out.append(execute_sweep(config))
        return out

    def test_alpha_not_pinned_to_bounds(self, results):
        alphas = np.array([r.alpha.alpha for r in results])
        assert np.all((alphas > 0.3) & (alphas < 0.75))

    def test_alpha_recovered_on_average(self, results):
        alphas = np.array([r.alpha.alpha for r in results])
        assert abs(alphas.mean() - 0.498) < 0.05
        assert alphas.std(ddof=1) < 0.1

    def test_alpha_sigma_covers_truth(self, results):
        alphas = np.array([r.alpha.alpha for r in results])
        sigmas = np.array([r.alpha.alpha_sigma for r in results])
        assert np.all(np.isfinite(sigmas) & (sigmas > 0))
        assert np.mean(np.abs(alphas - 0.498) <= 3 * sigmas) >= 0.75

    def test_g0_recovered(self, results):
        g0 = np.array([r.calibration.g0 for r in results
                       if r.calibration is not None]) / (2 * np.pi)
        assert len(g0) >= 15
        assert np.all(np.isfinite(g0))
        assert np.median(g0) == pytest.approx(2.2, rel=0.1)
