# This code is part of optotherm and is licensed under the MIT license.
import importlib.resources

import pytest

from optotherm.dynamics import effective_mode
from optotherm.settings import (
    BeamConfig,
    BeamRole,
    FitSettings,
    GridSettings,
    NoiseSettings,
    RunConfig,
    SystemParams,
    default_beams,
)
from optotherm.settings.models import TWO_PI
from optotherm.spectra import frequency_grid, model_sxx


def get_data_filename(filename):
    with importlib.resources.path('optotherm.data', filename) as file:
        return str(file)


def device_beams(*, p_cl=415e-6, probe_power=32e-6, probe_detuning_hz=-6.5e3):
    """Probe, cooling and LO beams at the published operating point"""
    return [
        BeamConfig(role=BeamRole.PROBE, power=probe_power,
                   detuning=TWO_PI * probe_detuning_hz),
        BeamConfig(role=BeamRole.COOLING, power=p_cl,
                   detuning=-TWO_PI * 705.2e3),
        BeamConfig(role=BeamRole.LOCAL_OSCILLATOR, power=1.57e-3),
    ]


def noiseless_pair(params, beams, n_bar, freqs, contaminants=()):
    mode = effective_mode(params, beams)
    return (model_sxx(params, mode, n_bar, 'red', freqs, contaminants),
            model_sxx(params, mode, n_bar, 'blue', freqs, contaminants))


@pytest.fixture
def device_cfg():
    return get_data_filename("paper.cfg")


@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def beams():
    return default_beams()


@pytest.fixture
def fit_grid():
    """Grid just wider than the default fit window"""
    return frequency_grid(700e3, 716e3, 2.0)


@pytest.fixture
def device_pair(params, beams, fit_grid):
    """Noiseless red/blue pair at n = 0.84"""
    return noiseless_pair(params, beams, 0.84, fit_grid)


@pytest.fixture
def small_config():
    """A quick sweep: narrow grid, four cooling powers, noiseless"""
    return RunConfig(
        grid=GridSettings(start_hz=700e3, stop_hz=716e3, step_hz=2.0),
        noise=NoiseSettings(seed=3, n_avg=100, noiseless=True),
        fit=FitSettings(),
        contaminants=[],
        sweep_powers=[0.0, 100e-6, 250e-6, 415e-6],
    )


@pytest.fixture
def noisy_config(small_config):
    return small_config.copy(update={
        'noise': NoiseSettings(seed=11, n_avg=100, noiseless=False)})
