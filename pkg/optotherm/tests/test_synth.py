# This code is part of optotherm and is licensed under the MIT license.
import numpy as np
import pytest

from optotherm import synth
from optotherm.errors import NonPositiveModelError
from optotherm.settings import NoiseSettings
from optotherm.spectra import SidebandSpectrum, frequency_grid
from optotherm.synth import point_seed, synthesize


@pytest.fixture
def flat_model():
    freqs = frequency_grid(700e3, 720e3, 2.0)
    return SidebandSpectrum('red', freqs, np.full(len(freqs), 3.0e-30))


def test_deterministic(device_pair):
    red = device_pair[0]
    settings = NoiseSettings(seed=42, n_avg=100)
    first = synthesize(red, settings)
    second = synthesize(red, settings)
    np.testing.assert_array_equal(first.psd, second.psd)
    assert first == second


def test_seed_changes_output(device_pair):
    red = device_pair[0]
    a = synthesize(red, NoiseSettings(seed=1))
    b = synthesize(red, NoiseSettings(seed=2))
    assert not np.array_equal(a.psd, b.psd)


def test_sides_use_distinct_streams(flat_model):
    blue = SidebandSpectrum('blue', flat_model.freqs, flat_model.psd)
    settings = NoiseSettings(seed=5)
    assert not np.array_equal(synthesize(flat_model, settings).psd,
                              synthesize(blue, settings).psd)


@pytest.mark.parametrize('n_jobs', [2, 4])
def test_independent_of_worker_count(flat_model, n_jobs):
    settings = NoiseSettings(seed=7, n_avg=10)
    serial = synthesize(flat_model, settings, n_jobs=1)
    parallel = synthesize(flat_model, settings, n_jobs=n_jobs)
    np.testing.assert_array_equal(serial.psd, parallel.psd)


def test_chunks_are_keyed_by_position(flat_model, monkeypatch):
    settings = NoiseSettings(seed=7, n_avg=10)
    reference = synthesize(flat_model, settings).psd
    # a shorter spectrum shares the leading chunks of the longer one
    head = SidebandSpectrum('red', flat_model.freqs[:5000],
                            flat_model.psd[:5000])
    np.testing.assert_array_equal(synthesize(head, settings).psd,
                                  reference[:5000])
    monkeypatch.setattr(synth, 'CHUNK_SIZE', 1000)
    assert not np.array_equal(synthesize(flat_model, settings).psd, reference)


def test_noiseless_passthrough(device_pair):
    red = device_pair[0]
    out = synthesize(red, NoiseSettings(seed=3, n_avg=25, noiseless=True))
    np.testing.assert_array_equal(out.psd, red.psd)
    assert out.n_avg == 25
    assert out.metadata['noiseless'] is True
    assert out.metadata['n_bar'] == 0.84


def test_metadata(device_pair):
    out = synthesize(device_pair[1], NoiseSettings(seed=9, n_avg=50))
    assert out.metadata['seed'] == 9
    assert out.metadata['n_avg'] == 50
    assert out.side is device_pair[1].side
    assert out.units is device_pair[1].units


def test_nonpositive_model(flat_model):
    psd = flat_model.psd.copy()
    psd[17] = 0.0
    model = flat_model.copy_with_replacements(psd=psd)
    with pytest.raises(NonPositiveModelError, match="bin 17"):
        synthesize(model, NoiseSettings())


def test_single_periodogram_is_exponential():
    freqs = frequency_grid(1.0, 1e5, 1.0)
    model = SidebandSpectrum('blue', freqs, np.full(len(freqs), 2.0))
    out = synthesize(model, NoiseSettings(seed=123, n_avg=1))
    # exponential with mean 2: sigma of the sample mean is 2 / sqrt(N)
    tolerance = 3 * 2.0 / np.sqrt(len(freqs))
    assert abs(out.psd.mean() - 2.0) < tolerance
    assert np.all(out.psd >= 0)


@pytest.mark.parametrize('n_avg', [10, 100])
def test_variance_law(n_avg):
    freqs = frequency_grid(1.0, 1e5, 1.0)
    model = SidebandSpectrum('red', freqs, np.ones(len(freqs)))
    out = synthesize(model, NoiseSettings(seed=321, n_avg=n_avg))
    rel_var = out.psd.var()
    # the sample variance has a relative spread of a few 1e-3 here
    assert rel_var == pytest.approx(1.0 / n_avg, rel=0.03)
    assert out.psd.mean() == pytest.approx(1.0, abs=5 / np.sqrt(n_avg * len(freqs)))


def test_large_average_converges(flat_model):
    out = synthesize(flat_model, NoiseSettings(seed=1, n_avg=1_000_000))
    np.testing.assert_allclose(out.psd, flat_model.psd, rtol=6e-3)


class TestPointSeed:
    def test_stable(self):
        assert point_seed(0, 3) == point_seed(0, 3)

    def test_distinct(self):
        seeds = {point_seed(0, i) for i in range(20)}
        assert len(seeds) == 20
        assert point_seed(0, 1) != point_seed(1, 1)

    def test_nonnegative_int(self):
        seed = point_seed(12345, 7)
        assert isinstance(seed, int)
        assert seed >= 0
