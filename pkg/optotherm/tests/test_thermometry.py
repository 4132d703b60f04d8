# This code is part of optotherm and is licensed under the MIT license.
import pytest

from optotherm.errors import ExtrapolationError
from optotherm.settings import SystemParams, ThermometrySettings
from optotherm.sweep import thermo_model


@pytest.fixture
def table():
    return ThermometrySettings(kind='table',
                               table_power=[0.0, 100e-6, 400e-6],
                               table_t_pot=[0.5, 0.6, 0.9],
                               table_t_stage=[0.6, 0.75, 1.2])


def test_affine_defaults():
    t_pot, t_stage = thermo_model(415e-6, ThermometrySettings())
    assert t_pot == pytest.approx(0.53492844224 + 800.0 * 415e-6)
    assert t_stage == pytest.approx(0.63492844224 + 1200.0 * 415e-6)
    assert t_pot < t_stage


def test_affine_matches_default_system():
    params = SystemParams()
    t_pot, t_stage = thermo_model(415e-6, ThermometrySettings())
    assert (t_pot, t_stage) == pytest.approx((params.t_pot, params.t_stage))
    bath = params.alpha * t_stage + (1 - params.alpha) * t_pot
    assert bath == pytest.approx(params.t_bath)
    assert bath == pytest.approx(0.9994, abs=5e-4)


@pytest.mark.parametrize('p_cl,expected', [
    (0.0, (0.5, 0.6)),
    (50e-6, (0.55, 0.675)),
    (250e-6, (0.75, 0.975)),
    (400e-6, (0.9, 1.2)),
])
def test_table_interpolation(table, p_cl, expected):
    assert thermo_model(p_cl, table) == pytest.approx(expected)


@pytest.mark.parametrize('p_cl', [401e-6, 1e-3])
def test_table_never_extrapolates(table, p_cl):
    with pytest.raises(ExtrapolationError, match="outside"):
        thermo_model(p_cl, table)


def test_negative_power():
    with pytest.raises(ValueError, match=">= 0"):
        thermo_model(-1e-6, ThermometrySettings())


@pytest.mark.parametrize('kwargs', [
    {'t_pot_offset': 0.7},
    {'t_pot_slope': 2000.0},
    {'kind': 'table'},
    {'kind': 'table', 'table_power': [0.0, 1e-4], 'table_t_pot': [0.5],
     'table_t_stage': [0.6, 0.7]},
    {'kind': 'table', 'table_power': [1e-4, 0.0], 'table_t_pot': [0.5, 0.6],
     'table_t_stage': [0.6, 0.7]},
    {'kind': 'table', 'table_power': [0.0], 'table_t_pot': [0.7],
     'table_t_stage': [0.6]},
])
def test_invalid_settings(kwargs):
    with pytest.raises(ValueError):
        ThermometrySettings(**kwargs)
