# This code is part of optotherm and is licensed under the MIT license.
"""
Readers and writers for spectra, fits, estimates and sweeps.

Every writer produces byte-identical output for equal input: floats are
written in their shortest round-trip form, JSON keys are sorted, and files
are UTF-8 with ``\\n`` line endings.

Spectrum CSV::

    # side: "red"
    # units: "displacement"
    # n_avg: 100
    # metadata: {...}
    freq_hz,psd
    640000.0,1.234e-28
    ...
"""
from __future__ import annotations

import csv
import json
import logging
import math
from os import PathLike
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from .inference import (
    PARAMETER_NAMES,
    EstimateMethod,
    FitResult,
    PhononEstimate,
    areas,
    mode_temperature,
    sideband_asymmetry,
)
from .settings.models import TWO_PI
from .spectra import SidebandSpectrum
from .sweep import SweepRecord, SweepResult
from .tokenization import JSON_HANDLER
from .utils import ensure_filelike

logger = logging.getLogger(__name__)

PathOrFile = Union[PathLike, str, Any]

_HEADER_KEYS = ('side', 'units', 'n_avg', 'metadata')


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "nan"
    return repr(float(value))


def _dump_json(obj: Any) -> str:
    return JSON_HANDLER.serializer(obj, indent=2) + "\n"


def write_spectrum_csv(spectrum: SidebandSpectrum, fn: PathOrFile) -> None:
    """Write ``spectrum`` as a commented-header two-column CSV"""
    header = {
        'side': spectrum.side.value,
        'units': spectrum.units.value,
        'n_avg': spectrum.n_avg,
        'metadata': spectrum.metadata,
    }
    with ensure_filelike(fn, mode="w") as f:
        for key in _HEADER_KEYS:
            f.write(f"# {key}: {JSON_HANDLER.serializer(header[key])}\n")
        f.write("freq_hz,psd\n")
        for freq, psd in zip(spectrum.freqs, spectrum.psd):
            f.write(f"{_fmt(freq)},{_fmt(psd)}\n")


def read_spectrum_csv(fn: PathOrFile) -> SidebandSpectrum:
    """Read a spectrum written by :func:`write_spectrum_csv`

    Raises
    ------
    ValueError
        if the header or a data row is malformed
    """
    header: dict[str, Any] = {}
    freqs, psd = [], []
    with ensure_filelike(fn, mode="r") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith('#'):
                key, sep, value = line[1:].partition(':')
                if not sep:
                    raise ValueError(f"line {lineno}: malformed header {line!r}")
                header[key.strip()] = JSON_HANDLER.deserializer(value)
                continue
            if line == "freq_hz,psd":
                continue
            try:
                freq_text, psd_text = line.split(',')
                freqs.append(float(freq_text))
                psd.append(float(psd_text))
            except ValueError as e:
                raise ValueError(f"line {lineno}: malformed row {line!r}") from e

    if missing := {'side', 'units'} - set(header):
        raise ValueError(f"spectrum header lacks {sorted(missing)}")
    return SidebandSpectrum(side=header['side'], freqs=freqs, psd=psd,
                            n_avg=header.get('n_avg', 1),
                            units=header['units'],
                            metadata=header.get('metadata') or {})


def fit_summary(fit: FitResult) -> dict[str, Any]:
    """Flat JSON-ready form of a fit with ``_sigma`` fields and the areas"""
    sigmas = fit.sigmas
    out: dict[str, Any] = {}
    for name, value, sigma in zip(PARAMETER_NAMES, fit.values, sigmas):
        out[name] = float(value)
        out[f"{name}_sigma"] = float(sigma)
    pair = areas(fit)
    out.update({
        'a_red': pair.a_red,
        'a_red_sigma': pair.sigma_red,
        'a_blue': pair.a_blue,
        'a_blue_sigma': pair.sigma_blue,
        'covariance': fit.covariance.tolist(),
        'fit_range': list(fit.fit_range),
        'residual_norm': fit.residual_norm,
        'reduced_chi2': fit.reduced_chi2,
        'n_avg': fit.n_avg,
        'n_iterations': fit.n_iterations,
        'units': fit.units.value,
        'weighting': fit.weighting,
    })
    return out


def write_fit_json(fit: FitResult, fn: PathOrFile) -> None:
    with ensure_filelike(fn, mode="w") as f:
        f.write(_dump_json(fit_summary(fit)))


def read_fit_json(fn: PathOrFile) -> FitResult:
    """Rebuild a :class:`FitResult` from :func:`write_fit_json` output"""
    with ensure_filelike(fn, mode="r") as f:
        dct = json.load(f)
    return FitResult(
        *(dct[name] for name in PARAMETER_NAMES),
        covariance=dct['covariance'],
        fit_range=dct['fit_range'],
        residual_norm=dct['residual_norm'],
        reduced_chi2=dct.get('reduced_chi2', 1.0),
        n_avg=dct.get('n_avg', 1),
        n_iterations=dct.get('n_iterations', 0),
        units=dct.get('units', 'displacement'),
        weighting=dct.get('weighting', 'model'),
    )


def estimates_summary(estimates: Iterable[PhononEstimate],
                      omega: Optional[float] = None) -> dict[str, Any]:
    """``{method: {n_bar, n_bar_sigma, flag[, temperature]}}``"""
    out = {}
    for est in estimates:
        entry: dict[str, Any] = {'n_bar': est.n_bar,
                                 'n_bar_sigma': est.sigma,
                                 'flag': est.flag}
        if omega is not None:
            entry['temperature'] = mode_temperature(est, omega)
            entry['temperature_sigma'] = mode_temperature(est.sigma, omega)
        out[est.method.value] = entry
    return out


def write_estimates_json(estimates: Iterable[PhononEstimate], fn: PathOrFile,
                         *, fit: Optional[FitResult] = None,
                         omega: Optional[float] = None) -> None:
    """Write all estimates, plus the asymmetry when ``fit`` is given"""
    out: dict[str, Any] = {'estimates': estimates_summary(estimates, omega)}
    if fit is not None and fit.units.value == 'displacement':
        zeta, zeta_sigma = sideband_asymmetry(fit)
        out.update({'zeta': zeta, 'zeta_sigma': zeta_sigma})
    with ensure_filelike(fn, mode="w") as f:
        f.write(_dump_json(out))


def write_estimates_dat(estimates: Iterable[PhononEstimate],
                        fn: PathOrFile) -> None:
    """Whitespace-separated ``method n_bar n_bar_sigma`` table"""
    with ensure_filelike(fn, mode="w") as f:
        f.write("# method n_bar n_bar_sigma\n")
        for est in estimates:
            f.write(f"{est.method.value} {_fmt(est.n_bar)} {_fmt(est.sigma)}\n")


def calibration_summary(result: SweepResult) -> dict[str, Any]:
    """Alpha and g0/detuning of a sweep; frequencies in Hz, not rad/s"""
    out: dict[str, Any] = {'alpha': None, 'calibration': None}
    if (alpha := result.alpha) is not None:
        out['alpha'] = {'alpha': alpha.alpha,
                        'alpha_sigma': alpha.alpha_sigma,
                        'objective': alpha.objective,
                        'n_points': alpha.n_points,
                        'reference': alpha.reference}
    if (cal := result.calibration) is not None:
        out['calibration'] = {
            'g0_hz': cal.g0 / TWO_PI,
            'g0_hz_sigma': cal.g0_sigma / TWO_PI,
            'probe_detuning_hz': cal.probe_detuning / TWO_PI,
            'probe_detuning_hz_sigma': cal.probe_detuning_sigma / TWO_PI,
            'cost': cal.cost,
            'n_points': cal.n_points,
        }
    return out


def write_calibration_json(result: SweepResult, fn: PathOrFile) -> None:
    with ensure_filelike(fn, mode="w") as f:
        f.write(_dump_json(calibration_summary(result)))


def write_calibration_dat(result: SweepResult, fn: PathOrFile) -> None:
    """``name value sigma`` rows for alpha, g0/2pi and the probe detuning/2pi"""
    summary = calibration_summary(result)
    rows = []
    if summary['alpha'] is not None:
        rows.append(('alpha', summary['alpha']['alpha'],
                     summary['alpha']['alpha_sigma']))
    if (cal := summary['calibration']) is not None:
        rows.append(('g0_hz', cal['g0_hz'], cal['g0_hz_sigma']))
        rows.append(('probe_detuning_hz', cal['probe_detuning_hz'],
                     cal['probe_detuning_hz_sigma']))
    with ensure_filelike(fn, mode="w") as f:
        f.write("# name value sigma\n")
        for name, value, sigma in rows:
            f.write(f"{name} {_fmt(value)} {_fmt(sigma)}\n")


_METHODS = [m.value for m in EstimateMethod]

SWEEP_COLUMNS = [
    'index', 'p_cl', 't_pot', 't_stage', 't_bath',
    'omega_tilde', 'omega_tilde_sigma', 'gamma_tilde', 'gamma_tilde_sigma',
    'inv_a_red', 'inv_a_red_sigma', 'inv_a_blue', 'inv_a_blue_sigma',
    'zeta', 'zeta_sigma',
    *[f"n_bar_{m}" for m in _METHODS],
    *[f"n_bar_{m}_sigma" for m in _METHODS],
    'true_n_bar', 'true_omega_tilde', 'true_gamma_tilde',
    'true_inv_a_red', 'true_inv_a_blue', 'true_zeta',
    'error',
]


def _record_row(record: SweepRecord) -> dict[str, str]:
    row: dict[str, Optional[float]] = {
        'p_cl': record.p_cl, 't_pot': record.t_pot,
        't_stage': record.t_stage, 't_bath': record.t_bath,
        'inv_a_red': record.inv_a_red,
        'inv_a_red_sigma': record.inv_a_red_sigma,
        'inv_a_blue': record.inv_a_blue,
        'inv_a_blue_sigma': record.inv_a_blue_sigma,
        'zeta': record.zeta, 'zeta_sigma': record.zeta_sigma,
    }
    if (fit := record.fit) is not None:
        row.update(omega_tilde=fit.omega_tilde,
                   omega_tilde_sigma=fit.sigma('omega_tilde'),
                   gamma_tilde=fit.gamma_tilde,
                   gamma_tilde_sigma=fit.sigma('gamma_tilde'))
    for method in _METHODS:
        est = record.estimates.get(method)
        row[f"n_bar_{method}"] = est.n_bar if est else None
        row[f"n_bar_{method}_sigma"] = est.sigma if est else None
    truth = record.predicted
    for name, key in [('true_n_bar', 'n_bar'),
                      ('true_omega_tilde', 'omega_tilde_hz'),
                      ('true_gamma_tilde', 'gamma_tilde_hz'),
                      ('true_inv_a_red', 'inv_a_red'),
                      ('true_inv_a_blue', 'inv_a_blue'),
                      ('true_zeta', 'zeta')]:
        row[name] = truth.get(key)

    text = {key: _fmt(row.get(key)) for key in SWEEP_COLUMNS
            if key not in ('index', 'error')}
    text['index'] = str(record.index)
    text['error'] = record.error or ""
    return text


def write_sweep_csv(result: SweepResult, fn: PathOrFile) -> None:
    """One row per sweep point, in input order"""
    with ensure_filelike(fn, mode="w") as f:
        writer = csv.DictWriter(f, fieldnames=SWEEP_COLUMNS,
                                lineterminator="\n")
        writer.writeheader()
        for record in result.records:
            writer.writerow(_record_row(record))


def write_sweep_json(result: SweepResult, fn: PathOrFile) -> None:
    """Full dict form of the sweep, fits and covariances included"""
    with ensure_filelike(fn, mode="w") as f:
        f.write(_dump_json(result.to_dict()))


def read_sweep_json(fn: PathOrFile) -> SweepResult:
    with ensure_filelike(fn, mode="r") as f:
        return SweepResult.from_dict(JSON_HANDLER.deserializer(f.read()))


def _inverse(value: Optional[float]) -> Optional[float]:
    if value is None or value == 0 or math.isinf(value):
        return None
    return 1.0 / value


def _inverse_sigma(value: Optional[float], sigma: Optional[float]):
    if value is None or sigma is None or value == 0 or math.isinf(value):
        return None
    return sigma / value ** 2


PLOT_PANELS = {
    'temperatures': ['p_cl', 't_pot', 't_stage', 't_bath'],
    'linewidth': ['p_cl', 'gamma_tilde', 'gamma_tilde_sigma',
                  'true_gamma_tilde'],
    'inverse_areas': ['p_cl', 'inv_a_red', 'inv_a_red_sigma',
                      'true_inv_a_red', 'inv_a_blue', 'inv_a_blue_sigma',
                      'true_inv_a_blue'],
    'asymmetry': ['p_cl', 'zeta', 'zeta_sigma', 'true_zeta'],
    'inverse_n_bar': ['p_cl',
                      *[c for m in _METHODS
                        for c in (f"inv_n_bar_{m}", f"inv_n_bar_{m}_sigma")],
                      'true_inv_n_bar'],
}
"""Columns of each plot-data file; panels follow the cooling-sweep figure."""


def _panel_values(record: SweepRecord) -> dict[str, Optional[float]]:
    values: dict[str, Optional[float]] = {
        'p_cl': record.p_cl, 't_pot': record.t_pot,
        't_stage': record.t_stage, 't_bath': record.t_bath,
        'inv_a_red': record.inv_a_red,
        'inv_a_red_sigma': record.inv_a_red_sigma,
        'inv_a_blue': record.inv_a_blue,
        'inv_a_blue_sigma': record.inv_a_blue_sigma,
        'zeta': record.zeta, 'zeta_sigma': record.zeta_sigma,
    }
    if (fit := record.fit) is not None:
        values['gamma_tilde'] = fit.gamma_tilde
        values['gamma_tilde_sigma'] = fit.sigma('gamma_tilde')
    truth = record.predicted
    values['true_gamma_tilde'] = truth.get('gamma_tilde_hz')
    values['true_inv_a_red'] = truth.get('inv_a_red')
    values['true_inv_a_blue'] = truth.get('inv_a_blue')
    values['true_zeta'] = truth.get('zeta')
    values['true_inv_n_bar'] = _inverse(truth.get('n_bar'))
    for method in _METHODS:
        est = record.estimates.get(method)
        values[f"inv_n_bar_{method}"] = _inverse(est.n_bar if est else None)
        values[f"inv_n_bar_{method}_sigma"] = _inverse_sigma(
            est.n_bar if est else None, est.sigma if est else None)
    return values


def write_plot_data(result: SweepResult,
                    directory: Union[PathLike, str]) -> list[Path]:
    """Write one whitespace-separated text file per figure panel.

    Returns the written paths in panel order.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = [_panel_values(r) for r in result.records]
    paths = []
    for panel, columns in PLOT_PANELS.items():
        path = directory / f"{panel}.dat"
        with ensure_filelike(path, mode="w") as f:
            f.write("# " + " ".join(columns) + "\n")
            for row in rows:
                f.write(" ".join(_fmt(row.get(c)) for c in columns) + "\n")
        paths.append(path)
    return paths


def load_spectrum_pair(red: PathOrFile,
                       blue: PathOrFile) -> tuple[SidebandSpectrum, SidebandSpectrum]:
    """Read a red/blue pair and check that the sides are as labelled"""
    pair = read_spectrum_csv(red), read_spectrum_csv(blue)
    if (pair[0].side.value, pair[1].side.value) != ('red', 'blue'):
        raise ValueError(f"expected a red and a blue spectrum, got "
                         f"{pair[0].side.value} and {pair[1].side.value}")
    return pair

