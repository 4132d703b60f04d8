# This code is part of optotherm and is licensed under the MIT license.
"""
Cooling-power sweeps: model, synthesize, fit and estimate at each power.

A :class:`SweepProtocol` holds frozen :class:`~optotherm.settings.RunConfig`
settings. :meth:`SweepProtocol.create` lays the work out as a
:class:`~optotherm.sweep.dag.SweepDAG`, :func:`~optotherm.sweep.dag.execute_dag`
runs it, and :meth:`SweepProtocol.gather` assembles the ordered
:class:`SweepResult`.
"""
from __future__ import annotations

import logging
from typing import Any, Optional, Sequence

from ..inference import (
    AlphaFitResult,
    CalibrationResult,
    FitResult,
    PhononEstimate,
)
from ..settings import (
    BeamConfig,
    BeamRole,
    NoiseSettings,
    RunConfig,
    SystemParams,
    ThermometrySettings,
)
from ..tokenization import Tokenizable
from .dag import SweepDAG, SweepDAGResult, execute_dag
from .units import (
    AlphaUnit,
    CalibrationUnit,
    EstimateUnit,
    FitUnit,
    SimulateUnit,
    SweepUnit,
)

logger = logging.getLogger(__name__)


class SweepRecord(Tokenizable):
    """Everything measured and predicted at one cooling power.

    Fields from failed steps are None and ``error`` holds the first failure
    of the point.
    """
    def __init__(self, *, index: int, p_cl: float,
                 t_pot: Optional[float] = None,
                 t_stage: Optional[float] = None,
                 t_bath: Optional[float] = None,
                 fit: Optional[FitResult] = None,
                 inv_a_red: Optional[float] = None,
                 inv_a_red_sigma: Optional[float] = None,
                 inv_a_blue: Optional[float] = None,
                 inv_a_blue_sigma: Optional[float] = None,
                 zeta: Optional[float] = None,
                 zeta_sigma: Optional[float] = None,
                 estimates: Optional[dict[str, PhononEstimate]] = None,
                 predicted: Optional[dict[str, float]] = None,
                 error: Optional[str] = None):
        self._index = int(index)
        self._p_cl = float(p_cl)
        self._t_pot = t_pot
        self._t_stage = t_stage
        self._t_bath = t_bath
        self._fit = fit
        self._inv_a_red = inv_a_red
        self._inv_a_red_sigma = inv_a_red_sigma
        self._inv_a_blue = inv_a_blue
        self._inv_a_blue_sigma = inv_a_blue_sigma
        self._zeta = zeta
        self._zeta_sigma = zeta_sigma
        self._estimates = dict(estimates or {})
        self._predicted = dict(predicted or {})
        self._error = error

    @classmethod
    def _defaults(cls):
        return super()._defaults()

    def _to_dict(self) -> dict:
        return {
            'index': self._index,
            'p_cl': self._p_cl,
            't_pot': self._t_pot,
            't_stage': self._t_stage,
            't_bath': self._t_bath,
            'fit': self._fit,
            'inv_a_red': self._inv_a_red,
            'inv_a_red_sigma': self._inv_a_red_sigma,
            'inv_a_blue': self._inv_a_blue,
            'inv_a_blue_sigma': self._inv_a_blue_sigma,
            'zeta': self._zeta,
            'zeta_sigma': self._zeta_sigma,
            'estimates': dict(self._estimates),
            'predicted': dict(self._predicted),
            'error': self._error,
        }

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)

    @property
    def index(self) -> int:
        return self._index

    @property
    def p_cl(self) -> float:
        return self._p_cl

    @property
    def t_pot(self) -> Optional[float]:
        return self._t_pot

    @property
    def t_stage(self) -> Optional[float]:
        return self._t_stage

    @property
    def t_bath(self) -> Optional[float]:
        return self._t_bath

    @property
    def fit(self) -> Optional[FitResult]:
        return self._fit

    @property
    def inv_a_red(self) -> Optional[float]:
        return self._inv_a_red

    @property
    def inv_a_red_sigma(self) -> Optional[float]:
        return self._inv_a_red_sigma

    @property
    def inv_a_blue(self) -> Optional[float]:
        return self._inv_a_blue

    @property
    def inv_a_blue_sigma(self) -> Optional[float]:
        return self._inv_a_blue_sigma

    @property
    def zeta(self) -> Optional[float]:
        return self._zeta

    @property
    def zeta_sigma(self) -> Optional[float]:
        return self._zeta_sigma

    @property
    def estimates(self) -> dict[str, PhononEstimate]:
        """Estimates keyed by method name"""
        return dict(self._estimates)

    @property
    def predicted(self) -> dict[str, float]:
        """Model-truth counterparts of the measured quantities"""
        return dict(self._predicted)

    @property
    def error(self) -> Optional[str]:
        return self._error

    def ok(self) -> bool:
        return self._error is None


class SweepResult(Tokenizable):
    """Records in input order plus the sweep-wide calibrations."""
    def __init__(self, *, records: list[SweepRecord],
                 alpha: Optional[AlphaFitResult] = None,
                 calibration: Optional[CalibrationResult] = None,
                 failures: Optional[list[list[str]]] = None):
        self._records = sorted(records, key=lambda r: r.index)
        self._alpha = alpha
        self._calibration = calibration
        self._failures = [list(f) for f in (failures or [])]

    @classmethod
    def _defaults(cls):
        return super()._defaults()

    def _to_dict(self) -> dict:
        return {'records': list(self._records), 'alpha': self._alpha,
                'calibration': self._calibration,
                'failures': [list(f) for f in self._failures]}

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)

    @property
    def records(self) -> list[SweepRecord]:
        return list(self._records)

    @property
    def alpha(self) -> Optional[AlphaFitResult]:
        return self._alpha

    @property
    def calibration(self) -> Optional[CalibrationResult]:
        return self._calibration

    @property
    def failures(self) -> list[list[str]]:
        """``[unit name, message]`` for every failed unit"""
        return [list(f) for f in self._failures]


class SweepProtocol(Tokenizable):
    """A cooling-power sweep over the powers in its settings.

    Note
    ----
    The settings are frozen on creation; finalise them first.
    """
    def __init__(self, settings: RunConfig):
        self._settings = settings.frozen_copy()

    @property
    def settings(self) -> RunConfig:
        """A read-only view of the settings of this sweep"""
        return self._settings

    @classmethod
    def default_settings(cls) -> RunConfig:
        return RunConfig()

    @classmethod
    def _defaults(cls):
        return {}

    def _to_dict(self):
        return {'settings': self._settings}

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)

    def create(self, *, name: Optional[str] = None) -> SweepDAG:
        """Lay the sweep out as a DAG.

        Per power there is a simulate, a fit and an estimate unit. An alpha
        unit is added when the sweep has two or more distinct powers and a
        calibration unit when it has a zero power and three nonzero ones.
        """
        config = self._settings
        units: list[SweepUnit] = []
        simulations, fits = [], []
        for index, p_cl in enumerate(config.sweep_powers):
            tag = f"{index:03d}"
            sim = SimulateUnit(name=f"simulate-{tag}", config=config,
                               p_cl=p_cl, index=index)
            fit = FitUnit(name=f"fit-{tag}", simulation=sim,
                          settings=config.fit)
            est = EstimateUnit(name=f"estimate-{tag}", simulation=sim,
                               fitting=fit, system=config.system,
                               settings=config.estimation)
            units.extend([sim, fit, est])
            simulations.append(sim)
            fits.append(fit)

        powers = set(config.sweep_powers)
        if len(powers) >= 2:
            units.append(AlphaUnit(name="alpha", simulations=simulations,
                                   fits=fits, system=config.system,
                                   settings=config.estimation))
        if 0.0 in powers and len(powers - {0.0}) >= 3 \
                and config.beam(BeamRole.PROBE) is not None:
            units.append(CalibrationUnit(name="calibration",
                                         simulations=simulations, fits=fits,
                                         system=config.system,
                                         beams=config.beams))
        return SweepDAG(units=units, name=name)

    def gather(self, dag_result: SweepDAGResult) -> SweepResult:
        """Assemble the per-point records and calibrations of a run"""
        by_name = {unit.name: dag_result.unit_to_result(unit)
                   for unit in dag_result.units}
        records = []
        for index, p_cl in enumerate(self._settings.sweep_powers):
            tag = f"{index:03d}"
            steps = [by_name[f"{step}-{tag}"]
                     for step in ("simulate", "fit", "estimate")]
            records.append(_record(index, p_cl, *steps))

        alpha = by_name.get("alpha")
        calibration = by_name.get("calibration")
        failures = [[r.name, r.message] for r in dag_result.failures]
        return SweepResult(
            records=records,
            alpha=alpha.outputs['alpha'] if alpha and alpha.ok() else None,
            calibration=(calibration.outputs['calibration']
                         if calibration and calibration.ok() else None),
            failures=failures,
        )


def _record(index: int, p_cl: float, sim, fit, est) -> SweepRecord:
    fields: dict[str, Any] = {'index': index, 'p_cl': p_cl}
    if sim.ok():
        out = sim.outputs
        fields.update(t_pot=out['t_pot'], t_stage=out['t_stage'],
                      t_bath=out['t_bath'], predicted=out['predicted'])
    if fit.ok():
        fields['fit'] = fit.outputs['fit']
    if est.ok():
        fields.update(est.outputs)
    for step in (sim, fit, est):
        if not step.ok():
            fields['error'] = step.message
            break
    return SweepRecord(**fields)


def execute_sweep(config: RunConfig, *, n_jobs: int = 1,
                  name: Optional[str] = None) -> SweepResult:
    """Create, execute and gather a sweep in one call."""
    protocol = SweepProtocol(config)
    dag = protocol.create(name=name)
    logger.info("running sweep over %d powers (%d units)",
                len(config.sweep_powers), len(dag.units))
    return protocol.gather(execute_dag(dag, n_jobs=n_jobs))


def run_sweep(params: SystemParams, probe: BeamConfig,
              pcl_list: Sequence[float], thermometry: ThermometrySettings,
              settings: NoiseSettings, *, config: Optional[RunConfig] = None,
              n_jobs: int = 1) -> list[SweepRecord]:
    """Simulate, fit and estimate at each cooling power.

    Parameters
    ----------
    params : SystemParams
    probe : BeamConfig
    pcl_list : sequence of float
        cooling powers, W; nonempty and nonnegative
    thermometry : ThermometrySettings
        thermometer curves that set ``T_bath`` at each power
    settings : NoiseSettings
        master seed, averaging count, noiseless switch
    config : RunConfig, optional
        grid, fit window, contaminants and the other beams; defaults to
        :class:`RunConfig` defaults
    n_jobs : int
        worker threads

    Returns
    -------
    list of SweepRecord
        in the order of ``pcl_list``; failed points carry their error
    """
    if not pcl_list or any(p < 0 for p in pcl_list):
        raise ValueError("pcl_list must be nonempty and nonnegative")
    config = config or RunConfig()
    beams = [b for b in config.beams if b.role is not BeamRole.PROBE]
    config = config.copy(update={
        'system': params,
        'beams': [probe] + beams,
        'sweep_powers': list(pcl_list),
        'thermometry': thermometry,
        'noise': settings,
    })
    return execute_sweep(config, n_jobs=n_jobs).records
