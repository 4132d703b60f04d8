# This code is part of optotherm and is licensed under the MIT license.
"""The `SweepUnit` class should be subclassed for every step of a sweep.

A unit holds its inputs, which may include the units it depends on. When
executed, those dependencies are replaced by their `UnitResult`; failures
are caught and returned as `UnitFailure` so that a sweep never loses a point
silently.
"""
from __future__ import annotations

import abc
import logging
import traceback
from copy import copy
from typing import Any, Optional, Union

from ..dynamics import effective_mode, phonon_balance
from ..inference import (
    AlphaPoint,
    CalibrationPoint,
    EstimateMethod,
    FitResult,
    areas,
    calibrate_g0_and_detuning,
    estimate_area,
    estimate_asymmetry,
    estimate_damping,
    fit_alpha,
    fit_sidebands,
    sideband_asymmetry,
)
from ..params import zero_point_amplitude
from ..settings import (
    BeamConfig,
    BeamRole,
    EstimationSettings,
    FitSettings,
    RunConfig,
    SystemParams,
)
from ..settings.models import TWO_PI
from ..spectra import (
    Side,
    detection_forward,
    detection_inverse,
    frequency_grid,
    model_sxx,
)
from ..synth import point_seed, synthesize
from ..tokenization import Tokenizable, TokenizableKey
from .thermometry import thermo_model

logger = logging.getLogger(__name__)


def _list_dependencies(inputs: dict, cls) -> list:
    deps = []
    for value in inputs.values():
        if isinstance(value, dict):
            deps.extend(v for v in value.values() if isinstance(v, cls))
        elif isinstance(value, (list, tuple)):
            deps.extend(v for v in value if isinstance(v, cls))
        elif isinstance(value, cls):
            deps.append(value)
    return deps


class UnitResult(Tokenizable):
    """Successful result of a single :class:`SweepUnit` execution."""
    def __init__(self, *, name: Optional[str], source_key: str,
                 outputs: dict[str, Any]):
        self._name = name
        self._source_key = TokenizableKey(source_key)
        self._outputs = outputs

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"

    @classmethod
    def _defaults(cls):
        return {}

    def _to_dict(self):
        return {'name': self._name,
                'source_key': str(self._source_key),
                'outputs': self._outputs}

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(**dct)

    @property
    def name(self) -> Optional[str]:
        return self._name

    @property
    def source_key(self) -> TokenizableKey:
        """Key of the `SweepUnit` that produced this result"""
        return self._source_key

    @property
    def outputs(self) -> dict[str, Any]:
        return self._outputs

    @staticmethod
    def ok() -> bool:
        return True


class UnitFailure(UnitResult):
    """Failed result of a single :class:`SweepUnit` execution.

    ``exception`` is the pair ``(class qualname, args)`` of the raised
    exception.
    """
    def __init__(self, *, name: Optional[str], source_key: str,
                 outputs: Optional[dict[str, Any]] = None,
                 exception: tuple[str, tuple], traceback: str):
        super().__init__(name=name, source_key=source_key,
                         outputs=outputs or {})
        self._exception = (exception[0], tuple(exception[1]))
        self._traceback = traceback

    def _to_dict(self):
        dct = super()._to_dict()
        dct.update({'exception': list(self._exception),
                    'traceback': self._traceback})
        return dct

    @property
    def exception(self) -> tuple[str, tuple]:
        return self._exception

    @property
    def traceback(self) -> str:
        return self._traceback

    @property
    def message(self) -> str:
        """``ClassName: args`` text of the failure"""
        args = ', '.join(str(a) for a in self._exception[1])
        return f"{self._exception[0]}: {args}"

    @staticmethod
    def ok() -> bool:
        return False


class SweepUnit(Tokenizable):
    """A unit of work within a :class:`~optotherm.sweep.dag.SweepDAG`."""
    _dependencies: Optional[list[SweepUnit]]

    tolerates_failures: bool = False
    """If True, the unit still runs when some dependencies failed and
    receives their `UnitFailure`; otherwise it is skipped."""

    def __init__(self, *, name: Optional[str] = None, **inputs):
        """
        Parameters
        ----------
        name : str
            name of the unit, unique within a sweep
        **inputs
            keyword arguments handed to ``_execute``; may include other
            `SweepUnit` s, which become dependencies
        """
        self._name = name
        self._inputs = inputs
        self._dependencies = None

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"

    @classmethod
    def _defaults(cls):
        return {}

    def _to_dict(self):
        return {'inputs': self._inputs, 'name': self._name}

    @classmethod
    def _from_dict(cls, dct: dict):
        return cls(name=dct['name'], **dct['inputs'])

    @property
    def name(self) -> Optional[str]:
        return self._name

    @property
    def inputs(self) -> dict[str, Any]:
        return copy(self._inputs)

    @property
    def dependencies(self) -> list[SweepUnit]:
        """All units this unit depends on"""
        if self._dependencies is None:
            self._dependencies = _list_dependencies(self._inputs, SweepUnit)
        return self._dependencies

    def execute(self, *, raise_error: bool = False,
                **inputs) -> Union[UnitResult, UnitFailure]:
        """Run ``_execute`` with the results of the dependencies in place.

        Parameters
        ----------
        raise_error : bool
            re-raise exceptions instead of returning a `UnitFailure`
        **inputs
            the unit's inputs with each dependency replaced by its result
        """
        try:
            outputs = self._execute(**inputs)
        except KeyboardInterrupt:
            raise
        except Exception as e:
            if raise_error:
                raise
            self.logger.warning("unit failed: %s: %s",
                                type(e).__qualname__, e)
            return UnitFailure(
                name=self._name,
                source_key=self.key,
                exception=(type(e).__qualname__, e.args),
                traceback=traceback.format_exc(),
            )
        return UnitResult(name=self._name, source_key=self.key,
                          outputs=outputs)

    @staticmethod
    @abc.abstractmethod
    def _execute(**inputs) -> dict[str, Any]:
        """Override in subclasses; dependencies arrive as `UnitResult` s."""
        ...


def _beams_at(beams: list[BeamConfig], p_cl: float) -> list[BeamConfig]:
    """The beam list with the cooling power set to ``p_cl``"""
    out = [b.copy(update={'power': p_cl}) if b.role is BeamRole.COOLING
           else b for b in beams]
    if not any(b.role is BeamRole.COOLING for b in out) and p_cl > 0:
        raise ValueError("a nonzero cooling power needs a cooling beam")
    return out


def simulate_pair(config: RunConfig, p_cl: float, *, seed: int,
                  n_bar: Optional[float] = None,
                  n_jobs: int = 1) -> dict[str, Any]:
    """Model truth and synthesized displacement spectra at one power.

    The model spectra pass through the detection layer, are synthesized in
    photocurrent units, and are converted back to displacement. ``n_bar``
    plants an occupancy instead of the damping-balance value.
    """
    params = config.system
    beams = _beams_at(config.beams, p_cl)
    t_pot, t_stage = thermo_model(p_cl, config.thermometry)
    t_bath = params.alpha * t_stage + (1.0 - params.alpha) * t_pot

    mode = effective_mode(params, beams)
    if n_bar is None:
        n_bar = phonon_balance(params, mode, t_bath)
    freqs = frequency_grid(config.grid.start_hz, config.grid.stop_hz,
                           config.grid.step_hz)
    noise = config.noise.copy(update={'seed': seed})

    spectra = {}
    for side in Side:
        sxx = model_sxx(params, mode, n_bar, side, freqs, config.contaminants)
        sii = synthesize(detection_forward(params, sxx, beams), noise,
                         n_jobs=n_jobs)
        spectra[side.value] = detection_inverse(params, sii, beams)

    unit = 2.0 * zero_point_amplitude(params) ** 2
    a_red, a_blue = unit * (n_bar + 1.0), unit * n_bar
    predicted = {
        'n_bar': n_bar,
        'omega_tilde_hz': mode.omega_tilde / TWO_PI,
        'gamma_tilde_hz': mode.gamma_tilde / TWO_PI,
        'a_red': a_red,
        'a_blue': a_blue,
        'inv_a_red': 1.0 / a_red,
        'inv_a_blue': 1.0 / a_blue if a_blue > 0 else float('inf'),
        'zeta': a_red / a_blue - 1.0 if a_blue > 0 else float('inf'),
    }
    return {
        'red': spectra['red'],
        'blue': spectra['blue'],
        'beams': beams,
        'p_cl': p_cl,
        't_pot': t_pot,
        't_stage': t_stage,
        't_bath': t_bath,
        'predicted': predicted,
    }


class SimulateUnit(SweepUnit):
    """Simulated pair for one sweep point, seeded from the point index."""
    @staticmethod
    def _execute(*, config: RunConfig, p_cl: float, index: int,
                 **inputs) -> dict[str, Any]:
        return simulate_pair(config, p_cl,
                             seed=point_seed(config.noise.seed, index))


class FitUnit(SweepUnit):
    """Joint sideband fit of a simulated pair."""
    @staticmethod
    def _execute(*, simulation: UnitResult, settings: FitSettings,
                 **inputs) -> dict[str, Any]:
        out = simulation.outputs
        return {'fit': fit_sidebands(out['red'], out['blue'],
                                     settings=settings)}


class EstimateUnit(SweepUnit):
    """The four phonon-number estimates and the asymmetry of one point."""
    @staticmethod
    def _execute(*, simulation: UnitResult, fitting: UnitResult,
                 system: SystemParams, settings: EstimationSettings,
                 **inputs) -> dict[str, Any]:
        sim = simulation.outputs
        fit: FitResult = fitting.outputs['fit']
        beams = sim['beams']
        probe = next((b for b in beams if b.role is BeamRole.PROBE), None)

        zeta, zeta_sigma = sideband_asymmetry(fit, system, probe)
        pair = areas(fit)
        estimates = {
            EstimateMethod.ASYMMETRY.value: estimate_asymmetry(fit, system,
                                                               probe),
            EstimateMethod.RED_AREA.value: estimate_area(fit, system, 'red'),
            EstimateMethod.BLUE_AREA.value: estimate_area(fit, system, 'blue'),
            EstimateMethod.DAMPING_BALANCE.value: estimate_damping(
                fit, system, beams, sim['t_bath'], settings.t_bath_sigma),
        }
        return {
            'zeta': zeta,
            'zeta_sigma': zeta_sigma,
            'inv_a_red': 1.0 / pair.a_red,
            'inv_a_red_sigma': pair.sigma_red / pair.a_red ** 2,
            'inv_a_blue': 1.0 / pair.a_blue,
            'inv_a_blue_sigma': pair.sigma_blue / pair.a_blue ** 2,
            'estimates': estimates,
        }


class AlphaUnit(SweepUnit):
    """Bath-weighting fit over all points that simulated and fitted."""
    tolerates_failures = True

    @staticmethod
    def _execute(*, simulations: list[UnitResult], fits: list[UnitResult],
                 system: SystemParams, settings: EstimationSettings,
                 **inputs) -> dict[str, Any]:
        points = [
            AlphaPoint(fit.outputs['fit'], sim.outputs['beams'],
                       sim.outputs['t_pot'], sim.outputs['t_stage'])
            for sim, fit in zip(simulations, fits)
            if sim.ok() and fit.ok()
        ]
        return {'alpha': fit_alpha(points, system, settings)}


class CalibrationUnit(SweepUnit):
    """``g0`` and probe-detuning calibration from the fitted sweep."""
    tolerates_failures = True

    @staticmethod
    def _execute(*, simulations: list[UnitResult], fits: list[UnitResult],
                 system: SystemParams, beams: list[BeamConfig],
                 **inputs) -> dict[str, Any]:
        points = []
        for sim, fit in zip(simulations, fits):
            if not (sim.ok() and fit.ok()):
                continue
            result: FitResult = fit.outputs['fit']
            points.append(CalibrationPoint(
                sim.outputs['p_cl'], result.omega_tilde, result.gamma_tilde,
                result.sigma('omega_tilde') or None,
                result.sigma('gamma_tilde') or None,
            ))
        probe = next(b for b in beams if b.role is BeamRole.PROBE)
        cooling = next((b for b in beams if b.role is BeamRole.COOLING), None)
        return {'calibration': calibrate_g0_and_detuning(
            points, system, probe, cooling)}
