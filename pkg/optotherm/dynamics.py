# This code is part of optotherm and is licensed under the MIT license.
"""
Dynamical backaction of the drive beams on the mechanical mode.

Closed forms are the weak-coupling, adiabatic results (``g << kappa``).
For a beam with field-enhanced coupling ``g`` at detuning ``Delta`` the
anti-Stokes and Stokes scattering rates are::

    A_- = g^2 kappa / ((kappa/2)^2 + (Delta + omega_m)^2)
    A_+ = g^2 kappa / ((kappa/2)^2 + (Delta - omega_m)^2)

with optical damping ``gamma_opt = A_- - A_+`` and backaction occupancy
``n_min = A_+ / gamma_opt``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .cavity import CavityResponse, intracavity_photons
from .errors import DegenerateDetuningError
from .params import CONSTANTS, bath_occupancy
from .settings import BeamConfig, BeamRole, SystemParams

logger = logging.getLogger(__name__)

DEGENERATE_DETUNING_FRACTION = 1e-6
"""|Delta| below this fraction of omega_m has no defined n_min."""


@dataclass(frozen=True)
class BeamDynamics:
    """Backaction of one beam on the mechanical mode (all rates rad/s)."""
    role: BeamRole
    detuning: float
    g: float
    """Field-enhanced coupling ``g0 sqrt(n_cav)``."""
    gamma_opt: float
    """Optical damping; negative on the blue side."""
    delta_omega: float
    """Optical spring shift."""
    cooling_rate: float
    """Anti-Stokes scattering rate ``A_-``."""
    heating_rate: float
    """Stokes scattering rate ``A_+``; equals ``n_min * gamma_opt``."""
    n_min: Optional[float]
    """Backaction occupancy; None when the detuning is degenerate."""


def backaction_occupancy(params: SystemParams, detuning: float) -> float:
    """``n_min = -((omega_m + Delta)^2 + (kappa/2)^2) / (4 omega_m Delta)``.

    Raises
    ------
    DegenerateDetuningError
        if ``|Delta| < 1e-6 omega_m``, where the expression diverges
    """
    omega_m = params.omega_m
    if abs(detuning) < DEGENERATE_DETUNING_FRACTION * omega_m:
        raise DegenerateDetuningError(
            f"backaction occupancy is undefined for |detuning| = "
            f"{abs(detuning):.6g} rad/s < {DEGENERATE_DETUNING_FRACTION:g} "
            f"omega_m")
    h2 = (0.5 * params.kappa) ** 2
    return -((omega_m + detuning) ** 2 + h2) / (4.0 * omega_m * detuning)


def beam_dynamics(params: SystemParams, beam: BeamConfig, *,
                  require_occupancy: bool = True) -> BeamDynamics:
    """Optical damping, spring and backaction occupancy of one drive beam.

    Parameters
    ----------
    params : SystemParams
    beam : BeamConfig
        a probe or cooling beam
    require_occupancy : bool
        if True (default) a degenerate detuning raises; otherwise ``n_min``
        is None for such a beam

    Raises
    ------
    ValueError
        for a local-oscillator beam
    DegenerateDetuningError
        see :func:`backaction_occupancy`
    """
    if beam.role not in (BeamRole.PROBE, BeamRole.COOLING):
        raise ValueError(f"beam dynamics need a probe or cooling beam, "
                         f"got {beam.role.value}")

    resp = CavityResponse.from_params(params)
    n_cav = intracavity_photons(resp, beam, params.lambda_laser)
    g2 = params.g0 ** 2 * n_cav
    delta = beam.detuning
    omega_m = params.omega_m
    h2 = resp.half_width ** 2
    lor_minus = 1.0 / (h2 + (delta + omega_m) ** 2)
    lor_plus = 1.0 / (h2 + (delta - omega_m) ** 2)
    cooling_rate = g2 * params.kappa * lor_minus
    heating_rate = g2 * params.kappa * lor_plus

    try:
        n_min = backaction_occupancy(params, delta)
    except DegenerateDetuningError:
        if require_occupancy:
            raise
        n_min = None

    return BeamDynamics(
        role=beam.role,
        detuning=delta,
        g=float(np.sqrt(g2)),
        gamma_opt=cooling_rate - heating_rate,
        delta_omega=g2 * ((delta + omega_m) * lor_minus
                          + (delta - omega_m) * lor_plus),
        cooling_rate=cooling_rate,
        heating_rate=heating_rate,
        n_min=n_min,
    )


@dataclass(frozen=True)
class EffectiveMode:
    """The dressed mechanical mode under all drive beams."""
    omega_tilde: float
    gamma_tilde: float
    omega_m: float
    gamma_m: float
    contributions: tuple[BeamDynamics, ...]
    beams: tuple[BeamConfig, ...]
    """All beams, local oscillator included, for the detection layer."""

    def contribution(self, role: BeamRole) -> Optional[BeamDynamics]:
        for dyn in self.contributions:
            if dyn.role is role:
                return dyn
        return None

    def beam(self, role: BeamRole) -> Optional[BeamConfig]:
        for beam in self.beams:
            if beam.role is role:
                return beam
        return None


def effective_mode(params: SystemParams,
                   beams: Iterable[BeamConfig]) -> EffectiveMode:
    """Dress the mechanical mode with the optical spring and damping.

    ``gamma_tilde = gamma_m + sum(gamma_opt)`` and
    ``omega_tilde = omega_m + sum(delta_omega)``; local-oscillator beams
    are carried along but do not act on the mode.
    """
    beams = tuple(beams)
    roles = [b.role for b in beams]
    for role in BeamRole:
        if roles.count(role) > 1:
            raise ValueError(f"at most one {role.value} beam is allowed")

    contributions = tuple(
        beam_dynamics(params, b, require_occupancy=False) for b in beams
        if b.role in (BeamRole.PROBE, BeamRole.COOLING)
    )
    gamma_tilde = params.gamma_m
    omega_tilde = params.omega_m
    for dyn in contributions:
        gamma_tilde += dyn.gamma_opt
        omega_tilde += dyn.delta_omega

    return EffectiveMode(
        omega_tilde=omega_tilde,
        gamma_tilde=gamma_tilde,
        omega_m=params.omega_m,
        gamma_m=params.gamma_m,
        contributions=contributions,
        beams=beams,
    )


def _backaction_numerator(params: SystemParams, mode: EffectiveMode,
                          strict: bool) -> float:
    total = 0.0
    for dyn in mode.contributions:
        if dyn.g == 0:
            continue
        if strict:
            total += backaction_occupancy(params, dyn.detuning) * dyn.gamma_opt
        else:
            total += dyn.heating_rate
    return total


def phonon_balance(params: SystemParams, mode: EffectiveMode,
                   t_bath: float, *, strict: bool = False) -> float:
    """Mean phonon number from the damping-weighted balance.

    ``n = (n_bath gamma_m + sum n_beam gamma_beam) / gamma_tilde`` with
    ``n_bath = k_B T_bath / (hbar omega_tilde)``.

    Each beam term ``n_beam gamma_beam`` equals the Stokes rate ``A_+``,
    which is evaluated directly by default and stays finite for a resonant
    beam. With ``strict=True`` the product ``n_min * gamma_opt`` is used and
    a driven beam at degenerate detuning raises.

    Raises
    ------
    ValueError
        if ``gamma_tilde <= 0`` (the mode is unstable)
    DegenerateDetuningError
        only with ``strict=True``
    """
    if not mode.gamma_tilde > 0:
        raise ValueError(f"phonon balance needs gamma_tilde > 0, got "
                         f"{mode.gamma_tilde}")
    n_bath = bath_occupancy(t_bath, mode.omega_tilde)
    numerator = n_bath * params.gamma_m + _backaction_numerator(params, mode,
                                                                strict)
    return float(numerator / mode.gamma_tilde)


def solve_bath_temperature(params: SystemParams, mode: EffectiveMode,
                           n_target: float) -> float:
    """Bath temperature for which :func:`phonon_balance` returns ``n_target``.

    The balance is linear in ``T_bath``, so this is a closed-form inverse.

    Raises
    ------
    ValueError
        if ``n_target`` lies below what backaction alone produces
    """
    backaction = _backaction_numerator(params, mode, strict=False)
    n_bath = (n_target * mode.gamma_tilde - backaction) / params.gamma_m
    if n_bath < 0:
        raise ValueError(f"n={n_target} is below the backaction limit "
                         f"{backaction / mode.gamma_tilde:.6g}")
    t_bath = n_bath * CONSTANTS.hbar * mode.omega_tilde / CONSTANTS.k_B
    logger.debug("bath temperature %.6g K gives n=%.6g", t_bath, n_target)
    return t_bath
