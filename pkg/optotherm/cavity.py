# This code is part of optotherm and is licensed under the MIT license.
"""
Optical response of the single-mode cavity.

The filter factor is normalised to one on resonance; all absolute
transduction scale lives in :mod:`optotherm.spectra`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import optical_photon_energy
from .settings import BeamConfig, SystemParams


@dataclass(frozen=True)
class CavityResponse:
    """Linewidth and input coupling of the cavity mode, both rad/s."""
    kappa: float
    kappa_in: float

    def __post_init__(self):
        if not 0 < self.kappa_in <= self.kappa:
            raise ValueError(f"cavity response requires 0 < kappa_in <= "
                             f"kappa, got kappa_in={self.kappa_in}, "
                             f"kappa={self.kappa}")

    @classmethod
    def from_params(cls, params: SystemParams) -> CavityResponse:
        return cls(kappa=params.kappa, kappa_in=params.kappa_in)

    @property
    def half_width(self) -> float:
        return 0.5 * self.kappa


def lorentzian_response(resp: CavityResponse, delta):
    """Filter factor ``(kappa/2)^2 / ((kappa/2)^2 + delta^2)``.

    ``delta`` is an angular offset from the cavity resonance, scalar or
    array.
    """
    h2 = resp.half_width ** 2
    delta = np.asarray(delta, dtype=float)
    return (h2 / (h2 + delta * delta))[()]


def intracavity_photons(resp: CavityResponse, beam: BeamConfig,
                        lambda_laser: float) -> float:
    """Steady-state intracavity photon number driven by ``beam``.

    ``n_cav = kappa_in * (P / hbar omega_L) / (Delta^2 + (kappa/2)^2)``.
    A beam without a detuning (the local oscillator) never enters the
    cavity and gives zero.
    """
    if beam.detuning is None or beam.power == 0:
        return 0.0
    flux = beam.power / optical_photon_energy(lambda_laser)
    return resp.kappa_in * flux / (beam.detuning ** 2 + resp.half_width ** 2)


def sideband_filter_pair(resp: CavityResponse, delta_probe: float,
                         omega_m: float) -> tuple[float, float]:
    """Filter factors ``(Phi_red, Phi_blue)`` seen by the probe sidebands.

    The red (Stokes) sideband sits at ``delta_probe - omega_m`` from the
    cavity resonance and the blue (anti-Stokes) one at
    ``delta_probe + omega_m``.
    """
    return (float(lorentzian_response(resp, delta_probe - omega_m)),
            float(lorentzian_response(resp, delta_probe + omega_m)))
