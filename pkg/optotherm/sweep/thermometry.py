# This code is part of optotherm and is licensed under the MIT license.
"""Thermometer readings as a function of cooling power."""
from __future__ import annotations

import numpy as np

from ..errors import ExtrapolationError
from ..settings import ThermometrySettings


def thermo_model(p_cl: float,
                 settings: ThermometrySettings) -> tuple[float, float]:
    """``(T_pot, T_stage)`` in K at cooling power ``p_cl`` (W).

    ``affine`` readings are ``offset + slope * P``; ``table`` readings are
    linearly interpolated and never extrapolated.

    Raises
    ------
    ExtrapolationError
        if ``p_cl`` lies outside a tabulated power range
    ValueError
        if the readings violate ``T_pot < T_stage``
    """
    if p_cl < 0:
        raise ValueError(f"cooling power must be >= 0, got {p_cl}")
    if settings.kind == 'affine':
        t_pot = settings.t_pot_offset + settings.t_pot_slope * p_cl
        t_stage = settings.t_stage_offset + settings.t_stage_slope * p_cl
    else:
        power = np.asarray(settings.table_power, dtype=float)
        if not power[0] <= p_cl <= power[-1]:
            raise ExtrapolationError(
                f"P_CL = {p_cl:g} W lies outside the thermometer table "
                f"[{power[0]:g}, {power[-1]:g}] W")
        t_pot = float(np.interp(p_cl, power, settings.table_t_pot))
        t_stage = float(np.interp(p_cl, power, settings.table_t_stage))

    if not t_pot < t_stage:
        raise ValueError(f"thermometer readings violate T_pot < T_stage at "
                         f"P_CL = {p_cl:g} W: {t_pot} >= {t_stage}")
    return t_pot, t_stage
