# This code is part of optotherm and is licensed under the MIT license.
"""Cooling-power sweeps executed as a DAG of units"""
from .thermometry import thermo_model
from .units import (
    SweepUnit,
    UnitResult,
    UnitFailure,
    simulate_pair,
    SimulateUnit,
    FitUnit,
    EstimateUnit,
    AlphaUnit,
    CalibrationUnit,
)
from .dag import SweepDAG, SweepDAGResult, execute_dag
from .protocol import (
    SweepProtocol,
    SweepRecord,
    SweepResult,
    execute_sweep,
    run_sweep,
)
