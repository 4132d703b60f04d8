# This code is part of optotherm and is licensed under the MIT license.

from importlib.metadata import version

from . import tokenization

from .errors import (
    OptothermError,
    ConfigurationError,
    FitError,
    EstimationError,
)

from .settings import (
    SystemParams,
    BeamConfig,
    BeamRole,
    RunConfig,
)

from .params import (
    CONSTANTS,
    load_config,  # physical parameters and beams only
    load_run_config,  # everything a run needs
    save_config,
)

from .dynamics import effective_mode, phonon_balance

from .spectra import (
    Side,
    SidebandSpectrum,
    model_sxx,
    detection_forward,
    detection_inverse,
)

from .synth import synthesize

from .inference import (
    FitResult,
    PhononEstimate,
    fit_sidebands,
    estimate_asymmetry,
    estimate_area,
    estimate_damping,
    fit_alpha,
    calibrate_g0_and_detuning,
)

from .sweep import (
    SweepProtocol,  # a cooling-power sweep
    SweepRecord,  # one power of it
    SweepResult,  # all of it, with calibrations
    execute_sweep,
    run_sweep,
)

__version__ = version("optotherm")
