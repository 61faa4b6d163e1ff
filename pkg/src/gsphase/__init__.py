"""Phase diffusion in gain-switched semiconductor lasers.

Stochastic rate equations integrated over one pump period, ensemble
statistics of the accumulated optical phase, the closed-form
above-threshold reference, and sweep/CLI tooling around them.
"""

from .analytic import damping_rate, henry_sigma_curve, henry_variance, oscillation, relaxation_frequency
from .errors import (
    AllPointsUnstableError,
    BelowThresholdError,
    ConfigError,
    ConvergenceError,
    DegenerateEnsembleError,
    GsphaseError,
    InvalidParameterError,
    NoStablePulsationError,
    NumericalError,
    ReferenceUnderflowError,
    TooFewSamplesError,
)
from .montecarlo import EnsembleConfig, EnsembleStats, constant_drive_variance, randomness_criterion, run_ensemble
from .params import DerivedParams, LaserParams, PumpWaveform, derive, photons_to_watts, pump_current
from .rate_solver import (
    FieldState,
    PulsationCriteria,
    ReferenceTrajectory,
    det_step,
    find_min_bias,
    is_stable_pulsation,
    settle_periodic,
)
from .sde import NOISE_OFF, NoiseFlags, diffusion, em_step, simulate_phase, simulate_phases
from .sweep import SweepCurve, SweepSpec, emit_csv, read_csv, run_sweep
from .svgplot import emit_svg

__version__ = "0.1.0"
