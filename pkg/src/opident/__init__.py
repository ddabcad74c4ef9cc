"""Nonlinear system identification from operating-point data with a feed-forward MLP.

Submodules:
    mlp       network definition and forward pass
    training  backward pass, momentum and Levenberg-Marquardt trainers, RMSE
    data      MISO datasets, divide-by-max scaling, CSV corpora
    reactor   point-kinetics step-back transient generator
    servo     trapezoidal motion-profile generator
    sweep     architecture sweep, statistics, selection and reports
    model     trained network bundled with its scaling
    cli       ``opident`` command line
"""

__version__ = "0.1.0"

from .data import (
    MisoDataset,
    NormalizationSpec,
    assemble_reactor_dataset,
    assemble_servo_dataset,
    denormalize_output,
    fit_normalization,
    load_csv,
    normalize,
    save_csv,
)
from .errors import (
    DegenerateColumnError,
    IntegrationFailure,
    InvalidInputError,
    InvalidProfileError,
    NoValidConfigError,
    NumericalFailure,
    OpidentError,
    ParseError,
    ShapeError,
    UnsupportedRangeError,
)
from .mlp import Activation, ForwardTrace, Network, NetworkConfig, activation, activation_derivative
from .mlp import forward, init_weights, predict
from .model import IdentifiedModel
from .reactor import PointKineticsParams, StepBackScenario, generate_stepback_corpus, integrate_point_kinetics
from .servo import MotionProfile, generate_servo_corpus, profile_state
from .sweep import SweepReport, SweepSpec, enumerate_configs, render_report, run_config, run_sweep, select_best
from .training import (
    LmParams,
    MomentumParams,
    TrainResult,
    compute_deltas,
    finite_difference_gradient,
    momentum_step,
    rmse,
    train,
    train_levenberg_marquardt,
    train_momentum,
)
