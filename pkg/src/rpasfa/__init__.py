"""Recursive MMSE inference of ARMA slow-feature states from linear Gaussian observations."""

from .errors import (
    CapExceeded,
    DegenerateVariance,
    DimensionMismatch,
    InvalidLag,
    ModelError,
    NonFinite,
    NonPositiveVariance,
    NonStationary,
    RpasfaError,
    ShapeMismatch,
    SingularInnovationCovariance,
)
from .filtering import FilterState, StepOutput, init, iterate, run, step
from .model import (
    SYNTHETIC_ARMA11,
    ArmaSpec,
    CheckedModel,
    ObservationSpec,
    cross_cov_ex,
    impulse_response,
    load_model,
    prior_cov,
    stationary_cov,
    validate,
)
from .simulate import Trajectory, apply_dynamics, simulate

__version__ = "0.1.0"
