"""Numerical laboratory for a renormalization map on singular blow-up profiles.

The package stores profiles envelope-factored (amplitude times an explicit
power law and exponential), so every operation that would otherwise lose
precision in the tails works with O(1) quantities instead.  Modules:

- params: parameter chain and admissibility checks
- profiles: graded grid, profile type, weighted norms, transforms
- convolve: fast and direct convolution of envelope-factored profiles
- renorm: the renormalization map itself
- invariants: membership checks for the invariant profile class
- solver: damped fixed-point iteration and continuation in the scale factor
- boundlab: empirical verification of the convolution-gain estimates
- oracle: free-standing time integrator used as an accuracy reference
- cli: command-line entry points producing CSV/JSON artifacts
"""

__version__ = "0.1.0"

from .errors import (
    BlowupError,
    ConvergenceConditionError,
    CrossCheckFailure,
    DivergentNormError,
    OscBudgetError,
    RenormLabError,
    StepRejectedError,
)
from .params import (
    ModelParams,
    SpaceParams,
    ValidationReport,
    critical_indices,
    default_params,
    derive_exponent_c,
    validate_space_params,
)
from .profiles import (
    GridSpec,
    Profile,
    inverse_fourier,
    lebesgue_norm,
    load_profile,
    make_ansatz,
    save_profile,
    tail_mass,
    translation_modulus,
    weighted_norm,
)

__all__ = [
    "BlowupError",
    "ConvergenceConditionError",
    "CrossCheckFailure",
    "DivergentNormError",
    "OscBudgetError",
    "RenormLabError",
    "StepRejectedError",
    "ModelParams",
    "SpaceParams",
    "ValidationReport",
    "critical_indices",
    "default_params",
    "derive_exponent_c",
    "validate_space_params",
    "GridSpec",
    "Profile",
    "inverse_fourier",
    "lebesgue_norm",
    "load_profile",
    "make_ansatz",
    "save_profile",
    "tail_mass",
    "translation_modulus",
    "weighted_norm",
]
