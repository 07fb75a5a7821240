"""Numerical laboratory for dual ground states of the nonlinear fractional
Helmholtz equation on a periodic box.

The equation (-Delta)^s u - k^2 u = Q(x) |u|^(p-2) u is treated in the
rescaled frame x -> x/k through its dual formulation: ground states are
minimizers of the dual functional over the Nehari manifold, built on the
real limiting-absorption resolvent of (-Delta)^s - 1. The package
provides the spectral substrate (`grid`), the resolvent and its kernel
diagnostics (`resolvent`), coefficient families (`coefficients`), the
dual functional and ground-state solver (`dual`), concentration
experiments (`concentration`), and a batch CLI (`cli`).
"""

__version__ = "0.1.0"

from .coefficients import BumpOnBackgroundQ, CoefficientQ, ConstantQ, SampledQ, sample_Q
from .concentration import (
    LevelRow,
    LevelTable,
    SweepRecord,
    level_table,
    locate_peak,
    profile_distance,
    reconstruct_profile,
    run_sweep,
    single_bubble_check,
    single_bubble_fraction,
)
from .config import RunConfig, load_config, parse_config_text, render_config
from .dual import (
    DualState,
    GroundState,
    cutoff_projection,
    default_initial_guess,
    diagnose,
    dihedral_average,
    dual_energy,
    dual_gradient,
    limit_ground_state,
    nehari_project,
    nehari_scale,
    quad_form,
    random_initial_guess,
    solve_ground_state,
)
from .errors import (
    ConeExitError,
    ConfigError,
    GridMismatchError,
    IndefiniteFormError,
    InsufficientDataError,
    NegativeCoefficientError,
    SingularModeError,
    SupportOverlapError,
    SymmetryViolationError,
    ZeroFieldError,
)
from .grid import (
    RealField,
    SpectralField,
    TorusGrid,
    apply_multiplier,
    apply_multiplier_values,
    build_grid,
    forward_transform,
    inner_product,
    inverse_transform,
    lq_norm,
    multiplier_values,
    translate,
)
from .params import OUTSIDE_HYPOTHESES_MARKER, Exponents, HypothesisCheck
from .resolvent import (
    BandCutoff,
    KernelBundle,
    ResolventSpec,
    auto_delta,
    band_decompose,
    compact_bump,
    disjoint_interaction,
    exp_smoothstep,
    extract_kernel,
    fit_decay_exponent,
    radial_envelope,
    real_resolvent,
)

__all__ = [name for name in dir() if not name.startswith("_")]
