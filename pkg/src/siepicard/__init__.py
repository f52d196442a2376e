"""Picard iteration and existence checks for stochastic integral equations."""

__version__ = "0.1.0"

from .calculus import (
    AdaptedProcess,
    NormEstimate,
    isometry_check,
    ito_integral,
    l2_norm_at,
    l2ad_norm,
    lebesgue_integral,
    sup_l2_norm,
)
from .coefficients import (
    Affine,
    Clipped,
    Constant,
    Custom,
    Linear,
    Poly,
    Sinusoid,
    lipschitz_constant,
    parse_coefficient,
    sup_bound,
)
from .conditions import (
    ConditionReport,
    InitialLaw,
    SieProblem,
    check_banach,
    check_fredholm_banach,
    check_fredholm_schauder,
    check_schauder,
    min_radius,
)
from .errors import (
    BoundUnavailable,
    ConfigError,
    InvalidInterval,
    InvalidSteps,
    NumericFailure,
    ShapeMismatch,
    SieError,
)
from .experiments import gbm_exact, gbm_problem, strong_error_study
from .fredholm import AffineKernel, FredholmProblem, SeparableKernel, SineKernel, solve_fredholm
from .paths import BrownianEnsemble, TimeGrid, make_grid, refine_brownian, sample_brownian
from .picard import (
    apply_operator,
    contraction_probe,
    equicontinuity_probe,
    euler_maruyama,
    solve_picard,
)
