"""Divergences between Gaussian measures on truncated Hilbert spaces.

Exact and regularized geometric Jensen-Shannon divergences, Kullback-Leibler
divergences, Fredholm and Hilbert-Carleman determinants, and the Monte Carlo
and quadrature oracles used to check them.
"""

from .determinants import (
    ExtendedOperator,
    as_extended,
    carleman_log_det2,
    extended_log_det,
    extended_trace,
    fredholm_log_det,
    log1p_minus_x,
    pc1_compose,
)
from .density import (
    LogDensityForm,
    gaussian_exp_quadratic,
    log_density,
    log_density_form,
    log_density_inner_product,
    white_noise,
)
from .divergences import (
    DivergenceReport,
    GammaLimitTable,
    GammaRow,
    gamma_limit_study,
    js_geometric_exact,
    js_geometric_finite,
    js_regularized,
    kl_exact,
    kl_finite,
    regularized_terms,
)
from .errors import ConfigError, DomainViolation, GaussDivError, NonConvergence, NotEquivalent
from .gaussian import (
    BaseMeasure,
    EquivalenceReport,
    GaussianMeasure,
    RelativeGaussian,
    equivalence_diagnostics,
    from_relative,
    kernel_covariance,
    project,
    sample,
    to_relative,
    truncate_relative,
)
from .logdet import d1_logdet_extended, d1_logdet_finite, d1_logdet_same_gamma
from .mixture import (
    MixtureResult,
    interpolate_finite,
    interpolate_relative,
    log_normalizing_factor,
    mixture_log_det,
)
from .oracles import McEstimate, mc_expectation, quadrature_z, run_validation, scalar_suite
from .spectral import SpectralDecomp, SymOperator, as_operator, eig_sym, norms, op_func

__version__ = "0.1.0"
