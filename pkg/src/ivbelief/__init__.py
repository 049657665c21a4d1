"""Bayesian partial identification for linear IV with a mis-measured treatment.

The package computes sharp bounds on the causal effect when the treatment is
endogenous and measured with error (classical or binary mis-classification)
and the instrument may be invalid, under elicited interval restrictions on
measurement error and endogeneity.  Inference is available both for the
identified set and for the parameter under a uniform reference prior.
"""

from .binary import (
    BinaryMoments,
    alpha_bounds,
    beta_bounds_binary,
    psi_bounds,
    psi_tau_from_alphas,
    psi_under_equality,
    sigma_w_sq_binary,
)
from .errors import (
    DataError,
    EmptyIdentifiedSet,
    InconsistentRestrictionError,
    InsufficientSampleError,
    IVBeliefError,
    NumericalError,
    OutsideIdentifiedSetError,
)
from .identified_set import (
    Restrictions,
    SetBounds,
    beta_tilde,
    beta_tilde_bounds,
    conditional_set_bounds,
    kappa_lower_bound,
    rho_uv,
    rho_uzeta,
    rho_uzeta_bounds,
    rho_uzeta_unrestricted_bounds,
    sigma_u,
)
from .inference import (
    ParamInferenceSummary,
    SetInferenceSummary,
    hpd_interval,
    infer_parameter,
    infer_set,
)
from .manifold import ParamDraw, draw_structural, sample_structural, surface_measure
from .posterior import CovDraw, draw_sigma, posterior_mean
from .reduced_form import (
    Dataset,
    ReducedFormFit,
    fit_reduced_form,
    kappa_from_estimates,
    kappa_from_lambda,
    load_csv,
    make_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryMoments",
    "CovDraw",
    "DataError",
    "Dataset",
    "EmptyIdentifiedSet",
    "IVBeliefError",
    "InconsistentRestrictionError",
    "InsufficientSampleError",
    "NumericalError",
    "OutsideIdentifiedSetError",
    "ParamDraw",
    "ParamInferenceSummary",
    "ReducedFormFit",
    "Restrictions",
    "SetBounds",
    "SetInferenceSummary",
    "alpha_bounds",
    "beta_bounds_binary",
    "beta_tilde",
    "beta_tilde_bounds",
    "conditional_set_bounds",
    "draw_sigma",
    "draw_structural",
    "fit_reduced_form",
    "hpd_interval",
    "infer_parameter",
    "infer_set",
    "kappa_from_estimates",
    "kappa_from_lambda",
    "kappa_lower_bound",
    "load_csv",
    "make_dataset",
    "posterior_mean",
    "psi_bounds",
    "psi_tau_from_alphas",
    "psi_under_equality",
    "rho_uv",
    "rho_uzeta",
    "rho_uzeta_bounds",
    "rho_uzeta_unrestricted_bounds",
    "sample_structural",
    "sigma_u",
    "sigma_w_sq_binary",
    "surface_measure",
]
