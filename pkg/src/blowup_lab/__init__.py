"""Numerical lab for profile-tracking blow-up in a perturbed semilinear heat equation.

The package studies u_t = u_xx + |u|^{p-1} u plus subcritical gradient and
zero-order perturbations, in one space dimension.  It provides the
similarity-variable change of frame, the blow-up profile and its spectral
decomposition in the Gaussian-weighted Hermite basis, the exact linearized
semigroup, a structure-preserving time stepper, the shrinking trap set
with exit classification, two-parameter shooting on the expanding modes,
and a direct physical-variables integration that closes the loop on the
predicted blow-up time, point, and profile.
"""

from .model import ModelParams, ParameterError, make_params

__all__ = ["ModelParams", "ParameterError", "make_params", "__version__"]

__version__ = "0.1.0"
