"""Numerical verification of the Gauss-Bonnet formula for conformal metrics
with cone and cusp singularities on compact model Riemann surfaces."""

from .errors import (DomainError, GBVerifyError, NumericalError, StencilCollisionError,
                     UnsupportedConfigurationError, ValidationError)
from .metric import (Bump, ConformalMetric, ScalarField, branched_cover_pullback,
                     cusp_model_metric, cusp_sphere_metric, evaluate_density, flat_cone_metric,
                     flat_torus_metric, football_metric, perturb, power_cover_pullback,
                     round_sphere_metric)
from .quadrature import (GradedScheme, curvature_lp_norm, dirichlet_energy,
                         integrate_over_surface, total_curvature)
from .surface import Divisor, SingularPoint, Surface, chart_transition, euler_characteristic
from .verify import (VerificationReport, cusp_flux, flux_decomposition, greens_identity_check,
                     lemma_decay, riemann_hurwitz_check, verify_gauss_bonnet)

__version__ = "0.1.0"
