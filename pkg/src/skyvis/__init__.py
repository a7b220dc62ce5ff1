"""Sky-visibility statistics of a ground user in a random city.

Buildings form a marked point process along a half-line; the package
computes the distribution of the blockage angle (and the complementary
visible sky angle) in closed form for four city variants, the joint law
of the building that casts the blockage, the visibility enhancement from
a transmissive or reflective surface mounted on that building, and the
connectivity of an aerial node layer — each backed by seeded Monte-Carlo
validation.

The realization-reduction kernel has a compiled backend and a pure-NumPy
fallback selected at import time; set ``SKYVIS_PURE=1`` to force the
fallback.  Both produce bit-identical results.
"""
from .analytic import (AngleDistribution, BlockingMeans, angle_distribution,
                       blocking_index_mean, blocking_index_pmf,
                       blocking_means, cdf_tan_theta, cdf_tan_theta_elevated,
                       cdf_theta, cdf_theta_elevated, cdf_psi,
                       dm_cdf_tan_theta, joint_density, los_probability,
                       marginal_h, marginal_x, marginal_x_cdf, mean_psi,
                       mean_theta, pdf_theta, pdf_theta_elevated, pdf_psi)
from .coverage import (MEAN_LENGTH_DIVERGES, CoverageScenario, DivergentMean,
                       mean_L, mean_l, tau_conditional, tau_unconditional,
                       tau_unconditional_quadrature, visible_extension,
                       visible_length)
from .errors import (DomainError, EmptyRealizationError, ParameterError,
                     QuadratureError, SampleSizeError, SkyvisError,
                     TruncationError)
from .montecarlo import (BlockageBatch, GainBatch, auto_t_min,
                         characteristic_tangent, sample_blockage,
                         sample_gain_triples, sample_view_tangents)
from .numerics import (DEFAULT_QUADRATURE, QuadratureSpec, bessel_k1, dilog,
                       integrate, upper_incomplete_gamma)
from .process import (BlockageResult, EnvParams, ModelKind, Realization,
                      blockage_angle, mirror_realization,
                      realization_from_csv, realization_to_csv,
                      sample_realization, truncation_distance)
from .ris import (GainEstimate, RisMode, angular_gains,
                  deconditioned_mean_angle, refl_angle_distribution,
                  refl_cdf_tan, refl_pdf_tan, trans_angle_distribution,
                  trans_cdf_tan, trans_moment, trans_pdf_tan)
from .validate import (ValidationReport, empirical_cdf, ks_test,
                       majority_pass, run_battery, validate_angle,
                       validate_blocking_index, validate_joint,
                       validate_ris, validate_tau)
from ._kernels import BACKEND_NAME as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "__version__", "KERNEL_BACKEND",
    # errors
    "SkyvisError", "ParameterError", "DomainError", "TruncationError",
    "EmptyRealizationError", "SampleSizeError", "QuadratureError",
    # numerics
    "QuadratureSpec", "DEFAULT_QUADRATURE", "integrate",
    "upper_incomplete_gamma", "bessel_k1", "dilog",
    # process
    "ModelKind", "EnvParams", "Realization", "BlockageResult",
    "sample_realization", "blockage_angle", "mirror_realization",
    "truncation_distance", "realization_to_csv", "realization_from_csv",
    # montecarlo
    "BlockageBatch", "GainBatch", "sample_blockage", "sample_view_tangents",
    "sample_gain_triples", "auto_t_min", "characteristic_tangent",
    # analytic
    "cdf_tan_theta", "dm_cdf_tan_theta", "cdf_theta", "pdf_theta",
    "cdf_psi", "pdf_psi", "cdf_tan_theta_elevated", "cdf_theta_elevated",
    "pdf_theta_elevated", "los_probability", "mean_theta", "mean_psi",
    "AngleDistribution", "angle_distribution", "joint_density",
    "marginal_h", "marginal_x", "marginal_x_cdf", "BlockingMeans",
    "blocking_means", "blocking_index_mean", "blocking_index_pmf",
    # ris
    "RisMode", "trans_cdf_tan", "trans_pdf_tan", "trans_moment",
    "trans_angle_distribution", "refl_cdf_tan", "refl_pdf_tan",
    "refl_angle_distribution", "deconditioned_mean_angle", "GainEstimate",
    "angular_gains",
    # coverage
    "CoverageScenario", "visible_length", "visible_extension", "mean_l",
    "mean_L", "DivergentMean", "MEAN_LENGTH_DIVERGES", "tau_conditional",
    "tau_unconditional", "tau_unconditional_quadrature",
    # validate
    "ValidationReport", "empirical_cdf", "ks_test", "validate_angle",
    "validate_joint", "validate_blocking_index", "validate_ris",
    "validate_tau", "majority_pass", "run_battery",
]
