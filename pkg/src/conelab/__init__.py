"""conelab: a numerical laboratory for Lorentzian warped-product cones.

Certified two-sided time-separation tables, comparison-based curvature
verifiers (4-point, entropic curvature-dimension, measure contraction),
Lorentzian optimal transport, and convergence moduli for cone sequences.
"""

from .cone import GeneralizedCone, GridGeodesic, minkowski_strip
from .curvature import (oneill_diagnostics, ricci_reduction,
                        sectional_reduction)
from .converge import (ConeSequence, cone_sequence, covered_gh,
                       ell_converge_check, measured_converge_check,
                       precompact_harness, tangent_cone, uniform_modulus)
from .metricspace import (Correspondence, FiniteMetricSpace, ball_subspace,
                          circle_arc, gh_distance, segment, single_point)
from .model2d import (FourPointConfig, ModelPoint, config_margin, model_tau,
                      realize_comparison, tcbb_verify)
from .transport import (CausalCoupling, DiscreteMeasure, DynamicalPlan,
                        build_dynamical_plan, check_cyclical_monotonicity,
                        distortion, entropy, solve_lp, tcd_verify,
                        tmcp_verify)
from .warp import (ConcavityReport, WarpingFunction, fk_concavity,
                   mollify_fk, normalize_and_bound, slope, slopes)

__all__ = [
    "GeneralizedCone", "GridGeodesic", "minkowski_strip",
    "oneill_diagnostics", "ricci_reduction", "sectional_reduction",
    "ConeSequence", "cone_sequence", "covered_gh", "ell_converge_check",
    "measured_converge_check", "precompact_harness", "tangent_cone",
    "uniform_modulus",
    "Correspondence", "FiniteMetricSpace", "ball_subspace", "circle_arc",
    "gh_distance", "segment", "single_point",
    "FourPointConfig", "ModelPoint", "config_margin", "model_tau",
    "realize_comparison", "tcbb_verify",
    "CausalCoupling", "DiscreteMeasure", "DynamicalPlan",
    "build_dynamical_plan", "check_cyclical_monotonicity", "distortion",
    "entropy", "solve_lp", "tcd_verify", "tmcp_verify",
    "ConcavityReport", "WarpingFunction", "fk_concavity", "mollify_fk",
    "normalize_and_bound", "slope", "slopes",
]

__version__ = "0.1.0"
