"""Barycenters, variance inequalities and rate experiments on metric spaces."""

from .analysis import (
    BoundInputs,
    CoveringReport,
    ExtensionVIReport,
    KConvexityReport,
    PCIdentityReport,
    VarianceFit,
    bound_theorem1,
    bound_theorem2_rate,
    cap_convexity_constant,
    covering_number,
    default_probes,
    extension_limit,
    extension_vi_check,
    fit_variance_inequality,
    greedy_net_profile,
    kconvexity_probe,
    pc_identity_check,
    pointwise_k,
)
from .barycenter import (
    BarycenterProblem,
    BarycenterResult,
    DiscreteMeasure,
    SolverOptions,
    exp_barycenter_residual,
    mean_functional,
    sample_empirical,
    solve_barycenter,
    solve_gaussian_barycenter,
)
from .functionals import (
    FunctionalSpec,
    RegularityReport,
    SinkhornResult,
    dfA3_constants,
    eval_functional,
    fdiv_regularity,
    fdiv_value,
    interaction_regularity,
    interaction_value,
    register_potential,
    sinkhorn_value,
)
from .gaussian import GaussianBures, GaussianPoint, bures_distance, bures_map
from .gridot import GridW2Result, GridWasserstein, grid_w2
from .metric_core import (
    CurvatureReport,
    GeodesicView,
    Point,
    Space,
    TangentVector,
    check_curvature_sign,
    comparison_angle,
    distance,
    geodesic,
    log_map,
    tangent_inner,
    tangent_norm_diff,
)
from .rates import RateExperiment, RateFit, fit_loglog, rates_csv, run_rate_experiment
from .spaces import Euclidean, SpiderTree, Sphere, Wasserstein1D

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
