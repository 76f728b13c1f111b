"""Wiener-measure probabilities of path bands.

Pipeline: project a band onto nested dyadic time grids, evaluate the
finite-dimensional Gaussian measure of each projected rectangle by
transfer-operator quadrature, and drive the monotone refinement limit.
Cross-validated against counter-based Monte Carlo and closed-form
boundary-crossing formulas.
"""

from .alpha_engine import AlphaValue, QuadratureConfig, alpha_expr, alpha_rectangle
from .errors import (DomainError, InternalConsistencyError, PreconditionError,
                     SetSpecError)
from .gaussians import (IncrementFactor, MinCovariance, cholesky_min,
                        det_min_cov, joint_density, normal_cdf_inv,
                        std_normal_cdf, std_normal_pdf)
from .kernels import USING_COMPILED
from .measure_engine import (ContinuityReport, MeasureEstimate,
                             RefinementPolicy, continuity_suite, mu_expr,
                             oracle_one_sided, oracle_two_sided, phi_band)
from .mc_oracle import (McConfig, McEstimate, estimate_band_bridge,
                        estimate_rectangle, estimate_rectangles_union,
                        sample_path_bridge, sample_vector)
from .pathsets import (BandExpr, BandSet, DifferenceExpr, PiecewisePath,
                       Rectangle, SetExpr, UnionExpr, band, contains,
                       intersect, load_setspec, parse_setspec, path_points,
                       project, structural_relation_check)
from .timegrid import TimeGrid, grid_at_level, merge_with

__version__ = "0.1.0"
