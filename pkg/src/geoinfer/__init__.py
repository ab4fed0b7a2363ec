"""Geometric inference on compact subsets of R^d.

Distance functions and their generalised gradients, mu-medial axes, boundary
and curvature measures, and Monte Carlo checks of their Hausdorff stability.
"""

__version__ = "0.1.0"

from .curvature import CurvatureFit, RegionBins, cube_oracle, estimate_reach, steiner_fit, unit_ball_volume
from .distance import GradientInfo, ProjectionSet, distance, gradient, project, projection_set, smallest_enclosing_ball
from .errors import GeometryError, InputError, MedialAxisError
from .index import NNIndex, build_index
from .measures import DiscreteMeasure, Offset, TransportPlan, boundary_measure, hausdorff, wasserstein1
from .medial import (
    CoveringReport,
    CoveringTable,
    MedialPoint,
    MedialSample,
    covering_scaling_experiment,
    ell,
    greedy_net,
    psi,
    sample_mu_medial,
    tau,
)
from .sampling import sample_uniform
from .shapes import Ball, Box, Cloud, CompactShape, SegmentSet, Union, bounding_diameter, comb
from .stability import (
    Estimate,
    HolderCurve,
    InclusionReport,
    StabilityReport,
    check_critical_stability,
    check_delta_inclusion,
    delta_L_measure,
    holder_experiment,
    l1_projection_distance,
    stability_report,
)
