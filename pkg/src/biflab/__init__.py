"""Lyapunov exponents, bifurcation loci and Moran-type laminations for rational maps."""

__version__ = "0.1.0"

from .bifurcation import (BifurcationField, ParameterGrid, compute_field,  # noqa: E402
                          field_from_values, laplacian, mandelbrot_boundary)
from .census import BranchCensus, branch_census, contraction_window  # noqa: E402
from .errors import BifLabError  # noqa: E402
from .family import HolomorphicFamily, constant_family, quadratic_family  # noqa: E402
from .fractal import (BoxCountReport, MoranBound, PointCloud, box_count,  # noqa: E402
                      holder_fit, lyapunov_dimension_bound, moran_bounds)
from .ifs import (ContractionSystem, Hypersurface, compose_word, graph_point,  # noqa: E402
                  graph_hypersurface_intersection, holonomy_pairs,
                  projected_intersection_set, slice_cantor, ternary_system)
from .lattes import EllipticInvariants, LattesMap, build_lattes, perturbed_family  # noqa: E402
from .misiurewicz import (MisiurewiczHit, continue_repelling_cycle,  # noqa: E402
                          find_misiurewicz)
from .sphere import (ComplexPoint, LyapunovEstimate, MeasureSample, RationalMap,  # noqa: E402
                     critical_points, evaluate, find_periodic, lyapunov, polynomial_map,
                     power_map, preimages, sample_measure, spherical_derivative)

__all__ = [
    "BifurcationField",
    "ParameterGrid",
    "compute_field",
    "field_from_values",
    "laplacian",
    "mandelbrot_boundary",
    "BranchCensus",
    "branch_census",
    "contraction_window",
    "BifLabError",
    "HolomorphicFamily",
    "constant_family",
    "quadratic_family",
    "BoxCountReport",
    "MoranBound",
    "PointCloud",
    "box_count",
    "holder_fit",
    "lyapunov_dimension_bound",
    "moran_bounds",
    "ContractionSystem",
    "Hypersurface",
    "compose_word",
    "graph_point",
    "graph_hypersurface_intersection",
    "holonomy_pairs",
    "projected_intersection_set",
    "slice_cantor",
    "ternary_system",
    "EllipticInvariants",
    "LattesMap",
    "build_lattes",
    "perturbed_family",
    "MisiurewiczHit",
    "continue_repelling_cycle",
    "find_misiurewicz",
    "ComplexPoint",
    "LyapunovEstimate",
    "MeasureSample",
    "RationalMap",
    "critical_points",
    "evaluate",
    "find_periodic",
    "lyapunov",
    "polynomial_map",
    "power_map",
    "preimages",
    "sample_measure",
    "spherical_derivative",
]
