"""Numerical potential theory for the p-Laplacian on weighted graphs.

Green functions on balls, capacities, unit-current path decompositions,
and volume-growth series reports, with every inequality in the chain from
local estimates to the nonexistence criterion checked numerically.
"""

from .criterion import (CONVERGES, DIVERGES, INCONCLUSIVE, DyadicReport,
                        MidrangeRow, SeriesReport, TailEstimate, classify,
                        cut_series_terms, cut_volume_check, dyadic_blocks,
                        exponent_identity, extrapolate_cut_tail,
                        midrange_cut_bound, volume_series_terms)
from .dirichlet import (MinimizeReport, SolveOptions, StageReport,
                        minimize_p_dirichlet)
from .errors import (ConsistencyError, GraphFormatError, GraphValidationError,
                     PotentialError, ResourceLimitError, SolverError,
                     VerificationError)
from .flows import (ChainReport, CheckRecord, PathMeasure, UnitFlow,
                    decompose_paths, edge_marginals, empirical_lower_bound,
                    first_exit_indices, flow_checks, orient_flow,
                    parallel_sum, path_hardy_check)
from .graphs import (BallProfile, WeightedGraph, ball_profile, build_lattice,
                     build_radial_model, build_tree, load_graph, save_graph)
from .green import (LOOKS_NON_PARABOLIC, LOOKS_PARABOLIC, GreenFunction,
                    ProbeReport, TemplateFit, capacity, compute_L,
                    green_normalization_check, parabolicity_probe,
                    sandwich_upper_bound, solve_green)
from .operators import (ExponentParams, VertexFunction, as_values,
                        defect_tolerance, dirichlet_pairing,
                        is_p_superharmonic, load_vertex_function, p_energy,
                        p_laplacian, p_laplacian_all, phi_p,
                        save_vertex_function, supersolution_defect)
from .verify import (IDENTICALLY_ZERO, STRICTLY_POSITIVE, SandwichReport,
                     ShootReport, SuiteReport, hardy_check, hardy_suite,
                     picone_check, picone_suite, positivity_propagation,
                     positivity_suite, run_suites, sandwich_demo,
                     sandwich_suite, shoot_radial_supersolution)

__version__ = "0.1.0"

__all__ = [
    "BallProfile", "ChainReport", "CheckRecord", "ConsistencyError",
    "CONVERGES", "DIVERGES", "DyadicReport", "ExponentParams",
    "GraphFormatError", "GraphValidationError", "GreenFunction",
    "IDENTICALLY_ZERO", "INCONCLUSIVE", "LOOKS_NON_PARABOLIC",
    "LOOKS_PARABOLIC", "MidrangeRow", "MinimizeReport", "PathMeasure",
    "PotentialError", "ProbeReport", "ResourceLimitError", "SandwichReport",
    "SeriesReport", "ShootReport", "SolveOptions", "SolverError",
    "StageReport", "STRICTLY_POSITIVE", "SuiteReport", "TailEstimate",
    "TemplateFit", "UnitFlow", "VerificationError", "VertexFunction",
    "WeightedGraph", "as_values", "ball_profile", "build_lattice",
    "build_radial_model", "build_tree", "capacity", "classify", "compute_L",
    "cut_series_terms", "cut_volume_check", "decompose_paths",
    "defect_tolerance", "dirichlet_pairing", "dyadic_blocks",
    "edge_marginals", "empirical_lower_bound", "exponent_identity",
    "extrapolate_cut_tail", "first_exit_indices", "flow_checks",
    "green_normalization_check", "hardy_check", "hardy_suite",
    "is_p_superharmonic", "load_graph", "load_vertex_function",
    "midrange_cut_bound", "minimize_p_dirichlet", "orient_flow", "p_energy",
    "p_laplacian", "p_laplacian_all", "parabolicity_probe", "parallel_sum",
    "path_hardy_check", "phi_p", "picone_check", "picone_suite",
    "positivity_propagation", "positivity_suite", "run_suites",
    "sandwich_demo", "sandwich_suite", "sandwich_upper_bound", "save_graph",
    "save_vertex_function", "shoot_radial_supersolution", "solve_green",
    "supersolution_defect", "volume_series_terms",
]
