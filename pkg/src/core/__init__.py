"""
Core analyses: convexity verdicts, contact orders, hulls, exhaustions and bumps.
"""

from .convexity import (
    ConvexificationResult,
    ConvexityClass,
    ConvexityVerdict,
    OracleResult,
    WitnessResult,
    classify_boundary,
    classify_point,
    defining_function_independence,
    geometric_convexity_oracle,
    inner_strongly_convex_approx,
    nonconvexity_witness,
    require_convex,
    restricted_form,
    strong_convexify,
    transform_domain,
)
from .order import (
    OrderStatus,
    OrderVerdict,
    contact_order,
    evenness_check,
    farthest_point_patch,
    order_stability_scan,
    order_table,
    squaring_map_example,
)
from .hulls import (
    CompactSet,
    FunctionFamily,
    chord_witness,
    f_hull,
    gauge_field,
    is_extreme,
    krein_milman_check,
    minkowski_gauge,
    segment_compactness_check,
    support_defining_function,
    support_function,
)
from .exhaust import (
    ExhaustionFunction,
    ExhaustionKind,
    SublevelDecomposition,
    max_exhaustion,
    mollify,
    neg_log_distance_field,
    strongly_convex_smoothing_sequence,
    sublevel_decomposition,
    weak_convexity_test,
)
from .bump import (
    BumpData,
    BumpResult,
    GraphDomain2D,
    bump_domain_2d,
    bump_order_choice,
    bump_polynomial,
    bump_result,
)
from .reports import AnalysisReport

__all__ = [
    # Convexity
    "ConvexityClass",
    "ConvexityVerdict",
    "ConvexificationResult",
    "OracleResult",
    "WitnessResult",
    "restricted_form",
    "classify_point",
    "classify_boundary",
    "geometric_convexity_oracle",
    "require_convex",
    "defining_function_independence",
    "strong_convexify",
    "nonconvexity_witness",
    "inner_strongly_convex_approx",
    "transform_domain",
    # Order
    "OrderStatus",
    "OrderVerdict",
    "contact_order",
    "evenness_check",
    "order_table",
    "order_stability_scan",
    "farthest_point_patch",
    "squaring_map_example",
    # Hulls
    "FunctionFamily",
    "CompactSet",
    "f_hull",
    "segment_compactness_check",
    "is_extreme",
    "chord_witness",
    "support_function",
    "support_defining_function",
    "minkowski_gauge",
    "gauge_field",
    "krein_milman_check",
    # Exhaustion
    "ExhaustionKind",
    "ExhaustionFunction",
    "SublevelDecomposition",
    "max_exhaustion",
    "neg_log_distance_field",
    "mollify",
    "strongly_convex_smoothing_sequence",
    "weak_convexity_test",
    "sublevel_decomposition",
    # Bump
    "BumpData",
    "BumpResult",
    "GraphDomain2D",
    "bump_polynomial",
    "bump_domain_2d",
    "bump_result",
    "bump_order_choice",
    # Reports
    "AnalysisReport",
]
