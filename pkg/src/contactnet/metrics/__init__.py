"""Per-snapshot metric battery."""

from .attributes import (
    DetectionDistances,
    InfectionForestSummary,
    InfectionTree,
    LateInfection,
    attribute_timeseries,
    detection_distances,
    entropy,
    infection_forest,
    late_infection_edges,
    lower_median,
)
from .centrality import (
    CentralityResult,
    ConvergenceError,
    edge_betweenness,
    eigenvector_centrality,
    top_central_profile,
)
from .distances import DistanceSummary, distance_summary, summary_from_counts
from .structure import (
    ComponentDecomposition,
    DegreeStats,
    connected_components,
    degree_stats,
    giant_component,
    power_law_exponent,
    triangle_participation,
)

__all__ = [
    "CentralityResult",
    "ComponentDecomposition",
    "ConvergenceError",
    "DegreeStats",
    "DetectionDistances",
    "DistanceSummary",
    "InfectionForestSummary",
    "InfectionTree",
    "LateInfection",
    "attribute_timeseries",
    "connected_components",
    "degree_stats",
    "detection_distances",
    "distance_summary",
    "edge_betweenness",
    "eigenvector_centrality",
    "entropy",
    "giant_component",
    "infection_forest",
    "late_infection_edges",
    "lower_median",
    "power_law_exponent",
    "summary_from_counts",
    "top_central_profile",
    "triangle_participation",
]
