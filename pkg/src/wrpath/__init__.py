"""Approximate weighted-region shortest paths on triangulated meshes.

A source wavefront of Snell-refracting rays is discretized, organized into
bundles, and propagated with an event queue; results are cross-checked
against an edge-subdivision (Steiner) graph oracle.
"""

from .mesh import (
    MeshError,
    MeshStats,
    Point2,
    WeightedMesh,
    compute_stats,
    edge_sequence_faces,
    load_mesh,
    locate_point,
    parse_mesh,
    save_mesh,
)
from .optics import (
    Angle,
    RayTrace,
    RefractionOutcome,
    critical_angle,
    path_cost,
    refract,
    shoot_to_point,
    trace_ray,
)
from .params import DiscretizationParams, ParamUnderflowError, compute_params
from .oracle import OracleResult, SteinerGraph, build_steiner_graph, oracle_shortest, oracle_with_point
from .wavefront import (
    Bundle,
    PathResult,
    RayRef,
    SourceRef,
    UnreachableError,
    WavefrontError,
    build_sssp_map,
    interpolate_ray,
    query_sssp,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "Angle",
    "Bundle",
    "DiscretizationParams",
    "MeshError",
    "MeshStats",
    "OracleResult",
    "ParamUnderflowError",
    "PathResult",
    "Point2",
    "RayRef",
    "RayTrace",
    "RefractionOutcome",
    "SourceRef",
    "SteinerGraph",
    "UnreachableError",
    "WavefrontError",
    "WeightedMesh",
    "build_steiner_graph",
    "build_sssp_map",
    "compute_params",
    "compute_stats",
    "critical_angle",
    "edge_sequence_faces",
    "interpolate_ray",
    "load_mesh",
    "locate_point",
    "oracle_shortest",
    "oracle_with_point",
    "parse_mesh",
    "path_cost",
    "query_sssp",
    "refract",
    "run",
    "save_mesh",
    "shoot_to_point",
    "trace_ray",
]
