"""Wavefront propagation engine: bundles of refracting rays driven by events."""

from ..params import DiscretizationParams, ParamUnderflowError, compute_params
from .engine import (
    Bundle,
    PathResult,
    UnreachableError,
    WavefrontError,
    WavefrontState,
    build_sssp_map,
    extend_bundle,
    handle_critical_incidence,
    init_vertex_wavefront,
    prepare_state,
    run,
    split_bundle_segment,
    split_bundle_tree,
)
from .interpolate import InterpolatedStrike, interpolate_ray, interpolation_error, probe_bundle
from .sources import (
    CriticalSource,
    RayRef,
    SegmentSource,
    SourceBook,
    SourceRef,
    VertexSource,
)
from .spmap import CoverageRecord, PointRecord, SPMap, query_sssp

__all__ = [
    "Bundle",
    "CoverageRecord",
    "CriticalSource",
    "DiscretizationParams",
    "SegmentSource",
    "SourceRef",
    "VertexSource",
    "InterpolatedStrike",
    "ParamUnderflowError",
    "PathResult",
    "PointRecord",
    "RayRef",
    "SPMap",
    "SourceBook",
    "UnreachableError",
    "WavefrontError",
    "WavefrontState",
    "build_sssp_map",
    "compute_params",
    "extend_bundle",
    "handle_critical_incidence",
    "init_vertex_wavefront",
    "interpolate_ray",
    "interpolation_error",
    "prepare_state",
    "probe_bundle",
    "query_sssp",
    "run",
    "split_bundle_segment",
    "split_bundle_tree",
]
