"""Interpolation of virtual wavefront rays between a bundle's flanks.

Within a bundle whose flanks share an edge sequence, strike point, distance,
and incidence angle all vary (to first order) linearly across the front, so a
virtual ray at fraction gamma is reconstructed without tracing it.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .. import geom
from ..optics import trace_ray


class InterpolatedStrike(NamedTuple):
    point: tuple[float, float]
    theta: float | None  # signed incidence angle at the front edge
    dist: float
    edge: int | None


def interpolate_ray(bundle, gamma: float) -> InterpolatedStrike:
    """Virtual ray of a bundle at fraction gamma in [0, 1] of its front."""
    g = min(1.0, max(0.0, float(gamma)))
    p = geom.lerp(bundle.front_pts[0], bundle.front_pts[1], g)
    d0, d1 = bundle.front_dists
    d = d0 + g * (d1 - d0)
    t0, t1 = bundle.front_thetas
    theta = None if t0 is None or t1 is None else t0 + g * (t1 - t0)
    return InterpolatedStrike(point=tuple(p), theta=theta, dist=d, edge=bundle.front_edge)


def probe_bundle(mesh, origin, face: int, ang_lo: float, ang_hi: float,
                 budget: int | None = None, d0: float = 0.0):
    """Trace two rays from one origin and bundle them at their last shared edge.

    Test scaffolding: produces a minimal Bundle-shaped object so interpolation
    accuracy can be measured against directly traced rays in between.
    """
    from .engine import Bundle
    from .sources import RayRef

    lo_tr = trace_ray(mesh, origin, face, geom.from_angle(ang_lo), budget=budget,
                      start_dist=d0)
    hi_tr = trace_ray(mesh, origin, face, geom.from_angle(ang_hi), budget=budget,
                      start_dist=d0)
    shared = 0
    for a, b in zip(lo_tr.edge_sequence, hi_tr.edge_sequence):
        if a != b:
            break
        shared += 1
    if shared == 0:
        raise ValueError("rays diverge immediately; no shared front")
    k = shared - 1
    clo = lo_tr.crossings[k]
    chi = hi_tr.crossings[k]
    return Bundle(
        bid=-1, source_kind="tree", origin=-1,
        lo=RayRef(-1, 0), hi=RayRef(-1, 1),
        lo_trace=lo_tr, hi_trace=hi_tr, lo_k=k, hi_k=k,
        front_edge=clo.edge, front_face_in=clo.face_in, front_face_out=clo.face_out,
        front_pts=(tuple(clo.point), tuple(chi.point)),
        front_dists=(clo.dist, chi.dist),
        front_thetas=(clo.theta_in * clo.side, chi.theta_in * chi.side),
        lb=min(clo.dist, chi.dist),
        edge_sequence=list(lo_tr.edge_sequence[:shared]),
    )


def midpoint_reference(mesh, origin, face: int, ang_lo: float, ang_hi: float,
                       bundle, budget: int | None = None, d0: float = 0.0):
    """Trace the angular midpoint ray and return its strike at the bundle front.

    Returns None if the midpoint ray misses the bundle's front edge, which
    voids the comparison rather than failing it.
    """
    mid = 0.5 * (ang_lo + ang_hi)
    tr = trace_ray(mesh, origin, face, geom.from_angle(mid), budget=budget, start_dist=d0)
    for c in tr.crossings:
        if c.edge == bundle.front_edge and c.face_in == bundle.front_face_in:
            return InterpolatedStrike(point=tuple(c.point), theta=c.theta_in * c.side,
                                      dist=c.dist, edge=c.edge)
    return None


def interpolation_error(mesh, origin, face: int, ang_lo: float, ang_hi: float,
                        budget: int | None = None) -> dict | None:
    """Compare interpolate_ray at gamma=0.5-ish against the traced midpoint ray.

    The comparison gamma is chosen so both describe the same virtual ray: the
    midpoint ray's actual strike is projected onto the front interval first.
    """
    bundle = probe_bundle(mesh, origin, face, ang_lo, ang_hi, budget=budget)
    ref = midpoint_reference(mesh, origin, face, ang_lo, ang_hi, bundle, budget=budget)
    if ref is None:
        return None
    p0, p1 = bundle.front_pts
    span = geom.dist(p0, p1)
    if span < 1e-300:
        return None
    gamma = geom.project_param(ref.point, p0, p1)
    if not (0.0 <= gamma <= 1.0):
        return None
    est = interpolate_ray(bundle, gamma)
    front_len = mesh.edge_length(bundle.front_edge)
    err_pt = geom.dist(est.point, ref.point) / max(front_len, 1e-300)
    err_d = abs(est.dist - ref.dist) / max(abs(ref.dist), 1e-300)
    err_th = (
        abs(est.theta - ref.theta) / max(abs(ref.theta), 1e-3)
        if est.theta is not None
        else math.inf
    )
    return {"point": err_pt, "dist": err_d, "theta": err_th, "gamma": gamma,
            "span": span, "edge": bundle.front_edge}
