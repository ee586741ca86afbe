"""Command-line front end.

Subcommands: solve, compare, oracle, sssp (build | query), render, gen.
Reports are line-delimited key=value text so tests can parse them without
a schema. Exit codes: 0 success, 1 usage, 2 validation, 3 algorithm
failure, 4 acceptance violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass

from . import fixtures, geom, render
from .mesh import MeshError, Point2, WeightedMesh, load_mesh, locate_point, save_mesh
from .optics import path_cost
from .oracle import OracleError, build_steiner_graph, oracle_auto, oracle_shortest
from .params import ParamUnderflowError
from .wavefront import SPMap, UnreachableError, WavefrontError, build_sssp_map, run
from .wavefront.spmap import query_sssp

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_ALGORITHM = 3
EXIT_ACCEPTANCE = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to status 2; we use 1
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    mesh_path: str
    source: object = None
    target: object = None
    epsilon: float = 0.1
    mode: str = "practical"
    budget: int | None = None
    seed: int = 0
    svg_out: str | None = None
    plot_out: str | None = None
    event_log: str | None = None

    def validate(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise UsageError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.budget is not None and self.budget <= 0:
            raise UsageError(f"budget must be positive, got {self.budget}")
        if self.mode not in ("strict", "practical"):
            raise UsageError(f"mode must be strict or practical, got {self.mode!r}")


def _parse_site(text: str):
    """A site is either a vertex index or an x,y point."""
    if "," in text:
        try:
            xs, ys = text.split(",")
            return Point2(float(xs), float(ys))
        except ValueError as exc:
            raise UsageError(f"bad point {text!r}: expected x,y") from exc
    try:
        return int(text)
    except ValueError as exc:
        raise UsageError(f"bad site {text!r}: expected vertex index or x,y") from exc


def _site_point(mesh: WeightedMesh, site) -> Point2:
    if isinstance(site, int):
        if not (0 <= site < len(mesh.vertices)):
            raise MeshError(f"vertex index {site} out of range 0..{len(mesh.vertices) - 1}")
        return mesh.vertices[site]
    return site


def _emit(out, key, value):
    if isinstance(value, float):
        value = repr(value)
    out.write(f"{key}={value}\n")


def _fmt_poly(poly) -> str:
    return ";".join(f"{p[0]:.9g},{p[1]:.9g}" for p in poly)


def _path_refractions(mesh: WeightedMesh, poly) -> list[dict]:
    """Interior joints of a polyline that sit on an edge between faces of
    different weight, with the local Snell residual."""
    events = []
    for i in range(1, len(poly) - 1):
        q = poly[i]
        loc = locate_point(mesh, Point2(q[0], q[1]))
        if loc.kind != "edge":
            continue
        e = mesh.edges[loc.index]
        if e.is_boundary:
            continue
        w_in = _segment_weight(mesh, poly[i - 1], q)
        w_out = _segment_weight(mesh, q, poly[i + 1])
        if w_in is None or w_out is None or abs(w_in - w_out) < 1e-15:
            continue
        d_in = geom.unit(geom.sub(q, poly[i - 1]))
        d_out = geom.unit(geom.sub(poly[i + 1], q))
        t_hat = geom.unit(geom.sub(mesh.vertices[e.v], mesh.vertices[e.u]))
        # sin(incidence from normal) = |tangential component|
        residual = abs(w_in * abs(geom.dot(d_in, t_hat)) - w_out * abs(geom.dot(d_out, t_hat)))
        events.append({"edge": loc.index, "point": tuple(q), "residual": residual})
    return events


def _segment_weight(mesh: WeightedMesh, a, b) -> float | None:
    mid = Point2((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
    loc = locate_point(mesh, mid)
    if loc.kind == "face":
        return mesh.faces[loc.index].weight
    if loc.kind == "edge":
        return mesh.edges[loc.index].weight
    return None


def _write_event_log(path, log, notes):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in log:
            toks = []
            for k in ("kind", "key", "bundle", "vertex", "edge", "lo", "hi", "point", "stale"):
                if k in rec:
                    v = rec[k]
                    if isinstance(v, tuple):
                        v = f"{v[0]:.9g},{v[1]:.9g}"
                    elif isinstance(v, bool):
                        v = int(v)
                    elif isinstance(v, float):
                        v = f"{v:.12g}"
                    toks.append(f"{k}={v}")
            fh.write(" ".join(toks) + "\n")
        for note in notes:
            toks = [f"note={note['note']}"]
            for k, v in note.items():
                if k != "note":
                    toks.append(f"{k}={v}")
            fh.write(" ".join(toks) + "\n")


# -- subcommands -------------------------------------------------------------


def cmd_solve(cfg: RunConfig, out=sys.stdout) -> int:
    cfg.validate()
    mesh = load_mesh(cfg.mesh_path, allow_disconnected=True)
    s = _site_point(mesh, cfg.source)
    t = _site_point(mesh, cfg.target)
    t0 = time.perf_counter()
    result = run(mesh, s, t, epsilon=cfg.epsilon, mode=cfg.mode, event_budget=cfg.budget)
    wall = time.perf_counter() - t0
    pc = path_cost(mesh, result.polyline)
    if pc > 0 and abs(result.cost - pc) > 1e-9 * max(1.0, pc):
        raise WavefrontError(
            f"reported cost {result.cost!r} disagrees with path_cost {pc!r}"
        )
    _emit(out, "mesh", cfg.mesh_path)
    _emit(out, "epsilon", cfg.epsilon)
    _emit(out, "mode", cfg.mode)
    _emit(out, "cost", result.cost)
    _emit(out, "path_cost", pc)
    _emit(out, "events", result.events)
    _emit(out, "settled", result.stats.get("settled", 0))
    _emit(out, "violations", result.stats.get("violations", 0))
    _emit(out, "wall_time_s", f"{wall:.4f}")
    _emit(out, "points", len(result.polyline))
    _emit(out, "path", _fmt_poly(result.polyline))
    refr = _path_refractions(mesh, result.polyline)
    _emit(out, "refractions", len(refr))
    for ev in refr:
        _emit(out, "refraction",
              f"edge:{ev['edge']},x:{ev['point'][0]:.9g},y:{ev['point'][1]:.9g},"
              f"residual:{ev['residual']:.3g}")
    if cfg.event_log:
        _write_event_log(cfg.event_log, result.log, result.notes)
        _emit(out, "event_log", cfg.event_log)
    if cfg.svg_out:
        render.save_svg(cfg.svg_out, render.render_svg(
            mesh, path=result.polyline, points=[tuple(s), tuple(t)]))
        _emit(out, "svg", cfg.svg_out)
    if cfg.plot_out:
        render.render_figure(
            mesh, cfg.plot_out, path=result.polyline,
            rays=render.wavefront_snapshot(result.spmap),
            points=[tuple(s), tuple(t)],
            title=f"cost {result.cost:.6f}  events {result.events}")
        _emit(out, "plot", cfg.plot_out)
    return EXIT_OK


def cmd_compare(cfg: RunConfig, steiner_m: int | None, out=sys.stdout) -> int:
    cfg.validate()
    mesh = load_mesh(cfg.mesh_path, allow_disconnected=True)
    if not isinstance(cfg.source, int) or not isinstance(cfg.target, int):
        raise UsageError("compare needs vertex indices for --source and --target")
    s, t = cfg.source, cfg.target
    result = run(mesh, mesh.vertices[s], mesh.vertices[t],
                 epsilon=cfg.epsilon, mode=cfg.mode, event_budget=cfg.budget)
    if steiner_m is not None:
        ora = oracle_shortest(build_steiner_graph(mesh, steiner_m), s, t)
    else:
        ora = oracle_auto(mesh, s, t, epsilon=cfg.epsilon)
    lo = ora.cost - ora.slack
    hi = (1.0 + cfg.epsilon) * (ora.cost + ora.slack)
    ok = lo - 1e-12 <= result.cost <= hi + 1e-12
    _emit(out, "wavefront_cost", result.cost)
    _emit(out, "oracle_cost", ora.cost)
    _emit(out, "oracle_slack", ora.slack)
    _emit(out, "oracle_m", ora.m)
    _emit(out, "ratio", result.cost / ora.cost if ora.cost > 0 else math.inf)
    _emit(out, "band_lo", lo)
    _emit(out, "band_hi", hi)
    _emit(out, "events", result.events)
    _emit(out, "ok", int(ok))
    if cfg.plot_out:
        render.render_figure(
            mesh, cfg.plot_out, path=result.polyline,
            rays=[[tuple(p) for p in ora.polyline]] if ora.polyline else None,
            points=[tuple(mesh.vertices[s]), tuple(mesh.vertices[t])],
            title=f"wavefront {result.cost:.6f} vs oracle {ora.cost:.6f}")
        _emit(out, "plot", cfg.plot_out)
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def cmd_oracle(cfg: RunConfig, steiner_m: int | None, out=sys.stdout) -> int:
    mesh = load_mesh(cfg.mesh_path, allow_disconnected=True)
    if not isinstance(cfg.source, int) or not isinstance(cfg.target, int):
        raise UsageError("oracle needs vertex indices for --source and --target")
    if steiner_m is not None:
        ora = oracle_shortest(build_steiner_graph(mesh, steiner_m), cfg.source, cfg.target)
    else:
        ora = oracle_auto(mesh, cfg.source, cfg.target, epsilon=cfg.epsilon)
    _emit(out, "cost", ora.cost)
    _emit(out, "slack", ora.slack)
    _emit(out, "m", ora.m)
    _emit(out, "points", len(ora.polyline))
    _emit(out, "path", _fmt_poly(ora.polyline))
    return EXIT_OK


def cmd_sssp_build(cfg: RunConfig, map_out: str, out=sys.stdout) -> int:
    cfg.validate()
    mesh = load_mesh(cfg.mesh_path, allow_disconnected=True)
    s = _site_point(mesh, cfg.source)
    spmap = build_sssp_map(mesh, s, epsilon=cfg.epsilon, mode=cfg.mode,
                           event_budget=cfg.budget)
    with open(map_out, "w", encoding="utf-8") as fh:
        fh.write(spmap.to_json())
    _emit(out, "map", map_out)
    _emit(out, "records", sum(1 for r in spmap.records if r.live))
    _emit(out, "vertices", len(spmap.vdist))
    _emit(out, "events", spmap.run_info.get("events", 0))
    return EXIT_OK


def cmd_sssp_query(map_path: str, mesh_path: str, q: Point2, out=sys.stdout,
                   plot_out: str | None = None) -> int:
    mesh = load_mesh(mesh_path, allow_disconnected=True)
    try:
        with open(map_path, encoding="utf-8") as fh:
            spmap = SPMap.from_json(fh.read(), mesh)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise MeshError(f"cannot read map file {map_path}: {exc}") from exc
    cost, poly = query_sssp(spmap, mesh, q)
    _emit(out, "cost", cost)
    _emit(out, "points", len(poly))
    _emit(out, "path", _fmt_poly(poly))
    if plot_out:
        render.render_figure(mesh, plot_out, path=poly,
                             rays=render.wavefront_snapshot(spmap),
                             points=[tuple(q)], title=f"query cost {cost:.6f}")
        _emit(out, "plot", plot_out)
    return EXIT_OK


def cmd_render(mesh_path: str, svg_out: str | None, polyline: str | None,
               event_log: str | None, plot_out: str | None, out=sys.stdout) -> int:
    mesh = load_mesh(mesh_path, allow_disconnected=True)
    path = None
    if polyline:
        path = [tuple(map(float, pair.split(","))) for pair in polyline.split(";")]
    rays = None
    if event_log:
        rays = []
        with open(event_log, encoding="utf-8") as fh:
            for line in fh:
                toks = dict(t.split("=", 1) for t in line.split() if "=" in t)
                if "lo" in toks and "hi" in toks:
                    lo = tuple(map(float, toks["lo"].split(",")))
                    hi = tuple(map(float, toks["hi"].split(",")))
                    rays.append([lo, hi])
    if svg_out:
        render.save_svg(svg_out, render.render_svg(mesh, path=path, rays=rays))
        _emit(out, "svg", svg_out)
    if plot_out:
        render.render_figure(mesh, plot_out, path=path, rays=rays)
        _emit(out, "plot", plot_out)
    if not svg_out and not plot_out:
        raise UsageError("render needs --svg and/or --plot")
    return EXIT_OK


def cmd_gen(kind: str, seed: int, size: int, out_path: str, out=sys.stdout) -> int:
    if kind not in fixtures.KINDS:
        raise UsageError(f"unknown fixture kind {kind!r}; choose from {fixtures.KINDS}")
    mesh = fixtures.make(kind, seed=seed, size=size)
    save_mesh(mesh, out_path)
    _emit(out, "mesh", out_path)
    _emit(out, "vertices", len(mesh.vertices))
    _emit(out, "faces", len(mesh.faces))
    _emit(out, "edges", len(mesh.edges))
    return EXIT_OK


# -- argument wiring ---------------------------------------------------------


def _add_common(p, target=True):
    p.add_argument("--mesh", required=True)
    p.add_argument("--source", required=True)
    if target:
        p.add_argument("--target", required=True)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--mode", choices=("strict", "practical"), default="practical")
    p.add_argument("--budget", type=int, default=None)


def build_parser() -> _Parser:
    ap = _Parser(prog="wrpath", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="approximate weighted shortest path")
    _add_common(p)
    p.add_argument("--svg", default=None)
    p.add_argument("--plot", default=None)
    p.add_argument("--event-log", default=None)

    p = sub.add_parser("compare", help="wavefront vs Steiner-graph oracle")
    _add_common(p)
    p.add_argument("--steiner-m", type=int, default=None)
    p.add_argument("--plot", default=None)

    p = sub.add_parser("oracle", help="Steiner-graph baseline distance")
    _add_common(p)
    p.add_argument("--steiner-m", type=int, default=None)

    p = sub.add_parser("sssp", help="single-source map build / query")
    ssub = p.add_subparsers(dest="sssp_command", required=True)
    pb = ssub.add_parser("build")
    _add_common(pb, target=False)
    pb.add_argument("--map", required=True)
    pq = ssub.add_parser("query")
    pq.add_argument("--map", required=True)
    pq.add_argument("--mesh", required=True)
    pq.add_argument("--point", required=True)
    pq.add_argument("--plot", default=None)

    p = sub.add_parser("render", help="SVG / figure of a mesh, path, event log")
    p.add_argument("--mesh", required=True)
    p.add_argument("--svg", default=None)
    p.add_argument("--plot", default=None)
    p.add_argument("--polyline", default=None)
    p.add_argument("--event-log", default=None)

    p = sub.add_parser("gen", help="write a fixture mesh file")
    p.add_argument("--kind", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--out", required=True)
    return ap


def _dispatch(args, out) -> int:
    if args.command == "solve":
        cfg = RunConfig(args.mesh, _parse_site(args.source), _parse_site(args.target),
                        args.epsilon, args.mode, args.budget,
                        svg_out=args.svg, plot_out=args.plot, event_log=args.event_log)
        return cmd_solve(cfg, out)
    if args.command == "compare":
        cfg = RunConfig(args.mesh, _parse_site(args.source), _parse_site(args.target),
                        args.epsilon, args.mode, args.budget, plot_out=args.plot)
        return cmd_compare(cfg, args.steiner_m, out)
    if args.command == "oracle":
        cfg = RunConfig(args.mesh, _parse_site(args.source), _parse_site(args.target),
                        args.epsilon, args.mode, args.budget)
        return cmd_oracle(cfg, args.steiner_m, out)
    if args.command == "sssp":
        if args.sssp_command == "build":
            cfg = RunConfig(args.mesh, _parse_site(args.source), None,
                            args.epsilon, args.mode, args.budget)
            return cmd_sssp_build(cfg, args.map, out)
        q = _parse_site(args.point)
        if isinstance(q, int):
            raise UsageError("sssp query --point must be x,y")
        return cmd_sssp_query(args.map, args.mesh, q, out, plot_out=args.plot)
    if args.command == "render":
        return cmd_render(args.mesh, args.svg, args.polyline, args.event_log,
                          args.plot, out)
    if args.command == "gen":
        return cmd_gen(args.kind, args.seed, args.size, args.out, out)
    raise UsageError(f"unknown command {args.command!r}")


def main(argv=None, out=sys.stdout) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _dispatch(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MeshError, ParamUnderflowError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UnreachableError, WavefrontError, OracleError) as exc:
        print(f"algorithm error: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
