"""Command-line front end.

    linkctl analyze   linkage.json config.json [--branches] [--svg out.svg]
    linkctl sample    linkage.json -n 20 [--svg out.svg]
    linkctl trace     linkage.json config.json [--step S] [--svg out.svg --px I --py J]
    linkctl workspace (--lengths 2,1 | linkage.json) [--svg out.svg]
    linkctl branches  linkage.json config.json [--radius R]
    linkctl demo      <name>

Reports are JSON on stdout.  ``analyze`` exits 0 for Smooth, 10 for
GenericSingular, 20 for Indeterminate, 30 for Conflict; all commands exit 1
on errors.  The seed comes from --seed, falling back to LINKCTL_SEED.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from .classify import Verdict, classify_configuration
from .decomp import Tolerances
from .demos import DEMO_NAMES, build_demo
from .errors import LinkctlError
from .model import Configuration, Linkage, build_linkage, check_match
from .chains import workspace_interval
from .numeric import local_branch_count, sample_cspace, trace_curve
from . import svg

_EXIT_BY_VERDICT = {
    Verdict.SMOOTH: 0,
    Verdict.GENERIC_SINGULAR: 10,
    Verdict.INDETERMINATE: 20,
    Verdict.CONFLICT: 30,
}


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_pair(linkage_path: str, config_path: str) -> tuple[Linkage, Configuration]:
    linkage = build_linkage(_load_json(linkage_path))
    doc = _load_json(config_path)
    try:
        config = Configuration(doc["points"])
    except (KeyError, TypeError) as exc:
        raise LinkctlError(f"malformed configuration document: {exc}") from exc
    check_match(linkage, config)
    return linkage, config


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _tolerances(args: argparse.Namespace) -> Tolerances:
    return Tolerances(
        rank=args.tol_rank,
        align=args.tol_align,
        grad_scale=args.tol_grad,
        depth=args.depth,
    )


def _seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("LINKCTL_SEED")
    return int(env) if env else 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    linkage, config = _load_pair(args.linkage, args.config)
    report = classify_configuration(
        linkage,
        config,
        tols=_tolerances(args),
        with_branches=args.branches,
        branch_seed=_seed(args),
    )
    _emit(report.to_json_dict())
    if args.svg:
        svg.render_linkage(linkage, [config], args.svg)
    return _EXIT_BY_VERDICT[report.verdict]


def _cmd_sample(args: argparse.Namespace) -> int:
    linkage = build_linkage(_load_json(args.linkage))
    samples = sample_cspace(linkage, args.n, seed=_seed(args))
    _emit(
        {
            "count": len(samples),
            "attempts": args.n,
            "samples": [s.points.tolist() for s in samples],
        }
    )
    if args.svg:
        svg.render_linkage(linkage, samples, args.svg)
    return 0


def _cmd_trace(args: argparse.Namespace) -> int:
    linkage, config = _load_pair(args.linkage, args.config)
    result = trace_curve(
        linkage,
        config,
        step=args.step,
        max_steps=args.max_steps,
        tol_rank=args.tol_rank,
        detect_tol=args.sing_tol,
    )
    _emit(
        {
            "points": [p.points.tolist() for p in result.points],
            "stop_reason": result.stop_reason,
            "closed": result.closed,
        }
    )
    if args.svg:
        flat = np.array([p.flat for p in result.points])
        svg.render_curve(flat[:, [args.px, args.py]], args.svg, closed=result.closed)
    return 0


def _two_anchor_chains(linkage: Linkage) -> tuple[np.ndarray, list[float], np.ndarray, list[float]]:
    """Split a cycle with a ground edge into the two anchor-to-effector chains."""
    if linkage.base_link is None or linkage.end_effector is None:
        raise LinkctlError("workspace of a linkage needs base_link and effector")
    if any(linkage.graph.degree(v) != 2 for v in range(linkage.n_vertices)):
        raise LinkctlError("lens workspace is implemented for cycle mechanisms")
    u, v = linkage.graph.edges[linkage.base_link]
    ground = linkage.lengths[linkage.base_link]
    adj: dict[int, list[tuple[int, int]]] = {w: [] for w in range(linkage.n_vertices)}
    for i, (a, b) in enumerate(linkage.graph.edges):
        adj[a].append((b, i))
        adj[b].append((a, i))

    def walk(start: int) -> list[float]:
        lengths: list[float] = []
        prev_edge = linkage.base_link
        vertex = start
        while vertex != linkage.end_effector:
            nxt = [(w, i) for w, i in adj[vertex] if i != prev_edge]
            vertex, prev_edge = nxt[0]
            lengths.append(linkage.lengths[prev_edge])
        return lengths

    anchor_a = np.array([0.0, 0.0])
    anchor_b = np.array([ground, 0.0])
    base = linkage.base_vertex
    other = v if u == base else u
    return anchor_a, walk(base), anchor_b, walk(other)


def _cmd_workspace(args: argparse.Namespace) -> int:
    if args.lengths:
        lengths = [float(x) for x in args.lengths.split(",") if x]
        m, big = workspace_interval(lengths)
        _emit({"m": m, "M": big})
        if args.svg:
            svg.render_workspace([(np.zeros(2), m, big)], None, args.svg)
        return 0
    if not args.linkage:
        raise LinkctlError("workspace needs --lengths or a linkage document")
    linkage = build_linkage(_load_json(args.linkage))
    ca, chain_a, cb, chain_b = _two_anchor_chains(linkage)
    ma, fa = workspace_interval(chain_a)
    mb, fb = workspace_interval(chain_b)

    boundary = []
    for center, lo, hi, other_c, other_lo, other_hi in (
        (ca, ma, fa, cb, mb, fb),
        (cb, mb, fb, ca, ma, fa),
    ):
        for radius in (lo, hi):
            if radius <= 0:
                continue
            for idx in range(720):
                ang = 2.0 * np.pi * idx / 720
                q = center + radius * np.array([np.cos(ang), np.sin(ang)])
                dist = float(np.linalg.norm(q - other_c))
                if other_lo - 1e-9 <= dist <= other_hi + 1e-9:
                    boundary.append([float(q[0]), float(q[1])])
    _emit(
        {
            "annuli": [
                {"center": ca.tolist(), "m": ma, "M": fa},
                {"center": cb.tolist(), "m": mb, "M": fb},
            ],
            "boundary": boundary,
        }
    )
    if args.svg:
        svg.render_workspace(
            [(ca, ma, fa), (cb, mb, fb)], np.array(boundary) if boundary else None, args.svg
        )
    return 0


def _cmd_branches(args: argparse.Namespace) -> int:
    linkage, config = _load_pair(args.linkage, args.config)
    report = local_branch_count(
        linkage,
        config,
        radius=args.radius,
        n_samples=args.samples,
        seed=_seed(args),
        cluster_factor=args.cluster_factor,
        tol_rank=args.tol_rank,
    )
    _emit(
        {
            "radius": report.radius,
            "sample_count": report.sample_count,
            "branch_count": report.branch_count,
            "cluster_sizes": list(report.cluster_sizes),
            "stable": report.stable,
            "halved_branch_count": report.halved_branch_count,
        }
    )
    return 0


def _cmd_demo(args: argparse.Namespace) -> int:
    linkage_doc, config_doc = build_demo(args.name)
    lpath = f"{args.name}.linkage.json"
    cpath = f"{args.name}.config.json"
    with open(lpath, "w", encoding="utf-8") as fh:
        json.dump(linkage_doc, fh, indent=2)
        fh.write("\n")
    with open(cpath, "w", encoding="utf-8") as fh:
        json.dump(config_doc, fh, indent=2)
        fh.write("\n")
    _emit({"linkage": lpath, "config": cpath})
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=float, default=1e-8, help="relative rank cutoff")
    common.add_argument("--tol-grad", type=float, default=1e-6, help="gradient tolerance scale")
    common.add_argument("--tol-align", type=float, default=1e-6, help="alignment tolerance (radians)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default LINKCTL_SEED or 0)")
    common.add_argument("--depth", type=int, default=4, help="decomposition search depth")

    parser = argparse.ArgumentParser(prog="linkctl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="classify a configuration")
    p.add_argument("linkage")
    p.add_argument("config")
    p.add_argument("--branches", action="store_true", help="include a local branch count")
    p.add_argument("--svg", help="render the configuration to an SVG file")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("sample", parents=[common], help="draw random configurations")
    p.add_argument("linkage")
    p.add_argument("-n", type=int, default=20, help="number of attempts")
    p.add_argument("--svg", help="render the samples to an SVG file")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("trace", parents=[common], help="trace the solution curve")
    p.add_argument("linkage")
    p.add_argument("config")
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--max-steps", type=int, default=2000)
    p.add_argument("--sing-tol", type=float, default=1e-4, help="singularity proximity cutoff")
    p.add_argument("--svg", help="render the traced curve to an SVG file")
    p.add_argument("--px", type=int, default=0, help="flat coordinate for the SVG x axis")
    p.add_argument("--py", type=int, default=1, help="flat coordinate for the SVG y axis")
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("workspace", parents=[common], help="reachable interval or lens")
    p.add_argument("linkage", nargs="?", help="cycle linkage document (lens mode)")
    p.add_argument("--lengths", help="comma-separated open-chain lengths (interval mode)")
    p.add_argument("--svg", help="render annuli and boundary to an SVG file")
    p.set_defaults(func=_cmd_workspace)

    p = sub.add_parser("branches", parents=[common], help="count local solution branches")
    p.add_argument("linkage")
    p.add_argument("config")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--samples", type=int, default=48)
    p.add_argument("--cluster-factor", type=float, default=0.25)
    p.set_defaults(func=_cmd_branches)

    p = sub.add_parser("demo", parents=[common], help="write a demo mechanism to cwd")
    p.add_argument("name", help=f"one of: {', '.join(DEMO_NAMES)}")
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LinkctlError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
