"""Command-line interface.

Exit codes: 0 when every certificate passes, 1 when at least one fails (the
witness is printed), 2 for usage, guard or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .certificate import Certificate
from .checkers import (
    CheckError, check_gaussian, check_local_regularity, check_on_diagonal, check_sobolev,
    check_volume_doubling, geometric_grid,
)
from .corrections import GuardError
from .generators import generate_family
from .graph import GraphError, MeasureMode
from .io import FormatError, dumps_graph, dumps_metric
from .metric import MetricError, verify_intrinsic
from .pipelines import PIPELINES, PipelineConfig, Report, load_setup
from .report import emit_report, report_json
from .sobolev import Budget, SobolevError, SobolevProblem, minimal_sobolev_constant
from .spectral import SpectralError, heat_evolve_ode

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# flag name -> PipelineConfig field
_GLOBAL = {
    "graph": "graph", "measure": "measure", "metric": "metric", "r1": "r1", "r2": "r2",
    "n": "n", "phi": "phi", "gamma": "gamma", "tgrid_density": "tgrid_density",
    "budget": "budget", "seed": "seed", "relaxed_guards": "relaxed_guards", "out": "out",
}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--graph", default=S, help="graph file or family spec such as path_16")
    p.add_argument("--measure", choices=[m.value for m in MeasureMode], default=S)
    p.add_argument("--metric", default=S, help="default, combinatorial or a metric file")
    p.add_argument("--r1", type=float, default=S)
    p.add_argument("--r2", type=float, default=S)
    p.add_argument("--n", type=float, default=S, help="constant dimension")
    p.add_argument("--phi", type=float, default=S, help="Sobolev constant (measured if omitted)")
    p.add_argument("--gamma", default=S, help="'theorem' or a positive constant")
    p.add_argument("--tgrid-density", type=int, default=S, help="time nodes per decade")
    p.add_argument("--budget", type=int, default=S, help="optimizer restarts")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--relaxed-guards", action="store_true", default=S)
    p.add_argument("--out", default=S, help="output directory or file")
    p.add_argument("--config", default=S, help="JSON file mirroring the flags")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="heatsob", parents=[common],
                                     description="Heat kernels, intrinsic metrics and Sobolev "
                                                 "constants on finite weighted graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="write a graph family to the graph format")
    p.add_argument("family", help="e.g. path_16, cycle_20, grid_5x5, star_10, polyline_256_1")

    sub.add_parser("metric", parents=[common], help="metric summary; --out writes the weights")

    p = sub.add_parser("heat", parents=[common], help="heat kernel values p_t(x, .)")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", default=None)
    p.add_argument("--route", choices=["spectral", "ode"], default="spectral")

    p = sub.add_parser("sobolev", parents=[common], help="optimal Sobolev constant of a ball")
    p.add_argument("--x", required=True)
    p.add_argument("--radius", type=float, required=True)

    p = sub.add_parser("check", parents=[common], help="certificate for one condition")
    p.add_argument("condition", choices=["S", "V", "G", "L", "O"])
    p.add_argument("--log-Phi", type=float, default=None, dest="log_Phi",
                   help="constant log Phi for V")
    p.add_argument("--log-Psi", type=float, default=None, dest="log_Psi",
                   help="constant log Psi for G and O")
    p.add_argument("--centers", default=None, help="comma-separated vertex ids (default: all)")

    p = sub.add_parser("pipeline", parents=[common], help="run a theorem workflow")
    p.add_argument("name", choices=sorted(PIPELINES))

    p = sub.add_parser("report", parents=[common], help="summarize a report.json")
    p.add_argument("path")
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    data: dict = {}
    if getattr(args, "config", None):
        data.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    for flag, fieldname in _GLOBAL.items():
        if hasattr(args, flag):
            data[fieldname] = getattr(args, flag)
    names = {f.name for f in fields(PipelineConfig)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    return PipelineConfig(**data)


def _print_cert(cert: Certificate) -> None:
    print(cert.summary())
    if not cert.passed:
        print("witness: " + json.dumps(cert.to_dict()["witness"], sort_keys=True))


def _finish(certs: list[Certificate]) -> int:
    for c in certs:
        _print_cert(c)
    return EXIT_PASS if all(c.passed for c in certs) else EXIT_FAIL


def _cmd_gen(args, cfg: PipelineConfig) -> int:
    g = generate_family(args.family, MeasureMode.parse(cfg.measure))
    text = dumps_graph(g)
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def _cmd_metric(args, cfg: PipelineConfig) -> int:
    st = load_setup(cfg)
    rep = verify_intrinsic(st.g, st.metric.dist)
    print(json.dumps({"S": st.metric.S, "diameter": st.metric.diameter,
                      "intrinsic": rep.passed, "worst_vertex": rep.worst_vertex,
                      "worst_ratio": rep.worst_ratio}, sort_keys=True))
    if cfg.out:
        Path(cfg.out).write_text(dumps_metric(st.g, st.metric.w), encoding="utf-8")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _cmd_heat(args, cfg: PipelineConfig) -> int:
    st = load_setup(cfg)
    g = st.g
    i = g.idx(args.x)
    if args.route == "ode":
        delta = np.zeros(g.n_vertices)
        delta[i] = 1.0 / g.m[i]
        row = heat_evolve_ode(g, delta, args.t)  # p_t(., x) = P_t(delta_x / m(x))
    else:
        row = st.dec.evolve(np.eye(g.n_vertices)[i] / g.m[i], args.t)
    targets = [args.y] if args.y is not None else list(g.ids)
    for y in targets:
        print(f"{y}\t{float(row[g.idx(y)])!r}")
    return EXIT_PASS


def _cmd_sobolev(args, cfg: PipelineConfig) -> int:
    st = load_setup(cfg)
    prob = SobolevProblem.from_ball(st.metric, args.x, args.radius, float(cfg.n))
    res = minimal_sobolev_constant(prob, Budget(restarts=cfg.budget, seed=cfg.seed),
                                   metric=st.metric)
    print(json.dumps(res.to_dict(prob), sort_keys=True))
    return EXIT_PASS


def _cmd_check(args, cfg: PipelineConfig) -> int:
    st = load_setup(cfg)
    centers = args.centers.split(",") if args.centers else None
    n = float(cfg.n)
    if args.condition == "S":
        if cfg.phi is None:
            raise ValueError("check S needs --phi")
        radii = [b for b in st.metric.breakpoints(st.centers[0]) if cfg.r1 <= b <= cfg.r2] or [cfg.r2]
        cert = check_sobolev(st.metric, centers, radii, n, cfg.phi,
                             Budget(restarts=cfg.budget, seed=cfg.seed))
    elif args.condition == "L":
        if cfg.phi is None:
            raise ValueError("check L needs --phi")
        cert = check_local_regularity(st.metric, centers, n, cfg.phi, cfg.r1, cfg.r2)
    elif args.condition == "V":
        if args.log_Phi is None:
            raise ValueError("check V needs --log-Phi")
        cert = check_volume_doubling(st.metric, centers, n, lambda i, a, b: args.log_Phi,
                                     cfg.r1, cfg.r2)
    else:
        if args.log_Psi is None:
            raise ValueError(f"check {args.condition} needs --log-Psi")
        psi = lambda i, tau: args.log_Psi  # noqa: E731
        if args.condition == "G":
            grid = geometric_grid(cfg.r1**2, cfg.t_max_factor * cfg.r2**2, cfg.tgrid_density)
            cert = check_gaussian(st.dec, st.metric, centers, n, psi, cfg.r1, cfg.r2, grid)
        else:
            radii = geometric_grid(cfg.r1, cfg.r2, cfg.tgrid_density)
            cert = check_on_diagonal(st.dec, st.metric, centers, psi, radii)
    if cfg.out:
        Path(cfg.out).write_text(json.dumps(cert.to_dict(), indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
    return _finish([cert])


def _cmd_pipeline(args, cfg: PipelineConfig) -> int:
    report: Report = PIPELINES[args.name](cfg)
    if cfg.out:
        emit_report(report, cfg.out)
    else:
        sys.stdout.write(report_json(report))
    if report.watermark:
        print(f"watermark: {report.watermark}", file=sys.stderr)
    print(f"summary: {report.summary} ({report.elapsed:.1f} s)", file=sys.stderr)
    for c in report.certificates:
        print(c.summary(), file=sys.stderr)
        if not c.passed:
            print("witness: " + json.dumps(c.to_dict()["witness"], sort_keys=True),
                  file=sys.stderr)
    return EXIT_FAIL if report.summary == "fail" else EXIT_PASS


def _cmd_report(args, cfg: PipelineConfig) -> int:
    doc = json.loads(Path(args.path).read_text(encoding="utf-8"))
    print(f"summary: {doc['summary']}")
    if doc.get("watermark"):
        print(f"watermark: {doc['watermark']}")
    failed = False
    for c in doc["certificates"]:
        status = "PASS" if c["pass"] else "FAIL"
        print(f"{status} {c['condition']} points={c['grid']['points']} "
              f"min_log_margin={c['min_log_margin']}")
        if not c["pass"]:
            failed = True
            print("witness: " + json.dumps(c["witness"], sort_keys=True))
    return EXIT_FAIL if failed else EXIT_PASS


_COMMANDS = {
    "gen": _cmd_gen, "metric": _cmd_metric, "heat": _cmd_heat, "sobolev": _cmd_sobolev,
    "check": _cmd_check, "pipeline": _cmd_pipeline, "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return _COMMANDS[args.command](args, cfg)
    except (GuardError, CheckError, GraphError, FormatError, MetricError, SpectralError,
            SobolevError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

