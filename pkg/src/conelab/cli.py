"""Experiment runner: config-driven pipelines with deterministic reports.

Every pipeline writes report.json (sorted keys, no timestamps;  identical
config and seed give byte-identical bytes) plus CSV tables; wall-clock
metadata goes to a run_meta.json sidecar.  Exit codes: 0 PASS, 1 error,
2 FAIL, 3 INCONCLUSIVE.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import converge, curvature, metricspace, model2d, transport, warp
from .cone import GeneralizedCone
from .errors import ConelabError

EXIT_PASS, EXIT_ERROR, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3


@dataclass
class ExperimentConfig:
    """A parsed pipeline invocation: command, inputs, parameters, output."""

    command: str
    out: Path
    threads: int = 1
    options: dict = field(default_factory=dict)

    @classmethod
    def from_argv(cls, argv=None) -> "ExperimentConfig":
        args = build_parser().parse_args(argv)
        opts = {k: v for k, v in vars(args).items()
                if k not in ("out", "threads", "command")}
        return cls(command=args.command, out=Path(args.out),
                   threads=args.threads, options=opts)


def _error_code(exc: Exception) -> str:
    name = type(exc).__name__
    out = []
    for ch in name:
        if ch.isupper() and out:
            out.append("_")
        out.append(ch.upper())
    return "".join(out)


def _write_report(outdir: Path, report: dict, t_start: float) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "report.json", "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2, allow_nan=True)
        fh.write("\n")
    with open(outdir / "run_meta.json", "w") as fh:
        json.dump({"started": t_start, "elapsed": time.time() - t_start},
                  fh, indent=2)


def _write_csv(outdir: Path, name: str, header, rows) -> None:
    tdir = outdir / "tables"
    tdir.mkdir(parents=True, exist_ok=True)
    with open(tdir / name, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _load_cone(path: str) -> GeneralizedCone:
    return GeneralizedCone.from_json(_load_json(path))


def _parse_point(s: str):
    a, b = s.split(",")
    return int(a), int(b)


def _verdict_exit(verdict) -> int:
    if verdict in ("PASS", True):
        return EXIT_PASS
    if verdict == "INCONCLUSIVE":
        return EXIT_INCONCLUSIVE
    return EXIT_FAIL


# -- pipelines ----------------------------------------------------------------


def run_tau(args, outdir: Path) -> tuple:
    cone = _load_cone(args.cone)
    report = {"command": "tau", "bracket_width": cone.bracket_width(),
              "time_points": cone.f.n, "dist_points": cone.m,
              "window": cone.window}
    rows = []
    if args.p and args.q:
        p, q = _parse_point(args.p), _parse_point(args.q)
        lo = cone.signed_separation(p, q)
        hi = cone.signed_separation_upper(p, q)
        report["pair"] = {"p": list(p), "q": list(q), "lo": lo, "hi": hi}
        rows = [(cone.f.ts[p[0]], cone.f.ts[q[0]],
                 cone.X.dist[p[1], q[1]], lo, hi)]
    else:
        rows = list(cone.export_rows())
    _write_csv(outdir, "tau.csv", ("s", "t", "r", "lo", "hi"), rows)
    return report, EXIT_PASS


def run_geodesic(args, outdir: Path) -> tuple:
    cone = _load_cone(args.cone)
    p, q = _parse_point(args.p), _parse_point(args.q)
    geo = cone.maximizer(p, q)
    report = {"command": "geodesic", "tau_length": geo.tau_length,
              "character": geo.character(), "states": len(geo.states)}
    _write_csv(outdir, "geodesic.csv", ("time_index", "fiber_distance"),
               geo.states)
    return report, EXIT_PASS


def run_tcbb(args, outdir: Path) -> tuple:
    cone = _load_cone(args.cone)
    rep = model2d.tcbb_verify(cone, K=args.K, samples=args.samples,
                              tol=args.tol, seed=args.seed)
    rep["command"] = "tcbb"
    return rep, EXIT_PASS if rep["pass"] else EXIT_FAIL


def run_ot(args, outdir: Path) -> tuple:
    cone = _load_cone(args.cone)
    mu0 = transport.DiscreteMeasure.from_json(_load_json(args.mu0))
    mu1 = transport.DiscreteMeasure.from_json(_load_json(args.mu1))
    coupling = transport.solve_lp(cone, mu0, mu1, args.p)
    slack = transport.check_cyclical_monotonicity(
        cone, coupling, args.p, seed=args.seed)
    rows = [(i, j, coupling.table[i, j]) for i, j in coupling.support()]
    _write_csv(outdir, "coupling.csv", ("i", "j", "mass"), rows)
    report = {"command": "ot", "p": args.p, "p_value": coupling.p_value,
              "ell_p": coupling.ell_p, "support": len(rows),
              "cyclical_slack": slack,
              "bracket_width": cone.bracket_width()}
    return report, EXIT_PASS


def run_tcd(args, outdir: Path) -> tuple:
    cone = _load_cone(args.cone)
    mu0 = transport.DiscreteMeasure.from_json(_load_json(args.mu0))
    mu1 = transport.DiscreteMeasure.from_json(_load_json(args.mu1))
    rep = transport.tcd_verify(cone, mu0, mu1, args.p, args.K, args.N,
                               flavor=args.flavor, tol=args.tol)
    rep["command"] = "tcd"
    return rep, _verdict_exit(rep["verdict"])


def run_tmcp(args, outdir: Path) -> tuple:
    cone = _load_cone(args.cone)
    mu0 = transport.DiscreteMeasure.from_json(_load_json(args.mu0))
    rep = transport.tmcp_verify(cone, mu0, _parse_point(args.x1),
                                args.K, args.N, tol=args.tol)
    rep["command"] = "tmcp"
    return rep, _verdict_exit(rep["verdict"])


def run_gh(args, outdir: Path) -> tuple:
    A = metricspace.FiniteMetricSpace.from_json(_load_json(args.A))
    B = metricspace.FiniteMetricSpace.from_json(_load_json(args.B))
    lo, up, wit = metricspace.gh_distance(A, B, args.mode)
    report = {"command": "gh", "mode": args.mode, "lower": lo, "upper": up,
              "witness_distortion": wit.distortion,
              "witness_pairs": [list(p) for p in wit.pairs]}
    return report, EXIT_PASS


def _load_sequence(path: str, depth: int):
    spec = _load_json(path)
    cones = [GeneralizedCone.from_json(c) for c in spec["cones"]]
    limit = GeneralizedCone.from_json(spec["limit"])
    depth = int(spec.get("coverDepth", depth))
    return converge.cone_sequence(cones, limit, depth=depth), spec


def run_ellconv(args, outdir: Path) -> tuple:
    seq, spec = _load_sequence(args.seq, args.depth)
    schedule = [tuple(s) for s in spec.get("schedule", [])] or None
    rep = converge.ell_converge_check(seq, schedule=schedule)
    rep["command"] = "ellconv"
    rows = [(key, v["eps1"], v["eps2"]) for key, v in rep["moduli"].items()]
    _write_csv(outdir, "moduli.csv", ("i_k_l", "eps1", "eps2"), rows)
    return rep, _verdict_exit(rep["verdict"])


def run_measured(args, outdir: Path) -> tuple:
    seq, _ = _load_sequence(args.seq, args.depth)
    dists = converge.measured_converge_check(seq, args.k)
    trend_ok = len(dists) < 2 or dists[-1] <= dists[0] + 1e-12
    report = {"command": "measured", "k": args.k, "w1": dists,
              "verdict": "PASS" if trend_ok else "INCONCLUSIVE"}
    _write_csv(outdir, "measured.csv", ("i", "w1"), list(enumerate(dists)))
    return report, _verdict_exit(report["verdict"])


def run_precompact(args, outdir: Path) -> tuple:
    spec = _load_json(args.seq)
    cones = [GeneralizedCone.from_json(c) for c in spec["cones"]]
    rep = converge.precompact_harness(cones, K=args.K, N=args.N, D=args.D,
                                      depth=args.depth)
    rep["command"] = "precompact"
    return rep, _verdict_exit(rep["verdict"])


def run_tangent(args, outdir: Path) -> tuple:
    cone = _load_cone(args.cone)
    eps = [float(e) for e in args.eps.split(",")]
    rep = converge.tangent_cone(cone, _parse_point(args.point), eps,
                                depth=args.depth)
    rep["command"] = "tangent"
    return rep, _verdict_exit(rep["verdict"])


def run_ricci(args, outdir: Path) -> tuple:
    f = warp.WarpingFunction.from_json(_load_json(args.warp))
    rep = curvature.ricci_reduction(f, args.K, args.n, args.fiber_bound)
    d = curvature.oneill_diagnostics(f, args.n)
    _write_csv(outdir, "oneill.csv", ("t", "time_time", "mixed", "tangential"),
               zip(d["t"], d["time_time"], d["mixed"], d["tangential"]))
    out = rep.to_json()
    out["command"] = "ricci"
    return out, EXIT_PASS if rep.verdict else EXIT_FAIL


def run_sectional(args, outdir: Path) -> tuple:
    f = warp.WarpingFunction.from_json(_load_json(args.warp))
    rep = curvature.sectional_reduction(f, args.K, args.fiber_bound)
    out = rep.to_json()
    out["command"] = "sectional"
    return out, EXIT_PASS if rep.verdict else EXIT_FAIL


def run_preset(args, outdir: Path) -> tuple:
    outdir.mkdir(parents=True, exist_ok=True)
    if args.kind == "fms":
        if args.name == "segment":
            obj = metricspace.segment(args.L, args.n).to_json()
        elif args.name == "circleArc":
            obj = metricspace.circle_arc(args.radius, args.angle, args.n).to_json()
        else:
            raise ValueError(f"unknown fiber preset {args.name!r}")
    else:
        obj = warp.preset(args.name, args.a, args.b, args.n,
                          param=args.param).to_json()
    path = outdir / f"{args.name}.json"
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True)
    return {"command": "preset", "written": str(path)}, EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conelab",
                                 description="warped-cone geometry lab")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--threads", type=int, default=1,
                    help="worker cap (recorded; pipelines are deterministic)")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        return p

    p = add("tau", run_tau)
    p.add_argument("--cone", required=True)
    p.add_argument("--p")
    p.add_argument("--q")

    p = add("geodesic", run_geodesic)
    p.add_argument("--cone", required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)

    p = add("tcbb", run_tcbb)
    p.add_argument("--cone", required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--tol", type=float, default=0.02)
    p.add_argument("--seed", type=int, required=True)

    p = add("ot", run_ot)
    p.add_argument("--cone", required=True)
    p.add_argument("--mu0", required=True)
    p.add_argument("--mu1", required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--seed", type=int, required=True)

    p = add("tcd", run_tcd)
    p.add_argument("--cone", required=True)
    p.add_argument("--mu0", required=True)
    p.add_argument("--mu1", required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--flavor", choices=("entropic", "renyi"), default="entropic")
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)  # recorded; pipeline is deterministic

    p = add("tmcp", run_tmcp)
    p.add_argument("--cone", required=True)
    p.add_argument("--mu0", required=True)
    p.add_argument("--x1", required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)  # recorded; pipeline is deterministic

    p = add("gh", run_gh)
    p.add_argument("--A", required=True)
    p.add_argument("--B", required=True)
    p.add_argument("--mode", choices=("exact", "heuristic"), default="heuristic")

    p = add("ellconv", run_ellconv)
    p.add_argument("--seq", required=True)
    p.add_argument("--depth", type=int, default=2)

    p = add("measured", run_measured)
    p.add_argument("--seq", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--depth", type=int, default=2)

    p = add("precompact", run_precompact)
    p.add_argument("--seq", required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--D", type=float, required=True)
    p.add_argument("--depth", type=int, default=2)

    p = add("tangent", run_tangent)
    p.add_argument("--cone", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--eps", required=True, help="comma-separated list")
    p.add_argument("--depth", type=int, default=1)

    p = add("ricci", run_ricci)
    p.add_argument("--warp", required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fiber-bound", dest="fiber_bound", type=float, required=True)

    p = add("sectional", run_sectional)
    p.add_argument("--warp", required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--fiber-bound", dest="fiber_bound", type=float, required=True)

    p = add("preset", run_preset)
    p.add_argument("kind", choices=("fms", "warp"))
    p.add_argument("name")
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--n", type=int, default=11)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--angle", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--param", type=float, default=None)
    return ap


def run(config: ExperimentConfig) -> int:
    """Execute one pipeline; writes report.json (+ tables) under config.out.

    Exit status: 0 PASS, 1 error, 2 FAIL, 3 INCONCLUSIVE."""
    args = argparse.Namespace(out=str(config.out), threads=config.threads,
                              command=config.command, **config.options)
    t0 = time.time()
    try:
        report, code = args.fn(args, config.out)
    except ConelabError as exc:
        _write_report(config.out, {"error": _error_code(exc),
                                   "message": str(exc)}, t0)
        print(f"error: {_error_code(exc)}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        _write_report(config.out, {"error": _error_code(exc),
                                   "message": str(exc)}, t0)
        print(f"error: {_error_code(exc)}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    report.setdefault("threads", config.threads)
    _write_report(config.out, report, t0)
    print(json.dumps({k: report[k] for k in sorted(report)
                      if k in ("command", "verdict", "pass", "min_margin",
                               "worst_margin", "lower", "upper", "ell_p")},
                     sort_keys=True))
    return code


def main(argv=None) -> int:
    return run(ExperimentConfig.from_argv(argv))


if __name__ == "__main__":
    sys.exit(main())
