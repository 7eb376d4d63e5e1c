"""``fsl`` command line: one subcommand per task, TOML config, JSON/CSV artifacts.

Exit status: 0 success, 1 a checked bound was violated (or a scan was
inconclusive), 2 invalid configuration, 3 numerical/geometric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import TASKS, RunConfig, default_config, load_config
from .connection import invariants, structure_equation_residual
from .curves import CurveSpec, arc_length, normalize_direction, self_intersections, trace
from .errors import ConfigError, FinslerError
from .experiments import ExperimentConfig, corner_bound_scan, hadamard_scan
from .gauss_bonnet import VectorFieldSpec, gauss_bonnet_check
from .indicatrix import TWO_PI, indicatrix_length, landsberg_angle, sample_indicatrix
from .metric import berwald_frame, main_scalar_I, metric_jet
from .reports import to_jsonable, write_csv, write_json

EXIT_OK, EXIT_BOUND, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _circle(center, radius):
    c = np.asarray(center, dtype=float)

    def param(t):
        u = np.stack([np.cos(t), np.sin(t)], axis=1)
        du = np.stack([-np.sin(t), np.cos(t)], axis=1)
        return c + radius * u, radius * du, -radius * u
    return param


# -- task runners: each returns (status, result, summary fields, csv artifacts) -------------

def _run_jet(cfg: RunConfig):
    p = cfg.point
    jet = metric_jet(cfg.metric, p.x, p.y)
    frame = berwald_frame(jet)
    I = float(main_scalar_I(jet, frame))
    result = {"x": p.x, "y": p.y, "F": float(jet.F), "gradF_y": jet.gradF_y, "g": jet.g,
              "g_inv": jet.gInv, "sqrt_det_g": float(jet.sqrtg), "cartan_A": jet.A,
              "berwald_e1": frame.e1, "berwald_e2": frame.e2, "I": I}
    return "ok", result, {"F": float(jet.F), "I": I}, {}


def _run_invariants(cfg: RunConfig):
    p = cfg.point
    inv = invariants(cfg.metric, p.x, p.y)
    res = structure_equation_residual(cfg.metric, p.x, p.y)
    result = {"x": p.x, "y": p.y, "I": inv.I, "J": inv.J, "K": inv.K, "structure_residual": res}
    return "ok", result, {"K": inv.K, "residual": res}, {}


def _run_indicatrix(cfg: RunConfig):
    p = cfg.point
    L = indicatrix_length(cfg.metric, p.x, tol=cfg.numerics.tol)
    s = sample_indicatrix(cfg.metric, p.x, n=p.n)
    result = {"x": p.x, "L": L, "L_over_2pi": L / TWO_PI, "samples": p.n,
              "sample_length": s.length}
    rows = np.column_stack([s.phis, s.ys, s.dtheta_weights])
    return "ok", result, {"L": L, "residual": abs(s.length - L)}, \
        {"indicatrix.csv": (["phi", "y1", "y2", "dtheta_weight"], rows)}


def _run_angle(cfg: RunConfig):
    p = cfg.point
    a = landsberg_angle(cfg.metric, p.x, p.X, p.Y, tol=cfg.numerics.tol).value
    L = indicatrix_length(cfg.metric, p.x, tol=cfg.numerics.tol)
    result = {"x": p.x, "X": p.X, "Y": p.Y, "angle": a, "L": L, "normalized": a / L}
    status = "ok" if 0.0 <= a / L < 1.0 else "fail"
    return status, result, {"angle": a, "normalized": a / L}, {}


def _run_trace(cfg: RunConfig):
    c, num = cfg.curve, cfg.numerics
    if c.kind == "circle":
        span = c.t_span
        spec = CurveSpec("explicit", t_span=span, side=num.side_sign, n_samples=c.n_samples,
                         param=_circle(c.center, c.radius),
                         closed=math.isclose(span[1] - span[0], TWO_PI, rel_tol=1e-12))
    else:
        T0 = tuple(normalize_direction(cfg.metric, c.x0, c.T0)[0])
        spec = CurveSpec(c.kind, c.x0, T0, c.t_span, num.side_sign, c.n_samples)
    kw = {} if c.kind == "circle" else {"rtol": num.rtol, "atol": num.atol}
    tr = trace(cfg.metric, spec, **kw)
    F = cfg.metric.norm(tr.xs, tr.Ts)
    result = {"kind": c.kind, "samples": len(tr), "length": arc_length(tr),
              "max_F_drift": float(np.max(np.abs(F - 1.0))),
              "max_abs_DN": float(np.max(np.linalg.norm(tr.DN, axis=1))),
              "max_abs_kTN": float(np.max(np.abs(tr.kTN))),
              "end": tr.xs[-1], "self_intersections": len(self_intersections(tr))}
    key = "max_abs_DN" if c.kind == "n-parallel" else ("max_F_drift" if c.kind == "geodesic" else "max_abs_kTN")
    rows = np.column_stack([tr.ts, tr.xs, tr.Ts, tr.Ns, tr.sigmas, tr.kTN])
    return "ok", result, {"length": result["length"], key: result[key]}, \
        {"trace.csv": (["t", "x1", "x2", "T1", "T2", "N1", "N2", "sigma", "kTN"], rows)}


def _run_gauss_bonnet(cfg: RunConfig):
    num = cfg.numerics
    domain = cfg.domain.build()
    fs = VectorFieldSpec(num.field_kind, num.field_zero, num.collar)
    rep = gauss_bonnet_check(cfg.metric, domain, mode=num.mode, field_spec=fs, side=num.side_sign,
                             rule=num.rule, levels=num.levels, min_triangles=num.grid,
                             coarse=num.coarse, tol=num.tol)
    result = {"domain": domain.to_dict(), "chi": domain.euler_characteristic(), **rep.to_dict()}
    status = "ok" if rep.residual <= num.gb_tol else "fail"
    csvs = {"gauss_bonnet.csv": (rep.CSV_HEADER.split(","), [rep.csv_line().split(",")])}
    if rep.samples is not None:
        s = rep.samples
        csvs["interior.csv"] = (["x1", "x2", "weight", "K_sqrtg_over_L"],
                                np.column_stack([s["points"], s["weights"], s["density"]]))
    return status, result, {"total": rep.total, "residual": rep.residual}, csvs


def _experiment_config(cfg: RunConfig) -> ExperimentConfig:
    e, num = cfg.experiment, cfg.numerics
    return ExperimentConfig(
        metric=cfg.metric, initial=tuple(((r[0], r[1]), (r[2], r[3])) for r in e.initial),
        n_rays=e.n_rays, horizon=e.horizon, detectors=e.detectors, seed=num.seed, box=e.box,
        n_samples=e.n_samples, side=num.side_sign, probe_half_width=e.probe_half_width,
        probe_n=e.probe_n, probe_dirs=e.probe_dirs, k_tol=e.k_tol, n_pairs=e.n_pairs,
        rtol=num.rtol, atol=num.atol, oracle_tol=e.oracle_tol)


def _run_scan(cfg: RunConfig, scan, key):
    rep = scan(_experiment_config(cfg))
    status = {"pass": "ok", "fail": "fail", "inconclusive": "inconclusive"}[rep.status]
    return status, rep.to_dict(), {key: rep.summary[key], "status": rep.status}, {}


RUNNERS = {
    "jet": _run_jet,
    "invariants": _run_invariants,
    "indicatrix": _run_indicatrix,
    "angle": _run_angle,
    "trace": _run_trace,
    "gauss-bonnet": _run_gauss_bonnet,
    "hadamard": lambda cfg: _run_scan(cfg, hadamard_scan, "self_intersections"),
    "corner-bound": lambda cfg: _run_scan(cfg, corner_bound_scan, "max_normalized"),
}


def summary_line(task: str, fields: dict) -> str:
    parts = [task]
    for k, v in fields.items():
        if isinstance(v, float):
            v = f"{v:.6f}" if abs(v) >= 1e-3 or v == 0 else f"{v:.3e}"
        parts.append(f"{k}={v}")
    return " ".join(parts)


def run(cfg: RunConfig, out_dir=None, write: bool = True) -> tuple[int, dict]:
    """Execute a config; returns (exit status, report dict) and writes artifacts."""
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    try:
        status, result, fields, csvs = RUNNERS[cfg.task](cfg)
    except (FinslerError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        report = error_report(cfg.task, exc, cfg)
        if write and "json" in cfg.output.formats:
            write_json(out / "report.json", report)
        return (EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_NUMERIC), report
    report = {"task": cfg.task, "status": status, "config": cfg.to_dict(), "result": result,
              "summary": summary_line(cfg.task, fields)}
    if write:
        if "json" in cfg.output.formats:
            write_json(out / "report.json", report)
        if "csv" in cfg.output.formats:
            for name, (header, rows) in csvs.items():
                write_csv(out / name, header, rows)
    return (EXIT_OK if status == "ok" else EXIT_BOUND), report


def error_report(task, exc: Exception, cfg: RunConfig | None = None) -> dict:
    err = {"type": type(exc).__name__, "message": str(exc)}
    loc = getattr(exc, "location", None)
    if loc:
        err["location"] = loc
    residual = getattr(exc, "residual", None)
    if residual is not None:
        err["residual"] = residual
    rep = {"task": task, "status": "error", "error": err}
    if cfg is not None:
        rep["config"] = cfg.to_dict()
    return rep


def _one_line(obj) -> str:
    return json.dumps(to_jsonable(obj), separators=(",", ":"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fsl", description="Finsler surface geometry checks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="task", required=True, metavar="TASK")
    for task in TASKS:
        sp = sub.add_parser(task, help=f"run the {task} task")
        sp.add_argument("--config", help="TOML run file (defaults: Euclidean metric, default blocks)")
        sp.add_argument("--out", help="output directory (overrides [output].dir)")
        sp.add_argument("--tol", type=float, help="quadrature tolerance")
        sp.add_argument("--grid", type=int, help="minimum triangle count for area integrals")
        sp.add_argument("--seed", type=int, help="seed for randomized experiments")
        sp.add_argument("--side", choices=("left", "right"), help="side of the Shen normal")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config(args.task)
        if cfg.task != args.task:
            raise ConfigError(f"config is for task {cfg.task!r}, not {args.task!r}", "task")
        cfg = cfg.with_overrides(tol=args.tol, grid=args.grid, seed=args.seed, side=args.side)
    except (ConfigError, OSError) as exc:
        print(_one_line(error_report(args.task, exc)))
        return EXIT_CONFIG
    code, report = run(cfg, out_dir=args.out)
    if report["status"] == "error":
        print(_one_line({"task": report["task"], "status": "error", "error": report["error"]}))
    else:
        print(report["summary"])
    return code


if __name__ == "__main__":
    sys.exit(main())
