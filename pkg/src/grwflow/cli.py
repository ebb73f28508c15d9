"""Command line front end: ``grwflow {run,verify,profile} --config FILE``.

Exit codes
----------
0  converged and isoperimetric pass (or not applicable); verify/profile success
1  flow hit ``t_max`` before converging; verify threshold violated
2  isoperimetric inequality violated
3  flow aborted (spacelike guard) or strict self-test failed
4  configuration error

Outputs go to ``--out``, else ``run.out``, else ``$GRWFLOW_OUT``, else
``./grwflow-out``. With several configs each gets a subdirectory named after
the config file stem.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import verify as _verify
from .config import load_config
from .errors import ConfigError, GRWError, SpacelikeViolation
from .flow import TRACE_COLUMNS, run
from .geometry import GraphState
from .integrals import functionals
from .isoperimetric import IsoperimetricProfile, verdict

log = logging.getLogger("grwflow")

EXIT_OK, EXIT_TIMEOUT, EXIT_ISO_FAIL, EXIT_ABORT, EXIT_CONFIG = 0, 1, 2, 3, 4
ENV_OUT = "GRWFLOW_OUT"


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path, data):
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def write_trace(path, trace):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRACE_COLUMNS)
        for rec in trace.records:
            wr.writerow(["%.17g" % rec[c] for c in TRACE_COLUMNS])


def _suite(cfg, grid, w):
    res = cfg["verify.resolutions"]
    rho_fn = cfg.initial if cfg.has_perturbation() and "initial.file" not in cfg.values \
        else (lambda g: _verify.default_test_graph(w, g))
    return _verify.run_suite(w, cfg.grid, rho_fn, res, markers=cfg["verify.markers"],
                             delta=cfg["verify.delta"], cfl=cfg.flow().cfl,
                             integrator=cfg.flow().integrator, seed=cfg["run.seed"])


def cmd_run(cfg, out: Path, strict=False):
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    w = cfg.warping()
    grid = cfg.grid()
    summary = {"command": "run", "config": dict(sorted(cfg.values.items()))}
    code = EXIT_OK
    rho0 = cfg.initial(grid)
    try:
        GraphState.from_graph(grid, w, rho0, cfg.flow().eps_v)
    except (SpacelikeViolation, ValueError) as exc:
        raise ConfigError(f"initial data: {exc}") from exc
    if strict or cfg["verify.strict"]:
        ok, rep = _verify.oracle_selftest(w, grid, delta=cfg["verify.delta"])
        summary["verify"] = {"oracle": rep}
        if not ok:
            summary["flow"] = {"verdict": "aborted", "message": "curvature self-test failed"}
            summary["exit_code"] = EXIT_ABORT
            _write_json(out / "summary.json", summary)
            print("error: curvature self-test failed", file=sys.stderr)
            return EXIT_ABORT
    result = run(grid, w, rho0, cfg.flow())
    profile = IsoperimetricProfile.from_grid(grid, w)
    # the inequality is a statement about the initial graph; the final state
    # (a slice to tolerance) is reported separately as the equality case
    ver = verdict(grid, w, GraphState.from_graph(grid, w, rho0, None), tol=cfg["iso.tol"],
                  profile=profile, tol_ncc=cfg["iso.tol_ncc"])
    ver_final = verdict(grid, w, result.state, tol=cfg["iso.tol"], profile=profile,
                        tol_ncc=cfg["iso.tol_ncc"])
    vol0 = result.trace.records[0]["volume"]
    summary["flow"] = {
        "verdict": result.verdict, "message": result.message, "t": result.t,
        "steps": result.trace.steps, "halvings": result.trace.halvings,
        "checks": result.checks,
        "volume_drift": abs(result.trace.records[-1]["volume"] - vol0) / vol0,
    }
    summary["initial"] = {"volume": vol0, "area": result.trace.records[0]["area"],
                          "phi": profile.phi(vol0)}
    summary["final"] = functionals(grid, w, result.state).as_dict()
    summary["isoperimetric"] = ver.as_dict()
    summary["isoperimetric_final"] = ver_final.as_dict()
    write_trace(out / "trace.csv", result.trace)
    if result.verdict == "aborted":
        print(f"error: flow aborted: {result.message}", file=sys.stderr)
        code = EXIT_ABORT
    elif "fail" in (ver.status, ver_final.status):
        slack = min(ver.slack, ver_final.slack)
        print(f"isoperimetric inequality violated: slack {slack:.3e}", file=sys.stderr)
        code = EXIT_ISO_FAIL
    elif result.verdict == "timeout":
        print(f"flow did not converge by t_max = {result.t}", file=sys.stderr)
        code = EXIT_TIMEOUT
    summary["exit_code"] = code
    _write_json(out / "summary.json", summary)
    _write_json(out / "timing.json", {"wall_seconds": time.perf_counter() - t0})
    return code


def cmd_verify(cfg, out: Path, strict=False):
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    w = cfg.warping()
    grid = cfg.grid()
    ok, rep = _suite(cfg, grid, w)
    for msg in rep["failures"]:
        print(f"threshold violated: {msg}", file=sys.stderr)
    code = EXIT_OK if ok else EXIT_TIMEOUT
    _write_json(out / "summary.json", {"command": "verify", "config": dict(sorted(cfg.values.items())),
                                       "verify": rep, "exit_code": code})
    _write_json(out / "timing.json", {"wall_seconds": time.perf_counter() - t0})
    return code


def cmd_profile(cfg, out: Path, strict=False):
    out.mkdir(parents=True, exist_ok=True)
    prof = IsoperimetricProfile.from_grid(cfg.grid(), cfg.warping())
    table = prof.tabulate(cfg["profile.points"])
    with open(out / "profile.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(("R", "f0", "f1", "phi"))
        for row in table:
            wr.writerow(["%.17g" % x for x in row])
    return EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "profile": cmd_profile}


def _job(command, config_path, out, strict):
    try:
        cfg = load_config(config_path)
        return COMMANDS[command](cfg, out, strict)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GRWError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT


def _out_root(args, config_path):
    if args.out:
        return Path(args.out)
    try:
        run_out = load_config(config_path).get("run.out")
    except ConfigError:
        run_out = None
    if run_out:
        return Path(run_out)
    return Path(os.environ.get(ENV_OUT, "grwflow-out"))


def build_parser():
    p = argparse.ArgumentParser(prog="grwflow", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", action="append", required=True,
                   help="config file (repeat for several independent runs)")
    p.add_argument("--out", help=f"output directory (default: run.out, ${ENV_OUT}, ./grwflow-out)")
    p.add_argument("--strict", action="store_true", help="run curvature self-tests before the flow")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for several configs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    configs = args.config
    outs = []
    for c in configs:
        root = _out_root(args, c)
        outs.append(root / Path(c).stem if len(configs) > 1 else root)
    jobs = [(args.command, c, o, args.strict) for c, o in zip(configs, outs)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            codes = list(ex.map(_job, *zip(*jobs)))
    else:
        codes = [_job(*j) for j in jobs]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
