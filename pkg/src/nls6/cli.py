"""Command line entry point ``nls6``.

Exit codes: 0 success, 1 bad arguments or input, 2 certificate tolerance
failure, 3 numerical failure (dt floor without a blow-up prediction).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .dynamics import IntegratorConfig, evolve, series_columns
from .experiments import BATCH_COLUMNS, build_initial, predict, run_cw, thresholds_for
from .grids import RadialGrid
from .ground_state import closed_form_kinetic, elliptic_residual, ground_state_closed_form
from .io import load_config, write_series_csv, write_snapshot

TOL = {"pohozaev_dev": 1e-6, "res": 1e-4, "threshold": 1e-6, "closed_form": 1e-4}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(obj):
    print(json.dumps(obj, indent=2, default=float))


# ---------------------------------------------------------------- commands

def cmd_verify_ground_state(args) -> int:
    if not args.kappa > 0 or args.n < 16 or not args.rmax > 0:
        raise UsageError("need kappa > 0, n >= 16 and rmax > 0")
    gs = ground_state_closed_form(args.kappa, RadialGrid(args.n, args.rmax))
    res1, res2 = elliptic_residual(gs)
    cert = {"kappa": gs.kappa, "H_W": gs.H_W, "E_W": gs.E_W, "R_W": gs.R_W, "C_GN": gs.C_GN,
            "res1": res1, "res2": res2, "pohozaev_dev": abs(gs.H_W / gs.R_W - 1.5)}
    checks = {
        "pohozaev": cert["pohozaev_dev"] < TOL["pohozaev_dev"],
        "residual": max(res1, res2) < TOL["res"],
        "energy_threshold": abs(gs.E_W - gs.H_W / 3) / gs.H_W < TOL["threshold"],
        "closed_form": abs(gs.H_W / closed_form_kinetic(gs.kappa) - 1) < TOL["closed_form"],
    }
    cert["checks"] = checks
    cert["passed"] = all(checks.values())
    _emit(cert)
    return 0 if cert["passed"] else 2


def _parse_init(text):
    kind, _, val = text.partition(":")
    if kind != "cW" or not val:
        raise UsageError(f"--init must look like cW:<c>, got {text!r}")
    try:
        c = float(val)
    except ValueError:
        raise UsageError(f"bad amplitude in --init {text!r}") from None
    if not np.isfinite(c):
        raise UsageError("amplitude must be finite")
    return {"kind": "cW", "c": c}


def cmd_classify(args) -> int:
    if args.config:
        cfg = _load(args.config)
    else:
        if not args.init:
            raise UsageError("classify needs --config or --init")
        if not args.kappa > 0:
            raise UsageError("kappa must be positive")
        cfg = {"kappa": args.kappa, "init": _parse_init(args.init),
               "grid": {"type": "radial", "d": 6, "n": args.n, "r_max": args.rmax}}
    fp, _ = build_initial(cfg)
    pred, ev = predict(fp, thresholds_for(fp))
    _emit({"prediction": str(pred), "evidence": ev})
    return 0


def _load(path):
    try:
        return load_config(path)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    fp0, t0 = build_initial(cfg)
    icfg = IntegratorConfig(**cfg.get("integrator", {}))
    out = cfg.get("outputs", {})
    outdir = Path(args.out or out.get("dir", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    run_id = cfg.get("run_id", outdir.name)
    gs = thresholds_for(fp0)
    pred, ev = predict(fp0, gs)
    cut = None
    if fp0.grid.kind == "radial":
        cut = dg.CutoffWeight(cfg.get("cutoff_R", fp0.grid.r_max / 4))
    run = evolve(fp0, icfg, t0=t0, thresholds=gs, cutoff=cut)
    if out.get("csv", True):
        write_series_csv(outdir / "series.csv", run.series, series_columns(fp0.grid.d))
    if out.get("snapshots", True):
        snaps = run.snapshots or [(t0, fp0)]
        snaps = snaps + [(run.outcome.t, run.final)]
        for i, (t, fp) in enumerate(snaps):
            write_snapshot(outdir / f"snap_{i:05d}.nls6", fp, t)
    if gs is not None:
        verdict = dg.confirm(run, pred, gs, ev)
        text = verdict.to_json(run_id)
    else:
        text = json.dumps({"prediction": str(pred), "evidence": ev, "observed": "Inconclusive",
                           "run_id": run_id}, indent=2)
    (outdir / "verdict.json").write_text(text + "\n")
    print(text)
    if run.outcome.name == "DtFloor" and pred.kind != "BlowUp":
        return 3
    return 0


def parse_sweep(text):
    name, _, rng = text.partition("=")
    parts = rng.split(":")
    if name != "c" or len(parts) != 3:
        raise UsageError(f"--sweep must look like c=start:stop:step, got {text!r}")
    try:
        a, b, h = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"bad numbers in --sweep {text!r}") from None
    if not h > 0 or b < a:
        raise UsageError("sweep needs step > 0 and stop >= start")
    k = int(round((b - a) / h))
    return [round(a + i * h, 12) for i in range(k + 1)]


def cmd_batch(args) -> int:
    cs = parse_sweep(args.sweep)
    jobs = int(os.environ.get("NLS6_THREADS", args.jobs))
    work = partial(run_cw, kappa=args.kappa, n=args.n, r_max=args.rmax, t_end=args.t_end,
                   dt0=args.dt0, record_every=args.record_every)
    if jobs <= 1:
        rows = [work(c) for c in cs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(work, cs))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(BATCH_COLUMNS)
        for r in rows:
            w.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in BATCH_COLUMNS])
    finally:
        if args.out:
            fh.close()
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nls6", description="Quadratic NLS system in six dimensions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify-ground-state", help="certify the closed-form ground state")
    v.add_argument("--kappa", type=float, default=1.0)
    v.add_argument("--n", type=int, default=2 ** 14)
    v.add_argument("--rmax", type=float, default=400.0)
    v.set_defaults(func=cmd_verify_ground_state)

    c = sub.add_parser("classify", help="dichotomy prediction without simulating")
    c.add_argument("--config")
    c.add_argument("--init", help="cW:<c>")
    c.add_argument("--kappa", type=float, default=0.5)
    c.add_argument("--n", type=int, default=2 ** 14)
    c.add_argument("--rmax", type=float, default=400.0)
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("simulate", help="run one configuration")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (overrides outputs.dir)")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("batch", help="sweep the cW family")
    b.add_argument("--sweep", required=True, help="c=start:stop:step (inclusive)")
    b.add_argument("--kappa", type=float, default=0.5)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--n", type=int, default=4096)
    b.add_argument("--rmax", type=float, default=400.0)
    b.add_argument("--t-end", type=float, default=20.0)
    b.add_argument("--dt0", type=float, default=1e-3)
    b.add_argument("--record-every", type=int, default=500)
    b.add_argument("--out", help="summary CSV path (default stdout)")
    b.set_defaults(func=cmd_batch)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"nls6: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
