"""``lugre-lab`` command line: run, compare, verify and sweep scenarios.

Exit codes: 0 success, 1 failed verification check, 2 invalid configuration
or usage, 3 simulation diverged.  Diagnostics go to stderr, summaries to
stdout.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis as an
from . import verify as vf
from ._backend import BACKEND
from .config import (
    get_path, load_json, load_preset, merge, preset_names, scenario_from_dict,
    set_path, variant_overrides,
)
from .sim import ConfigError, SimulationDiverged, run_closed_loop, run_open_loop_observer

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def thread_count(n_jobs):
    raw = os.environ.get("LUGRE_LAB_THREADS", "0").strip() or "0"
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError("LUGRE_LAB_THREADS", f"expected an integer, got {raw!r}") from None
    if cap < 0:
        raise ConfigError("LUGRE_LAB_THREADS", "must be >= 0")
    if cap == 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_jobs))


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars plain."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _scenario_dict(args):
    if bool(args.config) == bool(args.preset):
        raise UsageError("give exactly one of --config or --preset "
                         f"(presets: {', '.join(preset_names())})")
    data = load_preset(args.preset) if args.preset else load_json(args.config)
    if not isinstance(data, dict):
        raise ConfigError("<root>", "scenario must be a JSON object")
    if args.dt is not None:
        data["dt"] = args.dt
    if args.duration is not None:
        data["duration"] = args.duration
    return data


def simulate(cfg):
    if cfg.loop_kind == "open_loop_observer":
        return run_open_loop_observer(
            cfg.reference, cfg.observer, cfg.duration, cfg.dt, friction=cfg.friction,
            plant=cfg.plant, observer_friction=cfg.observer_friction, initial=cfg.initial,
            record_stride=cfg.record_stride,
            lyapunov="auto" if cfg.lyapunov is None else cfg.lyapunov, name=cfg.name)
    return run_closed_loop(cfg)


def summarize(cfg, traj):
    """Metrics, decay fits and checks for one finished run."""
    out = {"metrics": {}, "decay_fits": {}, "checks": []}
    if cfg.loop_kind != "open_loop_observer":
        out["metrics"] = an.tracking_metrics(traj)
        # frictionless loop figures, informational
        spr = an.spr_margin(cfg.controller, cfg.plant, cfg.friction)
        out["loop"] = {"bandwidth_hz": an.loop_bandwidth_hz(cfg.controller, cfg.plant, cfg.loop_kind),
                       "spr_margin": spr.margin, "spr_margin_freq_hz": spr.freq_hz}
    for ch in ("e_z", "e_w", "e_f"):
        col = traj[ch]
        if np.all(np.isnan(col)) or not abs(col[0]) > 0:
            continue
        try:
            fit = an.fit_decay_rate(traj.t, col)
        except an.InsufficientSamples as exc:
            out["decay_fits"][ch] = {"error": str(exc)}
        else:
            out["decay_fits"][ch] = {"rate": fit.rate, "r_squared": fit.r_squared,
                                     "window": list(fit.window), "n_samples": fit.n_samples}
    V = traj["V"]
    if not np.all(np.isnan(V)) and V[0] > 0:
        out["checks"].append(vf._le("V non-increasing (max rise / V0)", vf.v_increase(V), 1e-9).as_dict())
    return out


def _run_one(name, data, out_dir):
    cfg = scenario_from_dict(data)
    traj = simulate(cfg)
    path = out_dir / f"{name}.csv"
    traj.to_csv(path)
    rep = summarize(cfg, traj)
    rep["csv"] = str(path)
    rep["backend"] = traj.meta["backend"]
    return rep


def _write_report(out_dir, stem, report):
    path = out_dir / f"{stem}.report.json"
    with open(path, "w") as fh:
        json.dump(_clean(report), fh, indent=2)
        fh.write("\n")
    return path


def _run_batch(jobs, out_dir):
    """Run ``(name, data)`` jobs concurrently; results keep the input order."""
    with ThreadPoolExecutor(max_workers=thread_count(len(jobs))) as pool:
        futures = [pool.submit(_run_one, name, data, out_dir) for name, data in jobs]
        return [f.result() for f in futures]


def _metric_line(name, rep):
    m = rep["metrics"]
    if m:
        return (f"{name:<16} rmse={m['rmse']:.4e} sse={m['steady_state_error']:.4e} "
                f"overshoot={m['overshoot']:.3f} settling={m['settling_time']:.4g}")
    fits = " ".join(f"{ch}:rate={f['rate']:.4g}" if "rate" in f else f"{ch}:n/a"
                    for ch, f in rep["decay_fits"].items())
    return f"{name:<16} {fits or 'no decaying error channels'}"


def cmd_run(args):
    data = _scenario_dict(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = str(data.get("name", "scenario"))
    rep = _run_one(name, data, out_dir)
    report = {"scenario": name, "variants": {name: rep}}
    path = _write_report(out_dir, name, report)
    print(_metric_line(name, rep))
    for c in rep["checks"]:
        print(vf.Check(**c).line())
    print(f"wrote {rep['csv']} and {path}")
    return EXIT_OK


def cmd_compare(args):
    data = _scenario_dict(args)
    names = [v for v in args.variants.split(",") if v] if args.variants else None
    variants = variant_overrides(data, names)
    if len(variants) < 2:
        raise UsageError("compare needs at least two variants")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = {k: v for k, v in data.items() if k != "variants"}
    stem = str(data.get("name", "scenario"))
    jobs = [(f"{stem}-{n}", merge(base, dict(ov, name=f"{stem}-{n}"))) for n, ov in variants]
    # parse everything first so a bad variant fails before any run starts
    for _, d in jobs:
        scenario_from_dict(d)
    reports = _run_batch(jobs, out_dir)
    report = {"scenario": stem, "variants": {n: r for (n, _), r in zip(variants, reports)}}
    path = _write_report(out_dir, f"{stem}-compare", report)
    for (n, _), rep in zip(variants, reports):
        print(_metric_line(n, rep))
    print(f"wrote {path}")
    return EXIT_OK


def _sweep_values(args):
    if args.values:
        try:
            vals = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    elif args.range:
        parts = args.range.split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("lin", "log")):
            raise UsageError("--range is start:stop:count[:lin|log]")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"bad --range {args.range!r}") from None
        if n < 1:
            raise UsageError("sweep range is empty")
        if len(parts) == 4 and parts[3] == "log":
            if lo <= 0 or hi <= 0:
                raise UsageError("log range needs positive bounds")
            vals = list(np.logspace(math.log10(lo), math.log10(hi), n))
        else:
            vals = list(np.linspace(lo, hi, n))
    else:
        raise UsageError("sweep needs --values or --range")
    if not vals:
        raise UsageError("sweep range is empty")
    return vals


def cmd_sweep(args):
    data = _scenario_dict(args)
    values = _sweep_values(args)
    base = {k: v for k, v in data.items() if k != "variants"}
    current = get_path(base, args.param)
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise ConfigError(args.param, "sweep parameter must be a numeric field")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = str(data.get("name", "scenario"))
    jobs = []
    for i, v in enumerate(values):
        d = set_path(base, args.param, float(v))
        d["name"] = f"{stem}-sweep{i:03d}"
        scenario_from_dict(d)
        jobs.append((d["name"], d))
    reports = _run_batch(jobs, out_dir)

    metric_keys = ("rmse", "steady_state_error", "overshoot", "settling_time")
    rows = []
    for v, rep in zip(values, reports):
        row = {args.param: float(v)}
        for k in metric_keys:
            row[k] = rep["metrics"].get(k, "")
        for ch in ("e_z", "e_w"):
            fit = rep["decay_fits"].get(ch, {})
            row[f"{ch}_rate"] = fit.get("rate", "")
            row[f"{ch}_r_squared"] = fit.get("r_squared", "")
        rows.append(row)
    csv_path = out_dir / f"{stem}-sweep.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(x) if isinstance(x, float) else x) for k, x in row.items()})
    report = {"scenario": stem, "parameter": args.param, "values": values,
              "runs": {n: r for (n, _), r in zip(jobs, reports)}, "table": str(csv_path)}
    path = _write_report(out_dir, f"{stem}-sweep", report)
    for row in rows:
        print("  ".join(f"{k}={row[k]:.4g}" if isinstance(row[k], float) else f"{k}=-" for k in row))
    print(f"wrote {csv_path} and {path}")
    return EXIT_OK


def cmd_verify(args):
    checks = vf.run_suite(args.suite, seed=args.seed)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed (suite={args.suite}, seed={args.seed})")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_report(out_dir, f"verify-{args.suite}",
                      {"suite": args.suite, "seed": args.seed, "checks": [c.as_dict() for c in checks]})
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="lugre-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s (backend {BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p, out_default="out"):
        p.add_argument("--config", help="scenario JSON file")
        p.add_argument("--preset", help="shipped scenario: " + ", ".join(preset_names()))
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--dt", type=float, help="override the step size, s")
        p.add_argument("--duration", type=float, help="override the horizon, s")

    p = sub.add_parser("run", help="simulate one scenario, write CSV and report")
    scenario_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run variants of one scenario side by side")
    scenario_flags(p)
    p.add_argument("--variants", help="comma-separated variant names; defaults to the file's list")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", nargs="?", default="all", choices=vf.SUITES + ("all",))
    p.add_argument("--seed", type=int, default=0, help="seed for random draws")
    p.add_argument("--out", help="write a JSON report to this directory")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="vary one numeric field over a grid")
    scenario_flags(p)
    p.add_argument("--param", required=True, help="dotted field path, e.g. observer.alpha")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--values", help="comma-separated values")
    g.add_argument("--range", help="start:stop:count[:lin|log]")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"lugre-lab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"lugre-lab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"lugre-lab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        print(f"lugre-lab: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
