"""Command line: threshold, curve, time-scan, anderson, validate and regimes runs."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, anderson, config, floquet, ionization, oracle
from .errors import ConfigError, RydionError
from .species import get_species
from .units import ghz_to_au

COMMANDS = ("threshold", "curve", "time-scan", "anderson", "validate", "regimes")

CURVE_COLUMNS = ("n0", "omega_GHz", "omega0_scaled", "t_periods", "F_au", "F0_scaled", "regime",
                 "bracket_lo_au", "bracket_hi_au", "error")
REGIME_COLUMNS = ("n0", "omega_GHz", "omega0_scaled", "regime", "min_upward_gap_au")


def _num(x) -> str:
    return f"{x:.12e}"


def jsonable(obj):
    """Plain JSON types; non-finite floats become strings so the output stays strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, ionization.Regime):
        return obj.value
    return obj


def settings_from(cfg: config.RunConfig) -> ionization.Settings:
    return ionization.Settings(
        margin_below=cfg["basis.margin_below"], margin_above=cfg["basis.margin_above"],
        absorber_width=cfg["basis.absorber_width"], absorber_factor=cfg["absorber.factor"],
        photon_guard=cfg["floquet.photon_guard"], photon_blocks_fixed=cfg["floquet.K"],
        coherent=cfg["floquet.coherent"])


def grid_from(cfg: config.RunConfig) -> ionization.FieldGrid:
    return ionization.FieldGrid(cfg["grid.min"], cfg["grid.max"], cfg["grid.points"], cfg["grid.spacing"])


def _common(cfg):
    return get_species(cfg["species"], cfg["species.launch_channel"]), ghz_to_au(cfg["omega_ghz"])


def point_dict(p: ionization.ThresholdPoint) -> dict:
    return {"species": p.species, "n0": p.n0, "omega_GHz": p.omega_lab, "omega0_scaled": p.omega0,
            "t_periods": p.t_interaction, "F_au": p.f_threshold, "F0_scaled": p.f0_threshold,
            "regime": p.regime, "bracket_au": list(p.bracket), "evaluations": p.evaluations,
            "error": p.error}


def curve_csv(curve: ionization.ThresholdCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CURVE_COLUMNS)
    for p in curve.points:
        w.writerow([p.n0, _num(p.omega_lab), _num(p.omega0), _num(p.t_interaction), _num(p.f_threshold),
                    _num(p.f0_threshold), p.regime.value, _num(p.bracket[0]), _num(p.bracket[1]),
                    p.error or ""])
    return buf.getvalue()


def run_threshold(cfg, workers):
    sp, w = _common(cfg)
    settings = settings_from(cfg)
    p = ionization.extract_threshold(sp, cfg["n0"], w, cfg["t_periods"], grid_from(cfg), settings,
                                     cfg["regime.eta"])
    delta = ionization.convergence_delta(sp, cfg["n0"], w, p.f_threshold, cfg["t_periods"], settings)
    return {"threshold": point_dict(p)}, {"convergence_delta_P": delta}, {}


def run_curve(cfg, workers):
    sp, w = _common(cfg)
    curve = ionization.threshold_curve(sp, cfg["n0_range"], w, cfg["t_periods"], grid_from(cfg),
                                       settings_from(cfg), cfg["regime.eta"], workers)
    failed = [p.n0 for p in curve.points if not p.ok]
    return ({"points": [point_dict(p) for p in curve.points]}, {"failed_n0": failed},
            {"curve.csv": curve_csv(curve)})


def run_time_scan(cfg, workers):
    sp, w = _common(cfg)
    fit = ionization.fit_time_scaling(sp, cfg["n0"], w, cfg["t_list"], grid_from(cfg),
                                      settings_from(cfg), workers)
    monotone = all(a >= b for a, b in zip(fit.thresholds, fit.thresholds[1:]))
    res = {"gamma": fit.gamma, "r_squared": fit.r_squared, "t_range_periods": list(fit.t_range),
           "amplitude": fit.amplitude, "t_periods": list(fit.times), "F0_scaled": list(fit.thresholds)}
    return res, {"nonincreasing": monotone}, {}


def run_anderson(cfg, workers):
    sp, w = _common(cfg)
    basis = settings_from(cfg).basis(sp, cfg["n0"])
    f = cfg["anderson.field_f0"] / cfg["n0"] ** 4
    chain = anderson.build_chain(basis, w, f, guard=cfg["floquet.photon_guard"])
    sites = [{"m": s.m, "level_n": s.level_n, "detuning_au": s.detuning, "hopping_au": s.hopping}
             for s in chain.sites]
    res = {"field_au": f, "n_sites": chain.length, "truncated_at_edge": chain.truncated, "sites": sites,
           "detuning_std_over_omega": float(np.std(chain.detunings, ddof=1) / w.value)}
    diag = anderson.localization_length(chain)
    res.update({"xi_sites": diag.xi, "participation": diag.participation, "extended": diag.extended,
                "xi_statistical_sites": anderson.statistical_xi(chain, cfg["anderson.steps"], cfg["seed"])})
    f_loc = anderson.predict_localization_field(basis, w, cfg["anderson.target_ratio"])
    res.update({"F_loc_au": f_loc, "F0_loc_scaled": f_loc * cfg["n0"] ** 4})
    return res, {}, {}


def run_validate(cfg, workers):
    sp, w = _common(cfg)
    settings = settings_from(cfg)
    basis = settings.basis(sp, cfg["n0"])
    K = settings.photon_blocks(basis, w)
    t = cfg["t_periods"] * w.period
    rows = []
    for f0 in cfg["validate.fields_f0"]:
        f = f0 / cfg["n0"] ** 4
        fm = floquet.build_floquet(basis, w, f, K, settings.absorber_rate(w), settings.photon_guard)
        spec = floquet.central_spectrum(fm)
        prop = oracle.propagate(basis, w, f, t, cfg["validate.dt_per_period"], settings.absorber_rate(w))
        p_coh, p_inc = floquet.survival(spec, t, True), floquet.survival(spec, t, False)
        rows.append({"F0_scaled": f0, "F_au": f, "P_oracle": prop.final, "P_floquet_coherent": p_coh,
                     "P_floquet_incoherent": p_inc, "delta_coherent": abs(p_coh - prop.final),
                     "delta_incoherent": abs(p_inc - prop.final),
                     "step_halving_delta": prop.step_halving_delta})
    res = {"basis_levels": len(basis), "n_min": basis.n_min, "n_max": basis.n_max, "K": K, "points": rows,
           "max_abs_dP": max(r["delta_coherent"] for r in rows),
           "max_abs_dP_incoherent": max(r["delta_incoherent"] for r in rows)}
    return res, {}, {}


def run_regimes(cfg, workers):
    sp, w = _common(cfg)
    settings = settings_from(cfg)
    rows, buf = [], io.StringIO()
    wr = csv.writer(buf, lineterminator="\r\n")
    wr.writerow(REGIME_COLUMNS)
    for n0 in cfg["n0_range"]:
        reg = ionization.classify_regime(sp, n0, w, cfg["regime.eta"], settings)
        gaps = ionization.upward_gaps(settings.basis(sp, n0))
        gap = float(gaps.min()) if gaps.size else math.inf
        rows.append({"n0": n0, "omega0_scaled": w.value * n0**3, "regime": reg, "min_upward_gap_au": gap})
        wr.writerow([n0, _num(cfg["omega_ghz"]), _num(w.value * n0**3), reg.value, _num(gap)])
    return {"regimes": rows}, {}, {"regimes.csv": buf.getvalue()}


RUNNERS = {"threshold": run_threshold, "curve": run_curve, "time-scan": run_time_scan,
           "anderson": run_anderson, "validate": run_validate, "regimes": run_regimes}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rydion", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", help="output directory (default: output.dir from the config)")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return ap


def write_record(out: Path, name: str, record: dict):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(json.dumps(jsonable(record), indent=2, allow_nan=False) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    out = Path(args.out) if args.out else None
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = config.load(args.config, args.override)
        out = out or Path(cfg["output.dir"])
        t0, c0 = time.time(), time.process_time()
        results, diagnostics, tables = RUNNERS[args.command](cfg, args.workers)
        record = {
            "tool": "rydion", "version": __version__, "command": args.command,
            "config": cfg.snapshot(), "results": results, "diagnostics": diagnostics,
            "wall_clock": {"started_unix": t0, "elapsed_s": time.time() - t0,
                           "cpu_s": time.process_time() - c0, "workers": args.workers,
                           "python": platform.python_version()},
        }
        out.mkdir(parents=True, exist_ok=True)
        for fname, text in tables.items():
            with open(out / fname, "w", newline="") as fh:
                fh.write(text)
        write_record(out, f"{args.command}.json", record)
        print(out / f"{args.command}.json")
        return 0
    except RydionError as exc:
        err = {"tool": "rydion", "version": __version__, "command": args.command,
               "error": type(exc).__name__, "exit_code": exc.exit_code, "message": str(exc),
               "diagnostics": getattr(exc, "diagnostics", {})}
        print(json.dumps(jsonable(err)), file=sys.stderr)
        if out is not None:
            try:
                write_record(out, "error.json", err)
            except OSError:
                pass
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
