"""Command line: ``sim run|sweep|calibrate CONFIG [--out DIR] [--seed N] [--tol REL] [--svg]``.

Exit codes: 0 success, 2 configuration error, 3 integration error.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from pathlib import Path

from . import __version__
from .config import load_config, resolve
from .errors import ConfigurationError, IntegrationError
from .output import svg_line_plot, write_manifest, write_rows, write_table, write_wigner
from .scenarios import calibrate_network_pulse, run_scenario, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION = 0, 2, 3


def _apply_flags(cfg: dict, args) -> dict:
    cfg = copy.deepcopy(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.tol is not None:
        cfg["integrator"]["rel_tol"] = args.tol
    if args.svg:
        cfg["output"]["svg"] = True
    return resolve(cfg)


def _out_dir(cfg: dict, args) -> Path:
    out = Path(args.out or cfg.get("output_dir") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(cfg: dict, out: Path) -> dict:
    result = run_scenario(cfg)
    write_table(out / "timeseries.csv", result.columns)
    if result.wigner is not None:
        write_wigner(out / "wigner.csv", *result.wigner)
    if cfg["output"]["svg"]:
        keys = [k for k in result.columns if k != "time" and not k.startswith("control_")]
        axis = "kappa t" if cfg["scenario"].startswith("network") else "gamma1 t"
        svg = svg_line_plot(result.columns["time"], {k: result.columns[k] for k in keys},
                            title=cfg["scenario"], xlabel=axis, ylabel="population")
        (out / "plot.svg").write_text(svg)
    m = result.metrics
    print(f"{cfg['scenario']}: peak fidelity {m['peak_fidelity']:.4f} "
          f"(population {m['peak_population']:.4f}) at t = {m['peak_time']:.5g}")
    return m


def cmd_sweep(cfg: dict, out: Path) -> dict:
    if "sweep" not in cfg:
        raise ConfigurationError("sweep: block required for the sweep command")

    def report(c):
        print(f"kappa {c.kappa:8.4g}  g {c.coupling:8.4g}  F {c.peak_fidelity:.4f}"
              f"{'  ' + c.error if c.error else ''}", flush=True)

    cells = run_sweep(cfg, progress=report)
    rows = [[c.kappa, c.coupling, c.peak_fidelity, c.peak_time, c.width, c.delay_factor,
             c.in_region, c.passed, c.error] for c in cells]
    write_rows(out / "grid.csv", ["kappa", "g", "peakFidelity", "peakTime", "width", "delayFactor",
                                  "inRegion", "pass", "error"], rows)
    region = [c for c in cells if c.in_region]
    return {
        "cells": len(cells),
        "failed_cells": sum(1 for c in cells if c.error),
        "region_cells": len(region),
        "region_min_fidelity": min((c.peak_fidelity for c in region), default=float("nan")),
        "region_all_pass": all(c.passed for c in region),
    }


def cmd_calibrate(cfg: dict, out: Path) -> dict:
    if "calibrate" not in cfg:
        raise ConfigurationError("calibrate: block required for the calibrate command")

    def report(h):
        print("  " + "  ".join(f"{k} {v:.6g}" for k, v in h.items()), flush=True)

    res = calibrate_network_pulse(cfg, progress=report)
    doc = {"parameters": res.parameters, "peak_fidelity": res.peak_fidelity,
           "peak_population": res.peak_population, "peak_time": res.peak_time,
           "evaluations": res.evaluations}
    (out / "calibration.json").write_text(json.dumps(doc, indent=2) + "\n")
    # the calibrated scenario, ready to run
    frozen = copy.deepcopy(cfg)
    frozen["scenario"] = cfg["calibrate"]["target"]
    frozen.pop("calibrate")
    p = res.parameters
    frozen["pulse"]["width"] = {"value": p["width"], "unit": "ratio"}
    frozen["pulse"]["center"] = {"value": p["center"], "unit": "ratio"}
    frozen["node"]["gc"] = {"value": p["gc"], "unit": "ratio"}
    frozen["node"]["delta_q"] = {"value": p["delta_q"], "unit": "ratio"}
    (out / "calibrated.json").write_text(json.dumps(frozen, indent=2) + "\n")
    print(f"calibrated: F = {res.peak_fidelity:.4f} at t = {res.peak_time:.4g} "
          f"after {res.evaluations} evaluations")
    return doc


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "calibrate": cmd_calibrate}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("config", help="scenario config or a run manifest")
    ap.add_argument("--out", help="output directory (default: config output_dir or .)")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--tol", type=float, help="override the relative integrator tolerance")
    ap.add_argument("--svg", action="store_true", help="also write plot.svg")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_flags(load_config(args.config), args)
        out = _out_dir(cfg, args)
        t0 = time.perf_counter()
        metrics = COMMANDS[args.command](cfg, out)
        wall = time.perf_counter() - t0
        write_manifest(out / "manifest.json", cfg, metrics, wall, __version__, args.command)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"integration error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
