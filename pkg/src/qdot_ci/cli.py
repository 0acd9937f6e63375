"""
Batch front-end: ``qdot-ci <command> --config <path> [--threads N] [--out DIR]``.

Commands write CSV artifacts plus ``run.log`` into the output directory. On
failure a single ``error: ...`` line goes to stderr and the exit status is
nonzero (2 for usage errors, 1 for everything else).
"""

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io, kernels
from .analysis import (
    charge_stability,
    coherent_oscillation,
    detuning_sweep,
    distance_sweep,
    fit_anticrossing,
    run_point,
)
from .config import OutputConfig, load_config
from .errors import QdotError, ValidationError

COMMANDS = ("single", "detuning-sweep", "distance-sweep", "stability", "oscillation", "dump-integrals")
_KIND = {"detuning-sweep": "detuning", "distance-sweep": "distance", "stability": "stability"}

log = logging.getLogger("qdot_ci.run")


def _log_point(label, result):
    t = result.timings
    log.info(
        "%s: assemble %.3fs, eigensolve %.3fs (%d cycles, max residual %.3e eV), integrals %.3fs, ci %.3fs",
        label,
        t["assemble"],
        t["eigensolve"],
        result.orbitals.iterations,
        float(np.max(result.orbitals.residual_norms)),
        t["integrals"],
        t["ci"],
    )


def _log_sweep(sweep, unit):
    for v, r in zip(sweep.values, sweep.points):
        _log_point(f"{sweep.parameter}={v:.12g}{unit}", r)


def _check_kind(cfg, command):
    kind = cfg.sweep.kind
    if kind is not None and command in _KIND and kind != _KIND[command]:
        raise ValidationError("sweep", "kind", f"config sweep kind {kind!r} does not match command {command!r}")


def _fit_or_none(sweep):
    try:
        return fit_anticrossing(sweep)
    except ValidationError as exc:
        log.info("tls fit skipped: %s", exc)
        return None


def cmd_single(cfg, out, threads):
    result = run_point(cfg, threads=threads)
    _log_point("single", result)
    k = min(cfg.output.levels, len(result.basis))
    io.write_levels(out / "levels.csv", result.spectrum, k)
    log.info("exchange splitting J = %.12g eV", result.exchange_splitting)
    return ["levels.csv"]


def cmd_detuning(cfg, out, threads):
    sweep = detuning_sweep(cfg, cfg.sweep.grid(), cfg.output.levels, threads=threads, keep_points=True)
    _log_sweep(sweep, " eV")
    io.write_sweep(out / "detuning_sweep.csv", sweep)
    written = ["detuning_sweep.csv"]
    fit = _fit_or_none(sweep)
    if fit is not None:
        io.write_tls_fit(out / "tls_fit.csv", fit)
        log.info("tls fit: %s", fit)
        written.append("tls_fit.csv")
    return written


def cmd_distance(cfg, out, threads):
    sweep = distance_sweep(cfg, cfg.sweep.grid(), cfg.output.levels, threads=threads, keep_points=True)
    _log_sweep(sweep, " nm")
    io.write_sweep(out / "distance_sweep.csv", sweep)
    return ["distance_sweep.csv"]


def cmd_stability(cfg, out, threads):
    grid = cfg.sweep.grid()
    stab = charge_stability(cfg, grid, grid, mu=cfg.sweep.chemical_potential_eV, threads=threads)
    io.write_stability(out / "stability.csv", stab)
    log.info("stability map: %d x %d cells, mu = %.12g eV", grid.size, grid.size, stab.chemical_potential_eV)
    return ["stability.csv"]


def cmd_oscillation(cfg, out, threads):
    osc = cfg.oscillation
    if osc.tunnel_coupling_eV is not None:
        tunnel = osc.tunnel_coupling_eV
        asym = osc.asymmetry_eV if osc.asymmetry_eV is not None else 0.0
    else:
        sweep = detuning_sweep(cfg, cfg.sweep.grid(), max(2, cfg.output.levels), threads=threads, keep_points=True)
        _log_sweep(sweep, " eV")
        fit = fit_anticrossing(sweep)
        log.info("tls fit: %s", fit)
        tunnel = fit.tunnel_coupling_eV
        asym = osc.asymmetry_eV if osc.asymmetry_eV is not None else float(fit.asymmetry(osc.detuning_eV))
    log.info("oscillation: Delta = %.12g eV, epsilon = %.12g eV", tunnel, asym)
    trace = coherent_oscillation(tunnel, asym, osc.times())
    io.write_oscillation(out / "oscillation.csv", trace)
    return ["oscillation.csv"]


def cmd_dump_integrals(cfg, out, threads):
    result = run_point(cfg, threads=threads)
    _log_point("dump-integrals", result)
    io.write_integrals(out / "integrals.csv", result.table)
    return ["integrals.csv"]


HANDLERS = {
    "single": cmd_single,
    "detuning-sweep": cmd_detuning,
    "distance-sweep": cmd_distance,
    "stability": cmd_stability,
    "oscillation": cmd_oscillation,
    "dump-integrals": cmd_dump_integrals,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="qdot-ci", description=__doc__.splitlines()[1].strip())
    parser.add_argument("command", help=", ".join(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
    parser.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    return parser


def _fail(message, status):
    print("error: " + " ".join(str(message).split()), file=sys.stderr)
    return status


def _attach_log(path):
    handler = logging.FileHandler(path, mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.propagate = False
    return handler


def run(command, config_path, threads=None, out_dir=None):
    """Execute one command; returns the list of files written."""
    if command not in HANDLERS:
        raise ValidationError("cli", "command", f"unknown command: {command}")
    cfg = load_config(config_path)
    _check_kind(cfg, command)
    if out_dir is not None:
        cfg = replace(cfg, output=OutputConfig(str(out_dir), cfg.output.levels))
    threads = threads or os.cpu_count() or 1
    if threads < 1:
        raise ValidationError("cli", "threads", f"must be >= 1, got {threads}")
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)

    handler = _attach_log(out / "run.log")
    try:
        log.info("command: %s", command)
        log.info("config: %s", json.dumps(cfg.to_dict(), sort_keys=True))
        log.info("kernel backend: %s, threads: %d", kernels.BACKEND, threads)
        start = time.perf_counter()
        with threadpool_limits(limits=threads):
            written = HANDLERS[command](cfg, out, threads)
        log.info("wrote %s in %.3fs", ", ".join(written), time.perf_counter() - start)
        return written
    except Exception as exc:
        log.error("failed: %s", exc)
        raise
    finally:
        log.removeHandler(handler)
        handler.close()


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command not in HANDLERS:
        return _fail(f"unknown command: {args.command}", 2)
    try:
        run(args.command, args.config, threads=args.threads, out_dir=args.out)
    except FileNotFoundError as exc:
        return _fail(f"config: {exc}", 1)
    except QdotError as exc:
        return _fail(f"{type(exc).__name__}: {exc}", 1)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
