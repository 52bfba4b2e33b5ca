"""Command-line scenario runner.

Usage::

    hybridcavity run scenario.ini --out results/
    hybridcavity sweep scenario.ini --out sweep/
    hybridcavity modes scenario.ini

Exit status: 0 on success, 2 for an invalid config, 3 when a solver
tolerance or range check fails, 4 when some sweep points fail.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RawConfig, load_scenario
from .errors import HorizonError, ParameterError, SamplingError, SingularityError, TruncationError
from .master_coeffs import classify_regime, coefficients
from .observables import correlation_grid, intensity
from .propagator_freq import find_localized_modes, sample_spectrum
from .propagator_time import propagate, solve_u, solve_y

log = logging.getLogger("hybridcavity")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_SWEEP = 0, 2, 3, 4
SOLVER_ERRORS = (TruncationError, SamplingError, SingularityError, HorizonError)
#: worker processes for sweeps
WORKERS_ENV = "HYBRIDCAVITY_THREADS"

_PROPAGATOR_OUTPUTS = {"u", "y", "v_diag", "coefficients", "intensity", "g1_grid",
                       "g2_grid", "quantum_correlation"}
_NOISE_OUTPUTS = _PROPAGATOR_OUTPUTS - {"u", "y"}


# --------------------------------------------------------------------------
# writers
# --------------------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer, bool, np.bool_)):
        return str(int(x))
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def write_csv(path, columns):
    names = list(columns)
    data = [np.asarray(columns[k]) for k in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([_fmt(v) for v in row])


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if not math.isfinite(x) else x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_json(path, obj, indent=1):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(obj), fh, indent=indent, sort_keys=True)
        fh.write("\n")


def _matrix(a):
    """Real and imaginary parts with masked points as ``None``."""
    a = np.ma.asarray(a)
    mask = np.ma.getmaskarray(a)
    data = np.asarray(a.data, complex)
    re = [[None if m else float(v.real) for v, m in zip(r, mr)] for r, mr in zip(data, mask)]
    im = [[None if m else float(v.imag) for v, m in zip(r, mr)] for r, mr in zip(data, mask)]
    return re, im


def _write_two_time(out, name, t, tau, matrix):
    re, im = _matrix(matrix)
    write_json(out / f"{name}.json", {"t": t, "tau": tau, "re": re, "im": im},
               indent=None)
    filled = np.ma.filled(np.ma.asarray(matrix).astype(complex), np.nan + 0j)
    tt, dd = np.meshgrid(t, tau, indexing="ij")
    write_csv(out / f"{name}.csv", {"t": tt.ravel(), "tau": dd.ravel(),
                                    "re": filled.real.ravel(), "im": filled.imag.ravel()})


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------

def _calibrated_drive(sc):
    if sc.target_photons is None:
        return sc.drive
    from .drive import calibrate_amplitude

    u, udot = solve_u(sc.model, sc.env, sc.grid)
    y = solve_y(u, udot, sc.drive, sc.grid, sc.env.cavity_frequency)
    amp = calibrate_amplitude(y, sc.target_photons)
    return sc.drive.scaled(amp)


def execute(sc, out):
    """Run one scenario and write its outputs into ``out``.

    Returns a summary dict used by sweeps.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    outs = set(sc.outputs)
    summary = {}
    resolved = copy.deepcopy(sc.resolved)
    files = []

    drive = _calibrated_drive(sc)
    resolved["drive"]["amplitude"] = drive.amplitude

    props = None
    if outs & _PROPAGATOR_OUTPUTS:
        props = propagate(sc.model, sc.env, drive, sc.grid, noise=bool(outs & _NOISE_OUTPUTS))
        t = sc.grid.times
        cols = {"t": t}
        if "u" in outs:
            cols.update(re_u=props.u.real, im_u=props.u.imag, abs_u=np.abs(props.u))
        if "y" in outs:
            cols.update(re_y=props.y.real, im_y=props.y.imag)
        if "v_diag" in outs:
            cols.update(v_diag=props.v.diag)
        if len(cols) > 1:
            write_csv(out / "propagators.csv", cols)
            files.append("propagators.csv")
    if "coefficients" in outs:
        co = coefficients(props, cavity_frequency=sc.env.cavity_frequency)
        write_csv(out / "coefficients.csv", co.as_columns())
        files.append("coefficients.csv")
        rep = classify_regime(co)
        summary.update(regime=_regime_name(rep), sign_changes=rep.sign_changes,
                       early_sign_changes=rep.early_sign_changes, asymptote=rep.asymptote)
    if "intensity" in outs:
        it = intensity(props, sc.init)
        write_csv(out / "intensity.csv", {"t": sc.grid.times, "n": it.total,
                                          "n_semiclassical": it.semiclassical,
                                          "fluctuation": it.fluctuation})
        files.append("intensity.csv")
    if outs & {"g1_grid", "g2_grid", "quantum_correlation"}:
        cg = correlation_grid(props, sc.init, sc.t_samples, sc.tau_samples)
        t, tau = cg.t.tolist(), cg.tau.tolist()
        for key, name, mat in (("g1_grid", "first_order", cg.first_order),
                               ("g1_grid", "g1", cg.g1),
                               ("g2_grid", "g2", cg.g2),
                               ("quantum_correlation", "quantum", cg.quantum)):
            if key in outs:
                _write_two_time(out, name, t, tau, mat)
                files += [f"{name}.json", f"{name}.csv"]
    if outs & {"self_energy", "response"}:
        se = sample_spectrum(sc.model, sc.env, sc.spectrum_span, sc.spectrum_points)
        cols = {"omega": se.omega}
        if "self_energy" in outs:
            cols.update(shift=se.shift, half_width=se.half_width)
        if "response" in outs:
            cols.update(re_response=se.response.real, im_response=se.response.imag)
        write_csv(out / "spectrum.csv", cols)
        files.append("spectrum.csv")
    if "localized_modes" in outs:
        summary.update(_write_modes(sc, out))
        files.append("modes.csv")

    write_manifest(out, sc, resolved, files)
    return summary


def _regime_name(rep):
    if not rep.conclusive:
        return "inconclusive"
    return "markovian" if rep.markovian else "non-markovian"


def _write_modes(sc, out):
    modes = find_localized_modes(sc.model, sc.env)
    write_csv(out / "modes.csv", {
        "frequency": [m.frequency for m in modes],
        "detuning": [m.frequency - sc.env.cavity_frequency for m in modes],
        "residue": [m.residue for m in modes],
        "slope": [m.slope for m in modes],
        "at_edge": [int(m.at_edge) for m in modes],
    })
    return {"modes": len(modes), "max_residue": max((abs(m.residue) for m in modes), default=0.0)}


def write_manifest(out, sc, resolved, files):
    write_json(Path(out) / "manifest.json", {
        "library": {"name": "hybridcavity", "version": __version__},
        "parameters": resolved,
        "solver": {"richardson_levels": 3, "spectral_points": sc.spectrum_points,
                   "spectrum_span": sc.spectrum_span, "frame": "rotating at cavity_frequency"},
        "files": sorted(files),
    })


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _load(path, args, require_outputs=True):
    raw = RawConfig.from_file(path)
    _apply_overrides(raw, args)
    return raw, load_scenario(raw, require_outputs)


def _apply_overrides(raw, args):
    if getattr(args, "dt", None):
        raw.set("grid", "dt", args.dt)
    if getattr(args, "horizon", None):
        raw.set("grid", "horizon", args.horizon)


def cmd_run(args):
    _, sc = _load(args.config, args)
    execute(sc, args.out)
    return EXIT_OK


def cmd_modes(args):
    _, sc = _load(args.config, args, require_outputs=False)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    info = _write_modes(sc, out)
    write_manifest(out, sc, sc.resolved, ["modes.csv"])
    print(f"{info['modes']} localized mode(s)")
    return EXIT_OK


def _sweep_point(raw, section, key, value, out):
    raw = copy.deepcopy(raw)
    raw.set(section, key, value)
    try:
        sc = load_scenario(raw)
        # every point reports its regime and localized modes
        sc.outputs = tuple(dict.fromkeys((*sc.outputs, "coefficients", "localized_modes")))
        sc.resolved["outputs"] = list(sc.outputs)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            summary = execute(sc, out)
        return {"status": "ok", **summary}
    except (ParameterError, *SOLVER_ERRORS) as exc:
        return {"status": "failed", "error": str(exc)}


def cmd_sweep(args):
    raw, sc = _load(args.config, args)
    if sc.sweep is None:
        raise ConfigError("sweep needs a [sweep] section", path=args.config)
    section, key, values = sc.sweep
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dirs = [out / f"point_{i:03d}" for i in range(len(values))]
    workers = max(1, int(os.environ.get(WORKERS_ENV, "1") or 1))
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, [raw] * len(values), [section] * len(values),
                                    [key] * len(values), values, dirs))
    else:
        results = [_sweep_point(raw, section, key, v, d) for v, d in zip(values, dirs)]
    rows = {"point": [], "value": [], "status": [], "regime": [], "sign_changes": [],
            "early_sign_changes": [], "asymptote": [], "modes": [], "max_residue": []}
    failed = []
    for i, (v, res) in enumerate(zip(values, results)):
        rows["point"].append(i)
        rows["value"].append(v)
        rows["status"].append(res["status"])
        for k in ("regime", "sign_changes", "early_sign_changes", "asymptote", "modes",
                  "max_residue"):
            rows[k].append(res.get(k, ""))
        if res["status"] != "ok":
            failed.append((i, v, res.get("error", "")))
    _write_table(out / "summary.csv", rows)
    for i, v, err in failed:
        print(f"point {i} ({v}) failed: {err}", file=sys.stderr)
    return EXIT_SWEEP if failed else EXIT_OK


def _write_table(path, rows):
    names = list(rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*(rows[k] for k in names)):
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def build_parser():
    p = argparse.ArgumentParser(prog="hybridcavity",
                                description="Non-Markovian cavity and spin-ensemble dynamics.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "solve one scenario"),
                           ("sweep", "solve a scenario over one parameter axis"),
                           ("modes", "list localized modes only")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("config", help="scenario file")
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--dt", help="time step override, with unit (e.g. '0.5 ns')")
        s.add_argument("--horizon", help="horizon override, with unit (e.g. '2 us')")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    handler = {"run": cmd_run, "sweep": cmd_sweep, "modes": cmd_modes}[args.command]
    try:
        return handler(args)
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
