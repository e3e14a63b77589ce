"""Command-line interface: every solver as a subcommand, CSV/JSON out.

Subcommands produce plot-ready tables that reproduce the band-structure
figures: `dispersion` (omega(k) branches), `gaps` (band-gap table),
`sweep` (gap edges versus a swept parameter), `tune` (stiffness/velocity
tuning rules), `modes` (compound-wave spatial profiles), and `transmit`
(time-domain transmission spectrum).

Output is deterministic: identical invocations give byte-identical files.
CSV carries `#`-prefixed metadata lines (full parameter echo, versions,
tolerances); JSON carries the same metadata plus a schema version, and a
JSON file can be fed back through --config to reproduce a run.

Exit codes: 0 success, 2 usage or parameter validation, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .model import (
    BeltParams,
    NumericalError,
    ParameterError,
    belt_params_from_mapping,
    read_config,
    validate,
)
from . import bandgap, dispersion, modes, timedomain

#: Floats are written with 12 significant digits: below solver tolerances,
#: above anything a plot can resolve.
FLOAT_FORMAT = "%.12g"
JSON_SCHEMA_VERSION = 1


@dataclass
class OutputTable:
    """Column-oriented numeric table plus self-describing metadata."""

    command: str
    columns: list[str]
    rows: list[tuple]
    metadata: dict[str, str]


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return FLOAT_FORMAT % value


def write_csv(table: OutputTable, stream) -> None:
    stream.write(f"# beltgap {__version__} :: {table.command}\n")
    for key, val in table.metadata.items():
        stream.write(f"# {key} = {val}\n")
    stream.write(",".join(table.columns) + "\n")
    for row in table.rows:
        stream.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(table: OutputTable, stream) -> None:
    doc = {
        "schema_version": JSON_SCHEMA_VERSION,
        "generator": f"beltgap {__version__}",
        "command": table.command,
        "metadata": table.metadata,
        "columns": table.columns,
        "rows": [[_fmt(v) for v in row] for row in table.rows],
    }
    json.dump(doc, stream, indent=1)
    stream.write("\n")


def emit(table: OutputTable, args) -> None:
    writer = write_json if args.format == "json" else write_csv
    if args.out:
        with open(args.out, "w") as fh:
            writer(table, fh)
    else:
        writer(table, sys.stdout)


def _belt_params(args) -> BeltParams:
    """BeltParams from --config (if any) overridden by explicit flags."""
    mapping = dict(read_config(args.config)) if args.config else {}
    for key in ("v", "s", "sigma", "M"):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    bp = belt_params_from_mapping(mapping)
    report = validate(bp)
    if not report.ok:
        raise ParameterError("; ".join(report.hard_violations))
    for note in report.warnings:
        print(f"warning: {note}", file=sys.stderr)
    return bp


def _meta_common(bp: BeltParams) -> dict[str, str]:
    return {
        "v": _fmt(bp.v),
        "s": _fmt(bp.s),
        "sigma": _fmt(bp.sigma),
        "M": str(bp.M),
        "solver_version": __version__,
        "decay_tol": _fmt(dispersion.PROPAGATING_DECAY_TOL),
        "residual_rtol": _fmt(dispersion.RESIDUAL_RTOL),
    }


def _add_belt_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--v", type=float, default=None, help="axial speed (0 <= v < 1)")
    p.add_argument("--s", type=float, default=None, help="mean foundation stiffness")
    p.add_argument("--sigma", type=float, default=None, help="stiffness modulation depth")
    p.add_argument("--M", type=int, default=None, help="harmonic truncation order")
    p.add_argument("--config", default=None, metavar="PATH",
                   help="key = value file or JSON output of a previous run")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, metavar="PATH",
                   help="output file (default: stdout)")


def cmd_dispersion(args) -> OutputTable:
    bp = _belt_params(args)
    if not -0.5 <= args.k_min <= 0.5 or not -0.5 <= args.k_max <= 0.5:
        raise ParameterError(
            f"k range [{args.k_min}, {args.k_max}] must lie inside the first "
            "Brillouin zone [-0.5, 0.5]")
    if args.k_min >= args.k_max:
        raise ParameterError("--k-min must be below --k-max")
    if args.k_steps < 2:
        raise ParameterError("--k-steps must be at least 2")
    grid = np.linspace(args.k_min, args.k_max, args.k_steps)
    branches = dispersion.sweep_branches(bp, grid, args.omega_max)
    rows = []
    for br in branches:
        for k, w in zip(br.k, br.omega):
            try:
                cg = dispersion.group_velocity_implicit(bp, float(w), float(k))
            except NumericalError:
                cg = math.nan
            rows.append((float(k), br.label, float(w), cg))
    rows.sort(key=lambda r: (r[1], r[0]))
    meta = _meta_common(bp)
    meta.update(k_min=_fmt(args.k_min), k_max=_fmt(args.k_max),
                k_steps=str(args.k_steps), omega_max=_fmt(args.omega_max))
    return OutputTable("dispersion", ["k", "branch_id", "omega", "c_g"], rows, meta)


def _gap_rows(gaps) -> list[tuple]:
    return [(g.index, g.omega_lo, g.omega_hi, g.width, g.min_decay_in_gap,
             g.edge_method) for g in gaps]


def cmd_gaps(args) -> OutputTable:
    bp = _belt_params(args)
    gaps = bandgap.detect_gaps(bp, args.omega_max, args.grid,
                               fine_scan=args.fine_scan == "on")
    meta = _meta_common(bp)
    meta.update(omega_max=_fmt(args.omega_max), grid=str(args.grid),
                fine_scan=args.fine_scan,
                edge_tol=_fmt(bandgap.GAP_EDGE_TOL))
    return OutputTable(
        "gaps",
        ["index", "omega_lo", "omega_hi", "width", "min_decay", "edge_method"],
        _gap_rows(gaps), meta)


def cmd_sweep(args) -> OutputTable:
    bp = _belt_params(args)
    values = np.linspace(getattr(args, "from"), args.to, args.steps)
    entries = bandgap.sweep_parameter(bp, args.param, values, args.omega_max,
                                      grid_points=args.grid,
                                      fine_scan=args.fine_scan == "on")
    rows = []
    errors = []
    for entry in entries:
        if entry.error is not None:
            errors.append(f"{entry.value:g}: {entry.error}")
            continue
        for g in entry.gaps:
            rows.append((entry.value, g.index, g.omega_lo, g.omega_hi))
    meta = _meta_common(bp)
    meta.update(param=args.param, sweep_from=_fmt(getattr(args, "from")),
                sweep_to=_fmt(args.to), steps=str(args.steps),
                omega_max=_fmt(args.omega_max), grid=str(args.grid),
                fine_scan=args.fine_scan)
    if errors:
        meta["errors"] = " | ".join(errors)
    return OutputTable("sweep", ["param_value", "gap_index", "omega_lo", "omega_hi"],
                       rows, meta)


def cmd_tune(args) -> OutputTable:
    if args.mode == "stiffness":
        result = bandgap.tune_stiffness(args.v1, args.v2, args.s1)
        columns = ["delta_s", "s2", "cutoff_before", "cutoff_after"]
        rows = [(result.delta, result.new_value, *result.preserved_cutoff)]
        meta = {"v1": _fmt(args.v1), "v2": _fmt(args.v2), "s1": _fmt(args.s1)}
    else:
        result = bandgap.tune_velocity(args.s1, args.s2, args.v1)
        columns = ["delta_v", "v2", "v2_magnitude", "cutoff_before", "cutoff_after"]
        rows = [(result.delta, result.new_value, result.new_value_magnitude,
                 *result.preserved_cutoff)]
        meta = {"s1": _fmt(args.s1), "s2": _fmt(args.s2), "v1": _fmt(args.v1)}
    meta["solver_version"] = __version__
    return OutputTable(f"tune {args.mode}", columns, rows, meta)


def cmd_modes(args) -> OutputTable:
    bp = _belt_params(args)
    rows = []
    meta = _meta_common(bp)
    meta.update(periods=str(args.periods),
                samples_per_period=str(args.samples_per_period))
    for i, omega in enumerate(args.omega):
        wav = dispersion.principal_wavenumber(bp, omega)
        mode = modes.eigenvector_at(bp, omega, wav.k)[0]
        profile = modes.reconstruct(mode, args.periods, args.samples_per_period)
        score = modes.participation_ratio(mode)
        meta[f"mode{i}"] = (
            f"omega={_fmt(omega)} k_re={_fmt(wav.k.real)} k_im={_fmt(wav.k.imag)} "
            f"decay={_fmt(wav.decay_rate)} participation={_fmt(score)} "
            f"residual={_fmt(mode.residual)}")
        for x, u in zip(profile.x, profile.u):
            rows.append((omega, float(x), float(u.real), float(u.imag), abs(u)))
    return OutputTable("modes", ["omega", "x", "re_u", "im_u", "abs_u"], rows, meta)


def cmd_transmit(args) -> OutputTable:
    bp = _belt_params(args)
    cfg = timedomain.SimConfig(
        bp=bp, drive_omega=args.omega_from, n_periods=args.n_periods,
        dx=args.dx, cfl_safety=args.cfl)
    omegas = np.linspace(args.omega_from, args.omega_to, args.omega_steps)
    records = timedomain.transmission_spectrum(cfg, omegas)
    rows = [(r.drive_omega, r.transmission_db) for r in records]
    meta = _meta_common(bp)
    meta.update(n_periods=str(args.n_periods), dx=_fmt(args.dx),
                cfl=_fmt(args.cfl), omega_from=_fmt(args.omega_from),
                omega_to=_fmt(args.omega_to), omega_steps=str(args.omega_steps))
    return OutputTable("transmit", ["omega", "transmission_db"], rows, meta)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beltgap",
        description="Band structure of an axially moving string on a "
                    "harmonically modulated elastic foundation.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("dispersion", help="omega(k) branches over the Brillouin zone")
    _add_belt_flags(p)
    p.add_argument("--k-min", dest="k_min", type=float, default=-0.5)
    p.add_argument("--k-max", dest="k_max", type=float, default=0.5)
    p.add_argument("--k-steps", dest="k_steps", type=int, default=201)
    p.add_argument("--omega-max", dest="omega_max", type=float, default=1.5)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("gaps", help="band-gap table with refined edges")
    _add_belt_flags(p)
    p.add_argument("--omega-max", dest="omega_max", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=bandgap.DEFAULT_GRID_POINTS)
    p.add_argument("--fine-scan", dest="fine_scan", choices=("on", "off"), default="on")
    p.set_defaults(func=cmd_gaps)

    p = sub.add_parser("sweep", help="gap edges versus one swept parameter")
    _add_belt_flags(p)
    p.add_argument("--param", choices=("s", "sigma", "v"), required=True)
    p.add_argument("--from", dest="from", type=float, required=True)
    p.add_argument("--to", type=float, required=True)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--omega-max", dest="omega_max", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=bandgap.DEFAULT_GRID_POINTS)
    p.add_argument("--fine-scan", dest="fine_scan", choices=("on", "off"), default="off")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tune", help="closed-form stiffness/velocity tuning")
    tsub = p.add_subparsers(dest="mode", required=True)
    ps = tsub.add_parser("stiffness", help="stiffness change preserving the cut-off")
    ps.add_argument("--v1", type=float, required=True)
    ps.add_argument("--v2", type=float, required=True)
    ps.add_argument("--s1", type=float, required=True)
    ps.add_argument("--format", choices=("csv", "json"), default="csv")
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=cmd_tune)
    pv = tsub.add_parser("velocity", help="velocity change preserving the cut-off")
    pv.add_argument("--s1", type=float, required=True)
    pv.add_argument("--s2", type=float, required=True)
    pv.add_argument("--v1", type=float, required=True)
    pv.add_argument("--format", choices=("csv", "json"), default="csv")
    pv.add_argument("--out", default=None)
    pv.set_defaults(func=cmd_tune)

    p = sub.add_parser("modes", help="compound-wave spatial profiles")
    _add_belt_flags(p)
    p.add_argument("--omega", type=float, action="append", required=True,
                   help="frequency to reconstruct (repeatable)")
    p.add_argument("--periods", type=int, default=6)
    p.add_argument("--samples-per-period", dest="samples_per_period",
                   type=int, default=64)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("transmit", help="finite-array transmission spectrum")
    _add_belt_flags(p)
    p.add_argument("--n-periods", dest="n_periods", type=int, default=20)
    p.add_argument("--omega-from", dest="omega_from", type=float, required=True)
    p.add_argument("--omega-to", dest="omega_to", type=float, required=True)
    p.add_argument("--omega-steps", dest="omega_steps", type=int, default=16)
    p.add_argument("--dx", type=float, default=timedomain.MAX_DX)
    p.add_argument("--cfl", type=float, default=timedomain.CFL_SAFETY)
    p.set_defaults(func=cmd_transmit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        table = args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    emit(table, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
