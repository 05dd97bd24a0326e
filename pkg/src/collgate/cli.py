"""Command-line driver.

    collgate [--config FILE] [--preset NAME] [--out DIR] [--jobs N] COMMAND ...

Commands: simulate, fidelity, sweep, validate, trapfield.  Parameters are
merged as preset < config file < flags.  Output files are plain CSV/JSON,
byte-identical for identical inputs.  Errors are reported as one JSON
object on stderr with a nonzero exit code.
"""

from __future__ import annotations

import argparse
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

from . import __version__, fidelity, observables, trapfield
from .basis import initial_coeffs_diff, initial_coeffs_same, pair_bases, relative_basis
from .dynamics import (SolverSettings, fmt, free_trajectory, propagate_diff, propagate_same,
                       write_trajectory_csv)
from .errors import CollgateError, ContractError, DomainError
from .model import (KNOWN_KEYS, PRESETS, RB87_MASS, TWO_PI, GateSchedule, load_config,
                    params_from_mapping, temperature_kelvin)

log = logging.getLogger("collgate")

# keys describing the same quantity in dimensionless and SI form
_ALIASES = [("a_bb_over_ax", "a_bb_nm"), ("a_ab_over_ax", "a_ab_nm"), ("x0_over_ax", "x0_nm"),
            ("omega0_ratio", "omega0_hz"), ("omega_perp_ratio", "omega_perp_hz")]
_FLAG_KEYS = {"omega0": "omega0_ratio", "omega_perp": "omega_perp_ratio", "x0": "x0_over_ax",
              "a_bb": "a_bb_over_ax", "a_ab": "a_ab_over_ax", "n_periods": "n_periods"}
_AXIS_ALIASES = {"N": "n_periods", "tau": "n_periods"}
SWEEP_COLUMNS = ("axis", "value", "phi_coll", "O_abs", "O0_abs", "phi_a", "phi_b", "F_simple")
EXIT_USAGE, EXIT_RUNTIME = 2, 3


def merge_config(*layers: dict) -> dict:
    """Later layers win; setting one form of an aliased quantity drops the other."""
    out: dict = {}
    for layer in layers:
        for k, v in layer.items():
            for a, b in _ALIASES:
                if k == a:
                    out.pop(b, None)
                elif k == b:
                    out.pop(a, None)
            out[k] = v
    return out


def _parse_set(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ContractError(f"--set expects key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        if k not in KNOWN_KEYS:
            raise ContractError(f"unknown parameter {k!r}")
        out[k] = int(v) if k == "n_periods" else float(v)
    return out


def resolve_config(args) -> dict:
    layers = []
    if args.preset:
        if args.preset not in PRESETS:
            raise ContractError(f"unknown preset {args.preset!r}; have {sorted(PRESETS)}")
        layers.append(dict(PRESETS[args.preset]))
    if args.config:
        layers.append(load_config(args.config))
    flags = {key: getattr(args, attr) for attr, key in _FLAG_KEYS.items()
             if getattr(args, attr, None) is not None}
    flags.update(_parse_set(getattr(args, "set", None)))
    layers.append(flags)
    return merge_config(*layers)


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get("COLLGATE_OUT") or ".")
    d.mkdir(parents=True, exist_ok=True)
    if not os.access(d, os.W_OK):
        raise ContractError(f"output directory {d} is not writable")
    return d


def _write_json(path: Path, obj):
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else None
    return obj


def _solver(args) -> SolverSettings:
    return SolverSettings(rtol=args.rtol, atol=args.atol, samples_per_period=args.samples,
                          tail_tol=args.tail_tol)


def _run_mode(params, schedule, mode, args):
    solver = _solver(args)
    if mode in ("bb", "free"):
        p = params.with_(a_bb=0.0) if mode == "free" else params
        tr = propagate_same(initial_coeffs_same(p, relative_basis(p, args.n_max)), p, schedule, solver)
    elif mode == "ab":
        bR, br = pair_bases(params, args.n_R, args.n_r)
        tr = propagate_diff(initial_coeffs_diff(params, bR, br), params, schedule, solver)
    else:
        raise ContractError(f"unknown mode {mode!r}")
    return tr, free_trajectory(tr, solver)


def cmd_simulate(args) -> int:
    params, schedule = params_from_mapping(resolve_config(args))
    out = _out_dir(args)
    tr, fr = _run_mode(params, schedule, args.mode, args)
    write_trajectory_csv(out / f"trajectory_{args.mode}.csv", tr, fr)
    summ = observables.summary(tr, fr)
    O0 = np.abs(np.einsum("ij,ij->i", tr.snapshots.conj(), fr.snapshots))
    if O0.min() < observables.PHASE_MIN_OVERLAP:
        summ["flags"].append("phase ill-defined (|O0| < 0.5)")
    summ["params"] = _params_dict(params)
    _write_json(out / f"summary_{args.mode}.json", summ)
    print(json.dumps(_jsonable({k: summ[k] for k in ("phi_coll", "O_abs", "O0_abs", "flags")}),
                     sort_keys=True))
    return 0


def _params_dict(p):
    return {k: getattr(p, k) for k in ("omega0", "omega_perp", "x0", "a_bb", "a_ab", "omega",
                                       "mass_si", "omega_si")}


def _parse_floats(text: str):
    text = (text or "").strip()
    if not text:
        return []
    if ":" in text:
        a, b, n = text.split(":")
        return [float(v) for v in np.linspace(float(a), float(b), int(n))]
    return [float(v) for v in text.split(",")]


def cmd_fidelity(args) -> int:
    params, schedule = params_from_mapping(resolve_config(args))
    out = _out_dir(args)
    temps = _parse_floats(args.temps)
    if any(t < 0 for t in temps):
        raise DomainError("temperatures must be >= 0")
    init = initial_coeffs_same(params, relative_basis(params, args.n_max))
    tr = propagate_same(init, params, schedule, _solver(args))
    fr = free_trajectory(tr)
    per_n = fidelity.excited_phase_data(params, schedule, n_cut=args.n_cut, n_max=args.n_max,
                                        jobs=args.jobs) if temps else None
    rep = fidelity.fidelity_report(tr, fr, per_n, temps, args.n_cut)
    fidelity.write_thermal_csv(out / "fidelity.csv", rep.FT)
    d = rep.to_dict()
    if params.mass_si is not None:
        d["T_kelvin"] = [temperature_kelvin(t, params) for t in temps]
    _write_json(out / "fidelity.json", d)
    print(json.dumps(_jsonable({"F0": rep.F0, "FT": rep.FT}), sort_keys=True))
    return 0


def _sweep_point(job):
    cfg, axis, value, mode, ns = job
    params, schedule = params_from_mapping(cfg)
    tr, fr = _run_mode(params, schedule, mode, ns)
    s = observables.summary(tr, fr)
    F = fidelity.fidelity_simple(min(s["O0_abs"], 1.0), s["phi_coll"])
    return [axis, value, s["phi_coll"], s["O_abs"], s["O0_abs"], s["phi_a"], s["phi_b"], F]


def _axis_key(axis: str) -> str:
    axis = _AXIS_ALIASES.get(axis, axis)
    key = _FLAG_KEYS.get(axis.replace("-", "_"), axis)
    if key not in KNOWN_KEYS:
        raise ContractError(f"unknown sweep axis {axis!r}")
    return key


def cmd_sweep(args) -> int:
    base = resolve_config(args)
    key = _axis_key(args.axis)
    values = _parse_floats(args.values)
    out = _out_dir(args)
    ns = argparse.Namespace(**{k: getattr(args, k) for k in
                               ("rtol", "atol", "samples", "tail_tol", "n_max", "n_R", "n_r")})
    jobs = [(merge_config(base, {key: int(v) if key == "n_periods" else v}), args.axis, v, args.mode, ns)
            for v in values]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    path = out / f"sweep_{args.axis}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# collgate sweep csv v1 axis={args.axis} mode={args.mode}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([row[0]] + ["" if v is None else fmt(v) for v in row[1:]])
    print(json.dumps({"rows": len(rows), "file": str(path)}))
    return 0


def cmd_validate(args) -> int:
    from . import validate

    params = None
    if args.preset or args.config or args.set:
        params, _ = params_from_mapping(resolve_config(args))
    only = [int(k) for k in args.only.split(",")] if args.only else None
    results = []
    for k in sorted(only or validate.CHECKS):
        res = validate.run_check(k, params, jobs=args.jobs)
        print(res.line(), flush=True)
        results.append(res)
    out = _out_dir(args)
    _write_json(out / "validate.json", {"passed": all(r.passed for r in results),
                                        "results": [r.to_dict() for r in results]})
    return 0 if all(r.passed for r in results) else 1


def cmd_trapfield(args) -> int:
    cfg = dict(trapfield.EXAMPLE_MIRROR)
    for k in ("M0", "delta", "B_ext_y", "B_ext_z", "gF", "mF"):
        v = getattr(args, k)
        if v is not None:
            cfg[k] = v
    if args.period is not None:
        cfg["k_M"] = TWO_PI / args.period
    mp = trapfield.MirrorParams(**cfg)
    out = _out_dir(args)
    minima = trapfield.find_minima(mp, n_periods=2)
    if not minima:
        raise trapfield.NotATrapError("no field minimum above the surface for these biases")
    freqs = trapfield.local_frequencies(mp, minima[0], args.mass)
    xs = np.linspace(0, 2 * mp.period, args.nx)
    zs = np.linspace(0.05, 2.0, args.nz) * mp.period
    trapfield.write_field_map(out / "field_map.csv", mp, xs, zs)
    info = {"B0_T": mp.B0, "trap_height_m": trapfield.trap_height(mp), "minima_m": minima,
            "minimum_spacing_m": minima[1][0] - minima[0][0] if len(minima) > 1 else None,
            "omega_x_rad_s": freqs[0], "omega_z_rad_s": freqs[1],
            "f_x_hz": freqs[0] / TWO_PI, "f_z_hz": freqs[1] / TWO_PI, "mirror": cfg}
    _write_json(out / "trapfield.json", info)
    print(json.dumps(_jsonable({k: info[k] for k in ("trap_height_m", "f_x_hz", "f_z_hz")}),
                     sort_keys=True))
    return 0


def _add_param_flags(p):
    g = p.add_argument_group("trap parameters (dimensionless; override preset/config)")
    g.add_argument("--omega0", type=float, help="split-well frequency / omega")
    g.add_argument("--omega-perp", dest="omega_perp", type=float, help="transverse frequency / omega")
    g.add_argument("--x0", type=float, help="half separation / a_x")
    g.add_argument("--a-bb", dest="a_bb", type=float, help="b-b scattering length / a_x")
    g.add_argument("--a-ab", dest="a_ab", type=float, help="a-b scattering length / a_x")
    g.add_argument("--n-periods", dest="n_periods", type=int, help="gate time in T_osc")
    g.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="any config key, e.g. a_bb_nm=5.1 (repeatable)")


def _add_solver_flags(p, n_max=60):
    g = p.add_argument_group("solver")
    g.add_argument("--n-max", dest="n_max", type=int, default=n_max, help="bb basis size")
    g.add_argument("--n-R", dest="n_R", type=int, default=60, help="ab CM basis size")
    g.add_argument("--n-r", dest="n_r", type=int, default=100, help="ab relative basis size")
    g.add_argument("--rtol", type=float, default=1e-10)
    g.add_argument("--atol", type=float, default=1e-12)
    g.add_argument("--samples", type=int, default=512, help="samples per T_osc")
    g.add_argument("--tail-tol", dest="tail_tol", type=float, default=None,
                   help="allowed |c_Nmax|^2 (default 1e-4 bb, 1e-6 ab)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="collgate", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    def add_globals(p, default):
        p.add_argument("--config", default=default(None), help="key = value parameter file")
        p.add_argument("--preset", default=default(None),
                       help=f"named parameter set ({', '.join(PRESETS)})")
        p.add_argument("--out", default=default(None), help="output directory (default $COLLGATE_OUT or .)")
        p.add_argument("--jobs", type=int, default=default(1), help="parallel worker processes")
        p.add_argument("-v", "--verbose", action="store_true", default=default(False))

    # global flags are accepted before and after the subcommand; the
    # subcommand copies must not overwrite values given before it
    add_globals(ap, lambda v: v)
    common = argparse.ArgumentParser(add_help=False)
    add_globals(common, lambda v: argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], argument_default=argparse.SUPPRESS,
                       help="propagate one gate and write trajectory CSV + summary JSON")
    s.add_argument("--mode", choices=("bb", "ab", "free"), default="bb")
    _add_param_flags(s)
    _add_solver_flags(s)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fidelity", parents=[common], argument_default=argparse.SUPPRESS,
                       help="zero- and finite-temperature gate fidelity")
    f.add_argument("--temps", default="0,0.5,1,1.5,2",
                   help="k_B T / hbar omega0: comma list or start:stop:num")
    f.add_argument("--n-cut", dest="n_cut", type=int, default=fidelity.N_CUT_DEFAULT)
    _add_param_flags(f)
    _add_solver_flags(f, n_max=fidelity.THERMAL_N_MAX)
    f.set_defaults(func=cmd_fidelity)

    w = sub.add_parser("sweep", parents=[common], argument_default=argparse.SUPPRESS,
                       help="scan one parameter; long-format CSV")
    w.add_argument("--axis", required=True, help="parameter (a_bb, x0, omega0, n_periods or a config key)")
    w.add_argument("--values", default="", help="comma list or start:stop:num (empty: header only)")
    w.add_argument("--mode", choices=("bb", "ab", "free"), default="bb")
    _add_param_flags(w)
    _add_solver_flags(w)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", parents=[common], argument_default=argparse.SUPPRESS,
                       help="run the acceptance suite")
    v.add_argument("--only", help="comma list of criterion numbers")
    v.add_argument("--set", action="append", metavar="KEY=VALUE")
    v.set_defaults(func=cmd_validate)

    t = sub.add_parser("trapfield", parents=[common], argument_default=argparse.SUPPRESS,
                       help="magnetic-mirror trap: minima, frequencies, field map")
    t.add_argument("--M0", type=float, help="magnetization amplitude (A/m)")
    t.add_argument("--period", type=float, help="magnetization period (m)")
    t.add_argument("--delta", type=float, help="tape thickness (m)")
    t.add_argument("--bias-y", dest="B_ext_y", type=float, help="bias B_y (T)")
    t.add_argument("--bias-z", dest="B_ext_z", type=float, help="bias B_z (T)")
    t.add_argument("--gF", type=float)
    t.add_argument("--mF", type=int)
    t.add_argument("--mass", type=float, default=RB87_MASS, help="atom mass (kg)")
    t.add_argument("--nx", type=int, default=65)
    t.add_argument("--nz", type=int, default=40)
    t.set_defaults(func=cmd_trapfield)
    return ap


_DEFAULTS = {"config": None, "preset": None, "out": None, "jobs": 1, "verbose": False, "set": None,
             "only": None, "M0": None, "period": None, "delta": None, "B_ext_y": None, "B_ext_z": None,
             "gF": None, "mF": None}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    for k, v in _DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        ap.error("--jobs must be >= 1")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except CollgateError as e:
        err = {"error": e.kind, "type": type(e).__name__, "message": str(e)}
        if getattr(e, "diagnostics", None):
            err["diagnostics"] = e.diagnostics
        if getattr(e, "locations", None):
            err["locations"] = e.locations
        print(json.dumps(_jsonable(err), sort_keys=True), file=sys.stderr)
        return EXIT_USAGE if isinstance(e, (ContractError, DomainError)) else EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
