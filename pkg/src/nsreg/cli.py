"""Command-line entry point: ``nsreg <subcommand> [options]``.

Configuration precedence is flags > ``--config`` JSON file > built-in
defaults. The config file is a flat JSON object whose keys are the option
names of the chosen subcommand (with dashes or underscores).

Exit status: 0 on success, 2 on invalid input, 1 on runtime failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, NsregError, ValidationError
from .reports import dumps_csv, dumps_json, header, read_report, write_text


def _floats(value, name, n=None):
    if value is None:
        return None
    if isinstance(value, str):
        try:
            out = [real(x) for x in value.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"{name}: expected comma-separated reals, got {value!r}") from None
    elif isinstance(value, (int, float)):
        out = [float(value)]
    else:
        out = [real(x) for x in value]
    if n is not None and len(out) != n:
        raise ConfigError(f"{name}: expected {n} values, got {len(out)}")
    return out


def real(x):
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(x)


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            flag = "--" + name.replace("_", "-")
            raise ConfigError(f"{flag} is required ({_DOMAINS.get(name, 'see --help')})")


_DOMAINS = {
    "p": "real > 0", "r": "real > 1", "delta": "real in (0, 1/2)", "q": "real in (2, 3)",
    "spec": "path to a field spec JSON", "out": "output path", "field": "path to an NSFD file",
    "center": "x,y,z,t", "radii": "comma-separated decreasing positive reals",
    "window": "t1,t2 inside the field's time range", "sigma": "path to a scan report",
    "input": "NSFD field or JSON simple function", "eps_q": "real > 0",
}


def _figure_path(args, suffix=".png"):
    if getattr(args, "no_figure", False) or args.out in (None, "-"):
        return None
    return str(Path(args.out).with_suffix(suffix))


def _emit_json(args, body, seed=None):
    write_text(args.out, dumps_json(header(args.command, vars(args), seed), body))


def _workers(args):
    return max(1, int(args.workers or 1))


# subcommand handlers ------------------------------------------------------------

def cmd_gen(args):
    from .grid import FieldSpec, generate_field, store_field
    _require(args, "spec", "out")
    if args.out == "-":
        raise ConfigError("--out must be a file path for gen")
    spec = FieldSpec.from_dict(json.loads(Path(args.spec).read_text()))
    res = generate_field(spec, with_pressure=bool(args.pressure_out))
    v, pi = res if args.pressure_out else (res, None)
    store_field(v, args.out)
    if pi is not None:
        store_field(pi, args.pressure_out)
    body = {"spec": spec.to_dict(), "field": args.out, "pressure": args.pressure_out,
            "max_abs_v_final": float(v.abs_slice(v.grid.nt - 1).max()),
            "pressure_label": "non-NS |v|^2 companion" if pi is not None else None}
    write_text(str(Path(args.out).with_suffix(".json")),
               dumps_json(header(args.command, vars(args)), body))
    fig = _figure_path(args)
    if fig:
        from .plotting import field_figure
        field_figure(v, fig)


def _tuple_from(p, r, delta, gamma=None):
    from .exponents import check_admissible, select_theta
    if gamma is None:
        gamma = 2.0 / r + 3.0 / p - 2.0
    t = check_admissible(p, r, delta, gamma)
    return select_theta(t) if t.admissible else t


def cmd_theta(args):
    _require(args, "p", "r", "delta")
    t = _tuple_from(float(args.p), float(args.r), float(args.delta),
                    None if args.gamma is None else float(args.gamma))
    _emit_json(args, t)


def cmd_region(args):
    from .exponents import REGION_COLUMNS, region_map
    inv_p = (1.0 / float(args.pmax), 1.0 / float(args.pmin))
    inv_r = (1.0 / float(args.rmax), 1.0 / float(args.rmin))
    if not (0 < args.pmin < args.pmax and 0 < args.rmin < args.rmax):
        raise ConfigError("need 0 < pmin < pmax and 0 < rmin < rmax (max may be inf)")
    rows = region_map(inv_p, inv_r, n=int(args.n), n_delta=int(args.delta_samples))
    head = header(args.command, vars(args))
    table = [[getattr(row, c) for c in REGION_COLUMNS] for row in rows]
    write_text(args.out, dumps_csv(head, REGION_COLUMNS, table))
    fig = _figure_path(args)
    if fig:
        from .plotting import region_figure
        region_figure(rows, fig)


def _load_lorentz_input(path, time_index):
    from .grid import load_field
    from .lorentz import SampledFunction, SimpleFunction
    if str(path).endswith(".json"):
        data = json.loads(Path(path).read_text())
        pieces = data.get("pieces") if isinstance(data, dict) else data
        if pieces is None:
            raise ConfigError("simple function JSON needs a 'pieces' list")
        return SimpleFunction(tuple(tuple(pc) for pc in pieces))
    f = load_field(path)
    j = f.grid.nt - 1 if time_index is None else int(time_index)
    if not 0 <= j < f.grid.nt:
        raise ConfigError(f"--time-index {j} outside [0, {f.grid.nt - 1}]")
    return SampledFunction(f.abs_slice(j), f.grid.cell_volume)


def cmd_lorentz(args):
    from .lorentz import interpolate_bound, lorentz_quasinorm
    _require(args, "input", "p", "q")
    f = _load_lorentz_input(args.input, args.time_index)
    res = lorentz_quasinorm(f, real(args.p), real(args.q))
    body = {"norm": res}
    if args.interp is not None:
        p, r, q = _floats(args.interp, "--interp", 3)
        body["interpolation"] = interpolate_bound(f, p, r, q)
    _emit_json(args, body)
    fig = _figure_path(args)
    if fig:
        from .plotting import lorentz_figure
        lorentz_figure(f, fig)


def _load_pair(args):
    from .grid import ScalarField, VectorField, load_field
    v = load_field(args.field, "velocity")
    if not isinstance(v, VectorField):
        raise ConfigError("--field must hold a 3-component field")
    pi = None
    if getattr(args, "pressure", None):
        pi = load_field(args.pressure, "pressure")
        if not isinstance(pi, ScalarField):
            raise ConfigError("--pressure must hold a 1-component field")
    return v, pi


def cmd_diagnose(args):
    from .localq import ParabolicCylinder, check_radii, evaluate_cylinder
    _require(args, "field", "center", "radii", "q")
    v, pi = _load_pair(args)
    center = _floats(args.center, "--center", 4)
    radii = check_radii(_floats(args.radii, "--radii"))
    q = float(args.q)
    rows = [evaluate_cylinder(v, pi, ParabolicCylinder(center, r), q, args.clip).as_dict()
            for r in radii]
    _emit_json(args, {"center": center, "q": q, "rows": rows})
    fig = _figure_path(args)
    if fig:
        from .plotting import diagnose_figure
        diagnose_figure(rows, fig)


def _parse_ladder(text):
    """'geometric:r_max,factor,count' or an explicit decreasing list."""
    if text is None:
        return None
    if isinstance(text, str) and text.startswith("geometric:"):
        r_max, factor, count = _floats(text.split(":", 1)[1], "--radii", 3)
        return {"r_max": r_max, "factor": factor, "count": int(count)}
    radii = _floats(text, "--radii")
    return {"explicit": radii}


def cmd_scan(args):
    from .regularity import RegularityConfig, a_scan, epsilon_scan
    _require(args, "field")
    v, _ = _load_pair(args)
    ladder = _parse_ladder(args.radii) or {}
    kw = {}
    if args.eps is not None:
        kw["epsilon_q" if args.mode == "bq" else "epsilon_star"] = float(args.eps)
    if "explicit" in ladder:
        radii = ladder["explicit"]
        if any(b >= a for a, b in zip(radii, radii[1:])):
            raise ConfigError("--radii must be strictly decreasing")
        kw.update(r_max=radii[0], count=len(radii),
                  factor=radii[1] / radii[0] if len(radii) > 1 else 0.5)
    else:
        kw.update(ladder)
    cfg = RegularityConfig(q=float(args.q), a_rstar=args.a_rstar, clip=args.clip, **kw)
    if args.points in (None, "grid"):
        points = "grid"
    else:
        points = json.loads(Path(args.points).read_text())
    scan = epsilon_scan if args.mode == "bq" else a_scan
    cs = scan(v, points, cfg, workers=_workers(args))
    _emit_json(args, cs)
    fig = _figure_path(args)
    if fig:
        from .plotting import scan_figure
        scan_figure(cs, fig)


def cmd_cover(args):
    from .hausdorff import covering_sweep, epsilon_hat_sweep
    from .regularity import CandidateSet
    _require(args, "sigma", "field", "delta", "eps_q")
    v, _ = _load_pair(args)
    sigma = CandidateSet.from_dict(read_report(args.sigma))
    if args.eps_hat is not None:
        eps_hats = _floats(args.eps_hat, "--eps-hat")
    else:
        top = float(args.sweep_from) if args.sweep_from is not None else float(sigma.radii[0])
        eps_hats = epsilon_hat_sweep(top, int(args.sweep_count))
    sweep = covering_sweep(v, sigma, float(args.delta), float(args.eps_q), eps_hats, args.clip)
    body = {"delta": float(args.delta), "eps_q": float(args.eps_q),
            "n_points": len(sigma.points),
            "sweep": [{"eps_hat": s.epsilon_hat, "comb_sum": s.premeasure_estimate,
                       "witness_bound": s.witness_bound, "integral_bound": s.integral_bound,
                       "selected": list(s.selected), "witness_radii": list(s.witness_radii),
                       "ok": s.ok} for s in sweep]}
    _emit_json(args, body)
    fig = _figure_path(args)
    if fig:
        from .plotting import cover_figure
        cover_figure(sweep, fig)


def cmd_energy(args):
    from .energy import energy_functional, energy_slices, pressure_term_bound
    from .localq import slice_window
    _require(args, "field", "delta", "window")
    v, pi = _load_pair(args)
    t1, t2 = _floats(args.window, "--window", 2)
    delta = float(args.delta)
    body = {"ledger": energy_functional(v, delta, t1, t2)}
    if args.tuple is not None:
        if pi is None:
            raise ConfigError("--tuple needs --pressure")
        d = read_report(args.tuple)
        t = _tuple_from(float(d["p"]), float(d["r"]), float(d.get("delta", delta)),
                        None if d.get("gamma") is None else float(d["gamma"]))
        if not t.admissible:
            raise ConfigError(f"tuple in {args.tuple} is not admissible: {t.label}")
        body["tuple"] = t
        body["pressure_term"] = pressure_term_bound(v, pi, t, t1, t2)
    _emit_json(args, body)
    fig = _figure_path(args)
    if fig:
        from .plotting import energy_figure
        js = slice_window(v.grid, t1, t2)
        energy_figure(v.grid.times()[js], energy_slices(v, delta, js), fig)


def cmd_harness(args):
    from .grid import SpaceTimeGrid
    from .regularity import lemma_ratio_harness, random_ensemble
    pairs = []
    for item in (args.pairs.split(",") if isinstance(args.pairs, str) else args.pairs):
        if isinstance(item, str):
            a, _, b = item.partition(":")
            pairs.append((float(a), float(b)))
        else:
            pairs.append((float(item[0]), float(item[1])))
    rho_max = max(b for _, b in pairs)
    t_extent = float(args.t_extent) if args.t_extent is not None else rho_max ** 2
    grid = SpaceTimeGrid.box(-0.5, 0.5, int(args.grid_n), (0.0, t_extent), int(args.nt))
    specs = random_ensemble(int(args.n), int(args.seed), grid, n_modes=int(args.modes),
                            k_max=float(args.k_max))
    rep = lemma_ratio_harness(specs, float(args.q), pairs, workers=_workers(args))
    _emit_json(args, rep, seed=int(args.seed))
    fig = _figure_path(args)
    if fig:
        from .plotting import harness_figure
        harness_figure(rep, fig)


# parser -----------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults (flags override it)")
    common.add_argument("--out", default="-", help="report path ('-' for stdout)")
    common.add_argument("--workers", type=int,
                        default=int(os.environ.get("NSREG_WORKERS", "1") or 1),
                        help="worker threads (default: $NSREG_WORKERS or 1)")
    common.add_argument("--no-figure", action="store_true", help="skip the PNG next to --out")

    parser = argparse.ArgumentParser(
        prog="nsreg", description=__doc__.split("\n\n")[0],
        epilog="Precedence: flags > --config file > defaults.")
    parser.add_argument("--version", action="version", version=f"nsreg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    def add(name, handler, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(handler=handler)
        return p

    p = add("gen", cmd_gen, "sample a synthetic field spec into an NSFD file")
    p.add_argument("--spec", help="field spec JSON")
    p.add_argument("--pressure-out", help="also write the |v|^2 pressure companion here")

    p = add("theta", cmd_theta, "check an exponent tuple and select theta")
    p.add_argument("--p", type=real, help="space exponent p > 0")
    p.add_argument("--r", type=real, help="time exponent r > 1")
    p.add_argument("--delta", type=real, help="delta in (0, 1/2)")
    p.add_argument("--gamma", type=real, help="gamma (default: 2/r + 3/p - 2)")

    p = add("region", cmd_region, "admissibility map over (1/p, 1/r) as CSV")
    p.add_argument("--pmin", type=real, default=1.0, help="smallest p (> 0)")
    p.add_argument("--pmax", type=real, default=math.inf, help="largest p (may be inf)")
    p.add_argument("--rmin", type=real, default=1.0, help="smallest r (> 0)")
    p.add_argument("--rmax", type=real, default=math.inf, help="largest r (may be inf)")
    p.add_argument("--n", type=int, default=50, help="cells per axis")
    p.add_argument("--delta-samples", type=int, default=9, help="delta values tried per cell")

    p = add("lorentz", cmd_lorentz, "Lorentz quasinorm of a simple function or field slice")
    p.add_argument("--input", help="NSFD field or JSON {'pieces': [[level, measure], ...]}")
    p.add_argument("--p", type=real, help="p in [1, inf)")
    p.add_argument("--q", type=real, help="q in [1, inf]")
    p.add_argument("--interp", help="p,r,q for the weak-norm interpolation check")
    p.add_argument("--time-index", type=int, help="time slice of a field input (default: last)")

    clip = dict(choices=("ramp", "center"), default="ramp", help="ball weighting")

    p = add("diagnose", cmd_diagnose, "local quantities over parabolic cylinders")
    p.add_argument("--field")
    p.add_argument("--pressure")
    p.add_argument("--center", help="x,y,z,t")
    p.add_argument("--radii", help="r1,r2,... strictly decreasing")
    p.add_argument("--q", type=real, help="q in (2, 3)")
    p.add_argument("--clip", **clip)

    p = add("scan", cmd_scan, "regularity scan over base points at the final time")
    p.add_argument("--field")
    p.add_argument("--mode", choices=("bq", "a"), default="bq")
    p.add_argument("--points", default="grid", help="'grid' or a JSON list of [x, y, z]")
    p.add_argument("--eps", type=real, help="threshold (epsilon_q for bq, epsilon_star for a)")
    p.add_argument("--radii", help="geometric:r_max,factor,count or r1,r2,...")
    p.add_argument("--q", type=real, default=2.6, help="q in (2, 3)")
    p.add_argument("--a-rstar", type=float, help="largest radius used by the A scan")
    p.add_argument("--clip", **clip)

    p = add("cover", cmd_cover, "covering bound sweep for a scan's flagged points")
    p.add_argument("--sigma", help="scan report JSON")
    p.add_argument("--field")
    p.add_argument("--delta", type=real, help="delta in (0, 1/2); q = 3 - 2 delta")
    p.add_argument("--eps-q", type=real, help="epsilon_q > 0")
    p.add_argument("--eps-hat", help="explicit eps_hat values")
    p.add_argument("--sweep-from", type=real, help="first eps_hat of the halving sweep (default: ladder top)")
    p.add_argument("--sweep-count", type=int, default=5)
    p.add_argument("--clip", **clip)

    p = add("energy", cmd_energy, "delta-energy ledger and pressure-term majorant")
    p.add_argument("--field")
    p.add_argument("--pressure")
    p.add_argument("--delta", type=real, help="delta in (0, 1/2)")
    p.add_argument("--window", help="t1,t2")
    p.add_argument("--tuple", help="JSON with p, r (and optionally delta, gamma)")

    p = add("harness", cmd_harness, "fit local-inequality constants over random fields")
    p.add_argument("--n", type=int, default=100, help="ensemble size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-n", type=int, default=16, help="cells per axis")
    p.add_argument("--nt", type=int, default=5, help="time samples")
    p.add_argument("--t-extent", type=real, help="time extent (default: largest rho squared)")
    p.add_argument("--q", type=real, default=2.6)
    p.add_argument("--pairs", default="0.1:0.2,0.15:0.3", help="r:rho pairs, r <= rho")
    p.add_argument("--modes", type=int, default=6)
    p.add_argument("--k-max", type=float, default=3.0)
    return parser, sub


def _apply_config(parser, sub, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("command", nargs="?")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"--config {known.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("--config must hold a JSON object")
    cmd = next((a for a in argv if a in sub.choices), None)
    if cmd is None:
        return
    subparser = sub.choices[cmd]
    dests = {a.dest for a in subparser._actions}
    clean = {}
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest not in dests or dest in ("config", "help", "handler"):
            raise ConfigError(f"--config key {key!r} is not an option of '{cmd}'")
        clean[dest] = val
    subparser.set_defaults(**clean)


INPUT_KEYS = ("spec", "input", "field", "pressure", "sigma", "tuple")


def _check_inputs(args):
    names = [k for k in INPUT_KEYS if getattr(args, k, None)]
    if getattr(args, "points", None) not in (None, "grid"):
        names.append("points")
    for k in names:
        if not Path(getattr(args, k)).is_file():
            raise ConfigError(f"--{k}: no such file {getattr(args, k)!r}")


def run(argv) -> int:
    """Parse argv, dispatch the subcommand and write its reports; returns the exit status."""
    return main(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, sub = build_parser()
    try:
        _apply_config(parser, sub, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ValidationError as exc:
        print(f"nsreg: error: {exc}", file=sys.stderr)
        return 2
    try:
        _check_inputs(args)
        args.handler(args)
    except ValidationError as exc:
        print(f"nsreg {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (NsregError, OSError) as exc:
        print(f"nsreg {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
