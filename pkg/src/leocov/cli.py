"""Command-line front end.

Subcommands::

    lattice            write a Fibonacci lattice as a point-set CSV
    bound              analytic coverage lower bound curve (rayleigh | nakagami)
    simulate           Monte Carlo coverage curve for a lattice or point-set file
    tle                parse a TLE file and write the observer-aligned snapshot
    compare            fit the dB shift between two curve CSVs
    verify-regulation  sampled check of ball regulation for a point set

Every data file gets a ``<file>.manifest.json`` with the parameters, seed,
version, input digests and run time. Data files never contain timestamps,
so repeated runs give byte-identical output.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import bounds, montecarlo, point_process, tle
from .curves import fit_db_shift, parse_db_grid, read_curve, write_curve
from .exceptions import ConditioningError, ConvergenceError, DomainError, InputFormatError, InvalidArgumentError
from .geometry import GeometryConfig

DEFAULTS = {
    "alpha": 2.0,
    "wbar": 0.0,
    "gbar": 0.1,
    "m": 2,
    "earth_km": 6370.0,
    "alt_km": 500.0,
    "min_elev_deg": 25.0,
    "theta_db": "-15:15:1",
    "model": "nakagami",
    "runs": 50_000,
    "seed": 0,
    "centers": 1000,
    "radii": 100,
    "band_km": "500:600",
    "epoch_policy": "per-record",
    "nodes": 64,
    "shell_radius_km": 6920.0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _add_geometry(p):
    p.add_argument("--earth-km", type=float)
    p.add_argument("--alt-km", type=float)
    p.add_argument("--min-elev-deg", type=float)


def _add_channel(p):
    p.add_argument("--m", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--gbar", type=float)
    p.add_argument("--wbar", type=float)


def _add_constellation(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--points", help="point-set CSV")
    src.add_argument("--lattice-n", type=int, help="Fibonacci lattice size")
    src.add_argument("--h-km", type=float, help="half minimum spacing; lattice size follows from it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="leocov", description="Coverage bounds for ball-regulated LEO constellations.")
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("lattice", help="write a Fibonacci lattice")
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--n", type=int)
    size.add_argument("--h-km", type=float)
    p.add_argument("--radius-km", type=float, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bound", help="analytic lower-bound curve")
    p.add_argument("--model", choices=["rayleigh", "nakagami"])
    _add_channel(p)
    _add_geometry(p)
    _add_constellation(p)
    p.add_argument("--sigma", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--nodes", type=int)
    p.add_argument("--seed", type=int, help="seed for estimating nu from a point-set file")
    p.add_argument("--theta-db")
    p.add_argument("--config")
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo coverage curve")
    _add_channel(p)
    _add_geometry(p)
    _add_constellation(p)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--rotate", action="store_true", default=None)
    p.add_argument("--theta-db")
    p.add_argument("--config")
    p.add_argument("--out", required=True)

    p = sub.add_parser("tle", help="TLE snapshot to point set")
    p.add_argument("--input", required=True)
    p.add_argument("--observer-lat-deg", type=float, default=39.9)
    p.add_argument("--observer-lon-deg", type=float, default=116.4)
    p.add_argument("--band-km")
    p.add_argument("--shell-radius-km", type=float)
    p.add_argument("--epoch-policy", choices=["per-record", "common"])
    p.add_argument("--earth-km", type=float)
    p.add_argument("--alt-km", type=float)
    p.add_argument("--min-elev-deg", type=float)
    p.add_argument("--lenient", action="store_true", default=None)
    p.add_argument("--config")
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="fit the dB shift between two curves")
    p.add_argument("--ref", required=True)
    p.add_argument("--target", required=True)

    p = sub.add_parser("verify-regulation", help="sampled ball-regulation check")
    _add_constellation(p)
    p.add_argument("--radius-km", type=float)
    p.add_argument("--earth-km", type=float)
    p.add_argument("--alt-km", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--centers", type=int)
    p.add_argument("--radii", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    return parser


def _resolve(args) -> dict:
    """Merge flags over the JSON config over the built-in defaults."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputFormatError(f"cannot read config {args.config}: {exc}") from None
        cfg = {k.replace("-", "_"): v for k, v in raw.items()}
    flags = {k: v for k, v in vars(args).items() if v is not None}
    merged = dict(DEFAULTS)
    merged.update(cfg)
    merged.update(flags)
    merged["_explicit"] = set(cfg) | set(flags)
    return merged


def _geometry(o) -> GeometryConfig:
    return GeometryConfig.from_degrees(o["earth_km"], o["alt_km"], o["min_elev_deg"])


def _constellation(o, radius_km):
    """Point set plus the regulation parameters implied by how it was specified."""
    seed = int(o["seed"])
    if o.get("points"):
        ps = point_process.read_pointset(o["points"])
        return ps, None, lambda: point_process.estimate_regulation_nu(ps, seed=seed)
    if o.get("lattice_n"):
        ps = point_process.fibonacci_lattice(int(o["lattice_n"]), radius_km)
        return ps, None, lambda: point_process.fibonacci_regulation_params(
            point_process.half_min_distance(ps), radius_km
        )
    if o.get("h_km"):
        h = float(o["h_km"])
        n = point_process.lattice_size_for_half_distance(h, radius_km)
        return point_process.fibonacci_lattice(n, radius_km), h, lambda: point_process.fibonacci_regulation_params(
            h, radius_km
        )
    raise UsageError("one of --points, --lattice-n or --h-km is required")


def _regulation(o, default_fn):
    given = [o.get(k) for k in ("sigma", "rho", "nu")]
    if all(v is None for v in given):
        return default_fn()
    base = default_fn() if any(v is None for v in given) else None
    sigma = o["sigma"] if o.get("sigma") is not None else base.sigma
    rho = o["rho"] if o.get("rho") is not None else base.rho
    nu = o["nu"] if o.get("nu") is not None else base.nu
    return point_process.RegulationParams(float(sigma), float(rho), float(nu))


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(out, command, params, inputs, started):
    manifest = {
        "command": command,
        "parameters": {k: v for k, v in sorted(params.items()) if not k.startswith("_")},
        "seed": params.get("seed"),
        "version": _version(),
        "inputs": {str(p): _digest(p) for p in inputs if p},
        "wall_clock_s": round(time.perf_counter() - started, 6),
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")


def _cmd_lattice(o, started):
    if o.get("n") is not None:
        n = int(o["n"])
    else:
        n = point_process.lattice_size_for_half_distance(float(o["h_km"]), float(o["radius_km"]))
    ps = point_process.fibonacci_lattice(n, float(o["radius_km"]))
    point_process.write_pointset(o["out"], ps)
    _write_manifest(o["out"], "lattice", o, [], started)
    print(f"points={len(ps)} half_min_distance_km={point_process.half_min_distance(ps):.6f}")


def _cmd_bound(o, started):
    geo = _geometry(o)
    ps, _, default_params = _constellation(o, geo.orbit_radius_km)
    params = _regulation(o, default_params)
    obs = point_process.observe(ps, geo)
    if obs.empty:
        raise ConditioningError("no satellite is visible from the user")
    model = o["model"]
    m = 1 if model == "rayleigh" and "m" not in _explicit(o) else int(o["m"])
    ch = bounds.ChannelParams(m, float(o["alpha"]), float(o["gbar"]), float(o["wbar"]))
    grid = parse_db_grid(o["theta_db"])
    curve = bounds.coverage_curve(grid, model, obs.serving_distance_km, ch, geo, params, nodes=int(o["nodes"]))
    write_curve(o["out"], curve)
    _write_manifest(o["out"], "bound", {**o, "m": m, "regulation": vars(params)}, [o.get("points")], started)
    print(
        f"rows={len(curve)} r0_km={obs.serving_distance_km:.6f} visible={obs.visible_count} "
        f"sigma={params.sigma:g} rho={params.rho:g} nu={params.nu:.6e}"
    )


def _explicit(o):
    return o.get("_explicit", set())


def _cmd_simulate(o, started):
    geo = _geometry(o)
    ps, _, _ = _constellation(o, geo.orbit_radius_km)
    obs = point_process.observe(ps, geo)
    ch = bounds.ChannelParams(int(o["m"]), float(o["alpha"]), float(o["gbar"]), float(o["wbar"]))
    sim = montecarlo.SimConfig(int(o["runs"]), int(o["seed"]), parse_db_grid(o["theta_db"]), bool(o.get("rotate")))
    curve = montecarlo.coverage_estimate(obs, ch, geo, sim, points=ps, workers=o.get("workers"))
    write_curve(o["out"], curve)
    _write_manifest(o["out"], "simulate", o, [o.get("points")], started)
    print(f"rows={len(curve)} runs={sim.runs} visible={obs.visible_count}")


def _cmd_tle(o, started):
    path = Path(o["input"])
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from None
    errors = []
    records = tle.parse_tle(text, strict=not o.get("lenient"), errors=errors)
    for err in errors:
        print(f"warning: {err}", file=sys.stderr)
    try:
        lo, hi = (float(v) for v in str(o["band_km"]).split(":"))
    except ValueError:
        raise InvalidArgumentError(f"band must be 'lo:hi' in km, got {o['band_km']!r}") from None
    shell = float(o["shell_radius_km"])
    if "shell_radius_km" not in _explicit(o) and "alt_km" in _explicit(o):
        shell = float(o["earth_km"]) + float(o["alt_km"])
    snap = tle.build_snapshot(
        records,
        (lo, hi),
        (math.radians(o["observer_lat_deg"]), math.radians(o["observer_lon_deg"])),
        o["epoch_policy"],
        shell,
        earth_radius_km=float(o["earth_km"]),
    )
    point_process.write_pointset(o["out"], snap.points)
    sidecar = Path(str(o["out"]) + ".json")
    sidecar.write_text(snap.sidecar_json() + "\n")
    _write_manifest(o["out"], "tle", o, [path], started)
    geo = GeometryConfig.from_degrees(float(o["earth_km"]), shell - float(o["earth_km"]), float(o["min_elev_deg"]))
    obs = point_process.observe(snap.points, geo)
    r0 = "nan" if obs.empty else f"{obs.serving_distance_km:.6f}"
    print(f"records={len(records)} kept={len(snap.points)} visible={obs.visible_count} r0_km={r0}")


def _cmd_compare(o, started):
    shift, gap = fit_db_shift(read_curve(o["ref"]), read_curve(o["target"]))
    print(f"shift_db={shift:.6f} linf_gap={gap:.6g}")


def _cmd_verify(o, started):
    radius = o.get("radius_km") or float(o["earth_km"]) + float(o["alt_km"])
    ps, _, default_params = _constellation(o, radius)
    params = _regulation(o, default_params)
    report = point_process.verify_ball_regulation(ps, params, int(o["centers"]), int(o["radii"]), int(o["seed"]))
    c = ", ".join(f"{v:.9f}" for v in report.worst_center)
    print(
        f"sigma={params.sigma:g} rho={params.rho:g} nu={params.nu:.6e} "
        f"max_excess={report.max_excess:.6f} worst_radius_km={report.worst_radius:.6f} worst_center=({c})"
    )


COMMANDS = {
    "lattice": _cmd_lattice,
    "bound": _cmd_bound,
    "simulate": _cmd_simulate,
    "tle": _cmd_tle,
    "compare": _cmd_compare,
    "verify-regulation": _cmd_verify,
}


def _join_grid_values(argv):
    """Glue ``--theta-db -15:15:1`` into one token; argparse reads a leading '-' as a flag."""
    out, it = [], iter(argv)
    for tok in it:
        if tok == "--theta-db":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def dispatch(argv=None) -> int:
    parser = build_parser()
    argv = _join_grid_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        opts = _resolve(args)
        COMMANDS[args.command](opts, started)
    except UsageError as exc:
        print(f"leocov {args.command}: {exc}", file=sys.stderr)
        return 1
    except (InputFormatError, FileNotFoundError) as exc:
        print(f"leocov {args.command}: input error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ConditioningError, ConvergenceError, FloatingPointError) as exc:
        print(f"leocov {args.command}: numeric failure: {exc}", file=sys.stderr)
        return 3
    except InvalidArgumentError as exc:
        print(f"leocov {args.command}: invalid argument: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
