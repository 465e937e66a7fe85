"""Command line interface.

Exit codes: 0 success, 1 bad input or failed validation, 2 numerical blow-up
or curvature-cone violation, 3 violated mathematical property.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import perturbed_cap_lattice, relative_to_amplitude
from .errors import CapflowError, DomainError
from .flow import FlowConfig, csv_header, run
from .geometry import check_n, check_theta, make_cap, make_flat_ball, make_perturbed_cap, validate
from .inequalities import FkTable, build_table, default_grid, tabulate_fk
from .io import (atomic_write_text, quermass_rows, read_csv, read_snapshot, write_csv,
                 write_manifest, write_snapshot)
from .quermass import quermass_theta
from .verify import CHECKS, cap_family, family_normal_speed, perturbed_family, run_check

log = logging.getLogger("capflow")

COMMON_DEFAULTS = {"n": 2, "theta": math.pi / 2, "k": 1, "nodes": 400, "seed": 0, "tol": None}
COMMAND_DEFAULTS = {
    "cap": {"R": 1.0},
    "simulate": {"flow": "quotient", "init": "perturbed", "R": 1.0, "mode": 1, "rel": 0.2,
                 "eps": None, "file": None, "t_end": 50.0, "dt_max": 1e-3, "cfl": 0.2,
                 "diag_every": 2000, "snapshot_every": 5, "tol_cap": 1e-6, "fit_cap": True},
    "verify": {"which": "hm", "init": "cap", "R": 1.0, "mode": 1, "rel": 0.2, "eps": None,
               "file": None, "delta": 1e-4, "eta": 1e-4, "table": None},
    "tabulate-fk": {"grid_min": 1e-3, "grid_max": 1e3, "grid_size": 513, "audit": True,
                    "rows": None},
    "sweep": {"which": "inequality", "sample": 0, "jobs": 1},
}


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--n", type=int, default=S, help="dimension of the hypersurface (2 or 3 typical)")
    p.add_argument("--theta", type=float, default=S, help="contact angle in (0, pi/2]")
    p.add_argument("--k", type=int, default=S, help="curvature index")
    p.add_argument("--nodes", type=int, default=S, help="profile segments M")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=S, help="corpus sampling seed")
    p.add_argument("--tol", type=float, default=S, help="override the check tolerance")
    p.add_argument("--config", help="JSON file with option values; flags take precedence")
    p.add_argument("--log-level", default="WARNING")


def _surface_flags(p: argparse.ArgumentParser, inits) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--init", choices=inits, default=S)
    p.add_argument("--R", type=float, default=S, help="cap radius")
    p.add_argument("--mode", type=int, default=S, help="perturbation mode")
    p.add_argument("--rel", type=float, default=S, help="relative perturbation amplitude")
    p.add_argument("--eps", type=float, default=S, help="absolute amplitude (overrides --rel)")
    p.add_argument("--file", default=S, help="snapshot file for --init file")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="capflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cap", help="write a spherical cap and its quermassintegrals")
    _common(p)
    p.add_argument("--R", type=float, default=S)

    p = sub.add_parser("simulate", help="run a flow from an initial profile")
    _common(p)
    _surface_flags(p, ("cap", "flat", "perturbed", "file"))
    p.add_argument("--flow", choices=("quotient", "mcf"), default=S)
    p.add_argument("--t-end", dest="t_end", type=float, default=S)
    p.add_argument("--dt-max", dest="dt_max", type=float, default=S)
    p.add_argument("--cfl", type=float, default=S)
    p.add_argument("--diag-every", dest="diag_every", type=int, default=S,
                   help="steps between diagnostic records")
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int, default=S,
                   help="records between snapshots")
    p.add_argument("--tol-cap", dest="tol_cap", type=float, default=S,
                   help="stop once the distance to the fitted cap is below this (0 disables)")
    p.add_argument("--no-fit-cap", dest="fit_cap", action="store_false", default=S)

    p = sub.add_parser("verify", help="check an identity or inequality on one surface")
    _common(p)
    _surface_flags(p, ("cap", "flat", "perturbed", "file"))
    p.add_argument("--which", choices=CHECKS, default=S)
    p.add_argument("--in", dest="file", default=S, help="snapshot file (implies --init file)")
    p.add_argument("--delta", type=float, default=S, help="variation step")
    p.add_argument("--eta", type=float, default=S, help="family difference step")
    p.add_argument("--table", default=S, help="f_k table CSV (otherwise built on the fly)")

    p = sub.add_parser("tabulate-fk", help="tabulate the cap equality function f_k")
    _common(p)
    p.add_argument("--grid-min", dest="grid_min", type=float, default=S)
    p.add_argument("--grid-max", dest="grid_max", type=float, default=S)
    p.add_argument("--grid-size", dest="grid_size", type=int, default=S)
    p.add_argument("--no-audit", dest="audit", action="store_false", default=S)
    p.add_argument("--rows", default=S, help="CSV of R,alpha,W_{k-1},W_k rows to validate instead")

    p = sub.add_parser("sweep", help="run a check over the perturbed-cap corpus")
    _common(p)
    p.add_argument("--which", choices=CHECKS, default=S)
    p.add_argument("--sample", type=int, default=S, help="random subset size (0 = all)")
    p.add_argument("--jobs", type=int, default=S)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file and explicit flags (flags win)."""
    cfg = dict(COMMON_DEFAULTS, **COMMAND_DEFAULTS[args.command])
    if args.config:
        try:
            from_file = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise DomainError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(from_file, dict):
            raise DomainError("config file must hold a JSON object")
        unknown = set(from_file) - set(cfg)
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(from_file)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "log_level")}
    cfg.update(flags)
    cfg["command"] = args.command
    cfg["n"] = check_n(int(cfg["n"]))
    cfg["theta"] = check_theta(float(cfg["theta"]))
    if not 1 <= int(cfg["k"]) <= cfg["n"]:
        raise DomainError(f"k={cfg['k']} outside 1..{cfg['n']}")
    if int(cfg["nodes"]) < 16:
        raise DomainError("--nodes must be at least 16")
    if cfg.get("file") and args.command in ("simulate", "verify") and "init" not in flags:
        cfg["init"] = "file"
    return cfg


def initial_curve(cfg: dict):
    n, th, M = cfg["n"], cfg["theta"], int(cfg["nodes"])
    init = cfg["init"]
    if init == "cap":
        return make_cap(n, th, float(cfg["R"]), M)
    if init == "flat":
        return make_flat_ball(n, th, M)
    if init == "perturbed":
        return make_perturbed_cap(n, th, float(cfg["R"]), int(cfg["mode"]), _amplitude(cfg), M)
    if not cfg.get("file"):
        raise DomainError("--init file needs --file")
    curve, _ = read_snapshot(cfg["file"])
    if curve.n != n or abs(curve.theta - th) > 1e-15:
        log.info("snapshot (n, theta) = (%d, %r) replaces the flag values", curve.n, curve.theta)
        cfg["n"], cfg["theta"] = curve.n, curve.theta
    rep = validate(curve)
    if not rep.passed:
        raise DomainError("snapshot failed validation: " + ", ".join(c.name for c in rep.failures()))
    return curve


def _amplitude(cfg: dict) -> float:
    if cfg.get("eps") is not None:
        return float(cfg["eps"])
    return relative_to_amplitude(cfg["theta"], float(cfg["R"]), int(cfg["mode"]), float(cfg["rel"]))


class _Run:
    """Collects output paths and writes the manifest at exit."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self.outputs: list[str] = []
        self.t0 = time.perf_counter()

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def finish(self, status: int, extra: dict | None = None) -> int:
        manifest = {
            "command": self.cfg["command"],
            "config": {k: v for k, v in self.cfg.items() if k != "command"},
            "code_version": __version__,
            "outputs": sorted(set(self.outputs)),
            "wall_clock_s": round(time.perf_counter() - self.t0, 3),
            "exit_status": status,
        }
        if extra:
            manifest.update(extra)
        write_manifest(self.out, manifest)
        return status


def cmd_cap(cfg: dict, job: _Run) -> int:
    R = float(cfg["R"])
    curve = make_cap(cfg["n"], cfg["theta"], R, int(cfg["nodes"]))
    write_snapshot(job.path("cap.json"), curve)
    header, rows = quermass_rows(quermass_theta(curve), R)
    write_csv(job.path("quermass.csv"), header, rows)
    return job.finish(0)


def cmd_simulate(cfg: dict, job: _Run) -> int:
    curve = initial_curve(cfg)
    config = FlowConfig(kind=cfg["flow"], k=int(cfg["k"]), cfl=float(cfg["cfl"]),
                        dt_max=float(cfg["dt_max"]), t_end=float(cfg["t_end"]),
                        diagnostics_every=int(cfg["diag_every"]), tol_cap=float(cfg["tol_cap"]))
    every = max(int(cfg["snapshot_every"]), 1)
    count = [0]

    def on_record(rec, state):
        if count[0] % every == 0:
            write_snapshot(job.path(f"snapshots/snap_{count[0]:05d}.json"), state.curve, state.t)
        count[0] += 1

    status, trajectory, extra = 0, [], {}
    try:
        result = run(curve, config, fit_cap=bool(cfg["fit_cap"]), on_record=on_record)
        trajectory = result.trajectory
        write_snapshot(job.path("final.json"), result.final.curve, result.final.t)
        extra = {"converged": result.converged, "limit_radius": result.limit_radius,
                 "steps": result.final.step_count, "t_final": result.final.t}
    except CapflowError as exc:
        if exc.exit_code != 2:
            raise
        log.error("%s", exc)
        trajectory = getattr(exc, "trajectory", [])
        status, extra = 2, {"error": str(exc)}
    write_csv(job.path("trajectory.csv"), csv_header(curve.n), [r.row() for r in trajectory])
    return job.finish(status, extra)


def _variation_speed(cfg: dict, curve) -> np.ndarray:
    n, th, M, eta = cfg["n"], cfg["theta"], int(cfg["nodes"]), float(cfg["eta"])
    if cfg["init"] == "cap":
        return family_normal_speed(cap_family(n, th, M), float(cfg["R"]), eta)
    if cfg["init"] == "perturbed":
        return family_normal_speed(perturbed_family(n, th, float(cfg["R"]), int(cfg["mode"]), M),
                                   _amplitude(cfg), eta)
    raise DomainError("variation needs a one-parameter family: use --init cap or perturbed")


def _tables(cfg: dict, n: int, theta: float) -> dict[int, FkTable]:
    if cfg.get("table"):
        t = FkTable.from_csv(Path(cfg["table"]).read_text(encoding="utf-8"))
        return {t.k: t}
    return {k: tabulate_fk(n, theta, k, audit=False) for k in range(1, n + 1)}


def cmd_verify(cfg: dict, job: _Run) -> int:
    curve = initial_curve(cfg)
    which = cfg["which"]
    kw = {}
    if which == "variation":
        kw = {"f": _variation_speed(cfg, curve), "delta": float(cfg["delta"])}
    elif which == "inequality":
        kw = {"tables": _tables(cfg, curve.n, curve.theta)}
    rep = run_check(which, curve, cfg["tol"], **kw)
    for line in rep.lines():
        print(line)
    atomic_write_text(job.path("report.json"), rep.to_json() + "\n")
    return job.finish(0 if rep.passed else 3)


def cmd_tabulate_fk(cfg: dict, job: _Run) -> int:
    n, th, k = cfg["n"], cfg["theta"], int(cfg["k"])
    if cfg.get("rows"):
        _, data = read_csv(cfg["rows"])
        if data.ndim != 2 or data.shape[1] != 4 or data.shape[0] < 4:
            raise DomainError("--rows needs at least 4 rows of R,alpha,W_{k-1},W_k")
        table = build_table(n, th, k, data[:, 0], data[:, 1], data[:, 2], data[:, 3])
    else:
        lo, hi, size = float(cfg["grid_min"]), float(cfg["grid_max"]), int(cfg["grid_size"])
        if not 0.0 < lo < hi:
            raise DomainError("grid bounds must satisfy 0 < grid-min < grid-max")
        grid = np.logspace(math.log10(lo), math.log10(hi), size) if (lo, hi) != (1e-3, 1e3) \
            else default_grid(size)
        table = tabulate_fk(n, th, k, grid, audit=bool(cfg["audit"]))
    name = f"fk_n{n}_k{k}.csv"
    atomic_write_text(job.path(name), table.to_csv())
    return job.finish(0, {"interpolant": table.interpolant, "rows": int(table.R.size),
                          "audit_deviation": table.audit_deviation})


def _sweep_item(args):
    which, item, tol, tables = args
    kw = {"tables": tables} if which == "inequality" else {}
    if which == "variation":
        fam = perturbed_family(item.n, item.theta, item.R, item.mode, item.curve.M)
        kw = {"f": family_normal_speed(fam, item.curve.meta["amplitude"], 1e-4)}
    rep = run_check(which, item.curve, tol, **kw)
    return [(item.label, c.name, c.value, c.passed) for c in rep.checks]


def cmd_sweep(cfg: dict, job: _Run) -> int:
    items = perturbed_cap_lattice(ns=(cfg["n"],), thetas=(cfg["theta"],), M=int(cfg["nodes"]))
    sample = int(cfg["sample"])
    if 0 < sample < len(items):
        idx = sorted(random.Random(int(cfg["seed"])).sample(range(len(items)), sample))
        items = [items[i] for i in idx]
    which = cfg["which"]
    tables = _tables(cfg, cfg["n"], cfg["theta"]) if which == "inequality" else None
    work = [(which, it, cfg["tol"], tables) for it in items]
    jobs = int(cfg["jobs"])
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_sweep_item, work))
    else:
        results = [_sweep_item(w) for w in work]
    rows = [row for res in results for row in res]
    write_csv(job.path("sweep.csv"), ["label", "check", "value", "passed"],
              [(lab, name, val, "1" if ok else "0") for lab, name, val, ok in rows])
    failed = sum(1 for *_, ok in rows if not ok)
    print(f"{which}: {len(items)} surfaces, {len(rows)} checks, {failed} failed")
    return job.finish(3 if failed else 0, {"surfaces": len(items), "failed_checks": failed})


COMMANDS = {"cap": cmd_cap, "simulate": cmd_simulate, "verify": cmd_verify,
            "tabulate-fk": cmd_tabulate_fk, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    job = None
    try:
        cfg = resolve(args)
        job = _Run(cfg)
        return COMMANDS[args.command](cfg, job)
    except CapflowError as exc:
        print(f"capflow {args.command}: {exc}", file=sys.stderr)
        if job is None:
            return exc.exit_code
        try:
            return job.finish(exc.exit_code, {"error": str(exc)})
        except OSError:
            return exc.exit_code
    except OSError as exc:
        print(f"capflow {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
