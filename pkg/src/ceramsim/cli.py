"""Command-line front end: ``ceramsim <command> [--config PATH] [--set k=v ...] [--out PATH]``.

Every command writes one CSV (header row with units in the column names,
12 significant digits, ``\\n`` line endings). Exit status is 0 on success,
2 for configuration errors and 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys

import numpy as np

from . import heat1d, micromech
from . import matmodel as mm
from . import tensorlab as tl
from .config import ConfigError, RunConfig, load_program
from .drivers import dilatometer_run, oedometric_press_run
from .integrator import NonConvergenceError, run_program

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

NUMERICAL_ERRORS = (NonConvergenceError, heat1d.HeatSolverError, ArithmeticError,
                    micromech.GeometryBreakdownError, micromech.DegenerateSurfaceError,
                    mm.DegenerateDirectionError, tl.InvalidDeformationError,
                    np.linalg.LinAlgError)

CORE = ("time_s", "T_C", "p_MPa", "q_MPa", "eps_axial", "eps_p_trace", "rho_hat", "R_grain_m",
        "yield_value_MPa", "dissipation_MPa", "substeps")


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v == 0.0:
            return "0"
        return format(v, ".12g")
    return str(v)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _record_rows(records, extras):
    for r in records:
        row = r.row()
        yield [row[k] for k in CORE] + [row[k] for k in extras]


# -- commands ---------------------------------------------------------------

def cmd_compaction_curve(cfg: RunConfig):
    P = cfg.params()
    k = P.sigma_m / math.sqrt(3.0)
    rows = []
    for rho in np.linspace(cfg["rho_min"], cfg["rho_max"], cfg["n_points"]):
        rho = float(rho)
        geom = micromech.cell_geometry(rho, 1.0, P.zeta)
        pc_geo = micromech.geometric_limit_pressure(geom, k) if geom.valid else math.nan
        rows.append([rho, micromech.compaction_pressure_plane(rho, P.sigma_m),
                     micromech.compaction_pressure_mla(rho, P.sigma_m), pc_geo, geom.valid])
    return ["rho_hat", "pc_plane_MPa", "pc_mla_MPa", "pc_geometric_MPa", "geometry_valid"], rows


def yield_surface_points(rho: float, T: float, params: mm.MaterialParams, n: int):
    """Meridian ``(p, q)`` points of the zero level set and the count of unsolvable ones."""
    hard = mm.hardening(rho, T, params)
    pts, skipped = [], 0
    for p in np.linspace(-hard.c, hard.p_c, n):
        q = mm.meridian_q(float(p), hard, params)
        if not math.isfinite(q):
            skipped += 1
            continue
        pts.append((float(p), q))
    return pts, skipped


def cmd_yield_surface(cfg: RunConfig):
    P = cfg.params()
    rows, skipped = [], 0
    for rho in cfg["densities"]:
        pts, s = yield_surface_points(rho, cfg["temperature_C"], P, cfg["n_samples"])
        skipped += s
        rows.extend([rho, p, q] for p, q in pts)
    if skipped:
        print(f"ceramsim: warning: {skipped} meridian points had no solution and were skipped",
              file=sys.stderr)
    return ["rho_hat", "p_MPa", "q_MPa"], rows


def cmd_dilatometer(cfg: RunConfig):
    recs = dilatometer_run(cfg.params(), cfg["ramp_rate"], cfg["T_max"], cfg.settings(),
                           T_start=cfg["T_start"], max_dt=cfg["max_dt"])
    extras = ("eps_raw", "eps_corrected", "R2_growth_m2")
    return list(CORE) + list(extras), list(_record_rows(recs, extras))


def cmd_press(cfg: RunConfig):
    recs, _ = oedometric_press_run(cfg.params(), cfg["stroke_ratio"], cfg.settings(),
                                   duration=cfg["press_duration"],
                                   unload_duration=cfg["unload_duration"],
                                   press_viscosity=cfg["press_viscosity"],
                                   n_steps=cfg["press_steps"])
    rows = [row + [r.extra["sigma_11_MPa"], r.extra["sigma_22_MPa"]]
            for r, row in zip(recs, _record_rows(recs, ()))]
    return list(CORE) + ["sigma_axial_MPa", "sigma_lateral_MPa"], rows


def _schedule(cfg: RunConfig):
    if cfg["schedule"] is None:
        return heat1d.FiringSchedule.ramp(cfg["ramp_rate"], cfg["T_start"], cfg["T_max"],
                                          cfg["hold_s"])
    try:
        return heat1d.FiringSchedule.from_csv(cfg["schedule"])
    except OSError as exc:
        raise ConfigError(f"cannot read schedule {cfg['schedule']}: {exc.strerror}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_heat1d(cfg: RunConfig):
    nodes, _ = heat1d.coupled_column_run(cfg.params(), cfg["length"], cfg["n_nodes"],
                                         _schedule(cfg), cfg.settings(), dt=cfg["heat_dt"],
                                         t_end=cfg["t_end"])
    header = ["time_s"]
    for i in range(len(nodes)):
        header += [f"T_C_n{i}", f"rho_hat_n{i}", f"R_grain_m_n{i}"]
    rows = []
    for k in range(len(nodes[0])):
        row = [nodes[0][k].time_s]
        for node in nodes:
            row += [node[k].T_C, node[k].rho_hat, node[k].R_grain_m]
        rows.append(row)
    return header, rows


def cmd_point_run(cfg: RunConfig):
    if cfg["program"] is None:
        raise ConfigError("point-run needs 'program' (path to a load program file)")
    program, initial = load_program(cfg["program"])
    P = cfg.params()
    state = mm.MaterialState.initial(P, T=initial.get("T"))
    if "rho_hat" in initial:
        if not 0.0 < initial["rho_hat"] < 1.0:
            raise ConfigError("initial rho_hat must lie in (0, 1)")
        state.rho_hat = initial["rho_hat"]
    recs, _ = run_program(state, program, P, cfg.settings())
    extras = ("sigma_11_MPa", "sigma_22_MPa", "sigma_33_MPa")
    return list(CORE) + list(extras), list(_record_rows(recs, extras))


COMMANDS = {
    "compaction-curve": cmd_compaction_curve,
    "yield-surface": cmd_yield_surface,
    "dilatometer": cmd_dilatometer,
    "press": cmd_press,
    "heat1d": cmd_heat1d,
    "point-run": cmd_point_run,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        help="override one key (repeatable, applied after --config)")
    common.add_argument("--out", metavar="PATH", help="CSV destination (default: stdout)")
    common.add_argument("--dump-config", metavar="PATH",
                        help="also write the effective configuration to PATH")
    parser = argparse.ArgumentParser(prog="ceramsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _fail(kind: str, exc: Exception, code: int) -> int:
    msg = " ".join(str(exc).split())
    print(f"ceramsim: error: {kind}: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, args.set)
        if args.dump_config:
            with open(args.dump_config, "w", newline="\n") as fh:
                fh.write(cfg.dump())
        header, rows = COMMANDS[args.command](cfg)
        text = render_csv(header, rows)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except NUMERICAL_ERRORS as exc:
        return _fail("numerical", exc, EXIT_NUMERIC)
    except (mm.ParameterError, micromech.DomainError) as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except OSError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    if args.out:
        try:
            with open(args.out, "w", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            return _fail("config", exc, EXIT_CONFIG)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
