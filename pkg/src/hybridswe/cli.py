"""Command-line frontend: config files, verification drivers, output."""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from hybridswe.cases import builtin_cases, prepare, vortex_fixed_dt, CaseSpec
from hybridswe.mesh import MeshError, generate_structured, write_mesh_file
from hybridswe.output import (
    l2_error_dual,
    l2_error_vertex,
    midline_cells,
    write_gauges_csv,
    write_vtk,
)
from hybridswe.state import dual_depth, velocity_from_momentum


class ConfigError(ValueError):
    """Malformed run configuration."""


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "false"):
        return t == "true"
    raise ConfigError(f"expected true/false, got {text!r}")


_SECTIONS = {
    "case": {"name": str, "end_time": float},
    "mesh": {"nx": int, "ny": int, "file": str},
    "numerics": {
        "theta": float, "cfl": float, "c_alpha": float, "fe_rusanov": _bool,
        "use_lader": _bool, "eps_vel": float, "h_dry": float, "dt_max": float,
        "dt_fixed": float, "cg_tol": float, "cg_maxiter": int, "mode": str,
    },
    "physics": {"g": float, "n_manning": float},
    "output": {"dir": str, "every_steps": int, "dt_out": float, "vtk": _bool,
               "gauges": _bool, "precision": str},
}


@dataclass
class RunConfig:
    case: str
    end_time: float | None = None
    mesh: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    physics: dict = field(default_factory=dict)
    outdir: str = "out"
    every_steps: int | None = None
    dt_out: float | None = None
    vtk: bool = False
    gauges: bool = True
    precision: str = "double"


def parse_config(text) -> RunConfig:
    """Parse the sectioned key-value run configuration.

    Sections are case, mesh, numerics, physics and output; unknown keys and
    type mismatches are rejected, defaults follow the numerics dataclass
    (theta = 1, c_alpha = 0, stabilization off).
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    parsed = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        keys = _SECTIONS[section]
        parsed[section] = {}
        for key, raw in cp.items(section):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            try:
                parsed[section][key] = keys[key](raw)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc

    case_sec = parsed.get("case", {})
    if "name" not in case_sec:
        raise ConfigError("missing case name ([case] name = ...)")
    mesh = parsed.get("mesh", {})
    if "file" in mesh and ("nx" in mesh or "ny" in mesh):
        raise ConfigError("mesh source must be either a file or nx/ny, not both")
    out = parsed.get("output", {})
    if out.get("every_steps", 1) <= 0 or out.get("dt_out", 1.0) <= 0:
        raise ConfigError("output cadence must be positive")
    if out.get("precision", "double") != "double":
        raise ConfigError("only double precision builds are available")

    return RunConfig(
        case=case_sec["name"],
        end_time=case_sec.get("end_time"),
        mesh=mesh,
        numerics=parsed.get("numerics", {}),
        physics=parsed.get("physics", {}),
        outdir=out.get("dir", "out"),
        every_steps=out.get("every_steps"),
        dt_out=out.get("dt_out"),
        vtk=out.get("vtk", False),
        gauges=out.get("gauges", True),
        precision=out.get("precision", "double"),
    )


def make_case(cfg: RunConfig) -> CaseSpec:
    """Resolve a run configuration against the case catalog."""
    catalog = builtin_cases()
    if cfg.case not in catalog:
        raise ConfigError(
            f"unknown case {cfg.case!r}; available: {', '.join(sorted(catalog))}")
    case = catalog[cfg.case].override(
        physics=cfg.physics or None,
        numerics=cfg.numerics or None,
        end_time=cfg.end_time,
    )
    if "file" in cfg.mesh:
        case = replace(case, mesh={"kind": "file", "path": cfg.mesh["file"]})
    elif cfg.mesh:
        mesh = dict(case.mesh)
        if mesh.get("kind") != "structured":
            raise ConfigError(f"case {case.name} does not take nx/ny overrides")
        mesh.update({k: cfg.mesh[k] for k in ("nx", "ny") if k in cfg.mesh})
        case = replace(case, mesh=mesh)
        if (case.family == "vortex" and "dt_fixed" not in cfg.numerics
                and mesh["nx"] == mesh["ny"]):
            try:
                case.numerics = replace(case.numerics,
                                        dt_fixed=vortex_fixed_dt(mesh["nx"]))
            except KeyError:
                pass
    return case


def case_to_config(case: CaseSpec) -> str:
    """Serialize a catalog case to the run-configuration format."""
    num = case.numerics
    lines = [
        "[case]",
        f"name = {case.name}",
        f"end_time = {case.end_time!r}",
        "",
        "[numerics]",
        f"theta = {num.theta!r}",
        f"cfl = {num.cfl!r}",
        f"c_alpha = {num.c_alpha!r}",
        f"fe_rusanov = {str(num.fe_rusanov).lower()}",
        f"use_lader = {str(num.use_lader).lower()}",
        f"eps_vel = {num.eps_vel!r}",
        f"h_dry = {num.h_dry!r}",
        f"dt_max = {num.dt_max!r}",
        f"cg_tol = {num.cg_tol!r}",
        f"cg_maxiter = {num.cg_maxiter}",
        f"mode = {num.mode}",
    ]
    if num.dt_fixed is not None:
        lines.append(f"dt_fixed = {num.dt_fixed!r}")
    lines += [
        "",
        "[physics]",
        f"g = {case.physics.g!r}",
        f"n_manning = {case.physics.n_manning!r}",
    ]
    if case.mesh.get("kind") == "structured":
        lines += ["", "[mesh]", f"nx = {case.mesh['nx']}", f"ny = {case.mesh['ny']}"]
    return "\n".join(lines) + "\n"


def case_from_config(text) -> CaseSpec:
    return make_case(parse_config(text))


# ---------------------------------------------------------------------------
# verification drivers


def run_errors(sim):
    """L2 error norms of the final state against the case's exact solution."""
    if sim.exact is None:
        return None
    s = sim.state
    h = dual_depth(sim.dual, s.eta, s.b_dual)
    v = velocity_from_momentum(s.q, h, sim.config.eps_vel)
    xn, yn = sim.dual.node[:, 0], sim.dual.node[:, 1]
    v1e, v2e = sim.exact["v"](xn, yn, s.t)
    xv, yv = sim.primal.vertices[:, 0], sim.primal.vertices[:, 1]
    eta_e = sim.exact["eta"](xv, yv, s.t)
    return {
        "l2_v1": l2_error_dual(sim.dual, v[:, 0], v1e),
        "l2_v2": l2_error_dual(sim.dual, v[:, 1], v2e),
        "l2_eta": l2_error_vertex(sim.primal, s.eta, eta_e),
    }


def convergence_driver(case: CaseSpec, levels, quiet=True):
    """Run a case across mesh levels and report errors and observed orders."""
    rows = []
    for n in levels:
        sim = prepare(case, resolution=n)
        sim.run(case.end_time)
        err = run_errors(sim)
        if err is None:
            raise ValueError(f"case {case.name} has no exact solution")
        row = {"n": int(n), **err}
        for key in ("l2_v1", "l2_v2", "l2_eta"):
            row["order_" + key[3:]] = None
            if rows:
                prev = rows[-1]
                ratio = math.log(n / prev["n"])
                if ratio > 0 and row[key] > 0:
                    row["order_" + key[3:]] = math.log(prev[key] / row[key]) / ratio
        rows.append(row)
        if not quiet:
            print(format_convergence_row(row), flush=True)
    return rows


def format_convergence_row(row):
    def o(v):
        return "  n/a" if v is None else f"{v:5.2f}"
    return (f"{row['n']:5d}  {row['l2_v1']:.4e} {o(row['order_v1'])}  "
            f"{row['l2_v2']:.4e} {o(row['order_v2'])}  "
            f"{row['l2_eta']:.4e} {o(row['order_eta'])}")


def wellbalance_driver(case: CaseSpec, steps):
    """Lake-at-rest drift norms after a fixed number of steps."""
    sim = prepare(case)
    eta0 = sim.state.eta.copy()
    for _ in range(steps):
        sim.step()
    drift = l2_error_vertex(sim.primal, sim.state.eta, eta0)
    q_norm = l2_error_dual(sim.dual, sim.state.q, np.zeros_like(sim.state.q))
    return drift, q_norm


def riemann_cut(sim):
    """1D profile along the channel midline: x, h and streamwise velocity."""
    bounds = sim.case.mesh["bounds"]
    y_mid = 0.5 * (bounds[2] + bounds[3])
    dy = (bounds[3] - bounds[2]) / sim.case.mesh["ny"]
    # slightly under half a row so rounding cannot pull in off-line nodes
    cells = midline_cells(sim.dual, y_mid, 0.49 * dy)
    h = dual_depth(sim.dual, sim.state.eta, sim.state.b_dual)[cells]
    v = velocity_from_momentum(sim.state.q[cells], h, sim.config.eps_vel)
    return sim.dual.node[cells, 0], h, v[:, 0]


def riemann_compare(case: CaseSpec, t_end, out_path=None):
    """Run a Riemann case and tabulate the midline cut with exact columns."""
    sim = prepare(case)
    sim.run(t_end)
    x, h, u = riemann_cut(sim)
    cols = {"x": x, "h": h, "u": u}
    if sim.exact is not None and "h_u" in sim.exact:
        he, ue = sim.exact["h_u"](x, t_end)
        cols["h_exact"] = he
        cols["u_exact"] = ue
    if out_path:
        with open(out_path, "w") as f:
            f.write(",".join(cols) + "\n")
            for i in range(len(x)):
                f.write(",".join(f"{cols[c][i]:.12g}" for c in cols) + "\n")
    return cols


# ---------------------------------------------------------------------------
# command-line interface


def _cmd_run(args):
    with open(args.config) as f:
        cfg = parse_config(f.read())
    if args.mode:
        cfg.numerics["mode"] = args.mode
    case = make_case(cfg)
    sim = prepare(case)
    os.makedirs(cfg.outdir, exist_ok=True)

    writes = {"count": 0, "next_t": None}
    if cfg.vtk and cfg.dt_out:
        writes["next_t"] = cfg.dt_out

    def on_step(s):
        due = False
        if cfg.every_steps and s.steps % cfg.every_steps == 0:
            due = True
        if writes["next_t"] is not None and s.state.t >= writes["next_t"] - 1e-12:
            due = True
            writes["next_t"] += cfg.dt_out
        if due and cfg.vtk:
            writes["count"] += 1
            write_vtk(s.primal, s.dual, s.state,
                      os.path.join(cfg.outdir, f"{case.name}_{writes['count']:05d}.vtk"))

    res = sim.run(case.end_time, on_step=on_step if cfg.vtk else None)
    if cfg.vtk:
        write_vtk(sim.primal, sim.dual, res.state,
                  os.path.join(cfg.outdir, f"{case.name}_final.vtk"))
    if cfg.gauges and len(res.gauge_times):
        write_gauges_csv(res.gauge_times, res.gauge_values,
                         os.path.join(cfg.outdir, f"{case.name}_gauges.csv"))
    print(f"{case.name}: {res.steps} steps to t={res.state.t:.6g}")
    err = run_errors(sim)
    if err:
        print(f"  L2(v1)={err['l2_v1']:.4e}  L2(v2)={err['l2_v2']:.4e}  "
              f"L2(eta)={err['l2_eta']:.4e}")
    return 0


def _cmd_mesh_gen(args):
    bounds = [float(v) for v in args.bounds.split(",")]
    if len(bounds) != 4:
        raise ConfigError("bounds must be xmin,xmax,ymin,ymax")
    verts, tris, bspec = generate_structured(*bounds, args.nx, args.ny,
                                             pattern=args.pattern)
    write_mesh_file(args.out, verts, tris, bspec)
    print(f"wrote {args.out}: {len(verts)} vertices, {len(tris)} triangles")
    return 0


def _cmd_convergence(args):
    levels = [int(v) for v in args.levels.split(",")]
    catalog = builtin_cases()
    if args.case not in catalog:
        raise ConfigError(f"unknown case {args.case!r}")
    print("    n     L2(v1) order      L2(v2) order     L2(eta) order")
    rows = convergence_driver(catalog[args.case], levels, quiet=False)
    return 0


def _cmd_wellbalance(args):
    catalog = builtin_cases()
    if args.case not in catalog:
        raise ConfigError(f"unknown case {args.case!r}")
    drift, q_norm = wellbalance_driver(catalog[args.case], args.steps)
    print(f"L2(eta drift) = {drift:.6e}")
    print(f"L2(q)         = {q_norm:.6e}")
    return 0


def _cmd_riemann(args):
    catalog = builtin_cases()
    if args.case not in catalog or catalog[args.case].family != "riemann":
        raise ConfigError(f"{args.case!r} is not a Riemann case")
    case = catalog[args.case]
    t_end = args.t if args.t is not None else case.end_time
    cols = riemann_compare(case, t_end, args.out)
    if args.out:
        print(f"wrote {args.out} ({len(cols['x'])} samples, columns "
              f"{','.join(cols)})")
    return 0


def _cmd_list_cases(args):
    for name, case in sorted(builtin_cases().items()):
        print(f"{name:24s} {case.description}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="hybridswe",
                                description="hybrid FV/FE shallow water solver")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a case from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--mode", choices=["wp1", "wp2", "wp3"])
    r.set_defaults(fn=_cmd_run)

    m = sub.add_parser("mesh-gen", help="write a structured triangular mesh")
    m.add_argument("--nx", type=int, required=True)
    m.add_argument("--ny", type=int, required=True)
    m.add_argument("--bounds", required=True, help="xmin,xmax,ymin,ymax")
    m.add_argument("--out", required=True)
    m.add_argument("--pattern", default="uniform", choices=["uniform", "alternating"])
    m.set_defaults(fn=_cmd_mesh_gen)

    c = sub.add_parser("convergence", help="mesh-refinement error study")
    c.add_argument("--case", default="vortex")
    c.add_argument("--levels", default="32,64,128")
    c.set_defaults(fn=_cmd_convergence)

    w = sub.add_parser("wellbalance", help="lake-at-rest drift check")
    w.add_argument("--case", default="leveque-bump")
    w.add_argument("--steps", type=int, default=100)
    w.set_defaults(fn=_cmd_wellbalance)

    q = sub.add_parser("riemann-compare", help="midline cut against the exact solution")
    q.add_argument("--case", required=True)
    q.add_argument("--t", type=float)
    q.add_argument("--out")
    q.set_defaults(fn=_cmd_riemann)

    l = sub.add_parser("list-cases", help="list built-in benchmark cases")
    l.set_defaults(fn=_cmd_list_cases)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.fn(args)
    except (ConfigError, MeshError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
