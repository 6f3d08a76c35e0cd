"""Benchmark case catalog with closed-form oracles.

Each case is a declarative ``CaseSpec``; ``prepare`` turns one into a ready
``Simulation``.  Exact solutions are provided for the steady vortex, the
flat-bottom Riemann problems and the potential flow around a cylinder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from hybridswe import mesh as meshmod
from hybridswe.solver import Simulation
from hybridswe.state import NumericsConfig, PhysicalParams, initial_state

DEFAULT_G = 9.81


# ---------------------------------------------------------------------------
# exact solutions


def vortex_exact(x, y, h0=1.0, g=DEFAULT_G):
    """Steady vortex: velocity components and depth over a flat bottom."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    amp = np.exp(-0.5 * (r2 - 1.0))
    v1 = -y * amp
    v2 = x * amp
    h = h0 - np.exp(-(r2 - 1.0)) / (2.0 * g)
    return v1, v2, h


def vortex_fixed_dt(n):
    """Fixed time steps of the vortex convergence protocol per mesh level."""
    table = {32: 1e-2, 64: 5e-3, 128: 2.5e-3, 256: 1.25e-3, 512: 6.25e-4}
    if n not in table:
        raise KeyError(f"no tabulated time step for mesh level {n}")
    return table[n]


def riemann_star(hl, ul, hr, ur, g=DEFAULT_G, tol=1e-12):
    """Star-region depth and velocity of the wet-wet Riemann problem.

    The depth function combines the two-rarefaction and two-shock branches;
    the root is found by Newton iteration safeguarded by bisection.
    Raises ValueError when a vacuum forms.
    """
    cl, cr = math.sqrt(g * hl), math.sqrt(g * hr)
    if ur - ul >= 2.0 * (cl + cr):
        raise ValueError("vacuum formation: states separate")

    def branch(h, hk, ck):
        if h <= hk:
            return 2.0 * (math.sqrt(g * h) - ck)
        return (h - hk) * math.sqrt(0.5 * g * (h + hk) / (h * hk))

    def f(h):
        return branch(h, hl, cl) + branch(h, hr, cr) + (ur - ul)

    # two-rarefaction estimate as the starting guess
    h = max(((cl + cr) / 2.0 - (ur - ul) / 4.0) ** 2 / g, 1e-12)
    lo, hi = 1e-14, max(hl, hr)
    while f(hi) < 0.0:
        hi *= 2.0
    for _ in range(200):
        fh = f(h)
        if fh > 0:
            hi = min(hi, h)
        else:
            lo = max(lo, h)
        # numerical derivative is robust across the branch switch
        d = 1e-7 * max(h, 1e-8)
        slope = (f(h + d) - fh) / d
        h_new = h - fh / slope if slope > 0 else 0.5 * (lo + hi)
        if not lo < h_new < hi:
            h_new = 0.5 * (lo + hi)
        if abs(h_new - h) <= tol * max(h_new, 1e-14):
            h = h_new
            break
        h = h_new
    ustar = 0.5 * (ul + ur) + 0.5 * (branch(h, hr, cr) - branch(h, hl, cl))
    return h, ustar


def exact_riemann_flat(hl, ul, hr, ur, g=DEFAULT_G, xi=0.0, dry_tol=1e-9):
    """Sampled flat-bottom Riemann solution (h, u) at similarity points x/t."""
    xi = np.asarray(xi, dtype=float)
    h = np.zeros_like(xi)
    u = np.zeros_like(xi)
    dry_l = hl <= dry_tol
    dry_r = hr <= dry_tol

    if dry_l and dry_r:
        return h, u

    if dry_r:
        cl = math.sqrt(g * hl)
        head, front = ul - cl, ul + 2.0 * cl
        left = xi <= head
        fan = (xi > head) & (xi < front)
        h[left], u[left] = hl, ul
        c = (ul + 2.0 * cl - xi[fan]) / 3.0
        h[fan] = c * c / g
        u[fan] = (ul + 2.0 * cl + 2.0 * xi[fan]) / 3.0
        return h, u

    if dry_l:
        cr = math.sqrt(g * hr)
        head, front = ur + cr, ur - 2.0 * cr
        right = xi >= head
        fan = (xi < head) & (xi > front)
        h[right], u[right] = hr, ur
        c = (xi[fan] - ur + 2.0 * cr) / 3.0
        h[fan] = c * c / g
        u[fan] = (ur - 2.0 * cr + 2.0 * xi[fan]) / 3.0
        return h, u

    cl, cr = math.sqrt(g * hl), math.sqrt(g * hr)
    if ur - ul >= 2.0 * (cl + cr):
        # vacuum generation: two fans around a dry region
        hlv, ulv = exact_riemann_flat(hl, ul, 0.0, 0.0, g, xi, dry_tol)
        hrv, urv = exact_riemann_flat(0.0, 0.0, hr, ur, g, xi, dry_tol)
        return hlv + hrv, ulv + urv

    hs, us = riemann_star(hl, ul, hr, ur, g)
    cs = math.sqrt(g * hs)

    left = xi < us
    if hs > hl:  # left shock
        sl = ul - cl * math.sqrt(0.5 * (hs + hl) * hs / (hl * hl))
        pre = left & (xi < sl)
        post = left & (xi >= sl)
        h[pre], u[pre] = hl, ul
        h[post], u[post] = hs, us
    else:  # left rarefaction
        shl, stl = ul - cl, us - cs
        pre = left & (xi <= shl)
        post = left & (xi >= stl)
        fan = left & (xi > shl) & (xi < stl)
        h[pre], u[pre] = hl, ul
        h[post], u[post] = hs, us
        c = (ul + 2.0 * cl - xi[fan]) / 3.0
        h[fan] = c * c / g
        u[fan] = (ul + 2.0 * cl + 2.0 * xi[fan]) / 3.0

    right = ~left
    if hs > hr:  # right shock
        sr = ur + cr * math.sqrt(0.5 * (hs + hr) * hs / (hr * hr))
        pre = right & (xi > sr)
        post = right & (xi <= sr)
        h[pre], u[pre] = hr, ur
        h[post], u[post] = hs, us
    else:  # right rarefaction
        shr, strt = ur + cr, us + cs
        pre = right & (xi >= shr)
        post = right & (xi <= strt)
        fan = right & (xi < shr) & (xi > strt)
        h[pre], u[pre] = hr, ur
        h[post], u[post] = hs, us
        c = (xi[fan] - ur + 2.0 * cr) / 3.0
        h[fan] = c * c / g
        u[fan] = (ur - 2.0 * cr + 2.0 * xi[fan]) / 3.0

    return h, u


def cylinder_potential_exact(x, y, v_m=1e-2, r_c=1.0, eta0=1.0, g=DEFAULT_G):
    """Radial and angular velocity plus free surface of cylinder potential flow.

    The surface follows from Bernoulli: eta = eta0 + (v_m^2 - |v|^2) / (2 g).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    a = r_c * r_c / r2
    phi = np.arctan2(y, x)
    v_r = v_m * (1.0 - a) * np.cos(phi)
    v_t = -v_m * (1.0 + a) * np.sin(phi)
    eta = eta0 + (v_m * v_m - (v_r * v_r + v_t * v_t)) / (2.0 * g)
    return v_r, v_t, eta


def cylinder_potential_cartesian(x, y, v_m=1e-2, r_c=1.0, eta0=1.0, g=DEFAULT_G):
    v_r, v_t, eta = cylinder_potential_exact(x, y, v_m, r_c, eta0, g)
    phi = np.arctan2(np.asarray(y, float), np.asarray(x, float))
    vx = v_r * np.cos(phi) - v_t * np.sin(phi)
    vy = v_r * np.sin(phi) + v_t * np.cos(phi)
    return vx, vy, eta


# ---------------------------------------------------------------------------
# case specifications


@dataclass
class CaseSpec:
    """Declarative benchmark description, serializable to the config format."""

    name: str
    family: str
    params: dict
    mesh: dict
    end_time: float
    physics: PhysicalParams = field(default_factory=PhysicalParams)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    gauges: tuple = ()
    description: str = ""

    def override(self, physics=None, numerics=None, end_time=None):
        out = replace(self)
        if physics:
            out.physics = replace(out.physics, **physics)
        if numerics:
            out.numerics = replace(out.numerics, **numerics)
        if end_time is not None:
            out.end_time = end_time
        return out


PERIODIC_X = {"left": "periodic:x", "right": "periodic:x"}
PERIODIC_Y = {"bottom": "periodic:y", "top": "periodic:y"}

RP_TABLE = {
    # eta_l, eta_r, u_l, u_r, b_l, b_r, x_l, x_r, nx, T
    "rp1": (1.0, 2.0, 0.0, 0.0, 0.0, 0.0, -0.5, 0.5, 200, 0.075),
    "rp2": (1.46184, 0.30873, 0.0, 0.0, 0.0, 0.2, -0.5, 0.5, 400, 1.0),
    "rp3": (0.75, 1.10594, -9.49365, -4.94074, 0.0, 0.2, -15.0, 5.0, 800, 1.0),
    "rp4": (0.75, 1.10594, -1.35624, -4.94074, 0.0, 0.2, -15.0, 5.0, 1600, 1.0),
    "rp5": (1.0, 1e-14, 0.0, 0.0, 0.0, 0.0, -0.5, 0.5, 300, 0.075),
}

DAMBREAK_GAUGES = ((-0.82, 0.0), (-0.62, 0.0), (-0.42, 0.0), (0.0, 0.0),
                   (0.02, 0.0), (0.722, 0.0))
DAMBREAK_GAUGE_NAMES = ("-5A", "-3A", "-2A", "0", "1A", "8A")


def _vortex_case(name, h0, mode, n=32, description=""):
    return CaseSpec(
        name=name,
        family="vortex",
        params={"h0": h0},
        mesh={"kind": "structured", "bounds": (-5.0, 5.0, -5.0, 5.0),
              "nx": n, "ny": n, "pattern": "uniform",
              "tags": {**PERIODIC_X, **PERIODIC_Y}},
        end_time=0.1,
        numerics=NumericsConfig(use_lader=True, dt_fixed=vortex_fixed_dt(n), mode=mode),
        description=description,
    )


def _wave_dt_cap(dx, h_max, g=DEFAULT_G, cfl=0.5):
    """Gravity-wave step bound, needed while the flow is still at rest.

    The convective CFL is blind to the surface celerity, so runs started
    from quiescent data would otherwise take an arbitrarily large first
    step and smear the emerging waves.
    """
    return cfl * dx / math.sqrt(g * h_max)


def _riemann_case(name, ny=2, numerics=None):
    eta_l, eta_r, u_l, u_r, b_l, b_r, x_l, x_r, nx, t_end = RP_TABLE[name]
    dx = (x_r - x_l) / nx
    numerics = numerics or NumericsConfig(use_lader=True)
    numerics = replace(numerics,
                       dt_max=_wave_dt_cap(dx, max(eta_l - b_l, eta_r - b_r)))
    return CaseSpec(
        name=name,
        family="riemann",
        params={"eta_l": eta_l, "eta_r": eta_r, "u_l": u_l, "u_r": u_r,
                "b_l": b_l, "b_r": b_r, "x_c": 0.0},
        mesh={"kind": "structured", "bounds": (x_l, x_r, 0.0, ny * dx),
              "nx": nx, "ny": ny, "pattern": "uniform",
              "tags": {"left": "exact", "right": "exact", **PERIODIC_Y}},
        end_time=t_end,
        numerics=numerics,
        description=f"Riemann problem {name}",
    )


def builtin_cases():
    """Catalog of the built-in benchmarks, keyed by case name."""
    cases = {}

    cases["vortex"] = _vortex_case(
        "vortex", h0=1.0, mode="auto",
        description="steady vortex for the convergence study, Fr=0.32")
    cases["vortex-ap-fr1e-1"] = _vortex_case(
        "vortex-ap-fr1e-1", h0=10.0, mode="wp3",
        description="low Froude vortex, Fr=1e-1, pressure-correction mode")
    cases["vortex-ap-fr1e-2"] = _vortex_case(
        "vortex-ap-fr1e-2", h0=1e3, mode="wp3",
        description="low Froude vortex, Fr=1e-2, pressure-correction mode")

    for name, eps in (("leveque-bump", 0.0), ("leveque-bump-perturbed", 1e-2)):
        cases[name] = CaseSpec(
            name=name,
            family="leveque",
            params={"eps": eps},
            mesh={"kind": "structured", "bounds": (-2.0, 1.0, -0.5, 0.5),
                  "nx": 96, "ny": 32, "pattern": "uniform",
                  "tags": {"left": "exact", "right": "exact", **PERIODIC_Y}},
            end_time=0.48 if eps else 0.1,
            numerics=NumericsConfig(theta=0.51 if eps else 0.6, use_lader=True,
                                    dt_max=1e-3),
            description="rest or perturbed surface over a Gaussian bump",
        )

    cases["cosine-bump-1d"] = CaseSpec(
        name="cosine-bump-1d",
        family="cosine_bump",
        params={"eps": 1e-3},
        mesh={"kind": "structured", "bounds": (0.0, 2.0, 0.0, 0.2),
              "nx": 400, "ny": 40, "pattern": "uniform",
              "tags": {"left": "exact", "right": "exact", **PERIODIC_Y}},
        end_time=0.15,
        numerics=NumericsConfig(theta=0.51, use_lader=True, dt_max=1.5e-3),
        description="small surface perturbation running over a cosine bump",
    )

    cases["rp1"] = _riemann_case("rp1")
    cases["rp2"] = _riemann_case("rp2")
    cases["rp3"] = _riemann_case(
        "rp3", numerics=NumericsConfig(use_lader=True, fe_rusanov=True, c_alpha=1.0))
    cases["rp4"] = _riemann_case(
        "rp4", numerics=NumericsConfig(use_lader=True, fe_rusanov=True, c_alpha=1.0))
    # dry-bed cases raise the dry threshold to the depth scale where the
    # eps-regularized velocity saturates, a few 1e-4 of the upstream depth
    cases["rp5"] = _riemann_case(
        "rp5", numerics=NumericsConfig(use_lader=True, fe_rusanov=True, h_dry=1e-3))

    cases["circular-dambreak"] = CaseSpec(
        name="circular-dambreak",
        family="circular_dambreak",
        params={},
        mesh={"kind": "structured", "bounds": (-2.0, 2.0, -2.0, 2.0),
              "nx": 100, "ny": 100, "pattern": "uniform", "tags": {}},
        end_time=0.2,
        numerics=NumericsConfig(theta=0.5, use_lader=True, fe_rusanov=True,
                                dt_max=_wave_dt_cap(4.0 / 100, 0.8)),
        description="circular dambreak over a bottom step",
    )

    cases["cylinder"] = CaseSpec(
        name="cylinder",
        family="cylinder",
        params={"v_m": 1e-2, "r_c": 1.0, "eta0": 1.0},
        mesh={"kind": "ogrid", "half_width": 8.0, "r_inner": 1.0,
              "n_r": 24, "n_theta": 96, "stretch": 3.0,
              "tags": {"hole": "wall", "left": "inflow", "bottom": "inflow",
                       "top": "inflow", "right": "outflow"}},
        end_time=10.0,
        numerics=NumericsConfig(theta=1.0, use_lader=True),
        description="low Froude potential flow around a cylinder, Fr=3.19e-3",
    )

    fr = 3.0
    cases["blunt-body"] = CaseSpec(
        name="blunt-body",
        family="blunt_body",
        params={"froude": fr, "h0": 1.0},
        mesh={"kind": "annulus", "center": (0.5, 0.0), "r_inner": 0.5,
              "r_outer": 2.0, "theta0": 0.5 * math.pi, "theta1": 1.5 * math.pi,
              "n_r": 20, "n_theta": 72,
              "tags": {"inner": "wall", "outer": "inflow",
                       "start": "outflow", "end": "outflow"}},
        end_time=2.0,
        numerics=NumericsConfig(use_lader=True, fe_rusanov=True, c_alpha=2.0, cfl=0.5),
        description="supercritical flow around a blunt body, Fr=3",
    )

    cases["dambreak-3d"] = CaseSpec(
        name="dambreak-3d",
        family="dambreak_plane",
        params={"h_tank": 0.6, "dx": 0.05, "gate_half_width": 0.2},
        mesh={"kind": "slit_tank", "dx": 0.05},
        end_time=2.0,
        physics=PhysicalParams(n_manning=1e-3),
        numerics=NumericsConfig(cfl=0.5, use_lader=True, fe_rusanov=True,
                                dt_max=_wave_dt_cap(0.05, 0.6), h_dry=1e-3),
        gauges=DAMBREAK_GAUGES,
        description="dambreak through a gate onto a dry plate, gauge comparison",
    )

    return cases


def with_resolution(case: CaseSpec, n) -> CaseSpec:
    """Same case on an n-by-n structured mesh (vortex picks its fixed dt)."""
    if case.mesh.get("kind") != "structured":
        raise ValueError(f"case {case.name} has no structured resolution knob")
    out = replace(case, mesh={**case.mesh, "nx": int(n), "ny": int(n)})
    if case.family == "vortex":
        out.numerics = replace(out.numerics, dt_fixed=vortex_fixed_dt(int(n)))
    return out


# ---------------------------------------------------------------------------
# instantiation


def build_mesh(case: CaseSpec):
    m = case.mesh
    kind = m["kind"]
    if kind == "structured":
        verts, tris, bspec = meshmod.generate_structured(
            *m["bounds"], m["nx"], m["ny"], m.get("pattern", "uniform"),
            m.get("tags"))
    elif kind == "ogrid":
        verts, tris, bspec = meshmod.generate_ogrid_square_hole(
            m["half_width"], m["r_inner"], m["n_r"], m["n_theta"], m.get("tags"),
            m.get("stretch", 2.0))
    elif kind == "annulus":
        verts, tris, bspec = meshmod.generate_polar_annulus(
            m["center"], m["r_inner"], m["r_outer"], m["theta0"], m["theta1"],
            m["n_r"], m["n_theta"], m.get("tags"))
    elif kind == "slit_tank":
        verts, tris, bspec = meshmod.generate_slit_tank(m["dx"])
    elif kind == "file":
        verts, tris, bspec = meshmod.read_mesh_file(m["path"])
    else:
        raise ValueError(f"unknown mesh kind {kind!r}")
    primal = meshmod.build_primal(verts, tris, bspec)
    return primal, meshmod.build_dual(primal)


def _const_data(h, qx, qy):
    def fn(x, y, t):
        z = np.zeros_like(np.asarray(x, dtype=float))
        return h + z, qx + z, qy + z
    return fn


def case_fields(case: CaseSpec, g):
    """Initial fields, boundary data map and exact solution of a case.

    Returns (eta_fn, v_fn, b_fn, bc_map, exact) where exact is None or a
    dict with time-dependent callables for eta and the velocity.
    """
    fam = case.family
    p = case.params

    if fam == "vortex":
        h0 = p["h0"]

        def eta_fn(x, y):
            return vortex_exact(x, y, h0, g)[2]

        def v_fn(x, y):
            v1, v2, _ = vortex_exact(x, y, h0, g)
            return v1, v2

        b_fn = lambda x, y: np.zeros_like(np.asarray(x, float))
        exact = {
            "eta": lambda x, y, t: vortex_exact(x, y, h0, g)[2],
            "v": lambda x, y, t: vortex_exact(x, y, h0, g)[:2],
        }
        return eta_fn, v_fn, b_fn, {}, exact

    if fam == "riemann":
        el, er = p["eta_l"], p["eta_r"]
        ul, ur = p["u_l"], p["u_r"]
        bl, br = p["b_l"], p["b_r"]
        xc = p["x_c"]
        hl, hr = el - bl, er - br
        flat = bl == br

        eta_fn = lambda x, y: np.where(x <= xc, el, er)
        v_fn = lambda x, y: (np.where(x <= xc, ul, ur), np.zeros_like(np.asarray(x, float)))
        b_fn = lambda x, y: np.where(x <= xc, bl, br)

        if flat:
            def exact_h_u(x, t):
                x = np.asarray(x, dtype=float)
                if t <= 1e-12:
                    return np.where(x <= xc, hl, hr), np.where(x <= xc, ul, ur)
                return exact_riemann_flat(hl, ul, hr, ur, g, (x - xc) / t)

            def bc_data(x, y, t):
                h, u = exact_h_u(x, t)
                return h, h * u, np.zeros_like(h)

            exact = {
                "eta": lambda x, y, t: exact_h_u(x, t)[0] + bl,
                "v": lambda x, y, t: (exact_h_u(x, t)[1], np.zeros_like(np.asarray(x, float))),
                "h_u": exact_h_u,
            }
        else:
            def bc_data(x, y, t):
                h = np.where(x <= xc, hl, hr)
                u = np.where(x <= xc, ul, ur)
                return h, h * u, np.zeros_like(h)

            exact = None
        return eta_fn, v_fn, b_fn, {"exact": bc_data}, exact

    if fam == "leveque":
        eps = p["eps"]
        b_fn = lambda x, y: 0.8 * np.exp(-5.0 * (x + 0.1) ** 2 - 50.0 * y * y)
        eta_fn = lambda x, y: np.where((x >= -0.95) & (x <= -0.85), 1.0 + eps, 1.0)
        v_fn = lambda x, y: (np.zeros_like(np.asarray(x, float)),) * 2
        return eta_fn, v_fn, b_fn, {"exact": _const_data(1.0, 0.0, 0.0)}, None

    if fam == "cosine_bump":
        eps = p["eps"]

        def b_fn(x, y):
            x = np.asarray(x, dtype=float)
            bump = 0.25 * (np.cos(10.0 * np.pi * (x - 1.5)) + 1.0)
            return np.where((x >= 1.4) & (x <= 1.6), bump, 0.0)

        eta_fn = lambda x, y: np.where((x >= 1.1) & (x <= 1.2), 1.0 + eps, 1.0)
        v_fn = lambda x, y: (np.zeros_like(np.asarray(x, float)),) * 2
        return eta_fn, v_fn, b_fn, {"exact": _const_data(1.0, 0.0, 0.0)}, None

    if fam == "circular_dambreak":
        def rad(x, y):
            return np.sqrt(np.asarray(x, float) ** 2 + np.asarray(y, float) ** 2)

        b_fn = lambda x, y: np.where(rad(x, y) <= 1.0, 0.2, 0.0)
        eta_fn = lambda x, y: np.where(rad(x, y) <= 1.0, 1.0, 0.5)
        v_fn = lambda x, y: (np.zeros_like(np.asarray(x, float)),) * 2
        return eta_fn, v_fn, b_fn, {}, None

    if fam == "cylinder":
        vm, rc, eta0 = p["v_m"], p["r_c"], p["eta0"]

        def eta_fn(x, y):
            return cylinder_potential_cartesian(x, y, vm, rc, eta0, g)[2]

        def v_fn(x, y):
            vx, vy, _ = cylinder_potential_cartesian(x, y, vm, rc, eta0, g)
            return vx, vy

        b_fn = lambda x, y: np.zeros_like(np.asarray(x, float))
        exact = {
            "eta": lambda x, y, t: cylinder_potential_cartesian(x, y, vm, rc, eta0, g)[2],
            "v": lambda x, y, t: cylinder_potential_cartesian(x, y, vm, rc, eta0, g)[:2],
        }
        bc = {"inflow": _const_data(eta0, eta0 * vm, 0.0)}
        return eta_fn, v_fn, b_fn, bc, exact

    if fam == "blunt_body":
        h0 = p["h0"]
        u0 = p["froude"] * math.sqrt(g * h0)
        eta_fn = lambda x, y: np.full_like(np.asarray(x, float), h0)
        v_fn = lambda x, y: (np.full_like(np.asarray(x, float), u0),
                             np.zeros_like(np.asarray(x, float)))
        b_fn = lambda x, y: np.zeros_like(np.asarray(x, float))
        return eta_fn, v_fn, b_fn, {"inflow": _const_data(h0, h0 * u0, 0.0)}, None

    if fam == "dambreak_plane":
        h_tank = p["h_tank"]
        eta_fn = lambda x, y: np.where(np.asarray(x, float) <= 0.0, h_tank, 0.0)
        v_fn = lambda x, y: (np.zeros_like(np.asarray(x, float)),) * 2
        b_fn = lambda x, y: np.zeros_like(np.asarray(x, float))
        return eta_fn, v_fn, b_fn, {}, None

    raise ValueError(f"unknown case family {fam!r}")


def prepare(case: CaseSpec, resolution=None) -> Simulation:
    """Build a ready-to-run simulation from a case description."""
    if resolution is not None:
        case = with_resolution(case, resolution)
    primal, dual = build_mesh(case)
    eta_fn, v_fn, b_fn, bc_map, exact = case_fields(case, case.physics.g)
    state = initial_state(primal, dual, eta_fn, v_fn, b_fn)
    sim = Simulation(primal, dual, state, case.physics, case.numerics,
                     bc_map=bc_map, gauges=case.gauges)
    sim.case = case
    sim.exact = exact
    return sim
