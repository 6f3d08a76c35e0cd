"""Discrete unknowns on the staggered grids and derived pointwise quantities.

Free surface eta and bottom b live at primal vertices, the momentum q and a
precomputed bottom live at dual cells.  Water depth is h = eta - b, clamped
at zero in dry regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from hybridswe.mesh import DualMesh, PrimalMesh


@dataclass
class PhysicalParams:
    g: float = 9.81
    n_manning: float = 0.0

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("gravity must be positive")
        if self.n_manning < 0:
            raise ValueError("Manning coefficient must be nonnegative")


@dataclass
class NumericsConfig:
    """Scheme parameters.

    ``mode`` selects the free-surface solve: ``wp1`` backward Euler, ``wp2``
    theta method, ``wp3`` pressure correction; ``auto`` picks wp2 when
    theta < 1 and wp1 otherwise.  ``dt_fixed`` bypasses the CFL time step
    (convergence-study protocol).
    """

    cfl: float = 0.5
    theta: float = 1.0
    c_alpha: float = 0.0
    fe_rusanov: bool = False
    use_lader: bool = True
    eps_vel: float = 1e-7
    h_dry: float = 1e-6
    dt_max: float = math.inf
    dt_fixed: float | None = None
    cg_tol: float = 1e-12
    cg_maxiter: int = 5000
    mode: str = "auto"

    def __post_init__(self):
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0.5, 1]")
        for name in ("cfl", "c_alpha", "eps_vel", "h_dry", "dt_max", "cg_tol"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.dt_fixed is not None and self.dt_fixed < 0:
            raise ValueError("dt_fixed must be nonnegative")
        if self.mode not in ("auto", "wp1", "wp2", "wp3"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def resolve_mode(self):
        if self.mode != "auto":
            return self.mode
        return "wp2" if self.theta < 1.0 else "wp1"


@dataclass
class State:
    """Discrete solution at one time level."""

    eta: np.ndarray       # (NV,)
    q: np.ndarray         # (ND, 2)
    b_vertex: np.ndarray  # (NV,)
    b_dual: np.ndarray    # (ND,)
    t: float = 0.0

    def copy(self):
        return State(self.eta.copy(), self.q.copy(), self.b_vertex, self.b_dual, self.t)

    def check(self, primal: PrimalMesh, dual: DualMesh, eps_neg=1e-12):
        if len(self.eta) != primal.num_vertices or len(self.b_vertex) != primal.num_vertices:
            raise ValueError("vertex array length mismatch")
        if self.q.shape != (dual.num_cells, 2) or len(self.b_dual) != dual.num_cells:
            raise ValueError("dual array length mismatch")
        if not (np.isfinite(self.eta).all() and np.isfinite(self.q).all()):
            raise ValueError("non-finite state values")
        if np.min(self.eta - self.b_vertex) < -eps_neg:
            raise ValueError("negative water depth beyond tolerance")


def initial_state(primal: PrimalMesh, dual: DualMesh, eta_fn, v_fn, b_fn) -> State:
    """Evaluate closed-form initial fields on the staggered grids.

    Momentum is sampled pointwise at the dual nodes; the dual bottom is the
    mean of the owning edge's endpoint values.  Periodic slave vertices copy
    their master so identified unknowns start bitwise equal.
    """
    xv, yv = primal.vertices[:, 0], primal.vertices[:, 1]
    b = np.asarray(b_fn(xv, yv), dtype=float) + np.zeros_like(xv)
    eta = np.asarray(eta_fn(xv, yv), dtype=float) + np.zeros_like(xv)
    b = primal.sync_vertex_field(b)
    eta = primal.sync_vertex_field(eta)

    b_dual = 0.5 * (b[dual.dual_vpair[:, 0]] + b[dual.dual_vpair[:, 1]])
    xn, yn = dual.node[:, 0], dual.node[:, 1]
    v1, v2 = v_fn(xn, yn)
    eta_n = np.asarray(eta_fn(xn, yn), dtype=float) + np.zeros_like(xn)
    b_n = np.asarray(b_fn(xn, yn), dtype=float) + np.zeros_like(xn)
    h_n = np.maximum(eta_n - b_n, 0.0)
    q = np.column_stack([h_n * (v1 + np.zeros_like(xn)), h_n * (v2 + np.zeros_like(xn))])

    return State(eta=eta, q=q, b_vertex=b, b_dual=b_dual, t=0.0)


def element_depth(eta3, b3):
    """Element water depth, vertex average of eta - b clamped at zero."""
    eta3 = np.asarray(eta3, dtype=float)
    b3 = np.asarray(b3, dtype=float)
    h = (eta3 - b3).mean(axis=-1)
    return np.maximum(h, 0.0)


def element_depths(primal: PrimalMesh, eta, b):
    """Clamped average depth of every element."""
    return element_depth(np.asarray(eta)[primal.triangles], np.asarray(b)[primal.triangles])


def dual_depth(dual: DualMesh, eta, b_dual):
    """Clamped depth at dual cells from endpoint-averaged eta."""
    eta = np.asarray(eta, dtype=float)
    em = 0.5 * (eta[dual.dual_vpair[:, 0]] + eta[dual.dual_vpair[:, 1]])
    return np.maximum(em - b_dual, 0.0)


def velocity_from_momentum(q, h, eps_vel=1e-7):
    """Regularized velocity v = h q / (h^2 + eps), total in dry cells."""
    q = np.asarray(q, dtype=float)
    h = np.asarray(h, dtype=float)
    scale = h / (h * h + eps_vel)
    return q * scale[..., None] if q.ndim > h.ndim else q * scale


def eigenvalues(h, v, unit_normal, subsystem="full", g=9.81):
    """Wave speeds of the chosen subsystem along a unit normal.

    full: u-c, 0, u, u+c; convective: 0, 0, u, 2u; pressure: -c, 0, 0, c.
    """
    v = np.asarray(v, dtype=float)
    n = np.asarray(unit_normal, dtype=float)
    un = v[..., 0] * n[..., 0] + v[..., 1] * n[..., 1]
    c = np.sqrt(g * np.maximum(h, 0.0))
    zero = np.zeros_like(un)
    if subsystem == "full":
        lams = (un - c, zero, un, un + c)
    elif subsystem == "convective":
        lams = (zero, zero, un, 2.0 * un)
    elif subsystem == "pressure":
        lams = (-c, zero, zero, c)
    else:
        raise ValueError(f"unknown subsystem {subsystem!r}")
    return np.stack(np.broadcast_arrays(*lams), axis=-1)


def friction_gamma(h, speed, params: PhysicalParams, h_dry=1e-6):
    """Manning friction coefficient g n^2 |v| / h^(4/3), depth clamped."""
    if params.n_manning == 0.0:
        return np.zeros_like(np.asarray(h, dtype=float))
    h = np.maximum(np.asarray(h, dtype=float), h_dry)
    return params.g * params.n_manning ** 2 * np.asarray(speed) / h ** (4.0 / 3.0)
