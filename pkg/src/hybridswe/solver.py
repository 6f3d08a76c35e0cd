"""Semi-implicit time loop: transport, projection, correction.

Each step runs the explicit FV transport stage for the intermediate
momentum, interpolates it to the primal elements, solves the implicit P1
system for the free-surface increment and corrects the dual momentum with
the interpolated surface gradient.  The time step follows the convective
eigenvalues only, so the surface celerity never restricts it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hybridswe.mesh import DualMesh, PrimalMesh
from hybridswe.projection import (
    FreeSurfaceSystem,
    dual_to_primal,
    momentum_correction,
    primal_to_dual_gradient,
    solve_spd,
)
from hybridswe.state import (
    NumericsConfig,
    PhysicalParams,
    State,
    dual_depth,
    element_depths,
    friction_gamma,
    velocity_from_momentum,
)
from hybridswe.transport import BoundaryGroups, group_boundaries, transport_step


def compute_dt(dual: DualMesh, v_dual, config: NumericsConfig):
    """CFL step from the convective speeds, dt_max when the flow is at rest.

    The governing eigenvalue per cell is 2|v|; cells slower than 1e-14 do
    not restrict the step.
    """
    speed = 2.0 * np.linalg.norm(np.asarray(v_dual, dtype=float), axis=-1)
    moving = speed > 1e-14
    if not moving.any():
        return config.dt_max
    dt = config.cfl * float(np.min(dual.incircle[moving] / speed[moving]))
    return min(dt, config.dt_max)


@dataclass
class RunResult:
    state: State
    steps: int
    gauge_times: np.ndarray
    gauge_values: np.ndarray
    dt_history: np.ndarray
    cg_iterations: np.ndarray
    errors: dict | None = None


class Simulation:
    """One run of the hybrid scheme on a fixed mesh.

    ``bc_map`` resolves boundary tags to wall/outflow or data callables,
    ``gauges`` are probe points sampled at the nearest primal vertex after
    every step.
    """

    def __init__(self, primal: PrimalMesh, dual: DualMesh, state: State,
                 params: PhysicalParams = None, config: NumericsConfig = None,
                 bc_map=None, gauges=()):
        self.primal = primal
        self.dual = dual
        self.state = state
        self.params = params or PhysicalParams()
        self.config = config or NumericsConfig()
        self.bgroups = group_boundaries(dual, bc_map)
        self.fss = FreeSurfaceSystem(primal, dual)
        self.steps = 0
        self.dt_history = []
        self.cg_iterations = []
        self.wet_cells = 0
        self.max_speed = 0.0
        self._delta_prev = np.zeros(self.fss.ndof)

        self.gauge_points = np.atleast_2d(np.asarray(gauges, dtype=float)) \
            if len(gauges) else np.empty((0, 2))
        if len(self.gauge_points):
            d2 = ((primal.vertices[:, None, :] - self.gauge_points[None, :, :]) ** 2).sum(axis=2)
            self.gauge_vertices = np.argmin(d2, axis=0)
        else:
            self.gauge_vertices = np.empty(0, dtype=np.int64)
        self.gauge_times = []
        self.gauge_values = []
        self._record_gauges()

    def _record_gauges(self):
        if len(self.gauge_vertices):
            self.gauge_times.append(self.state.t)
            self.gauge_values.append(self.state.eta[self.gauge_vertices].copy())

    def proposed_dt(self):
        if self.config.dt_fixed is not None:
            return min(self.config.dt_fixed, self.config.dt_max)
        h = dual_depth(self.dual, self.state.eta, self.state.b_dual)
        v = velocity_from_momentum(self.state.q, h, self.config.eps_vel)
        return compute_dt(self.dual, v, self.config)

    def _boundary_qn(self, q_star, q_n, gamma_dual, t_new, theta, blend):
        """Weighted normal momentum per boundary face for the surface solve."""
        dual = self.dual
        nb = len(dual.bface_cell)
        vals = np.zeros(nb)
        if nb == 0:
            return vals
        n = dual.bface_normal
        dt = t_new - self.state.t

        idx = self.bgroups.outflow
        if len(idx):
            cell = dual.bface_cell[idx]
            qt = q_star[cell] / (1.0 + dt * gamma_dual[cell])[:, None]
            new = qt[:, 0] * n[idx, 0] + qt[:, 1] * n[idx, 1]
            if blend:
                old = q_n[cell, 0] * n[idx, 0] + q_n[cell, 1] * n[idx, 1]
                new = (1.0 - theta) * old + theta * new
            vals[idx] = new
        for idx, fn in self.bgroups.dirichlet:
            if len(idx) == 0:
                continue
            mid = dual.bface_mid[idx]
            t_eval = self.state.t + theta * dt if blend else t_new
            _, qx, qy = fn(mid[:, 0], mid[:, 1], t_eval)
            vals[idx] = qx * n[idx, 0] + qy * n[idx, 1]
        return vals

    def step(self, dt=None):
        """Advance one time step; the state is only replaced on success."""
        if dt is None:
            dt = self.proposed_dt()
        if not np.isfinite(dt) or dt < 0:
            raise ValueError(f"invalid time step {dt}")
        cfg, par, fss = self.config, self.params, self.fss
        s = self.state
        g = par.g
        mode = cfg.resolve_mode()
        theta = cfg.theta if mode == "wp2" else 1.0

        h_dual = dual_depth(self.dual, s.eta, s.b_dual)
        v_dual = velocity_from_momentum(s.q, h_dual, cfg.eps_vel)
        speed_dual = np.linalg.norm(v_dual, axis=1)
        gamma_dual = friction_gamma(h_dual, speed_dual, par, cfg.h_dry)

        q_star = transport_step(self.primal, self.dual, s.q, h_dual, self.bgroups,
                                dt, cfg, s.t)

        qs_elem = dual_to_primal(self.dual, q_star)
        h_elem = element_depths(self.primal, s.eta, s.b_vertex)
        qn_elem = dual_to_primal(self.dual, s.q)
        v_elem = velocity_from_momentum(qn_elem, h_elem, cfg.eps_vel)
        gamma_elem = friction_gamma(h_elem, np.linalg.norm(v_elem, axis=1), par, cfg.h_dry)
        inv_fric = 1.0 / (1.0 + dt * gamma_elem)
        c_elem = h_elem * inv_fric
        lam_elem = None
        if cfg.fe_rusanov:
            lam_elem = 2.0 * np.linalg.norm(v_elem, axis=1) + np.sqrt(g * h_elem)

        qn_bdry = self._boundary_qn(q_star, s.q, gamma_dual, s.t + dt, theta,
                                    blend=(mode == "wp2" and theta < 1.0))

        # increment form of the weak problems: stiffness terms act on eta
        # through element differences, so flat states produce a zero rhs
        if mode == "wp1":
            rhs = dt * fss.volume_rhs(qs_elem * inv_fric[:, None])
            rhs -= dt * dt * g * fss.stiffness_rhs(c_elem, s.eta)
        elif mode == "wp2":
            qss = (1.0 - theta) * qn_elem + theta * qs_elem * inv_fric[:, None]
            rhs = dt * fss.volume_rhs(qss)
            rhs -= dt * dt * theta * g * fss.stiffness_rhs(c_elem, s.eta)
        elif mode == "wp3":
            grad_eta_elem = fss.element_gradient(s.eta)
            qss = qs_elem - dt * g * h_elem[:, None] * grad_eta_elem
            rhs = dt * fss.volume_rhs(qss * inv_fric[:, None])
        else:
            raise ValueError(f"unknown mode {mode!r}")
        rhs -= dt * fss.boundary_rhs(qn_bdry)

        system = fss.system_matrix(c_elem, dt * dt * theta * theta * g, lam_elem, dt)
        res = solve_spd(system, rhs, tol=cfg.cg_tol, maxiter=cfg.cg_maxiter,
                        x0=self._delta_prev)
        delta = fss.scatter(res.x)
        eta_new = s.eta + delta

        if mode == "wp3":
            grad_dual = primal_to_dual_gradient(self.dual, fss.element_gradient(delta))
            grad_eta_dual = primal_to_dual_gradient(self.dual, grad_eta_elem)
            q_base = q_star - dt * g * h_dual[:, None] * grad_eta_dual
        else:
            surf = eta_new if theta == 1.0 else s.eta + theta * delta
            grad_dual = primal_to_dual_gradient(self.dual, fss.element_gradient(surf))
            q_base = q_star
        q_new = momentum_correction(q_base, h_dual, grad_dual, gamma_dual, dt, g)

        # cells below the dry threshold carry no momentum; without this the
        # flux dissipation deposits spurious momentum into hair-thin cells
        # whose regularized velocity then collapses the time step
        h_new = dual_depth(self.dual, eta_new, s.b_dual)
        q_new[h_new < cfg.h_dry] = 0.0

        if not (np.isfinite(eta_new).all() and np.isfinite(q_new).all()):
            raise RuntimeError(f"non-finite state after step {self.steps} at t={s.t}")

        self.state = State(eta=eta_new, q=q_new, b_vertex=s.b_vertex,
                           b_dual=s.b_dual, t=s.t + dt)
        self._delta_prev = res.x
        self.steps += 1
        self.dt_history.append(dt)
        self.cg_iterations.append(res.iterations)
        self.wet_cells = int(np.count_nonzero(h_dual > cfg.h_dry))
        self.max_speed = float(2.0 * speed_dual.max()) if len(speed_dual) else 0.0
        self._record_gauges()
        return self.state

    def run(self, end_time, max_steps=10_000_000, on_step=None) -> RunResult:
        """Advance to ``end_time``, truncating the last step to land exactly."""
        tiny = 1e-12 * max(1.0, abs(end_time))
        while self.state.t < end_time - tiny:
            dt = min(self.proposed_dt(), end_time - self.state.t)
            if dt <= 0:
                raise RuntimeError(f"time step collapsed to {dt} at t={self.state.t}")
            try:
                self.step(dt)
            except Exception as exc:
                raise RuntimeError(
                    f"step {self.steps} failed at t={self.state.t:.6g}: {exc}"
                ) from exc
            if on_step is not None:
                on_step(self)
            if self.steps >= max_steps:
                raise RuntimeError(f"exceeded {max_steps} steps at t={self.state.t}")
        return self.result()

    def result(self) -> RunResult:
        gt = np.asarray(self.gauge_times, dtype=float)
        gv = np.asarray(self.gauge_values, dtype=float) if self.gauge_values \
            else np.empty((0, len(self.gauge_vertices)))
        return RunResult(
            state=self.state,
            steps=self.steps,
            gauge_times=gt,
            gauge_values=gv,
            dt_history=np.asarray(self.dt_history, dtype=float),
            cg_iterations=np.asarray(self.cg_iterations, dtype=np.int64),
        )

    def dual_velocity(self):
        h = dual_depth(self.dual, self.state.eta, self.state.b_dual)
        return velocity_from_momentum(self.state.q, h, self.config.eps_vel)

    def total_volume(self):
        return self.fss.total_volume(self.state.eta)
