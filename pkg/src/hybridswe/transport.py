"""Explicit Godunov-type transport stage on the staggered dual grid.

Computes the intermediate momentum from the nonlinear convective subsystem
with a modified Rusanov flux, optionally raised to second order by a local
predictor: nonconforming per-element gradients, a two-candidate ENO
selection, boundary extrapolation at the interface midpoints and a
half-time evolution of the extrapolated momentum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hybridswe.mesh import DualMesh, PrimalMesh
from hybridswe.state import NumericsConfig, velocity_from_momentum


class TransportError(RuntimeError):
    """Non-finite flux or invalid boundary setup during the FV stage."""


@dataclass
class BoundaryGroups:
    """Boundary interfaces grouped by condition kind.

    ``dirichlet`` pairs index arrays with data functions
    ``f(x, y, t) -> (h, qx, qy)``; wall and outflow groups need no data.
    """

    wall: np.ndarray
    outflow: np.ndarray
    dirichlet: list


def group_boundaries(dual: DualMesh, bc_map=None) -> BoundaryGroups:
    """Resolve boundary tags into vectorized groups.

    ``bc_map`` maps tags to "wall", "outflow" or a data callable; wall and
    outflow tags resolve to themselves when absent.
    """
    bc_map = bc_map or {}
    tags = np.array(dual.bface_tag, dtype=object)
    wall, outflow, dirichlet = [], [], []
    for tag in sorted({str(t) for t in dual.bface_tag}):
        idx = np.flatnonzero(tags == tag)
        spec = bc_map.get(tag)
        if spec is None and tag in ("wall", "outflow"):
            spec = tag
        if spec == "wall":
            wall.append(idx)
        elif spec == "outflow":
            outflow.append(idx)
        elif callable(spec):
            dirichlet.append((idx, spec))
        else:
            raise TransportError(f"no boundary data for tag {tag!r}")
    cat = lambda parts: np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    return BoundaryGroups(wall=cat(wall), outflow=cat(outflow), dirichlet=dirichlet)


def normal_momentum_flux(h, q, normal, eps_vel=1e-7):
    """Convective flux through a face, v (q . n) with regularized velocity."""
    q = np.asarray(q, dtype=float)
    n = np.asarray(normal, dtype=float)
    v = velocity_from_momentum(q, np.asarray(h, dtype=float), eps_vel)
    qn = q[..., 0] * n[..., 0] + q[..., 1] * n[..., 1]
    return v * qn[..., None]


def cr_gradient(points, values):
    """Gradient of the unique linear function through three point values."""
    p = np.asarray(points, dtype=float)
    w = np.asarray(values, dtype=float)
    a00, a01 = p[1, 0] - p[0, 0], p[1, 1] - p[0, 1]
    a10, a11 = p[2, 0] - p[0, 0], p[2, 1] - p[0, 1]
    det = a00 * a11 - a01 * a10
    if abs(det) < 1e-300:
        raise TransportError("degenerate element in gradient reconstruction")
    r0, r1 = w[1] - w[0], w[2] - w[0]
    return np.array([(a11 * r0 - a01 * r1) / det, (-a10 * r0 + a00 * r1) / det])


def element_gradients(primal: PrimalMesh, dual: DualMesh, w_dual):
    """Per-element gradients of dual-cell fields via the edge-midpoint basis.

    ``w_dual`` has shape (ND,) or (ND, F); returns (NT, 2) or (NT, F, 2).
    """
    w = np.asarray(w_dual, dtype=float)
    squeeze = w.ndim == 1
    if squeeze:
        w = w[:, None]
    # the basis of edge (m, m+1) is 1 - 2 lambda_{m+2}
    cr_g = -2.0 * primal.grad_phi[:, [2, 0, 1], :]
    vals = w[dual.tri_dual]                        # (NT, 3, F)
    out = np.einsum("kmf,kmd->kfd", vals, cr_g)
    return out[:, 0, :] if squeeze else out


# the host-element candidate must undercut the far-side one by this margin;
# near-ties (smooth data) then resolve to one stencil instead of flickering
ENO_MARGIN = 0.2


def eno_select(grad_far_element, grad_edge_element, n_i, n_ij):
    """Pick the candidate whose increment toward the interface is smaller.

    The far-side element of the cell is preferred on (near) ties; a missing
    far candidate (boundary cell) falls back to the host element.
    """
    d = np.asarray(n_ij, dtype=float) - np.asarray(n_i, dtype=float)
    if grad_far_element is None:
        return np.asarray(grad_edge_element, dtype=float)
    ga = np.asarray(grad_far_element, dtype=float)
    gb = np.asarray(grad_edge_element, dtype=float)
    if abs(gb @ d) < ENO_MARGIN * abs(ga @ d):
        return gb
    return ga


def extrapolate(w_i, grad, n_i, n_ij):
    """Evaluate the reconstruction polynomial at the interface midpoint."""
    d = np.asarray(n_ij, dtype=float) - np.asarray(n_i, dtype=float)
    return w_i + d @ np.asarray(grad, dtype=float)


def half_time_evolve(h_i, q_i, h_j, q_j, unit_normal, dist, dt, eps_vel=1e-7):
    """Advance both interface states by half a step along the normal.

    The convective time derivative is approximated by the directional
    difference of the normal fluxes between the two dual nodes; both sides
    share the same correction.
    """
    zi = normal_momentum_flux(h_i, q_i, unit_normal, eps_vel)
    zj = normal_momentum_flux(h_j, q_j, unit_normal, eps_vel)
    corr = -0.5 * dt / np.asarray(dist, dtype=float)[..., None] * (zj - zi)
    return np.asarray(q_i) + corr, np.asarray(q_j) + corr


def rusanov_flux(h_i, q_i, h_j, q_j, normal, c_alpha=0.0, eps_vel=1e-7):
    """Modified Rusanov flux through a face with weighted normal.

    The dissipation speed is the larger doubled normal velocity plus the
    artificial viscosity contribution c_alpha ||n||; it multiplies the
    momentum jump, so it vanishes identically for fluid at rest.
    """
    q_i = np.asarray(q_i, dtype=float)
    q_j = np.asarray(q_j, dtype=float)
    n = np.asarray(normal, dtype=float)
    v_i = velocity_from_momentum(q_i, np.asarray(h_i, dtype=float), eps_vel)
    v_j = velocity_from_momentum(q_j, np.asarray(h_j, dtype=float), eps_vel)
    vn_i = v_i[..., 0] * n[..., 0] + v_i[..., 1] * n[..., 1]
    vn_j = v_j[..., 0] * n[..., 0] + v_j[..., 1] * n[..., 1]
    alpha = np.maximum(2.0 * np.abs(vn_i), 2.0 * np.abs(vn_j))
    if np.any(np.asarray(c_alpha) != 0.0):
        alpha = alpha + c_alpha * np.linalg.norm(n, axis=-1)
    qn_i = q_i[..., 0] * n[..., 0] + q_i[..., 1] * n[..., 1]
    qn_j = q_j[..., 0] * n[..., 0] + q_j[..., 1] * n[..., 1]
    central = 0.5 * (v_i * qn_i[..., None] + v_j * qn_j[..., None])
    return central - 0.5 * alpha[..., None] * (q_j - q_i)


def _interface_states(primal, dual, q, h, dt, config):
    """Left/right (h, q) states at interior interfaces, first order or LADER."""
    left, right = dual.iface_left, dual.iface_right
    w = np.column_stack([h, q])                    # (ND, 3)
    wl = w[left].copy()
    wr = w[right].copy()
    if not config.use_lader:
        return wl[:, 0], wl[:, 1:], wr[:, 0], wr[:, 1:]

    grads = element_gradients(primal, dual, w)     # (NT, 3, 2)
    g_edge = grads[dual.iface_tri]

    def select(other_tri, dx):
        g_oth = grads[np.where(other_tri >= 0, other_tri, 0)]
        inc_oth = np.abs(np.einsum("kfd,kd->kf", g_oth, dx))
        inc_oth[other_tri < 0] = np.inf
        inc_edge = np.abs(np.einsum("kfd,kd->kf", g_edge, dx))
        use_edge = inc_edge < ENO_MARGIN * inc_oth
        return np.where(use_edge[..., None], g_edge, g_oth)

    gl = select(dual.iface_left_other, dual.iface_dxl)
    gr = select(dual.iface_right_other, dual.iface_dxr)
    wl_rec = wl + np.einsum("kfd,kd->kf", gl, dual.iface_dxl)
    wr_rec = wr + np.einsum("kfd,kd->kf", gr, dual.iface_dxr)

    # dry-front limiter: fall back to first order near vanishing depth or
    # whenever the reconstruction produces a negative depth
    bad = (wl_rec[:, 0] < 0.0) | (wr_rec[:, 0] < 0.0)
    bad |= np.minimum(wl[:, 0], wr[:, 0]) < config.h_dry
    wl_rec[bad] = wl[bad]
    wr_rec[bad] = wr[bad]

    hl, ql = wl_rec[:, 0], wl_rec[:, 1:]
    hr, qr = wr_rec[:, 0], wr_rec[:, 1:]

    nlen = np.linalg.norm(dual.iface_normal, axis=1)
    un = dual.iface_normal / nlen[:, None]
    ql_ev, qr_ev = half_time_evolve(hl, ql, hr, qr, un, dual.iface_dist, dt,
                                    config.eps_vel)
    ql = np.where(bad[:, None], ql, ql_ev)
    qr = np.where(bad[:, None], qr, qr_ev)
    return hl, ql, hr, qr


def _boundary_fluxes(dual, q, h, bgroups, t, config):
    """Ghost-state Rusanov fluxes on the non-periodic boundary faces."""
    nb = len(dual.bface_cell)
    flux = np.zeros((nb, 2))
    eps = config.eps_vel

    for idx in (bgroups.wall,):
        if len(idx) == 0:
            continue
        cell = dual.bface_cell[idx]
        n = dual.bface_normal[idx]
        nlen = np.linalg.norm(n, axis=1)
        un = n / nlen[:, None]
        qi = q[cell]
        qn = qi[:, 0] * un[:, 0] + qi[:, 1] * un[:, 1]
        qg = qi - 2.0 * qn[:, None] * un
        flux[idx] = rusanov_flux(h[cell], qi, h[cell], qg, n, config.c_alpha, eps)

    if len(bgroups.outflow):
        idx = bgroups.outflow
        cell = dual.bface_cell[idx]
        qi = q[cell]
        flux[idx] = rusanov_flux(h[cell], qi, h[cell], qi, dual.bface_normal[idx],
                                 config.c_alpha, eps)

    for idx, fn in bgroups.dirichlet:
        if len(idx) == 0:
            continue
        cell = dual.bface_cell[idx]
        mid = dual.bface_mid[idx]
        hg, qgx, qgy = fn(mid[:, 0], mid[:, 1], t)
        hg = np.asarray(hg, dtype=float) + np.zeros(len(idx))
        qg = np.column_stack([qgx + np.zeros(len(idx)), qgy + np.zeros(len(idx))])
        flux[idx] = rusanov_flux(h[cell], q[cell], hg, qg, dual.bface_normal[idx],
                                 config.c_alpha, eps)
    return flux


def transport_step(primal: PrimalMesh, dual: DualMesh, q, h, bgroups: BoundaryGroups,
                   dt, config: NumericsConfig, t=0.0):
    """One explicit FV update of the momentum, returning the intermediate q*.

    ``q`` and ``h`` are the dual-cell momentum and clamped depth at the
    current time level.  The flux sum over each cell's interfaces is
    accumulated in a fixed canonical order, so the result is deterministic.
    """
    q = np.asarray(q, dtype=float)
    h = np.asarray(h, dtype=float)
    nd = dual.num_cells

    hl, ql, hr, qr = _interface_states(primal, dual, q, h, dt, config)
    phi = rusanov_flux(hl, ql, hr, qr, dual.iface_normal, config.c_alpha,
                       config.eps_vel)

    acc = np.empty((nd, 2))
    for d in range(2):
        acc[:, d] = np.bincount(dual.iface_left, weights=phi[:, d], minlength=nd)
        acc[:, d] -= np.bincount(dual.iface_right, weights=phi[:, d], minlength=nd)

    if len(dual.bface_cell):
        bflux = _boundary_fluxes(dual, q, h, bgroups, t, config)
        for d in range(2):
            acc[:, d] += np.bincount(dual.bface_cell, weights=bflux[:, d], minlength=nd)

    q_star = q - (dt / dual.area)[:, None] * acc
    if not np.isfinite(q_star).all():
        bad = int(np.flatnonzero(~np.isfinite(q_star).all(axis=1))[0])
        raise TransportError(
            f"non-finite transport update in dual cell {bad}: "
            f"q={q[bad]}, h={h[bad]}, node={dual.node[bad]}"
        )
    return q_star
