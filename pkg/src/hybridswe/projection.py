"""Continuous P1 finite-element solve of the free-surface wave equation.

The implicit system matrix is M + dt^2 theta^2 g K(c) with elementwise
coefficient c = h / (1 + dt gamma), optionally augmented by an element-local
Rusanov dissipation matrix.  The solve is always performed in increment
form: stiffness contributions on the right-hand side are evaluated
element-by-element through vertex differences, which makes lake-at-rest
states bitwise stationary for every scheme variant.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from hybridswe.mesh import DualMesh, PrimalMesh
from hybridswe.sparse import CgResult, SolverError, SparseSym, cg

_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


class FreeSurfaceSystem:
    """Assembly workspace bound to one staggered mesh pair.

    Degrees of freedom are the periodic-identified vertices; the fixed
    sparsity pattern of mass, stiffness and stabilization matrices is
    computed once, so per-step assembly is a single weighted bincount.
    """

    def __init__(self, primal: PrimalMesh, dual: DualMesh | None = None):
        self.primal = primal
        self.dual = dual
        nv = primal.num_vertices

        masters = np.flatnonzero(primal.vertex_master == np.arange(nv))
        vertex_dof = np.full(nv, -1, dtype=np.int64)
        vertex_dof[masters] = np.arange(len(masters))
        self.vertex_dof = vertex_dof[primal.vertex_master]
        self.rep_vertex = masters
        self.ndof = len(masters)
        self.tri_dof = self.vertex_dof[primal.triangles]

        area = primal.tri_area
        g = primal.grad_phi
        self.mass_blocks = area[:, None, None] * _MASS_REF[None, :, :]
        self.stiff_blocks = area[:, None, None] * np.einsum("kld,krd->klr", g, g)

        x = primal.vertices[primal.triangles]
        self.perimeter = (
            np.linalg.norm(x[:, 1] - x[:, 0], axis=1)
            + np.linalg.norm(x[:, 2] - x[:, 1], axis=1)
            + np.linalg.norm(x[:, 0] - x[:, 2], axis=1)
        )

        rows = np.repeat(self.tri_dof, 3, axis=1).ravel()
        cols = np.tile(self.tri_dof, (1, 3)).ravel()
        pattern = sp.coo_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(self.ndof, self.ndof)
        ).tocsr()
        pattern.sum_duplicates()
        pattern.sort_indices()
        self.indptr = pattern.indptr
        self.indices = pattern.indices
        self.nnz = pattern.nnz
        row_of_entry = np.repeat(np.arange(self.ndof), np.diff(self.indptr))
        keys = row_of_entry * np.int64(self.ndof) + self.indices
        self.pos = np.searchsorted(keys, rows * np.int64(self.ndof) + cols)

        self.mass_data = self._accumulate(self.mass_blocks)
        self.lumped_dof = np.bincount(
            self.tri_dof.ravel(), weights=np.repeat(area / 3.0, 3), minlength=self.ndof
        )

        if dual is not None:
            self.bface_dofs = self.vertex_dof[primal.edges[dual.bface_edge]]

    def _accumulate(self, blocks):
        return np.bincount(self.pos, weights=blocks.ravel(), minlength=self.nnz)

    def _to_csr(self, data):
        return SparseSym(
            sp.csr_matrix((data, self.indices, self.indptr), shape=(self.ndof, self.ndof))
        )

    # -- matrices -----------------------------------------------------------

    def mass_matrix(self) -> SparseSym:
        return self._to_csr(self.mass_data.copy())

    def stiffness_matrix(self, c_elem) -> SparseSym:
        c = np.asarray(c_elem, dtype=float)
        return self._to_csr(self._accumulate(c[:, None, None] * self.stiff_blocks))

    def stabilization_matrix(self, lam_elem, dt) -> SparseSym:
        return self._to_csr(self._accumulate(self._stab_coeff(lam_elem, dt)))

    def _stab_coeff(self, lam_elem, dt):
        coeff = dt * self.primal.tri_area / self.perimeter * np.asarray(lam_elem, float)
        return coeff[:, None, None] * self.stiff_blocks

    def system_matrix(self, c_elem, stiff_factor, lam_elem=None, dt=0.0) -> SparseSym:
        """M + stiff_factor K(c), plus the Rusanov term when lam_elem is given."""
        blocks = (stiff_factor * np.asarray(c_elem, float))[:, None, None] * self.stiff_blocks
        if lam_elem is not None:
            blocks = blocks + self._stab_coeff(lam_elem, dt)
        return self._to_csr(self.mass_data + self._accumulate(blocks))

    # -- vectors ------------------------------------------------------------

    def restrict(self, vertex_values):
        return np.asarray(vertex_values, dtype=float)[self.rep_vertex]

    def scatter(self, dof_values):
        return np.asarray(dof_values, dtype=float)[self.vertex_dof]

    def element_gradient(self, eta_vertex):
        """Constant P1 gradients, evaluated through vertex differences."""
        eta = np.asarray(eta_vertex, dtype=float)
        t = self.primal.triangles
        d1 = eta[t[:, 1]] - eta[t[:, 0]]
        d2 = eta[t[:, 2]] - eta[t[:, 0]]
        g = self.primal.grad_phi
        return d1[:, None] * g[:, 1, :] + d2[:, None] * g[:, 2, :]

    def volume_rhs(self, vec_elem):
        """Integrals of (vector field . grad z) against all test functions."""
        contrib = self.primal.tri_area[:, None] * np.einsum(
            "kd,kmd->km", np.asarray(vec_elem, float), self.primal.grad_phi
        )
        return np.bincount(self.tri_dof.ravel(), weights=contrib.ravel(),
                           minlength=self.ndof)

    def stiffness_rhs(self, c_elem, eta_vertex):
        """K(c) applied to a vertex field, element by element.

        Evaluating through local differences annihilates constant fields
        exactly, which the well-balanced property relies on.
        """
        ge = self.element_gradient(eta_vertex)
        c = np.asarray(c_elem, dtype=float) * self.primal.tri_area
        contrib = c[:, None] * np.einsum("kd,kmd->km", ge, self.primal.grad_phi)
        return np.bincount(self.tri_dof.ravel(), weights=contrib.ravel(),
                           minlength=self.ndof)

    def boundary_rhs(self, qn_weighted):
        """Boundary integrals of (q . n) z, midpoint value per boundary face."""
        if self.dual is None or len(self.dual.bface_cell) == 0:
            return np.zeros(self.ndof)
        w = 0.5 * np.asarray(qn_weighted, dtype=float)
        out = np.bincount(self.bface_dofs[:, 0], weights=w, minlength=self.ndof)
        out += np.bincount(self.bface_dofs[:, 1], weights=w, minlength=self.ndof)
        return out

    def total_volume(self, eta_vertex):
        return float(self.lumped_dof @ self.restrict(eta_vertex))

    # -- weak-problem right-hand sides (original, non-increment form) -------

    def rhs_wp1(self, eta, qstar_elem, inv_fric_elem, dt, qn_weighted=None):
        """Backward Euler right-hand side: M eta + dt vol(q*/(1+dt g)) - dt bdry."""
        m = self.mass_matrix()
        rhs = m.mat @ self.restrict(eta)
        rhs += dt * self.volume_rhs(np.asarray(qstar_elem) * inv_fric_elem[:, None])
        if qn_weighted is not None:
            rhs -= dt * self.boundary_rhs(qn_weighted)
        return rhs

    def rhs_wp2(self, eta, qstar_elem, qn_elem, c_elem, inv_fric_elem, g, dt, theta,
                qn_weighted=None):
        """Theta-method right-hand side with the explicit stiffness term."""
        qss = (1.0 - theta) * np.asarray(qn_elem, float) + theta * (
            np.asarray(qstar_elem, float) * inv_fric_elem[:, None]
        )
        m = self.mass_matrix()
        rhs = m.mat @ self.restrict(eta)
        rhs += dt * self.volume_rhs(qss)
        rhs -= dt * dt * theta * (1.0 - theta) * g * self.stiffness_rhs(c_elem, eta)
        if qn_weighted is not None:
            rhs -= dt * self.boundary_rhs(qn_weighted)
        return rhs

    def rhs_wp3(self, eta, qstar_elem, h_elem, inv_fric_elem, g, dt, qn_weighted=None):
        """Pressure-correction right-hand side for the increment delta eta."""
        grad_eta = self.element_gradient(eta)
        qss = np.asarray(qstar_elem, float) - dt * g * h_elem[:, None] * grad_eta
        rhs = dt * self.volume_rhs(qss * inv_fric_elem[:, None])
        if qn_weighted is not None:
            rhs -= dt * self.boundary_rhs(qn_weighted)
        return rhs


# ---------------------------------------------------------------------------
# spec-level operation surfaces


def assemble_mass(primal: PrimalMesh) -> SparseSym:
    return FreeSurfaceSystem(primal).mass_matrix()


def assemble_stiffness(primal: PrimalMesh, c_elem) -> SparseSym:
    return FreeSurfaceSystem(primal).stiffness_matrix(c_elem)


def fe_rusanov_stabilization(primal: PrimalMesh, lam_elem, dt) -> SparseSym:
    return FreeSurfaceSystem(primal).stabilization_matrix(lam_elem, dt)


def dual_to_primal(dual: DualMesh, q_dual):
    """Element values as the mean over the element's three dual faces."""
    return np.asarray(q_dual, dtype=float)[dual.tri_dual].mean(axis=1)


def primal_gradient(primal: PrimalMesh, eta):
    """Constant P1 gradient per element of a vertex field."""
    eta = np.asarray(eta, dtype=float)
    t = primal.triangles
    d1 = eta[t[:, 1]] - eta[t[:, 0]]
    d2 = eta[t[:, 2]] - eta[t[:, 0]]
    g = primal.grad_phi
    return d1[:, None] * g[:, 1, :] + d2[:, None] * g[:, 2, :]


def primal_to_dual_gradient(dual: DualMesh, grad_elem):
    """Subtriangle-area weighted average of element gradients per dual cell."""
    grad_elem = np.asarray(grad_elem, dtype=float)
    nd = dual.num_cells
    out = np.empty((nd, 2))
    vals = grad_elem[dual.contrib_tri] * dual.contrib_area[:, None]
    for d in range(2):
        out[:, d] = np.bincount(dual.contrib_dual, weights=vals[:, d], minlength=nd)
    return out / dual.area[:, None]


def momentum_correction(q_base, h_dual, grad_dual, gamma_dual, dt, g):
    """Post-projection update (q - dt g h grad) / (1 + dt gamma) per dual cell.

    ``grad_dual`` is the gradient of the new free surface for the backward
    Euler scheme, of the theta-blended surface for the theta method, and of
    the surface increment in pressure-correction mode (with q_base the
    matching intermediate momentum).
    """
    q_base = np.asarray(q_base, dtype=float)
    num = q_base - dt * g * np.asarray(h_dual, float)[:, None] * np.asarray(grad_dual, float)
    return num / (1.0 + dt * np.asarray(gamma_dual, float))[:, None]


def solve_spd(system: SparseSym, rhs, tol=1e-12, maxiter=None, x0=None) -> CgResult:
    """Jacobi-preconditioned CG with a hard failure on non-convergence."""
    res = cg(system, rhs, x0=x0, tol=tol, maxiter=maxiter)
    if not res.converged:
        raise SolverError(
            f"free-surface solve did not converge in {res.iterations} iterations, "
            f"residual {res.residual:.3e}"
        )
    return res
