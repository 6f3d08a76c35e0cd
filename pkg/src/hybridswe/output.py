"""Simulation output: legacy VTK, gauge CSV files and discrete error norms."""

from __future__ import annotations

import numpy as np

from hybridswe.mesh import DualMesh, PrimalMesh


def vertex_weights(primal: PrimalMesh):
    """Lumped mass per vertex, one third of each incident element area."""
    w = np.zeros(primal.num_vertices)
    np.add.at(w, primal.triangles.ravel(),
              np.repeat(primal.tri_area / 3.0, 3))
    return w


def l2_error_vertex(primal: PrimalMesh, numeric, exact):
    """Lumped-mass weighted L2 norm of a vertex field difference."""
    d = np.asarray(numeric, dtype=float) - np.asarray(exact, dtype=float)
    return float(np.sqrt(np.sum(vertex_weights(primal) * d * d)))


def l2_error_dual(dual: DualMesh, numeric, exact):
    """Cell-area weighted L2 norm of a dual field difference."""
    d = np.asarray(numeric, dtype=float) - np.asarray(exact, dtype=float)
    if d.ndim == 2:
        d = np.linalg.norm(d, axis=1)
    return float(np.sqrt(np.sum(dual.area * d * d)))


def momentum_at_vertices(primal: PrimalMesh, dual: DualMesh, q):
    """Inverse-distance interpolation of dual momentum to vertices.

    Each incident dual cell contributes with weight 2/edge length, the
    distance from its node (the edge midpoint) to the vertex.
    """
    q = np.asarray(q, dtype=float)
    nv = primal.num_vertices
    acc = np.zeros((nv, 2))
    wsum = np.zeros(nv)
    lengths = np.linalg.norm(
        primal.vertices[primal.edges[:, 1]] - primal.vertices[primal.edges[:, 0]],
        axis=1)
    w = 2.0 / lengths
    vals = q[dual.edge_to_dual] * w[:, None]
    for side in (0, 1):
        verts = primal.edges[:, side]
        np.add.at(acc, verts, vals)
        np.add.at(wsum, verts, w)
    return acc / wsum[:, None]


def write_vtk(primal: PrimalMesh, dual: DualMesh, state, path):
    """Legacy ASCII unstructured-grid snapshot with eta, b, h and momentum."""
    h = state.eta - state.b_vertex
    qv = momentum_at_vertices(primal, dual, state.q)
    fmt = lambda x: f"{x:.9g}"
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"hybridswe t={state.t:.9g}\n")
        f.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {primal.num_vertices} double\n")
        for x, y in primal.vertices:
            f.write(f"{fmt(x)} {fmt(y)} 0\n")
        nt = primal.num_triangles
        f.write(f"CELLS {nt} {4 * nt}\n")
        for a, b, c in primal.triangles:
            f.write(f"3 {a} {b} {c}\n")
        f.write(f"CELL_TYPES {nt}\n")
        f.writelines(["5\n"] * nt)
        f.write(f"POINT_DATA {primal.num_vertices}\n")
        for name, vals in (("eta", state.eta), ("b", state.b_vertex), ("h", h)):
            f.write(f"SCALARS {name} double\nLOOKUP_TABLE default\n")
            for v in vals:
                f.write(fmt(v) + "\n")
        f.write("VECTORS momentum double\n")
        for qx, qy in qv:
            f.write(f"{fmt(qx)} {fmt(qy)} 0\n")


def read_vtk_point_data(path):
    """Minimal parser for files produced by write_vtk, used for round trips."""
    fields = {}
    with open(path) as f:
        lines = f.read().splitlines()
    i = 0
    points = []
    while i < len(lines):
        tok = lines[i].split()
        if tok and tok[0] == "POINTS":
            n = int(tok[1])
            points = [tuple(map(float, lines[i + 1 + k].split()[:2]))
                      for k in range(n)]
            i += n
        elif tok and tok[0] == "SCALARS":
            name, n = tok[1], len(points)
            vals = [float(lines[i + 2 + k]) for k in range(n)]
            fields[name] = np.array(vals)
            i += n + 1
        elif tok and tok[0] == "VECTORS":
            name, n = tok[1], len(points)
            vals = [tuple(map(float, lines[i + 1 + k].split()[:2]))
                    for k in range(n)]
            fields[name] = np.array(vals)
            i += n
        i += 1
    return np.array(points), fields


def write_gauges_csv(times, values, path, names=None):
    """Gauge time series, one row per sample: t,g1,...,gn."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    ng = values.shape[1] if values.size else 0
    names = names or [f"g{i + 1}" for i in range(ng)]
    with open(path, "w") as f:
        f.write("t," + ",".join(names) + "\n")
        for t, row in zip(times, values):
            f.write(f"{t:.12g}," + ",".join(f"{v:.12g}" for v in row) + "\n")


def midline_cells(dual: DualMesh, y_mid, half_width):
    """Dual cells within half a row height of the midline, sorted by x."""
    sel = np.flatnonzero(np.abs(dual.node[:, 1] - y_mid) < half_width)
    return sel[np.argsort(dual.node[sel, 0], kind="stable")]
