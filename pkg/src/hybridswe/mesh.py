"""Primal triangular meshes and their edge-based staggered dual meshes.

The free surface lives at the vertices of the primal triangulation, the
momentum lives on dual cells built around the primal edges: an interior
dual cell is the quadrilateral spanned by the edge endpoints and the two
adjacent barycenters, a boundary dual cell is the single triangle spanned
by the edge and its barycenter.

Periodic boundaries are resolved at construction time: paired boundary
edges are merged into a single interior-like dual cell and the paired
vertices are identified through ``vertex_master``, so downstream code never
sees a periodic seam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PLAIN_TAGS = ("wall", "inflow", "outflow", "exact")


class MeshError(ValueError):
    """Invalid or inconsistent mesh input."""


def _perp(v):
    """Rotate 2-vectors by +90 degrees (counterclockwise)."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def triangle_area(p0, p1, p2):
    """Signed area, positive for counterclockwise orientation."""
    p0, p1, p2 = (np.asarray(p, dtype=float) for p in (p0, p1, p2))
    d1 = p1 - p0
    d2 = p2 - p0
    return 0.5 * (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0])


def incircle_diameter_triangle(p0, p1, p2):
    """Diameter of the inscribed circle, 4*area/perimeter."""
    a = abs(triangle_area(p0, p1, p2))
    p0, p1, p2 = (np.asarray(p, dtype=float) for p in (p0, p1, p2))
    per = (
        np.linalg.norm(p1 - p0, axis=-1)
        + np.linalg.norm(p2 - p1, axis=-1)
        + np.linalg.norm(p0 - p2, axis=-1)
    )
    return 4.0 * a / per


def _valid_tag(tag):
    return tag in PLAIN_TAGS or (tag.startswith("periodic:") and len(tag) > 9)


@dataclass
class PrimalMesh:
    """Triangulation with edge connectivity and per-element geometry.

    ``edges`` stores each undirected edge once as a sorted vertex pair.
    ``edge_tri[e]`` holds the one or two adjacent triangles (-1 when absent),
    ``tri_edges[k, m]`` is the edge between local vertices m and m+1 of
    triangle k.  ``grad_phi[k, m]`` is the constant gradient of the P1 basis
    function of local vertex m; the third gradient is derived from the other
    two so the three sum to zero bitwise.
    """

    vertices: np.ndarray        # (NV, 2)
    triangles: np.ndarray       # (NT, 3) counterclockwise
    edges: np.ndarray           # (NE, 2) sorted vertex pairs
    edge_tri: np.ndarray        # (NE, 2) adjacent triangles, -1 if none
    tri_edges: np.ndarray       # (NT, 3)
    edge_tag: list              # str or None per edge
    tri_area: np.ndarray        # (NT,)
    tri_bary: np.ndarray        # (NT, 2)
    grad_phi: np.ndarray        # (NT, 3, 2)
    edge_pair: np.ndarray       # (NE,) periodic partner edge, -1 if none
    vertex_master: np.ndarray   # (NV,) identified vertex representative

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def boundary_edges(self):
        return np.flatnonzero(self.edge_tri[:, 1] < 0)

    @property
    def domain_area(self):
        return float(self.tri_area.sum())

    def edge_midpoints(self):
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    def sync_vertex_field(self, values):
        """Copy identified-master values onto their periodic slaves."""
        return np.asarray(values)[..., self.vertex_master]


@dataclass
class DualMesh:
    """Edge-based staggered cells and their interface tables.

    Interfaces come in two families.  Interior interfaces are the
    barycenter-to-vertex segments inside each primal element; each is stored
    once with its weighted normal pointing from ``iface_left`` to
    ``iface_right``.  Boundary interfaces are the non-periodic boundary edges
    themselves with outward weighted normals.
    """

    num_cells: int
    edge_to_dual: np.ndarray     # (NE,)
    dual_edge: np.ndarray        # (ND,) owning (master) primal edge
    dual_vpair: np.ndarray       # (ND, 2) endpoints of the owning edge
    node: np.ndarray             # (ND, 2) dual node, midpoint of owning edge
    area: np.ndarray             # (ND,)
    incircle: np.ndarray         # (ND,) min subtriangle incircle diameter
    tri_dual: np.ndarray         # (NT, 3) dual cell of each triangle edge

    # subtriangle contributions of primal elements to dual cells
    contrib_dual: np.ndarray     # (NC,)
    contrib_tri: np.ndarray      # (NC,)
    contrib_area: np.ndarray     # (NC,)

    # interior interfaces
    iface_left: np.ndarray       # (NI,)
    iface_right: np.ndarray      # (NI,)
    iface_tri: np.ndarray        # (NI,) containing primal element
    iface_normal: np.ndarray     # (NI, 2) weighted, out of left cell
    iface_mid: np.ndarray        # (NI, 2)
    iface_dxl: np.ndarray        # (NI, 2) midpoint minus local left node
    iface_dxr: np.ndarray        # (NI, 2) midpoint minus local right node
    iface_dist: np.ndarray       # (NI,) local node distance
    iface_left_other: np.ndarray   # (NI,) left ENO candidate element, -1 if none
    iface_right_other: np.ndarray  # (NI,) right ENO candidate element, -1 if none

    # boundary interfaces (non-periodic boundary edges)
    bface_cell: np.ndarray       # (NB,)
    bface_edge: np.ndarray       # (NB,)
    bface_tri: np.ndarray        # (NB,)
    bface_normal: np.ndarray     # (NB, 2) weighted outward
    bface_mid: np.ndarray        # (NB, 2)
    bface_tag: list              # str per boundary interface

    @property
    def total_area(self):
        return float(self.area.sum())


def build_primal(vertices, triangles, boundary_spec):
    """Assemble connectivity and geometry of a triangulation.

    ``boundary_spec`` is an iterable of ``(va, vb, tag)`` covering every
    boundary edge exactly once; tags are wall/inflow/outflow/exact or
    ``periodic:<id>``.  Triangle orientation is normalized counterclockwise.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
        raise MeshError("need at least 3 vertices with 2 coordinates each")
    if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) < 1:
        raise MeshError("need at least 1 triangle with 3 vertex indices")
    if triangles.min() < 0 or triangles.max() >= len(vertices):
        raise MeshError("triangle vertex index out of range")

    scale = max(np.ptp(vertices[:, 0]), np.ptp(vertices[:, 1]), 1.0)

    triangles = triangles.copy()
    area = triangle_area(
        vertices[triangles[:, 0]], vertices[triangles[:, 1]], vertices[triangles[:, 2]]
    )
    flip = area < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    area = np.abs(area)
    if np.any(area <= 1e-14 * scale * scale):
        bad = int(np.argmin(area))
        raise MeshError(f"zero-area triangle {bad}: vertices {triangles[bad].tolist()}")

    seen = set()
    for k, tri in enumerate(triangles):
        key = tuple(sorted(tri.tolist()))
        if key in seen:
            raise MeshError(f"duplicate triangle {k}: vertices {sorted(tri.tolist())}")
        seen.add(key)

    edge_index = {}
    edge_list = []
    edge_tri = []
    tri_edges = np.empty((len(triangles), 3), dtype=np.int64)
    for k, tri in enumerate(triangles):
        for m in range(3):
            a, b = int(tri[m]), int(tri[(m + 1) % 3])
            key = (a, b) if a < b else (b, a)
            e = edge_index.get(key)
            if e is None:
                e = len(edge_list)
                edge_index[key] = e
                edge_list.append(key)
                edge_tri.append([k, -1])
            else:
                if edge_tri[e][1] >= 0:
                    raise MeshError(f"non-manifold edge {key}: more than 2 triangles")
                edge_tri[e][1] = k
            tri_edges[k, m] = e
    edges = np.array(edge_list, dtype=np.int64)
    edge_tri = np.array(edge_tri, dtype=np.int64)

    edge_tag = [None] * len(edges)
    for va, vb, tag in boundary_spec:
        key = (int(va), int(vb)) if va < vb else (int(vb), int(va))
        e = edge_index.get(key)
        if e is None:
            raise MeshError(f"boundary spec names nonexistent edge {key}")
        if edge_tri[e, 1] >= 0:
            raise MeshError(f"boundary spec tags interior edge {key}")
        if not _valid_tag(tag):
            raise MeshError(f"unknown boundary tag {tag!r}")
        if edge_tag[e] is not None:
            raise MeshError(f"boundary edge {key} tagged twice")
        edge_tag[e] = tag
    for e in np.flatnonzero(edge_tri[:, 1] < 0):
        if edge_tag[e] is None:
            raise MeshError(f"untagged boundary edge {tuple(edges[e])}")

    bary = vertices[triangles].mean(axis=1)
    grad_phi = _p1_gradients(vertices, triangles, area)

    edge_pair, vertex_master = _pair_periodic(vertices, edges, edge_tri, edge_tag, bary, scale)

    return PrimalMesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        edge_tri=edge_tri,
        tri_edges=tri_edges,
        edge_tag=edge_tag,
        tri_area=area,
        tri_bary=bary,
        grad_phi=grad_phi,
        edge_pair=edge_pair,
        vertex_master=vertex_master,
    )


def _p1_gradients(vertices, triangles, area):
    x0 = vertices[triangles[:, 0]]
    x1 = vertices[triangles[:, 1]]
    x2 = vertices[triangles[:, 2]]
    inv2a = 1.0 / (2.0 * area)
    g = np.empty((len(triangles), 3, 2))
    g[:, 1] = _perp(x0 - x2) * inv2a[:, None]
    g[:, 2] = _perp(x1 - x0) * inv2a[:, None]
    g[:, 0] = -(g[:, 1] + g[:, 2])
    return g


def _outward_edge_normal(vertices, edges, edge_tri, bary, e):
    a, b = edges[e]
    n = _perp(vertices[b] - vertices[a])
    mid = 0.5 * (vertices[a] + vertices[b])
    if np.dot(n, mid - bary[edge_tri[e, 0]]) < 0:
        n = -n
    return n, mid


def _pair_periodic(vertices, edges, edge_tri, edge_tag, bary, scale):
    """Match periodic boundary edges by translation and identify vertices."""
    edge_pair = np.full(len(edges), -1, dtype=np.int64)
    parent = np.arange(len(vertices), dtype=np.int64)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            if ri < rj:
                parent[rj] = ri
            else:
                parent[ri] = rj

    groups = {}
    for e, tag in enumerate(edge_tag):
        if tag is not None and tag.startswith("periodic:"):
            groups.setdefault(tag, []).append(e)

    tol = 1e-9 * scale
    for tag, eids in sorted(groups.items()):
        normals = np.array(
            [_outward_edge_normal(vertices, edges, edge_tri, bary, e)[0] for e in eids]
        )
        mids = np.array(
            [_outward_edge_normal(vertices, edges, edge_tri, bary, e)[1] for e in eids]
        )
        ref = normals[0]
        side_a = [i for i in range(len(eids)) if np.dot(normals[i], ref) > 0]
        side_b = [i for i in range(len(eids)) if np.dot(normals[i], ref) <= 0]
        if len(side_a) != len(side_b):
            raise MeshError(f"periodic group {tag!r} has unbalanced sides")
        shift = mids[side_b].mean(axis=0) - mids[side_a].mean(axis=0)
        used = set()
        for ia in side_a:
            target = mids[ia] + shift
            dists = np.linalg.norm(mids[side_b] - target, axis=1)
            ib = int(np.argmin(dists))
            if dists[ib] > tol or side_b[ib] in used:
                raise MeshError(f"periodic group {tag!r}: no partner for edge {eids[ia]}")
            used.add(side_b[ib])
            ea, eb = eids[ia], eids[side_b[ib]]
            la = np.linalg.norm(vertices[edges[ea, 1]] - vertices[edges[ea, 0]])
            lb = np.linalg.norm(vertices[edges[eb, 1]] - vertices[edges[eb, 0]])
            if abs(la - lb) > 1e-12 * max(la, lb):
                raise MeshError(f"periodic pair ({ea}, {eb}) has mismatched lengths")
            edge_pair[ea] = eb
            edge_pair[eb] = ea
            for va in edges[ea]:
                pb = vertices[va] + shift
                d0 = np.linalg.norm(vertices[edges[eb, 0]] - pb)
                d1 = np.linalg.norm(vertices[edges[eb, 1]] - pb)
                vb = edges[eb, 0] if d0 < d1 else edges[eb, 1]
                if min(d0, d1) > tol:
                    raise MeshError(f"periodic pair ({ea}, {eb}): vertex mismatch")
                union(int(va), int(vb))

    vertex_master = np.array([find(i) for i in range(len(vertices))], dtype=np.int64)
    return edge_pair, vertex_master


def build_dual(primal: PrimalMesh) -> DualMesh:
    """Construct the staggered dual mesh of the edge type."""
    ne = primal.num_edges
    edge_to_dual = np.full(ne, -1, dtype=np.int64)
    nd = 0
    for e in range(ne):
        if edge_to_dual[e] >= 0:
            continue
        edge_to_dual[e] = nd
        p = primal.edge_pair[e]
        if p >= 0:
            edge_to_dual[p] = nd
        nd += 1

    dual_edge = np.empty(nd, dtype=np.int64)
    for e in range(ne - 1, -1, -1):
        dual_edge[edge_to_dual[e]] = e
    dual_vpair = primal.edges[dual_edge]
    node = 0.5 * (primal.vertices[dual_vpair[:, 0]] + primal.vertices[dual_vpair[:, 1]])

    verts = primal.vertices
    c_dual, c_tri, c_area = [], [], []
    for e in range(ne):
        a, b = primal.edges[e]
        for k in primal.edge_tri[e]:
            if k < 0:
                continue
            sub = abs(triangle_area(verts[a], verts[b], primal.tri_bary[k]))
            if sub <= 0.0:
                raise MeshError(f"degenerate dual subtriangle at edge {e}")
            c_dual.append(edge_to_dual[e])
            c_tri.append(int(k))
            c_area.append(sub)
    contrib_dual = np.array(c_dual, dtype=np.int64)
    contrib_tri = np.array(c_tri, dtype=np.int64)
    contrib_area = np.array(c_area, dtype=float)
    area = np.bincount(contrib_dual, weights=contrib_area, minlength=nd)

    # smallest incircle among a cell's subtriangles, used for the CFL length
    incircle = np.full(nd, np.inf)
    for e in range(ne):
        a, b = primal.edges[e]
        i = edge_to_dual[e]
        for k in primal.edge_tri[e]:
            if k < 0:
                continue
            d = incircle_diameter_triangle(verts[a], verts[b], primal.tri_bary[k])
            incircle[i] = min(incircle[i], d)

    tri_dual = edge_to_dual[primal.tri_edges]

    # other contributing element per dual cell, for the ENO stencil
    other_tri = {}
    for i, k in zip(contrib_dual, contrib_tri):
        other_tri.setdefault(int(i), []).append(int(k))

    il, ir, itri = [], [], []
    inrm, imid, idxl, idxr, idist = [], [], [], [], []
    ilo, iro = [], []
    for k in range(primal.num_triangles):
        g = primal.tri_bary[k]
        for m in range(3):
            e_prev = primal.tri_edges[k, (m + 2) % 3]
            e_next = primal.tri_edges[k, m]
            i = edge_to_dual[e_prev]
            j = edge_to_dual[e_next]
            vm = verts[primal.triangles[k, m]]
            n = _perp(vm - g)
            ni = 0.5 * (verts[primal.edges[e_prev, 0]] + verts[primal.edges[e_prev, 1]])
            nj = 0.5 * (verts[primal.edges[e_next, 0]] + verts[primal.edges[e_next, 1]])
            if np.dot(n, nj - ni) < 0:
                n = -n
            mid = 0.5 * (g + vm)
            il.append(i)
            ir.append(j)
            itri.append(k)
            inrm.append(n)
            imid.append(mid)
            idxl.append(mid - ni)
            idxr.append(mid - nj)
            idist.append(np.linalg.norm(nj - ni))
            cand_l = [t for t in other_tri[int(i)] if t != k]
            cand_r = [t for t in other_tri[int(j)] if t != k]
            ilo.append(cand_l[0] if cand_l else -1)
            iro.append(cand_r[0] if cand_r else -1)

    bcell, bedge, btri, bnrm, bmid, btag = [], [], [], [], [], []
    for e in primal.boundary_edges:
        tag = primal.edge_tag[e]
        if tag.startswith("periodic:"):
            continue
        n, mid = _outward_edge_normal(verts, primal.edges, primal.edge_tri, primal.tri_bary, e)
        bcell.append(edge_to_dual[e])
        bedge.append(int(e))
        btri.append(int(primal.edge_tri[e, 0]))
        bnrm.append(n)
        bmid.append(mid)
        btag.append(tag)

    def arr2(x):
        return np.array(x, dtype=float).reshape(-1, 2)

    return DualMesh(
        num_cells=nd,
        edge_to_dual=edge_to_dual,
        dual_edge=dual_edge,
        dual_vpair=dual_vpair,
        node=node,
        area=area,
        incircle=incircle,
        tri_dual=tri_dual,
        contrib_dual=contrib_dual,
        contrib_tri=contrib_tri,
        contrib_area=contrib_area,
        iface_left=np.array(il, dtype=np.int64),
        iface_right=np.array(ir, dtype=np.int64),
        iface_tri=np.array(itri, dtype=np.int64),
        iface_normal=arr2(inrm),
        iface_mid=arr2(imid),
        iface_dxl=arr2(idxl),
        iface_dxr=arr2(idxr),
        iface_dist=np.array(idist, dtype=float),
        iface_left_other=np.array(ilo, dtype=np.int64),
        iface_right_other=np.array(iro, dtype=np.int64),
        bface_cell=np.array(bcell, dtype=np.int64),
        bface_edge=np.array(bedge, dtype=np.int64),
        bface_tri=np.array(btri, dtype=np.int64),
        bface_normal=arr2(bnrm),
        bface_mid=arr2(bmid),
        bface_tag=btag,
    )


def dual_normal_closure(dual: DualMesh):
    """Per-cell norm of the sum of interface normals and the normal length sum.

    Both include boundary interfaces, so the sum must vanish for every cell
    of a valid mesh.
    """
    nd = dual.num_cells
    acc = np.zeros((nd, 2))
    tot = np.zeros(nd)
    np.add.at(acc, dual.iface_left, dual.iface_normal)
    np.add.at(acc, dual.iface_right, -dual.iface_normal)
    ln = np.linalg.norm(dual.iface_normal, axis=1)
    np.add.at(tot, dual.iface_left, ln)
    np.add.at(tot, dual.iface_right, ln)
    if len(dual.bface_cell):
        np.add.at(acc, dual.bface_cell, dual.bface_normal)
        np.add.at(tot, dual.bface_cell, np.linalg.norm(dual.bface_normal, axis=1))
    return np.linalg.norm(acc, axis=1), tot


def incircle_diameter(dual: DualMesh, cell: int) -> float:
    """CFL length of one dual cell."""
    return float(dual.incircle[cell])


# ---------------------------------------------------------------------------
# structured generators


def generate_structured(xmin, xmax, ymin, ymax, nx, ny, pattern="uniform", tags=None):
    """Triangulated nx-by-ny grid of quads on a rectangle.

    ``pattern`` is ``uniform`` (same diagonal everywhere) or ``alternating``
    (diagonal flipped on odd checkerboard quads).  ``tags`` maps the sides
    left/right/bottom/top to boundary tags, default all walls.
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be at least 1")
    if pattern not in ("uniform", "alternating"):
        raise MeshError(f"unknown pattern {pattern!r}")
    tags = dict(tags or {})
    for side in ("left", "right", "bottom", "top"):
        tags.setdefault(side, "wall")

    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    triangles = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            if pattern == "alternating" and (i + j) % 2 == 1:
                triangles.append((v00, v10, v01))
                triangles.append((v10, v11, v01))
            else:
                triangles.append((v00, v10, v11))
                triangles.append((v00, v11, v01))

    bspec = []
    for i in range(nx):
        bspec.append((vid(i, 0), vid(i + 1, 0), tags["bottom"]))
        bspec.append((vid(i, ny), vid(i + 1, ny), tags["top"]))
    for j in range(ny):
        bspec.append((vid(0, j), vid(0, j + 1), tags["left"]))
        bspec.append((vid(nx, j), vid(nx, j + 1), tags["right"]))

    return vertices, np.array(triangles, dtype=np.int64), bspec


def generate_polar_annulus(center, r_inner, r_outer, theta0, theta1, n_r, n_theta,
                           tags=None):
    """Structured triangulation of an annular sector.

    ``tags`` maps inner/outer/start/end to boundary tags; start and end are
    the straight cuts at theta0 and theta1.
    """
    n_r, n_theta = int(n_r), int(n_theta)
    if n_r < 1 or n_theta < 1:
        raise MeshError("n_r and n_theta must be at least 1")
    tags = dict(tags or {})
    for side in ("inner", "outer", "start", "end"):
        tags.setdefault(side, "wall")
    cx, cy = center
    rs = np.linspace(r_inner, r_outer, n_r + 1)
    thetas = np.linspace(theta0, theta1, n_theta + 1)

    def vid(i, j):
        return i * (n_theta + 1) + j

    vertices = np.empty(((n_r + 1) * (n_theta + 1), 2))
    for i, r in enumerate(rs):
        vertices[i * (n_theta + 1):(i + 1) * (n_theta + 1), 0] = cx + r * np.cos(thetas)
        vertices[i * (n_theta + 1):(i + 1) * (n_theta + 1), 1] = cy + r * np.sin(thetas)

    triangles = []
    for i in range(n_r):
        for j in range(n_theta):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))

    bspec = []
    for j in range(n_theta):
        bspec.append((vid(0, j), vid(0, j + 1), tags["inner"]))
        bspec.append((vid(n_r, j), vid(n_r, j + 1), tags["outer"]))
    for i in range(n_r):
        bspec.append((vid(i, 0), vid(i + 1, 0), tags["start"]))
        bspec.append((vid(i, n_theta), vid(i + 1, n_theta), tags["end"]))

    return vertices, np.array(triangles, dtype=np.int64), bspec


def generate_ogrid_square_hole(half_width, r_inner, n_r, n_theta, tags=None,
                               stretch=2.0):
    """O-grid between a circular hole at the origin and a bounding square.

    Rays fan out from the circle of radius ``r_inner`` to the square of half
    width ``half_width``; radial spacing is geometrically clustered toward
    the circle with factor ``stretch``.  ``tags`` maps hole/left/right/
    bottom/top to boundary tags.
    """
    n_r, n_theta = int(n_r), int(n_theta)
    tags = dict(tags or {})
    for side in ("hole", "left", "right", "bottom", "top"):
        tags.setdefault(side, "wall")

    thetas = np.linspace(-np.pi, np.pi, n_theta + 1)[:-1]
    xi = np.linspace(0.0, 1.0, n_r + 1)
    w = (np.expm1(stretch * xi)) / np.expm1(stretch)

    def vid(i, j):
        return i * n_theta + j

    vertices = np.empty(((n_r + 1) * n_theta, 2))
    for j, th in enumerate(thetas):
        c, s = np.cos(th), np.sin(th)
        t_out = half_width / max(abs(c), abs(s))
        rr = r_inner + (t_out - r_inner) * w
        vertices[j::n_theta, 0] = rr * c
        vertices[j::n_theta, 1] = rr * s

    triangles = []
    for i in range(n_r):
        for j in range(n_theta):
            jn = (j + 1) % n_theta
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, jn), vid(i, jn)
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))

    bspec = []
    for j in range(n_theta):
        jn = (j + 1) % n_theta
        bspec.append((vid(0, j), vid(0, jn), tags["hole"]))
        a, b = vid(n_r, j), vid(n_r, jn)
        mid = 0.5 * (vertices[a] + vertices[b])
        if abs(mid[0]) >= abs(mid[1]):
            side = "right" if mid[0] > 0 else "left"
        else:
            side = "top" if mid[1] > 0 else "bottom"
        bspec.append((a, b, tags[side]))

    return vertices, np.array(triangles, dtype=np.int64), bspec


def generate_slit_tank(dx, tank=(-1.0, 0.0, -1.0, 1.0), plate=(0.0, 2.0, -1.0, 1.0),
                       gate=(-0.2, 0.2), plate_tags=("outflow", "outflow", "outflow")):
    """Reservoir and downstream plate joined only through a gate opening.

    Both rectangles are gridded with spacing ``dx``; vertices on the shared
    line are stitched inside the gate interval and duplicated elsewhere so
    the closed part of the partition wall is a true boundary on both sides.
    ``plate_tags`` are the (right, bottom, top) tags of the plate.
    """
    def grid(x0, x1, y0, y1):
        nx = round((x1 - x0) / dx)
        ny = round((y1 - y0) / dx)
        return generate_structured(x0, x1, y0, y1, nx, ny)

    vt, tt, _ = grid(*tank)
    vp, tp, _ = grid(*plate)

    gate_lo, gate_hi = gate
    x_join = tank[1]
    tol = 1e-9 * max(abs(v) for v in tank + plate)

    shared = {}
    on_join_t = np.flatnonzero(np.abs(vt[:, 0] - x_join) < tol)
    for i in on_join_t:
        if gate_lo - tol <= vt[i, 1] <= gate_hi + tol:
            shared[round(vt[i, 1] / dx)] = i

    remap = np.empty(len(vp), dtype=np.int64)
    keep = []
    for i in range(len(vp)):
        key = round(vp[i, 1] / dx)
        if abs(vp[i, 0] - x_join) < tol and key in shared:
            remap[i] = shared[key]
        else:
            remap[i] = len(vt) + len(keep)
            keep.append(i)
    vertices = np.vstack([vt, vp[keep]])
    triangles = np.vstack([tt, remap[tp]])

    # tag every boundary edge of the combined mesh
    mesh_edges = {}
    for tri in triangles:
        for m in range(3):
            a, b = int(tri[m]), int(tri[(m + 1) % 3])
            key = (a, b) if a < b else (b, a)
            mesh_edges[key] = mesh_edges.get(key, 0) + 1

    right_tag, bottom_tag, top_tag = plate_tags
    bspec = []
    for (a, b), cnt in mesh_edges.items():
        if cnt != 1:
            continue
        pa, pb = vertices[a], vertices[b]
        mid = 0.5 * (pa + pb)
        if abs(mid[0] - plate[1]) < tol:
            tag = right_tag
        elif mid[0] > x_join + tol and abs(mid[1] - plate[2]) < tol:
            tag = bottom_tag
        elif mid[0] > x_join + tol and abs(mid[1] - plate[3]) < tol:
            tag = top_tag
        else:
            tag = "wall"
        bspec.append((a, b, tag))

    return vertices, triangles, bspec


# ---------------------------------------------------------------------------
# ASCII mesh file format
#
# line 1:  NV NT NB
# NV lines: x y            (17 significant digits)
# NT lines: v1 v2 v3       (1-based)
# NB lines: va vb tag      (1-based)


def write_mesh_file(path, vertices, triangles, boundary_spec):
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    bspec = list(boundary_spec)
    with open(path, "w") as f:
        f.write(f"{len(vertices)} {len(triangles)} {len(bspec)}\n")
        for x, y in vertices:
            f.write(f"{x:.17g} {y:.17g}\n")
        for a, b, c in triangles:
            f.write(f"{a + 1} {b + 1} {c + 1}\n")
        for a, b, tag in bspec:
            f.write(f"{a + 1} {b + 1} {tag}\n")


def read_mesh_file(path):
    with open(path) as f:
        tokens = f.readline().split()
        if len(tokens) != 3:
            raise MeshError("mesh file header must be 'NV NT NB'")
        nv, nt, nb = (int(t) for t in tokens)
        vertices = np.empty((nv, 2))
        for i in range(nv):
            x, y = f.readline().split()
            vertices[i] = float(x), float(y)
        triangles = np.empty((nt, 3), dtype=np.int64)
        for i in range(nt):
            triangles[i] = [int(t) - 1 for t in f.readline().split()]
        bspec = []
        for _ in range(nb):
            a, b, tag = f.readline().split()
            bspec.append((int(a) - 1, int(b) - 1, tag))
    return vertices, triangles, bspec


def load_mesh(path) -> PrimalMesh:
    return build_primal(*read_mesh_file(path))


# ---------------------------------------------------------------------------
# point sampling


def locate_points(primal: PrimalMesh, points):
    """Containing triangle and barycentric coordinates for each query point.

    Brute-force barycentric test, adequate for gauge and profile sampling.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tris = primal.triangles
    x0 = primal.vertices[tris[:, 0]]
    x1 = primal.vertices[tris[:, 1]]
    x2 = primal.vertices[tris[:, 2]]
    inv2a = 1.0 / (2.0 * primal.tri_area)

    owner = np.full(len(points), -1, dtype=np.int64)
    bary = np.zeros((len(points), 3))
    for p_idx, p in enumerate(points):
        l1 = ((p[0] - x0[:, 0]) * (x2[:, 1] - x0[:, 1])
              - (p[1] - x0[:, 1]) * (x2[:, 0] - x0[:, 0])) * inv2a
        l2 = ((x1[:, 0] - x0[:, 0]) * (p[1] - x0[:, 1])
              - (x1[:, 1] - x0[:, 1]) * (p[0] - x0[:, 0])) * inv2a
        l0 = 1.0 - l1 - l2
        inside = np.minimum(np.minimum(l0, l1), l2)
        k = int(np.argmax(inside))
        owner[p_idx] = k
        bary[p_idx] = (l0[k], l1[k], l2[k])
    return owner, bary


def interpolate_vertex_field(primal: PrimalMesh, values, points):
    """P1 interpolation of a vertex field at arbitrary points."""
    owner, bary = locate_points(primal, points)
    tri = primal.triangles[owner]
    vals = np.asarray(values, dtype=float)
    return (vals[tri] * bary).sum(axis=1)


def interpolate_dual_field(primal: PrimalMesh, dual: DualMesh, values, points):
    """Nonconforming (edge-midpoint) interpolation of a dual-cell field."""
    owner, bary = locate_points(primal, points)
    values = np.asarray(values, dtype=float)
    cr = 1.0 - 2.0 * bary                     # basis of edge m is 1-2*lambda_{m+2}
    out_shape = (len(owner),) + values.shape[1:]
    out = np.zeros(out_shape)
    for m in range(3):
        w = values[dual.tri_dual[owner, m]]
        out += w * cr[:, (m + 2) % 3].reshape(-1, *([1] * (values.ndim - 1)))
    return out
