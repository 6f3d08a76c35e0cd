import numpy as np
import pytest

from hybridswe.mesh import (
    MeshError,
    build_dual,
    build_primal,
    dual_normal_closure,
    generate_structured,
    incircle_diameter_triangle,
    interpolate_dual_field,
    interpolate_vertex_field,
    read_mesh_file,
    triangle_area,
    write_mesh_file,
)


def shoelace(points):
    """Polygon area oracle."""
    x = np.asarray(points, dtype=float)
    n = len(x)
    s = 0.0
    for i in range(n):
        j = (i + 1) % n
        s += x[i, 0] * x[j, 1] - x[j, 0] * x[i, 1]
    return 0.5 * abs(s)


def right_triangle():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2]])
    bspec = [(0, 1, "wall"), (1, 2, "wall"), (2, 0, "wall")]
    return build_primal(verts, tris, bspec)


def unit_square_two_triangles():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    bspec = [(0, 1, "wall"), (1, 2, "wall"), (2, 3, "wall"), (3, 0, "wall")]
    return build_primal(verts, tris, bspec)


class TestBuildPrimal:
    def test_single_right_triangle(self):
        mesh = right_triangle()
        assert mesh.num_triangles == 1
        assert len(mesh.boundary_edges) == 3
        assert mesh.domain_area == pytest.approx(0.5, abs=1e-15)

    def test_two_triangle_square(self):
        mesh = unit_square_two_triangles()
        assert mesh.num_edges == 5
        assert len(mesh.boundary_edges) == 4
        assert mesh.domain_area == pytest.approx(1.0, abs=1e-14)
        interior = [e for e in range(5) if mesh.edge_tri[e, 1] >= 0]
        assert len(interior) == 1

    def test_structured_32_counts_and_area(self):
        verts, tris, bspec = generate_structured(-5, 5, -5, 5, 32, 32)
        mesh = build_primal(verts, tris, bspec)
        assert mesh.num_vertices == 1089
        assert mesh.num_triangles == 2048
        assert abs(mesh.domain_area - 100.0) <= 1e-12 * 100.0

    def test_orientation_normalized(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        tris = np.array([[0, 2, 1]])  # clockwise on purpose
        mesh = build_primal(verts, tris, [(0, 1, "wall"), (1, 2, "wall"), (2, 0, "wall")])
        p = mesh.vertices[mesh.triangles[0]]
        assert triangle_area(p[0], p[1], p[2]) > 0

    def test_duplicate_triangle_rejected(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        tris = np.array([[0, 1, 2], [0, 2, 1]])
        with pytest.raises(MeshError, match="duplicate"):
            build_primal(verts, tris, [])

    def test_zero_area_triangle_rejected(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        tris = np.array([[0, 1, 2]])
        with pytest.raises(MeshError, match="zero-area"):
            build_primal(verts, tris, [])

    def test_non_manifold_edge_rejected(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [1.0, 1.0]])
        tris = np.array([[0, 1, 2], [0, 3, 1], [0, 1, 4]])
        with pytest.raises(MeshError, match="non-manifold"):
            build_primal(verts, tris, [])

    def test_untagged_boundary_rejected(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        tris = np.array([[0, 1, 2]])
        with pytest.raises(MeshError, match="untagged"):
            build_primal(verts, tris, [(0, 1, "wall")])

    def test_unknown_tag_rejected(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        tris = np.array([[0, 1, 2]])
        with pytest.raises(MeshError, match="unknown boundary tag"):
            build_primal(verts, tris, [(0, 1, "slippery"), (1, 2, "wall"), (2, 0, "wall")])


class TestBuildDual:
    def test_interior_dual_cell_area_unit_square(self):
        mesh = unit_square_two_triangles()
        dual = build_dual(mesh)
        e_int = [e for e in range(mesh.num_edges) if mesh.edge_tri[e, 1] >= 0][0]
        i = dual.edge_to_dual[e_int]
        # two subtriangles, each a third of its element: oracle by shoelace
        a, b = mesh.edges[e_int]
        g0, g1 = mesh.tri_bary[mesh.edge_tri[e_int]]
        oracle = shoelace([mesh.vertices[a], g0, mesh.vertices[b], g1])
        assert dual.area[i] == pytest.approx(1.0 / 3.0, rel=1e-13)
        assert dual.area[i] == pytest.approx(oracle, rel=1e-13)

    def test_boundary_dual_cell_area(self):
        mesh = right_triangle()
        dual = build_dual(mesh)
        e = [e for e in range(3) if sorted(mesh.edges[e]) == [0, 1]][0]
        i = dual.edge_to_dual[e]
        oracle = shoelace([mesh.vertices[0], mesh.vertices[1], mesh.tri_bary[0]])
        assert dual.area[i] == pytest.approx(1.0 / 6.0, rel=1e-13)
        assert dual.area[i] == pytest.approx(oracle, rel=1e-13)

    def test_area_partition(self):
        verts, tris, bspec = generate_structured(-5, 5, -5, 5, 8, 8, pattern="alternating")
        mesh = build_primal(verts, tris, bspec)
        dual = build_dual(mesh)
        assert abs(dual.total_area - mesh.domain_area) <= 1e-12 * mesh.domain_area

    def test_subtriangle_partition_per_element(self):
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 3, 3)
        mesh = build_primal(verts, tris, bspec)
        dual = build_dual(mesh)
        per_tri = np.zeros(mesh.num_triangles)
        np.add.at(per_tri, dual.contrib_tri, dual.contrib_area)
        assert np.all(np.abs(per_tri - mesh.tri_area) <= 1e-12 * mesh.tri_area)

    def test_normal_closure(self):
        verts, tris, bspec = generate_structured(0, 2, 0, 1, 5, 3)
        mesh = build_primal(verts, tris, bspec)
        dual = build_dual(mesh)
        defect, total = dual_normal_closure(dual)
        assert np.all(defect <= 1e-12 * total)

    def test_deterministic_construction(self):
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 4, 4)
        d1 = build_dual(build_primal(verts, tris, bspec))
        d2 = build_dual(build_primal(verts, tris, bspec))
        assert np.array_equal(d1.area, d2.area)
        assert np.array_equal(d1.iface_normal, d2.iface_normal)
        assert np.array_equal(d1.iface_left, d2.iface_left)

    def test_interface_counts(self):
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 4, 4)
        mesh = build_primal(verts, tris, bspec)
        dual = build_dual(mesh)
        assert len(dual.iface_left) == 3 * mesh.num_triangles
        assert len(dual.bface_cell) == len(mesh.boundary_edges)


class TestPeriodic:
    def test_torus_counts(self):
        tags = {"left": "periodic:x", "right": "periodic:x",
                "bottom": "periodic:y", "top": "periodic:y"}
        verts, tris, bspec = generate_structured(-5, 5, -5, 5, 8, 8, tags=tags)
        mesh = build_primal(verts, tris, bspec)
        dual = build_dual(mesh)
        # torus: E = 3*N^2 dual cells, no boundary faces, V identified to N^2
        assert dual.num_cells == 3 * 8 * 8
        assert len(dual.bface_cell) == 0
        assert len(set(mesh.vertex_master)) == 8 * 8
        assert abs(dual.total_area - 100.0) <= 1e-12 * 100.0

    def test_periodic_strip(self):
        tags = {"left": "exact", "right": "exact",
                "bottom": "periodic:y", "top": "periodic:y"}
        verts, tris, bspec = generate_structured(0, 4, 0, 1, 8, 2, tags=tags)
        mesh = build_primal(verts, tris, bspec)
        dual = build_dual(mesh)
        defect, total = dual_normal_closure(dual)
        assert np.all(defect <= 1e-12 * total)
        assert set(dual.bface_tag) == {"exact"}

    def test_merged_cell_area(self):
        tags = {"left": "periodic:x", "right": "periodic:x",
                "bottom": "periodic:y", "top": "periodic:y"}
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 2, 2, tags=tags)
        mesh = build_primal(verts, tris, bspec)
        dual = build_dual(mesh)
        # every dual cell on the torus gathers two element thirds
        counts = np.bincount(dual.contrib_dual, minlength=dual.num_cells)
        assert np.all(counts == 2)

    def test_mismatched_periodic_rejected(self):
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 2, 2)
        bspec = [(a, b, t) for a, b, t in bspec]
        # tag only one side periodic: unbalanced group
        out = []
        for a, b, t in bspec:
            va, vb = verts[a], verts[b]
            if abs(va[0]) < 1e-12 and abs(vb[0]) < 1e-12:
                out.append((a, b, "periodic:x"))
            else:
                out.append((a, b, t))
        with pytest.raises(MeshError, match="periodic"):
            build_primal(verts, tris, out)


class TestGenerators:
    def test_minimal(self):
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 1, 1)
        assert len(verts) == 4
        assert len(tris) == 2
        assert len(bspec) == 4

    def test_counts_formula(self):
        verts, tris, _ = generate_structured(-5, 5, -5, 5, 32, 32)
        assert len(verts) == 33 * 33
        assert len(tris) == 2 * 32 * 32

    def test_spacing(self):
        verts, _, _ = generate_structured(0, 2, 0, 0.2, 400, 40)
        xs = np.unique(verts[:, 0])
        assert xs[1] - xs[0] == pytest.approx(2.0 / 400)

    def test_bad_args(self):
        with pytest.raises(MeshError):
            generate_structured(0, 1, 0, 1, 0, 1)
        with pytest.raises(MeshError):
            generate_structured(0, 1, 0, 1, 2, 2, pattern="spiral")


class TestIncircle:
    def test_equilateral(self):
        s = 0.7
        p = [(0, 0), (s, 0), (s / 2, s * np.sqrt(3) / 2)]
        assert incircle_diameter_triangle(*p) == pytest.approx(s / np.sqrt(3), rel=1e-13)

    def test_right_triangle(self):
        p = [(0, 0), (1, 0), (0, 1)]
        assert incircle_diameter_triangle(*p) == pytest.approx(2 - np.sqrt(2), rel=1e-13)

    def test_bounded_by_cell_diameter(self):
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 4, 3)
        mesh = build_primal(verts, tris, bspec)
        dual = build_dual(mesh)
        for i in range(dual.num_cells):
            assert 0 < dual.incircle[i] < 1.0


class TestMeshFile:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 3, 3)
        verts = verts + rng.uniform(-0.01, 0.01, verts.shape)
        path = tmp_path / "mesh.txt"
        write_mesh_file(path, verts, tris, bspec)
        v2, t2, b2 = read_mesh_file(path)
        assert np.array_equal(v2, verts)
        assert np.array_equal(t2, tris)
        assert [tuple(x) for x in b2] == [tuple(x) for x in bspec]
        # writing again reproduces the identical file
        path2 = tmp_path / "mesh2.txt"
        write_mesh_file(path2, v2, t2, b2)
        assert path.read_text() == path2.read_text()


class TestSampling:
    def test_vertex_interpolation_linear_exact(self):
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 4, 4)
        mesh = build_primal(verts, tris, bspec)
        field = 2.0 * mesh.vertices[:, 0] - 0.5 * mesh.vertices[:, 1] + 1.0
        pts = np.array([[0.3, 0.4], [0.77, 0.12], [0.5, 0.5]])
        vals = interpolate_vertex_field(mesh, field, pts)
        expect = 2.0 * pts[:, 0] - 0.5 * pts[:, 1] + 1.0
        assert np.allclose(vals, expect, atol=1e-13)

    def test_dual_interpolation_linear_exact(self):
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 4, 4)
        mesh = build_primal(verts, tris, bspec)
        dual = build_dual(mesh)
        field = 3.0 * dual.node[:, 0] + 0.25 * dual.node[:, 1]
        pts = np.array([[0.3, 0.4], [0.77, 0.12]])
        vals = interpolate_dual_field(mesh, dual, field, pts)
        expect = 3.0 * pts[:, 0] + 0.25 * pts[:, 1]
        assert np.allclose(vals, expect, atol=1e-12)
