"""Meshing, quadrature, boundary data, and the text file format."""

from math import factorial

import numpy as np
import pytest

import vexlab as vx


def ref_triangle_monomial(a, b):
    # integral of x^a y^b over the triangle (0,0),(1,0),(0,1)
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def test_interval_mesh_basics(interval_mesh):
    assert interval_mesh.dim == 1
    assert interval_mesh.volume == pytest.approx(1.0, abs=1e-14)
    assert interval_mesh.h <= 0.04
    assert len(interval_mesh.boundary_nodes) == 2
    # endpoint normals point outward
    facets = interval_mesh.boundary_facets[:, 0]
    xs = interval_mesh.nodes[facets, 0]
    for x, nu in zip(xs, interval_mesh.facet_normals[:, 0]):
        assert nu == (-1.0 if x < 0.5 else 1.0)


def test_square_mesh_exact_area(square_mesh):
    assert square_mesh.volume == pytest.approx(1.0, abs=1e-12)
    assert square_mesh.h <= 0.3


def test_normals_unit_and_outward(square_mesh):
    norms = np.linalg.norm(square_mesh.facet_normals, axis=1)
    assert np.max(np.abs(norms - 1.0)) <= 1e-12
    mids = square_mesh.nodes[square_mesh.boundary_facets].mean(axis=1)
    center = np.array([0.5, 0.5])
    assert np.all(np.einsum("fd,fd->f", mids - center,
                            square_mesh.facet_normals) > 0)


def test_divergence_self_test_all_kinds(interval_mesh, square_mesh):
    disk_mesh = vx.build_mesh(vx.Domain.disk((0, 0), 1.0), 0.2)
    for mesh in (interval_mesh, square_mesh, disk_mesh):
        lhs, rhs, rel = mesh.divergence_check()
        assert rel <= 1e-6, (lhs, rhs)


def test_disk_area_and_perimeter_converge():
    defects_a, defects_p = [], []
    for h in (0.2, 0.1):
        mesh = vx.build_mesh(vx.Domain.disk((0, 0), 1.0), h)
        defects_a.append(abs(mesh.volume - np.pi))
        per = vx.boundary_integral(mesh, lambda x, nu: np.ones(len(x)))
        defects_p.append(abs(per - 2 * np.pi))
    # inscribed-polygon error is O(h^2): halving h should cut both defects
    assert defects_a[1] <= 0.6 * defects_a[0]
    assert defects_p[1] <= 0.6 * defects_p[0]
    assert defects_a[1] < 2e-2 and defects_p[1] < 5e-2


def test_boundary_integral_divergence_oracle():
    sq = vx.Domain.polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])
    mesh = vx.build_mesh(sq, 0.5)
    val = vx.boundary_integral(mesh, lambda x, nu: np.sum(x * nu, axis=1))
    assert val == pytest.approx(8.0, abs=1e-12)  # 2 * area of [-1,1]^2


@pytest.mark.parametrize("degree", [1, 2, 4, 5])
def test_triangle_rule_exactness(degree):
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    mesh = vx.Mesh(nodes, np.array([[0, 1, 2]]))
    pts, w, _ = mesh.quadrature(degree)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = float(np.sum(w * pts[:, :, 0] ** a * pts[:, :, 1] ** b))
            assert got == pytest.approx(ref_triangle_monomial(a, b), abs=1e-15)


def test_segment_rule_exactness(interval_mesh):
    # degree-2 request gives a 3-point Gauss rule, exact through degree 5
    pts, w, _ = interval_mesh.quadrature(2)
    for k in range(6):
        got = float(np.sum(w * pts[:, :, 0] ** k))
        assert got == pytest.approx(1.0 / (k + 1), abs=1e-14)


def test_quadrature_shapes_and_weights(square_mesh):
    pts, w, bary = square_mesh.quadrature(2)
    assert pts.shape == (square_mesh.ncells, len(bary), 2)
    assert w.shape == pts.shape[:2]
    assert np.sum(w) == pytest.approx(square_mesh.volume, abs=1e-12)
    assert np.allclose(bary.sum(axis=1), 1.0)


def test_boundary_distance(interval_mesh, square_mesh):
    d = interval_mesh.boundary_distance()
    xs = interval_mesh.nodes[:, 0]
    assert np.allclose(d, np.minimum(xs, 1 - xs), atol=1e-14)
    d2 = square_mesh.boundary_distance()
    assert np.all(d2[square_mesh.boundary_nodes] <= 1e-14)
    assert d2.max() <= 0.5 + 1e-12


def test_mesh_write_read_round_trip(tmp_path, square_mesh):
    p1 = tmp_path / "m1.txt"
    p2 = tmp_path / "m2.txt"
    vx.write_mesh(square_mesh, p1)
    again = vx.read_mesh(p1)
    vx.write_mesh(again, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert again.volume == pytest.approx(square_mesh.volume, abs=1e-15)


def test_read_mesh_rejects_tampered_facets(tmp_path, interval_mesh):
    path = tmp_path / "m.txt"
    vx.write_mesh(interval_mesh, path)
    lines = path.read_text().splitlines()
    parts = lines[-1].split()
    parts[1] = "1"  # point the last facet at an interior node
    lines[-1] = " ".join(parts)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(vx.MeshFailure):
        vx.read_mesh(path)


def test_read_mesh_rejects_bad_header(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("nonsense header\n")
    with pytest.raises(vx.MeshFailure):
        vx.read_mesh(path)
    path.write_text("")
    with pytest.raises(vx.MeshFailure):
        vx.read_mesh(path)


def test_degenerate_cell_rejected():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(vx.DegenerateCell):
        vx.Mesh(nodes, np.array([[0, 1, 2]]))


def test_build_mesh_argument_validation(interval):
    with pytest.raises(vx.ConfigError):
        vx.build_mesh(interval, 0.0)
    with pytest.raises(vx.MeshFailure):
        vx.build_mesh(vx.Domain.ball(np.zeros(3), 1.0), 0.1)


def test_nonconvex_polygon_meshes_cleanly():
    mesh = vx.build_mesh(vx.Domain.polygon(
        [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]),
        0.25)
    assert mesh.volume == pytest.approx(3.0, abs=1e-10)
    inside = mesh.nodes[mesh.ncells // 2]
    assert mesh.domain.contains(inside[None, :])[0]
