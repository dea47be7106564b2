import numpy as np
import pytest

from torsion_minkowski import (
    InvariantViolation,
    MeshTooFine,
    PointOutside,
    check_mesh,
    mesh_to_dict,
    metrics,
    refine,
    regular_polygon,
    triangulate,
)
from torsion_minkowski.verify_suite import polygon_corpus


@pytest.fixture(scope="module")
def square_mesh(square):
    return triangulate(square, 0.5)


def test_square_coarse_mesh_invariants(square_mesh):
    assert square_mesh.n_triangles >= 32
    report = check_mesh(square_mesh)
    assert report.ok, report


def test_target_h_must_be_below_inradius():
    tri = regular_polygon(3, 1.0)
    bad = metrics(tri).inradius * 1.5
    with pytest.raises(InvariantViolation):
        triangulate(tri, bad)


def test_triangle_areas_partition_polygon(square, hexagon):
    for p in (square, hexagon):
        m = triangulate(p, 0.2)
        assert abs(m.triangle_areas().sum() - p.area) <= 1e-10 * p.area


def test_boundary_attribution_lengths(hexagon):
    m = triangulate(hexagon, 0.15)
    sums = np.zeros(len(hexagon))
    np.add.at(sums, m.boundary_facets, m.boundary_edge_lengths)
    assert np.allclose(sums, hexagon.facet_lengths, atol=1e-9)


def test_refine_quadruples_triangles(square_mesh):
    fine = refine(square_mesh)
    assert fine.n_triangles == 4 * square_mesh.n_triangles
    assert fine.target_h == square_mesh.target_h / 2
    assert abs(fine.triangle_areas().sum() - square_mesh.triangle_areas().sum()) < 1e-12
    assert check_mesh(fine).ok
    twice = refine(fine)
    assert twice.target_h == square_mesh.target_h / 4


def test_refine_inherits_facet_attribution(square_mesh):
    fine = refine(square_mesh)
    sums = np.zeros(len(square_mesh.polygon))
    np.add.at(sums, fine.boundary_facets, fine.boundary_edge_lengths)
    assert np.allclose(sums, square_mesh.polygon.facet_lengths, atol=1e-9)


def test_node_count_scaling(square):
    coarse = triangulate(square, 0.4)
    fine = refine(refine(coarse))
    ratio = fine.n_nodes / coarse.n_nodes
    assert 4.0 <= ratio <= 64.0  # O(h^-2) within a factor 4 of the nominal 16


def test_node_cap(square):
    with pytest.raises(MeshTooFine):
        triangulate(square, 0.05, node_cap=100)
    m = triangulate(square, 0.3)
    with pytest.raises(MeshTooFine):
        refine(m, node_cap=m.n_nodes + 1)


def test_corpus_meshes_pass_checker():
    for k, p in enumerate(polygon_corpus(seed=123, count=8)):
        h = 0.03 * metrics(p).circumradius
        report = check_mesh(triangulate(p, h))
        assert report.ok, (k, report)


def test_locate_and_outside(square_mesh):
    inside = np.array([[0.0, 0.0], [0.7, -0.3]])
    idx = square_mesh.locate(inside)
    assert np.all(idx >= 0)
    outside = np.array([[5.0, 0.0]])
    assert square_mesh.locate(outside)[0] == -1
    with pytest.raises(PointOutside):
        square_mesh.barycentric(outside)


def test_mesh_dump_schema(square_mesh):
    d = mesh_to_dict(square_mesh)
    assert set(d) == {"nodes", "triangles", "boundary"}
    assert len(d["boundary"][0]) == 3
    assert len(d["nodes"]) == square_mesh.n_nodes
