import numpy as np
import pytest

from meshgen import box_hex_mesh

from rotormesh.geometry import (cell_geometry, faces_area_normal_centroid,
                                orthogonality_metrics)
from rotormesh.mesh import Mesh


def tet_mesh(points):
    return Mesh(3, np.asarray(points, dtype=float),
                (("tetrahedron", (0, 1, 2, 3)),))


def test_unit_cube_volume_and_faces(cube_mesh):
    geo = cell_geometry(cube_mesh)
    assert geo.volumes == pytest.approx([1.0])
    assert np.allclose(geo.centroids[0], [0.5, 0.5, 0.5])
    assert np.allclose(geo.face_areas, 1.0)
    assert np.allclose(np.linalg.norm(geo.face_normals, axis=1), 1.0)


def test_unit_right_tet_volume():
    geo = cell_geometry(tet_mesh([(0, 0, 0), (1, 0, 0), (0, 1, 0),
                                  (0, 0, 1)]))
    assert geo.volumes[0] == pytest.approx(1.0 / 6.0, rel=1e-14)


def test_inverted_tet_flagged_negative():
    geo = cell_geometry(tet_mesh([(0, 0, 0), (0, 1, 0), (1, 0, 0),
                                  (0, 0, 1)]))
    assert geo.volumes[0] == pytest.approx(-1.0 / 6.0, rel=1e-14)
    report = orthogonality_metrics(
        tet_mesh([(0, 0, 0), (0, 1, 0), (1, 0, 0), (0, 0, 1)]))
    assert report.negative_volume_count == 1
    assert report.min_volume < 0.0


def test_prism_and_pyramid_volumes():
    prism = Mesh(3, np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0),
                              (0, 0, 1), (1, 0, 1), (0, 1, 1)], dtype=float),
                 (("prism", (0, 1, 2, 3, 4, 5)),))
    assert cell_geometry(prism).volumes[0] == pytest.approx(0.5, rel=1e-13)

    pyramid = Mesh(3, np.array([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
                                (0.5, 0.5, 1.0)], dtype=float),
                   (("pyramid", (0, 1, 2, 3, 4)),))
    assert cell_geometry(pyramid).volumes[0] == pytest.approx(1.0 / 3.0,
                                                              rel=1e-13)


def test_2d_triangle_areas(square_mesh):
    geo = cell_geometry(square_mesh)
    assert np.allclose(geo.volumes, [0.5, 0.5])
    # edges: interior diagonal has length sqrt(2)
    assert np.isclose(geo.face_areas[geo.interior], np.sqrt(2.0)).all()


def test_block_volume_sum_matches_analytic(block_mesh):
    geo = cell_geometry(block_mesh)
    assert geo.volumes.sum() == pytest.approx(2.0 * 1.5 * 1.0, rel=1e-10)
    assert np.all(geo.volumes > 0.0)


def test_deformed_block_volume_sum():
    # smooth deformation keeping the boundary fixed: total volume preserved
    mesh = box_hex_mesh(6, 6, 6)
    p = np.array(mesh.points)
    bump = (np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])
            * np.sin(np.pi * p[:, 2]))
    moved = p + 0.05 * np.stack([bump, -0.5 * bump, 0.25 * bump], axis=1)
    geo = cell_geometry(mesh.with_points(moved))
    assert geo.volumes.sum() == pytest.approx(1.0, rel=1e-10)


def test_shared_face_normals_antiparallel(block_mesh):
    """Recompute each interior face's normal from both sides; the winding
    rule must make them exactly antiparallel."""
    from rotormesh.geometry import CELL_FACES_3D
    mesh = box_hex_mesh(3, 2, 2)
    rng = np.random.default_rng(3)
    pts = np.array(mesh.points)
    pts += 0.04 * rng.normal(size=pts.shape)  # break planarity
    mesh = mesh.with_points(pts)

    sides: dict[tuple, list[np.ndarray]] = {}
    for kind, verts in mesh.elements:
        verts = np.asarray(verts)
        for local in CELL_FACES_3D[kind]:
            face = verts[list(local)]
            _, normal, _ = faces_area_normal_centroid(
                mesh.points, face[None, :])
            sides.setdefault(tuple(sorted(face.tolist())), []).append(normal)
    shared = [v for v in sides.values() if len(v) == 2]
    assert shared, "expected interior faces"
    for n1, n2 in shared:
        assert np.linalg.norm(n1 + n2) < 1e-12


def test_orthogonality_cartesian(block_mesh):
    report = orthogonality_metrics(block_mesh)
    assert report.min_orthogonality_deg == pytest.approx(90.0, abs=1e-9)
    assert report.negative_volume_count == 0


def test_orthogonality_equilateral_triangles():
    # two equilateral triangles sharing an edge
    h = np.sqrt(3.0) / 2.0
    pts = np.array([(0, 0, 0), (1, 0, 0), (0.5, h, 0), (1.5, h, 0)],
                   dtype=float)
    mesh = Mesh(2, pts, (("triangle", (0, 1, 2)), ("triangle", (1, 3, 2))))
    report = orthogonality_metrics(mesh)
    assert report.min_orthogonality_deg == pytest.approx(90.0, abs=1e-9)


def test_orthogonality_sheared_block():
    mesh = box_hex_mesh(4, 4, 4)
    p = np.array(mesh.points)
    p[:, 0] += p[:, 2] * np.tan(np.radians(45.0))
    report = orthogonality_metrics(mesh.with_points(p))
    assert report.min_orthogonality_deg == pytest.approx(45.0, abs=0.5)


def test_orthogonality_rigid_motion_invariant(block_mesh):
    from rotormesh.kinematics import hinge_matrix
    base = orthogonality_metrics(block_mesh)
    rot = hinge_matrix(0.31, -0.82, 1.24)
    moved = block_mesh.with_points(block_mesh.points @ rot.T
                                   + np.array([3.0, -2.0, 0.7]))
    rotated = orthogonality_metrics(moved)
    assert np.allclose(rotated.per_cell_deg, base.per_cell_deg, atol=1e-9)


def test_orthogonality_no_cells():
    mesh = Mesh(2, np.zeros((1, 3)), ())
    with pytest.raises(ValueError, match="no cells"):
        orthogonality_metrics(mesh)


def test_quality_report_invariants(block_mesh):
    report = orthogonality_metrics(block_mesh)
    assert 0.0 <= report.min_orthogonality_deg <= 90.0
    assert report.min_orthogonality_deg == pytest.approx(
        report.per_cell_deg.min())
    assert np.all(report.per_cell_deg >= 0.0)
    assert np.all(report.per_cell_deg <= 90.0 + 1e-12)
