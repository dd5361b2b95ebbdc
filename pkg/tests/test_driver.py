import numpy as np
import pytest

from meshgen import box_with_plate_mesh

from rotormesh.config import parse_motion_config
from rotormesh.driver import DeformationFailure, run_deformation
from rotormesh.kinematics import azimuth_matrix
from rotormesh.mesh import extract_marker_points

STILL_ROTOR = """
[rotor]
radius_m = 1.0
chord_m = 0.3
rpm = 60.0
n_blades = 1
hinge = [0.0, 0.0, 0.0]

[rbf]
support_radius_chords = 2.5
greedy_tol_m = 1e-6
fixed_markers = ["farfield"]
"""

PITCHING = STILL_ROTOR + """
[pitch]
mean_deg = 10.0
"""


@pytest.fixture(scope="module")
def small_mesh():
    return box_with_plate_mesh(n=8, plate_x=(0.3, 0.9),
                               plate_y=(-0.3, 0.3), plate_z=(-0.1, 0.1))


def test_rigid_rotation_only_quality_constant(small_mesh):
    cfg = parse_motion_config(STILL_ROTOR)
    results = list(run_deformation(small_mesh, cfg, ["blade"],
                                   steps_per_rev=8, revolutions=1.0))
    assert len(results) == 9
    q = [r.quality.min_orthogonality_deg for r in results]
    assert np.ptp(q) < 1e-9
    # zero hinge motion: rotor-frame geometry is bitwise untouched, so the
    # lab-frame output is exactly the rigidly rotated input
    for r in results:
        expected = small_mesh.points @ azimuth_matrix(r.psi).T
        assert np.allclose(r.points, expected, atol=1e-12)


def test_velocity_schemes_and_rigid_speed(small_mesh):
    cfg = parse_motion_config(STILL_ROTOR)
    results = list(run_deformation(small_mesh, cfg, ["blade"],
                                   steps_per_rev=72, revolutions=0.1))
    assert results[0].velocity_scheme == "zero"
    assert results[1].velocity_scheme == "backward1"
    assert all(r.velocity_scheme == "bdf2" for r in results[2:])
    omega = np.array([0.0, 0.0, cfg.omega])
    r = results[-1]
    expected = np.cross(omega, r.points)
    scale = np.abs(expected).max()
    assert np.abs(r.grid_velocity - expected).max() < 1e-2 * scale


def test_pitching_deforms_and_recovers(small_mesh):
    cfg = parse_motion_config(PITCHING)
    results = list(run_deformation(small_mesh, cfg, ["blade"],
                                   steps_per_rev=4, revolutions=1.0))
    idx, _ = extract_marker_points(small_mesh, "blade")
    # step 0 applies the 10 degree collective: blade moved off its as-built
    # position, far field pinned
    moved = np.abs(results[0].points[idx] - small_mesh.points[idx]).max()
    assert moved > 0.01
    far_idx, _ = extract_marker_points(small_mesh, "farfield")
    far = results[0].points[far_idx] - small_mesh.points[far_idx]
    assert np.abs(far).max() < 1e-5
    assert all(r.quality.negative_volume_count == 0 for r in results)


def test_unknown_marker_rejected(small_mesh):
    cfg = parse_motion_config(STILL_ROTOR)
    with pytest.raises(KeyError, match="wing"):
        list(run_deformation(small_mesh, cfg, ["wing"], steps_per_rev=4,
                             revolutions=0.0))


def test_missing_rbf_section_rejected(small_mesh):
    cfg = parse_motion_config("[rotor]\nradius_m = 1.0\nrpm = 60.0\n")
    with pytest.raises(ValueError, match="rbf"):
        list(run_deformation(small_mesh, cfg, ["blade"], steps_per_rev=4,
                             revolutions=0.0))


def test_negative_volume_aborts():
    # violent pitch of a plate filling most of a tight box inverts cells
    mesh = box_with_plate_mesh(n=6, half=0.6, plate_x=(-0.4, 0.4),
                               plate_y=(-0.4, 0.4), plate_z=(-0.1, 0.1))
    cfg = parse_motion_config(STILL_ROTOR + "[pitch]\nmean_deg = 80.0\n")
    with pytest.raises(DeformationFailure) as err:
        list(run_deformation(mesh, cfg, ["blade"], steps_per_rev=4,
                             revolutions=1.0))
    assert err.value.last_good == err.value.step - 1
    assert err.value.report.negative_volume_count > 0
