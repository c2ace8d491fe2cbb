import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leonrs.constants import MU_EARTH, R_EARTH
from leonrs.errors import (ConfigurationError, DegenerateFrameError, TargetBehindArrayError,
                           VisibilityError)
from leonrs.geometry import (SatelliteState, UpaConfig, WalkerConfig, elevations_from, generate_walker,
                             local_frame, look_angles, select_service_group, transmit_steering,
                             ue_elevation)

finite = st.floats(-1e7, 1e7, allow_nan=False)


def test_walker_count_radius_speed():
    cfg = WalkerConfig()
    sats = generate_walker(cfg)
    assert len(sats) == 1296
    r = np.linalg.norm([s.position for s in sats], axis=1)
    np.testing.assert_allclose(r, R_EARTH + 550e3, rtol=1e-12)
    v = np.linalg.norm([s.velocity for s in sats], axis=1)
    np.testing.assert_allclose(v, np.sqrt(MU_EARTH / (R_EARTH + 550e3)), rtol=1e-12)


def test_walker_velocity_perpendicular_and_inclination():
    sats = generate_walker(WalkerConfig(total_satellites=72, planes=8, phase_factor=1))
    for s in sats:
        assert abs(s.position @ s.velocity) < 1e-6 * np.linalg.norm(s.position) * np.linalg.norm(s.velocity)
        h = np.cross(s.position, s.velocity)
        inc = np.arccos(h[2] / np.linalg.norm(h))
        assert inc == pytest.approx(np.deg2rad(53.0), abs=1e-12)


def test_walker_plane_spacing():
    sats = generate_walker(WalkerConfig(total_satellites=12, planes=4, phase_factor=1))
    # ascending nodes of the four planes are 90 degrees apart
    nodes = []
    for p in range(4):
        s = [x for x in sats if x.plane == p][0]
        h = np.cross(s.position, s.velocity)
        node = np.cross([0, 0, 1.0], h)
        nodes.append(np.arctan2(node[1], node[0]))
    d = np.mod(np.diff(nodes), 2 * np.pi)
    np.testing.assert_allclose(d, np.pi / 2, atol=1e-12)


def test_walker_invalid():
    with pytest.raises(ConfigurationError):
        generate_walker(WalkerConfig(total_satellites=100, planes=72))


@given(st.tuples(finite, finite, finite), st.tuples(finite, finite, finite))
@settings(max_examples=200, deadline=None)
def test_local_frame_orthonormal(q, eta):
    q, eta = np.array(q), np.array(eta)
    if np.linalg.norm(q) < 1 or np.linalg.norm(eta) < 1 or \
            np.linalg.norm(np.cross(q / np.linalg.norm(q), eta / np.linalg.norm(eta))) < 1e-6:
        return
    f = local_frame(SatelliteState(q, eta))
    A = f.matrix()
    np.testing.assert_allclose(A @ A.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(A) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(f.z, -q / np.linalg.norm(q), atol=1e-12)


def test_local_frame_degenerate():
    with pytest.raises(DegenerateFrameError):
        local_frame(SatelliteState(np.array([7e6, 0, 0.0]), np.array([1.0, 0, 0])))
    with pytest.raises(DegenerateFrameError):
        local_frame(SatelliteState(np.zeros(3), np.array([0, 1.0, 0])))


def test_look_angles_nadir_and_offset():
    sat = SatelliteState(np.array([7e6, 0, 0.0]), np.array([0, 7500.0, 0]))
    f = local_frame(sat)
    ang = look_angles(f, sat.position, np.array([6.371e6, 0, 0]))
    assert ang.elevation == pytest.approx(0.0, abs=1e-12)
    assert ang.azimuth == 0.0
    # 45 degrees off nadir along the velocity (frame x)
    target = sat.position + 1e5 * (f.z + f.x)
    ang = look_angles(f, sat.position, target)
    assert ang.elevation == pytest.approx(np.pi / 4, abs=1e-12)
    assert ang.azimuth == pytest.approx(0.0, abs=1e-12)
    target = sat.position + 1e5 * (f.z + f.y)
    assert look_angles(f, sat.position, target).azimuth == pytest.approx(np.pi / 2, abs=1e-12)


def test_look_angles_behind_array():
    sat = SatelliteState(np.array([7e6, 0, 0.0]), np.array([0, 7500.0, 0]))
    with pytest.raises(TargetBehindArrayError):
        look_angles(local_frame(sat), sat.position, np.array([8e6, 0, 0]))


@given(st.integers(1, 6), st.integers(1, 6), st.floats(0, np.pi / 2), st.floats(-np.pi, np.pi))
@settings(max_examples=100, deadline=None)
def test_steering_unit_norm(nx, ny, theta, phi):
    a = transmit_steering(UpaConfig(nx, ny), theta, phi)
    assert a.shape == (nx * ny,)
    assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-12)


def test_steering_broadside_and_layout():
    a = transmit_steering(UpaConfig(2, 3), 0.0, 0.3)
    np.testing.assert_allclose(a, np.ones(6) / np.sqrt(6), atol=1e-15)
    # element (ix, iy) at index ix*ny + iy; half-wavelength spacing along x
    a = transmit_steering(UpaConfig(2, 3), np.pi / 2, 0.0)
    assert np.angle(a[3] / a[0]) == pytest.approx(np.pi, abs=1e-12) or \
        np.angle(a[3] / a[0]) == pytest.approx(-np.pi, abs=1e-12)
    assert np.angle(a[1] / a[0]) == pytest.approx(0.0, abs=1e-12)


def test_ue_elevation_zenith_and_clamp():
    p = np.array([R_EARTH, 0, 0])
    assert ue_elevation(p, np.array([R_EARTH + 5e5, 0, 0])) == pytest.approx(np.pi / 2)
    el, flag = ue_elevation(p, np.array([R_EARTH - 1e5, 5e6, 0]), return_flag=True)
    assert el == 0.0 and flag


def test_elevations_from_matches_scalar():
    sats = generate_walker(WalkerConfig(total_satellites=72, planes=8, phase_factor=1))
    pos = np.array([s.position for s in sats])
    p = np.array([R_EARTH, 0, 0])
    el = elevations_from(p, pos)
    for k in range(0, 72, 7):
        if el[k] > 0:
            assert el[k] == pytest.approx(ue_elevation(p, pos[k]), abs=1e-12)


def test_select_service_group_sorted():
    sats = generate_walker(WalkerConfig())
    c = sats[0].position / np.linalg.norm(sats[0].position) * R_EARTH
    idx = select_service_group(sats, c, 4, mask=np.deg2rad(20))
    assert idx[0] == 0
    el = elevations_from(c, np.array([sats[i].position for i in idx]))
    assert np.all(np.diff(el) <= 0)
    with pytest.raises(VisibilityError):
        select_service_group(sats, c, 200, mask=np.deg2rad(50))
