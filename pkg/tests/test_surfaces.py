import time

import numpy as np
import pytest

from graspcbf.errors import DegenerateChart, OutOfChart
from graspcbf.surfaces import (HemisphereChart, PlaneChart, SurfaceChart, chart_from_config,
                               cube_face, gauss_frame, generic_local_geometry, local_geometry,
                               tensors, validate_chart)

from oracles import gauss_map_fd, hemisphere_symbolic

R = 0.06


def interior_points(rng, k, margin=0.1):
    return np.column_stack((rng.uniform(-np.pi / 2 + margin, np.pi / 2 - margin, k),
                            rng.uniform(-np.pi + margin, -margin, k)))


class SkewedChart(SurfaceChart):
    """c = (a, a + b, 0): tangents are not orthogonal."""
    bounds = (-1.0, 1.0, -1.0, 1.0)

    def derivatives(self, xi):
        a, b = xi
        z = np.zeros(3)
        return np.array([a, a + b, 0.0]), np.array([1.0, 1, 0]), np.array([0.0, 1, 0]), z, z, z


def test_hemisphere_apex_frame():
    F = gauss_frame(HemisphereChart(R), np.array([0.0, -np.pi / 2]))
    assert np.allclose(F[:, 0], [0, 1, 0], atol=1e-15)
    assert np.allclose(F[:, 2], [0, 0, 1], atol=1e-15)
    t = tensors(HemisphereChart(R), np.array([0.0, -np.pi / 2]))
    assert np.allclose(t.M, np.diag([0.06, 0.06]), atol=1e-15)


def test_hemisphere_points_on_sphere_and_outward_normal():
    rng = np.random.default_rng(0)
    h = HemisphereChart(R)
    for xi in interior_points(rng, 100):
        g = local_geometry(h, xi)
        assert abs(np.linalg.norm(g.point) - R) < 1e-15
        assert np.allclose(g.frame[:, 2], g.point / R, atol=1e-14)
        assert np.allclose(g.frame.T @ g.frame, np.eye(3), atol=1e-10)
        assert np.linalg.det(g.frame) > 0


def test_geometry_oracle_suite_acceptance_part():
    # symbolic and finite-difference oracles for the hemisphere at 100 interior points
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    h = HemisphereChart(R)
    worst = 0.0
    for xi in interior_points(rng, 100):
        t = tensors(h, xi)
        M, K, T = gauss_map_fd(h, xi)
        worst = max(worst, np.abs(t.M - M).max(), np.abs(t.K - K).max(), np.abs(t.T - T).max())
    assert worst < 1e-5
    assert time.perf_counter() - t0 < 1.0


def test_hemisphere_matches_symbolic_derivation():
    sym = hemisphere_symbolic(R)
    rng = np.random.default_rng(7)
    for xi in interior_points(rng, 50):
        M, K, T = sym(xi)
        t = tensors(HemisphereChart(R), xi)
        assert np.allclose(t.M, M, atol=1e-13)
        assert np.allclose(t.K, K, atol=1e-10)
        assert np.allclose(t.T, T, atol=1e-10)


def test_closed_form_matches_generic_geometry():
    rng = np.random.default_rng(8)
    h = HemisphereChart(R)
    p = cube_face("+y", 0.2604)
    for xi in interior_points(rng, 100):
        for chart, x in ((h, xi), (p, 0.03 * xi)):
            a, b = local_geometry(chart, x), generic_local_geometry(chart, x)
            for u, v in ((a.point, b.point), (a.frame, b.frame), (a.dframe, b.dframe),
                         (a.tensors.M, b.tensors.M), (a.tensors.K, b.tensors.K),
                         (a.tensors.T, b.tensors.T)):
                assert np.allclose(u, v, atol=1e-12)


def test_frame_derivatives_match_finite_differences():
    rng = np.random.default_rng(9)
    h = HemisphereChart(R)
    e = 1e-6
    for xi in interior_points(rng, 30):
        g = local_geometry(h, xi)
        for k in range(2):
            d = np.zeros(2)
            d[k] = e
            fd = (gauss_frame(h, xi + d) - gauss_frame(h, xi - d)) / (2 * e)
            assert np.allclose(g.dframe[k], fd, atol=1e-8)


def test_tensor_jacobian_matches_finite_differences():
    rng = np.random.default_rng(10)
    h = HemisphereChart(R)
    e = 1e-6
    for xi in interior_points(rng, 30):
        dM, dK = h.tensor_jacobian(xi)
        for k in range(2):
            d = np.zeros(2)
            d[k] = e
            tp, tm = tensors(h, xi + d), tensors(h, xi - d)
            assert np.allclose(dM[k], (tp.M - tm.M) / (2 * e), atol=1e-8)
            assert np.allclose(dK[k], (tp.K - tm.K) / (2 * e), atol=1e-6)


def test_plane_is_flat_exactly():
    rng = np.random.default_rng(1)
    for face in ("+x", "-x", "+y", "-y", "+z", "-z"):
        p = cube_face(face, 0.2604)
        for xi in rng.uniform(-0.13, 0.13, size=(20, 2)):
            for geo in (local_geometry(p, xi), generic_local_geometry(p, xi)):
                assert np.array_equal(geo.tensors.K, np.zeros((2, 2)))
                assert np.array_equal(geo.tensors.T, np.zeros(2))
                assert np.allclose(geo.tensors.M, np.eye(2))
                assert np.allclose(geo.frame[:, 2], p.normal)
        # outward normal points away from the cube centre
        assert p.normal @ p.origin > 0


def test_out_of_chart_and_degenerate():
    h = HemisphereChart(R)
    with pytest.raises(OutOfChart):
        gauss_frame(h, np.array([0.0, 0.5]))
    with pytest.raises(DegenerateChart):
        generic_local_geometry(h, np.array([np.pi / 2, -1.0]))
    with pytest.raises(DegenerateChart):
        local_geometry(h, np.array([np.pi / 2, -1.0]))


def test_validate_chart():
    assert validate_chart(HemisphereChart(R), 20).passed
    assert validate_chart(cube_face("+x", 0.2604), 5).passed
    rep = validate_chart(SkewedChart(), 5)
    assert not rep.passed and rep.max_orthogonality > 0.1


def test_chart_from_config():
    h = chart_from_config({"kind": "hemisphere", "radius": 0.06})
    assert isinstance(h, HemisphereChart) and h.bounds == (-np.pi / 2, np.pi / 2, -np.pi, 0.0)
    p = chart_from_config({"kind": "plane", "face": "-y", "edge": 0.2604})
    assert isinstance(p, PlaneChart) and p.bounds == (-0.1302, 0.1302, -0.1302, 0.1302)
    with pytest.raises(ValueError):
        chart_from_config({"kind": "torus"})
