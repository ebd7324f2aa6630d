import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from graspcbf.constraints import ConstraintSettings, required_friction
from graspcbf.controller import (NominalGains, Reference, filter_step, nominal_control,
                                 object_pose, pose_error, reference)


def test_default_reference_examples():
    r, rd, rdd = reference(0.0)
    assert np.allclose(r, [0, 0, 0.25, 0, 0, 2.0])
    assert np.allclose(rd, 0) and np.allclose(rdd, [0, 0, -0.25, 0, 0, -2.0])
    r, rd, _ = reference(np.pi / 2)
    assert np.allclose(r, 0, atol=1e-15)
    assert np.allclose(rd, [0, 0, -0.25, 0, 0, -2.0])


@given(st.floats(0, 20))
def test_reference_derivatives_consistent(t):
    h = 1e-5
    r0, rd, rdd = reference(t)
    rp, rdp, _ = reference(t + h)
    rm, rdm, _ = reference(t - h)
    assert np.allclose((rp - rm) / (2 * h), rd, atol=1e-8)
    assert np.allclose((rdp - rdm) / (2 * h), rdd, atol=1e-8)


@pytest.mark.parametrize("K", [np.eye(5), -np.eye(6), np.triu(np.ones((6, 6))),
                               np.diag([1, 1, 1, 1, 1, 0.0])])
def test_gains_validation(K):
    with pytest.raises(ValueError):
        NominalGains(K, np.eye(6), 1.0)
    with pytest.raises(ValueError):
        NominalGains(np.eye(6), K, 1.0)


def test_gains_reject_nonpositive_squeeze():
    with pytest.raises(ValueError):
        NominalGains.scalar(1, 1, 0.0)


def test_pose_error_wraps_angles():
    e = pose_error(np.array([0, 0, 0, 0, 0, np.pi - 0.1]), np.array([0, 0, 0, 0, 0, -np.pi + 0.1]))
    assert np.isclose(e[5], -0.2)


def _hold_reference(state):
    pose, _ = object_pose(state)
    return Reference(pose, np.zeros(6), 1.0)


def test_zero_error_holds_object_still(canonical, canonical_model):
    system, state, settings = canonical_model
    snap = system.evaluate(state)
    u, info = nominal_control(snap, 0.0, _hold_reference(state), canonical.gains)
    assert np.allclose(info["error"], 0, atol=1e-12)
    q_dd, x_dd = snap.accelerations(u)
    assert np.abs(x_dd).max() < 1e-9
    # squeeze points every contact force into the object (positive normal)
    beta = required_friction(snap.contact_force(u), [c.R_cp for c in snap.contacts])
    assert np.all(beta < canonical.mu)


def test_squeeze_is_internal(canonical_model):
    system, state, _ = canonical_model
    snap = system.evaluate(state)
    G = snap.G
    assert np.allclose(G @ np.linalg.pinv(G), np.eye(6), atol=1e-12)
    u_f = (snap.p_c.mean(axis=0) - snap.p_c).ravel()
    assert np.allclose(G @ u_f, 0, atol=1e-12)


@hsettings(max_examples=20, deadline=None)
@given(st.floats(0.1, 50), st.floats(0.1, 50), st.floats(0.1, 50))
def test_squeeze_does_not_move_object(kp, kd, kf):
    """Only the internal force depends on k_f; the object acceleration doesn't."""
    system, state, _ = _model()
    snap = system.evaluate(state)
    ref = Reference(np.array([0, 0, 0.3, 0, 0, 0.2]), np.zeros(6), 1.0)
    u1, _ = nominal_control(snap, 0.0, ref, NominalGains.scalar(kp, kd, kf))
    u2, _ = nominal_control(snap, 0.0, ref, NominalGains.scalar(kp, kd, 2 * kf))
    x1, x2 = snap.accelerations(u1)[1], snap.accelerations(u2)[1]
    assert np.allclose(x1, x2, atol=1e-9 * (1 + np.abs(x1).max()))


_MODEL = {}


def _model():
    if not _MODEL:
        from graspcbf import canonical_config
        _MODEL["m"] = canonical_config().build()
    return _MODEL["m"]


def test_filter_passthrough_without_constraints(canonical, canonical_model):
    system, state, settings = canonical_model
    snap = system.evaluate(state)
    off = ConstraintSettings(**{**settings.__dict__, "families": ()})
    res = filter_step(snap, 0.0, canonical.reference, canonical.gains, off)
    assert np.array_equal(res.u, res.u_nom) and len(res.rows) == 0


def test_filter_output_satisfies_rows(canonical, canonical_model):
    system, state, settings = canonical_model
    snap = system.evaluate(state)
    res = filter_step(snap, 0.0, canonical.reference, canonical.gains, settings)
    assert np.all(res.rows.margins(res.u) >= -1e-9)
    assert res.solution.kkt["stationarity"] <= 1e-8
