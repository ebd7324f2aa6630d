"""Small fixed-size helpers for 3-D rigid-body kinematics."""

import numpy as np

from .errors import GimbalLock, NearSingular

_GIMBAL_TOL = 1e-6


def skew(v):
    """Cross-product matrix: ``skew(v) @ w == np.cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def cross(a, b):
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` for single vectors)."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def rot_x(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_zyx_to_rot(angles):
    """Rotation ``Rz(yaw) @ Ry(pitch) @ Rx(roll)`` for ``angles = (yaw, pitch, roll)``."""
    yaw, pitch, roll = angles
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def rot_to_euler_zyx(R):
    """Inverse of :func:`euler_zyx_to_rot`; returns ``(yaw, pitch, roll)``.

    Raises GimbalLock when pitch is within 1e-6 of +-pi/2, where yaw and roll
    are not separately defined.
    """
    sp = -R[2, 0]
    cp = np.hypot(R[0, 0], R[1, 0])
    pitch = np.arctan2(sp, cp)
    if abs(abs(pitch) - np.pi / 2) < _GIMBAL_TOL:
        raise GimbalLock(f"pitch {pitch:.9f} is at a ZYX singularity")
    yaw = np.arctan2(R[1, 0], R[0, 0])
    roll = np.arctan2(R[2, 1], R[2, 2])
    return np.array([yaw, pitch, roll])


def euler_rate_map(angles):
    """6x6 map from (position rate, ZYX Euler-angle rates) to (v, omega).

    ``angles`` are (yaw, pitch, roll) as in :func:`euler_zyx_to_rot`, but the
    rate columns follow the pose-vector order (roll, pitch, yaw) rates, so
    P = I at zero attitude. The angular velocity is in the inertial frame.
    """
    yaw, pitch, _ = angles
    cp = np.cos(pitch)
    if abs(cp) < _GIMBAL_TOL:
        raise NearSingular(f"|cos(pitch)| = {abs(cp):.3e} < {_GIMBAL_TOL}")
    cy, sy, sp = np.cos(yaw), np.sin(yaw), np.sin(pitch)
    E = np.array([[cy * cp, -sy, 0.0],
                  [sy * cp, cy, 0.0],
                  [-sp, 0.0, 1.0]])
    P = np.eye(6)
    P[3:, 3:] = E
    return P


def orthonormalize(R):
    """Closest rotation matrix to ``R`` in the Frobenius norm."""
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        U[:, -1] *= -1
        Q = U @ Vt
    return Q


def is_rotation(R, tol=1e-10):
    return (np.allclose(R @ R.T, np.eye(3), atol=tol, rtol=0)
            and abs(np.linalg.det(R) - 1.0) < tol)
