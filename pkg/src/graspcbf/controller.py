"""Nominal grasp controller and the QP safety filter around it."""

from dataclasses import dataclass, field

import numpy as np

from .constraints import assemble
from .errors import SingularJh
from .qp import QpProblem, solve
from .spatial import euler_rate_map, rot_to_euler_zyx

_JH_COND_LIMIT = 1e10


@dataclass(frozen=True)
class NominalGains:
    K_p: np.ndarray
    K_d: np.ndarray
    k_f: float

    def __post_init__(self):
        for name in ("K_p", "K_d"):
            K = np.asarray(getattr(self, name), dtype=float)
            if K.shape != (6, 6):
                raise ValueError(f"{name} must be 6x6")
            if not np.allclose(K, K.T, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(K).min() <= 0:
                raise ValueError(f"{name} must be positive definite")
            object.__setattr__(self, name, K)
        if not self.k_f > 0:
            raise ValueError("k_f must be positive")

    @classmethod
    def scalar(cls, kp, kd, kf):
        return cls(kp * np.eye(6), kd * np.eye(6), kf)


@dataclass(frozen=True)
class Reference:
    """Cosine reference ``r(t) = center + amplitude * cos(frequency * t)``.

    The pose vector is ``(x, y, z, roll, pitch, yaw)``.
    """
    center: np.ndarray = field(default_factory=lambda: np.zeros(6))
    amplitude: np.ndarray = field(default_factory=lambda: np.array([0, 0, 0.25, 0, 0, 2.0]))
    frequency: float = 1.0

    def __call__(self, t):
        w = self.frequency
        c, s = np.cos(w * t), np.sin(w * t)
        a = np.asarray(self.amplitude, dtype=float)
        r = np.asarray(self.center, dtype=float) + a * c
        return r, -w * a * s, -w * w * a * c


def reference(t, ref=None):
    """``(r, r_dot, r_ddot)`` of the default twist-and-pull reference or ``ref``."""
    return (ref or Reference())(t)


def object_pose(state):
    """Pose vector ``(x, y, z, roll, pitch, yaw)`` and the map P from its rate to the twist."""
    yaw, pitch, roll = rot_to_euler_zyx(state.R_po)
    P = euler_rate_map((yaw, pitch, roll))
    return np.concatenate((state.p_o, (roll, pitch, yaw))), P


def pose_error(r, pose):
    e = r - pose
    e[3:] = (e[3:] + np.pi) % (2 * np.pi) - np.pi
    return e


def nominal_control(snap, t, ref, gains):
    """Computed-torque object tracking plus an internal squeezing force.

    Returns ``(u_nom, info)`` where ``info`` holds the tracking error.
    """
    state = snap.state
    J_h, G = snap.J_h, snap.G
    cond = np.linalg.cond(J_h)
    if not np.isfinite(cond) or cond > _JH_COND_LIMIT:
        raise SingularJh(f"cond(J_h) = {cond:.3e}")
    J_inv = np.linalg.inv(J_h)
    W = G @ J_inv.T                       # maps hand torques-in-contact-space to the object
    xd = state.xd_o

    pose, P = object_pose(state)
    r, r_dot, r_ddot = ref(t)
    e = pose_error(r, pose)
    e_dot = r_dot - np.linalg.solve(P, xd)

    M_ho = snap.M_o + W @ snap.M_h @ W.T
    C_ho_xd = (snap.C_o @ xd
               + W @ (snap.C_h @ state.qd + snap.M_h @ J_inv @ (snap.Gd_xd - snap.Jd_qd)))
    u_m = M_ho @ P @ (r_ddot + gains.K_p @ e + gains.K_d @ e_dot) + C_ho_xd - snap.w_e

    centroid = snap.p_c.mean(axis=0)
    u_f = (gains.k_f * (centroid - snap.p_c)).ravel()
    u_nom = J_h.T @ (np.linalg.pinv(G) @ u_m + u_f) - snap.tau_e
    return u_nom, {"error": e, "error_dot": e_dot}


@dataclass
class FilterResult:
    u: np.ndarray
    u_nom: np.ndarray
    rows: object
    solution: object
    info: dict


def filter_step(snap, t, ref, gains, settings, warm_start=()):
    """Nominal control passed through the minimum-deviation QP.

    Raises Infeasible (carrying the partial solution) when the constraint
    set is empty at this state.
    """
    u_nom, info = nominal_control(snap, t, ref, gains)
    rows = assemble(snap, settings)
    sol = solve(QpProblem.from_rows(u_nom, rows), warm_start=warm_start)
    return FilterResult(sol.u, u_nom, rows, sol, info)
