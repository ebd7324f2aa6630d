"""Rolling-contact kinematics between a fingertip and the object surface.

Contact coordinates ``xi_f`` (fingertip chart), ``xi_o`` (object chart) and
the contact angle ``psi`` evolve under the Montana equations driven by the
relative angular velocity of fingertip and object. The contact frame is the
fingertip Gauss frame at ``xi_f``; its z-axis is the fingertip outward
normal, which points into the object.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FlatOnFlat
from .spatial import skew
from .surfaces import local_geometry

# [0 -1 0; 1 0 0]: picks (-w_y, w_x) out of a contact-frame angular velocity
ROLL_SELECT = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0]])
_FLAT_COND = 1e10


@dataclass
class ContactState:
    xi_f: np.ndarray
    xi_o: np.ndarray
    psi: float

    def copy(self):
        return ContactState(self.xi_f.copy(), self.xi_o.copy(), float(self.psi))


@dataclass(frozen=True)
class ContactRates:
    xi_f: np.ndarray
    xi_o: np.ndarray
    psi: float


def rotation_psi(psi):
    """The 2x2 contact-angle matrix (a reflection, det = -1)."""
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[c, -s], [-s, -c]])


def _rotation_psi_dot(psi):
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[-s, -c], [-c, s]])


def _relative_curvature(finger_tensors, object_tensors, psi):
    Rp = rotation_psi(psi)
    S = finger_tensors.K + Rp @ object_tensors.K @ Rp
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) > _FLAT_COND:
        raise FlatOnFlat("relative curvature is singular for this contact pair")
    return S


def h_matrices(finger_tensors, object_tensors, psi):
    """Return ``(H_f, H_o)`` mapping contact-frame angular velocity to
    coordinate rates on the fingertip and object charts."""
    S = _relative_curvature(finger_tensors, object_tensors, psi)
    core = np.linalg.solve(S, ROLL_SELECT)
    H_f = np.linalg.solve(finger_tensors.M, core)
    H_o = np.linalg.solve(object_tensors.M, rotation_psi(psi) @ core)
    return H_f, H_o


def contact_frame(chart, xi_f, R_pf):
    """Rotation R_cp taking inertial-frame vectors into the contact frame."""
    return (R_pf @ local_geometry(chart, xi_f).frame).T


def contact_angle(R_pc_f, R_pc_o):
    """Contact angle from the inertial Gauss frames of fingertip and object."""
    x_o = R_pc_o[:, 0]
    return float(np.arctan2(-(R_pc_f[:, 1] @ x_o), R_pc_f[:, 0] @ x_o))


class ContactKinematics:
    """Montana kinematics of one contact evaluated at a fixed instant.

    ``spin=True`` adds the normal component of the relative angular velocity
    to the contact-angle rate. Without it the angle only follows the torsion
    terms, which is exact for rolling with zero relative spin.
    """

    def __init__(self, state, finger_chart, object_chart, R_pf, omega_f, omega_o,
                 spin=True):
        self.state = state
        self.gf = local_geometry(finger_chart, state.xi_f)
        self.go = local_geometry(object_chart, state.xi_o)
        self.finger_chart, self.object_chart = finger_chart, object_chart
        self.R_pf = R_pf
        self.omega_f, self.omega_o = omega_f, omega_o
        self.spin = spin

        tf, to = self.gf.tensors, self.go.tensors
        self.S = _relative_curvature(tf, to, state.psi)
        self.Rpsi = rotation_psi(state.psi)
        self.core = np.linalg.solve(self.S, ROLL_SELECT)
        self.H_f = np.linalg.solve(tf.M, self.core)
        self.H_o = np.linalg.solve(to.M, self.Rpsi @ self.core)

        self.R_pc = R_pf @ self.gf.frame
        self.R_cp = self.R_pc.T
        self.omega_rel = omega_f - omega_o
        self.w_c = self.R_cp @ self.omega_rel
        xi_f_dot = self.H_f @ self.w_c
        xi_o_dot = self.H_o @ self.w_c
        psi_dot = tf.T @ tf.M @ xi_f_dot + to.T @ to.M @ xi_o_dot
        if spin:
            psi_dot += self.w_c[2]
        self.rates = ContactRates(xi_f_dot, xi_o_dot, float(psi_dot))

    def accel_terms(self):
        """Split ``xi_f_ddot = drift + amap @ (domega_f - domega_o)``.

        ``drift`` is d/dt[H_f R_cp] applied to the relative angular velocity,
        built from the analytic tensor-field derivatives of both charts.
        """
        rates = self.rates
        tf, to = self.gf.tensors, self.go.tensors
        dM_f, dK_f = self.finger_chart.tensor_jacobian(self.state.xi_f)
        _, dK_o = self.object_chart.tensor_jacobian(self.state.xi_o)
        M_dot = np.tensordot(rates.xi_f, dM_f, axes=1)
        Kf_dot = np.tensordot(rates.xi_f, dK_f, axes=1)
        Ko_dot = np.tensordot(rates.xi_o, dK_o, axes=1)
        Rp, Rp_dot = self.Rpsi, _rotation_psi_dot(self.state.psi) * rates.psi
        S_dot = Kf_dot + Rp_dot @ to.K @ Rp + Rp @ Ko_dot @ Rp + Rp @ to.K @ Rp_dot

        Minv = np.linalg.inv(tf.M)
        H_dot = -Minv @ M_dot @ self.H_f - Minv @ np.linalg.solve(self.S, S_dot @ self.core)

        frame_dot = np.tensordot(rates.xi_f, self.gf.dframe, axes=1)
        R_pc_dot = skew(self.omega_f) @ self.R_pc + self.R_pf @ frame_dot
        drift = H_dot @ self.w_c + self.H_f @ (R_pc_dot.T @ self.omega_rel)
        return drift, self.H_f @ self.R_cp


def contact_rates(state, omega_f, omega_o, finger_chart, object_chart, R_pf, spin=True):
    return ContactKinematics(state, finger_chart, object_chart, R_pf,
                             omega_f, omega_o, spin).rates


def contact_accel_terms(state, omega_f, omega_o, finger_chart, object_chart, R_pf,
                        spin=True):
    kin = ContactKinematics(state, finger_chart, object_chart, R_pf, omega_f, omega_o, spin)
    return kin.accel_terms()


def project_contact(finger_chart, object_chart, p_f, R_pf, p_o, R_po, state,
                    tol=1e-13, max_iter=20):
    """Re-solve contact coordinates so both surfaces touch with opposed normals.

    Solves for ``(xi_f, xi_o, gap)`` with the fingertip point displaced by
    ``gap`` along its normal landing on the object point and the two normals
    anti-parallel. Newton iterations start from ``state``. Returns the
    corrected :class:`ContactState` and the signed gap (positive = apart).
    """
    xi_f = np.array(state.xi_f, dtype=float)
    xi_o = np.array(state.xi_o, dtype=float)
    gap = 0.0
    for _ in range(max_iter):
        gf = local_geometry(finger_chart, xi_f)
        go = local_geometry(object_chart, xi_o)
        _, cf_a, cf_b, *_ = finger_chart.derivatives(xi_f)
        _, co_a, co_b, *_ = object_chart.derivatives(xi_o)
        Ff = R_pf @ gf.frame
        Fo = R_po @ go.frame
        n_o = Fo[:, 2]
        r = np.concatenate((
            p_f + R_pf @ gf.point + gap * Ff[:, 2] - p_o - R_po @ go.point,
            [Ff[:, 0] @ n_o, Ff[:, 1] @ n_o],
        ))
        if np.max(np.abs(r)) < tol:
            break
        J = np.zeros((5, 5))
        for k, (cf_k, co_k) in enumerate(((cf_a, co_a), (cf_b, co_b))):
            dFf = R_pf @ gf.dframe[k]
            dFo = R_po @ go.dframe[k]
            J[:3, k] = R_pf @ cf_k + gap * dFf[:, 2]
            J[:3, 2 + k] = -R_po @ co_k
            J[3, k], J[4, k] = dFf[:, 0] @ n_o, dFf[:, 1] @ n_o
            J[3, 2 + k], J[4, 2 + k] = Ff[:, 0] @ dFo[:, 2], Ff[:, 1] @ dFo[:, 2]
        J[:3, 4] = Ff[:, 2]
        step = np.linalg.solve(J, -r)
        xi_f += step[:2]
        xi_o += step[2:4]
        gap += step[4]
    R_pc_f = R_pf @ local_geometry(finger_chart, xi_f).frame
    R_pc_o = R_po @ local_geometry(object_chart, xi_o).frame
    return ContactState(xi_f, xi_o, contact_angle(R_pc_f, R_pc_o)), float(gap)
