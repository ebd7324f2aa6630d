"""Hand and object equations of motion under rolling, non-slipping contacts.

The hand is a set of serial fingers (two revolute joints at the base, one
between the links, hemispherical fingertip). The object is a rigid body held
at one contact per finger. With the grasp constraint
``J_h qd = G^T xd_o`` enforced at acceleration level, the contact forces are
an affine function of the joint torques, and the whole system evolves as an
ODE integrated at a fixed step with post-step drift projection.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GraspFailure, IllConditioned, OutOfChart, RankDeficient
from .integrators import rk3_step
from .rolling import ContactKinematics, ContactState, project_contact
from .spatial import cross, orthonormalize, rot_x, rot_y, skew
from .surfaces import HemisphereChart, local_geometry

GRAVITY = 9.81
_COND_LIMIT = 1e10


def cuboid_inertia(mass, dims):
    """Principal inertia of a solid cuboid about its centroid."""
    a, b, c = dims
    return mass / 12.0 * np.diag([b * b + c * c, a * a + c * c, a * a + b * b])


@dataclass
class FingerKinematics:
    p_f: np.ndarray          # fingertip frame origin (hemisphere centre)
    R_pf: np.ndarray
    J_s: np.ndarray          # 6x3, qd -> (v_f, omega_f)
    twist: np.ndarray        # (v_f, omega_f)
    bias: np.ndarray         # dJ_s/dt @ qd
    M: np.ndarray
    dM: np.ndarray           # (3, 3, 3), dM[k] = dM/dq_k
    C: np.ndarray
    tau_g: np.ndarray


class FingerModel:
    """Three-joint finger mounted at a fixed pose in the palm frame.

    Joint 1 flexes about the mount y-axis, joint 2 twists about the first
    link's long axis, joint 3 flexes the second link about the first link's
    y-axis. Links are uniform cuboids; the fingertip frame sits at the end of
    link 2 with its z-axis along the link, so the hemisphere apex points
    away from the finger.
    """

    def __init__(self, mount_position, mount_rotation, q_min, q_max,
                 link_length=0.3, link_width=0.05, link_mass=0.3, tip_radius=0.06):
        self.mount_position = np.asarray(mount_position, dtype=float)
        self.mount_rotation = np.asarray(mount_rotation, dtype=float)
        self.q_min = np.asarray(q_min, dtype=float)
        self.q_max = np.asarray(q_max, dtype=float)
        if self.q_min.shape != (3,) or self.q_max.shape != (3,):
            raise ValueError("a finger has exactly 3 joints")
        if np.any(self.q_min >= self.q_max):
            raise ValueError("joint limits must satisfy q_min < q_max")
        if min(link_length, link_width, link_mass, tip_radius) <= 0:
            raise ValueError("finger dimensions and mass must be positive")
        self.link_length = float(link_length)
        self.link_mass = float(link_mass)
        self.link_inertia = cuboid_inertia(link_mass, (link_length, link_width, link_width))
        self.chart = HemisphereChart(tip_radius)
        self.n_joints = 3

    def _chain(self, q):
        L = self.link_length
        R0 = self.mount_rotation
        R1 = R0 @ rot_y(q[0])
        R2 = R1 @ rot_x(q[1])
        R3 = R2 @ rot_y(q[2])
        base = self.mount_position
        knuckle = base + L * R2[:, 0]
        tip = knuckle + L * R3[:, 0]
        axes = (R0[:, 1], R1[:, 0], R2[:, 1])
        origins = (base, base, knuckle)
        links = ((base + 0.5 * L * R2[:, 0], R2, 2),
                 (knuckle + 0.5 * L * R3[:, 0], R3, 3))
        return axes, origins, links, tip, R3 @ rot_y(np.pi / 2)

    def fingertip_pose(self, q):
        *_, tip, R_pf = self._chain(q)
        return tip, R_pf

    def jacobian(self, q):
        """``(p_f, R_pf, J_s)`` without the dynamic terms."""
        axes, origins, _, tip, R_pf = self._chain(q)
        Z = np.column_stack(axes)
        return tip, R_pf, np.vstack((cross(Z, tip[:, None] - np.column_stack(origins)), Z))

    def kinematics(self, q, qd, gravity=GRAVITY):
        axes, origins, links, tip, R_pf = self._chain(q)
        Z = np.column_stack(axes)
        O = np.column_stack(origins)
        J_s = np.vstack((cross(Z, tip[:, None] - O), Z))
        twist = J_s @ qd

        # dJ_s/dt qd; joint axes ride on the link before them
        W = Z @ (np.triu(np.ones((3, 3)), 1) * qd[:, None])   # angular velocity before joint j
        Zd = cross(W, Z)
        V = np.zeros((3, 3))                                   # velocity of each joint origin
        V[:, 2] = cross(Z[:, :2], O[:, 2:3] - O[:, :2]) @ qd[:2]
        bias = np.concatenate(((cross(Zd, tip[:, None] - O)
                                + cross(Z, twist[:3, None] - V)) @ qd, Zd @ qd))

        M = np.zeros((3, 3))
        dM = np.zeros((3, 3, 3))
        m = self.link_mass
        g_vec = np.array([0.0, 0.0, -gravity])
        tau_g = np.zeros(3)
        idx = np.arange(3)
        for com, R, nj in links:
            used = idx < nj
            Jv = np.where(used, cross(Z, com[:, None] - O), 0.0)
            Jw = np.where(used, Z, 0.0)
            Iw = R @ self.link_inertia @ R.T
            M += m * Jv.T @ Jv + Jw.T @ Iw @ Jw
            tau_g += m * Jv.T @ g_vec
            for k in range(nj):
                Sk = skew(Z[:, k])
                later = used & (idx > k)
                w = Sk @ (com - O[:, k])
                dJv = np.where(later, Sk @ Jv, np.where(used, -skew(w) @ Z, 0.0))
                dJw = np.where(later, Sk @ Z, 0.0)
                A = m * dJv.T @ Jv + dJw.T @ Iw @ Jw
                dM[k] += A + A.T + Jw.T @ (Sk @ Iw - Iw @ Sk) @ Jw
        # Christoffel symbols of the first kind contracted with qd
        C = 0.5 * (np.einsum("kij,k->ij", dM, qd)
                   + np.einsum("jik,k->ij", dM, qd)
                   - np.einsum("ijk,k->ij", dM, qd))
        return FingerKinematics(tip, R_pf, J_s, twist, bias, M, dM, C, tau_g)


class ObjectModel:
    """Rigid cube with one plane chart per contacted face."""

    def __init__(self, mass, edge, inertia=None):
        if mass <= 0 or edge <= 0:
            raise ValueError("object mass and edge must be positive")
        self.mass = float(mass)
        self.edge = float(edge)
        if inertia is None:
            inertia = mass * edge * edge / 6.0 * np.eye(3)
        inertia = np.asarray(inertia, dtype=float)
        if not np.allclose(inertia, inertia.T) or np.min(np.linalg.eigvalsh(inertia)) <= 0:
            raise ValueError("object inertia must be symmetric positive definite")
        self.inertia = inertia


def object_terms(model, R_po, omega, gravity=GRAVITY):
    """Inertia, gyroscopic and gravity-wrench terms of the object in the palm frame."""
    Iw = R_po @ model.inertia @ R_po.T
    M_o = np.zeros((6, 6))
    M_o[:3, :3] = model.mass * np.eye(3)
    M_o[3:, 3:] = Iw
    C_o = np.zeros((6, 6))
    C_o[3:, 3:] = skew(omega) @ Iw
    w_e = np.array([0.0, 0.0, -model.mass * gravity, 0.0, 0.0, 0.0])
    return M_o, C_o, w_e


def grasp_map(object_position, contact_points, check=True):
    """6 x 3n map from stacked contact forces to the wrench about the object COM."""
    pts = np.asarray(contact_points, dtype=float).reshape(-1, 3)
    G = np.zeros((6, 3 * len(pts)))
    for i, p in enumerate(pts):
        G[:3, 3 * i:3 * i + 3] = np.eye(3)
        G[3:, 3 * i:3 * i + 3] = skew(p - object_position)
    if check and np.linalg.matrix_rank(G) < 6:
        raise RankDeficient("grasp map has rank < 6; contacts are collinear or too few")
    return G


def hand_jacobian_block(J_s, p_fc):
    """Contact-point Jacobian of one finger: ``[I, -skew(p_fc)] @ J_s``."""
    return J_s[:3] - skew(p_fc) @ J_s[3:]


@dataclass
class GraspState:
    q: np.ndarray
    qd: np.ndarray
    p_o: np.ndarray
    R_po: np.ndarray
    v_o: np.ndarray
    w_o: np.ndarray
    contacts: list
    t: float = 0.0
    health: dict = field(default_factory=dict)

    @property
    def xd_o(self):
        return np.concatenate((self.v_o, self.w_o))

    def copy(self):
        return GraspState(self.q.copy(), self.qd.copy(), self.p_o.copy(), self.R_po.copy(),
                          self.v_o.copy(), self.w_o.copy(),
                          [c.copy() for c in self.contacts], self.t, dict(self.health))


class Snapshot:
    """All state-dependent terms of the coupled dynamics at one instant.

    Joint torques enter linearly: ``f_c = F u + f0``, ``qdd = Qa u + q0``,
    ``xdd_o = Xa u + x0``.
    """

    def __init__(self, system, state):
        self.state = state
        n = system.n_contacts
        m = 3 * n
        q, qd = state.q, state.qd
        omega_o = state.w_o
        self.fingers = []
        self.contacts = []
        J_h = np.zeros((3 * n, m))
        M_h = np.zeros((m, m))
        M_h_inv = np.zeros((m, m))
        C_h = np.zeros((m, m))
        tau_e = np.zeros(m)
        Jd_qd = np.zeros(3 * n)
        Gd_xd = np.zeros(3 * n)
        p_c = np.zeros((n, 3))
        p_oc = np.zeros((n, 3))
        for i, (finger, face) in enumerate(zip(system.fingers, system.faces)):
            sl = slice(3 * i, 3 * i + 3)
            fk = finger.kinematics(q[sl], qd[sl], system.gravity)
            try:
                ck = ContactKinematics(state.contacts[i], finger.chart, face, fk.R_pf,
                                       fk.twist[3:], omega_o, system.spin)
            except OutOfChart as exc:
                raise GraspFailure(str(exc), contact=i) from exc
            self.fingers.append(fk)
            self.contacts.append(ck)

            p_fc = fk.R_pf @ ck.gf.point
            p_oc[i] = state.R_po @ ck.go.point
            p_c[i] = fk.p_f + p_fc
            J_h[sl, sl] = hand_jacobian_block(fk.J_s, p_fc)
            M_h[sl, sl] = fk.M
            M_h_inv[sl, sl] = np.linalg.inv(fk.M)
            C_h[sl, sl] = fk.C
            tau_e[sl] = fk.tau_g

            _, cf_a, cf_b, *_ = finger.chart.derivatives(ck.state.xi_f)
            _, co_a, co_b, *_ = face.derivatives(ck.state.xi_o)
            rf, ro = ck.rates.xi_f, ck.rates.xi_o
            w_f = fk.twist[3:]
            p_fc_dot = cross(w_f, p_fc) + fk.R_pf @ (cf_a * rf[0] + cf_b * rf[1])
            p_oc_dot = cross(omega_o, p_oc[i]) + state.R_po @ (co_a * ro[0] + co_b * ro[1])
            Jd_qd[sl] = (cross(w_f, p_fc_dot) + fk.bias[:3]
                         - cross(p_fc, fk.bias[3:]))
            Gd_xd[sl] = cross(omega_o, p_oc_dot)

        self.J_h, self.M_h, self.M_h_inv, self.C_h, self.tau_e = J_h, M_h, M_h_inv, C_h, tau_e
        self.Jd_qd, self.Gd_xd = Jd_qd, Gd_xd
        self.p_c, self.p_oc = p_c, p_oc
        self.G = np.zeros((6, 3 * n))
        for i in range(n):
            self.G[:3, 3 * i:3 * i + 3] = np.eye(3)
            self.G[3:, 3 * i:3 * i + 3] = skew(p_oc[i])
        G = self.G
        xd = state.xd_o
        self.M_o, self.C_o, self.w_e = object_terms(system.object, state.R_po, omega_o,
                                                    system.gravity)
        M_o_inv = np.linalg.inv(self.M_o)
        self.M_o_inv = M_o_inv

        B_ho = J_h @ M_h_inv @ J_h.T + G.T @ M_o_inv @ G
        cond = np.linalg.cond(B_ho)
        if not np.isfinite(cond) or cond > _COND_LIMIT:
            raise IllConditioned(f"cond(B_ho) = {cond:.3e}")
        self.B_ho = B_ho
        JMinv = J_h @ M_h_inv
        self.F = np.linalg.solve(B_ho, JMinv)
        self.f0 = np.linalg.solve(B_ho, JMinv @ (-C_h @ qd + tau_e) + Jd_qd - Gd_xd
                                  + G.T @ M_o_inv @ (self.C_o @ xd - self.w_e))
        self.Qa = M_h_inv @ (np.eye(m) - J_h.T @ self.F)
        self.q0 = M_h_inv @ (-C_h @ qd - J_h.T @ self.f0 + tau_e)
        self.Xa = M_o_inv @ G @ self.F
        self.x0 = M_o_inv @ (-self.C_o @ xd + G @ self.f0 + self.w_e)

    def contact_force(self, u):
        return self.F @ u + self.f0

    def accelerations(self, u):
        return self.Qa @ u + self.q0, self.Xa @ u + self.x0

    def grasp_residual(self):
        return float(np.linalg.norm(self.J_h @ self.state.qd - self.G.T @ self.state.xd_o))


class GraspSystem:
    """Coupled hand-object model: ``fingers[i]`` touches object chart ``faces[i]``."""

    def __init__(self, fingers, obj, faces, workspace=None, gravity=GRAVITY, spin=True):
        if len(fingers) != len(faces):
            raise ValueError("one object face chart per finger is required")
        if len(fingers) < 3:
            raise RankDeficient("at least three contacts are needed for a full-rank grasp map")
        self.fingers = list(fingers)
        self.faces = list(faces)
        self.object = obj
        self.gravity = float(gravity)
        self.spin = spin
        self.n_contacts = len(fingers)
        self.n_joints = 3 * self.n_contacts
        if workspace is None:
            workspace = [f.chart.bounds for f in self.fingers]
        self.workspace = [tuple(float(v) for v in box) for box in workspace]

    def evaluate(self, state):
        return Snapshot(self, state)

    def initial_state(self, q, p_o, R_po, t=0.0):
        """Static grasp at joint angles ``q``; contact coordinates are solved
        geometrically starting from the fingertip chart centre."""
        q = np.asarray(q, dtype=float)
        contacts = []
        gaps = []
        for i, (finger, face) in enumerate(zip(self.fingers, self.faces)):
            p_f, R_pf = finger.fingertip_pose(q[3 * i:3 * i + 3])
            a0, a1, b0, b1 = finger.chart.bounds
            guess = ContactState(np.array([0.5 * (a0 + a1), 0.5 * (b0 + b1)]), np.zeros(2), 0.0)
            cs, gap = project_contact(finger.chart, face, p_f, R_pf, p_o, R_po, guess)
            contacts.append(cs)
            gaps.append(gap)
        state = GraspState(q.copy(), np.zeros_like(q), np.asarray(p_o, float).copy(),
                           np.asarray(R_po, float).copy(), np.zeros(3), np.zeros(3),
                           contacts, t)
        state.health["gap"] = float(np.max(np.abs(gaps)))
        return state

    # state <-> flat vector
    def pack(self, s):
        parts = [s.q, s.qd, s.p_o, s.R_po.ravel(), s.v_o, s.w_o]
        for c in s.contacts:
            parts += [c.xi_f, c.xi_o, [c.psi]]
        return np.concatenate(parts)

    def unpack(self, y, t):
        m = self.n_joints
        q, qd = y[:m], y[m:2 * m]
        k = 2 * m
        p_o, R_po = y[k:k + 3], y[k + 3:k + 12].reshape(3, 3)
        v_o, w_o = y[k + 12:k + 15], y[k + 15:k + 18]
        k += 18
        contacts = []
        for _ in range(self.n_contacts):
            contacts.append(ContactState(y[k:k + 2].copy(), y[k + 2:k + 4].copy(), float(y[k + 4])))
            k += 5
        return GraspState(q.copy(), qd.copy(), p_o.copy(), R_po.copy(), v_o.copy(),
                          w_o.copy(), contacts, t)

    def derivative(self, state, u, snap=None):
        if snap is None:
            snap = Snapshot(self, state)
        qdd, xdd = snap.accelerations(u)
        parts = [state.qd, qdd, state.v_o, (skew(state.w_o) @ state.R_po).ravel(), xdd]
        for ck in snap.contacts:
            r = ck.rates
            parts += [r.xi_f, r.xi_o, [r.psi]]
        return np.concatenate(parts)

    def outside_workspace(self, state):
        """Indices of contacts whose fingertip coordinates left the workspace box."""
        out = []
        for i, (c, box) in enumerate(zip(state.contacts, self.workspace)):
            a, b = c.xi_f
            if not (box[0] <= a <= box[1] and box[2] <= b <= box[3]):
                out.append(i)
        return out

    def step(self, state, u, dt, snap=None):
        """Advance one fixed step with torque ``u`` held constant.

        After the Runge-Kutta update the object rotation is re-orthonormalized,
        contact coordinates are re-solved geometrically (closing any normal gap
        by moving the finger), and joint velocities are projected back onto the
        grasp constraint. Projection sizes land in ``health`` of the result.
        ``snap`` may pass an already evaluated Snapshot of ``state``.
        """
        if dt <= 0:
            raise ValueError("dt must be positive")
        u = np.asarray(u, dtype=float)

        def f(t, y):
            return self.derivative(self.unpack(y, t), u)

        k1 = None if snap is None else self.derivative(state, u, snap)
        y1 = rk3_step(f, state.t, self.pack(state), dt, k1)
        new = self.unpack(y1, state.t + dt)
        out = self.outside_workspace(new)
        if out:
            raise GraspFailure(f"contact {out[0]} left the fingertip workspace at t={new.t:.4f}",
                               contact=out[0])
        return self.project(new)

    def project(self, state):
        health = {}
        R_fixed = orthonormalize(state.R_po)
        health["rotation"] = float(np.linalg.norm(R_fixed - state.R_po))
        state.R_po = R_fixed

        coincidence = 0.0
        max_gap = 0.0
        dq_norm = 0.0
        for i, (finger, face) in enumerate(zip(self.fingers, self.faces)):
            sl = slice(3 * i, 3 * i + 3)
            c = state.contacts[i]
            p_f, R_pf = finger.fingertip_pose(state.q[sl])
            try:
                pf_c = p_f + R_pf @ finger.chart.point(c.xi_f)
                po_c = state.p_o + state.R_po @ face.point(c.xi_o)
                coincidence = max(coincidence, float(np.linalg.norm(pf_c - po_c)))
                cs, gap = project_contact(finger.chart, face, p_f, R_pf, state.p_o,
                                          state.R_po, c)
                max_gap = max(max_gap, abs(gap))
                if gap != 0.0:
                    # close the gap by moving the fingertip centre along its normal
                    n_w = R_pf @ local_geometry(finger.chart, cs.xi_f).frame[:, 2]
                    J_s = finger.jacobian(state.q[sl])[2]
                    dq = np.linalg.solve(J_s[:3], gap * n_w)
                    state.q[sl] += dq
                    dq_norm = max(dq_norm, float(np.linalg.norm(dq)))
                    p_f, R_pf = finger.fingertip_pose(state.q[sl])
                    cs, _ = project_contact(finger.chart, face, p_f, R_pf, state.p_o,
                                            state.R_po, cs)
            except OutOfChart as exc:
                raise GraspFailure(str(exc), contact=i) from exc
            state.contacts[i] = cs

        J_h, G = self.constraint_jacobians(state)
        resid = G.T @ state.xd_o - J_h @ state.qd
        dqd = np.linalg.lstsq(J_h, resid, rcond=None)[0]
        state.qd = state.qd + dqd
        health["coincidence"] = coincidence
        health["gap"] = max_gap
        health["dq"] = dq_norm
        health["residual"] = float(np.linalg.norm(resid))
        health["dqd"] = float(np.linalg.norm(dqd))
        state.health = health
        return state

    def constraint_jacobians(self, state):
        """Hand Jacobian and grasp map at the current configuration."""
        n = self.n_contacts
        J_h = np.zeros((3 * n, self.n_joints))
        pts = np.zeros((n, 3))
        for i, (finger, face) in enumerate(zip(self.fingers, self.faces)):
            sl = slice(3 * i, 3 * i + 3)
            _, R_pf, J_s = finger.jacobian(state.q[sl])
            J_h[sl, sl] = hand_jacobian_block(J_s, R_pf @ finger.chart.point(state.contacts[i].xi_f))
            pts[i] = state.p_o + state.R_po @ face.point(state.contacts[i].xi_o)
        return J_h, grasp_map(state.p_o, pts, check=False)

    def grasp_residual(self, state):
        """``|J_h qd - G^T xd_o|`` at ``state``."""
        J_h, G = self.constraint_jacobians(state)
        return float(np.linalg.norm(J_h @ state.qd - G.T @ state.xd_o))
