"""Grasp constraints as linear inequalities ``A u >= b`` on joint torques.

Four families, always stacked in this order:

* slip      -- contact forces inside an inscribed friction pyramid
* joint     -- barrier rows keeping every joint inside its limits
* rolling   -- barrier rows keeping fingertip contact coordinates in a box
* actuator  -- torque bounds
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveNormal
from .zcbf import FAMILIES, BarrierSpec, barrier_value, second_order_terms


@dataclass(frozen=True)
class FrictionPyramid:
    mu: float
    faces: int
    block: np.ndarray   # faces x 3, rows act on a contact-frame force

    def matrix(self, n_contacts):
        """Block-diagonal Lambda for ``n_contacts`` contacts."""
        return np.kron(np.eye(n_contacts), self.block)


def build_pyramid(mu, faces):
    """Inscribed ``faces``-sided pyramid of the cone ``|f_t| <= mu f_n``.

    Row k is ``(-cos t_k, -sin t_k, mu cos(pi/faces))`` with
    ``t_k = 2 pi k / faces``; a force is strictly inside when every row is
    positive.
    """
    if not mu > 0:
        raise ValueError("friction coefficient must be positive")
    if faces < 3:
        raise ValueError("a friction pyramid needs at least 3 faces")
    theta = 2 * np.pi * np.arange(faces) / faces
    block = np.column_stack((-np.cos(theta), -np.sin(theta),
                             np.full(faces, mu * np.cos(np.pi / faces))))
    return FrictionPyramid(float(mu), int(faces), block)


@dataclass
class ConstraintRows:
    A: np.ndarray
    b: np.ndarray
    families: np.ndarray       # family tag per row
    strict: np.ndarray         # rows that stand for a strict inequality
    h: np.ndarray              # constraint value per row (nan where it depends on u)
    h_dot: np.ndarray
    B: np.ndarray
    offset: np.ndarray         # constraint value = A u - b + offset

    @classmethod
    def empty(cls, m):
        z = np.zeros(0)
        return cls(np.zeros((0, m)), z, np.zeros(0, dtype=object), np.zeros(0, dtype=bool),
                   z, z, z, z)

    def __len__(self):
        return self.b.size

    @classmethod
    def concat(cls, parts, m):
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty(m)
        return cls(np.vstack([p.A for p in parts]),
                   *[np.concatenate([getattr(p, k) for p in parts])
                     for k in ("b", "families", "strict", "h", "h_dot", "B", "offset")])

    def select(self, families):
        keep = np.isin(self.families, list(families))
        return ConstraintRows(self.A[keep], self.b[keep], self.families[keep], self.strict[keep],
                              self.h[keep], self.h_dot[keep], self.B[keep], self.offset[keep])

    def margins(self, u):
        return self.A @ u - self.b

    def values(self, u):
        """Constraint values at ``u``: the slip cone margin for slip rows, the
        barrier condition for joint/rolling rows, distance to the bound for
        actuator rows."""
        return self.A @ u - self.b + self.offset


def _rows(A, b, family, h=None, h_dot=None, B=None, offset=None, strict=False):
    k = b.size
    nan = np.full(k, np.nan)
    return ConstraintRows(np.atleast_2d(A), b, np.full(k, family, dtype=object),
                          np.full(k, strict), nan if h is None else h,
                          nan if h_dot is None else h_dot, nan if B is None else B,
                          np.zeros(k) if offset is None else offset)


def contact_rotation(snap):
    """Block-diagonal R_cp over all contacts."""
    n = len(snap.contacts)
    R = np.zeros((3 * n, 3 * n))
    for i, ck in enumerate(snap.contacts):
        R[3 * i:3 * i + 3, 3 * i:3 * i + 3] = ck.R_cp
    return R


def no_slip_rows(snap, pyramid, margin=1e-3):
    """``Lambda R_cp f_c(u) >= margin`` written as rows on ``u``."""
    n = len(snap.contacts)
    LR = pyramid.matrix(n) @ contact_rotation(snap)
    A = LR @ snap.F
    b = margin - LR @ snap.f0
    return _rows(A, b, "slip", offset=np.full(b.size, margin), strict=True)


def _barrier_rows(spec, h, h_dot, drift, amap, family):
    Lf_B, Lg_B = second_order_terms(spec, h, h_dot, drift, amap)
    B = barrier_value(spec, h, h_dot)
    b = -Lf_B - spec.alpha2(B)
    return _rows(Lg_B, b, family, h, h_dot, B, offset=np.zeros(b.size))


def joint_limit_rows(snap, q_min, q_max, spec=BarrierSpec()):
    """Upper-limit rows for every joint, then lower-limit rows."""
    q, qd = snap.state.q, snap.state.qd
    h = np.concatenate((q_max - q, q - q_min))
    h_dot = np.concatenate((-qd, qd))
    drift = np.concatenate((-snap.q0, snap.q0))
    amap = np.vstack((-snap.Qa, snap.Qa))
    return _barrier_rows(spec, h, h_dot, drift, amap, "joint")


def rolling_drift_and_map(snap):
    """Fingertip contact-coordinate accelerations ``xi_f_ddot = d + D u``,
    stacked over contacts (2n rows)."""
    n = len(snap.contacts)
    m = snap.Qa.shape[1]
    d = np.zeros(2 * n)
    D = np.zeros((2 * n, m))
    for i, (fk, ck) in enumerate(zip(snap.fingers, snap.contacts)):
        sl = slice(3 * i, 3 * i + 3)
        drift, amap = ck.accel_terms()
        Jw = fk.J_s[3:]
        dw0 = fk.bias[3:] + Jw @ snap.q0[sl] - snap.x0[3:]
        dW = Jw @ snap.Qa[sl] - snap.Xa[3:]
        d[2 * i:2 * i + 2] = drift + amap @ dw0
        D[2 * i:2 * i + 2] = amap @ dW
    return d, D


def rolling_rows(snap, boxes, spec=BarrierSpec()):
    """Four barrier rows per contact: a - a_min, a_max - a, b - b_min, b_max - b."""
    d, D = rolling_drift_and_map(snap)
    h, h_dot, drift, amap = [], [], [], []
    for i, (ck, box) in enumerate(zip(snap.contacts, boxes)):
        a_min, a_max, b_min, b_max = box
        xi, xi_dot = ck.state.xi_f, ck.rates.xi_f
        for coord, sign, bound in ((0, 1, a_min), (0, -1, a_max), (1, 1, b_min), (1, -1, b_max)):
            h.append(sign * (xi[coord] - bound))
            h_dot.append(sign * xi_dot[coord])
            drift.append(sign * d[2 * i + coord])
            amap.append(sign * D[2 * i + coord])
    return _barrier_rows(spec, np.array(h), np.array(h_dot), np.array(drift),
                         np.array(amap), "rolling")


def actuator_rows(u_min, u_max):
    u_min = np.asarray(u_min, dtype=float)
    u_max = np.asarray(u_max, dtype=float)
    if np.any(u_min >= u_max):
        raise ValueError("actuator bounds must satisfy u_min < u_max")
    m = u_min.size
    A = np.vstack((np.eye(m), -np.eye(m)))
    return _rows(A, np.concatenate((u_min, -u_max)), "actuator")


@dataclass
class ConstraintSettings:
    pyramid: FrictionPyramid
    slip_margin: float
    q_min: np.ndarray
    q_max: np.ndarray
    boxes: list
    barrier: BarrierSpec
    u_min: np.ndarray
    u_max: np.ndarray
    families: tuple = FAMILIES


def assemble(snap, settings):
    """Stack the enabled families in fixed order (slip, joint, rolling, actuator)."""
    m = snap.Qa.shape[1]
    parts = []
    enabled = set(settings.families)
    if "slip" in enabled:
        parts.append(no_slip_rows(snap, settings.pyramid, settings.slip_margin))
    if "joint" in enabled:
        parts.append(joint_limit_rows(snap, settings.q_min, settings.q_max, settings.barrier))
    if "rolling" in enabled:
        parts.append(rolling_rows(snap, settings.boxes, settings.barrier))
    if "actuator" in enabled:
        parts.append(actuator_rows(settings.u_min, settings.u_max))
    return ConstraintRows.concat(parts, m)


def required_friction(f_c, contact_frames, strict=True):
    """Tangential-to-normal force ratio per contact.

    ``contact_frames`` are the R_cp rotations. With ``strict`` a non-positive
    normal component raises NonPositiveNormal; otherwise it yields ``inf``.
    """
    f_c = np.asarray(f_c, dtype=float).reshape(-1, 3)
    beta = np.zeros(len(f_c))
    for i, (f, R) in enumerate(zip(f_c, contact_frames)):
        fc = R @ f
        if fc[2] <= 0:
            if strict:
                raise NonPositiveNormal(f"contact {i} normal force {fc[2]:.3e} <= 0")
            beta[i] = np.inf
            continue
        beta[i] = np.hypot(fc[0], fc[1]) / fc[2]
    return beta
