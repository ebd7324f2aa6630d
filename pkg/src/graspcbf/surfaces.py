"""Parameterized contact surfaces: Gauss frames and M/K/T tensors.

A chart maps local coordinates ``xi = (a, b)`` to a point on a body surface,
expressed in that body's frame. Charts must be orthogonal
(``c_a . c_b == 0``) and oriented so the normal ``c_a x c_b`` points out of
the body.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChart, OutOfChart
from .spatial import cross

_DEGENERATE_TOL = 1e-12
_BOUNDS_SLACK = 1e-12


class SurfaceChart:
    """Base class for an orthogonal surface parameterization.

    Subclasses implement :meth:`derivatives` (point plus first and second
    partials) and :meth:`tensor_jacobian` (partials of M and K), and set
    ``bounds = (a_min, a_max, b_min, b_max)``.
    """

    bounds = (-np.inf, np.inf, -np.inf, np.inf)

    def derivatives(self, xi):
        """Return ``(c, c_a, c_b, c_aa, c_ab, c_bb)`` at ``xi``."""
        raise NotImplementedError

    def tensor_jacobian(self, xi):
        """Return ``(dM, dK)``, each shaped (2, 2, 2) with the first index
        selecting the coordinate (a or b) being differentiated."""
        raise NotImplementedError

    def point(self, xi):
        return self.derivatives(xi)[0]

    def contains(self, xi, slack=_BOUNDS_SLACK):
        a_min, a_max, b_min, b_max = self.bounds
        a, b = xi
        return (a_min - slack <= a <= a_max + slack
                and b_min - slack <= b <= b_max + slack)

    def check(self, xi):
        if not np.all(np.isfinite(xi)) or not self.contains(xi):
            raise OutOfChart(f"xi={tuple(np.round(xi, 12))} outside bounds {self.bounds}")


class HemisphereChart(SurfaceChart):
    """Hemispherical fingertip of radius R centered at the fingertip frame
    origin, bulging along +z. The apex is at ``xi = (0, -pi/2)``."""

    def __init__(self, radius, bounds=(-np.pi / 2, np.pi / 2, -np.pi, 0.0)):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.bounds = tuple(float(v) for v in bounds)

    def derivatives(self, xi):
        a, b = xi
        R = self.radius
        ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
        c = R * np.array([-ca * cb, sa, -ca * sb])
        c_a = R * np.array([sa * cb, ca, sa * sb])
        c_b = R * np.array([ca * sb, 0.0, -ca * cb])
        c_aa = R * np.array([ca * cb, -sa, ca * sb])
        c_ab = R * np.array([-sa * sb, 0.0, sa * cb])
        c_bb = R * np.array([ca * cb, 0.0, ca * sb])
        return c, c_a, c_b, c_aa, c_ab, c_bb

    def tensor_jacobian(self, xi):
        a, _ = xi
        dM = np.zeros((2, 2, 2))
        # M = diag(R, R cos a) on the chart interior
        dM[0, 1, 1] = -self.radius * np.sin(a)
        return dM, np.zeros((2, 2, 2))

    def local_geometry(self, xi):
        # closed form of generic_local_geometry for the sphere
        self.check(xi)
        a, b = xi
        R = self.radius
        ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
        if R * abs(ca) < _DEGENERATE_TOL:
            raise DegenerateChart(f"tangent norm vanishes at xi={tuple(xi)}")
        rho1 = np.array([sa * cb, ca, sa * sb])
        rho2 = np.array([sb, 0.0, -cb])
        n = np.array([-ca * cb, sa, -ca * sb])
        frame = np.column_stack((rho1, rho2, n))
        zero = np.zeros(3)
        d_a = np.column_stack((-n, zero, rho1))
        d_b = np.column_stack(((-sa * sb, 0.0, sa * cb), (cb, 0.0, sb), ca * rho2))
        tens = GeometricTensors(np.diag([R, R * ca]), np.eye(2) / R,
                                np.array([0.0, -sa / (R * ca)]))
        return LocalGeometry(R * n, frame, np.stack((d_a, d_b)), tens)


class PlaneChart(SurfaceChart):
    """Flat face ``c = origin + a*t1 + b*t2`` with unit, orthogonal tangents.

    The outward normal is ``t1 x t2``.
    """

    def __init__(self, origin, t1, t2, half_extent):
        t1 = np.asarray(t1, dtype=float)
        t2 = np.asarray(t2, dtype=float)
        if abs(np.linalg.norm(t1) - 1) > 1e-12 or abs(np.linalg.norm(t2) - 1) > 1e-12:
            raise ValueError("plane tangents must be unit vectors")
        if abs(t1 @ t2) > 1e-12:
            raise ValueError("plane tangents must be orthogonal")
        self.origin = np.asarray(origin, dtype=float)
        self.t1, self.t2 = t1, t2
        self.normal = cross(t1, t2)
        h = float(half_extent)
        self.bounds = (-h, h, -h, h)

    def derivatives(self, xi):
        a, b = xi
        z = np.zeros(3)
        return self.origin + a * self.t1 + b * self.t2, self.t1, self.t2, z, z, z

    def tensor_jacobian(self, xi):
        return np.zeros((2, 2, 2)), np.zeros((2, 2, 2))

    def local_geometry(self, xi):
        # constant frame and tensors; only the point moves
        self.check(xi)
        if not hasattr(self, "_const"):
            frame = np.column_stack((self.t1, self.t2, self.normal))
            self._const = (frame, np.zeros((2, 3, 3)),
                           GeometricTensors(np.eye(2), np.zeros((2, 2)), np.zeros(2)))
        frame, dframe, tens = self._const
        return LocalGeometry(self.origin + xi[0] * self.t1 + xi[1] * self.t2, frame, dframe, tens)


# tangents (t1, t2) per cube face, chosen so that t1 x t2 is the outward normal
_CUBE_FACE_TANGENTS = {
    "+x": ((0, 1, 0), (0, 0, 1)),
    "-x": ((0, 0, 1), (0, 1, 0)),
    "+y": ((0, 0, 1), (1, 0, 0)),
    "-y": ((1, 0, 0), (0, 0, 1)),
    "+z": ((1, 0, 0), (0, 1, 0)),
    "-z": ((0, 1, 0), (1, 0, 0)),
}


def cube_face(face, edge):
    """PlaneChart for one face of a cube centered at the body origin."""
    try:
        t1, t2 = _CUBE_FACE_TANGENTS[face]
    except KeyError:
        raise ValueError(f"unknown cube face {face!r}") from None
    t1, t2 = np.array(t1, float), np.array(t2, float)
    normal = cross(t1, t2)
    return PlaneChart(0.5 * edge * normal, t1, t2, 0.5 * edge)


@dataclass(frozen=True)
class GeometricTensors:
    M: np.ndarray  # 2x2 diagonal metric
    K: np.ndarray  # 2x2 curvature
    T: np.ndarray  # length-2 torsion row


@dataclass(frozen=True)
class LocalGeometry:
    """Everything the contact kinematics needs at one chart point."""
    point: np.ndarray
    frame: np.ndarray     # Gauss frame [rho1 rho2 n], body <- contact
    dframe: np.ndarray    # (2, 3, 3): d(frame)/da, d(frame)/db
    tensors: GeometricTensors


def _unit_derivative(u, norm, du):
    return (du - u * (u @ du)) / norm


def local_geometry(chart, xi):
    """Point, Gauss frame, its chart derivatives and the geometric tensors at ``xi``."""
    fast = getattr(chart, "local_geometry", None)
    if fast is not None:
        return fast(xi)
    return generic_local_geometry(chart, xi)


def generic_local_geometry(chart, xi):
    """:func:`local_geometry` from the chart's first and second derivatives."""
    chart.check(xi)
    c, c_a, c_b, c_aa, c_ab, c_bb = chart.derivatives(xi)
    na, nb = np.linalg.norm(c_a), np.linalg.norm(c_b)
    if na < _DEGENERATE_TOL or nb < _DEGENERATE_TOL:
        raise DegenerateChart(f"tangent norm vanishes at xi={tuple(xi)}")
    rho1, rho2 = c_a / na, c_b / nb
    N = cross(c_a, c_b)
    nN = np.linalg.norm(N)
    n = N / nN

    dn_a = _unit_derivative(n, nN, cross(c_aa, c_b) + cross(c_a, c_ab))
    dn_b = _unit_derivative(n, nN, cross(c_ab, c_b) + cross(c_a, c_bb))
    d1_a = _unit_derivative(rho1, na, c_aa)
    d1_b = _unit_derivative(rho1, na, c_ab)
    d2_a = _unit_derivative(rho2, nb, c_ab)
    d2_b = _unit_derivative(rho2, nb, c_bb)

    M = np.diag([na, nb])
    K = np.array([[rho1 @ dn_a / na, rho1 @ dn_b / nb],
                  [rho2 @ dn_a / na, rho2 @ dn_b / nb]])
    T = np.array([rho2 @ d1_a / na, rho2 @ d1_b / nb])

    frame = np.column_stack((rho1, rho2, n))
    dframe = np.stack((np.column_stack((d1_a, d2_a, dn_a)),
                       np.column_stack((d1_b, d2_b, dn_b))))
    return LocalGeometry(c, frame, dframe, GeometricTensors(M, K, T))


def gauss_frame(chart, xi):
    """Gauss frame at ``xi`` as a rotation (columns rho1, rho2, n)."""
    return local_geometry(chart, xi).frame


def tensors(chart, xi):
    """Metric, curvature and torsion tensors at ``xi``."""
    return local_geometry(chart, xi).tensors


@dataclass(frozen=True)
class ChartReport:
    max_orthogonality: float
    min_norm_a: float
    min_norm_b: float
    passed: bool


def validate_chart(chart, grid_n, ortho_tol=1e-9, norm_tol=_DEGENERATE_TOL):
    """Check orthogonality and non-degeneracy on a cell-centred interior grid."""
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    a_min, a_max, b_min, b_max = chart.bounds
    frac = (np.arange(grid_n) + 0.5) / grid_n
    worst, min_a, min_b = 0.0, np.inf, np.inf
    for a in a_min + frac * (a_max - a_min):
        for b in b_min + frac * (b_max - b_min):
            _, c_a, c_b, *_ = chart.derivatives((a, b))
            worst = max(worst, abs(float(c_a @ c_b)))
            min_a = min(min_a, float(np.linalg.norm(c_a)))
            min_b = min(min_b, float(np.linalg.norm(c_b)))
    passed = worst <= ortho_tol and min_a > norm_tol and min_b > norm_tol
    return ChartReport(worst, min_a, min_b, passed)


def chart_from_config(entry):
    """Build a chart from a config mapping with ``kind`` = hemisphere | plane."""
    kind = entry.get("kind")
    if kind == "hemisphere":
        bounds = entry.get("bounds")
        if bounds is None:
            return HemisphereChart(entry["radius"])
        return HemisphereChart(entry["radius"], bounds)
    if kind == "plane":
        if "face" in entry:
            return cube_face(entry["face"], entry["edge"])
        return PlaneChart(entry["origin"], entry["t1"], entry["t2"], entry["half_extent"])
    raise ValueError(f"unknown chart kind {kind!r}")
