"""Dense minimum-deviation QP: ``min |u - u_nom|^2  s.t.  A u >= b``.

Solved with the Goldfarb-Idnani dual active-set method specialised to an
identity Hessian. Rows are scaled to unit norm internally, so feasibility
tolerances and the reported KKT residuals are distances in torque space.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import Infeasible, MaxIterations

_FEAS_TOL = 1e-10
_DEP_TOL = 1e-10


@dataclass
class QpProblem:
    u_nom: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.u_nom = np.asarray(self.u_nom, dtype=float)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.u_nom.size)
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.A.shape[0] != self.b.size:
            raise ValueError("A and b row counts differ")

    @classmethod
    def from_rows(cls, u_nom, rows):
        return cls(u_nom, rows.A, rows.b)


@dataclass
class QpSolution:
    u: np.ndarray
    active: list
    multipliers: np.ndarray      # per row, in the caller's row scaling
    status: str                  # optimal | infeasible | max_iter
    iterations: int
    kkt: dict = field(default_factory=dict)


def kkt_residuals(u, u_nom, A, b, lam):
    """KKT residuals of a candidate primal/dual pair on unit-normalised rows."""
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 0
    An = A[keep] / norms[keep, None]
    bn = b[keep] / norms[keep]
    lam_n = lam[keep] * norms[keep]
    slack = An @ u - bn
    return {
        "primal": float(max(0.0, -slack.min())) if slack.size else 0.0,
        "stationarity": float(np.max(np.abs(u - u_nom - An.T @ lam_n))) if u.size else 0.0,
        "dual": float(min(0.0, lam_n.min())) if lam_n.size else 0.0,
        "complementarity": float(np.max(np.abs(lam_n * slack))) if slack.size else 0.0,
    }


def solve(problem, warm_start=(), max_iter=500):
    """Exact minimiser of the strictly convex QP.

    ``warm_start`` lists row indices (e.g. the previous active set) that are
    tried first when choosing which violated row to add. The result does not
    depend on it except through floating-point rounding. Ties between rows
    are broken by the lowest index.

    Raises Infeasible when no ``u`` satisfies all rows and MaxIterations
    when the iteration cap is hit; both carry the last iterate as
    ``exc.solution``.
    """
    u_nom = problem.u_nom
    A, b = problem.A, problem.b
    n = u_nom.size
    norms = np.linalg.norm(A, axis=1)
    zero = norms == 0
    if np.any(b[zero] > _FEAS_TOL):
        bad = int(np.flatnonzero(zero & (b > _FEAS_TOL))[0])
        sol = QpSolution(u_nom.copy(), [], np.zeros(b.size), "infeasible", 0)
        exc = Infeasible(f"row {bad} is 0 >= {b[bad]:.3e}")
        exc.solution = sol
        raise exc
    safe = np.where(zero, 1.0, norms)
    An = A / safe[:, None]
    bn = np.where(zero, -np.inf, b / safe)

    x = u_nom.copy()
    active = []
    lam = []
    warm = sorted(int(i) for i in warm_start if 0 <= int(i) < b.size)
    iterations = 0

    def fail(kind, msg):
        lam_full = np.zeros(b.size)
        for j, l in zip(active, lam):
            lam_full[j] = l / safe[j]
        sol = QpSolution(x.copy(), sorted(active), lam_full,
                         "infeasible" if kind is Infeasible else "max_iter", iterations)
        exc = kind(msg)
        exc.solution = sol
        raise exc

    while True:
        slack = An @ x - bn
        p = None
        for j in warm:
            if slack[j] < -_FEAS_TOL and j not in active:
                p = j
                break
        if p is None:
            j = int(np.argmin(slack)) if slack.size else 0
            if not slack.size or slack[j] >= -_FEAS_TOL:
                break
            p = j
        n_p = An[p]
        lam_p = 0.0
        while True:
            iterations += 1
            if iterations > max_iter:
                fail(MaxIterations, f"no convergence in {max_iter} iterations")
            q = len(active)
            if q:
                N = An[active].T
                Q, R = np.linalg.qr(N, mode="complete")
                J1, J2 = Q[:, :q], Q[:, q:]
                z = J2 @ (J2.T @ n_p)
                r = np.linalg.solve(R[:q, :q], J1.T @ n_p)
            else:
                z = n_p.copy()
                r = np.zeros(0)

            t1, k_drop = np.inf, None
            for idx in range(q):
                if r[idx] > _DEP_TOL:
                    ratio = lam[idx] / r[idx]
                    if ratio < t1 or (ratio == t1 and active[idx] < active[k_drop]):
                        t1, k_drop = ratio, idx
            zn = float(z @ n_p)
            s_p = float(n_p @ x - bn[p])
            t2 = -s_p / zn if zn > _DEP_TOL ** 2 and np.linalg.norm(z) > _DEP_TOL else np.inf
            t = min(t1, t2)
            if not np.isfinite(t):
                fail(Infeasible, f"row {p} cannot be satisfied together with rows {sorted(active)}")
            if np.isfinite(t2):
                x = x + t * z
            lam = [l - t * ri for l, ri in zip(lam, r)]
            lam_p += t
            if t2 <= t1:
                active.append(p)
                lam.append(lam_p)
                break
            del active[k_drop]
            del lam[k_drop]

    # polish on the final active set
    if active:
        N = An[active].T
        try:
            Q, R = np.linalg.qr(N)
            y = np.linalg.solve(R.T, bn[active] - N.T @ u_nom)
            x_ref = u_nom + Q @ y
            lam_ref = np.linalg.solve(R, y)
            if np.all(lam_ref >= -1e-12) and np.all(An @ x_ref - bn >= -_FEAS_TOL):
                x, lam = x_ref, list(lam_ref)
        except np.linalg.LinAlgError:
            pass

    lam_full = np.zeros(b.size)
    for j, l in zip(active, lam):
        lam_full[j] = l / safe[j]
    sol = QpSolution(x, sorted(active), lam_full, "optimal", iterations)
    sol.kkt = kkt_residuals(x, u_nom, A, b, lam_full)
    return sol
