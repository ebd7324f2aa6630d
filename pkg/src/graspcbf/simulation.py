"""Fixed-step closed-loop simulation of the grasp under nominal or filtered control."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .constraints import assemble, contact_rotation, required_friction
from .controller import filter_step, nominal_control, object_pose
from .errors import GraspError, GraspFailure, Infeasible

log = logging.getLogger(__name__)

MODES = ("nominal", "filtered")
TERMINATIONS = ("completed", "grasp_failure", "infeasible")


def log_columns(n_contacts, row_families):
    """Column names of a run log for ``n_contacts`` contacts and the given row tags."""
    m = 3 * n_contacts
    cols = ["t"]
    cols += [f"q{j}" for j in range(m)] + [f"qd{j}" for j in range(m)]
    cols += ["px", "py", "pz", "roll", "pitch", "yaw", "vx", "vy", "vz", "wx", "wy", "wz"]
    for i in range(n_contacts):
        cols += [f"c{i}_af", f"c{i}_bf", f"c{i}_ao", f"c{i}_bo", f"c{i}_psi"]
    cols += [f"f{i}_{a}" for i in range(n_contacts) for a in "xyz"]
    cols += [f"beta{i}" for i in range(n_contacts)]
    counts = {}
    for fam in row_families:
        k = counts.get(fam, 0)
        counts[fam] = k + 1
        cols += [f"h_{fam}{k}", f"B_{fam}{k}", f"margin_{fam}{k}"]
    cols += [f"unom{j}" for j in range(m)] + [f"u{j}" for j in range(m)]
    cols += ["qp_status", "qp_iterations", "qp_active", "du_norm", "kkt_max",
             "grasp_residual", "proj_rotation", "proj_coincidence", "proj_gap", "proj_dq",
             "proj_dqd"]
    return cols


QP_STATUS = {"bypassed": 0, "optimal": 1, "infeasible": 2, "max_iter": 3}


@dataclass
class RunLog:
    columns: list
    rows: list = field(default_factory=list)
    termination: str = "completed"
    message: str = ""
    meta: dict = field(default_factory=dict)

    def append(self, row):
        row = np.asarray(row, dtype=float)
        if row.size != len(self.columns):
            raise ValueError(f"row has {row.size} entries, schema has {len(self.columns)}")
        if self.rows and not row[0] > self.rows[-1][0]:
            raise ValueError("log times must be strictly increasing")
        self.rows.append(row)

    @property
    def data(self):
        if not self.rows:
            return np.zeros((0, len(self.columns)))
        return np.vstack(self.rows)

    def column(self, name):
        return self.data[:, self.columns.index(name)]

    def select(self, prefix):
        """Sub-array of all columns whose name starts with ``prefix``."""
        idx = [i for i, c in enumerate(self.columns) if c.startswith(prefix)]
        return self.data[:, idx], [self.columns[i] for i in idx]

    def __len__(self):
        return len(self.rows)


def _record(state, snap, rows, u_nom, u, sol, settings_mu):
    n = len(snap.contacts)
    pose, _ = object_pose(state)
    f_c = snap.contact_force(u)
    beta = required_friction(f_c, [ck.R_cp for ck in snap.contacts], strict=False)
    parts = [[state.t], state.q, state.qd, pose, state.v_o, state.w_o]
    for c in state.contacts:
        parts += [c.xi_f, c.xi_o, [c.psi]]
    parts += [f_c, beta]
    values = rows.values(u)
    margins = rows.margins(u)
    B = np.where(np.isnan(rows.B), values, rows.B)
    h = np.where(np.isnan(rows.h), values, rows.h)
    parts.append(np.column_stack((h, B, margins)).ravel())
    parts += [u_nom, u]
    if sol is None:
        parts.append([QP_STATUS["bypassed"], 0, 0, 0.0, 0.0])
    else:
        kkt = max(abs(v) for v in sol.kkt.values()) if sol.kkt else np.nan
        parts.append([QP_STATUS[sol.status], sol.iterations, len(sol.active),
                      np.linalg.norm(u - u_nom), kkt])
    hl = state.health
    parts.append([hl.get("residual", snap.grasp_residual()), hl.get("rotation", 0.0),
                  hl.get("coincidence", 0.0), hl.get("gap", 0.0), hl.get("dq", 0.0),
                  hl.get("dqd", 0.0)])
    return np.concatenate([np.ravel(p) for p in parts])


def run_scenario(config, mode="filtered", duration=None, progress=None):
    """Simulate ``config`` and return a RunLog whose ``termination`` is one of
    completed, grasp_failure or infeasible.

    ``nominal`` applies the nominal controller directly; ``filtered`` passes it
    through the safety QP. Constraint rows are evaluated and logged in both
    modes so margins can be compared.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    system, state, settings = config.build()
    n_steps = config.n_steps if duration is None else int(round(duration / config.dt))
    gains, ref = config.gains, config.reference
    columns = None
    runlog = None
    warm = ()
    for k in range(n_steps):
        try:
            snap = system.evaluate(state)
            if mode == "filtered":
                try:
                    res = filter_step(snap, state.t, ref, gains, settings, warm)
                except Infeasible as exc:
                    if runlog is None:
                        runlog = RunLog(log_columns(system.n_contacts,
                                                    assemble(snap, settings).families))
                    runlog.termination = "infeasible"
                    runlog.message = f"t={state.t:.4f}: {exc}"
                    break
                rows, u_nom, u, sol = res.rows, res.u_nom, res.u, res.solution
                warm = sol.active
            else:
                u_nom, _ = nominal_control(snap, state.t, ref, gains)
                rows = assemble(snap, settings)
                u, sol = u_nom, None
            if runlog is None:
                columns = log_columns(system.n_contacts, rows.families)
                runlog = RunLog(columns)
            runlog.append(_record(state, snap, rows, u_nom, u, sol, settings.pyramid.mu))
            state = system.step(state, u, config.dt, snap)
        except GraspFailure as exc:
            runlog = runlog or RunLog(columns or [])
            runlog.termination = "grasp_failure"
            runlog.message = str(exc)
            break
        except (Infeasible,) as exc:  # pragma: no cover - handled above
            raise
        except GraspError as exc:
            # singular or ill-conditioned grasp geometry: the grasp is lost
            runlog = runlog or RunLog(columns or [])
            runlog.termination = "grasp_failure"
            runlog.message = f"t={state.t:.4f}: {type(exc).__name__}: {exc}"
            break
        if progress and k % progress == 0:
            log.info("t=%.3f", state.t)
    if runlog is None:
        runlog = RunLog(columns or [])
    runlog.meta.update(mode=mode, dt=config.dt, mu=config.mu,
                       workspace=list(config.workspace),
                       q_min=list(config.q_min), q_max=list(config.q_max),
                       final_t=float(state.t))
    if runlog.termination != "completed":
        log.warning("run ended early (%s): %s", runlog.termination, runlog.message)
    return runlog
