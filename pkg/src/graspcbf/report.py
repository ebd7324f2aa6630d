"""Run-log output: full-precision CSV tables, per-figure series files and plots."""

import csv
import json
from pathlib import Path

import numpy as np

from .errors import IoFailure, SchemaMismatch
from .simulation import RunLog
from .zcbf import FAMILIES

TABLE = "run.csv"
META = "run.json"
VIOLATION_TOL = 1e-6


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, header, data):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in data:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror}") from exc


def write_table(runlog, path):
    _write_csv(path, runlog.columns, runlog.data)
    meta = dict(runlog.meta, termination=runlog.termination, message=runlog.message)
    try:
        Path(path).with_suffix(".json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write metadata next to {path}: {exc.strerror}") from exc


def read_table(path):
    """Load a table written by :func:`write_table` (metadata optional)."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [np.array([float(v) for v in r]) for r in reader if r]
    except (OSError, StopIteration) as exc:
        raise IoFailure(f"cannot read run table {path}") from exc
    runlog = RunLog(header)
    runlog.rows = rows
    meta_path = path.with_suffix(".json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        runlog.termination = meta.pop("termination", "completed")
        runlog.message = meta.pop("message", "")
        runlog.meta = meta
    return runlog


def _n_contacts(runlog):
    return sum(1 for c in runlog.columns if c.startswith("beta"))


def plot_series(runlog):
    """Series behind the three standard panels, as ``{name: (header, array)}``."""
    d = runlog.data
    t = d[:, :1]
    n = _n_contacts(runlog)
    k = len(t)
    meta = runlog.meta
    out = {}
    a0, a1, b0, b1 = meta.get("workspace", [np.nan] * 4)
    cols = [runlog.columns.index(f"c{i}_{x}f") for i in range(n) for x in "ab"]
    header = ["t"] + [f"c{i}_{x}f" for i in range(n) for x in "ab"] + ["a_min", "a_max",
                                                                      "b_min", "b_max"]
    out["contacts"] = (header, np.hstack((t, d[:, cols], np.tile([a0, a1, b0, b1], (k, 1)))))
    m = 3 * n
    qcols = [runlog.columns.index(f"q{j}") for j in range(m)]
    q_min = np.tile(meta.get("q_min", [np.nan] * 3), n)
    q_max = np.tile(meta.get("q_max", [np.nan] * 3), n)
    header = (["t"] + [f"q{j}" for j in range(m)] + [f"q{j}_min" for j in range(m)]
              + [f"q{j}_max" for j in range(m)])
    out["joints"] = (header, np.hstack((t, d[:, qcols], np.tile(q_min, (k, 1)),
                                        np.tile(q_max, (k, 1)))))
    bcols = [runlog.columns.index(f"beta{i}") for i in range(n)]
    header = ["t"] + [f"beta{i}" for i in range(n)] + ["mu"]
    out["friction"] = (header, np.hstack((t, d[:, bcols],
                                          np.full((k, 1), meta.get("mu", np.nan)))))
    return out


def render_figures(series, out_dir):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    for name, (header, data) in series.items():
        fig, ax = plt.subplots(figsize=(7, 4))
        t = data[:, 0]
        for j, label in enumerate(header[1:], start=1):
            bound = label.endswith(("_min", "_max")) or label == "mu"
            if bound and label.startswith("q") and not label.startswith("q0_"):
                continue    # identical limits per finger; draw one pair
            ax.plot(t, data[:, j], "k--" if bound else "-", lw=0.8 if bound else 1.2,
                    label=None if bound else label)
        ax.set_xlabel("t [s]")
        ax.set_ylabel({"contacts": "contact coordinate [rad]", "joints": "joint angle [rad]",
                       "friction": "required friction"}.get(name, name))
        ax.legend(fontsize=7, ncol=3)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        path = Path(out_dir) / f"{name}.png"
        try:
            fig.savefig(path, dpi=120)
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc.strerror}") from exc
        finally:
            plt.close(fig)
        paths.append(path)
    return paths


def emit(runlog, out_dir, formats=("table", "plotdata"), figures=True):
    """Write the requested outputs into ``out_dir`` and return the file paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc.strerror}") from exc
    paths = []
    if "table" in formats:
        write_table(runlog, out / TABLE)
        paths += [out / TABLE, out / META]
    if "plotdata" in formats:
        series = plot_series(runlog)
        for name, (header, data) in series.items():
            p = out / f"{name}.csv"
            _write_csv(p, header, data)
            paths.append(p)
        if figures and len(runlog):
            paths += render_figures(series, out)
    return paths


def family_margins(runlog):
    """Per-family minimum constraint value and first time it went below -tol."""
    t = runlog.column("t") if len(runlog) else np.zeros(0)
    out = {}
    for fam in FAMILIES:
        h, _ = runlog.select(f"h_{fam}")
        if h.shape[1] == 0 or h.shape[0] == 0:
            out[fam] = {"min": None, "first_violation": None}
            continue
        worst = h.min(axis=1)
        bad = np.flatnonzero(worst < -VIOLATION_TOL)
        out[fam] = {"min": float(worst.min()),
                    "first_violation": float(t[bad[0]]) if bad.size else None}
    # required friction above mu is a slip violation as well
    beta, _ = runlog.select("beta")
    mu = runlog.meta.get("mu")
    if beta.size and mu is not None:
        over = np.flatnonzero(beta.max(axis=1) > mu)
        out["friction"] = {"min": float(mu - beta.max()),
                           "first_violation": float(t[over[0]]) if over.size else None}
    return out


def compare(log_a, log_b):
    """Side-by-side summary of two runs with the same column schema."""
    if log_a.columns != log_b.columns:
        diff = sorted(set(log_a.columns) ^ set(log_b.columns))[:5]
        raise SchemaMismatch(f"run logs have different columns (e.g. {diff})")
    summary = {
        "a": {"termination": log_a.termination, "steps": len(log_a),
              "margins": family_margins(log_a)},
        "b": {"termination": log_b.termination, "steps": len(log_b),
              "margins": family_margins(log_b)},
    }
    k = min(len(log_a), len(log_b))
    if k:
        da, db = log_a.data[:k], log_b.data[:k]
        with np.errstate(invalid="ignore"):
            delta = np.abs(da - db)
        delta[np.isnan(da) & np.isnan(db)] = 0.0
        summary["max_abs_difference"] = float(np.nanmax(delta))
    else:
        summary["max_abs_difference"] = 0.0
    summary["common_steps"] = k
    return summary


def format_summary(summary):
    lines = [f"{'':22s}{'a':>24s}{'b':>24s}"]
    lines.append(f"{'termination':22s}{summary['a']['termination']:>24s}"
                 f"{summary['b']['termination']:>24s}")
    lines.append(f"{'steps':22s}{summary['a']['steps']:>24d}{summary['b']['steps']:>24d}")
    for fam in summary["a"]["margins"]:
        for key in ("min", "first_violation"):
            va = summary["a"]["margins"][fam][key]
            vb = summary["b"]["margins"].get(fam, {}).get(key)
            sa = "-" if va is None else f"{va:.6g}"
            sb = "-" if vb is None else f"{vb:.6g}"
            lines.append(f"{fam + ' ' + key:22s}{sa:>24s}{sb:>24s}")
    lines.append(f"max |a - b| over {summary['common_steps']} common steps: "
                 f"{summary['max_abs_difference']:.3g}")
    return "\n".join(lines)
