"""Running experiments, writing traces (CSV plus gnuplot script) and fitting rates."""

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigError, InvalidInputError
from ..methods import RunTrace, run
from ..problems import make_instance
from .config import dump_config

__all__ = [
    "CSV_COLUMNS",
    "THREADS_ENV",
    "RateFit",
    "fit_rate",
    "run_experiment",
    "write_trace_csv",
    "read_trace_csv",
    "gnuplot_script",
    "thread_count",
]

# Column order of the emitted CSV; ``grad_norm`` is ||V_psi(x_t)||_* and
# ``g_star`` its running minimum.  Undefined entries (e.g. the merit on rows
# skipped by log_every) are written as ``nan``.
CSV_COLUMNS = ("t", "a_t", "b_t", "A_t", "B_t", "grad_norm", "dist_to_xstar", "merit",
               "certificate", "theorem_slack", "wall_time", "g_star")

THREADS_ENV = "RGVI_THREADS"


def thread_count():
    """Worker threads for independent runs, from ``$RGVI_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}",
                          field=THREADS_ENV) from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {n}", field=THREADS_ENV)
    return n


def write_trace_csv(trace, path):
    """Write ``trace`` with :data:`CSV_COLUMNS`; floats use the shortest round-trip repr."""
    cols = [trace.column(c) for c in CSV_COLUMNS]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in zip(*cols):
            w.writerow([str(int(row[0]))] + [repr(float(v)) for v in row[1:]])
    return path


def read_trace_csv(path):
    """Read a trace CSV into ``{column: ndarray}``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty file") from None
        rows = [[float(v) for v in r] for r in reader if r]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def gnuplot_script(csv_path, columns=("certificate", "merit", "grad_norm")):
    """Log-log gnuplot script plotting ``columns`` of ``csv_path`` against ``t``."""
    idx = {c: i + 1 for i, c in enumerate(CSV_COLUMNS)}
    name = os.path.basename(csv_path)
    plots = ", \\\n     ".join(f"'{name}' using 1:{idx[c]} with lines title '{c}'" for c in columns)
    return ("set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set logscale xy\n"
            "set xlabel 't'\n"
            f"plot {plots}\n")


def _run_once(cfg):
    inst = make_instance(cfg.problem, **cfg.problem_params)
    return run(inst, cfg.method_config())


def run_experiment(cfg, out_dir=None):
    """Run ``cfg`` and write ``<path>.csv``, ``<path>.gp`` and ``<path>.cfg``.

    With ``repetitions > 1`` the files are suffixed ``_r<k>``; repetitions run
    in a thread pool sized by :func:`thread_count`.  Returns the list of
    traces and the list of CSV paths.
    """
    prefix = cfg.path if out_dir is None else os.path.join(out_dir, cfg.path)
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    reps = cfg.repetitions
    with ThreadPoolExecutor(max_workers=min(thread_count(), reps)) as pool:
        traces = list(pool.map(_run_once, [cfg] * reps))
    paths = []
    for k, tr in enumerate(traces):
        stem = prefix if reps == 1 else f"{prefix}_r{k}"
        csv_path = write_trace_csv(tr, stem + ".csv")
        with open(stem + ".gp", "w", encoding="utf-8") as fh:
            fh.write(gnuplot_script(csv_path))
        paths.append(csv_path)
    with open(prefix + ".cfg", "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
    return traces, paths


@dataclass
class RateFit:
    """Least-squares fit ``log y = intercept + slope log t`` on ``[t_min, t_max]``."""

    t_min: float
    t_max: float
    slope: float
    intercept: float
    residual: float
    n_points: int

    def __str__(self):
        return (f"slope={self.slope:.6f} intercept={self.intercept:.6f} "
                f"residual={self.residual:.3e} window=[{self.t_min:g}, {self.t_max:g}] "
                f"n={self.n_points}")


def _columns(source, column):
    if isinstance(source, RunTrace):
        return source.column("t"), source.column(column)
    if isinstance(source, (str, os.PathLike)):
        source = read_trace_csv(source)
    if column not in source:
        raise InvalidInputError(f"no column {column!r}; available: {sorted(source)}")
    return np.asarray(source["t"], dtype=float), np.asarray(source[column], dtype=float)


def fit_rate(source, column, window):
    """Fit the log-log slope of ``column`` against ``t`` over ``window = (a, b)``.

    ``source`` is a :class:`RunTrace`, a ``{name: array}`` mapping or a CSV
    path.  Rows with NaN in ``column`` (unlogged rows) are skipped.

    Raises
    ------
    InvalidInputError
        If the column has a nonpositive value in the window (the first
        offending ``t`` is named) or fewer than two usable points.
    """
    a, b = float(window[0]), float(window[1])
    if not a <= b:
        raise InvalidInputError(f"empty window [{a}, {b}]")
    t, y = _columns(source, column)
    mask = (t >= a) & (t <= b) & ~np.isnan(y)
    bad = mask & ~(y > 0)
    if np.any(bad):
        t_bad = t[np.argmax(bad)]
        raise InvalidInputError(f"column {column!r} is nonpositive at t={t_bad:g}; "
                                "log-log fit needs positive values")
    if np.count_nonzero(mask) < 2:
        raise InvalidInputError(f"fewer than two points of {column!r} in window [{a:g}, {b:g}]")
    lt, ly = np.log(t[mask]), np.log(y[mask])
    X = np.column_stack([lt, np.ones_like(lt)])
    coef, *_ = np.linalg.lstsq(X, ly, rcond=None)
    resid = float(math.sqrt(np.mean((X @ coef - ly) ** 2)))
    return RateFit(float(t[mask].min()), float(t[mask].max()), float(coef[0]), float(coef[1]),
                   resid, int(np.count_nonzero(mask)))
