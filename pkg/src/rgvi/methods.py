"""Outer schemes: primal, dual, projecting, uniformly monotone and switching,
plus the projected-gradient and extragradient baselines.

Each reduced-gradient scheme checks its own per-iteration inequality while
running and stores the slack (left side minus right side, nonpositive in
exact arithmetic) in the trace.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from . import steps as _steps
from ._validation import check_scalar, check_vector
from .certify import CertificateAccumulator, evaluate_merit, window_merit_bound, window_merit_rate
from .exceptions import ConfigError, InfeasiblePointError, TheoremViolationError
from .metric import prox_step
from .steps import StepConfig, alpha_uniform, default_regularization, essential_step, gamma_vi

__all__ = [
    "MethodConfig",
    "RunTrace",
    "SCHEMES",
    "run",
    "run_primal",
    "run_dual",
    "run_projecting",
    "run_uniform_monotone",
    "run_switching",
    "run_baseline_gradient",
    "run_baseline_extragradient",
]

SCHEMES = ("primal", "dual", "projecting", "uniform_monotone", "switching",
           "baseline_gradient", "baseline_extragradient")

# Relative roundoff allowance per iteration for the online inequalities.
THEOREM_RTOL = 1e-8


@dataclass(frozen=True)
class MethodConfig:
    """Configuration shared by all schemes.

    Parameters
    ----------
    scheme : str
        One of :data:`SCHEMES`.
    step : StepConfig
        Essential-step order and regularization.
    max_iter : int
        Iteration budget (for ``switching``: the total ``N = 2t``).
    log_every : int
        Cadence of merit and certificate evaluation.
    tol : float
        Stop when ``||V_psi(x_t)||_*`` drops to ``tol`` (0 disables).
    cert_threshold : float
        Stop when the certificate drops to this value (0 disables).
    check_theorems : bool
        Raise :class:`TheoremViolationError` when an online inequality fails
        beyond its roundoff budget.
    merit : str
        ``"auto"`` (instance default), ``"off"`` or an explicit merit mode.
    x0 : array, optional
        Starting point; defaults to ``instance.x0``.
    stepsize : float, optional
        Extragradient step ``h`` (default ``1/(sqrt 2 L)``).
    windows : tuple of int
        Window starts ``m`` for the projected-gradient baseline.
    """

    scheme: str = "primal"
    step: StepConfig = field(default_factory=StepConfig)
    max_iter: int = 500
    log_every: int = 1
    tol: float = 0.0
    cert_threshold: float = 0.0
    check_theorems: bool = True
    merit: str = "auto"
    x0: Optional[Sequence[float]] = None
    stepsize: Optional[float] = None
    windows: tuple = ()

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}", field="scheme")
        check_scalar(self.max_iter, "max_iter", min_val=1, integer=True)
        check_scalar(self.log_every, "log_every", min_val=1, integer=True)
        check_scalar(self.tol, "tol", min_val=0.0)
        check_scalar(self.cert_threshold, "cert_threshold", min_val=0.0)
        if self.stepsize is not None:
            check_scalar(self.stepsize, "stepsize", min_val=0.0, include_min=False)
        if self.merit not in ("auto", "off", "closed_form", "inner_solve", "sample_lower_bound"):
            raise ConfigError(f"unknown merit setting {self.merit!r}", field="merit")


class RunTrace:
    """Per-iteration log of a run.

    Scalar columns (one entry per iteration ``t = 1, 2, ...``) are listed in
    :attr:`COLUMNS`; ``merit`` and ``certificate`` are NaN on iterations
    skipped by ``log_every``.  Point sequences are kept in ``x`` (the points
    ``x_t``, starting at ``t = 1``) and ``v`` (prox-centers, starting at
    ``v_0 = x_0``).
    """

    COLUMNS = ("t", "a_t", "b_t", "A_t", "B_t", "grad_norm", "g_star", "dist_to_xstar", "merit",
               "certificate", "theorem_slack", "wall_time")

    def __init__(self, scheme, instance, config):
        self.scheme = scheme
        self.instance = instance
        self.config = config
        self.data = {c: [] for c in self.COLUMNS}
        self.extra_columns = {}
        self.x = []
        self.v = []
        self.reduced_gradients = []
        self.V_x = []
        self.step_slack = []
        self.inner_residual = []
        self.cut_at_solution = []
        self.slack_budget = []
        self.merit_exact = True
        self.stop_reason = "max_iter"
        self.x_final = None
        self.x_bar = None
        self.summary = {}

    def __len__(self):
        return len(self.data["t"])

    @property
    def n_iter(self):
        return len(self)

    def column(self, name):
        if name in self.data:
            return np.asarray(self.data[name], dtype=float)
        return np.asarray(self.extra_columns[name], dtype=float)

    def add_extra(self, name, value):
        self.extra_columns.setdefault(name, []).append(value)

    def append(self, **row):
        for c in self.COLUMNS:
            self.data[c].append(float(row.get(c, np.nan)))

    def theorem_ok(self):
        """True when every recorded slack is within its budget."""
        s = self.column("theorem_slack")
        b = np.asarray(self.slack_budget)
        return bool(np.all(s[np.isfinite(s)] <= b[np.isfinite(s)]))


def _start(instance, config):
    x0 = instance.x0 if config.x0 is None else check_vector(config.x0, instance.dim, name="x0")
    x0 = np.array(x0, dtype=float)
    if not instance.psi.contains(x0):
        raise InfeasiblePointError("starting point outside dom psi")
    return x0


def _dist(instance, v):
    if instance.x_star is None:
        return np.nan
    return instance.metric.norm(v - instance.x_star)


class _Monitor:
    """Shared bookkeeping: sums, averages, certificate, merit and stopping."""

    def __init__(self, trace, instance, config, x0, cert_variant):
        self.trace = trace
        self.instance = instance
        self.config = config
        self.x0 = x0
        self.A = 0.0
        self.B = 0.0
        self.g_star = np.inf
        self.x_sum = np.zeros(instance.dim)
        self.gap_sum = 0.0
        self.best_gap = np.inf
        self.t0 = time.perf_counter()
        self.cert = None
        if cert_variant is not None and instance.R0 is not None:
            self.cert = CertificateAccumulator(cert_variant, instance, x0=x0,
                                               R0=instance.R0 if config.x0 is None else
                                               _radius_from(instance, x0))

    def record(self, t, a, b, x, g, V_x, slack, budget, v, g_norm=None):
        inst = self.instance
        self.A += a
        self.B += b
        gn = inst.metric.dual_norm(g) if g_norm is None else g_norm
        self.g_star = min(self.g_star, gn)
        self.x_sum += a * x
        x_bar = self.x_sum / self.A
        self.trace.x_bar = x_bar
        if self.cert is not None:
            self.cert.add(a, x, V_x, g)
        if inst.kind == "min" and inst.f_star is not None:
            gap = inst.F(x) - inst.f_star
            self.gap_sum += a * gap
            self.best_gap = min(self.best_gap, gap)
            self.trace.add_extra("F_tilde_gap", self.gap_sum / self.A)
            self.trace.add_extra("F_best_gap", self.best_gap)
        logged = (t % self.config.log_every == 0) or t == 1
        cert_val = self.cert.value() if (self.cert is not None and logged) else np.nan
        merit_val = np.nan
        if logged:
            merit_val = self._merit(x_bar)
        self.trace.append(t=t, a_t=a, b_t=b, A_t=self.A, B_t=self.B, grad_norm=gn,
                          g_star=self.g_star, dist_to_xstar=_dist(inst, v), merit=merit_val,
                          certificate=cert_val, theorem_slack=slack,
                          wall_time=time.perf_counter() - self.t0)
        self.trace.slack_budget.append(budget)
        self.trace.x.append(np.array(x))
        self.trace.v.append(np.array(v))
        if self.config.check_theorems and slack > budget:
            raise TheoremViolationError(self.trace.scheme, t, slack, budget)
        if self.config.tol > 0 and gn <= self.config.tol:
            self.trace.stop_reason = "tolerance"
            return True
        if self.config.cert_threshold > 0 and np.isfinite(cert_val) and cert_val <= self.config.cert_threshold:
            self.trace.stop_reason = "certificate"
            return True
        return False

    def _merit(self, x_bar):
        inst = self.instance
        if self.config.merit == "off":
            return np.nan
        if inst.kind == "min" and inst.f_star is not None:
            # Functional residual of the averaged point; it dominates the merit.
            return inst.F(x_bar) - inst.f_star
        mode = None if self.config.merit == "auto" else self.config.merit
        try:
            mv = evaluate_merit(x_bar, inst, mode, n_starts=2, n_iter=30)
        except ConfigError:
            return np.nan
        if not mv.exact:
            self.trace.merit_exact = False
        return mv.value


def _radius_from(instance, x0):
    if instance.psi.bounded and instance.kind == "vi":
        return instance.psi.domain_radius(x0, instance.metric)
    if instance.x_star is None:
        return None
    return instance.metric.norm(x0 - instance.x_star) * (1 + 1e-9)


def _reference_point(instance, x0):
    return instance.x_star if instance.x_star is not None else x0


def _take_step(v, instance, config, trace):
    rec = essential_step(v, instance, config.step)
    if rec.stationary:
        return rec
    trace.reduced_gradients.append(rec.reduced_gradient)
    trace.V_x.append(rec.V_T)
    trace.inner_residual.append(rec.inner_residual)
    trace.step_slack.append(_steps.step_quality_slack(rec, instance, config.step))
    if instance.x_star is not None:
        trace.cut_at_solution.append(float(np.dot(rec.reduced_gradient, instance.x_star - rec.T)))
    return rec


def _cert_variant(instance, scheme):
    if instance.kind == "vi":
        return "V"
    return "psi" if scheme == "dual" else "F"


def _finish(trace, x):
    trace.x_final = np.array(x)
    trace.summary = {
        "n_iter": trace.n_iter,
        "stop_reason": trace.stop_reason,
        "theorem_ok": trace.theorem_ok() if trace.n_iter else True,
    }
    return trace


def run_primal(instance, config=None):
    """Primal reduced-gradient method.

    ``x_{t+1}`` is the essential step at ``v_t``, ``a_{t+1}`` the universal
    stepsize and ``v_{t+1} = prox_{v_t}^{a_{t+1}}(V_psi(x_{t+1}))`` with
    ``psi`` entering only through its domain.  Online check at the
    reference point ``x`` (``x*`` when known)::

        sum_i a_i <V_psi(x_i), x_i - x> + B_t + beta(v_t, x) <= beta(x_0, x)
    """
    config = replace(config or MethodConfig(), scheme="primal")
    return _run_prox_family(instance, config, alpha=0.0)


def run_uniform_monotone(instance, config=None):
    """Primal method with averaging ``v_{t+1} = (vhat_{t+1} + alpha x_{t+1}) / (1 + alpha)``.

    Needs ``sigma2 > 0`` and the Euclidean setting.  The online check is the
    contraction ``||v_{t+1} - x*||^2 <= ||v_t - x*||^2 / (1 + alpha)``.
    """
    config = config or MethodConfig(scheme="uniform_monotone")
    config = replace(config, scheme="uniform_monotone")
    sigma = instance.constants.get("sigma2")
    if sigma is None or sigma <= 0:
        raise ConfigError("uniformly monotone scheme needs sigma2 > 0", field="sigma2")
    if instance.kind != "vi":
        raise ConfigError("uniformly monotone scheme applies to VI instances", field="scheme")
    p = config.step.order
    if p != 0:
        raise ConfigError("uniformly monotone scheme needs a recorded sigma of degree p+2; "
                          "only p = 0 (strong monotonicity) is available", field="order")
    M = default_regularization(instance, p) if config.step.M is None else config.step.M
    g_hat = gamma_vi(p, M, instance.constants[f"M{p + 1}"])
    alpha = alpha_uniform(p, g_hat, sigma)
    trace = _run_prox_family(instance, config, alpha=alpha)
    trace.summary["alpha"] = alpha
    return trace


def _run_prox_family(instance, config, alpha):
    trace = RunTrace(config.scheme, instance, config)
    x0 = _start(instance, config)
    metric = instance.metric
    psi = instance.psi
    xr = _reference_point(instance, x0)
    beta0 = 0.5 * metric.norm(x0 - xr) ** 2
    mon = _Monitor(trace, instance, config, x0, _cert_variant(instance, "primal"))
    trace.v.append(x0.copy())
    v = x0
    lin = 0.0
    res_acc = 0.0
    x = x0
    for t in range(1, config.max_iter + 1):
        rec = _take_step(v, instance, config, trace)
        if rec.stationary:
            trace.stop_reason = "roundoff" if rec.roundoff else "stationary"
            x = rec.T
            break
        x, g, a, b = rec.T, rec.reduced_gradient, rec.a, rec.b
        v_hat = prox_step(v, a, g, psi, metric, include_psi=False, check_feasible=False)
        lin += a * float(np.dot(g, x - xr))
        res_acc += a * rec.inner_residual * metric.norm(x - xr)
        if alpha > 0:
            v_new = (v_hat + alpha * x) / (1 + alpha)
            d_old = metric.norm(v - xr) ** 2
            d_new = metric.norm(v_new - xr) ** 2
            slack = d_new - d_old / (1 + alpha)
            budget = THEOREM_RTOL * (1 + d_old)
        else:
            v_new = v_hat
            lhs = lin + (mon.B + b) + 0.5 * metric.norm(v_new - xr) ** 2
            slack = lhs - beta0
            budget = t * THEOREM_RTOL * (1 + beta0) + res_acc
        v = v_new
        if mon.record(t, a, b, x, g, rec.V_T, slack, budget, v, rec.g_norm):
            break
    return _finish(trace, x)


def run_dual(instance, config=None):
    """Dual reduced-gradient method.

    Aggregates ``s_t = sum_i a_i V(x_i)`` and takes
    ``v_t = argmin <s_t, x> + beta(x_0, x) + A_t psi(x)``.  Online check::

        sum_i a_i psi(x_i) + B_t <= Psi_t(v_t)
    """
    config = replace(config or MethodConfig(), scheme="dual")
    trace = RunTrace("dual", instance, config)
    x0 = _start(instance, config)
    metric = instance.metric
    psi = instance.psi
    mon = _Monitor(trace, instance, config, x0, _cert_variant(instance, "dual"))
    trace.v.append(x0.copy())
    v = x0
    s = np.zeros(instance.dim)
    scal = 0.0
    psi_sum = 0.0
    A = 0.0
    x = x0
    for t in range(1, config.max_iter + 1):
        rec = _take_step(v, instance, config, trace)
        if rec.stationary:
            trace.stop_reason = "roundoff" if rec.roundoff else "stationary"
            x = rec.T
            break
        x, g, a, b = rec.T, rec.reduced_gradient, rec.a, rec.b
        s += a * rec.V_T
        scal += a * float(np.dot(rec.V_T, x))
        psi_sum += a * psi(x)
        A += a
        v = prox_step(x0, A, s / A, psi, metric, include_psi=True, check_feasible=False)
        psi_t = 0.5 * metric.norm(v - x0) ** 2 + float(np.dot(s, v)) - scal + A * psi(v)
        slack = psi_sum + mon.B + b - psi_t
        budget = t * THEOREM_RTOL * (1 + abs(psi_t) + abs(scal) + abs(psi_sum))
        if mon.record(t, a, b, x, g, rec.V_T, slack, budget, v, rec.g_norm):
            break
    return _finish(trace, x)


def _halfspace_projection(v, x, g, psi, metric, a):
    """``argmin ||y - v||_B`` over ``dom psi`` with ``<g, x - y> >= 0``, given ``<g, v - x> > 0``.

    The constraint is active; ``y(lam) = Proj(v - lam B^{-1} g)`` and the
    multiplier solves ``<g, y(lam)> = <g, x>``.
    """
    d = metric.solve(g)
    level = float(np.dot(g, x))

    def h(lam):
        return float(np.dot(g, psi.project(v - lam * d, metric))) - level

    if psi.kind == "zero":
        return v - a * d, a
    hi = a
    while h(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise RuntimeError("halfspace multiplier search diverged")
    if h(hi) == 0.0:
        return psi.project(v - hi * d, metric), hi
    lo = 0.0
    lam = optimize.brentq(h, lo, hi, xtol=1e-15 * hi, rtol=1e-15, maxiter=500)
    return psi.project(v - lam * d, metric), lam


def run_projecting(instance, config=None):
    """Projecting reduced-gradient method.

    ``v_{t+1}`` is the Euclidean projection of ``v_t`` onto
    ``Q_t = {x in dom psi : <V_psi(x_{t+1}), x_{t+1} - x> >= 0}``.  Online
    checks: ``beta(v_t, x*) + B_t <= beta(x_0, x*)`` and the active
    halfspace identity ``<V_psi(x_{t+1}), x_{t+1} - v_{t+1}> = 0``.
    """
    config = replace(config or MethodConfig(), scheme="projecting")
    trace = RunTrace("projecting", instance, config)
    x0 = _start(instance, config)
    metric = instance.metric
    psi = instance.psi
    xr = _reference_point(instance, x0)
    beta0 = 0.5 * metric.norm(x0 - xr) ** 2
    mon = _Monitor(trace, instance, config, x0, _cert_variant(instance, "projecting"))
    trace.v.append(x0.copy())
    v = x0
    x = x0
    for t in range(1, config.max_iter + 1):
        rec = _take_step(v, instance, config, trace)
        if rec.stationary:
            trace.stop_reason = "roundoff" if rec.roundoff else "stationary"
            x = rec.T
            break
        x, g, a, b = rec.T, rec.reduced_gradient, rec.a, rec.b
        v, lam = _halfspace_projection(v, x, g, psi, metric, a)
        trace.add_extra("halfspace_residual", float(np.dot(g, x - v)) / max(rec.g_norm, 1e-300))
        trace.add_extra("multiplier", lam)
        slack = 0.5 * metric.norm(v - xr) ** 2 + mon.B + b - beta0
        budget = t * THEOREM_RTOL * (1 + beta0)
        if mon.record(t, a, b, x, g, rec.V_T, slack, budget, v, rec.g_norm):
            break
    return _finish(trace, x)


def run_switching(instance, config=None):
    """Two-stage scheme for composite minimization with ``N = config.max_iter``.

    Stage a: ``t = N // 2`` primal iterations.  Stage b: from the weighted
    average ``y_0`` of stage a, ``y_{i+1} = T(y_i)`` for ``t`` steps.  The
    trace covers stage a; stage b values are in ``summary``:
    ``G`` (gradient norms ``||F'(y_i)||_*``), ``F`` (objective values),
    ``descent_slack`` (``F(y_i) - F(y_{i+1}) - gamma G_{i+1}^((p+1)/p)``) and
    ``G_star``.
    """
    config = config or MethodConfig(scheme="switching")
    if instance.kind != "min":
        raise ConfigError("switching scheme applies to minimization instances", field="scheme")
    t_stage = max(config.max_iter // 2, 1)
    stage_a = _run_prox_family(instance, replace(config, scheme="switching", max_iter=t_stage),
                               alpha=0.0)
    y = stage_a.x_bar if stage_a.x_bar is not None else stage_a.x_final
    if stage_a.stop_reason == "stationary" and stage_a.n_iter == 0:
        y = stage_a.x_final
    p = config.step.order
    M = default_regularization(instance, p) if config.step.M is None else config.step.M
    gamma = _steps.gamma_min(p, M, instance.constants[f"L{p}"])
    G, F_vals, descent = [], [instance.F(y)], []
    for _ in range(t_stage):
        rec = _steps.min_tensor_step(y, instance, config.step)
        F_new = instance.F(rec.T)
        G.append(rec.g_norm)
        descent.append(F_vals[-1] - F_new - gamma * rec.g_norm ** ((p + 1) / p))
        F_vals.append(F_new)
        y = rec.T
        if rec.stationary:
            break
    stage_a.summary.update({
        "G": np.array(G), "F": np.array(F_vals), "descent_slack": np.array(descent),
        "G_star": float(min(G)) if G else 0.0, "y_final": y, "stage_length": t_stage,
        "gamma": gamma})
    stage_a.x_final = y
    return stage_a


def run_baseline_gradient(instance, config=None, stepsizes=None):
    """Projected gradient ``x_{k+1} = pi_Q(x_k - h_k V(x_k))`` with ``h_k = 1/(L sqrt(k+1))``.

    For each window start ``m`` in ``config.windows`` the summary holds the
    merit of the average ``sum_{i=m}^{2m-1} h_i x_{i+1} / S1`` next to the
    window bound and its closed-form rate.
    """
    config = replace(config or MethodConfig(), scheme="baseline_gradient")
    if instance.D is None:
        raise ConfigError("projected-gradient baseline needs a bounded domain (D)", field="D")
    L = float(instance.constants["M1"])
    K = config.max_iter
    h = (np.asarray(stepsizes, dtype=float) if stepsizes is not None
         else 1.0 / (L * np.sqrt(np.arange(K) + 1.0)))
    trace = RunTrace("baseline_gradient", instance, config)
    x = _start(instance, config)
    metric = instance.metric
    psi = instance.psi
    mon = _Monitor(trace, instance, config, x, "V" if instance.kind == "vi" else None)
    trace.v.append(x.copy())
    points = [x.copy()]
    for k in range(K):
        Vx = instance.operator(x)
        x = psi.project(x - h[k] * metric.solve(Vx), metric)
        points.append(x.copy())
        Vn = instance.operator(x)
        if mon.record(k + 1, h[k], 0.0, x, Vn, Vn, np.nan, np.inf, x):
            break
    points = np.array(points)
    windows = []
    for m in config.windows:
        if 2 * m > len(points) - 1:
            continue
        w = h[m:2 * m]
        x_avg = (w[:, None] * points[m + 1:2 * m + 1]).sum(axis=0) / w.sum()
        windows.append({"m": m, "merit": evaluate_merit(x_avg, instance).value,
                        "bound": float(window_merit_bound(h, L, instance.D, m)),
                        "rate": window_merit_rate(m, L, instance.D) if m >= 2 else np.inf})
    trace.points = points
    _finish(trace, x)
    trace.summary["windows"] = windows
    return trace


def run_baseline_extragradient(instance, config=None, h=None):
    """Extragradient ``y_k = pi(x_k - h V(x_k))``, ``x_{k+1} = pi(x_k - h V(y_k))``.

    Logs the merit of the running average of the ``y_k`` (uniform weights).
    """
    config = replace(config or MethodConfig(), scheme="baseline_extragradient")
    L = float(instance.constants["M1"])
    h = h if h is not None else (config.stepsize or 1.0 / (np.sqrt(2.0) * L))
    trace = RunTrace("baseline_extragradient", instance, config)
    x = _start(instance, config)
    metric = instance.metric
    psi = instance.psi
    mon = _Monitor(trace, instance, config, x, "V" if instance.kind == "vi" else None)
    trace.v.append(x.copy())
    for k in range(config.max_iter):
        y = psi.project(x - h * metric.solve(instance.operator(x)), metric)
        Vy = instance.operator(y)
        x = psi.project(x - h * metric.solve(Vy), metric)
        if mon.record(k + 1, h, 0.0, y, Vy, Vy, np.nan, np.inf, x):
            break
    _finish(trace, x)
    trace.summary["h"] = h
    return trace


_RUNNERS = {
    "primal": run_primal,
    "dual": run_dual,
    "projecting": run_projecting,
    "uniform_monotone": run_uniform_monotone,
    "switching": run_switching,
    "baseline_gradient": run_baseline_gradient,
    "baseline_extragradient": run_baseline_extragradient,
}


def run(instance, config):
    """Run ``config.scheme`` on ``instance``."""
    return _RUNNERS[config.scheme](instance, config)
