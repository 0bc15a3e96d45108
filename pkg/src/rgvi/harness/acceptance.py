"""Acceptance suite: quantitative checks of the online inequalities, step bounds and rates.

Each criterion returns a :class:`CriterionResult` with the measured values
next to their thresholds.  Exceptions inside a criterion become failed
entries, so the report always lists every criterion.
"""

import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize

from .. import steps as _steps
from ..certify import (min_function_bound, min_gradient_bound, switching_gradient_bound,
                       vi_certificate_bound, window_merit_bound, window_merit_rate)
from ..composite import Ball, Box, ProductSet, Simplex
from ..methods import MethodConfig, run, run_baseline_extragradient, run_baseline_gradient
from ..problems import chained_cubic_value, make_instance
from ..steps import StepConfig
from .experiment import fit_rate

__all__ = ["CriterionResult", "AcceptanceReport", "acceptance_suite", "CRITERIA"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        extra = f" error={self.error}" if self.error else ""
        return f"criterion {self.number:2d} [{status}] {self.title} ({self.seconds:.1f}s) {shown}{extra}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


@dataclass
class AcceptanceReport:
    results: list

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def lines(self):
        return [r.line() for r in self.results]

    def to_json(self):
        def clean(o):
            if isinstance(o, dict):
                return {k: clean(v) for k, v in o.items()}
            if isinstance(o, (list, tuple)):
                return [clean(v) for v in o]
            if isinstance(o, (np.floating, np.integer)):
                return o.item()
            if isinstance(o, float) and not math.isfinite(o):
                return str(o)
            return o

        return json.dumps(clean({"passed": self.passed, "criteria": [asdict(r) for r in self.results]}),
                          indent=1)


# ------------------------------------------------------------------ shared runs

# (label, zoo name, params, order, M); every instance of the zoo appears at
# least once, VI instances at p = 0 or 1 and minimization at p = 1 or 2.
ZOO_RUNS = [
    ("matching_pennies/p0", "matching_pennies", {}, 0, None),
    ("bilinear_game/p0", "bilinear_game", {"seed": 0}, 0, None),
    ("bilinear_game/p1", "bilinear_game", {"seed": 0}, 1, None),
    ("perturbed_bilinear_game/p1", "perturbed_bilinear_game", {"seed": 0}, 1, None),
    ("skew_rotation/p0", "skew_rotation", {}, 0, None),
    ("strongly_monotone_affine[whole]/p0", "strongly_monotone_affine", {"set": "whole"}, 0, None),
    ("strongly_monotone_affine[box]/p0", "strongly_monotone_affine", {"set": "box"}, 0, None),
    ("strongly_monotone_affine[ball]/p0", "strongly_monotone_affine", {"set": "ball"}, 0, None),
    ("chained_cubic/p1", "chained_cubic", {}, 1, None),
    ("chained_cubic/p2", "chained_cubic", {}, 2, None),
] + [(f"composite_quadratic[{k}]/p{p}", "composite_quadratic", {"psi_kind": k}, p, None)
     for k in ("zero", "box", "ball", "simplex", "l1") for p in (1, 2)]

ONLINE_ITERS = 500
ONLINE_RTOL = 1e-8


class _Context:
    """Memoized instances and runs shared between criteria."""

    def __init__(self):
        self._inst = {}
        self._runs = {}

    def instance(self, name, params):
        key = (name, tuple(sorted(params.items())))
        if key not in self._inst:
            self._inst[key] = make_instance(name, **params)
        return self._inst[key]

    def zoo_run(self, label, scheme):
        key = (label, scheme)
        if key not in self._runs:
            _, name, params, p, M = next(r for r in ZOO_RUNS if r[0] == label)
            inst = self.instance(name, params)
            cfg = MethodConfig(scheme=scheme, step=StepConfig(order=p, M=M), max_iter=ONLINE_ITERS,
                               check_theorems=False)
            t0 = time.perf_counter()
            tr = run(inst, cfg)
            self._runs[key] = (inst, tr, time.perf_counter() - t0)
        return self._runs[key]


def _online(ctx, schemes):
    worst, worst_label, n_runs, max_time, stops = -np.inf, "", 0, 0.0, {}
    ok = True
    for label, *_ in ZOO_RUNS:
        for scheme in schemes:
            inst, tr, sec = ctx.zoo_run(label, scheme)
            n_runs += 1
            max_time = max(max_time, sec)
            stops[tr.stop_reason] = stops.get(tr.stop_reason, 0) + 1
            if not len(tr):
                continue
            t = tr.column("t")
            s = tr.column("theorem_slack")
            allowed = np.asarray(tr.slack_budget)
            # report in units of t * 1e-8
            ratio = float(np.max(s / (t * ONLINE_RTOL)))
            if ratio > worst:
                worst, worst_label = ratio, f"{label}:{scheme}"
            if np.any(s > allowed) or sec >= 10.0:
                ok = False
    return ok, {"runs": n_runs, "max_slack_over_t_1e-8": worst, "worst_run": worst_label,
                "max_runtime_s": max_time, "stop_reasons": stops}


def criterion_1(ctx):
    ok, m = _online(ctx, ("primal",))
    return ok, m, {"slack": "<= t*1e-8*(1+beta0) + inner-residual term", "runtime_s": "< 10"}


def criterion_2(ctx):
    ok, m = _online(ctx, ("dual", "projecting"))
    worst_hs = 0.0
    for label, *_ in ZOO_RUNS:
        _, tr, _ = ctx.zoo_run(label, "projecting")
        if "halfspace_residual" in tr.extra_columns:
            worst_hs = max(worst_hs, float(np.max(np.abs(tr.column("halfspace_residual")))))
    m["max_halfspace_residual"] = worst_hs
    ok = ok and worst_hs <= 1e-8
    return ok, m, {"slack": "<= t*1e-8*(1+scale)", "halfspace_residual": "<= 1e-8"}


def criterion_3(ctx):
    worst = -np.inf
    for label, *_ in ZOO_RUNS:
        for scheme in ("primal", "dual", "projecting"):
            inst, tr, _ = ctx.zoo_run(label, scheme)
            if inst.kind != "vi" or inst.x_star is None:
                continue
            d0 = inst.metric.norm(inst.x0 - inst.x_star)
            d = np.array([inst.metric.norm(v - inst.x_star) for v in tr.v])
            worst = max(worst, float(np.max(d / d0)))
    ok = worst <= 1 + 1e-6
    halving = {}
    for label, name, params, p, t_fix in (("chained_cubic/p2", "chained_cubic", {}, 2, 100),
                                          ("composite_quadratic[box]/p1", "composite_quadratic",
                                           {"psi_kind": "box"}, 1, 100)):
        inst = ctx.instance(name, params)
        M = _steps.default_regularization(inst, p)
        gamma = _steps.gamma_min(p, M, inst.constants[f"L{p}"])
        d0 = inst.metric.norm(inst.x0 - inst.x_star)
        x0h = inst.x_star + 0.5 * (inst.x0 - inst.x_star)
        tr = run(inst, MethodConfig(scheme="primal", step=StepConfig(order=p), max_iter=t_fix,
                                    x0=x0h, merit="off", check_theorems=False))
        t_end = len(tr)
        b_full = float(min_function_bound(t_end, p, gamma, d0))
        b_half = float(min_function_bound(t_end, p, gamma, 0.5 * d0))
        gap = float(tr.column("F_tilde_gap")[-1])
        ratio = b_full / b_half
        halving[label] = {"t": t_end, "bound_ratio": ratio, "gap": gap, "bound_half": b_half}
        ok = ok and ratio >= 2 ** (p + 1) * (1 - 1e-6) and gap <= b_half
    return ok, {"max_dist_ratio": worst, "halving": halving}, {
        "dist_ratio": "<= 1+1e-6", "bound_ratio": ">= 2^(p+1)(1-1e-6)", "gap": "<= bound"}


def _sample_step_slacks(inst, config, rng, k):
    """Step-quality slacks at ``k`` random prox-centers."""
    out = []
    centers = inst.psi.sample(rng, k)
    for v in centers:
        rec = _steps.essential_step(v, inst, config)
        if rec.stationary:
            continue
        out.append((_steps.step_quality_slack(rec, inst, config), rec.inner_residual))
    return out


def criterion_4(ctx, n_samples=400, seed=0):
    rng = np.random.default_rng(seed)
    slacks = []
    # steps taken inside the zoo runs (VI at default M; minimization at p = 2 below)
    for label, name, params, p, M in ZOO_RUNS:
        inst = ctx.instance(name, params)
        if inst.kind != "vi":
            continue
        for scheme in ("primal", "dual", "projecting"):
            _, tr, _ = ctx.zoo_run(label, scheme)
            cfg = StepConfig(order=p, M=M)
            for v in tr.v[:-1]:
                rec = _steps.essential_step(v, inst, cfg)
                if not rec.stationary:
                    slacks.append((_steps.step_quality_slack(rec, inst, cfg), rec.inner_residual))
    # steps from random prox-centers: VI p in {0, 1}, minimization p = 2 with M = 2 L2
    for label, name, params, p, _ in ZOO_RUNS:
        inst = ctx.instance(name, params)
        if inst.kind == "vi":
            for order in (0, 1):
                slacks += _sample_step_slacks(inst, StepConfig(order=order), rng, n_samples)
        elif p == 2:
            L2 = inst.constants["L2"]
            cfg = StepConfig(order=2, M=2 * L2 if L2 > 0 else None)
            slacks += _sample_step_slacks(inst, cfg, rng, n_samples)
    s = np.array([x[0] for x in slacks])
    res = np.array([x[1] for x in slacks])
    margin = s + res + 1e-6
    ok = len(s) >= 10_000 and bool(np.all(margin >= 0))
    return ok, {"steps": len(s), "min_slack": float(s.min()), "min_margin": float(margin.min())}, {
        "steps": ">= 10000", "slack": ">= -(inner residual + 1e-6)"}


C5_ITERS = 2000
# p = 1 regularization for the rate check: with the default M the polyhedral
# games are solved to machine precision within a few steps, leaving nothing
# to fit on [20, 2000]; a larger M keeps the run in its sublinear regime.
C5_M_P1 = 1000.0


def criterion_5(ctx, seeds=(0, 1, 2)):
    out, ok = {}, True
    t0 = time.perf_counter()
    for p, name, M, thr in ((0, "bilinear_game", None, -0.9), (1, "perturbed_bilinear_game", C5_M_P1, -1.3)):
        for seed in seeds:
            inst = ctx.instance(name, {"seed": seed})
            M_used = _steps.default_regularization(inst, p) if M is None else M
            tr = run(inst, MethodConfig(scheme="primal", step=StepConfig(order=p, M=M),
                                        max_iter=C5_ITERS, merit="off", check_theorems=False))
            g_hat = _steps.gamma_vi(p, M_used, inst.constants[f"M{p + 1}"])
            t = tr.column("t")
            cert = tr.column("certificate")
            bound = vi_certificate_bound(t, p, g_hat, inst.R0)
            ratio = float(np.max(cert / bound))
            fit = fit_rate(tr, "certificate", (20, C5_ITERS))
            out[f"{name}/p{p}/seed{seed}"] = {"n_iter": len(tr), "max_cert_over_bound": ratio,
                                              "slope": fit.slope, "stop": tr.stop_reason}
            ok = ok and ratio <= 1.0 and fit.slope <= thr
    sec = time.perf_counter() - t0
    ok = ok and sec < 60
    return ok, {"runs": out, "runtime_s": sec}, {
        "cert": "<= bound", "slope_p0": "<= -0.9", "slope_p1": "<= -1.3", "runtime_s": "< 60"}


def criterion_6(ctx):
    out, ok = {}, True
    for label, name, params, p, thr in (
            ("composite_quadratic[box]/p1", "composite_quadratic", {"psi_kind": "box"}, 1, -0.9),
            ("chained_cubic/p2", "chained_cubic", {}, 2, -1.3)):
        inst = ctx.instance(name, params)
        M = _steps.default_regularization(inst, p)
        gamma = _steps.gamma_min(p, M, inst.constants[f"L{p}"])
        d0 = inst.metric.norm(inst.x0 - inst.x_star)
        tr = run(inst, MethodConfig(scheme="primal", step=StepConfig(order=p), max_iter=500,
                                    merit="off", check_theorems=False))
        t = tr.column("t")
        gap = tr.column("F_tilde_gap")
        f_ratio = float(np.max(gap / min_function_bound(t, p, gamma, d0)))
        g_ratio = float(np.max(tr.column("g_star") / min_gradient_bound(t, p, gamma, d0)))
        fit = fit_rate(tr, "F_tilde_gap", (10, 500))
        sw = {}
        for N in (20, 40, 80):
            st = run(inst, MethodConfig(scheme="switching", step=StepConfig(order=p), max_iter=N,
                                        merit="off", check_theorems=False))
            G = st.summary["G_star"]
            B = switching_gradient_bound(N, p, gamma, d0)
            sw[N] = {"G_star": G, "bound": B, "min_descent_slack": float(np.min(st.summary["descent_slack"]))
                     if len(st.summary["descent_slack"]) else 0.0}
            ok = ok and G <= B
        out[label] = {"n_iter": len(tr), "slope": fit.slope, "max_gap_over_bound": f_ratio,
                      "max_grad_over_bound": g_ratio, "switching": sw}
        ok = ok and f_ratio <= 1 and g_ratio <= 1 and fit.slope <= thr
    return ok, out, {"gap": "<= bound", "grad": "<= bound", "slope_p1": "<= -0.9",
                     "slope_p2": "<= -1.3", "switching": "G* <= bound at N in {20, 40, 80}"}


def criterion_7(ctx):
    out, ok = {}, True
    for st in ("whole", "box", "ball"):
        inst = ctx.instance("strongly_monotone_affine", {"n": 20, "mu": 0.1, "L": 1.0, "set": st})
        tr = run(inst, MethodConfig(scheme="uniform_monotone", max_iter=200, merit="off",
                                    check_theorems=False))
        alpha = tr.summary["alpha"]
        d = np.array([inst.metric.norm(v - inst.x_star) for v in tr.v])
        contr = float(np.max(d[1:] ** 2 / (d[:-1] ** 2 / (1 + alpha))))
        t = len(d) - 1
        final = float(d[-1] / ((1 + alpha) ** (-t / 2) * d[0]))
        out[st] = {"iters": t, "alpha": alpha, "max_contraction_ratio": contr, "final_over_bound": final}
        ok = ok and t >= 200 and contr <= 1 + 1e-8 and final <= 1 + 1e-6
    return ok, out, {"contraction": "<= 1+1e-8", "final": "<= 1+1e-6", "iters": ">= 200"}


def criterion_8(ctx):
    worst_vi, worst_min, low, checked = np.inf, np.inf, np.inf, 0
    for label, *_ in ZOO_RUNS:
        for scheme in ("primal", "dual", "projecting"):
            inst, tr, _ = ctx.zoo_run(label, scheme)
            if not len(tr) or not tr.merit_exact:
                continue
            cert = tr.column("certificate")
            if inst.kind == "vi":
                mu = tr.column("merit")
                mask = np.isfinite(cert) & np.isfinite(mu)
                if not mask.any():
                    continue
                rel = (cert[mask] - mu[mask]) / np.maximum(1.0, np.abs(mu[mask]))
                worst_vi = min(worst_vi, float(rel.min()))
                low = min(low, float(mu[mask].min()))
            else:
                gap = tr.column("F_tilde_gap")
                best = tr.column("F_best_gap")
                mask = np.isfinite(cert)
                chain = np.minimum(cert[mask] - gap[mask], gap[mask] - best[mask])
                rel = chain / np.maximum(1.0, np.abs(gap[mask]))
                worst_min = min(worst_min, float(rel.min()), float(best[mask].min()) + 1e-12)
            checked += 1
    ok = worst_vi >= -1e-10 and worst_min >= -1e-10 and low >= -1e-8 and checked > 0
    return ok, {"runs_checked": checked, "min_rel_vi_cert_minus_merit": worst_vi,
                "min_rel_min_chain": worst_min, "min_merit": low}, {
        "cert_minus_merit": ">= -1e-10 (roundoff)", "merit": ">= -1e-8"}


def criterion_9(ctx):
    out = {}
    skew = ctx.instance("skew_rotation", {})
    gd = run_baseline_gradient(skew, MethodConfig(scheme="baseline_gradient", max_iter=400,
                                                  windows=(50, 100, 200), merit="off"))
    d = gd.column("dist_to_xstar")
    nondecr = bool(np.all(np.diff(d) >= -1e-12))
    ok = nondecr
    for w in gd.summary["windows"]:
        w_ok = w["merit"] <= w["bound"] and w["merit"] <= w["rate"]
        out[f"skew_m{w['m']}"] = {"merit": w["merit"], "lemma_bound": w["bound"], "rate": w["rate"]}
        ok = ok and w_ok
    ok = ok and len(gd.summary["windows"]) == 3
    mp = ctx.instance("matching_pennies", {})
    eg = run_baseline_extragradient(mp, MethodConfig(scheme="baseline_extragradient", max_iter=2000))
    fit = fit_rate(eg, "merit", (20, 2000))
    ok = ok and abs(fit.slope + 1) <= 0.15
    out["last_iterate_nondecreasing"] = nondecr
    out["extragradient_slope"] = fit.slope
    return ok, out, {"windows": "merit <= lemma bound and <= closed-form rate",
                     "extragradient_slope": "-1 +- 0.15"}


def _grid_min(sigma, gamma, delta):
    def f(lg):
        g = math.exp(lg)
        return 0.5 * gamma * g ** (2 / sigma) + g ** ((1 - sigma) / sigma) * delta

    grid = np.linspace(-60, 60, 4001)
    vals = np.array([f(lg) for lg in grid])
    j = int(np.argmin(vals))
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    r = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                 options={"xatol": 1e-12})
    return min(float(r.fun), float(vals[j]))


def _oracle_project(y, dom):
    """Independent projections: clipping, radial scaling, threshold bisection."""
    if isinstance(dom, Box):
        return np.clip(y, dom.lower, dom.upper)
    if isinstance(dom, Ball):
        d = y - dom.center
        n = np.linalg.norm(d)
        return y if n <= dom.radius else dom.center + d * (dom.radius / n)
    if isinstance(dom, Simplex):
        tau = optimize.brentq(lambda s: np.maximum(y - s, 0).sum() - 1.0, y.min() - 1.0, y.max(),
                              xtol=1e-15)
        x = np.maximum(y - tau, 0.0)
        return x / x.sum()
    if isinstance(dom, ProductSet):
        out, i = np.empty_like(y), 0
        for b in dom.blocks:
            out[i:i + b.dim] = _oracle_project(y[i:i + b.dim], b)
            i += b.dim
        return out
    return y.copy()


def criterion_10(ctx, seed=0):
    rng = np.random.default_rng(seed)
    worst_lemma = 0.0
    for _ in range(1000):
        sigma = rng.uniform(1.0, 4.0)
        gamma = 10 ** rng.uniform(-2, 1)
        delta = 10 ** rng.uniform(-2, 1)
        ref = _grid_min(sigma, gamma, delta)
        val = _steps.tech_lemma_value(sigma, gamma, delta)
        worst_lemma = max(worst_lemma, abs(val - ref) / abs(ref))
    vi_insts = [ctx.instance(n, p) for _, n, p, _, _ in ZOO_RUNS if make_kind(ctx, n, p) == "vi"]
    worst_proj = 0.0
    for k in range(1000):
        inst = vi_insts[k % len(vi_insts)]
        v = inst.psi.sample(rng, 1)[0]
        M = _steps.default_regularization(inst, 0) * (1 + rng.uniform(0, 3))
        rec = _steps.vi_step_order0(v, inst, M)
        V_v = inst.operator(v)
        x_plus = _oracle_project(v - V_v / M, inst.psi.domain)
        g = inst.operator(x_plus) - V_v - M * (x_plus - v)
        err = max(np.max(np.abs(rec.T - x_plus)), np.max(np.abs(rec.reduced_gradient - g)))
        worst_proj = max(worst_proj, float(err))
    all_insts = [(ctx.instance(n, p), order) for _, n, p, order, _ in ZOO_RUNS]
    worst_pair, n_pairs = np.inf, 0
    while n_pairs < 10_000:
        inst, order = all_insts[n_pairs % len(all_insts)]
        order = 0 if (inst.kind == "vi" and n_pairs % 5) else order
        if inst.kind == "min" and order == 0:
            order = 1
        cfg = StepConfig(order=order)
        v1, v2 = inst.psi.sample(rng, 2)
        r1 = _steps.essential_step(v1, inst, cfg)
        r2 = _steps.essential_step(v2, inst, cfg)
        dT = r1.T - r2.T
        lhs = float(np.dot(r1.reduced_gradient - r2.reduced_gradient, dT))
        mid = float(np.dot(r1.V_T - r2.V_T, dT))
        scale = 1.0 + np.linalg.norm(r1.V_T) * np.linalg.norm(dT) + np.linalg.norm(r2.V_T) * np.linalg.norm(dT)
        tol = 1e-8 * scale + (r1.inner_residual + r2.inner_residual) * np.linalg.norm(dT)
        worst_pair = min(worst_pair, (lhs - mid + tol), (mid + tol))
        n_pairs += 1
    ok = worst_lemma <= 1e-6 and worst_proj <= 1e-10 and worst_pair >= 0
    return ok, {"tech_lemma_max_rel_err": worst_lemma, "p0_step_max_abs_err": worst_proj,
                "pairs": n_pairs, "min_pair_margin": worst_pair}, {
        "tech_lemma": "<= 1e-6", "p0_step": "<= 1e-10", "pair_margin": ">= 0"}


def make_kind(ctx, name, params):
    return ctx.instance(name, params).kind


def criterion_11(ctx):
    ok = True
    rows = {}
    for n in range(2, 11):
        f_ones = chained_cubic_value(np.ones(n))
        xbar = np.array([2.0 ** i - 1 for i in range(1, n + 1)])
        f_bar = chained_cubic_value(xbar)
        norm_exact = sum(Fraction(2 ** i - 1) ** 2 for i in range(1, n + 1))
        closed = Fraction(8, 3) * (2 ** n - 1) * (2 ** (n - 1) - 1) + n
        norm_float = float(np.dot(xbar, xbar))
        rows[n] = (f_ones, f_bar, norm_float)
        ok = ok and f_ones == n and f_bar == n and norm_exact == closed and norm_float == float(closed)
    return ok, {"n_range": "2..10", "f(ones,10)": rows[10][0], "f(xbar,10)": rows[10][1],
                "norm2(xbar,10)": rows[10][2]}, {"values": "exact"}


CRITERIA = {
    1: ("primal online inequality on the zoo", criterion_1),
    2: ("dual and projecting online inequalities", criterion_2),
    3: ("distance control and hot start", criterion_3),
    4: ("step-quality lower bounds", criterion_4),
    5: ("VI certificate rate on 10x10 games", criterion_5),
    6: ("minimization rates and switching scheme", criterion_6),
    7: ("uniformly monotone linear rate", criterion_7),
    8: ("certificate dominance", criterion_8),
    9: ("baseline gradient and extragradient", criterion_9),
    10: ("oracle equivalences", criterion_10),
    11: ("chained cubic reference values", criterion_11),
}


def acceptance_suite(only=None, verbose=None):
    """Run the criteria (all, or the numbers in ``only``) and return a report.

    ``verbose`` is an optional callable receiving each result line as soon as
    the criterion finishes.
    """
    ctx = _Context()
    results = []
    for num, (title, func) in CRITERIA.items():
        if only is not None and num not in only:
            continue
        t0 = time.perf_counter()
        try:
            passed, measured, thresholds = func(ctx)
            res = CriterionResult(num, title, bool(passed), measured, thresholds)
        except Exception as exc:  # noqa: BLE001 - failures become report entries
            res = CriterionResult(num, title, False, error=f"{type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        results.append(res)
        if verbose is not None:
            verbose(res.line())
    return AcceptanceReport(results)
