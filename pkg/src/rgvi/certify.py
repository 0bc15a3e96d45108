"""Merit functions, accuracy certificates and evaluated rate bounds.

The composite merit of a candidate ``xbar`` is::

    mu(xbar) = psi(xbar) + max_{x in dom psi} <V(x), xbar - x> - psi(x)

and the certificates are weighted linear maxima built from the points
``x_i`` and weights ``a_i`` of a run, restricted to the ball
``||x - x0||_B <= R0``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ._inner import fista
from ._validation import check_random_state
from .exceptions import ConfigError

__all__ = [
    "merit",
    "evaluate_merit",
    "MeritValue",
    "CertificateAccumulator",
    "ball_constrained_max",
    "vi_certificate_bound",
    "vi_certificate_bound_optimal",
    "vi_gradient_bound",
    "min_function_bound",
    "min_function_bound_optimal",
    "min_gradient_bound",
    "switching_gradient_bound",
    "window_merit_bound",
    "window_merit_rate",
    "linear_rate_bound",
]


@dataclass(frozen=True)
class MeritValue:
    """Merit value and whether it is exact (else a certified lower bound)."""

    value: float
    exact: bool
    mode: str


def _is_skew(C):
    return np.abs(C + C.T).max() <= 1e-12 * max(1.0, np.abs(C).max())


def _resolve_mode(instance, mode):
    if mode is None or mode == "auto":
        return instance.merit_mode
    if mode not in ("closed_form", "inner_solve", "sample_lower_bound"):
        raise ConfigError(f"unknown merit mode {mode!r}", field="merit_mode")
    return mode


def evaluate_merit(xbar, instance, mode=None, n_starts=8, n_iter=200, seed=0):
    """Composite merit of ``xbar``; see :class:`MeritValue`.

    Modes
    -----
    closed_form
        Affine skew operators ``V(x) = Cx + c``: since ``<Cx, x> = 0`` the
        inner objective is linear, ``mu = psi(xbar) + <c, xbar> +
        max_x <C^T xbar - c, x> - psi(x)``.  For matrix games this is the
        best-response gap.
    inner_solve
        Affine monotone operators on bounded domains (or with positive
        definite symmetric part): the inner objective is a concave
        quadratic, maximized by accelerated gradient.
    sample_lower_bound
        Multi-start projected gradient ascent; returns a lower bound.
    """
    xbar = np.asarray(xbar, dtype=float)
    mode = _resolve_mode(instance, mode)
    psi = instance.psi
    op = instance.operator
    if mode in ("closed_form", "inner_solve") and op.affine is None:
        raise ConfigError(f"merit mode {mode} needs an affine operator", field="merit_mode")
    psi_bar = psi(xbar)
    if mode == "closed_form":
        C, c = op.affine
        if not _is_skew(C):
            raise ConfigError("closed-form merit needs a skew-symmetric operator", field="merit_mode")
        s = C.T @ xbar - c
        val, _ = psi.support(s)
        return MeritValue(float(psi_bar + np.dot(c, xbar) + val), True, mode)
    if mode == "inner_solve":
        C, c = op.affine
        S = 0.5 * (C + C.T)
        s = C.T @ xbar - c
        # max_x -<Sx, x> + <s, x> - psi(x) + <c, xbar>
        if not psi.bounded:
            if psi.kind != "zero":
                raise ConfigError("inner-solve merit on unbounded domain needs psi = 0",
                                  field="merit_mode")
            x = np.linalg.solve(2 * S, s)
            val = -float(x @ S @ x) + float(s @ x)
            return MeritValue(float(psi_bar + np.dot(c, xbar) + val), True, mode)
        Lg = 2 * np.linalg.norm(S, 2)
        x0 = psi.support(s)[1]
        x0 = psi.project(x0) if x0 is not None else psi.project(xbar)
        x, _, _ = fista(lambda x: 2 * S @ x - s, lambda y, h: psi.prox(y, h), max(Lg, 1e-12), x0,
                        tol=1e-12 * (1 + np.linalg.norm(s)), max_iter=50000)
        val = -float(x @ S @ x) + float(s @ x) - psi(x)
        return MeritValue(float(psi_bar + np.dot(c, xbar) + val), True, mode)
    if not psi.bounded and op.objective is None:
        raise ConfigError("merit on an unbounded domain needs a potential operator",
                          field="merit_mode")
    return MeritValue(_sampled_merit(xbar, instance, n_starts, n_iter, seed), False, mode)


def _sampled_merit(xbar, instance, n_starts, n_iter, seed):
    psi = instance.psi
    op = instance.operator
    rng = check_random_state(seed)
    starts = [xbar.copy(), instance.x0.copy()] + list(psi.sample(rng, n_starts))
    if instance.x_star is not None:
        starts.append(instance.x_star.copy())

    def phi(x):
        return float(np.dot(op(x), xbar - x)) - psi(x)

    scale = instance.constants.get("M1") or instance.constants.get("L1") or 1.0
    best = -np.inf
    for x in starts:
        x = psi.project(x)
        h = 0.5 / max(scale, 1e-12)
        val = phi(x)
        for _ in range(n_iter):
            grad = op.jacobian(x).T @ (xbar - x) - op(x) if op.order_cap >= 1 else -op(x)
            y = psi.prox(x + h * grad, h)
            vy = phi(y)
            if vy >= val:
                x, val = y, vy
            else:
                h *= 0.5
                if h < 1e-14:
                    break
        best = max(best, val)
    return float(psi(xbar) + best)


def merit(xbar, instance, mode=None, **kwargs):
    """Composite merit value (see :func:`evaluate_merit`)."""
    return evaluate_merit(xbar, instance, mode, **kwargs).value


def ball_constrained_max(u, weight, psi, metric, x0, R0):
    """``max <u, x> - weight psi(x)`` over ``dom psi`` intersected with ``||x - x0||_B <= R0``.

    Returns ``(value, maximizer)``.  When the unconstrained maximizer lies in
    the ball the support function is used directly; otherwise the ball
    multiplier ``lam`` is found by a 1-D root search on
    ``||x(lam) - x0||_B = R0`` with
    ``x(lam) = prox_{(weight/lam) psi}(x0 + B^{-1} u / lam)``.
    """
    u = np.asarray(u, dtype=float)
    if weight > 0 or psi.is_indicator:
        val, x = psi.support(u, weight) if weight > 0 else psi.domain.support(u)
        if np.isfinite(val) and x is not None and metric.norm(x - x0) <= R0:
            return float(val), x
    if psi.kind == "zero":
        un = metric.dual_norm(u)
        x = x0 + (R0 / un) * metric.solve(u) if un > 0 else x0.copy()
        return float(np.dot(u, x0) + R0 * un), x

    def x_of(lam):
        target = x0 + metric.solve(u) / lam
        if weight > 0:
            return psi.prox(target, weight / lam, metric)
        return psi.project(target, metric)

    def excess(log_lam):
        return metric.norm(x_of(np.exp(log_lam)) - x0) - R0

    un = metric.dual_norm(u)
    if un == 0.0:
        x = x0.copy()
        return float(np.dot(u, x) - weight * psi(x)), x
    hi = np.log(un / R0) + 1.0
    while excess(hi) > 0:
        hi += 2.0
    lo = hi - 2.0
    while excess(lo) < 0:
        lo -= 2.0
        if lo < hi - 200:
            x = x_of(np.exp(lo))
            return float(np.dot(u, x) - weight * psi(x)), x
    log_lam = optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=300)
    # Use the side of the root outside the ball: the value is then an upper bound.
    x = x_of(np.exp(log_lam))
    if metric.norm(x - x0) < R0:
        x = x_of(np.exp(log_lam - 1e-13))
    return float(np.dot(u, x) - weight * psi(x)), x


class CertificateAccumulator:
    """Running sums for an accuracy certificate.

    Parameters
    ----------
    variant : {"V", "psi", "F"}
        ``V`` and ``psi`` use ``<V(x_i), x_i - x> + psi(x_i) - psi(x)``
        (VIs and dual minimization); ``F`` uses ``<V_psi(x_i), x_i - x>``
        with ``psi`` entering only through its domain (primal minimization).
    instance : ProblemInstance
    R0 : float, optional
        Radius of the ball around ``x0``; defaults to ``instance.R0``.
    """

    def __init__(self, variant, instance, R0=None, x0=None):
        if variant not in ("V", "psi", "F"):
            raise ConfigError(f"unknown certificate variant {variant!r}", field="certificate")
        self.variant = variant
        self.psi = instance.psi
        self.metric = instance.metric
        self.x0 = np.asarray(instance.x0 if x0 is None else x0, dtype=float)
        self.R0 = float(instance.R0 if R0 is None else R0)
        self.linear = np.zeros(instance.dim)
        self.scalar = 0.0
        self.psi_sum = 0.0
        self.A = 0.0

    def add(self, a, x, V_x, V_psi_x=None):
        """Add point ``x`` with weight ``a``; ``V_psi_x`` is required for variant ``F``."""
        g = V_psi_x if self.variant == "F" else V_x
        self.linear += a * g
        self.scalar += a * float(np.dot(g, x))
        if self.variant != "F":
            self.psi_sum += a * self.psi(x)
        self.A += a

    def value(self, R0=None):
        """Current certificate ``(1/A) max_x sum_i a_i [...]``."""
        if self.A <= 0:
            return np.inf
        R0 = self.R0 if R0 is None else R0
        weight = 0.0 if self.variant == "F" else self.A
        val, _ = ball_constrained_max(-self.linear, weight, self.psi, self.metric, self.x0, R0)
        return (self.scalar + self.psi_sum + val) / self.A


# ------------------------------------------------------------ evaluated bounds

def vi_certificate_bound(t, p, gamma_hat, R0):
    """``(1/t)^((p+2)/2) (1/gamma_hat)^(p+1) R0^(p+2) / (p+2)``."""
    t = np.asarray(t, dtype=float)
    return (1.0 / t) ** ((p + 2) / 2) * (1.0 / gamma_hat) ** (p + 1) * R0 ** (p + 2) / (p + 2)


def vi_certificate_bound_optimal(t, p, M_hat, R0):
    """``2e/(p+1)! (1/t)^((p+2)/2) M_hat R0^(p+2)`` for the optimal regularization."""
    t = np.asarray(t, dtype=float)
    return 2 * math.e / math.factorial(p + 1) * (1.0 / t) ** ((p + 2) / 2) * M_hat * R0 ** (p + 2)


def vi_gradient_bound(t, p, gamma_hat, dist0):
    """``(1/t)^((p+1)/2) (dist0 / gamma_hat)^(p+1)``."""
    t = np.asarray(t, dtype=float)
    return (1.0 / t) ** ((p + 1) / 2) * (dist0 / gamma_hat) ** (p + 1)


def _pow0(base, exp):
    # 0^0 = 1 convention used at p = 1.
    return 1.0 if exp == 0 else base ** exp


def min_function_bound(t, p, gamma, dist0):
    """``dist0^(p+1)/(p+1) (1/gamma)^p ((p-1)/(p+1))^((p-1)/2) (1/t)^((p+1)/2)``."""
    t = np.asarray(t, dtype=float)
    return (dist0 ** (p + 1) / (p + 1) * (1.0 / gamma) ** p
            * _pow0((p - 1) / (p + 1), (p - 1) / 2) * (1.0 / t) ** ((p + 1) / 2))


def min_function_bound_optimal(t, p, L, dist0):
    """``L dist0^(p+1)/p! ((p-1)/(p+1))^((p-1)/2) (1/t)^((p+1)/2)`` for ``M = p L_p``."""
    t = np.asarray(t, dtype=float)
    return (L * dist0 ** (p + 1) / math.factorial(p) * _pow0((p - 1) / (p + 1), (p - 1) / 2)
            * (1.0 / t) ** ((p + 1) / 2))


def min_gradient_bound(t, p, gamma, dist0):
    """``(dist0/gamma)^p (1/t)^(p/2)``."""
    t = np.asarray(t, dtype=float)
    return (dist0 / gamma) ** p * (1.0 / t) ** (p / 2)


def switching_gradient_bound(N, p, gamma, dist0):
    """Bound on the best gradient norm of the two-stage scheme with ``N = 2t`` steps.

    Stage a gives ``F(y_0) - F* <= min_function_bound(t)``, stage b decreases
    ``F`` by at least ``gamma G^((p+1)/p)`` per step, so
    ``G*_N <= (min_function_bound(t) / (t gamma))^(p/(p+1))``.
    """
    t = N / 2
    gap = min_function_bound(t, p, gamma, dist0)
    return float((gap / (t * gamma)) ** (p / (p + 1)))


def window_merit_bound(h, L, D, m, k_end=None):
    """``(1 + L^2 S2) / (2 S1) D^2`` for the window ``h[m..k_end]`` (default ``2m-1``)."""
    k_end = 2 * m - 1 if k_end is None else k_end
    w = np.asarray(h[m:k_end + 1], dtype=float)
    return (1 + L * L * np.sum(w * w)) / (2 * np.sum(w)) * D * D


def window_merit_rate(m, L, D):
    """``(1 + sqrt 2) ln 2 / (2 sqrt(m-1)) L D^2`` for ``m >= 2``."""
    return (1 + math.sqrt(2)) * math.log(2) / (2 * math.sqrt(m - 1)) * L * D * D


def linear_rate_bound(t, alpha, dist0):
    """``(1 + alpha)^(-t/2) dist0``."""
    t = np.asarray(t, dtype=float)
    return (1.0 + alpha) ** (-t / 2) * dist0
