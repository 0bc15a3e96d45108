"""Inner solvers: accelerated composite gradient and the regularized auxiliary CVI.

The auxiliary problem solved by the order-one VI step and the order-two
minimization step has the common form::

    find x in dom psi:  <G(x), y - x> + psi(y) >= psi(x)   for all y,
    G(x) = g0 + J (x - v) + coef * ||x - v||_B * B (x - v)

with ``J`` monotone (``<Jh, h> >= 0``) and ``coef >= 0``.
"""

import numpy as np
from scipy import linalg, optimize

from .exceptions import StepFailureError


def fista(grad, prox, lipschitz, x0, strong_convexity=0.0, tol=1e-12, max_iter=10000):
    """Accelerated proximal gradient for ``min f(x) + h(x)``.

    ``prox(y, step)`` must return ``argmin step*h(x) + 1/2 ||x - y||^2``.
    Stops when the gradient-mapping norm ``L ||x - prox(x - grad/L)||`` is
    below ``tol``.  Returns ``(x, residual, iterations)``.
    """
    L = max(float(lipschitz), 1e-300)
    step = 1.0 / L
    x = np.array(x0, dtype=float)
    y = x.copy()
    t = 1.0
    q = strong_convexity / L
    if q > 0:
        beta_const = (1 - np.sqrt(q)) / (1 + np.sqrt(q))
    residual = np.inf
    for k in range(1, max_iter + 1):
        x_new = prox(y - step * grad(y), step)
        if q > 0:
            y = x_new + beta_const * (x_new - x)
        else:
            t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
            y = x_new + ((t - 1) / t_new) * (x_new - x)
            t = t_new
        # Restart on non-monotone progress (gradient-based criterion).
        if np.dot(y - x_new, x_new - x) > 0:
            y = x_new.copy()
            t = 1.0
        x = x_new
        if k % 5 == 0 or k == max_iter:
            mapped = prox(x - step * grad(x), step)
            residual = L * np.linalg.norm(x - mapped)
            if residual <= tol:
                return mapped, residual, k
    return x, residual, max_iter


def _reg_operator(x, v, g0, J, coef, metric):
    s = x - v
    r = metric.norm(s)
    return g0 + J @ s + coef * r * metric.apply(s)


def _reg_jacobian(x, v, J, coef, metric):
    s = x - v
    r = metric.norm(s)
    B = metric.matrix
    jac = J.copy()
    if r > 0:
        Bs = B @ s
        jac += coef * (r * B + np.outer(Bs, Bs) / r)
    return jac


def _solve_unconstrained(v, g0, J, coef, metric, tol):
    """Root of ``r = ||s(r)||_B`` with ``s(r) = -(J + coef r B)^{-1} g0``."""
    B = metric.matrix
    if not np.any(g0):
        return v.copy()

    def s_of(r):
        return -np.linalg.solve(J + coef * r * B, g0)

    if coef == 0.0:
        s = np.linalg.lstsq(J, -g0, rcond=None)[0]
        return v + s

    def phi(r):
        return metric.norm(s_of(r)) - r

    lo = 0.0
    try:
        phi_lo = phi(lo)
    except np.linalg.LinAlgError:
        lo = 1e-300
        phi_lo = np.inf
    if not np.isfinite(phi_lo):
        lo = np.finfo(float).tiny
        while not np.isfinite(phi(lo)):
            lo *= 10
    # ||s(r)|| <= ||g0||_* / (coef r) gives an upper bracket.
    hi = np.sqrt(metric.dual_norm(g0) / coef) * 2 + 1e-300
    while phi(hi) > 0:
        hi *= 2
    r = optimize.brentq(phi, lo, hi, xtol=tol * max(hi, 1e-300), rtol=4 * np.finfo(float).eps,
                        maxiter=500)
    return v + s_of(r)


def _natural_step(x, eta, v, g0, J, coef, psi, metric):
    G = _reg_operator(x, v, g0, J, coef, metric)
    z = x - eta * metric.solve(G)
    xp = psi.prox(z, eta, metric)
    return G, z, xp


def _newton(x, v, g0, J, coef, psi, metric, eta, tol, max_iter):
    """Semismooth Newton on the natural map ``F(x) = x - prox_{eta psi}(x - eta G(x))``."""
    n = x.shape[0]
    I = np.eye(n)
    _, z, xp = _natural_step(x, eta, v, g0, J, coef, psi, metric)
    F = x - xp
    nF = np.linalg.norm(F)
    for _ in range(max_iter):
        if nF <= tol:
            return xp, nF, True
        P = psi.prox_jacobian(z, eta)
        DG = _reg_jacobian(x, v, J, coef, metric)
        jac = I - P + eta * P @ DG
        try:
            d = np.linalg.solve(jac, -F)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(jac, -F, rcond=None)[0]
        step = 1.0
        accepted = False
        for _ in range(40):
            x_try = x + step * d
            x_try = psi.project(x_try, metric) if psi.is_indicator else x_try
            _, z_try, xp_try = _natural_step(x_try, eta, v, g0, J, coef, psi, metric)
            F_try = x_try - xp_try
            n_try = np.linalg.norm(F_try)
            if n_try <= (1 - 1e-4 * step) * nF or n_try <= tol:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return x, nF, False
        x, z, xp, F, nF = x_try, z_try, xp_try, F_try, n_try
    return xp, nF, nF <= tol


def _extragradient(x, v, g0, J, coef, psi, metric, eta, tol, max_iter):
    """Extragradient with step halving on the local Lipschitz estimate."""
    for _ in range(max_iter):
        G = _reg_operator(x, v, g0, J, coef, metric)
        y = psi.prox(x - eta * metric.solve(G), eta, metric)
        res = metric.norm(x - y) / eta
        if res <= tol:
            return y, res, True
        Gy = _reg_operator(y, v, g0, J, coef, metric)
        if eta * metric.dual_norm(Gy - G) > 0.9 * metric.norm(y - x):
            eta *= 0.5
            continue
        x = psi.prox(x - eta * metric.solve(Gy), eta, metric)
    G = _reg_operator(x, v, g0, J, coef, metric)
    y = psi.prox(x - eta * metric.solve(G), eta, metric)
    return y, metric.norm(x - y) / eta, False


def solve_regularized_cvi(v, g0, J, coef, psi, metric, tol=1e-13, max_iter=10000):
    """Solve the regularized auxiliary CVI and return an exactly certified model.

    Returns
    -------
    x : ndarray
        Point in ``dom psi``.
    model_value : ndarray
        Covector ``A(x)`` such that ``-A(x)`` lies in ``partial psi(x)``
        *exactly* (up to the closed-form prox), so the reduced gradient
        ``V(x) - A(x)`` yields a valid cut.
    residual : float
        Dual-norm distance ``||A(x) - G(x)||_*`` between the certified model
        value and the ideal operator value.
    """
    v = np.asarray(v, dtype=float)
    g0 = np.asarray(g0, dtype=float)
    J = np.asarray(J, dtype=float)
    scale = 1.0 + np.linalg.norm(g0) + np.linalg.norm(J, 2)
    if psi.kind == "zero":
        x = _solve_unconstrained(v, g0, J, coef, metric, tol)
        # dom psi is the whole space: the only admissible model value is 0.
        G = _reg_operator(x, v, g0, J, coef, metric)
        return x, np.zeros_like(x), metric.dual_norm(G)
    eta = 1.0 / scale
    x0 = psi.prox(v - eta * metric.solve(g0), eta, metric)
    converged = False
    x = x0
    if metric.is_identity:
        x, res, converged = _newton(x0, v, g0, J, coef, psi, metric, eta, tol, 100)
    if not converged:
        x, res, converged = _extragradient(x, v, g0, J, coef, psi, metric, eta,
                                           tol * scale, max_iter)
    # Exact certification: one more prox step from the approximate solution.
    G, z, xp = _natural_step(x, eta, v, g0, J, coef, psi, metric)
    model_value = G + metric.apply(xp - x) / eta
    residual = metric.dual_norm(_reg_operator(xp, v, g0, J, coef, metric) - model_value)
    if not converged and residual > 1e-6 * scale:
        raise StepFailureError("auxiliary CVI solver did not converge", residual)
    return xp, model_value, residual
