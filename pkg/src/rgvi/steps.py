"""Essential steps: tensor steps for minimization and VIs, and the universal stepsize.

Every step computes a point ``T`` in ``dom psi`` as the strong solution of
an auxiliary CVI with a monotone model operator ``A`` and returns the
reduced gradient ``V_psi(T) = V(T) - A(T)``.  Since ``-A(T)`` is a
subgradient of ``psi`` at ``T``, the reduced gradient separates the
prox-center from the solution set.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._inner import solve_regularized_cvi
from ._validation import check_scalar
from .exceptions import ConfigError, CutViolationError, StationaryPointReached

__all__ = [
    "StepRecord",
    "StepConfig",
    "universal_stepsize",
    "min_tensor_step",
    "vi_step_order0",
    "vi_step_order1",
    "essential_step",
    "tech_lemma_value",
    "gamma_min",
    "gamma_vi",
    "default_regularization",
    "alpha_uniform",
    "step_quality_slack",
    "STATIONARY_RTOL",
]

# ||V_psi(T)||_* below this fraction of (1 + ||V(v)||_*) counts as a solution.
STATIONARY_RTOL = 1e-13
# A nonpositive cut with ||V_psi|| below this fraction is attributed to roundoff:
# the cut is at least ~||V_psi||^2 / M while its rounding error is ~eps * scale^2 / M.
ROUNDOFF_RTOL = 8 * math.sqrt(np.finfo(float).eps)


@dataclass
class StepRecord:
    """Result of one essential step from the prox-center ``v``.

    Attributes
    ----------
    v, T : ndarray
        Prox-center and new point.
    reduced_gradient : ndarray
        ``V_psi(T)``.
    V_T : ndarray
        ``V(T)``.
    a, b : float
        Universal stepsize and progress ``a^2 ||V_psi(T)||_*^2 / 2``; both
        zero for stationary steps.
    g_norm : float
        ``||V_psi(T)||_*``.
    r : float
        ``||T - v||_B``.
    inner_residual : float
        Dual-norm error of the inner solve (0 for closed-form steps).
    stationary : bool
        The reduced gradient vanished (``T`` solves the problem), or the
        cut is lost in roundoff (see ``roundoff``).
    roundoff : bool
        The cut is nonpositive but within the rounding error of forming
        ``V(T) - A(T)``; no further progress is possible in floating point.
    """

    v: np.ndarray
    T: np.ndarray
    reduced_gradient: np.ndarray
    V_T: np.ndarray
    a: float
    b: float
    g_norm: float
    r: float
    inner_residual: float = 0.0
    stationary: bool = False
    roundoff: bool = False

    @property
    def cut(self):
        """``<V_psi(T), v - T>``."""
        return float(np.dot(self.reduced_gradient, self.v - self.T))


@dataclass(frozen=True)
class StepConfig:
    """Order ``p``, regularization ``M`` (None selects the default) and inner-solver limits."""

    order: int = 0
    M: float = None
    inner_tol: float = 1e-13
    inner_max_iter: int = 10000

    def __post_init__(self):
        check_scalar(self.order, "order", min_val=0, max_val=2, integer=True)
        if self.M is not None:
            check_scalar(self.M, "M", min_val=0.0, include_min=False)
        check_scalar(self.inner_tol, "inner_tol", min_val=0.0, include_min=False)
        check_scalar(self.inner_max_iter, "inner_max_iter", min_val=1, integer=True)


def universal_stepsize(v, T, g, metric):
    """Return ``(a, b)`` with ``a = <g, v - T> / ||g||_*^2`` and ``b = a^2 ||g||_*^2 / 2``.

    Raises
    ------
    StationaryPointReached
        If ``g = 0``.
    CutViolationError
        If ``<g, v - T> <= 0``.
    """
    g = np.asarray(g, dtype=float)
    gg = float(np.dot(g, metric.solve(g)))
    if gg == 0.0:
        raise StationaryPointReached(T)
    cut = float(np.dot(g, np.asarray(v, dtype=float) - np.asarray(T, dtype=float)))
    if not cut > 0.0:
        raise CutViolationError(f"essential step condition failed: <g, v - T> = {cut:.3e}")
    a = cut / gg
    return a, 0.5 * cut * a


def tech_lemma_value(sigma, gamma, delta):
    """``inf_{g > 0} gamma g^(2/sigma) / 2 + g^((1 - sigma)/sigma) delta`` in closed form."""
    sigma = check_scalar(sigma, "sigma", min_val=1.0)
    gamma = check_scalar(gamma, "gamma", min_val=0.0, include_min=False)
    delta = check_scalar(delta, "delta", min_val=0.0)
    if sigma == 1:
        return float(delta)
    return float((sigma + 1) / 2 * (gamma / (sigma - 1)) ** ((sigma - 1) / (sigma + 1))
                 * delta ** (2 / (1 + sigma)))


def gamma_min(p, M, L):
    """Step-quality constant of the order-``p`` minimization step.

    ``<V_psi(T), v - T> >= gamma ||V_psi(T)||_*^((p+1)/p)``.  For ``p = 1``
    the general expression is indeterminate; squaring
    ``||V_psi + M B(T - v)||_* <= L r`` gives
    ``2M <V_psi, v - T> >= ||V_psi||^2 + (M^2 - L^2) r^2`` and
    ``||V_psi|| <= (M + L) r``, hence ``gamma_1 = 1/(M + L)``.
    """
    if p == 1:
        return 1.0 / (M + L)
    return (p / M) * (math.factorial(p) / (p + 1)) ** (1 / p) * (
        (M * M - L * L) / (p * p - 1)) ** ((p - 1) / (2 * p))


def gamma_vi(p, M, M_hat):
    """Step-quality constant of the order-``p`` VI step.

    ``(M - c)(M + c)^(-(p+2)/(p+1))`` with ``c = M_hat / (p+1)!``.
    """
    c = M_hat / math.factorial(p + 1)
    return (M - c) * (M + c) ** (-(p + 2) / (p + 1))


def alpha_uniform(p, gamma_hat, sigma):
    """Averaging weight of the uniformly monotone scheme.

    For ``p >= 1`` this is ``(p+2) gamma (gamma/p)^(p/(p+2)) sigma^(2/(p+2))``.
    At ``p = 0`` the technical lemma with exponent one gives the infimum
    ``delta`` directly, so the weight is ``2 gamma sigma`` (also the limit
    of the general formula as ``p -> 0``).
    """
    if p == 0:
        return 2.0 * gamma_hat * sigma
    return (p + 2) * gamma_hat * (gamma_hat / p) ** (p / (p + 2)) * sigma ** (2 / (p + 2))


def _constant(instance, key):
    val = instance.constants.get(key)
    if val is None:
        raise ConfigError(f"instance {instance.name} does not record constant {key}", field=key)
    return float(val)


def default_regularization(instance, p):
    """Default ``M``: ``p L_p`` for minimization, ``(2p+3)/(p+1)! M_hat_{p+1}`` for VIs.

    When the relevant constant vanishes (e.g. ``M_hat_2 = 0`` for affine
    operators) the value 1 is used, which keeps the model strongly monotone.
    """
    if instance.kind == "min":
        val = p * _constant(instance, f"L{p}")
    else:
        val = (2 * p + 3) / math.factorial(p + 1) * _constant(instance, f"M{p + 1}")
    return val if val > 0 else 1.0


def _check_regularization(instance, p, M):
    if instance.kind == "min":
        L = _constant(instance, f"L{p}")
        if M < p * L * (1 - 1e-12):
            raise ConfigError(f"M={M} below p*L_p={p * L}", field="M")
    else:
        bound = _constant(instance, f"M{p + 1}") / math.factorial(p)
        if M < bound * (1 - 1e-12):
            raise ConfigError(f"M={M} below M_hat/p!={bound}", field="M")


def _finish(v, T, model, instance, inner_residual, V_v):
    """Assemble the record for point ``T`` with model value ``A(T)``."""
    metric = instance.metric
    V_T = instance.operator(T)
    g = V_T - model
    g_norm = metric.dual_norm(g)
    r = metric.norm(T - v)
    scale = 1.0 + metric.dual_norm(V_v)
    if g_norm <= STATIONARY_RTOL * scale:
        return StepRecord(v, T, g, V_T, 0.0, 0.0, g_norm, r, inner_residual, stationary=True)
    cut = float(np.dot(g, v - T))
    if not cut > 0.0:
        if g_norm <= ROUNDOFF_RTOL * scale:
            return StepRecord(v, T, g, V_T, 0.0, 0.0, g_norm, r, inner_residual,
                              stationary=True, roundoff=g_norm > STATIONARY_RTOL * scale)
        raise CutViolationError(f"essential step condition failed: <V_psi(T), v - T> = {cut:.3e}, "
                                f"||V_psi(T)|| = {g_norm:.3e}")
    a, b = universal_stepsize(v, T, g, metric)
    return StepRecord(v, T, g, V_T, a, b, g_norm, r, inner_residual)


def _linear_model_step(v, instance, M):
    """``T = prox_{psi/M}(v - B^{-1} V(v) / M)`` with model ``A(y) = V(v) + M B (y - v)``."""
    metric = instance.metric
    V_v = instance.operator(v)
    T = instance.psi.prox(v - metric.solve(V_v) / M, 1.0 / M, metric)
    model = V_v + M * metric.apply(T - v)
    return _finish(v, T, model, instance, 0.0, V_v)


def vi_step_order0(v, instance, M=None):
    """Order-zero VI step: the model is ``V(v) + M B (y - v)``.

    For ``psi = Ind_Q`` this is ``x_+ = pi_Q(v - B^{-1} V(v) / M)`` and
    ``V_psi(x_+) = V(x_+) - V(v) - M B (x_+ - v)``.
    """
    M = default_regularization(instance, 0) if M is None else float(M)
    _check_regularization(instance, 0, M)
    return _linear_model_step(np.asarray(v, dtype=float), instance, M)


def vi_step_order1(v, instance, config=None):
    """Order-one VI step with model ``V(v) + DV(v)(y - v) + M ||y - v|| B (y - v)``."""
    config = config or StepConfig(order=1)
    M = default_regularization(instance, 1) if config.M is None else float(config.M)
    _check_regularization(instance, 1, M)
    v = np.asarray(v, dtype=float)
    op = instance.operator
    V_v = op(v)
    T, model, res = solve_regularized_cvi(v, V_v, op.jacobian(v), M, instance.psi, instance.metric,
                                          tol=config.inner_tol, max_iter=config.inner_max_iter)
    return _finish(v, T, model, instance, res, V_v)


def min_tensor_step(v, instance, config):
    """Basic tensor step of order ``p in {1, 2}`` for composite minimization.

    ``p = 1``: ``T = prox_{psi/M}(v - B^{-1} grad f(v) / M)``.
    ``p = 2``: cubic-regularized Newton step, model
    ``grad f(v) + hess f(v)(y - v) + (M/2) ||y - v|| B (y - v)``.
    """
    p = config.order
    if p not in (1, 2):
        raise ConfigError(f"minimization steps need order 1 or 2, got {p}", field="order")
    M = default_regularization(instance, p) if config.M is None else float(config.M)
    _check_regularization(instance, p, M)
    v = np.asarray(v, dtype=float)
    if p == 1:
        return _linear_model_step(v, instance, M)
    op = instance.operator
    V_v = op(v)
    T, model, res = solve_regularized_cvi(v, V_v, op.jacobian(v), 0.5 * M, instance.psi,
                                          instance.metric, tol=config.inner_tol,
                                          max_iter=config.inner_max_iter)
    return _finish(v, T, model, instance, res, V_v)


def essential_step(v, instance, config):
    """Dispatch to the step matching the instance kind and ``config.order``."""
    if instance.kind == "min":
        return min_tensor_step(v, instance, config)
    if config.order == 0:
        return vi_step_order0(v, instance, config.M)
    if config.order == 1:
        return vi_step_order1(v, instance, config)
    raise ConfigError(f"VI steps of order {config.order} are not supported", field="order")


def step_quality_slack(record, instance, config):
    """``<V_psi, v - T> - gamma ||V_psi||^q`` for the step's own bound.

    The constants are resolved through module globals at call time, so
    patching :func:`gamma_vi` or :func:`gamma_min` changes the check.
    """
    p = config.order
    if instance.kind == "min":
        M = default_regularization(instance, p) if config.M is None else config.M
        gamma = gamma_min(p, M, _constant(instance, f"L{p}"))
        q = (p + 1) / p
    else:
        M = default_regularization(instance, p) if config.M is None else config.M
        gamma = gamma_vi(p, M, _constant(instance, f"M{p + 1}"))
        q = (p + 2) / (p + 1)
    return record.cut - gamma * record.g_norm ** q
