"""Estimator-style wrappers around the functional ``run_*`` schemes.

The "data" passed to ``fit`` is a problem: either a :class:`ProblemInstance`
or the name of a zoo instance (with ``problem_params`` forwarded to
:func:`make_instance`).  Hyperparameters follow the scikit-learn
conventions, so ``get_params``/``set_params``/``clone`` work as usual.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .methods import MethodConfig, run
from .problems import ProblemInstance, make_instance
from .steps import StepConfig

__all__ = ["ReducedGradientSolver", "ProjectedGradientVI", "ExtragradientVI"]


def _resolve(problem, params):
    if isinstance(problem, ProblemInstance):
        return problem
    return make_instance(problem, **(params or {}))


class _SolverMixin:
    def _store(self, trace):
        self.trace_ = trace
        self.n_iter_ = trace.n_iter
        self.stop_reason_ = trace.stop_reason
        self.x_ = trace.x_final
        self.x_bar_ = trace.x_bar
        self.summary_ = trace.summary
        return self

    def _check_fitted(self):
        if not hasattr(self, "trace_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def score(self, problem=None):
        """Negative final certificate (higher is better); NaN when unavailable."""
        self._check_fitted()
        cert = self.trace_.column("certificate") if len(self.trace_) else np.array([np.nan])
        finite = cert[np.isfinite(cert)]
        return -float(finite[-1]) if finite.size else np.nan


class ReducedGradientSolver(_SolverMixin, BaseEstimator):
    """Reduced-gradient method for a composite VI or composite minimization problem.

    Parameters
    ----------
    scheme : {"primal", "dual", "projecting", "uniform_monotone", "switching"}
    order : int
        Order ``p`` of the essential step.
    M : float, optional
        Regularization; the instance default when None.
    max_iter : int
    tol : float
        Stop once ``||V_psi(x_t)||_*`` falls to ``tol``.
    cert_threshold : float
        Stop once the accuracy certificate falls to this value.
    log_every : int
        Merit/certificate evaluation cadence.
    check_theorems : bool
        Raise on violated online inequalities.
    x0 : array, optional
        Starting point (instance default when None).
    problem_params : dict, optional
        Keyword arguments for :func:`make_instance` when ``fit`` gets a name.

    Attributes
    ----------
    trace_ : RunTrace
    x_ : ndarray
        Last computed point.
    x_bar_ : ndarray
        Weighted average of the points.
    n_iter_ : int
    stop_reason_ : str
    """

    def __init__(self, scheme="primal", order=0, M=None, max_iter=500, tol=0.0,
                 cert_threshold=0.0, log_every=1, check_theorems=True, x0=None,
                 problem_params=None):
        self.scheme = scheme
        self.order = order
        self.M = M
        self.max_iter = max_iter
        self.tol = tol
        self.cert_threshold = cert_threshold
        self.log_every = log_every
        self.check_theorems = check_theorems
        self.x0 = x0
        self.problem_params = problem_params

    def _config(self):
        return MethodConfig(scheme=self.scheme, step=StepConfig(order=self.order, M=self.M),
                            max_iter=self.max_iter, tol=self.tol,
                            cert_threshold=self.cert_threshold, log_every=self.log_every,
                            check_theorems=self.check_theorems, x0=self.x0)

    def fit(self, problem, y=None):
        inst = _resolve(problem, self.problem_params)
        return self._store(run(inst, self._config()))

    def predict(self, problem=None):
        """The averaged point ``x_bar`` (the point that carries the rate)."""
        self._check_fitted()
        return self.x_bar_ if self.x_bar_ is not None else self.x_


class ProjectedGradientVI(_SolverMixin, BaseEstimator):
    """Projected gradient baseline with ``h_k = 1/(L sqrt(k+1))`` and sliding-window averages."""

    def __init__(self, max_iter=500, windows=(), stepsizes=None, x0=None, problem_params=None):
        self.max_iter = max_iter
        self.windows = windows
        self.stepsizes = stepsizes
        self.x0 = x0
        self.problem_params = problem_params

    def fit(self, problem, y=None):
        from .methods import run_baseline_gradient

        inst = _resolve(problem, self.problem_params)
        cfg = MethodConfig(scheme="baseline_gradient", max_iter=self.max_iter,
                           windows=tuple(self.windows), x0=self.x0)
        return self._store(run_baseline_gradient(inst, cfg, self.stepsizes))

    def predict(self, problem=None):
        self._check_fitted()
        return self.x_


class ExtragradientVI(_SolverMixin, BaseEstimator):
    """Extragradient baseline with constant step ``h`` (default ``1/(sqrt 2 L)``)."""

    def __init__(self, h=None, max_iter=500, x0=None, problem_params=None):
        self.h = h
        self.max_iter = max_iter
        self.x0 = x0
        self.problem_params = problem_params

    def fit(self, problem, y=None):
        from .methods import run_baseline_extragradient

        inst = _resolve(problem, self.problem_params)
        cfg = MethodConfig(scheme="baseline_extragradient", max_iter=self.max_iter, x0=self.x0)
        return self._store(run_baseline_extragradient(inst, cfg, self.h))

    def predict(self, problem=None):
        """Uniform average of the extrapolation points."""
        self._check_fitted()
        return self.x_bar_
