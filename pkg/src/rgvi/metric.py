"""Euclidean metrics, Bregman distances, power prox functions and the prox step.

A :class:`Metric` wraps a symmetric positive-definite operator ``B`` and
provides the primal norm ``||x||_B = <Bx, x>^{1/2}`` together with the dual
norm ``||g||_* = <g, B^{-1} g>^{1/2}``.  Identity, diagonal and dense
representations are supported; dense ``B`` is held through its Cholesky
factor.
"""

import numpy as np
from scipy import linalg

from ._validation import check_scalar, check_vector
from .exceptions import InfeasiblePointError, InvalidInputError

__all__ = [
    "Metric",
    "dual_norm",
    "BregmanDistance",
    "EuclideanProxFunction",
    "PowerProx",
    "euclidean_bregman",
    "prox_step",
]


class Metric:
    """Symmetric positive-definite metric operator ``B`` on ``R^dim``.

    Parameters
    ----------
    B : None, array of shape (dim,) or (dim, dim)
        ``None`` gives the identity (``dim`` required), a vector gives a
        diagonal operator, a matrix gives a dense operator.
    dim : int, optional
        Dimension; required when ``B`` is None.
    """

    def __init__(self, B=None, dim=None):
        if B is None:
            if dim is None:
                raise InvalidInputError("identity metric needs a dimension")
            self.dim = int(check_scalar(dim, "dim", min_val=1, integer=True))
            self.kind = "identity"
            self._diag = np.ones(self.dim)
            self._dense = None
            self._chol = None
        else:
            arr = np.asarray(B, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError("metric operator contains non-finite entries")
            if arr.ndim == 1:
                if np.any(arr <= 0):
                    raise InvalidInputError("diagonal metric must be positive")
                self.dim = arr.shape[0]
                self.kind = "diagonal"
                self._diag = arr.copy()
                self._dense = None
                self._chol = None
            elif arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
                scale = max(np.abs(arr).max(), 1.0)
                if np.abs(arr - arr.T).max() > 1e-12 * scale:
                    raise InvalidInputError("metric operator is not symmetric")
                arr = 0.5 * (arr + arr.T)
                try:
                    self._chol = linalg.cho_factor(arr, lower=True)
                except linalg.LinAlgError as exc:
                    raise InvalidInputError("metric operator is not positive definite") from exc
                self.dim = arr.shape[0]
                self.kind = "dense"
                self._dense = arr
                self._diag = np.diag(arr).copy()
            else:
                raise InvalidInputError(f"bad metric shape {arr.shape}")
            if dim is not None and dim != self.dim:
                raise InvalidInputError(f"metric dimension {self.dim} != {dim}")
        for arr in (self._diag, self._dense):
            if arr is not None:
                arr.setflags(write=False)

    def __repr__(self):
        return f"Metric(kind={self.kind!r}, dim={self.dim})"

    @property
    def is_identity(self):
        return self.kind == "identity"

    @property
    def matrix(self):
        if self._dense is not None:
            return self._dense
        return np.diag(self._diag)

    @property
    def diagonal(self):
        """Diagonal of ``B`` (exact representation only for non-dense kinds)."""
        return self._diag

    def apply(self, x):
        """Return ``B x``."""
        if self.kind == "identity":
            return np.array(x, dtype=float)
        if self.kind == "diagonal":
            return self._diag * x
        return self._dense @ x

    def solve(self, g):
        """Return ``B^{-1} g``."""
        if self.kind == "identity":
            return np.array(g, dtype=float)
        if self.kind == "diagonal":
            return g / self._diag
        return linalg.cho_solve(self._chol, g)

    def inner(self, x, y):
        return float(np.dot(self.apply(x), y))

    def norm(self, x):
        return float(np.sqrt(max(self.inner(x, x), 0.0)))

    def dual_norm(self, g):
        return float(np.sqrt(max(np.dot(g, self.solve(g)), 0.0)))

    def max_eigenvalue(self):
        if self.kind != "dense":
            return float(self._diag.max())
        return float(linalg.eigvalsh(self._dense)[-1])

    def min_eigenvalue(self):
        if self.kind != "dense":
            return float(self._diag.min())
        return float(linalg.eigvalsh(self._dense)[0])


def dual_norm(g, metric):
    """Dual norm ``<g, B^{-1} g>^{1/2}`` of the covector ``g``."""
    g = check_vector(g, metric.dim, name="g")
    return metric.dual_norm(g)


def euclidean_bregman(x, y, metric):
    """Bregman distance of ``d = 1/2 ||.||_B^2``, i.e. ``1/2 ||x - y||_B^2``."""
    diff = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    return 0.5 * metric.inner(diff, diff)


class BregmanDistance:
    """Bregman distance ``beta(x, y) = d(y) - d(x) - <grad d(x), y - x>``.

    ``prox_function`` must expose ``value(x)`` and ``gradient(x)`` and be
    1-strongly convex with respect to the norm in use.
    """

    def __init__(self, prox_function):
        self.prox_function = prox_function

    def __call__(self, x, y):
        d = self.prox_function
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        val = d.value(y) - d.value(x) - float(np.dot(d.gradient(x), y - x))
        # Clip roundoff below zero; the exact value is nonnegative.
        return max(val, 0.0)


class EuclideanProxFunction:
    """``d(x) = 1/2 ||x||_B^2``; its Bregman distance is ``1/2 ||x - y||_B^2``."""

    def __init__(self, metric):
        self.metric = metric

    def value(self, x):
        return 0.5 * self.metric.inner(x, x)

    def gradient(self, x):
        return self.metric.apply(x)


class PowerProx:
    """Power prox function ``d_p(x) = ||x||_B^p / p`` for ``p >= 2``."""

    def __init__(self, p, metric):
        self.p = check_scalar(p, "p", min_val=2)
        self.metric = metric

    def value(self, x):
        return self.metric.norm(x) ** self.p / self.p

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        r = self.metric.norm(x)
        if r == 0.0:
            return np.zeros_like(x)
        return r ** (self.p - 2) * self.metric.apply(x)

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        B = self.metric.matrix
        r = self.metric.norm(x)
        if r == 0.0:
            return B.copy() if self.p == 2 else np.zeros_like(B)
        Bx = B @ x
        return r ** (self.p - 2) * (B + (self.p - 2) * np.outer(Bx, Bx) / r**2)

    def uniform_convexity_constant(self):
        """Constant ``(1/2)^(p-2)`` in ``<grad d(y) - grad d(x), y - x> >= c ||y - x||^p``."""
        return 0.5 ** (self.p - 2)


def prox_step(center, h, g, psi, metric, include_psi=False, check_feasible=True):
    """Euclidean proximal gradient step.

    Computes ``argmin_{x in dom psi} h <g, x - center> + 1/2 ||x - center||_B^2``,
    and with ``include_psi=True`` adds the penalty ``h * psi(x)`` to the
    objective.  For indicator terms the two conventions coincide.

    Parameters
    ----------
    center : array
        Prox center, must lie in ``dom psi``.
    h : float
        Nonnegative step size.
    g : array
        Covector defining the linear term.
    psi : CompositeTerm
    metric : Metric
    include_psi : bool, default=False
        Whether ``psi`` enters as a penalty (dual scheme) or only through its
        domain (primal scheme).

    Returns
    -------
    ndarray
    """
    center = check_vector(center, metric.dim, name="center")
    g = check_vector(g, metric.dim, name="g")
    check_scalar(h, "h", min_val=0.0)
    if check_feasible and not psi.contains(center):
        raise InfeasiblePointError("prox center is outside dom psi")
    if h == 0.0:
        return center.copy()
    target = center - h * metric.solve(g)
    if include_psi:
        return psi.prox(target, h, metric)
    return psi.project(target, metric)
