"""Simple convex sets and composite terms ``psi``.

Every composite term exposes the same small interface used by the steps,
methods and certificates:

* ``psi(x)``: value, ``+inf`` outside ``dom psi``;
* ``contains(x)``: domain membership;
* ``project(y, metric)``: ``B``-projection onto ``dom psi``;
* ``prox(y, step, metric)``: ``argmin step*psi(x) + 1/2 ||x - y||_B^2``;
* ``prox_jacobian(y, step)``: an element of the generalized Jacobian of the
  Euclidean prox (used by semismooth Newton inner solvers);
* ``support(s, weight)``: ``max_x <s, x> - weight*psi(x)`` with a maximizer;
* ``domain_radius(x0, metric)``: an upper bound on ``||x - x0||_B`` over the domain.
"""

import numpy as np
from scipy import optimize

from ._inner import fista
from ._validation import check_scalar, check_vector
from .exceptions import InvalidInputError

__all__ = [
    "WholeSpace",
    "Box",
    "Ball",
    "Simplex",
    "ProductSet",
    "ZeroTerm",
    "Indicator",
    "L1Norm",
    "project_simplex",
]


def project_simplex(y, weights=None):
    """Project ``y`` onto the standard simplex in the metric ``diag(weights)``.

    With unit weights this is the sort-and-threshold algorithm.  In general
    the solution is ``x_i = max(y_i - tau / w_i, 0)`` and ``tau`` is found
    exactly from the sorted breakpoints ``w_i y_i``.
    """
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    # Shifting y by c / w leaves the projection unchanged; c = max(w y) keeps
    # the breakpoints nonpositive and avoids overflow for huge inputs.
    y = y - np.max(w * y) / w
    brk = w * y
    order = np.argsort(-brk)
    inv_w = 1.0 / w[order]
    cum_y = np.cumsum(y[order])
    cum_inv = np.cumsum(inv_w)
    taus = (cum_y - 1.0) / cum_inv
    sorted_brk = brk[order]
    # Largest k with tau_k < k-th breakpoint.
    valid = taus < sorted_brk
    valid[0] = True  # holds in exact arithmetic
    k = np.nonzero(valid)[0][-1]
    tau = taus[k]
    return np.maximum(y - tau / w, 0.0)


def _dense_projection(y, metric, euclid_project):
    B = metric.matrix
    x0 = euclid_project(y)
    x, _, _ = fista(lambda x: B @ (x - y), lambda z, s: euclid_project(z),
                    metric.max_eigenvalue(), x0, strong_convexity=metric.min_eigenvalue(),
                    tol=1e-13 * (1 + np.linalg.norm(y)), max_iter=20000)
    return x


class SimpleSet:
    """Base class: closed convex set with closed-form Euclidean projection."""

    bounded = True

    def __init__(self, dim):
        self.dim = dim

    def project(self, y, metric=None):
        if metric is None or metric.is_identity:
            return self._project_euclid(y)
        if metric.kind == "diagonal":
            return self._project_diag(y, metric.diagonal)
        return _dense_projection(y, metric, self._project_euclid)

    def _project_diag(self, y, w):
        raise NotImplementedError

    def sample(self, rng, k):
        raise NotImplementedError


class WholeSpace(SimpleSet):
    bounded = False

    def __repr__(self):
        return f"WholeSpace({self.dim})"

    def contains(self, x, tol=1e-9):
        return bool(np.all(np.isfinite(x)))

    def _project_euclid(self, y):
        return np.array(y, dtype=float)

    def _project_diag(self, y, w):
        return np.array(y, dtype=float)

    def project_jacobian(self, y):
        return np.eye(self.dim)

    def support(self, s):
        if np.any(s != 0):
            return np.inf, None
        return 0.0, np.zeros(self.dim)

    def radius_from(self, x0, metric):
        return np.inf

    def sample(self, rng, k, scale=3.0):
        return scale * rng.standard_normal((k, self.dim))


class Box(SimpleSet):
    def __init__(self, lower, upper):
        lower = check_vector(lower, name="lower")
        upper = check_vector(upper, len(lower), name="upper")
        if np.any(lower > upper):
            raise InvalidInputError("box has lower > upper")
        super().__init__(lower.shape[0])
        self.lower = lower
        self.upper = upper

    def __repr__(self):
        return f"Box(dim={self.dim})"

    def contains(self, x, tol=1e-9):
        scale = 1.0 + np.abs(self.lower).max() + np.abs(self.upper).max()
        return bool(np.all(x >= self.lower - tol * scale) and np.all(x <= self.upper + tol * scale))

    def _project_euclid(self, y):
        return np.clip(y, self.lower, self.upper)

    def _project_diag(self, y, w):
        return np.clip(y, self.lower, self.upper)

    def project_jacobian(self, y):
        inside = (y > self.lower) & (y < self.upper)
        return np.diag(inside.astype(float))

    def support(self, s):
        x = np.where(s > 0, self.upper, self.lower)
        return float(np.dot(s, x)), x

    def radius_from(self, x0, metric):
        far = np.where(np.abs(self.upper - x0) >= np.abs(self.lower - x0), self.upper, self.lower)
        if metric.kind == "dense":
            return np.sqrt(metric.max_eigenvalue()) * float(np.linalg.norm(far - x0))
        return metric.norm(far - x0)

    def sample(self, rng, k):
        return rng.uniform(self.lower, self.upper, size=(k, self.dim))


class Ball(SimpleSet):
    """Euclidean ball ``{x : ||x - center||_2 <= radius}``."""

    def __init__(self, center, radius):
        self.center = check_vector(center, name="center")
        self.radius = float(check_scalar(radius, "radius", min_val=0.0))
        super().__init__(self.center.shape[0])

    def __repr__(self):
        return f"Ball(dim={self.dim}, radius={self.radius})"

    def contains(self, x, tol=1e-9):
        return bool(np.linalg.norm(x - self.center) <= self.radius * (1 + tol) + tol)

    def _project_euclid(self, y):
        d = y - self.center
        nd = np.linalg.norm(d)
        if nd <= self.radius:
            return np.array(y, dtype=float)
        return self.center + (self.radius / nd) * d

    def _project_diag(self, y, w):
        d = y - self.center
        if np.linalg.norm(d) <= self.radius:
            return np.array(y, dtype=float)

        def excess(lam):
            return np.linalg.norm(w * d / (w + lam)) - self.radius

        hi = w.max() * np.linalg.norm(d) / max(self.radius, 1e-300)
        lam = optimize.brentq(excess, 0.0, hi, xtol=1e-15 * hi, rtol=1e-15)
        x = self.center + w * d / (w + lam)
        return self._project_euclid(x)

    def project_jacobian(self, y):
        d = y - self.center
        nd = np.linalg.norm(d)
        if nd <= self.radius:
            return np.eye(self.dim)
        u = d / nd
        return (self.radius / nd) * (np.eye(self.dim) - np.outer(u, u))

    def support(self, s):
        ns = np.linalg.norm(s)
        x = self.center + (self.radius / ns) * s if ns > 0 else self.center.copy()
        return float(np.dot(s, self.center) + self.radius * ns), x

    def radius_from(self, x0, metric):
        off = metric.norm(self.center - x0)
        return off + np.sqrt(metric.max_eigenvalue()) * self.radius

    def sample(self, rng, k):
        g = rng.standard_normal((k, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(k, 1)) ** (1.0 / self.dim)
        return self.center + r * g


class Simplex(SimpleSet):
    """Standard simplex ``{x >= 0 : sum x = 1}``."""

    def __repr__(self):
        return f"Simplex({self.dim})"

    def contains(self, x, tol=1e-9):
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol * self.dim)

    def _project_euclid(self, y):
        return project_simplex(y)

    def _project_diag(self, y, w):
        return project_simplex(y, w)

    def project_jacobian(self, y):
        x = project_simplex(y)
        S = (x > 0).astype(float)
        k = S.sum()
        return np.diag(S) - np.outer(S, S) / k

    def support(self, s):
        i = int(np.argmax(s))
        x = np.zeros(self.dim)
        x[i] = 1.0
        return float(s[i]), x

    def vertices(self):
        return np.eye(self.dim)

    def radius_from(self, x0, metric):
        return max(metric.norm(e - x0) for e in self.vertices())

    def sample(self, rng, k):
        pts = rng.dirichlet(np.ones(self.dim), size=k)
        # Mix in vertices and faces so boundary behavior is exercised.
        n_vert = k // 10
        if n_vert:
            pts[:n_vert] = np.eye(self.dim)[rng.integers(self.dim, size=n_vert)]
        return pts


class ProductSet(SimpleSet):
    """Cartesian product of simple sets, stacked in order."""

    def __init__(self, blocks):
        self.blocks = list(blocks)
        sizes = [b.dim for b in self.blocks]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        super().__init__(int(self.offsets[-1]))
        self.bounded = all(b.bounded for b in self.blocks)

    def __repr__(self):
        return f"ProductSet({self.blocks!r})"

    def _slices(self):
        for k, b in enumerate(self.blocks):
            yield b, slice(self.offsets[k], self.offsets[k + 1])

    def contains(self, x, tol=1e-9):
        return all(b.contains(x[sl], tol) for b, sl in self._slices())

    def _project_euclid(self, y):
        out = np.empty(self.dim)
        for b, sl in self._slices():
            out[sl] = b._project_euclid(y[sl])
        return out

    def _project_diag(self, y, w):
        out = np.empty(self.dim)
        for b, sl in self._slices():
            out[sl] = b._project_diag(y[sl], w[sl])
        return out

    def project_jacobian(self, y):
        out = np.zeros((self.dim, self.dim))
        for b, sl in self._slices():
            out[sl, sl] = b.project_jacobian(y[sl])
        return out

    def support(self, s):
        total = 0.0
        x = np.empty(self.dim)
        for b, sl in self._slices():
            val, xb = b.support(s[sl])
            if not np.isfinite(val):
                return np.inf, None
            total += val
            x[sl] = xb
        return total, x

    def radius_from(self, x0, metric):
        from .metric import Metric

        if metric.kind == "dense":
            ident = Metric(dim=self.dim)
            return np.sqrt(metric.max_eigenvalue()) * self.radius_from(x0, ident)
        sq = 0.0
        for b, sl in self._slices():
            sub = Metric(metric.diagonal[sl]) if metric.kind == "diagonal" else Metric(dim=b.dim)
            sq += b.radius_from(x0[sl], sub) ** 2
        return float(np.sqrt(sq))

    def sample(self, rng, k):
        return np.hstack([b.sample(rng, k) for b in self.blocks])


class CompositeTerm:
    """Base class for the convex term ``psi``."""

    kind = "general"
    is_indicator = False

    def __init__(self, domain):
        self.domain = domain
        self.dim = domain.dim

    def contains(self, x, tol=1e-9):
        return self.domain.contains(np.asarray(x, dtype=float), tol)

    def project(self, y, metric=None):
        return self.domain.project(np.asarray(y, dtype=float), metric)

    def domain_radius(self, x0, metric):
        return self.domain.radius_from(np.asarray(x0, dtype=float), metric)

    @property
    def bounded(self):
        return self.domain.bounded

    def sample(self, rng, k):
        return self.domain.sample(rng, k)


class Indicator(CompositeTerm):
    """Indicator function of a simple set."""

    kind = "indicator"
    is_indicator = True

    def __repr__(self):
        return f"Indicator({self.domain!r})"

    def __call__(self, x):
        return 0.0 if self.contains(x) else np.inf

    def prox(self, y, step, metric=None):
        return self.project(y, metric)

    def prox_jacobian(self, y, step):
        return self.domain.project_jacobian(y)

    def support(self, s, weight=1.0):
        return self.domain.support(np.asarray(s, dtype=float))


class ZeroTerm(Indicator):
    """``psi = 0`` on the whole space."""

    kind = "zero"

    def __init__(self, dim):
        super().__init__(WholeSpace(dim))

    def __repr__(self):
        return f"ZeroTerm({self.dim})"


class L1Norm(CompositeTerm):
    """``psi(x) = lam * ||x||_1`` on the whole space."""

    kind = "l1"

    def __init__(self, dim, lam):
        super().__init__(WholeSpace(dim))
        self.lam = float(check_scalar(lam, "lam", min_val=0.0))

    def __repr__(self):
        return f"L1Norm(dim={self.dim}, lam={self.lam})"

    def __call__(self, x):
        return self.lam * float(np.abs(x).sum())

    def prox(self, y, step, metric=None):
        y = np.asarray(y, dtype=float)
        if metric is None or metric.kind != "dense":
            w = np.ones_like(y) if metric is None else metric.diagonal
            thr = step * self.lam / w
            return np.sign(y) * np.maximum(np.abs(y) - thr, 0.0)
        B = metric.matrix
        x, _, _ = fista(lambda x: B @ (x - y),
                        lambda z, s: np.sign(z) * np.maximum(np.abs(z) - s * step * self.lam, 0.0),
                        metric.max_eigenvalue(), y, strong_convexity=metric.min_eigenvalue(),
                        tol=1e-13 * (1 + np.linalg.norm(y)), max_iter=20000)
        return x

    def prox_jacobian(self, y, step):
        return np.diag((np.abs(y) > step * self.lam).astype(float))

    def support(self, s, weight=1.0):
        if np.abs(s).max() > weight * self.lam * (1 + 1e-12):
            return np.inf, None
        return 0.0, np.zeros(self.dim)
