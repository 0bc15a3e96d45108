"""Operators, problem instances and the instance zoo.

Every factory returns an immutable :class:`ProblemInstance` whose reference
solution was produced by an algorithm independent from the solvers in
:mod:`rgvi.steps` and :mod:`rgvi.methods` (closed forms, linear programming,
active-set polishing of an accelerated gradient solution).
"""

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional

import numpy as np
from scipy import linalg, optimize

from ._inner import fista
from ._validation import check_matrix, check_random_state, check_scalar, check_vector
from .composite import Ball, Box, Indicator, L1Norm, ProductSet, Simplex, ZeroTerm
from .exceptions import ConfigError, InvalidInputError
from .metric import Metric

__all__ = [
    "Operator",
    "ProblemInstance",
    "make_matching_pennies",
    "make_bilinear_game",
    "make_perturbed_bilinear_game",
    "make_chained_cubic",
    "make_strongly_monotone_affine",
    "make_composite_quadratic",
    "make_skew_rotation",
    "make_instance",
    "list_problems",
    "check_instance",
    "chained_cubic_value",
]


class Operator:
    """Monotone operator ``V`` with derivatives up to ``order_cap``.

    Parameters
    ----------
    dim : int
    func : callable
        ``x -> V(x)``.
    jacobian : callable, optional
        ``x -> DV(x)`` as a dense matrix.
    second : callable, optional
        ``(x, h1, h2) -> D^2 V(x)[h1, h2]``.
    affine : tuple (C, c), optional
        Exact representation ``V(x) = C x + c``; then ``D^2 V = 0``.
    objective : callable, optional
        Potential ``f`` with ``V = grad f`` (minimization instances).
    """

    def __init__(self, dim, func, jacobian=None, second=None, affine=None, objective=None):
        self.dim = dim
        self._func = func
        self._jacobian = jacobian
        self._second = second
        self.affine = affine
        self.objective = objective
        self.order_cap = 0
        if affine is not None or jacobian is not None:
            self.order_cap = 1
        if affine is not None or second is not None:
            self.order_cap = 2

    def __call__(self, x):
        return np.asarray(self._func(x), dtype=float)

    def jacobian(self, x):
        if self.affine is not None:
            return self.affine[0]
        if self._jacobian is None:
            raise InvalidInputError("operator has no first derivative")
        return np.asarray(self._jacobian(x), dtype=float)

    def second(self, x, h1, h2):
        if self.affine is not None:
            return np.zeros(self.dim)
        if self._second is None:
            raise InvalidInputError("operator has no second derivative")
        return np.asarray(self._second(x, h1, h2), dtype=float)

    def derivative(self, x, order, *hs):
        """Directional derivative ``D^order V(x)[h_1, ..., h_order]``."""
        if order == 0:
            return self(x)
        if order == 1:
            return self.jacobian(x) @ hs[0]
        if order == 2:
            return self.second(x, hs[0], hs[1])
        raise InvalidInputError(f"derivative order {order} exceeds order cap {self.order_cap}")


@dataclass(frozen=True)
class ProblemInstance:
    """Operator, composite term and metric, plus reference data.

    ``kind`` is ``"vi"`` for variational inequalities and ``"min"`` for
    composite minimization (then ``operator.objective`` is ``f`` and
    ``f_star`` the optimal value of ``F = f + psi``).

    ``constants`` may hold ``M1``, ``M2`` (bounds on the first and second
    derivatives of ``V``), ``L1``, ``L2`` (Lipschitz constants of the first
    and second derivatives of ``f``) and ``sigma2`` (strong monotonicity).
    Keys listed in ``estimated`` were obtained by sampling rather than
    analytically.
    """

    name: str
    kind: str
    operator: Operator
    psi: object
    metric: Metric
    x0: np.ndarray
    x_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    constants: dict = field(default_factory=dict)
    estimated: frozenset = frozenset()
    R0: Optional[float] = None
    D: Optional[float] = None
    params: dict = field(default_factory=dict)
    merit_mode: str = "sample_lower_bound"

    @property
    def dim(self):
        return self.operator.dim

    def F(self, x):
        """Composite objective ``f(x) + psi(x)`` (minimization instances)."""
        return float(self.operator.objective(x)) + self.psi(x)

    def descriptor(self):
        """Zoo name plus parameters, enough to rebuild the instance."""
        return {"problem": self.name, **self.params}


def _freeze(*arrays):
    for a in arrays:
        if a is not None:
            a.setflags(write=False)


def check_instance(inst, n_samples=50, seed=0, tol=1e-8):
    """Sampling checks of monotonicity, derivatives and the reference solution.

    Raises ``InvalidInputError`` on failure; returns a dict of the worst values.
    """
    rng = check_random_state(seed)
    V = inst.operator
    pts = inst.psi.sample(rng, 2 * n_samples)
    worst_mono = np.inf
    worst_fd = 0.0
    for x, y in zip(pts[:n_samples], pts[n_samples:]):
        val = float(np.dot(V(x) - V(y), x - y))
        worst_mono = min(worst_mono, val)
        if V.order_cap >= 1:
            h = rng.standard_normal(inst.dim)
            eps = 1e-6 * (1 + np.linalg.norm(x))
            fd = (V(x + eps * h) - V(x - eps * h)) / (2 * eps)
            exact = V.jacobian(x) @ h
            worst_fd = max(worst_fd, np.linalg.norm(fd - exact) / (1e-8 + np.linalg.norm(exact)))
    if worst_mono < -1e-10 * (1 + np.abs(pts).max() ** 2):
        raise InvalidInputError(f"{inst.name}: operator not monotone ({worst_mono:.3e})")
    if worst_fd > 1e-5:
        raise InvalidInputError(f"{inst.name}: Jacobian disagrees with finite differences")
    worst_cvi = 0.0
    if inst.x_star is not None:
        xs = inst.x_star
        if not inst.psi.contains(xs, 1e-10):
            raise InvalidInputError(f"{inst.name}: reference solution infeasible")
        g = V(xs)
        scale = 1 + np.linalg.norm(g)
        for x in pts:
            val = float(np.dot(g, x - xs)) + inst.psi(x) - inst.psi(xs)
            worst_cvi = min(worst_cvi, val / (scale * (1 + np.linalg.norm(x - xs))))
        if worst_cvi < -tol:
            raise InvalidInputError(f"{inst.name}: reference solution violates the CVI ({worst_cvi:.3e})")
    return {"monotonicity": worst_mono, "jacobian_fd": worst_fd, "cvi_residual": worst_cvi}


# ---------------------------------------------------------------- matrix games

def _game_operator(A):
    m, n = A.shape
    C = np.zeros((n + m, n + m))
    C[:n, n:] = A.T
    C[n:, :n] = -A
    _freeze(C)
    return C


def _solve_game_lp(A):
    """Equilibrium of ``min_x max_y y^T A x`` over simplices by two LPs."""
    m, n = A.shape
    # x-player: min v s.t. A x <= v, sum x = 1, x >= 0.
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_ub = np.hstack([A, -np.ones((m, 1))])
    A_eq = np.concatenate([np.ones(n), [0.0]])[None, :]
    bounds = [(0, None)] * n + [(None, None)]
    rx = optimize.linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=[1.0],
                          bounds=bounds, method="highs")
    # y-player: max w s.t. A^T y >= w, sum y = 1, y >= 0.
    A_ub = np.hstack([-A.T, np.ones((n, 1))])
    A_eq = np.concatenate([np.ones(m), [0.0]])[None, :]
    bounds = [(0, None)] * m + [(None, None)]
    ry = optimize.linprog(-np.concatenate([np.zeros(m), [1.0]]), A_ub=A_ub, b_ub=np.zeros(n),
                          A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if rx.status != 0 or ry.status != 0:
        raise RuntimeError("game LP failed")
    x = np.clip(rx.x[:n], 0, None)
    y = np.clip(ry.x[:m], 0, None)
    return x / x.sum(), y / y.sum(), float(rx.x[-1])


def _game_reference_cache():
    try:
        text = resources.files("rgvi").joinpath("data/game_reference.json").read_text()
    except (FileNotFoundError, ModuleNotFoundError):
        return {}
    return json.loads(text)


def _random_game_matrix(m, n, seed):
    rng = check_random_state(seed)
    return rng.uniform(-1.0, 1.0, size=(m, n))


def _game_instance(name, A, x_star, y_star, params, metric=None):
    m, n = A.shape
    C = _game_operator(A)
    dim = n + m
    psi = Indicator(ProductSet([Simplex(n), Simplex(m)]))
    metric = metric or Metric(dim=dim)
    x0 = np.zeros(dim)
    x0[0] = 1.0
    x0[-1] = 1.0
    z_star = np.concatenate([x_star, y_star])
    op = Operator(dim, lambda z: C @ z, affine=(C, np.zeros(dim)))
    norm_C = float(np.linalg.norm(A, 2))
    R0 = psi.domain_radius(x0, metric)
    D = float(np.sqrt(2.0 * 2))  # each simplex has diameter sqrt(2)
    _freeze(x0, z_star)
    return ProblemInstance(
        name=name, kind="vi", operator=op, psi=psi, metric=metric, x0=x0, x_star=z_star,
        constants={"M1": norm_C, "M2": 0.0}, R0=R0, D=D, params=params,
        merit_mode="closed_form")


def make_matching_pennies():
    """Matching pennies: ``A = [[1, -1], [-1, 1]]``, equilibrium ``(1/2, 1/2)``."""
    A = np.array([[1.0, -1.0], [-1.0, 1.0]])
    half = np.array([0.5, 0.5])
    return _game_instance("matching_pennies", A, half, half.copy(), {})


def make_bilinear_game(m=10, n=10, seed=0, A=None):
    """Matrix game ``min_{x in simplex_n} max_{y in simplex_m} y^T A x`` as a VI.

    The variable is ``z = (x, y)`` and ``V(z) = (A^T y, -A x)``, an affine
    operator with skew-symmetric matrix.  With ``A=None`` the payoff matrix
    is uniform on ``[-1, 1]`` drawn from ``seed``.  The equilibrium comes
    from a linear program (cached for the shipped sizes).
    """
    if A is None:
        m = int(check_scalar(m, "m", min_val=1, integer=True))
        n = int(check_scalar(n, "n", min_val=1, integer=True))
        A = _random_game_matrix(m, n, seed)
        params = {"m": m, "n": n, "seed": seed}
    else:
        A = check_matrix(A, name="A")
        m, n = A.shape
        params = {"m": m, "n": n, "A": A.tolist()}
    key = f"{m}x{n}:{seed}"
    cached = _game_reference_cache().get(key) if "seed" in params else None
    if cached is not None and np.allclose(cached["A_row0"], A[0], atol=0, rtol=0):
        x_star = np.array(cached["x"])
        y_star = np.array(cached["y"])
    else:
        x_star, y_star, _ = _solve_game_lp(A)
    A = A.copy()
    _freeze(A)
    return _game_instance("bilinear_game", A, x_star, y_star, params)


def _natural_residual(V, psi, z):
    return np.linalg.norm(z - psi.project(z - V(z)))


def make_perturbed_bilinear_game(m=10, n=10, seed=0, eps=0.1):
    """Bilinear game plus the curved monotone term ``eps * z**2 / 2``.

    On the nonnegative orthant the extra term is the gradient of the convex
    function ``eps * sum z_i^3 / 6``, so ``V`` stays monotone on the product
    of simplices.  Its second derivative is ``D^2 V(z)[h, h] = eps * h**2``,
    whose norm is exactly ``eps`` (attained at coordinate directions).
    """
    eps = float(check_scalar(eps, "eps", min_val=0.0, include_min=False))
    base = make_bilinear_game(m, n, seed)
    C = base.operator.affine[0]
    dim = base.dim
    nx = n

    def V(z):
        return C @ z + 0.5 * eps * z * z

    def jac(z):
        return C + eps * np.diag(z)

    def second(z, h1, h2):
        return eps * h1 * h2

    op = Operator(dim, V, jacobian=jac, second=second)
    psi = base.psi
    z_star = _perturbed_game_reference(V, jac, psi, nx, dim)
    _freeze(z_star)
    M1 = float(np.linalg.norm(C, 2)) + eps
    return ProblemInstance(
        name="perturbed_bilinear_game", kind="vi", operator=op, psi=psi, metric=base.metric,
        x0=base.x0, x_star=z_star, constants={"M1": M1, "M2": eps}, R0=base.R0, D=base.D,
        params={"m": m, "n": n, "seed": seed, "eps": eps}, merit_mode="sample_lower_bound")


def _perturbed_game_reference(V, jac, psi, nx, dim):
    """Projected extragradient, then a Newton polish of the KKT system on the supports."""
    L = np.linalg.norm(jac(np.full(dim, 1.0)), 2) + 1.0
    h = 0.5 / L
    z = psi.project(np.full(dim, 1.0))
    for _ in range(200000):
        y = psi.project(z - h * V(z))
        z = psi.project(z - h * V(y))
        if _natural_residual(V, psi, z) < 1e-11:
            break
    blocks = [slice(0, nx), slice(nx, dim)]
    support = z > 1e-9
    idx = np.nonzero(support)[0]

    def kkt(u):
        zz = np.zeros(dim)
        zz[idx] = u[:len(idx)]
        nus = u[len(idx):]
        g = V(zz)
        res = []
        for k, sl in enumerate(blocks):
            sel = idx[(idx >= sl.start) & (idx < sl.stop)]
            res.append(g[sel] + nus[k])
            res.append([zz[sl].sum() - 1.0])
        return np.concatenate(res)

    g = V(z)
    nu0 = [-np.mean(g[idx[(idx >= sl.start) & (idx < sl.stop)]]) for sl in blocks]
    sol = optimize.root(kkt, np.concatenate([z[idx], nu0]), method="hybr", tol=1e-15)
    cand = np.zeros(dim)
    cand[idx] = sol.x[:len(idx)]
    if sol.success and psi.contains(cand, 1e-12):
        cand = psi.project(cand)
        if _natural_residual(V, psi, cand) <= _natural_residual(V, psi, z):
            z = cand
    return z


# ------------------------------------------------------------ chained cubic

def _bidiagonal(n):
    A = np.eye(n)
    A[np.arange(1, n), np.arange(n - 1)] = -2.0
    return A


def chained_cubic_value(x):
    """``|x_1|^3 + sum_i |x_{i+1} - 2 x_i|^3``."""
    x = np.asarray(x, dtype=float)
    u = np.empty_like(x)
    u[0] = x[0]
    u[1:] = x[1:] - 2.0 * x[:-1]
    return float(np.sum(np.abs(u) ** 3))


def make_chained_cubic(n=5, x0=None):
    """Unconstrained minimization of the chained cubic with minimizer ``0``.

    ``f(x) = sum_i |(A x)_i|^3`` with ``A`` lower bidiagonal (``1`` on the
    diagonal, ``-2`` below it).  The Hessian ``6 A^T diag|Ax| A`` is
    Lipschitz with constant at most ``6 ||A||^2 max_i ||A_i||`` where
    ``A_i`` are the rows; this bound is recorded as ``L2``.

    The gradient is only locally Lipschitz: on the ball of radius ``rho``
    around ``0`` the Hessian norm is at most ``L2 rho``.  ``L1`` is recorded
    for ``rho = 3 ||x0||``, a ball that contains every prox-center (their
    distance to ``0`` never exceeds ``||x0||``), every gradient step
    ``v - grad f(v) / L1`` taken from one, and the stage-b iterates of the
    switching scheme.
    """
    n = int(check_scalar(n, "n", min_val=1, integer=True))
    A = _bidiagonal(n)
    _freeze(A)

    def f(x):
        return chained_cubic_value(x)

    def grad(x):
        u = A @ x
        return A.T @ (3.0 * u * np.abs(u))

    def hess(x):
        u = A @ x
        return A.T @ (6.0 * np.abs(u)[:, None] * A)

    def second(x, h1, h2):
        u = A @ x
        return A.T @ (6.0 * np.sign(u) * (A @ h1) * (A @ h2))

    op = Operator(n, grad, jacobian=hess, second=second, objective=f)
    row_norm = np.sqrt(5.0) if n > 1 else 1.0
    L2 = 6.0 * np.linalg.norm(A, 2) ** 2 * row_norm
    x0 = np.ones(n) if x0 is None else check_vector(x0, n, name="x0")
    x_star = np.zeros(n)
    _freeze(x0, x_star)
    metric = Metric(dim=n)
    L1 = max(L2 * 3.0 * float(np.linalg.norm(x0)), np.finfo(float).tiny)
    return ProblemInstance(
        name="chained_cubic", kind="min", operator=op, psi=ZeroTerm(n), metric=metric, x0=x0,
        x_star=x_star, f_star=0.0, constants={"L1": L1, "L2": float(L2)},
        R0=float(np.linalg.norm(x0 - x_star)) * (1 + 1e-9), params={"n": n})


# ----------------------------------------------------- strongly monotone affine

def _make_set(kind, n):
    if kind == "whole":
        return ZeroTerm(n)
    if kind == "box":
        return Indicator(Box(-np.ones(n), np.ones(n)))
    if kind == "ball":
        return Indicator(Ball(np.zeros(n), 1.0))
    if kind == "simplex":
        return Indicator(Simplex(n))
    raise ConfigError(f"unknown set {kind!r}", field="set")


def make_strongly_monotone_affine(n=20, mu=0.1, L=1.0, seed=0, set="whole"):
    """``V(x) = (S + mu I)(x - x*)`` with a random skew ``S``.

    ``S`` is scaled so that ``||S + mu I|| = L``; since ``S`` is normal
    this means ``||S|| = sqrt(L^2 - mu^2)``.  ``x*`` is drawn in the
    interior of the chosen set (``whole``, ``box`` or ``ball``), so it also
    solves the constrained problem.  ``mu = 0`` yields a merely monotone
    (skew) operator, flagged by ``sigma2 = 0``.
    """
    n = int(check_scalar(n, "n", min_val=1, integer=True))
    mu = float(check_scalar(mu, "mu", min_val=0.0))
    L = float(check_scalar(L, "L", min_val=0.0, include_min=False))
    if mu > L:
        raise ConfigError(f"mu={mu} exceeds L={L}", field="mu")
    rng = check_random_state(seed)
    G = rng.standard_normal((n, n))
    S = G - G.T
    norm_S = np.linalg.norm(S, 2)
    target = np.sqrt(max(L * L - mu * mu, 0.0))
    S = S * (target / norm_S) if norm_S > 0 else S
    C = S + mu * np.eye(n)
    psi = _make_set(set, n)
    if set == "whole":
        x_star = 0.5 * rng.standard_normal(n)
        d = rng.standard_normal(n)
        x0 = x_star + d / np.linalg.norm(d)
    else:
        x_star = 0.5 * rng.uniform(-1, 1, n) / np.sqrt(n)
        x0 = psi.project(rng.uniform(-1, 1, n))
    c = -C @ x_star
    _freeze(C, c, x_star, x0)
    op = Operator(n, lambda x: C @ x + c, affine=(C, c))
    metric = Metric(dim=n)
    if psi.bounded:
        R0, D = psi.domain_radius(x0, metric), 2 * psi.domain_radius(np.zeros(n), metric)
    else:
        R0, D = float(np.linalg.norm(x0 - x_star)) * (1 + 1e-9), None
    return ProblemInstance(
        name="strongly_monotone_affine", kind="vi", operator=op, psi=psi, metric=metric, x0=x0,
        x_star=x_star, constants={"M1": float(np.linalg.norm(C, 2)), "M2": 0.0, "sigma2": mu},
        R0=R0, D=D, params={"n": n, "mu": mu, "L": L, "seed": seed, "set": set},
        merit_mode="inner_solve" if psi.bounded else "sample_lower_bound")


# ------------------------------------------------------- composite quadratic

def _quadratic_reference(Q, c, psi, kind):
    """Minimizer of ``1/2 x'Qx - c'x + psi(x)``: accelerated gradient, then active-set polish."""
    n = Q.shape[0]
    if kind == "zero":
        return linalg.solve(Q, c, assume_a="pos")
    if kind == "ball":
        ball = psi.domain
        x = linalg.solve(Q, c, assume_a="pos")
        if np.linalg.norm(x) <= ball.radius:
            return x
        w, U = linalg.eigh(Q)
        cu = U.T @ c

        def excess(lam):
            return np.linalg.norm(cu / (w + lam)) - ball.radius

        hi = np.linalg.norm(c) / ball.radius
        lam = optimize.brentq(excess, 0.0, hi, xtol=1e-16, rtol=1e-15)
        x = U @ (cu / (w + lam))
        return ball.radius * x / max(np.linalg.norm(x), ball.radius)
    L = linalg.eigvalsh(Q)[-1]
    mu = linalg.eigvalsh(Q)[0]
    x, _, _ = fista(lambda x: Q @ x - c, lambda y, s: psi.prox(y, s), L, psi.project(np.zeros(n)),
                    strong_convexity=mu, tol=1e-12, max_iter=200000)
    tol = 1e-8
    if kind == "box":
        lo, hi = psi.domain.lower, psi.domain.upper
        free = (x > lo + tol) & (x < hi - tol)
        xp = np.where(x <= lo + tol, lo, np.where(x >= hi - tol, hi, 0.0))
        if free.any():
            rhs = c[free] - Q[np.ix_(free, ~free)] @ xp[~free]
            xp[free] = linalg.solve(Q[np.ix_(free, free)], rhs, assume_a="pos")
    elif kind == "simplex":
        S = x > tol
        k = int(S.sum())
        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = Q[np.ix_(S, S)]
        K[:k, k] = 1.0
        K[k, :k] = 1.0
        sol = np.linalg.solve(K, np.concatenate([c[S], [1.0]]))
        xp = np.zeros(n)
        xp[S] = sol[:k]
    elif kind == "l1":
        S = np.abs(x) > tol
        xp = np.zeros(n)
        if S.any():
            s = np.sign(x[S])
            xp[S] = linalg.solve(Q[np.ix_(S, S)], c[S] - psi.lam * s, assume_a="pos")
    else:
        raise ConfigError(f"unknown psi kind {kind!r}", field="psi_kind")
    # Keep the polished point only when it is feasible and at least as good.
    def resid(z):
        return np.linalg.norm(z - psi.prox(z - (Q @ z - c) / L, 1.0 / L))

    if psi.contains(xp, 1e-13) and resid(xp) <= resid(x):
        return xp
    return x


def make_composite_quadratic(n=10, psi_kind="box", seed=0, Q=None, c=None, lam=0.1, metric=None):
    """Composite minimization of ``1/2 x'Qx - c'x + psi(x)``.

    ``psi_kind`` is one of ``zero``, ``box`` (``[-1/2, 1/2]^n``), ``ball``
    (unit ball), ``simplex`` or ``l1`` (``lam ||x||_1``).  With ``Q`` and
    ``c`` omitted, ``Q`` is a random SPD matrix with spectrum in ``[1, 10]``
    and ``c`` a Gaussian vector scaled so that constraints are active.
    """
    n = int(check_scalar(n, "n", min_val=1, integer=True))
    rng = check_random_state(seed)
    if Q is None:
        U, _ = np.linalg.qr(rng.standard_normal((n, n)))
        eig = np.linspace(1.0, 10.0, n) if n > 1 else np.array([1.0])
        Q = (U * eig) @ U.T
        Q = 0.5 * (Q + Q.T)
    else:
        Q = check_matrix(Q, (n, n), name="Q")
    c = 5.0 * rng.standard_normal(n) if c is None else check_vector(c, n, name="c")
    if psi_kind == "zero":
        psi = ZeroTerm(n)
    elif psi_kind == "box":
        psi = Indicator(Box(-0.5 * np.ones(n), 0.5 * np.ones(n)))
    elif psi_kind == "ball":
        psi = Indicator(Ball(np.zeros(n), 1.0))
    elif psi_kind == "simplex":
        psi = Indicator(Simplex(n))
    elif psi_kind == "l1":
        psi = L1Norm(n, lam)
    else:
        raise ConfigError(f"unknown psi kind {psi_kind!r}", field="psi_kind")
    x_star = _quadratic_reference(Q, c, psi, psi_kind)
    _freeze(Q, c, x_star)

    def f(x):
        return 0.5 * float(x @ Q @ x) - float(c @ x)

    op = Operator(n, lambda x: Q @ x - c, affine=(Q, -c), objective=f)
    metric = metric or Metric(dim=n)
    if psi_kind == "simplex":
        x0 = np.full(n, 1.0 / n)
    else:
        x0 = psi.project(np.ones(n))
    _freeze(x0)
    f_star = f(x_star) + psi(x_star)
    return ProblemInstance(
        name="composite_quadratic", kind="min", operator=op, psi=psi, metric=metric, x0=x0,
        x_star=x_star, f_star=f_star,
        constants={"L1": float(linalg.eigvalsh(Q)[-1]), "L2": 0.0, "M1": float(linalg.eigvalsh(Q)[-1]),
                   "M2": 0.0},
        R0=float(metric.norm(x0 - x_star)) * (1 + 1e-9),
        params={"n": n, "psi_kind": psi_kind, "seed": seed, "lam": lam},
        merit_mode="inner_solve" if psi.bounded else "sample_lower_bound")


# ---------------------------------------------------------------- skew rotation

def make_skew_rotation(omega=1.0, radius=1.0, x0=None):
    """``V(x) = C x`` with ``C = omega [[0, 1], [-1, 0]]`` on a centered Euclidean ball.

    The solution is ``x* = 0`` and ``<V(x), x> = 0``, so plain projected
    gradient steps never decrease ``||x||``.
    """
    omega = float(check_scalar(omega, "omega", min_val=0.0, include_min=False))
    radius = float(check_scalar(radius, "radius", min_val=0.0, include_min=False))
    C = omega * np.array([[0.0, 1.0], [-1.0, 0.0]])
    psi = Indicator(Ball(np.zeros(2), radius))
    x0 = np.array([0.5 * radius, 0.0]) if x0 is None else check_vector(x0, 2, name="x0")
    x_star = np.zeros(2)
    _freeze(C, x0, x_star)
    metric = Metric(dim=2)
    return ProblemInstance(
        name="skew_rotation", kind="vi", operator=Operator(2, lambda x: C @ x, affine=(C, np.zeros(2))),
        psi=psi, metric=metric, x0=x0, x_star=x_star, constants={"M1": omega, "M2": 0.0},
        R0=psi.domain_radius(x0, metric), D=2 * radius,
        params={"omega": omega, "radius": radius}, merit_mode="closed_form")


# --------------------------------------------------------------------- registry

_ZOO = {
    "matching_pennies": (make_matching_pennies, "2x2 matching pennies game on a product of simplices"),
    "bilinear_game": (make_bilinear_game, "random m x n matrix game (LP reference equilibrium)"),
    "perturbed_bilinear_game": (make_perturbed_bilinear_game,
                                "matrix game plus a curved monotone term with exact second-derivative bound"),
    "chained_cubic": (make_chained_cubic, "unconstrained chained cubic minimization, minimizer 0"),
    "strongly_monotone_affine": (make_strongly_monotone_affine,
                                 "shifted skew-plus-identity affine operator"),
    "composite_quadratic": (make_composite_quadratic,
                            "SPD quadratic plus zero/box/ball/simplex/l1 composite term"),
    "skew_rotation": (make_skew_rotation, "2-D rotation field on a Euclidean ball"),
}


def list_problems():
    """Return ``[(name, description), ...]`` for the zoo."""
    return [(name, desc) for name, (_, desc) in _ZOO.items()]


def make_instance(problem, **params):
    """Build a zoo instance by name."""
    if problem not in _ZOO:
        raise ConfigError(f"unknown problem {problem!r}; choose from {sorted(_ZOO)}", field="problem")
    factory = _ZOO[problem][0]
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {problem}: {exc}", field="params") from exc
