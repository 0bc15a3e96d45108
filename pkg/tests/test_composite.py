import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from rgvi.composite import Ball, Box, Indicator, L1Norm, ProductSet, Simplex, WholeSpace, project_simplex
from rgvi.metric import Metric

vec4 = st.lists(st.floats(-5, 5, allow_nan=False), min_size=4, max_size=4).map(np.array)

SETS = [
    Box(-np.ones(4), np.array([1.0, 2.0, 0.5, 1.0])),
    Ball(np.array([0.5, 0.0, 0.0, -0.5]), 1.5),
    Simplex(4),
    ProductSet([Simplex(2), Simplex(2)]),
]


def simplex_oracle(y):
    # threshold bisection, independent of the sort-based routine
    tau = optimize.brentq(lambda s: np.maximum(y - s, 0).sum() - 1.0, y.min() - 1, y.max(), xtol=1e-15)
    x = np.maximum(y - tau, 0)
    return x / x.sum()


def qp_projection(y, dom, w):
    # generic weighted projection by SLSQP; slow, used as an oracle only
    n = len(y)
    cons = []
    bounds = None
    if isinstance(dom, Box):
        bounds = list(zip(dom.lower, dom.upper))
    elif isinstance(dom, Ball):
        cons.append({"type": "ineq", "fun": lambda x: dom.radius ** 2 - np.sum((x - dom.center) ** 2)})
    elif isinstance(dom, Simplex):
        bounds = [(0, None)] * n
        cons.append({"type": "eq", "fun": lambda x: x.sum() - 1})
    res = optimize.minimize(lambda x: 0.5 * np.sum(w * (x - y) ** 2), dom.project(y),
                            jac=lambda x: w * (x - y), bounds=bounds, constraints=cons,
                            method="SLSQP", options={"ftol": 1e-15, "maxiter": 1000})
    return res.x


@given(vec4)
def test_simplex_projection_matches_bisection(y):
    np.testing.assert_allclose(project_simplex(y), simplex_oracle(y), atol=1e-12)


@pytest.mark.parametrize("dom", SETS, ids=repr)
@given(y=vec4)
@settings(max_examples=40)
def test_projection_is_idempotent_and_obtuse(dom, y):
    p = dom.project(y)
    assert dom.contains(p, 1e-10)
    np.testing.assert_allclose(dom.project(p), p, atol=1e-12)
    rng = np.random.default_rng(0)
    for z in dom.sample(rng, 5):
        assert float(np.dot(y - p, z - p)) <= 1e-9 * (1 + np.abs(y).max())


@pytest.mark.parametrize("dom", SETS[:3], ids=repr)
def test_diagonal_metric_projection_matches_qp(dom, rng):
    w = rng.uniform(0.5, 4.0, 4)
    metric = Metric(w)
    for _ in range(5):
        y = 3 * rng.standard_normal(4)
        np.testing.assert_allclose(dom.project(y, metric), qp_projection(y, dom, w), atol=1e-6)


def test_dense_metric_projection_is_optimal(rng):
    G = rng.standard_normal((3, 3))
    B = G @ G.T + np.eye(3)
    metric = Metric(B)
    dom = Box(-np.ones(3), np.ones(3))
    y = np.array([3.0, -2.0, 0.3])
    p = dom.project(y, metric)
    # variational inequality of the B-projection
    for z in dom.sample(rng, 50):
        assert float((y - p) @ B @ (z - p)) <= 1e-8


@given(vec4)
def test_support_function_attained(s):
    for dom in SETS:
        val, x = dom.support(s)
        assert dom.contains(x, 1e-10)
        assert val == pytest.approx(float(np.dot(s, x)), abs=1e-12)
        rng = np.random.default_rng(1)
        assert all(np.dot(s, z) <= val + 1e-10 for z in dom.sample(rng, 20))


def test_whole_space_support_unbounded():
    val, x = WholeSpace(3).support(np.array([1.0, 0, 0]))
    assert val == np.inf and x is None
    assert WholeSpace(3).support(np.zeros(3))[0] == 0.0


@given(vec4, st.floats(0.0, 3.0))
def test_l1_prox_soft_threshold(y, step):
    psi = L1Norm(4, 0.7)
    expected = np.sign(y) * np.maximum(np.abs(y) - 0.7 * step, 0)
    np.testing.assert_allclose(psi.prox(y, step), expected, atol=1e-14)


def test_l1_prox_diagonal_metric():
    psi = L1Norm(2, 1.0)
    out = psi.prox(np.array([2.0, 2.0]), 1.0, Metric(np.array([1.0, 4.0])))
    # threshold scales with B^{-1}
    np.testing.assert_allclose(out, [1.0, 1.75])


def test_l1_support():
    psi = L1Norm(3, 0.5)
    assert psi.support(np.array([0.4, -0.5, 0.1]))[0] == 0.0
    assert psi.support(np.array([0.6, 0.0, 0.0]))[0] == np.inf
    assert psi.support(np.array([0.6, 0.0, 0.0]), weight=2.0)[0] == 0.0


def test_indicator_value_and_prox():
    psi = Indicator(Ball(np.zeros(2), 1.0))
    assert psi(np.array([0.5, 0.5])) == 0.0
    assert psi(np.array([2.0, 0.0])) == np.inf
    np.testing.assert_allclose(psi.prox(np.array([3.0, 4.0]), 10.0), [0.6, 0.8])


def test_product_radius_and_bounded():
    dom = ProductSet([Simplex(2), Simplex(3)])
    psi = Indicator(dom)
    assert psi.bounded
    x0 = np.array([1.0, 0.0, 0.0, 0.0, 1.0])
    # farthest point from a vertex in each simplex is another vertex: sqrt(2) per block
    assert psi.domain_radius(x0, Metric(dim=5)) == pytest.approx(2.0)
