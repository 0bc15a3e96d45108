import math

import numpy as np
import pytest
from scipy import optimize

from conftest import affine_instance, interval
from rgvi.certify import (CertificateAccumulator, ball_constrained_max, evaluate_merit, merit,
                          min_function_bound, min_function_bound_optimal, min_gradient_bound,
                          switching_gradient_bound, vi_certificate_bound, vi_certificate_bound_optimal,
                          vi_gradient_bound, window_merit_bound, window_merit_rate, linear_rate_bound)
from rgvi.composite import Box, Indicator, L1Norm, ZeroTerm
from rgvi.exceptions import ConfigError
from rgvi.methods import MethodConfig, run_primal
from rgvi.metric import Metric
from rgvi.problems import make_instance


def test_merit_zero_at_equilibrium():
    inst = make_instance("matching_pennies")
    assert merit(inst.x_star, inst) == pytest.approx(0.0, abs=1e-15)
    game = make_instance("bilinear_game", seed=3)
    assert merit(game.x_star, game) == pytest.approx(0.0, abs=1e-9)


def best_response_gap(A, x, y):
    return (A @ x).max() - (y @ A).min()


def test_matching_pennies_merit_example():
    inst = make_instance("matching_pennies")
    z = np.array([1.0, 0.0, 0.5, 0.5])
    A = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert merit(z, inst) == pytest.approx(best_response_gap(A, z[:2], z[2:])) == 1.0


def test_game_merit_is_best_response_gap(rng):
    inst = make_instance("bilinear_game", seed=1)
    A = inst.operator.affine[0][10:, :10] * -1
    for z in inst.psi.sample(rng, 20):
        assert merit(z, inst) == pytest.approx(best_response_gap(A, z[:10], z[10:]), abs=1e-12)


@pytest.mark.parametrize("kind", ["box", "ball", "simplex"])
def test_merit_below_function_gap(kind, rng):
    inst = make_instance("composite_quadratic", psi_kind=kind, n=5)
    for z in inst.psi.sample(rng, 10):
        mu = merit(z, inst)
        assert -1e-10 <= mu <= inst.F(z) - inst.f_star + 1e-9


def test_inner_solve_agrees_with_closed_form(rng):
    inst = make_instance("bilinear_game", seed=2)
    for z in inst.psi.sample(rng, 5):
        exact = evaluate_merit(z, inst, "closed_form").value
        assert evaluate_merit(z, inst, "inner_solve").value == pytest.approx(exact, abs=1e-9)


def test_sampled_merit_is_lower_bound(rng):
    inst = make_instance("strongly_monotone_affine", n=6, set="box")
    for z in inst.psi.sample(rng, 5):
        lb = evaluate_merit(z, inst, "sample_lower_bound")
        assert not lb.exact
        assert lb.value <= evaluate_merit(z, inst, "inner_solve").value + 1e-10


def test_merit_mode_errors():
    inst = make_instance("strongly_monotone_affine", n=4, set="box")
    with pytest.raises(ConfigError):
        evaluate_merit(inst.x0, inst, "closed_form")
    with pytest.raises(ConfigError):
        evaluate_merit(inst.x0, inst, "bogus")


@pytest.mark.parametrize("psi,weight", [
    (Indicator(Box(-np.ones(3), np.ones(3))), 0.0),
    (ZeroTerm(3), 0.0),
    (L1Norm(3, 1.0), 0.7),
], ids=["box", "zero", "l1"])
def test_ball_constrained_max_vs_slsqp(psi, weight, rng):
    metric = Metric(dim=3)
    for _ in range(5):
        u = 3 * rng.standard_normal(3)
        x0 = psi.project(0.3 * rng.standard_normal(3))
        R0 = 0.8
        val, x = ball_constrained_max(u, weight, psi, metric, x0, R0)
        cons = [{"type": "ineq", "fun": lambda z: R0 ** 2 - (z - x0) @ (z - x0)}]
        bounds = [(-1, 1)] * 3 if psi.is_indicator else None
        obj = lambda z: -(u @ z - weight * np.abs(z).sum()) if weight else -(u @ z)
        best = max((-optimize.minimize(obj, x0 + 0.1 * d, bounds=bounds, constraints=cons,
                                       method="SLSQP", options={"ftol": 1e-14}).fun)
                   for d in np.vstack([np.zeros(3), rng.standard_normal((4, 3))]))
        assert val == pytest.approx(best, abs=1e-6)
        assert np.linalg.norm(x - x0) <= R0 * (1 + 1e-9)


def test_one_dimensional_certificate_vs_grid():
    inst = affine_instance([[0.0]], [1.0], psi=interval(-1, 2), x0=[0.0], R0=10.0)
    acc = CertificateAccumulator("V", inst)
    pts = [(0.5, 1.0), (1.0, -0.5), (2.0, 0.25)]
    for a, x in pts:
        acc.add(a, np.array([x]), inst.operator(np.array([x])))
    grid = np.linspace(-1, 2, 30001)
    A = sum(a for a, _ in pts)
    ref = max(sum(a * (1.0 * (x - z)) for a, x in pts) / A for z in grid)
    assert acc.value() == pytest.approx(ref, abs=1e-12)


def test_certificate_zero_when_weighted_operator_vanishes():
    # sum a_i V(x_i) = 0 with equal points: certificate reduces to the constant term
    inst = affine_instance([[1.0]], [0.0], psi=interval(-1, 1), x0=[0.0], R0=1.0)
    acc = CertificateAccumulator("V", inst)
    acc.add(1.0, np.array([0.5]), np.array([0.5]))
    acc.add(1.0, np.array([-0.5]), np.array([-0.5]))
    assert acc.value() == pytest.approx(0.25)
    assert CertificateAccumulator("V", inst).value() == np.inf
    with pytest.raises(ConfigError):
        CertificateAccumulator("W", inst)


@pytest.mark.parametrize("name,params", [("bilinear_game", {"seed": 0}),
                                         ("matching_pennies", {}),
                                         ("strongly_monotone_affine", {"set": "box", "n": 6})])
def test_certificate_dominates_merit(name, params):
    inst = make_instance(name, **params)
    tr = run_primal(inst, MethodConfig(max_iter=60, log_every=5))
    cert, mer = tr.column("certificate"), tr.column("merit")
    ok = np.isfinite(cert) & np.isfinite(mer)
    assert ok.sum() >= 2
    assert np.all(cert[ok] >= mer[ok] - 1e-9)


def test_bound_formulas():
    assert vi_certificate_bound(4, 0, 0.5, 1.0) == pytest.approx(0.25)
    assert vi_certificate_bound(9, 1, 1.0, 2.0) == pytest.approx(27 ** -1 * 8 / 3)
    assert vi_certificate_bound_optimal(1, 0, 1.0, 1.0) == pytest.approx(2 * math.e)
    assert vi_gradient_bound(4, 1, 0.5, 1.0) == pytest.approx(1.0)
    assert min_function_bound(4, 1, 0.5, 2.0) == pytest.approx(4 / 2 * 2 / 4)
    assert min_function_bound(9, 2, 1.0, 1.0) == pytest.approx(1 / 3 * math.sqrt(1 / 3) / 27)
    assert min_function_bound_optimal(4, 1, 3.0, 1.0) == pytest.approx(3 / 4)
    assert min_gradient_bound(16, 2, 0.5, 1.0) == pytest.approx(4 / 16)
    assert linear_rate_bound(4, 1.0, 2.0) == pytest.approx(0.5)


def test_switching_bound_example():
    p, gamma, r, N = 2, 0.1, 1.5, 40
    t = N / 2
    gap = r ** 3 / 3 * gamma ** -2 * math.sqrt(1 / 3) * t ** -1.5
    assert switching_gradient_bound(N, p, gamma, r) == pytest.approx((gap / (t * gamma)) ** (2 / 3))
    # overall rate N^(-5/3) for p = 2
    ratio = switching_gradient_bound(80, p, gamma, r) / switching_gradient_bound(40, p, gamma, r)
    assert ratio == pytest.approx(2 ** (-5 / 3))


def test_window_bounds():
    L, D = 2.0, 1.5
    h = 1 / (L * np.sqrt(np.arange(200) + 1.0))
    m = 50
    w = h[m:2 * m]
    ref = (1 + L * L * np.sum(w ** 2)) / (2 * np.sum(w)) * D * D
    assert window_merit_bound(h, L, D, m) == pytest.approx(ref)
    # The closed-form rate drops the leading 1 of the numerator, so the window
    # bound exceeds it by (1 + ln 2) / (2 ln 2) asymptotically.
    m = 100_000
    h = 1 / (L * np.sqrt(np.arange(2 * m) + 1.0))
    ratio = window_merit_bound(h, L, D, m) / window_merit_rate(m, L, D)
    assert ratio == pytest.approx((1 + math.log(2)) / (2 * math.log(2)), rel=1e-2)
