import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from conftest import affine_instance, interval
from rgvi import steps
from rgvi.composite import Indicator, ProductSet, Simplex, ZeroTerm
from rgvi.exceptions import ConfigError, CutViolationError, StationaryPointReached
from rgvi.metric import Metric
from rgvi.problems import make_chained_cubic, make_instance
from rgvi.steps import (StepConfig, alpha_uniform, default_regularization, essential_step, gamma_min,
                        gamma_vi, min_tensor_step, step_quality_slack, tech_lemma_value,
                        universal_stepsize, vi_step_order0, vi_step_order1)


def test_universal_stepsize_unit():
    a, b = universal_stepsize(np.array([1.0, 0.0]), np.zeros(2), np.array([1.0, 0.0]), Metric(dim=2))
    assert (a, b) == (1.0, 0.5)


def test_universal_stepsize_orthogonal_cut():
    with pytest.raises(CutViolationError):
        universal_stepsize(np.array([0.0, 1.0]), np.zeros(2), np.array([1.0, 0.0]), Metric(dim=2))


def test_universal_stepsize_zero_gradient():
    with pytest.raises(StationaryPointReached):
        universal_stepsize(np.ones(2), np.zeros(2), np.zeros(2), Metric(dim=2))


def test_universal_stepsize_diagonal_metric(rng):
    metric = Metric(np.arange(1.0, 6.0))
    B = np.diag(np.arange(1.0, 6.0))
    for _ in range(20):
        v, T, g = rng.standard_normal((3, 5))
        if g @ (v - T) <= 0:
            g = -g
        a, b = universal_stepsize(v, T, g, metric)
        ref = g @ (v - T) / (g @ np.linalg.solve(B, g))
        assert a == pytest.approx(ref, rel=1e-12)
        assert b == pytest.approx(0.5 * ref ** 2 * (g @ np.linalg.solve(B, g)), rel=1e-12)


# ------------------------------------------------------------------ tensor steps

def test_min_step_p1_solves_quadratic():
    inst = affine_instance([[1.0]], [0.0], kind="min", x0=[1.0], constants={"L1": 1.0})
    rec = min_tensor_step(np.array([1.0]), inst, StepConfig(order=1, M=1.0))
    assert rec.stationary
    np.testing.assert_allclose(rec.T, [0.0])
    assert rec.a == 0.0


def test_min_step_p1_interval_normal_cone():
    inst = affine_instance([[1.0]], [0.0], kind="min", psi=interval(1, 2), x0=[2.0],
                           constants={"L1": 1.0})
    rec = min_tensor_step(np.array([2.0]), inst, StepConfig(order=1, M=1.0))
    np.testing.assert_allclose(rec.T, [1.0])
    # V_psi(T) = f'(1) - (f'(2) + M (1 - 2)) = 0
    assert rec.reduced_gradient[0] == pytest.approx(0.0, abs=1e-15)
    # lower bound <V_psi(T), T - x> >= <V(T), T - x> + psi(T) - psi(x) on [1, 2]
    for x in np.linspace(1, 2, 11):
        assert rec.reduced_gradient[0] * (1 - x) >= rec.V_T[0] * (1 - x) - 1e-15


def test_min_step_p2_chained_cubic_quality():
    inst = make_chained_cubic(2)
    cfg = StepConfig(order=2, M=2 * inst.constants["L2"])
    rec = min_tensor_step(np.ones(2), inst, cfg)
    gamma = gamma_min(2, cfg.M, inst.constants["L2"])
    assert rec.cut >= gamma * rec.g_norm ** 1.5 - rec.inner_residual
    assert step_quality_slack(rec, inst, cfg) >= -1e-12


def test_vi_step_p0_whole_space_reduced_gradient_is_operator():
    rng = np.random.default_rng(3)
    inst = make_instance("strongly_monotone_affine", n=6, set="whole")
    v = rng.standard_normal(6)
    rec = vi_step_order0(v, inst)
    np.testing.assert_allclose(rec.reduced_gradient, rec.V_T, atol=1e-13)


def test_vi_step_p0_fixed_point():
    inst = make_instance("strongly_monotone_affine", n=6, set="box")
    rec = vi_step_order0(inst.x_star.copy(), inst)
    assert rec.stationary
    np.testing.assert_allclose(rec.T, inst.x_star, atol=1e-15)


def test_vi_step_p0_matching_pennies_projection_formula():
    inst = make_instance("matching_pennies")
    C = inst.operator.affine[0]
    M = float(np.linalg.norm(C, 2))
    v = np.array([1.0, 0.0, 0.0, 1.0])
    rec = vi_step_order0(v, inst, M)
    # direct formula: two simplex projections of v - C v / M
    y = v - C @ v / M
    x_plus = np.concatenate([np.clip(y[:2] - (y[:2].sum() - 1) / 2, 0, None),
                             np.clip(y[2:] - (y[2:].sum() - 1) / 2, 0, None)])
    x_plus[:2] /= x_plus[:2].sum()
    x_plus[2:] /= x_plus[2:].sum()
    np.testing.assert_allclose(rec.T, x_plus, atol=1e-15)
    g = C @ x_plus - C @ v - M * (x_plus - v)
    np.testing.assert_allclose(rec.reduced_gradient, g, atol=1e-15)
    assert step_quality_slack(rec, inst, StepConfig(order=0, M=M)) >= 0


def test_vi_step_p1_affine_quality(rng):
    inst = make_instance("strongly_monotone_affine", n=10, set="ball", seed=4)
    cfg = StepConfig(order=1)
    for v in inst.psi.sample(rng, 50):
        rec = vi_step_order1(v, inst, cfg)
        if not rec.stationary:
            assert step_quality_slack(rec, inst, cfg) >= -(rec.inner_residual + 1e-6)


@pytest.mark.parametrize("name,params,order", [
    ("bilinear_game", {"seed": 1}, 0), ("bilinear_game", {"seed": 1}, 1),
    ("perturbed_bilinear_game", {"seed": 1}, 1), ("skew_rotation", {}, 1),
    ("composite_quadratic", {"psi_kind": "l1"}, 2), ("composite_quadratic", {"psi_kind": "simplex"}, 1),
])
def test_step_quality_on_random_centers(name, params, order):
    inst = make_instance(name, **params)
    rng = np.random.default_rng(7)
    cfg = StepConfig(order=order)
    for v in inst.psi.sample(rng, 60):
        rec = essential_step(v, inst, cfg)
        if not rec.stationary:
            assert rec.cut > 0
            assert step_quality_slack(rec, inst, cfg) >= -(rec.inner_residual + 1e-6)


@pytest.mark.parametrize("name,params,order", [
    ("bilinear_game", {"seed": 2}, 1), ("composite_quadratic", {"psi_kind": "box"}, 1),
    ("composite_quadratic", {"psi_kind": "l1"}, 2), ("strongly_monotone_affine", {"set": "ball"}, 0),
])
def test_reduced_gradient_monotonicity_transfer(name, params, order):
    inst = make_instance(name, **params)
    rng = np.random.default_rng(11)
    cfg = StepConfig(order=order)
    pts = inst.psi.sample(rng, 40)
    for v1, v2 in zip(pts[:20], pts[20:]):
        r1, r2 = essential_step(v1, inst, cfg), essential_step(v2, inst, cfg)
        d = r1.T - r2.T
        lhs = (r1.reduced_gradient - r2.reduced_gradient) @ d
        mid = (r1.V_T - r2.V_T) @ d
        assert lhs >= mid - 1e-8
        assert mid >= -1e-8


# ------------------------------------------------------------------ constants

def grid_oracle(sigma, gamma, delta):
    def f(lg):
        g = math.exp(lg)
        return 0.5 * gamma * g ** (2 / sigma) + g ** ((1 - sigma) / sigma) * delta

    grid = np.linspace(-50, 50, 20001)
    vals = [f(lg) for lg in grid]
    j = int(np.argmin(vals))
    r = optimize.minimize_scalar(f, bounds=(grid[max(j - 1, 0)], grid[min(j + 1, 20000)]),
                                 method="bounded", options={"xatol": 1e-12})
    return min(r.fun, vals[j])


def test_tech_lemma_examples():
    assert tech_lemma_value(1, 3.0, 7.0) == 7.0
    assert tech_lemma_value(2, 1.0, 1.0) == pytest.approx(1.5)
    g = np.linspace(1e-6, 100, 200001)
    assert np.min(0.5 * g + 1 / np.sqrt(g)) == pytest.approx(1.5, rel=1e-6)
    assert tech_lemma_value(3, 2.0, 0.0) == 0.0


@given(st.floats(1.0, 5.0), st.floats(1e-2, 1e2), st.floats(1e-2, 1e2))
@settings(max_examples=80, deadline=None)
def test_tech_lemma_matches_grid(sigma, gamma, delta):
    assert tech_lemma_value(sigma, gamma, delta) == pytest.approx(grid_oracle(sigma, gamma, delta),
                                                                   rel=1e-6)


def test_gamma_constants():
    assert gamma_min(1, 3.0, 1.0) == pytest.approx(0.25)
    # p = 2 at M = 2L: (2/M) sqrt(2/3) ((M^2 - L^2)/3)^(1/4)
    L, M = 1.5, 3.0
    assert gamma_min(2, M, L) == pytest.approx(2 / M * math.sqrt(2 / 3) * ((M * M - L * L) / 3) ** 0.25)
    # p = 0: (M - c)/(M + c)^2 with c = M_hat
    assert gamma_vi(0, 3.0, 1.0) == pytest.approx(2 / 16)
    # p = 1: c = M_hat / 2
    assert gamma_vi(1, 2.0, 2.0) == pytest.approx(1.0 * 3.0 ** (-1.5))


def test_alpha_limit_at_zero_order():
    g, s = 0.3, 0.2
    general = [(p + 2) * g * (g / p) ** (p / (p + 2)) * s ** (2 / (p + 2)) for p in (1e-6, 1e-8)]
    assert alpha_uniform(0, g, s) == pytest.approx(2 * g * s)
    assert general[-1] == pytest.approx(2 * g * s, rel=1e-6)


def test_default_regularization_and_checks():
    quad = make_instance("composite_quadratic", psi_kind="box")
    assert default_regularization(quad, 1) == quad.constants["L1"]
    assert default_regularization(quad, 2) == 1.0  # L2 = 0 falls back to 1
    mp = make_instance("matching_pennies")
    assert default_regularization(mp, 0) == pytest.approx(3 * mp.constants["M1"])
    with pytest.raises(ConfigError):
        min_tensor_step(quad.x0, quad, StepConfig(order=1, M=0.5 * quad.constants["L1"]))
    with pytest.raises(ConfigError):
        vi_step_order0(mp.x0, mp, 0.5 * mp.constants["M1"])
    with pytest.raises(ConfigError):
        StepConfig(order=3)


def test_step_quality_slack_follows_patched_constant(monkeypatch):
    inst = make_instance("bilinear_game", seed=0)
    cfg = StepConfig(order=1)
    rec = essential_step(inst.x0, inst, cfg)
    base = step_quality_slack(rec, inst, cfg)
    monkeypatch.setattr(steps, "gamma_vi", lambda p, M, Mh: 1e6)
    assert step_quality_slack(rec, inst, cfg) < base
