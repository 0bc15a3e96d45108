import numpy as np
import pytest

from conftest import affine_instance
from rgvi import methods
from rgvi.certify import linear_rate_bound
from rgvi.exceptions import ConfigError, InfeasiblePointError, TheoremViolationError
from rgvi.methods import (MethodConfig, run, run_baseline_extragradient, run_baseline_gradient,
                          run_dual, run_primal, run_projecting, run_switching, run_uniform_monotone)
from rgvi.problems import make_instance, make_strongly_monotone_affine
from rgvi.steps import StepConfig


def test_identity_operator_one_step():
    inst = affine_instance([[1.0]], [0.0], x0=[1.0], x_star=[0.0], R0=1.0)
    tr = run_primal(inst, MethodConfig(step=StepConfig(order=0, M=1.0)))
    assert tr.stop_reason == "stationary"
    assert tr.n_iter == 0
    np.testing.assert_allclose(tr.x_final, [0.0])


def test_optimal_start_stops_immediately():
    inst = make_strongly_monotone_affine(n=5, set="whole")
    tr = run_primal(inst, MethodConfig(x0=inst.x_star))
    assert tr.n_iter == 0
    assert tr.stop_reason in ("stationary", "roundoff")


def test_infeasible_start():
    inst = make_instance("matching_pennies")
    with pytest.raises(InfeasiblePointError):
        run_primal(inst, MethodConfig(x0=[1.0, 1.0, 0.5, 0.5]))


def test_matching_pennies_prox_centers_stay_in_ball():
    inst = make_instance("matching_pennies")
    tr = run_primal(inst, MethodConfig(max_iter=200))
    d0 = np.linalg.norm(inst.x0 - inst.x_star)
    d = tr.column("dist_to_xstar")
    assert np.all(d <= d0 * (1 + 1e-12))
    assert tr.theorem_ok()
    assert np.all(np.diff(tr.column("A_t")) > 0)


@pytest.mark.parametrize("scheme,name,params,order", [
    ("primal", "bilinear_game", {"seed": 0}, 0),
    ("primal", "perturbed_bilinear_game", {"seed": 0}, 1),
    ("dual", "bilinear_game", {"seed": 1}, 1),
    ("projecting", "skew_rotation", {}, 1),
    ("primal", "composite_quadratic", {"psi_kind": "l1"}, 1),
    ("dual", "composite_quadratic", {"psi_kind": "simplex"}, 2),
    ("projecting", "chained_cubic", {"n": 3}, 2),
    ("uniform_monotone", "strongly_monotone_affine", {"n": 6, "mu": 0.3, "set": "box"}, 0),
])
def test_online_inequalities_hold(scheme, name, params, order):
    inst = make_instance(name, **params)
    tr = run(inst, MethodConfig(scheme=scheme, step=StepConfig(order=order), max_iter=150,
                                log_every=10))
    assert tr.theorem_ok()
    assert tr.summary["theorem_ok"]
    s = np.asarray(tr.step_slack)
    res = np.asarray(tr.inner_residual)
    assert np.all(s >= -(res + 1e-6))
    g = tr.column("g_star")
    assert np.all(np.diff(g) <= 0)


def test_dual_centers_for_zero_psi():
    inst = make_strongly_monotone_affine(n=4, set="whole", seed=2)
    tr = run_dual(inst, MethodConfig(max_iter=20))
    s = np.zeros(4)
    for t, (a, Vx) in enumerate(zip(tr.column("a_t"), tr.V_x), start=1):
        s += a * Vx
        np.testing.assert_allclose(tr.v[t], inst.x0 - s, atol=1e-12)


def test_projecting_equals_primal_without_constraints():
    inst = make_strongly_monotone_affine(n=5, set="whole", seed=1)
    cfg = MethodConfig(max_iter=30)
    a = run_primal(inst, cfg)
    b = run_projecting(inst, cfg)
    np.testing.assert_allclose(np.array(a.v), np.array(b.v), atol=1e-12)
    np.testing.assert_allclose(b.column("halfspace_residual"), 0.0, atol=1e-12)


def test_projecting_halfspace_is_active():
    inst = make_instance("bilinear_game", seed=4)
    tr = run_projecting(inst, MethodConfig(max_iter=100))
    assert np.all(np.abs(tr.column("halfspace_residual")) <= 1e-9)
    assert np.all(tr.column("multiplier") > 0)


def test_uniform_monotone_linear_rate():
    inst = make_instance("strongly_monotone_affine", n=8, mu=0.5, set="ball")
    tr = run_uniform_monotone(inst, MethodConfig(max_iter=100))
    alpha = tr.summary["alpha"]
    assert alpha > 0
    d0 = np.linalg.norm(inst.x0 - inst.x_star)
    d = tr.column("dist_to_xstar")
    assert np.all(d <= linear_rate_bound(tr.column("t"), alpha, d0) * (1 + 1e-8))


def test_uniform_monotone_tiny_alpha_matches_primal():
    inst = make_strongly_monotone_affine(n=5, mu=1e-30, set="box", seed=3)
    cfg = MethodConfig(max_iter=40)
    a = run_uniform_monotone(inst, cfg)
    b = run_primal(inst, cfg)
    np.testing.assert_allclose(np.array(a.v), np.array(b.v), atol=1e-14)


def test_uniform_monotone_requires_sigma():
    with pytest.raises(ConfigError):
        run_uniform_monotone(make_instance("matching_pennies"))
    inst = make_instance("strongly_monotone_affine", set="box")
    with pytest.raises(ConfigError):
        run_uniform_monotone(inst, MethodConfig(step=StepConfig(order=1)))


@pytest.mark.parametrize("name,params,order", [
    ("composite_quadratic", {"psi_kind": "box"}, 1),
    ("chained_cubic", {"n": 4}, 2),
])
def test_switching_stage_b_descent(name, params, order):
    inst = make_instance(name, **params)
    tr = run_switching(inst, MethodConfig(scheme="switching", step=StepConfig(order=order),
                                          max_iter=60))
    F = tr.summary["F"]
    assert np.all(np.diff(F) <= 1e-12)
    assert np.all(tr.summary["descent_slack"] >= -1e-10)
    assert tr.summary["G_star"] == pytest.approx(np.min(tr.summary["G"]))


def test_switching_rejects_vi():
    with pytest.raises(ConfigError):
        run_switching(make_instance("matching_pennies"))


def test_baselines_fixed_for_zero_operator():
    inst = affine_instance(np.zeros((2, 2)), np.zeros(2), psi=None,
                           x0=[0.3, -0.2], R0=1.0, D=2.0, constants={"M1": 1.0})
    g = run_baseline_gradient(inst, MethodConfig(max_iter=10))
    e = run_baseline_extragradient(inst, MethodConfig(max_iter=10))
    for tr in (g, e):
        np.testing.assert_array_equal(tr.x_final, [0.3, -0.2])


def test_extragradient_distance_decreases():
    inst = make_instance("strongly_monotone_affine", n=6, mu=0.2, set="box")
    tr = run_baseline_extragradient(inst, MethodConfig(max_iter=200))
    d = tr.column("dist_to_xstar")
    assert np.all(np.diff(d) <= 1e-15)
    assert d[-1] < 1e-3 * d[0]
    assert tr.summary["h"] == pytest.approx(1 / np.sqrt(2))


def test_skew_gradient_windows():
    inst = make_instance("skew_rotation")
    tr = run_baseline_gradient(inst, MethodConfig(max_iter=400, windows=(50, 100), log_every=50))
    d = tr.column("dist_to_xstar")
    assert np.all(np.diff(d) >= -1e-15)
    wins = tr.summary["windows"]
    assert [w["m"] for w in wins] == [50, 100]
    for w in wins:
        assert w["merit"] <= w["bound"]


def test_baseline_gradient_needs_bounded_domain():
    with pytest.raises(ConfigError):
        run_baseline_gradient(make_strongly_monotone_affine(set="whole"))


def test_violation_raises_and_is_recorded(monkeypatch):
    inst = make_instance("bilinear_game", seed=0)
    monkeypatch.setattr(methods, "THEOREM_RTOL", -1e6)
    with pytest.raises(TheoremViolationError) as e:
        run_projecting(inst, MethodConfig(max_iter=5))
    assert e.value.t == 1 and e.value.slack > e.value.budget
    tr = run_projecting(inst, MethodConfig(max_iter=5, check_theorems=False))
    assert tr.n_iter == 5
    assert not tr.theorem_ok()


def test_stopping_rules():
    inst = make_instance("bilinear_game", seed=0)
    tr = run_primal(inst, MethodConfig(max_iter=2000, cert_threshold=0.05))
    assert tr.stop_reason == "certificate"
    assert tr.column("certificate")[-1] <= 0.05
    tr = run_primal(inst, MethodConfig(max_iter=2000, tol=1e-2, merit="off"))
    assert tr.stop_reason in ("tolerance", "stationary", "roundoff")
    assert np.all(np.isnan(tr.column("merit")))


def test_minimization_merit_column_is_function_gap():
    inst = make_instance("composite_quadratic", psi_kind="box")
    tr = run_primal(inst, MethodConfig(step=StepConfig(order=1), max_iter=30))
    assert tr.column("merit")[-1] == pytest.approx(inst.F(tr.x_bar) - inst.f_star)
    assert np.all(tr.column("F_best_gap") >= -1e-12)


def test_method_config_validation():
    with pytest.raises(ConfigError):
        MethodConfig(scheme="newton")
    with pytest.raises(ConfigError):
        MethodConfig(max_iter=0)
    with pytest.raises(ConfigError):
        MethodConfig(merit="exact")
