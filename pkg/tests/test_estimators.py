import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from rgvi.estimators import ExtragradientVI, ProjectedGradientVI, ReducedGradientSolver
from rgvi.methods import MethodConfig, run_primal
from rgvi.problems import make_instance
from rgvi.steps import StepConfig


def test_params_and_clone():
    est = ReducedGradientSolver(scheme="dual", order=1, max_iter=30)
    params = est.get_params()
    assert params["scheme"] == "dual" and params["order"] == 1 and params["M"] is None
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(max_iter=5)
    assert est.max_iter == 30


def test_fit_matches_functional_core():
    inst = make_instance("bilinear_game", seed=0)
    est = ReducedGradientSolver(order=1, max_iter=40).fit(inst)
    tr = run_primal(inst, MethodConfig(step=StepConfig(order=1), max_iter=40))
    np.testing.assert_array_equal(est.predict(), tr.x_bar)
    assert est.n_iter_ == tr.n_iter
    assert est.score() == -tr.column("certificate")[-1]


def test_fit_by_name():
    est = ReducedGradientSolver(order=0, max_iter=10, problem_params={"seed": 2}).fit("bilinear_game")
    assert est.trace_.instance.params["seed"] == 2
    assert est.x_.shape == (20,)


@pytest.mark.parametrize("cls", [ReducedGradientSolver, ProjectedGradientVI, ExtragradientVI])
def test_not_fitted(cls):
    with pytest.raises(NotFittedError):
        cls().predict()


def test_baseline_estimators():
    pg = ProjectedGradientVI(max_iter=200, windows=(50,)).fit("skew_rotation")
    assert pg.summary_["windows"][0]["m"] == 50
    np.testing.assert_array_equal(pg.predict(), pg.x_)
    eg = ExtragradientVI(max_iter=50).fit("matching_pennies")
    assert eg.predict().shape == (4,)
    assert np.isfinite(eg.score())
