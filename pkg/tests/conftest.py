import numpy as np
import pytest

from rgvi.composite import Box, Indicator, ZeroTerm
from rgvi.metric import Metric
from rgvi.problems import Operator, ProblemInstance


def affine_instance(C, c, psi=None, kind="vi", x0=None, x_star=None, constants=None, R0=None,
                    f_star=None, D=None):
    """Small hand-made instance with ``V(x) = C x + c``."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n = C.shape[0]
    psi = psi or ZeroTerm(n)
    objective = None
    if kind == "min":
        def objective(x):
            return 0.5 * float(x @ C @ x) + float(c @ x)
    op = Operator(n, lambda x: C @ x + c, affine=(C, c), objective=objective)
    x0 = np.zeros(n) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    norm = float(np.linalg.norm(C, 2))
    consts = {"M1": norm, "M2": 0.0, "L1": norm, "L2": 0.0}
    consts.update(constants or {})
    return ProblemInstance(name="custom", kind=kind, operator=op, psi=psi, metric=Metric(dim=n),
                           x0=x0, x_star=None if x_star is None else np.atleast_1d(x_star),
                           f_star=f_star, constants=consts, R0=R0, D=D,
                           merit_mode="inner_solve" if psi.bounded else "sample_lower_bound")


def interval(lo, hi):
    return Indicator(Box(np.array([float(lo)]), np.array([float(hi)])))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
